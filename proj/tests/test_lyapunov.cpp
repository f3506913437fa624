#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "isskit/lyapunov.hpp"

using namespace isskit;

namespace {

const double kPi = 3.14159265358979323846;

SystemSpec semilinear_cubic(int n = 120, double input_coeff = 1.0, double m = 1.0) {
  SystemSpec spec;
  spec.grid = Grid1D(kPi, n);
  spec.n_species = 1;
  spec.diffusion = {1.0};
  spec.bc = {BoundaryCondition::Dirichlet0};
  spec.linear_coupling = Eigen::MatrixXd::Zero(1, 1);
  spec.reactions.push_back({0, 0, {"cubic_odd", 1.0}, -1.0});
  if (input_coeff != 0.0) {
    spec.n_channels = 1;
    spec.inputs.push_back({0, 0, {"power_m", m}, input_coeff});
  }
  return spec;
}

// n_interior = 1, h = 1 scalar surrogate: diffusion block is -2, a +1
// coupling entry leaves the net linear rate at -1.
SystemSpec scalar_ode(bool quadratic_term, bool with_input) {
  SystemSpec spec;
  spec.grid = Grid1D(2.0, 1);
  spec.n_species = 1;
  spec.diffusion = {1.0};
  spec.bc = {BoundaryCondition::Dirichlet0};
  spec.linear_coupling = Eigen::MatrixXd::Constant(1, 1, 1.0);
  if (quadratic_term) spec.reactions.push_back({0, 0, {"square", 1.0}, 1.0});
  if (with_input) {
    spec.n_channels = 1;
    spec.inputs.push_back({0, 0, {"power_m", 1.0}, 1.0});
  }
  return spec;
}

Field scalar_state(const SystemSpec& spec, double x) {
  Field f(spec.grid, 1);
  f.values(0, 0) = x;
  return f;
}

}  // namespace

TEST_CASE("solve_lyapunov: closed forms") {
  SUBCASE("scalar") {
    Eigen::MatrixXd R(1, 1);
    R << -3.0;
    const auto sol = solve_lyapunov(R, Eigen::VectorXd::Ones(1));
    CHECK(sol.P(0, 0) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(sol.residual < 1e-12);
  }
  SUBCASE("diagonal decouples") {
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(2, 2);
    R(0, 0) = -1.0;
    R(1, 1) = -2.0;
    const auto sol = solve_lyapunov(R, Eigen::VectorXd::Ones(2));
    CHECK(sol.P(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(sol.P(1, 1) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(std::abs(sol.P(0, 1)) < 1e-14);
  }
  SUBCASE("weights rescale the form, not the operator") {
    Eigen::MatrixXd R(1, 1);
    R << -2.0;
    const auto sol = solve_lyapunov(R, Eigen::VectorXd::Constant(1, 0.3));
    CHECK(sol.P(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(sol.quad(0, 0) == doctest::Approx(0.075).epsilon(1e-12));
  }
  SUBCASE("refuses non-Hurwitz input") {
    Eigen::MatrixXd R(1, 1);
    R << 0.1;
    CHECK_THROWS_AS(solve_lyapunov(R, Eigen::VectorXd::Ones(1)), NotHurwitz);
  }
}

TEST_CASE("solve_lyapunov: residual and symmetry on random stable matrices") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + trial % 5;
    Eigen::MatrixXd R(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) R(i, j) = gauss(rng);
    }
    R -= (2.0 * n) * Eigen::MatrixXd::Identity(n, n);  // push spectrum left
    const auto sol = solve_lyapunov(R, Eigen::VectorXd::Ones(n));
    const Eigen::MatrixXd res =
        R.transpose() * sol.quad + sol.quad * R + Eigen::MatrixXd::Identity(n, n);
    CHECK(res.cwiseAbs().maxCoeff() < 1e-8);
    CHECK((sol.quad - sol.quad.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sol.quad);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("solve_lyapunov on the discretized heat operator vs the carried candidate") {
  // Candidate P0 = (1/(2c)) (d/pi)^2 I satisfies 2 <R s, P0 s> <= -||s||^2
  // on sampled fields.
  const double c = 1.3, d = 2.0;
  SystemSpec spec;
  spec.grid = Grid1D(d, 80);
  spec.n_species = 1;
  spec.diffusion = {c};
  spec.bc = {BoundaryCondition::Dirichlet0};
  spec.linear_coupling = Eigen::MatrixXd::Zero(1, 1);

  const Eigen::MatrixXd R = Eigen::MatrixXd(linear_generator(spec));
  const Eigen::VectorXd w = stacked_weights(spec);
  const double p0 = (1.0 / (2.0 * c)) * std::pow(d / kPi, 2);

  FieldSampler sampler(spec, {}, 555);
  for (int trial = 0; trial < 200; ++trial) {
    const Field f = sampler.sample();
    const Eigen::VectorXd s = f.stacked();
    const double lhs = 2.0 * (R * s).dot(w.asDiagonal() * (p0 * s));
    const double l2 = field_norm(spec, f, NormKind::L2, 0);
    CHECK(lhs <= -l2 * l2 * (1.0 - 5.0 * std::pow(spec.grid.h(), 2)));
  }

  // The solved operator also certifies: 2 <R s, P s>_W = -||s||^2 exactly.
  const auto sol = solve_lyapunov(R, w);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::VectorXd s = sampler.sample().stacked();
    const double lhs = 2.0 * (R * s).dot(w.asDiagonal() * (sol.P * s));
    const double rhs = -s.dot(w.asDiagonal() * s);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
  }
}

TEST_CASE("lie derivative: quadratic scalar oracle") {
  SystemSpec spec = scalar_ode(false, false);
  Eigen::MatrixXd Q(1, 1);
  Q << 1.0;
  const LyapunovFn V = LyapunovFn::quadratic(spec, Q);
  const Eigen::MatrixXd no_input(1, 0);
  // V = x^2, xdot = -x: dV/dt at x = 1 is -2.
  CHECK(lie_derivative(V, spec, scalar_state(spec, 1.0), no_input, LieMethod::Analytic) ==
        doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(lie_derivative(V, spec, scalar_state(spec, 1.0), no_input, LieMethod::FiniteDiff) ==
        doctest::Approx(-2.0).epsilon(1e-4));
}

TEST_CASE("lie derivative: energy functional at zero input is a negative square") {
  SystemSpec spec = semilinear_cubic(100, 0.0);
  const LyapunovFn V = LyapunovFn::energy({"cubic_odd", 1.0});
  FieldSampler sampler(spec, {}, 808);
  const Eigen::MatrixXd no_input(spec.grid.n_interior, 0);
  const auto L1 = laplacian_matrix(spec.grid, BoundaryCondition::Dirichlet0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Field s = sampler.sample();
    const double vdot = lie_derivative(V, spec, s, no_input, LieMethod::Analytic);
    CHECK(vdot <= 0.0);
    // Hand-computed -h || L s - s^3 ||^2.
    const Eigen::VectorXd g = (L1 * s.values.col(0)).array() - s.values.col(0).array().cube();
    CHECK(vdot == doctest::Approx(-spec.grid.h() * g.squaredNorm()).epsilon(1e-10));
  }
}

TEST_CASE("lie derivative: analytic agrees with finite differences") {
  SystemSpec spec = semilinear_cubic(80);
  const std::vector<LyapunovFn> vs = {
      LyapunovFn::energy({"cubic_odd", 1.0}),
      LyapunovFn::norm_power(NormKind::L2, 2.0, 1.0, 0),
      LyapunovFn::norm_power(NormKind::L4, 4.0, 0.7, 0),
      LyapunovFn::norm_power(NormKind::H10, 2.0, 2.0, 0),
  };
  FieldSamplerOptions so;
  so.amp_lo = 1e-2;
  so.amp_hi = 2.0;
  FieldSampler sampler(spec, so, 2718);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Stepper fd(spec, 1e-6);
  for (const auto& V : vs) {
    for (int trial = 0; trial < 125; ++trial) {
      const Field s = sampler.sample();
      const Eigen::MatrixXd u = sampler.sample_input(u01(sampler.rng()));
      const double a = lie_derivative(V, spec, s, u, LieMethod::Analytic);
      const double f = lie_derivative(V, spec, s, u, LieMethod::FiniteDiff);
      CHECK(std::abs(a - f) <= 1e-3 * (1.0 + std::abs(a)));
    }
  }
  const LyapunovFn sup = LyapunovFn::norm_power(NormKind::Sup, 1.0, 1.0, 0);
  const Field s = sampler.sample();
  const Eigen::MatrixXd u0 = Eigen::MatrixXd::Zero(spec.grid.n_interior, 1);
  CHECK_THROWS_AS(lie_derivative(sup, spec, s, u0, LieMethod::Analytic), MethodUnavailable);
}

TEST_CASE("check_implication: semilinear certificate passes at the stated rate") {
  SystemSpec spec = semilinear_cubic(120);
  const double a = 2.0, m = 1.0;
  LyapunovFn V = LyapunovFn::energy({"cubic_odd", 1.0})
                     .with_gain(KFun::power(a * std::pow(kPi, (1.0 - m) / 2.0), m))
                     .with_decay(KFun::power(1.0 - 1.0 / a, 2.0));
  ImplicationOptions opts;
  opts.n_samples = 300;
  opts.tol_rel = 0.05;
  opts.sampler.amp_lo = 1e-2;
  opts.sampler.amp_hi = 10.0;
  opts.seed = 99;
  opts.crosscheck_fd = true;
  const Certificate cert = check_implication(V, spec, opts);
  CHECK(cert.verdict);
  CHECK_FALSE(cert.vacuous);
  CHECK(cert.samples_applicable == 300);
  CHECK(cert.details["fd_agrees"].get<bool>());

  // Monotone strengthening: passing with positive alpha implies passing
  // with alpha = 0 on the same draw.
  LyapunovFn V0 = V.with_decay(KFun::power(1e-300, 2.0));
  const Certificate weaker = check_implication(V0, spec, opts);
  CHECK(weaker.verdict);
  CHECK(weaker.worst_margin >= cert.worst_margin);
}

TEST_CASE("check_implication: zero input with solved quadratic certificate") {
  SystemSpec spec;
  spec.grid = Grid1D(kPi, 60);
  spec.n_species = 2;
  spec.diffusion = {1.0, 0.5};
  spec.bc = {BoundaryCondition::Dirichlet0, BoundaryCondition::Dirichlet0};
  spec.linear_coupling = Eigen::MatrixXd::Zero(2, 2);
  spec.linear_coupling(0, 1) = 0.3;
  spec.linear_coupling(1, 0) = -0.2;

  const auto sol = solve_lyapunov(Eigen::MatrixXd(linear_generator(spec)), stacked_weights(spec));
  // dV/dt = -sum_i ||x_i||^2 exactly for the linear flow, which dominates
  // (sum_i ||x_i||)^2 / n; certify alpha = 0.45 r^2 in the product norm.
  LyapunovFn V = LyapunovFn::quadratic(spec, sol.quad).with_decay(KFun::power(0.45, 2.0));
  ImplicationOptions opts;
  opts.n_samples = 200;
  opts.seed = 7;
  const Certificate cert = check_implication(V, spec, opts);
  CHECK(cert.verdict);
  CHECK_FALSE(cert.vacuous);
}

TEST_CASE("check_implication: violated premise reports a vacuous certificate") {
  SystemSpec spec = semilinear_cubic(40);
  LyapunovFn V = LyapunovFn::energy({"cubic_odd", 1.0})
                     .with_gain(KFun::power(2.0, 1.0))
                     .with_decay(KFun::power(0.5, 2.0));
  ImplicationOptions opts;
  opts.n_samples = 50;
  opts.input_ratio_lo = 3.0;  // force ||u|| beyond chi^{-1}(||x||)
  opts.input_ratio_hi = 10.0;
  const Certificate cert = check_implication(V, spec, opts);
  CHECK(cert.vacuous);
  CHECK(cert.samples_applicable == 0);
  CHECK(cert.details["status"].get<std::string>() == "vacuous");
}

TEST_CASE("build_linearization: globally decaying linear system tops out at the ceiling") {
  SystemSpec spec;
  spec.grid = Grid1D(kPi, 40);
  spec.n_species = 1;
  spec.diffusion = {1.0};
  spec.bc = {BoundaryCondition::Dirichlet0};
  spec.linear_coupling = Eigen::MatrixXd::Zero(1, 1);
  LinearizationOptions opts;
  opts.samples_per_level = 60;
  const auto res = build_linearization_lyapunov(spec, opts);
  CHECK(res.radius == doctest::Approx(opts.ceiling));
  CHECK(res.certificate.verdict);
}

TEST_CASE("build_linearization: scalar ode with quadratic term certifies a radius below one") {
  SystemSpec spec = scalar_ode(true, false);
  LinearizationOptions opts;
  opts.ceiling = 2.0;
  opts.samples_per_level = 40;
  opts.seed = 12;
  const auto res = build_linearization_lyapunov(spec, opts);
  // Oracle: V = x^2 / 2 decays at rate theta only while x <= 1 - theta.
  CHECK(res.radius < 1.0);
  CHECK(res.radius >= 0.4);
  CHECK(res.certificate.verdict);
}

TEST_CASE("build_linearization: refuses an unstable linear part") {
  SystemSpec spec = scalar_ode(false, false);
  spec.linear_coupling(0, 0) = 3.0;  // net +1
  CHECK_THROWS_AS(build_linearization_lyapunov(spec, {}), NotHurwitz);
}

TEST_CASE("composite certificates") {
  // Nonlinear pair at c1 = c2 = 1, d = pi, b = 1.5, eps = 0.1.
  const double b = 1.5, eps1 = 0.1, eps2 = 0.1;
  GainMatrix gains(2);
  gains.set(0, 1, KFun::power(1.0 / std::pow(1.0 - eps1, 2), 1.0));
  gains.set(1, 0, KFun::power(1.0 / (std::pow(b, 4) * std::pow(1.0 - eps2, 4)), 1.0));
  OmegaPath path = build_omega_path(gains);
  Certificate pc = verify_omega_path(gains, path);
  REQUIRE(pc.verdict);

  SystemSpec spec;
  spec.grid = Grid1D(kPi, 50);
  spec.n_species = 2;
  spec.diffusion = {1.0, 1.0};
  spec.bc = {BoundaryCondition::Dirichlet0, BoundaryCondition::Dirichlet0};
  spec.linear_coupling = Eigen::MatrixXd::Zero(2, 2);
  spec.linear_coupling(1, 1) = -b;
  spec.reactions.push_back({0, 1, {"square", 1.0}, 1.0});
  spec.reactions.push_back({1, 0, {"sqrt_abs", 1.0}, 1.0});

  std::vector<LyapunovFn> subs = {LyapunovFn::norm_power(NormKind::L2, 2.0, 1.0, 0),
                                  LyapunovFn::norm_power(NormKind::L4, 4.0, 1.0, 1)};
  const LyapunovFn V = build_composite_lyapunov(subs, gains, path);

  SUBCASE("value at a vanishing first species reduces to the second component") {
    FieldSampler sampler(spec, {}, 37);
    for (int trial = 0; trial < 20; ++trial) {
      Field s = sampler.sample();
      s.values.col(0).setZero();
      const double v2 = subs[1].value(spec, s);
      CHECK(V.value(spec, s) == doctest::Approx(invert(path.sigmas[1])(v2)).epsilon(1e-12));
    }
  }

  SUBCASE("argmax is invariant under a common linear reparametrization of the path") {
    OmegaPath scaled = path;
    for (auto& sig : scaled.sigmas) sig = compose(sig, KFun::power(3.7, 1.0));
    Certificate sc = verify_omega_path(gains, scaled);
    REQUIRE(sc.verdict);
    const LyapunovFn Vs = build_composite_lyapunov(subs, gains, scaled);
    FieldSampler sampler(spec, {}, 38);
    for (int trial = 0; trial < 50; ++trial) {
      const Field s = sampler.sample();
      CHECK(V.composite_argmax(spec, s) == Vs.composite_argmax(spec, s));
    }
  }

  SUBCASE("single-subsystem composite is order-equivalent to its component") {
    GainMatrix g1(1);
    OmegaPath p1 = build_omega_path(g1);
    Certificate c1 = verify_omega_path(g1, p1);
    REQUIRE(c1.verdict);
    SystemSpec one;
    one.grid = spec.grid;
    one.n_species = 1;
    one.diffusion = {1.0};
    one.bc = {BoundaryCondition::Dirichlet0};
    one.linear_coupling = Eigen::MatrixXd::Zero(1, 1);
    const LyapunovFn W =
        build_composite_lyapunov({LyapunovFn::norm_power(NormKind::L2, 2.0, 1.0, 0)}, g1, p1);
    FieldSampler sampler(one, {}, 39);
    double prev_v = -1.0, prev_w = -1.0;
    for (int trial = 0; trial < 30; ++trial) {
      const Field s = sampler.sample();
      const double v = LyapunovFn::norm_power(NormKind::L2, 2.0, 1.0, 0).value(one, s);
      const double w = W.value(one, s);
      if (trial > 0) CHECK((v > prev_v) == (w > prev_w));
      prev_v = v;
      prev_w = w;
    }
  }

  SUBCASE("unverified path is rejected") {
    OmegaPath raw = build_omega_path(gains);
    CHECK_FALSE(raw.verified);
    CHECK_THROWS_AS(build_composite_lyapunov(subs, gains, raw), UnverifiedPath);
  }

  SUBCASE("composite decreases along trajectories below threshold") {
    FieldSampler sampler(spec, {}, 40);
    std::vector<Trajectory> trajs;
    for (int k = 0; k < 5; ++k) {
      const Field s0 = sampler.sample_with_norm(NormKind::Sup, 0.5 + 0.1 * k);
      SimulateOptions so;
      so.t_end = 2.0;
      so.dt = 1e-3;
      so.stride = 10;
      trajs.push_back(simulate(spec, s0, InputSignal::zero(0), so));
    }
    const Certificate cert = check_trajectory_decrease(V, spec, trajs, 1e-6);
    CHECK(cert.verdict);
  }
}

TEST_CASE("iss envelope estimation") {
  SUBCASE("scalar ode closed form: M near 1, rate near 1, identity gain") {
    SystemSpec spec = scalar_ode(false, true);
    std::vector<EnsembleTrajectory> ensemble;
    for (double x0 : {0.5, 1.0, 2.0}) {
      for (double u : {0.0, 0.1, 0.5}) {
        SimulateOptions so;
        so.t_end = 8.0;
        so.dt = 1e-3;
        so.stride = 40;
        const Trajectory traj =
            simulate(spec, scalar_state(spec, x0), InputSignal::constant({u}), so);
        ensemble.push_back(make_ensemble_entry(spec, traj, NormKind::L2, u));
      }
    }
    const EnvelopeFit fit = estimate_iss_envelope(ensemble, KFun::identity());
    CHECK(fit.feasible);
    CHECK(fit.a == doctest::Approx(1.0).epsilon(0.1));
    CHECK(fit.M == doctest::Approx(1.0).epsilon(0.1));
    CHECK(fit.certificate.verdict);
  }

  SUBCASE("zero-input rate matches the slowest eigenvalue") {
    SystemSpec spec;
    spec.grid = Grid1D(kPi, 50);
    spec.n_species = 1;
    spec.diffusion = {1.0};
    spec.bc = {BoundaryCondition::Dirichlet0};
    spec.linear_coupling = Eigen::MatrixXd::Zero(1, 1);
    const double rate = -max_real_eigenvalue(spec);
    FieldSampler sampler(spec, {}, 41);
    std::vector<EnsembleTrajectory> ensemble;
    for (int k = 0; k < 4; ++k) {
      SimulateOptions so;
      so.t_end = 6.0;
      so.dt = 1e-3;
      so.stride = 30;
      const Trajectory traj =
          simulate(spec, sampler.sample_with_norm(NormKind::L2, 1.0), InputSignal::zero(0), so);
      ensemble.push_back(make_ensemble_entry(spec, traj, NormKind::L2, 0.0));
    }
    const EnvelopeFit fit = estimate_iss_envelope(ensemble, KFun::identity());
    CHECK(fit.feasible);
    CHECK(fit.a == doctest::Approx(rate).epsilon(0.1));
  }

  SUBCASE("growing trajectories yield no feasible envelope") {
    EnsembleTrajectory e;
    e.x0_norm = 1.0;
    e.input_mag = 0.5;
    for (int k = 0; k <= 100; ++k) {
      const double t = 0.1 * k;
      e.times.push_back(t);
      e.norms.push_back(std::sqrt(1.0 + t));  // unbounded sub-exponential growth
    }
    const EnvelopeFit fit = estimate_iss_envelope({e}, KFun::identity());
    CHECK_FALSE(fit.feasible);
    CHECK_FALSE(fit.certificate.verdict);
    CHECK(fit.certificate.details["status"].get<std::string>() == "no_feasible_envelope");
  }
}

TEST_CASE("quadratic sandwich bounds hold on samples") {
  SystemSpec spec;
  spec.grid = Grid1D(1.5, 35);
  spec.n_species = 1;
  spec.diffusion = {0.8};
  spec.bc = {BoundaryCondition::Dirichlet0};
  spec.linear_coupling = Eigen::MatrixXd::Constant(1, 1, -0.2);
  const auto sol = solve_lyapunov(Eigen::MatrixXd(linear_generator(spec)), stacked_weights(spec));
  const LyapunovFn V = LyapunovFn::quadratic(spec, sol.quad);
  REQUIRE(V.psi1.has_value());
  REQUIRE(V.psi2.has_value());
  FieldSampler sampler(spec, {}, 42);
  for (int trial = 0; trial < 200; ++trial) {
    const Field s = sampler.sample();
    const double nrm = field_norm(spec, s, NormKind::L2, 0);
    const double v = V.value(spec, s);
    CHECK(v >= (*V.psi1)(nrm) * (1.0 - 1e-10));
    CHECK(v <= (*V.psi2)(nrm) * (1.0 + 1e-10));
  }
}
