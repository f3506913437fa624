#include "isskit/lyapunov.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "isskit/csv.hpp"
#include "isskit/parallel.hpp"

namespace isskit {

namespace {
const double kPi = 3.14159265358979323846;
constexpr double kActiveRelTol = 1e-9;
}  // namespace

Eigen::VectorXd stacked_weights(const SystemSpec& spec) {
  const int n = spec.grid.n_interior;
  Eigen::VectorXd w(spec.state_size());
  for (int k = 0; k < spec.n_species; ++k) {
    w.segment(k * n, n) = quadrature_weights(spec.grid, spec.bc[static_cast<std::size_t>(k)]);
  }
  return w;
}

LyapunovFn LyapunovFn::quadratic(const SystemSpec& spec, Eigen::MatrixXd quad) {
  spec.validate();
  if (quad.rows() != spec.state_size() || quad.cols() != spec.state_size()) {
    throw ShapeMismatch("LyapunovFn::quadratic: form size must match the stacked state");
  }
  LyapunovFn V;
  V.kind_ = Kind::Quadratic;
  V.species_ = -1;
  V.quad_ = 0.5 * (quad + quad.transpose());

  const Eigen::VectorXd w = stacked_weights(spec);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(
      V.quad_, Eigen::MatrixXd(w.asDiagonal()));
  if (es.info() != Eigen::Success) throw EigensolverFailure("LyapunovFn::quadratic: eigensolver");
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) throw Error("LyapunovFn::quadratic: form is not coercive");
  V.psi1 = KFun::power(lo, 2.0);
  V.psi2 = KFun::power(hi, 2.0);
  return V;
}

LyapunovFn LyapunovFn::quadratic_species(const SystemSpec& spec, Eigen::MatrixXd quad,
                                         int species) {
  spec.validate();
  if (species < 0 || species >= spec.n_species) {
    throw ShapeMismatch("LyapunovFn::quadratic_species: bad species");
  }
  const int n = spec.grid.n_interior;
  if (quad.rows() != n || quad.cols() != n) {
    throw ShapeMismatch("LyapunovFn::quadratic_species: form size must match one species");
  }
  LyapunovFn V;
  V.kind_ = Kind::Quadratic;
  V.species_ = species;
  V.quad_ = 0.5 * (quad + quad.transpose());
  const Eigen::VectorXd w = quadrature_weights(spec.grid, spec.bc[static_cast<std::size_t>(species)]);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(
      V.quad_, Eigen::MatrixXd(w.asDiagonal()));
  if (es.info() != Eigen::Success) throw EigensolverFailure("LyapunovFn::quadratic_species");
  const double lo = es.eigenvalues().minCoeff();
  if (!(lo > 0.0)) throw Error("LyapunovFn::quadratic_species: form is not coercive");
  V.psi1 = KFun::power(lo, 2.0);
  V.psi2 = KFun::power(es.eigenvalues().maxCoeff(), 2.0);
  return V;
}

LyapunovFn LyapunovFn::energy(NonlinMap reaction, int species) {
  registry_validate(reaction);
  LyapunovFn V;
  V.kind_ = Kind::Energy;
  V.species_ = species;
  V.reaction_ = std::move(reaction);
  V.psi1 = KFun::power(0.5, 2.0);  // V >= 1/2 ||s||_H10^2; the upper bound
                                   // depends on an embedding constant and is
                                   // left unset.
  return V;
}

LyapunovFn LyapunovFn::norm_power(NormKind norm, double power, double coeff, int species) {
  if (!(power > 0.0) || !(coeff > 0.0)) throw Error("LyapunovFn::norm_power: need positives");
  LyapunovFn V;
  V.kind_ = Kind::NormPower;
  V.species_ = species;
  V.norm_ = norm;
  V.power_ = power;
  V.coeff_ = coeff;
  V.psi1 = KFun::power(coeff, power);
  V.psi2 = KFun::power(coeff, power);
  return V;
}

LyapunovFn LyapunovFn::composite(std::vector<LyapunovFn> subs, OmegaPath path) {
  if (!path.verified) {
    throw UnverifiedPath("LyapunovFn::composite: omega-path was not verified");
  }
  if (subs.empty() || subs.size() != path.sigmas.size()) {
    throw DimensionMismatch("LyapunovFn::composite: one subsystem function per path component");
  }
  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (subs[i].species() != static_cast<int>(i)) {
      throw DimensionMismatch("LyapunovFn::composite: subsystem i must act on species i");
    }
  }
  LyapunovFn V;
  V.kind_ = Kind::Composite;
  V.species_ = -1;
  V.subs_ = std::move(subs);
  V.path_ = std::move(path);

  // Sandwich bounds through sigma^{-1} when every subsystem carries them:
  // lower uses ||x_i|| >= ||x|| / n for the best component.
  const std::size_t n = V.subs_.size();
  bool have_bounds = true;
  for (const auto& s : V.subs_) have_bounds = have_bounds && s.psi1 && s.psi2;
  if (have_bounds) {
    std::vector<KFun> lows, highs;
    for (std::size_t i = 0; i < n; ++i) {
      const KFun si = invert(V.path_.sigmas[i]);
      lows.push_back(compose(compose(si, *V.subs_[i].psi1),
                             KFun::power(1.0 / static_cast<double>(n), 1.0)));
      highs.push_back(compose(si, *V.subs_[i].psi2));
    }
    V.psi1 = pointwise_min(lows);
    V.psi2 = pointwise_max(highs);
  }
  return V;
}

LyapunovFn LyapunovFn::with_gain(KFun chi) const {
  LyapunovFn V = *this;
  V.gain = std::move(chi);
  return V;
}

LyapunovFn LyapunovFn::with_decay(KFun alpha) const {
  LyapunovFn V = *this;
  V.decay = std::move(alpha);
  return V;
}

NormKind LyapunovFn::premise_norm() const {
  switch (kind_) {
    case Kind::Quadratic:
      return NormKind::L2;
    case Kind::Energy:
      return NormKind::H10;
    case Kind::NormPower:
      return norm_;
    case Kind::Composite:
      return NormKind::L2;
  }
  return NormKind::L2;
}

double LyapunovFn::value(const SystemSpec& spec, const Field& state) const {
  state.require_compatible(spec);
  switch (kind_) {
    case Kind::Quadratic: {
      if (species_ < 0) {
        const Eigen::VectorXd x = state.stacked();
        return x.dot(quad_ * x);
      }
      const Eigen::VectorXd x = state.values.col(species_);
      return x.dot(quad_ * x);
    }
    case Kind::Energy: {
      const double h10 = field_norm(spec, state, NormKind::H10, species_);
      const Eigen::VectorXd w =
          quadrature_weights(spec.grid, spec.bc[static_cast<std::size_t>(species_)]);
      double pot = 0.0;
      for (int i = 0; i < spec.grid.n_interior; ++i) {
        pot += w(i) * registry_antiderivative(reaction_, state.values(i, species_));
      }
      return 0.5 * h10 * h10 + pot;
    }
    case Kind::NormPower:
      return coeff_ * std::pow(field_norm(spec, state, norm_, species_), power_);
    case Kind::Composite: {
      double best = 0.0;
      for (std::size_t i = 0; i < subs_.size(); ++i) {
        best = std::max(best, invert(path_.sigmas[i])(subs_[i].value(spec, state)));
      }
      return best;
    }
  }
  throw Error("LyapunovFn::value: unreachable");
}

int LyapunovFn::composite_argmax(const SystemSpec& spec, const Field& state) const {
  if (kind_ != Kind::Composite) return 0;
  int arg = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < subs_.size(); ++i) {
    const double v = invert(path_.sigmas[i])(subs_[i].value(spec, state));
    if (v > best) {
      best = v;
      arg = static_cast<int>(i);
    }
  }
  return arg;
}

namespace {

// Gradient of the discrete H10 seminorm squared is -2 h L1 s, with L1 the
// unit-diffusion Laplacian of the species' boundary condition; this holds
// for both paddings.
Eigen::VectorXd h10_gradient_half(const SystemSpec& spec, const Field& state, int species) {
  const auto L1 = laplacian_matrix(spec.grid, spec.bc[static_cast<std::size_t>(species)], 1.0);
  return -spec.grid.h() * (L1 * state.values.col(species));
}

double analytic_lie(const LyapunovFn& V, const SystemSpec& spec, const Field& state,
                    const Field& rhs) {
  switch (V.kind()) {
    case LyapunovFn::Kind::Quadratic: {
      if (V.species() < 0) {
        return 2.0 * state.stacked().dot(V.quad() * rhs.stacked());
      }
      return 2.0 * state.values.col(V.species()).dot(V.quad() * rhs.values.col(V.species()));
    }
    case LyapunovFn::Kind::Energy: {
      const int sp = V.species();
      const Eigen::VectorXd w =
          quadrature_weights(spec.grid, spec.bc[static_cast<std::size_t>(sp)]);
      Eigen::VectorXd grad = h10_gradient_half(spec, state, sp);
      for (int i = 0; i < spec.grid.n_interior; ++i) {
        grad(i) += w(i) * registry_eval(V.reaction(), state.values(i, sp));
      }
      return grad.dot(rhs.values.col(sp));
    }
    case LyapunovFn::Kind::NormPower: {
      const int sp = V.species();
      const double q = V.norm_power_exponent();
      const double nu = field_norm(spec, state, V.norm_kind(), sp);
      if (nu == 0.0) return 0.0;
      const Eigen::VectorXd w =
          quadrature_weights(spec.grid, spec.bc[static_cast<std::size_t>(sp)]);
      const auto s = state.values.col(sp);
      const auto r = rhs.values.col(sp);
      switch (V.norm_kind()) {
        case NormKind::L2: {
          const double inner = (w.array() * s.array() * r.array()).sum();
          return V.norm_power_coeff() * q * std::pow(nu, q - 2.0) * inner;
        }
        case NormKind::L4: {
          const double inner = (w.array() * s.array().cube() * r.array()).sum();
          return V.norm_power_coeff() * q * std::pow(nu, q - 4.0) * inner;
        }
        case NormKind::H10: {
          const double inner = h10_gradient_half(spec, state, sp).dot(r);
          return V.norm_power_coeff() * q * std::pow(nu, q - 2.0) * inner;
        }
        case NormKind::Sup:
          throw MethodUnavailable("analytic Lie derivative of a sup-norm certificate");
      }
      throw Error("analytic_lie: unreachable norm kind");
    }
    case LyapunovFn::Kind::Composite: {
      // Directional derivative of the max: largest derivative over the
      // indices within relative tolerance of the maximum.
      const auto& subs = V.subs();
      std::vector<double> levels(subs.size());
      double vmax = 0.0;
      for (std::size_t i = 0; i < subs.size(); ++i) {
        levels[i] = invert(V.path().sigmas[i])(subs[i].value(spec, state));
        vmax = std::max(vmax, levels[i]);
      }
      if (vmax == 0.0) return 0.0;
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < subs.size(); ++i) {
        if (levels[i] < vmax * (1.0 - kActiveRelTol)) continue;
        const double vi = subs[i].value(spec, state);
        const double slope = invert(V.path().sigmas[i]).derivative(vi);
        best = std::max(best, slope * analytic_lie(subs[i], spec, state, rhs));
      }
      return best;
    }
  }
  throw Error("analytic_lie: unreachable");
}

double finite_diff_lie(const LyapunovFn& V, const SystemSpec& spec, const Stepper& stepper,
                       const Field& state, const Eigen::MatrixXd& u_fields) {
  const Field next = stepper.advance(state, u_fields);
  return (V.value(spec, next) - V.value(spec, state)) / stepper.dt();
}

double fd_probe_dt(const SystemSpec& spec) {
  const double cmax = *std::max_element(spec.diffusion.begin(), spec.diffusion.end());
  return 1e-6 * std::pow(spec.grid.d / kPi, 2) / std::max(cmax, 1e-12);
}

}  // namespace

double lie_derivative(const LyapunovFn& V, const SystemSpec& spec, const Field& state,
                      const Eigen::MatrixXd& u_fields, LieMethod method) {
  spec.validate();
  state.require_compatible(spec);
  if (method == LieMethod::Analytic) {
    const Field rhs = evaluate_rhs(spec, state, u_fields);
    return analytic_lie(V, spec, state, rhs);
  }
  Stepper stepper(spec, fd_probe_dt(spec));
  return finite_diff_lie(V, spec, stepper, state, u_fields);
}

namespace {

struct SampleOutcome {
  bool applicable = false;
  double margin = 0.0;
  double fd_dev = 0.0;
  double x_norm = 0.0;
  Field state;
};

}  // namespace

Certificate check_implication(const LyapunovFn& V, const SystemSpec& spec,
                              const ImplicationOptions& opts) {
  spec.validate();
  if (!V.decay) throw Error("check_implication: V carries no decay rate alpha");
  const NormKind pn = V.premise_norm();
  const bool has_input = spec.n_channels > 0;

  Certificate cert;
  cert.check = "gain_implication";
  cert.parameters = {{"n_samples", opts.n_samples},
                     {"tol_abs", opts.tol_abs},
                     {"tol_rel", opts.tol_rel},
                     {"seed", opts.seed},
                     {"amp_range", {opts.sampler.amp_lo, opts.sampler.amp_hi}},
                     {"input_ratio", {opts.input_ratio_lo, opts.input_ratio_hi}}};

  const std::size_t n = static_cast<std::size_t>(opts.n_samples);
  std::vector<SampleOutcome> out(n);
  std::shared_ptr<Stepper> fd_stepper;
  if (opts.crosscheck_fd) fd_stepper = std::make_shared<Stepper>(spec, fd_probe_dt(spec));

  parallel_for(n, [&](std::size_t k) {
    FieldSamplerOptions so = opts.sampler;
    so.amp_norm = pn;
    FieldSampler sampler(spec, so, split_seed(opts.seed, k));
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    double amp;
    if (opts.include_top_amplitude && k == 0) {
      amp = so.amp_hi;
    } else {
      amp = so.amp_lo * std::pow(so.amp_hi / so.amp_lo, u01(sampler.rng()));
    }
    const Field state = sampler.sample_with_norm(pn, amp);

    Eigen::MatrixXd u_fields(spec.grid.n_interior, spec.n_channels);
    u_fields.setZero();
    if (has_input && V.gain && opts.input_ratio_hi > 0.0) {
      const double cap = invert(*V.gain)(amp);
      const double lo = std::max(opts.input_ratio_lo, 1e-12);
      const double ratio = lo * std::pow(opts.input_ratio_hi / lo, u01(sampler.rng()));
      u_fields = sampler.sample_input(ratio * cap);
    }

    double x_norm = 0.0;
    for (int sp = 0; sp < spec.n_species; ++sp) x_norm += field_norm(spec, state, pn, sp);
    double u_norm = 0.0;
    for (int ch = 0; ch < spec.n_channels; ++ch) u_norm += input_l2_norm(spec, u_fields, ch);

    const bool premise = !V.gain || !has_input || x_norm >= (*V.gain)(u_norm);
    SampleOutcome& o = out[k];
    o.applicable = premise && x_norm > 0.0;
    if (!o.applicable) return;
    o.x_norm = x_norm;

    const double vdot = lie_derivative(V, spec, state, u_fields, LieMethod::Analytic);
    const double tol = opts.tol_abs + opts.tol_rel * x_norm * x_norm;
    o.margin = tol - vdot - (*V.decay)(x_norm);
    if (opts.crosscheck_fd) {
      const double fd = finite_diff_lie(V, spec, *fd_stepper, state, u_fields);
      o.fd_dev = std::abs(vdot - fd) / (1.0 + std::abs(vdot));
    }
    if (o.margin < 0.0) o.state = state;
  });

  double worst_fd = 0.0;
  int witnesses = 0;
  for (std::size_t k = 0; k < n; ++k) {
    ++cert.samples_tested;
    const SampleOutcome& o = out[k];
    if (!o.applicable) continue;
    cert.record(o.margin);
    worst_fd = std::max(worst_fd, o.fd_dev);
    if (o.margin < 0.0 && witnesses < 10 && !opts.witness_dir.empty()) {
      const std::string path =
          opts.witness_dir + "/witness_" + std::to_string(k) + ".csv";
      write_field_csv(path, spec, o.state);
      cert.witness_files.push_back(path);
      ++witnesses;
    }
  }
  cert.finalize();
  cert.details["status"] = cert.vacuous ? "vacuous" : (cert.verdict ? "pass" : "fail");
  if (opts.crosscheck_fd) {
    cert.details["fd_worst_rel_dev"] = worst_fd;
    cert.details["fd_agrees"] = worst_fd <= opts.fd_rel_tol;
  }
  return cert;
}

Certificate check_subsystem_implication(const std::vector<LyapunovFn>& subsystem_lfs,
                                        int subsystem, const GainMatrix& gains, const KFun& alpha,
                                        const SystemSpec& coupled_spec,
                                        const SubsystemImplicationOptions& opts) {
  coupled_spec.validate();
  const std::size_t nsub = subsystem_lfs.size();
  if (nsub != gains.size() || static_cast<int>(nsub) != coupled_spec.n_species) {
    throw DimensionMismatch("check_subsystem_implication: one function/species per subsystem");
  }
  if (subsystem < 0 || subsystem >= static_cast<int>(nsub)) {
    throw DimensionMismatch("check_subsystem_implication: bad subsystem index");
  }
  const LyapunovFn& Vi = subsystem_lfs[static_cast<std::size_t>(subsystem)];

  Certificate cert;
  cert.check = "subsystem_implication";
  cert.parameters = {{"subsystem", subsystem + 1},
                     {"n_samples", opts.n_samples},
                     {"tol_abs", opts.tol_abs},
                     {"tol_rel", opts.tol_rel},
                     {"seed", opts.seed}};

  const std::size_t n = static_cast<std::size_t>(opts.n_samples);
  std::vector<SampleOutcome> out(n);

  parallel_for(n, [&](std::size_t k) {
    FieldSampler sampler(coupled_spec, opts.sampler, split_seed(opts.seed, k));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    Field state = sampler.sample();

    Eigen::MatrixXd u_fields(coupled_spec.grid.n_interior, coupled_spec.n_channels);
    u_fields.setZero();
    double u_norm = 0.0;
    if (coupled_spec.n_channels > 0 && opts.input_mag_hi > 0.0) {
      const double lo = std::max(opts.input_mag_lo, 1e-12);
      const double mag = lo * std::pow(opts.input_mag_hi / lo, u01(sampler.rng()));
      u_fields = sampler.sample_input(mag);
      for (int ch = 0; ch < coupled_spec.n_channels; ++ch) {
        u_norm += input_l2_norm(coupled_spec, u_fields, ch);
      }
    }

    // Premise threshold from the other subsystems and the input gain.
    double threshold = 0.0;
    for (std::size_t j = 0; j < nsub; ++j) {
      const auto& g = gains.entry(static_cast<std::size_t>(subsystem), j);
      if (g) threshold = std::max(threshold, (*g)(subsystem_lfs[j].value(coupled_spec, state)));
    }
    if (const auto& gi = gains.input_gain(static_cast<std::size_t>(subsystem))) {
      threshold = std::max(threshold, (*gi)(u_norm));
    }

    // Rescale species `subsystem` so V_i sits at ratio * threshold.
    if (threshold > 0.0) {
      const double ratio =
          opts.premise_ratio_lo *
          std::pow(opts.premise_ratio_hi / opts.premise_ratio_lo, u01(sampler.rng()));
      const double target = ratio * threshold;
      double cur = Vi.value(coupled_spec, state);
      if (cur <= 0.0) {
        // Degenerate direction: nothing to scale, sample inapplicable.
        out[k].applicable = false;
        return;
      }
      double scale;
      if (Vi.kind() == LyapunovFn::Kind::NormPower) {
        scale = std::pow(target / cur, 1.0 / Vi.norm_power_exponent());
      } else {
        double lo_l = -14.0, hi_l = 14.0;  // log10 bisection on the multiplier
        for (int it = 0; it < 80; ++it) {
          const double mid = 0.5 * (lo_l + hi_l);
          Field probe = state;
          probe.values.col(subsystem) *= std::pow(10.0, mid);
          (Vi.value(coupled_spec, probe) < target ? lo_l : hi_l) = mid;
        }
        scale = std::pow(10.0, 0.5 * (lo_l + hi_l));
      }
      state.values.col(subsystem) *= scale;
    }

    const double vi = Vi.value(coupled_spec, state);
    const bool premise = vi >= threshold && vi > 0.0;
    SampleOutcome& o = out[k];
    o.applicable = premise;
    if (!premise) return;
    o.x_norm = vi;
    const double vdot =
        lie_derivative(Vi, coupled_spec, state, u_fields, LieMethod::Analytic);
    const double tol = opts.tol_abs + opts.tol_rel * vi;
    o.margin = tol - vdot - alpha(vi);
    if (o.margin < 0.0) o.state = state;
  });

  int witnesses = 0;
  for (std::size_t k = 0; k < n; ++k) {
    ++cert.samples_tested;
    if (!out[k].applicable) continue;
    cert.record(out[k].margin);
    if (out[k].margin < 0.0 && witnesses < 10 && !opts.witness_dir.empty()) {
      const std::string path =
          opts.witness_dir + "/witness_sub" + std::to_string(subsystem + 1) + "_" +
          std::to_string(k) + ".csv";
      write_field_csv(path, coupled_spec, out[k].state);
      cert.witness_files.push_back(path);
      ++witnesses;
    }
  }
  cert.finalize();
  cert.details["status"] = cert.vacuous ? "vacuous" : (cert.verdict ? "pass" : "fail");
  return cert;
}

Certificate check_trajectory_decrease(const LyapunovFn& V, const SystemSpec& spec,
                                      const std::vector<Trajectory>& trajectories,
                                      double per_step_tol) {
  Certificate cert;
  cert.check = "trajectory_decrease";
  cert.parameters = {{"n_trajectories", trajectories.size()}, {"per_step_tol", per_step_tol}};
  for (const auto& traj : trajectories) {
    double prev = V.value(spec, traj.states.front());
    for (std::size_t s = 1; s < traj.states.size(); ++s) {
      const double cur = V.value(spec, traj.states[s]);
      cert.record(prev - cur + per_step_tol);
      ++cert.samples_tested;
      prev = cur;
    }
  }
  cert.finalize();
  cert.details["status"] = cert.vacuous ? "vacuous" : (cert.verdict ? "pass" : "fail");
  return cert;
}

LyapunovSolution solve_lyapunov(const Eigen::MatrixXd& R, const Eigen::VectorXd& weights) {
  if (R.rows() != R.cols() || R.rows() != weights.size()) {
    throw ShapeMismatch("solve_lyapunov: R must be square and match the weight vector");
  }
  const Eigen::Index n = R.rows();
  {
    Eigen::EigenSolver<Eigen::MatrixXd> es(R, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) throw EigensolverFailure("solve_lyapunov: eigensolver");
    if (es.eigenvalues().real().maxCoeff() >= 0.0) {
      throw NotHurwitz("solve_lyapunov: R has an eigenvalue with nonnegative real part");
    }
  }

  // Bartels-Stewart for A M + M A^H = -W with A = R^T, on the complex Schur
  // form of A.
  const Eigen::MatrixXd W = Eigen::MatrixXd(weights.asDiagonal());
  const Eigen::MatrixXcd A = R.transpose().cast<std::complex<double>>();
  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(A);
  if (schur.info() != Eigen::Success) throw LinearSolveFailure("solve_lyapunov: Schur failed");
  const Eigen::MatrixXcd& T = schur.matrixT();
  const Eigen::MatrixXcd& U = schur.matrixU();
  const Eigen::MatrixXcd Q = U.adjoint() * W.cast<std::complex<double>>() * U;

  Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index k = n - 1; k >= 0; --k) {
    Eigen::VectorXcd rhs = -Q.col(k);
    for (Eigen::Index j = k + 1; j < n; ++j) rhs -= std::conj(T(k, j)) * Y.col(j);
    Eigen::MatrixXcd Tk = T;
    Tk.diagonal().array() += std::conj(T(k, k));
    Y.col(k) = Tk.triangularView<Eigen::Upper>().solve(rhs);
  }
  Eigen::MatrixXd M = (U * Y * U.adjoint()).real();
  M = 0.5 * (M + M.transpose());

  LyapunovSolution sol;
  sol.quad = M;
  sol.P = weights.cwiseInverse().asDiagonal() * M;
  const Eigen::MatrixXd res = R.transpose() * M + M * R + W;
  sol.residual = res.cwiseAbs().maxCoeff() / W.diagonal().maxCoeff();
  if (!(sol.residual < 1e-6)) {
    throw LinearSolveFailure("solve_lyapunov: residual " + std::to_string(sol.residual));
  }
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) {
    throw LinearSolveFailure("solve_lyapunov: solution is not positive definite");
  }
  return sol;
}

LinearizationResult build_linearization_lyapunov(const SystemSpec& spec,
                                                 const LinearizationOptions& opts) {
  spec.validate();
  SystemSpec linear = spec;
  linear.reactions.clear();
  linear.inputs.clear();
  linear.n_channels = 0;

  const Eigen::MatrixXd A = Eigen::MatrixXd(linear_generator(linear));
  {
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
    if (es.info() != Eigen::Success) throw EigensolverFailure("build_linearization_lyapunov");
    if (es.eigenvalues().real().maxCoeff() >= 0.0) {
      throw NotHurwitz("build_linearization_lyapunov: linear part is not Hurwitz");
    }
  }
  const LyapunovSolution sol = solve_lyapunov(A, stacked_weights(spec));
  LyapunovFn V = LyapunovFn::quadratic(spec, sol.quad)
                     .with_gain(KFun::power(1.0, 0.5))
                     .with_decay(KFun::power(opts.theta, 2.0));

  auto level_passes = [&](double rho, std::uint64_t salt, Certificate* cert_out) {
    ImplicationOptions io;
    io.n_samples = opts.samples_per_level;
    io.seed = split_seed(opts.seed, salt);
    io.sampler = opts.sampler;
    io.sampler.amp_norm = NormKind::Sup;
    io.sampler.amp_hi = rho;
    io.sampler.amp_lo = rho * 1e-3;
    io.tol_rel = opts.tol_rel;
    const Certificate cert = check_implication(V, spec, io);
    if (cert_out) *cert_out = cert;
    return cert.verdict && !cert.vacuous;
  };

  double lo = 0.0, hi = opts.ceiling;
  Certificate cert;
  if (level_passes(opts.ceiling, 0, &cert)) {
    return {V, opts.ceiling, cert};
  }
  for (int it = 1; it <= opts.bisection_iters; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid < opts.radius_floor) break;
    (level_passes(mid, static_cast<std::uint64_t>(it), nullptr) ? lo : hi) = mid;
  }
  if (lo < opts.radius_floor) {
    throw NoPositiveRadius("build_linearization_lyapunov: certified radius collapsed below floor");
  }
  level_passes(lo, static_cast<std::uint64_t>(opts.bisection_iters) + 1, &cert);
  return {V, lo, cert};
}

LyapunovFn build_composite_lyapunov(std::vector<LyapunovFn> subsystem_lfs,
                                    const GainMatrix& gains, const OmegaPath& path) {
  if (subsystem_lfs.size() != gains.size()) {
    throw DimensionMismatch("build_composite_lyapunov: one function per subsystem");
  }
  LyapunovFn V = LyapunovFn::composite(std::move(subsystem_lfs), path);
  std::vector<KFun> gain_terms;
  for (std::size_t i = 0; i < gains.size(); ++i) {
    if (const auto& gi = gains.input_gain(i)) {
      gain_terms.push_back(compose(invert(path.sigmas[i]), *gi));
    }
  }
  if (!gain_terms.empty()) V.gain = pointwise_max(gain_terms);
  return V;
}

EnsembleTrajectory make_ensemble_entry(const SystemSpec& spec, const Trajectory& traj,
                                       NormKind which, double input_mag) {
  EnsembleTrajectory e;
  e.input_mag = input_mag;
  e.times = traj.times;
  e.norms.reserve(traj.states.size());
  for (const auto& s : traj.states) e.norms.push_back(composite_norm(spec, s, which));
  e.x0_norm = e.norms.empty() ? 0.0 : e.norms.front();
  return e;
}

}  // namespace isskit
