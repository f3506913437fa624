#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "isskit/examples.hpp"

using namespace isskit;

namespace {
const double kPi = 3.14159265358979323846;
}

TEST_CASE("counterexample: closed-form growth and decay") {
  CounterexampleOptions opts;
  opts.a = 1.0;
  opts.t_grid = {25.0, 100.0};
  opts.s_truncation = 200.0;
  const ExampleReport report = run_counterexample(opts);
  CHECK(report.verdict);

  // sup at t = 100 clears a sqrt(t) (1 - 1/e) = 10 (1 - 1/e) = 6.321...
  const auto sups = report.extra["sup_driven"].get<std::vector<double>>();
  CHECK(sups.back() >= 10.0 * (1.0 - std::exp(-1.0)));
  // Identity axiom at t = 0: sup equals the bump height.
  CHECK(sups.front() == doctest::Approx(1.0).epsilon(1e-9));
  // Zero-input decay: sup at t = 10 is below sup at t = 0.
  const auto zeros = report.extra["sup_zero_input"].get<std::vector<double>>();
  CHECK(zeros.back() < zeros.front());

  CHECK_THROWS_AS(run_counterexample({1.0, {100.0}, 50.0, 101, ""}), TruncationTooSmall);
}

TEST_CASE("counterexample: reruns are bit-identical") {
  CounterexampleOptions opts;
  opts.t_grid = {25.0};
  opts.s_truncation = 100.0;
  opts.axis_points = 501;
  const auto a = run_counterexample(opts).to_json().dump();
  const auto b = run_counterexample(opts).to_json().dump();
  CHECK(a == b);
}

TEST_CASE("neumann-hurwitz: stable and unstable coupling matrices") {
  SUBCASE("hurwitz R decays at the spectral rate") {
    NeumannHurwitzOptions opts;
    opts.R = Eigen::MatrixXd(2, 2);
    opts.R << -1.0, 0.5, 0.0, -2.0;
    opts.n_interior = 60;
    opts.t_end = 8.0;
    const ExampleReport report = run_neumann_hurwitz(opts);
    CHECK(report.verdict);
    CHECK(report.extra["hurwitz"].get<bool>());
    CHECK(report.extra["fitted_decay_rate"].get<double>() == doctest::Approx(1.0).epsilon(0.1));
    CHECK(report.extra["envelope_rate"].get<double>() > 0.0);
  }
  SUBCASE("scalar unstable R grows at its eigenvalue") {
    NeumannHurwitzOptions opts;
    opts.R = Eigen::MatrixXd::Constant(1, 1, 0.1);
    opts.stable_expected = false;
    opts.n_interior = 40;
    opts.t_end = 25.0;
    const ExampleReport report = run_neumann_hurwitz(opts);
    CHECK(report.verdict);
    CHECK(report.extra["fitted_growth_rate"].get<double>() == doctest::Approx(0.1).epsilon(0.1));
  }
  SUBCASE("unequal diffusion is refused") {
    NeumannHurwitzOptions opts;
    opts.R = Eigen::MatrixXd::Constant(1, 1, -1.0);
    opts.diffusion = {1.0, 2.0};
    CHECK_THROWS_AS(run_neumann_hurwitz(opts), UnequalDiffusion);
  }
}

TEST_CASE("semilinear energy certificate") {
  SemilinearEnergyOptions opts;
  opts.n_interior = 100;
  opts.n_samples = 200;
  const ExampleReport report = run_semilinear_energy(opts);
  CHECK(report.verdict);
  CHECK(report.certificates.size() == 4);
  for (const auto& c : report.certificates) CHECK(c.verdict);
  CHECK(report.extra["fd_worst_rel_dev"].get<double>() <= 1e-3);

  SUBCASE("fractional input powers keep the interpolation inequality") {
    SemilinearEnergyOptions frac = opts;
    frac.m = 0.5;
    frac.n_samples = 150;
    const ExampleReport r2 = run_semilinear_energy(frac);
    CHECK(r2.verdict);
  }
  SUBCASE("non-odd reactions are refused") {
    SemilinearEnergyOptions bad = opts;
    bad.reaction = {"square", 1.0};
    CHECK_THROWS_AS(run_semilinear_energy(bad), ReactionNotOddMonotone);
  }
}

TEST_CASE("coupled linear interconnection") {
  SUBCASE("below threshold: certified, stable, decreasing") {
    CoupledLinearOptions opts;
    opts.n_interior = 80;
    opts.n_trajectories = 2;
    opts.t_end = 4.0;
    opts.n_samples = 120;
    const ExampleReport report = run_coupled_linear(opts);
    CHECK(report.verdict);
    CHECK(report.headline.find("small-gain holds") != std::string::npos);
    CHECK(report.extra["max_real_eigenvalue"].get<double>() < 0.0);
    // eps = 0.1 is the knife edge at a12 a21 = 0.81; a smaller eps is used.
    CHECK(report.extra["eps_used"].get<double>() < 0.1);
    CHECK_FALSE(report.extra["small_gain_at_requested_eps"]["verdict"].get<bool>());
  }
  SUBCASE("above threshold: failure reported with growth evidence") {
    CoupledLinearOptions opts;
    opts.a12 = 1.1;
    opts.a21 = 1.1;
    opts.n_interior = 80;
    opts.t_end = 40.0;
    const ExampleReport report = run_coupled_linear(opts);
    CHECK_FALSE(report.verdict);
    // Mode-1 oracle: eigenvalues -kappa_1 +- 1.1, growth near +0.1.
    CHECK(report.extra["max_real_eigenvalue"].get<double>() ==
          doctest::Approx(0.1).epsilon(0.05));
    CHECK(report.extra["trajectory_growth_rate"].get<double>() ==
          doctest::Approx(0.1).epsilon(0.15));
  }
  SUBCASE("decoupled system is always stable") {
    CoupledLinearOptions opts;
    opts.a12 = 0.0;
    opts.a21 = 0.0;
    opts.n_interior = 60;
    opts.n_trajectories = 1;
    opts.t_end = 2.0;
    opts.n_samples = 60;
    const ExampleReport report = run_coupled_linear(opts);
    CHECK(report.verdict);
    CHECK(report.extra["max_real_eigenvalue"].get<double>() < 0.0);
  }
}

TEST_CASE("coupled nonlinear interconnection") {
  SUBCASE("b = 1.5 certifies both implications and the composite decrease") {
    CoupledNonlinearOptions opts;
    opts.n_interior = 80;
    opts.n_trajectories = 3;
    opts.t_end = 4.0;
    opts.n_samples = 150;
    const ExampleReport report = run_coupled_nonlinear(opts);
    CHECK(report.verdict);
    CHECK(report.headline.find("small-gain holds") != std::string::npos);
  }
  SUBCASE("b = 0.5 reports no small-gain conclusion") {
    CoupledNonlinearOptions opts;
    opts.b = 0.5;
    opts.n_interior = 40;
    const ExampleReport report = run_coupled_nonlinear(opts);
    CHECK_FALSE(report.verdict);
    CHECK(report.headline.find("no small-gain conclusion") != std::string::npos);
  }
}

TEST_CASE("reports and emitted files") {
  const std::string dir = "test_out/counterexample";
  std::filesystem::remove_all("test_out");
  CounterexampleOptions opts;
  opts.t_grid = {25.0};
  opts.s_truncation = 60.0;
  opts.axis_points = 301;
  opts.out_dir = dir;
  ExampleReport report = run_counterexample(opts);
  CHECK(std::filesystem::exists(dir + "/report.json"));
  for (const auto& p : report.data_paths) CHECK(std::filesystem::exists(p));
  for (std::size_t i = 0; i < report.certificates.size(); ++i) {
    CHECK(std::filesystem::exists(dir + "/certs/" + std::to_string(i) + "_" +
                                  report.certificates[i].check + ".json"));
  }
  std::filesystem::remove_all("test_out");
}
