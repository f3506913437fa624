#pragma once

#include <string>
#include <vector>

#include "isskit/lyapunov.hpp"

namespace isskit {

/// Outcome of one runnable model problem: the certificates produced, the
/// data files emitted, and a one-line verdict. The report verdict is the
/// conjunction of the certificate verdicts.
struct ExampleReport {
  std::string example_id;
  nlohmann::json parameters = nlohmann::json::object();
  std::vector<Certificate> certificates;
  std::vector<std::string> data_paths;
  std::string headline;
  bool verdict = false;
  nlohmann::json extra = nlohmann::json::object();

  void add(Certificate cert) { certificates.push_back(std::move(cert)); }
  void finalize_verdict();
  nlohmann::json to_json() const;
  /// Writes report.json plus one JSON file per certificate under out_dir.
  void write(const std::string& out_dir);
};

/// Multiplication-semigroup counterexample: 0-GAS dynamics whose sup norm
/// grows like a sqrt(t) under the bounded input a / sqrt(1 + |s|). Evaluates
/// the closed-form solution on a truncated axis [-S, S] including the
/// maximizer s = t - 1 of every requested time.
struct CounterexampleOptions {
  double a = 1.0;
  std::vector<double> t_grid = {25.0, 100.0, 400.0};
  double s_truncation = 800.0;
  int axis_points = 4001;
  std::string out_dir;
};
ExampleReport run_counterexample(const CounterexampleOptions& opts);

/// Neumann reaction network ds/dt = c Laplace s + R s + input: exponential
/// ISS holds exactly when R is Hurwitz, with equal diffusion across species.
struct NeumannHurwitzOptions {
  Eigen::MatrixXd R;
  std::vector<double> diffusion = {1.0};
  bool stable_expected = true;
  int n_interior = 150;
  double t_end = 8.0;
  double dt = 1e-3;
  double input_mag = 0.2;
  std::uint64_t seed = 1;
  std::string out_dir;
};
ExampleReport run_neumann_hurwitz(const NeumannHurwitzOptions& opts);

/// Dirichlet semilinear equation ds/dt = s'' - f(s) + u^m on (0, pi) with an
/// odd increasing reaction: the energy functional certifies the gain
/// chi(r) = a pi^((1-m)/2) r^m with decrease rate (1 - 1/a).
struct SemilinearEnergyOptions {
  double m = 1.0;
  double a = 2.0;
  NonlinMap reaction = {"cubic_odd", 1.0};
  int n_interior = 200;
  long n_samples = 1000;
  double rate_slack = 0.1;  // fraction of the theoretical decrease absorbed
  std::uint64_t seed = 1;
  std::string out_dir;
};
ExampleReport run_semilinear_energy(const SemilinearEnergyOptions& opts);

/// Two coupled linear heat equations with cross terms a12, a21: the
/// small-gain threshold is |a12 a21| < c1 c2 (pi/d)^4. Reports both the
/// eps-dependent certified check and the limiting threshold, builds the
/// composite certificate when admissible, and always reports the spectrum
/// truth of the discretized generator.
struct CoupledLinearOptions {
  double c1 = 1.0, c2 = 1.0;
  double d = 3.14159265358979323846;
  double a12 = 0.9, a21 = 0.9;
  double eps = 0.1;
  int n_interior = 200;
  int n_trajectories = 5;
  double t_end = 10.0;
  double dt = 1e-3;
  long n_samples = 300;
  std::uint64_t seed = 1;
  std::string out_dir;
};
ExampleReport run_coupled_linear(const CoupledLinearOptions& opts);

/// Nonlinear pair (s2^2 into species 1, sqrt|s1| into species 2, -b s2
/// damping): certifies both subsystem implications and the composite
/// decrease whenever c1 (pi/d)^2 b^2 > 1.
struct CoupledNonlinearOptions {
  double c1 = 1.0, c2 = 1.0;
  double d = 3.14159265358979323846;
  double b = 1.5;
  double eps1 = 0.1, eps2 = 0.1;
  int n_interior = 200;
  int n_trajectories = 20;
  double t_end = 10.0;
  double dt = 1e-3;
  long n_samples = 400;
  double rate_slack = 0.1;
  std::uint64_t seed = 1;
  std::string out_dir;
};
ExampleReport run_coupled_nonlinear(const CoupledNonlinearOptions& opts);

}  // namespace isskit
