#pragma once

#include <optional>
#include <string>
#include <vector>

#include "isskit/gains.hpp"
#include "isskit/sampling.hpp"

namespace isskit {

enum class LieMethod { Analytic, FiniteDiff };

/// A numerical ISS-Lyapunov certificate candidate. Four families:
///
///   Quadratic   V(x) = x^T Q x on the species-stacked state (or one
///               species' block), Q symmetric positive definite and already
///               carrying the quadrature weights
///   Energy      V(s) = 1/2 ||s||_H10^2 + integral of F(s), F the
///               antiderivative of a registry reaction
///   NormPower   V(s) = coeff * ||s_species||_norm^power
///   Composite   V(x) = max_i sigma_i^{-1}(V_i(x_i)) over a verified
///               omega-path
///
/// The attached comparison functions describe the certificate: psi1/psi2
/// sandwich V between K-infinity bounds of the state norm, gain is the
/// implication threshold chi, decay the required decrease rate alpha.
class LyapunovFn {
 public:
  enum class Kind { Quadratic, Energy, NormPower, Composite };

  /// Quadratic form on the stacked state; bounds are derived from the
  /// generalized eigenvalues of (Q, W) so psi1/psi2 are exact.
  static LyapunovFn quadratic(const SystemSpec& spec, Eigen::MatrixXd quad);
  /// Quadratic form on a single species' block.
  static LyapunovFn quadratic_species(const SystemSpec& spec, Eigen::MatrixXd quad, int species);
  static LyapunovFn energy(NonlinMap reaction, int species = 0);
  static LyapunovFn norm_power(NormKind norm, double power, double coeff, int species = 0);
  /// Throws UnverifiedPath unless the path passed verify_omega_path.
  static LyapunovFn composite(std::vector<LyapunovFn> subs, OmegaPath path);

  Kind kind() const { return kind_; }
  int species() const { return species_; }
  const Eigen::MatrixXd& quad() const { return quad_; }
  const std::vector<LyapunovFn>& subs() const { return subs_; }
  const OmegaPath& path() const { return path_; }
  NormKind norm_kind() const { return norm_; }
  double norm_power_exponent() const { return power_; }
  double norm_power_coeff() const { return coeff_; }
  const NonlinMap& reaction() const { return reaction_; }

  double value(const SystemSpec& spec, const Field& state) const;

  /// The state norm the implication premise compares against chi(||u||).
  NormKind premise_norm() const;

  /// Index attaining the max in a composite evaluation (0 otherwise).
  int composite_argmax(const SystemSpec& spec, const Field& state) const;

  std::optional<KFun> psi1, psi2;  // sandwich bounds
  std::optional<KFun> gain;        // chi
  std::optional<KFun> decay;       // alpha

  LyapunovFn with_gain(KFun chi) const;
  LyapunovFn with_decay(KFun alpha) const;

 private:
  LyapunovFn() = default;
  Kind kind_ = Kind::NormPower;
  int species_ = 0;                 // -1: stacked state (Quadratic only)
  Eigen::MatrixXd quad_;
  NonlinMap reaction_;
  NormKind norm_ = NormKind::L2;
  double power_ = 2.0;
  double coeff_ = 1.0;
  std::vector<LyapunovFn> subs_;
  OmegaPath path_;
};

/// Derivative of V along the flow at `state` under the frozen input fields.
/// Analytic uses the closed-form gradient of the discrete functional;
/// FiniteDiff takes one IMEX step of length 1e-6 times the diffusion time
/// scale. Analytic on a Sup-norm NormPower throws MethodUnavailable; a
/// Composite at a max switch returns the largest directional derivative
/// over the active indices.
double lie_derivative(const LyapunovFn& V, const SystemSpec& spec, const Field& state,
                      const Eigen::MatrixXd& u_fields, LieMethod method);

struct ImplicationOptions {
  long n_samples = 200;
  double tol_abs = 0.0;
  double tol_rel = 0.0;  // allowance per ||x||^2 in premise-norm units
  std::uint64_t seed = 1;
  FieldSamplerOptions sampler;
  /// Input magnitude as a fraction of chi^{-1}(||x||): below one satisfies
  /// the gain premise, above one violates it on purpose.
  double input_ratio_lo = 1e-3;
  double input_ratio_hi = 1.0;
  /// Draw the first sample at exactly amp_hi so the worst amplitude level
  /// is always exercised.
  bool include_top_amplitude = true;
  /// Also evaluate the finite-difference Lie derivative on every applicable
  /// sample and report the worst relative deviation.
  bool crosscheck_fd = false;
  double fd_rel_tol = 1e-3;
  std::string witness_dir;  // empty: keep witnesses in memory only
};

/// Samples the gain implication: over states and inputs with
/// ||x|| >= chi(||u||), asserts dV/dt <= -alpha(||x||) + tolerance. V must
/// carry decay (and gain, when the spec has input channels).
Certificate check_implication(const LyapunovFn& V, const SystemSpec& spec,
                              const ImplicationOptions& opts = {});

struct SubsystemImplicationOptions {
  long n_samples = 200;
  double tol_abs = 0.0;
  double tol_rel = 0.0;  // allowance per V_i
  std::uint64_t seed = 1;
  FieldSamplerOptions sampler;
  /// V_i is rescaled to premise_ratio times the premise threshold,
  /// log-uniform over [lo, hi]; ratios >= 1 make the premise hold.
  double premise_ratio_lo = 1.0;
  double premise_ratio_hi = 10.0;
  double input_mag_lo = 0.0;  // external input magnitude range (L2)
  double input_mag_hi = 0.0;
  std::string witness_dir;
};

/// Subsystem form of the implication on Lyapunov levels:
/// V_i >= max{max_j chi_ij(V_j), chi_i(||u||)}  =>  dV_i/dt <= -alpha(V_i),
/// with the Lie derivative taken along the full coupled dynamics.
Certificate check_subsystem_implication(const std::vector<LyapunovFn>& subsystem_lfs,
                                        int subsystem, const GainMatrix& gains, const KFun& alpha,
                                        const SystemSpec& coupled_spec,
                                        const SubsystemImplicationOptions& opts = {});

/// V(t_k+1) <= V(t_k) + per_step_tol along every recorded trajectory.
Certificate check_trajectory_decrease(const LyapunovFn& V, const SystemSpec& spec,
                                      const std::vector<Trajectory>& trajectories,
                                      double per_step_tol);

struct LyapunovSolution {
  Eigen::MatrixXd P;     // operator: V(x) = <P x, x>_W
  Eigen::MatrixXd quad;  // W P, the raw quadratic form x^T quad x
  double residual;       // weighted-equation residual, max-norm relative
};

/// Solves the operator Lyapunov equation in the quadrature inner product,
///
///   <R x, P x>_W + <P x, R x>_W = -||x||_W^2  for all x,
///
/// i.e. R^T M + M R = -W with M = W P symmetric positive definite, by
/// Bartels-Stewart on the complex Schur form. Throws NotHurwitz when R has
/// an eigenvalue with nonnegative real part.
LyapunovSolution solve_lyapunov(const Eigen::MatrixXd& R, const Eigen::VectorXd& weights);

/// Stacked quadrature weights of the full state (species blocks in order).
Eigen::VectorXd stacked_weights(const SystemSpec& spec);

struct LinearizationOptions {
  double theta = 0.1;            // certified decay alpha(r) = theta r^2
  double ceiling = 1.0;          // sup-norm amplitude search ceiling
  int bisection_iters = 40;
  long samples_per_level = 200;
  double radius_floor = 1e-6;
  std::uint64_t seed = 1;
  double tol_rel = 0.0;
  FieldSamplerOptions sampler;
};

struct LinearizationResult {
  LyapunovFn V;
  double radius;  // certified sup-norm amplitude bound
  Certificate certificate;
};

/// Linearization construction: drops the nonlinear terms, requires the
/// discretized linear generator to be Hurwitz, solves the operator Lyapunov
/// equation for V(x) = <P x, x>, attaches the gain chi(r) = sqrt(r), and
/// bisects for the largest sup-norm amplitude at which the implication
/// certificate still passes on the full nonlinear system. Throws NotHurwitz
/// or NoPositiveRadius.
LinearizationResult build_linearization_lyapunov(const SystemSpec& spec,
                                                 const LinearizationOptions& opts = {});

/// Composite certificate from Theorem-style blending: V = max_i
/// sigma_i^{-1}(V_i), gain max_i sigma_i^{-1}(chi_i), bounds assembled from
/// the subsystem bounds through sigma^{-1}. The path must be verified.
LyapunovFn build_composite_lyapunov(std::vector<LyapunovFn> subsystem_lfs,
                                    const GainMatrix& gains, const OmegaPath& path);

/// One ensemble member for envelope fitting: a norm history with its
/// initial-state norm and (constant) input magnitude.
struct EnsembleTrajectory {
  double x0_norm = 0.0;
  double input_mag = 0.0;
  std::vector<double> times;
  std::vector<double> norms;
};

EnsembleTrajectory make_ensemble_entry(const SystemSpec& spec, const Trajectory& traj,
                                       NormKind which, double input_mag);

struct EnvelopeOptions {
  double m_cap = 1e6;        // infeasible beyond this overshoot factor
  double floor_frac = 1e-9;  // ignore norms below this fraction of the peak
};

struct EnvelopeFit {
  bool feasible = false;
  double M = 0.0;
  double a = 0.0;
  KLFun beta = KLFun::exp_envelope(1.0, 1.0);
  Certificate certificate;
};

/// Fits beta(r, t) = M e^{-a t} r with minimal M such that
/// norm(t) <= beta(x0_norm, t) + gamma(input_mag) across the ensemble.
/// Growth of the gamma-reduced norms (or an overshoot beyond m_cap) gives
/// feasible = false: evidence against ISS, reported rather than thrown.
EnvelopeFit estimate_iss_envelope(const std::vector<EnsembleTrajectory>& ensemble,
                                  const KFun& gamma, const EnvelopeOptions& opts = {});

}  // namespace isskit
