#pragma once

#include <complex>
#include <memory>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "isskit/system.hpp"

namespace isskit {

/// Second-order central-difference Laplacian times the diffusion
/// coefficient, interior nodes only. Dirichlet rows read c (1, -2, 1)/h^2
/// with implicit zero boundary values; Neumann rows use ghost-point
/// reflection, turning the first and last rows into the c (-1, 1)/h^2
/// zero-flux pattern. Both variants are symmetric and the Neumann one has
/// zero row and column sums, so pure diffusion conserves the discrete mean.
Eigen::SparseMatrix<double> laplacian_matrix(const Grid1D& grid, BoundaryCondition bc, double c);

/// Full discretized linear generator on the species-stacked state:
/// block-diagonal diffusion plus linear_coupling acting nodewise.
Eigen::SparseMatrix<double> linear_generator(const SystemSpec& spec);

/// Right-hand side c_i L s_i + sum_j R_ij s_j + nonlinear + input terms.
/// u_fields is (n_interior x n_channels), as produced by InputSignal::sample.
Field evaluate_rhs(const SystemSpec& spec, const Field& state, const Eigen::MatrixXd& u_fields);

/// IMEX Euler stepper: diffusion and linear coupling implicit, nonlinear
/// and input terms explicit,
///
///   (I - dt L) s+ = s + dt N(s, u),
///
/// unconditionally stable in the stiff linear part. The factorization is
/// reused across steps.
class Stepper {
 public:
  Stepper(const SystemSpec& spec, double dt);
  Field advance(const Field& state, const Eigen::MatrixXd& u_fields) const;
  double dt() const { return dt_; }

 private:
  const SystemSpec spec_;
  double dt_;
  std::shared_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
};

/// One IMEX Euler step with the input sampled at time t.
Field step(const SystemSpec& spec, const Field& state, const InputSignal& input, double t,
           double dt);

/// Default step size 1e-3 (d/pi)^2 / max c_i, the diffusion time scale of
/// the slowest-decaying mode.
double default_dt(const SystemSpec& spec);

struct SimulateOptions {
  double t0 = 0.0;
  double t_end = 1.0;
  double dt = 0.0;        // 0: use default_dt
  double m_max = 1e8;     // sup-norm blow-up bound
  int stride = 1;         // record every stride-th step
};

/// Repeated IMEX steps from `initial`; records states at the configured
/// stride and halts with the blowup flag set once any species' sup norm
/// exceeds m_max. Deterministic: identical inputs give identical output.
Trajectory simulate(const SystemSpec& spec, const Field& initial, const InputSignal& input,
                    const SimulateOptions& opts);

enum class NormKind { L2, L4, H10, Sup };

/// Quadrature norm of one species: composite trapezoid with boundary
/// padding (zero for Dirichlet, mirrored for Neumann); H10 uses forward
/// differences of the padded field.
double field_norm(const SystemSpec& spec, const Field& state, NormKind which, int species);

/// Sum over species of the requested norm; the product-space norm used for
/// interconnection estimates.
double composite_norm(const SystemSpec& spec, const Field& state, NormKind which);

/// Eigenvalues of the discretized linear generator (diffusion + linear
/// coupling), sorted by descending real part.
std::vector<std::complex<double>> generator_spectrum(const SystemSpec& spec);
double max_real_eigenvalue(const SystemSpec& spec);

/// Spatial mean of one species (Neumann constant-mode amplitude).
double species_mean(const SystemSpec& spec, const Field& state, int species);

}  // namespace isskit
