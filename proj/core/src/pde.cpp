#include "isskit/pde.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace isskit {

namespace {
const double kPi = 3.14159265358979323846;
}

Eigen::VectorXd quadrature_weights(const Grid1D& grid, BoundaryCondition bc) {
  const int n = grid.n_interior;
  const double h = grid.h();
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, h);
  if (bc == BoundaryCondition::Neumann0) {
    // Boundary half-cells fold into the nearest interior node.
    w(0) += 0.5 * h;
    w(n - 1) += 0.5 * h;
  }
  return w;
}

void SystemSpec::validate() const {
  if (n_species < 1) throw ShapeMismatch("SystemSpec: need at least one species");
  if (static_cast<int>(diffusion.size()) != n_species ||
      static_cast<int>(bc.size()) != n_species) {
    throw ShapeMismatch("SystemSpec: diffusion/bc length must equal n_species");
  }
  for (double c : diffusion) {
    if (!(c > 0.0)) throw ShapeMismatch("SystemSpec: diffusion coefficients must be positive");
  }
  if (linear_coupling.rows() != n_species || linear_coupling.cols() != n_species) {
    throw ShapeMismatch("SystemSpec: linear_coupling must be n_species x n_species");
  }
  for (const auto& t : reactions) {
    if (t.target < 0 || t.target >= n_species || t.source < 0 || t.source >= n_species) {
      throw ShapeMismatch("SystemSpec: reaction term indices out of range");
    }
    registry_validate(t.map);
  }
  for (const auto& t : inputs) {
    if (t.target < 0 || t.target >= n_species || t.channel < 0 || t.channel >= n_channels) {
      throw ShapeMismatch("SystemSpec: input term indices out of range");
    }
    registry_validate(t.map);
  }
}

Field Field::from_stacked(const Grid1D& g, int n_species, const Eigen::VectorXd& x) {
  if (x.size() != static_cast<Eigen::Index>(g.n_interior) * n_species) {
    throw ShapeMismatch("Field::from_stacked: size mismatch");
  }
  Field f(g, n_species);
  f.values = Eigen::Map<const Eigen::MatrixXd>(x.data(), g.n_interior, n_species);
  return f;
}

void Field::require_compatible(const SystemSpec& spec) const {
  if (!(grid == spec.grid) || n_species() != spec.n_species) {
    throw ShapeMismatch("Field incompatible with SystemSpec");
  }
  if (!values.allFinite()) throw ShapeMismatch("Field contains non-finite values");
}

InputSignal InputSignal::zero(int n_channels) {
  InputSignal u;
  u.n_channels_ = n_channels;
  u.channels_.assign(static_cast<std::size_t>(n_channels), Channel{});
  return u;
}

InputSignal InputSignal::constant(std::vector<double> channel_values) {
  InputSignal u;
  u.n_channels_ = static_cast<int>(channel_values.size());
  for (double v : channel_values) {
    Channel c;
    c.time_kind = Channel::TimeKind::Const;
    c.amp = v;
    c.profile_kind = Channel::ProfileKind::Const;
    u.channels_.push_back(c);
  }
  return u;
}

InputSignal InputSignal::from_channels(std::vector<Channel> channels) {
  InputSignal u;
  u.n_channels_ = static_cast<int>(channels.size());
  u.channels_ = std::move(channels);
  for (const auto& c : u.channels_) {
    if (c.time_kind == Channel::TimeKind::PCTable) {
      if (c.t_nodes.empty() || c.t_nodes.size() != c.t_values.size()) {
        throw Error("InputSignal: PC table needs matching, nonempty node/value lists");
      }
      if (!std::is_sorted(c.t_nodes.begin(), c.t_nodes.end())) {
        throw Error("InputSignal: PC table nodes must be sorted");
      }
    }
  }
  return u;
}

InputSignal InputSignal::callback(int n_channels,
                                  std::function<double(int, double, double, double)> fn) {
  InputSignal u;
  u.n_channels_ = n_channels;
  u.fn_ = std::move(fn);
  return u;
}

double InputSignal::value(int channel, double x, double t, double d) const {
  if (channel < 0 || channel >= n_channels_) throw ShapeMismatch("InputSignal: bad channel");
  if (fn_) return fn_(channel, x, t, d);
  const Channel& c = channels_[static_cast<std::size_t>(channel)];

  double amp = 0.0;
  switch (c.time_kind) {
    case Channel::TimeKind::Const:
      amp = c.amp;
      break;
    case Channel::TimeKind::Exp:
      amp = c.amp * std::exp(-c.rate * t);
      break;
    case Channel::TimeKind::PCTable: {
      // Right-continuous: value of the last node with t_node <= t.
      auto it = std::upper_bound(c.t_nodes.begin(), c.t_nodes.end(), t);
      if (it == c.t_nodes.begin()) {
        amp = c.t_values.front();
      } else {
        amp = c.t_values[static_cast<std::size_t>(std::distance(c.t_nodes.begin(), it)) - 1];
      }
      break;
    }
  }

  double profile = 1.0;
  switch (c.profile_kind) {
    case Channel::ProfileKind::Const:
      profile = 1.0;
      break;
    case Channel::ProfileKind::Sine:
      profile = std::sin(c.mode * kPi * x / d);
      break;
    case Channel::ProfileKind::Cosine:
      profile = std::cos(c.mode * kPi * x / d);
      break;
    case Channel::ProfileKind::Gauss: {
      const double z = (x - c.center * d) / (c.width * d);
      profile = std::exp(-0.5 * z * z);
      break;
    }
  }
  return amp * profile;
}

Eigen::MatrixXd InputSignal::sample(const Grid1D& grid, double t) const {
  Eigen::MatrixXd out(grid.n_interior, n_channels_);
  for (int ch = 0; ch < n_channels_; ++ch) {
    for (int i = 0; i < grid.n_interior; ++i) {
      out(i, ch) = value(ch, grid.node(i), t, grid.d);
    }
  }
  return out;
}

Eigen::SparseMatrix<double> laplacian_matrix(const Grid1D& grid, BoundaryCondition bc, double c) {
  const int n = grid.n_interior;
  const double s = c / (grid.h() * grid.h());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(3 * n));
  for (int i = 0; i < n; ++i) {
    double diag = -2.0 * s;
    if (bc == BoundaryCondition::Neumann0 && (i == 0 || i == n - 1)) diag = -s;
    if (n == 1 && bc == BoundaryCondition::Neumann0) diag = 0.0;  // both ghosts mirror the node
    trip.emplace_back(i, i, diag);
    if (i > 0) trip.emplace_back(i, i - 1, s);
    if (i + 1 < n) trip.emplace_back(i, i + 1, s);
  }
  Eigen::SparseMatrix<double> L(n, n);
  L.setFromTriplets(trip.begin(), trip.end());
  return L;
}

Eigen::SparseMatrix<double> linear_generator(const SystemSpec& spec) {
  spec.validate();
  const int n = spec.grid.n_interior;
  const int m = spec.n_species;
  std::vector<Eigen::Triplet<double>> trip;
  for (int k = 0; k < m; ++k) {
    const auto L = laplacian_matrix(spec.grid, spec.bc[static_cast<std::size_t>(k)],
                                    spec.diffusion[static_cast<std::size_t>(k)]);
    for (int col = 0; col < L.outerSize(); ++col) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(L, col); it; ++it) {
        trip.emplace_back(k * n + static_cast<int>(it.row()), k * n + col, it.value());
      }
    }
  }
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const double r = spec.linear_coupling(i, j);
      if (r == 0.0) continue;
      for (int node = 0; node < n; ++node) {
        trip.emplace_back(i * n + node, j * n + node, r);
      }
    }
  }
  Eigen::SparseMatrix<double> A(n * m, n * m);
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

namespace {

// Nonlinear reaction and input contributions (the explicit part of the
// splitting).
Eigen::MatrixXd nonlinear_part(const SystemSpec& spec, const Field& state,
                               const Eigen::MatrixXd& u_fields) {
  const int n = spec.grid.n_interior;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, spec.n_species);
  for (const auto& t : spec.reactions) {
    const auto src = state.values.col(t.source);
    auto dst = out.col(t.target);
    for (int i = 0; i < n; ++i) dst(i) += t.coeff * registry_eval(t.map, src(i));
  }
  for (const auto& t : spec.inputs) {
    const auto src = u_fields.col(t.channel);
    auto dst = out.col(t.target);
    for (int i = 0; i < n; ++i) dst(i) += t.coeff * registry_eval(t.map, src(i));
  }
  return out;
}

}  // namespace

Field evaluate_rhs(const SystemSpec& spec, const Field& state, const Eigen::MatrixXd& u_fields) {
  spec.validate();
  state.require_compatible(spec);
  if (u_fields.rows() != spec.grid.n_interior || u_fields.cols() != spec.n_channels) {
    throw ShapeMismatch("evaluate_rhs: input field shape mismatch");
  }
  Field out(spec.grid, spec.n_species);
  for (int k = 0; k < spec.n_species; ++k) {
    const auto L = laplacian_matrix(spec.grid, spec.bc[static_cast<std::size_t>(k)],
                                    spec.diffusion[static_cast<std::size_t>(k)]);
    out.values.col(k) = L * state.values.col(k);
  }
  for (int i = 0; i < spec.n_species; ++i) {
    for (int j = 0; j < spec.n_species; ++j) {
      const double r = spec.linear_coupling(i, j);
      if (r != 0.0) out.values.col(i) += r * state.values.col(j);
    }
  }
  out.values += nonlinear_part(spec, state, u_fields);
  return out;
}

Stepper::Stepper(const SystemSpec& spec, double dt) : spec_(spec), dt_(dt) {
  if (!(dt > 0.0)) throw Error("Stepper: dt must be positive");
  spec_.validate();
  const int N = spec_.state_size();
  Eigen::SparseMatrix<double> M(N, N);
  M.setIdentity();
  M -= dt * linear_generator(spec_);
  lu_ = std::make_shared<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
  lu_->compute(M);
  if (lu_->info() != Eigen::Success) {
    throw LinearSolveFailure("Stepper: factorization of (I - dt L) failed");
  }
}

Field Stepper::advance(const Field& state, const Eigen::MatrixXd& u_fields) const {
  state.require_compatible(spec_);
  const Eigen::MatrixXd nonlin = nonlinear_part(spec_, state, u_fields);
  const Eigen::VectorXd rhs =
      state.stacked() + dt_ * Eigen::Map<const Eigen::VectorXd>(nonlin.data(), nonlin.size());
  const Eigen::VectorXd next = lu_->solve(rhs);
  if (lu_->info() != Eigen::Success) throw LinearSolveFailure("Stepper: solve failed");
  return Field::from_stacked(state.grid, spec_.n_species, next);
}

Field step(const SystemSpec& spec, const Field& state, const InputSignal& input, double t,
           double dt) {
  Stepper st(spec, dt);
  return st.advance(state, input.sample(spec.grid, t));
}

double default_dt(const SystemSpec& spec) {
  const double cmax = *std::max_element(spec.diffusion.begin(), spec.diffusion.end());
  const double scale = (spec.grid.d / kPi) * (spec.grid.d / kPi);
  return 1e-3 * scale / std::max(cmax, 1e-12);
}

Trajectory simulate(const SystemSpec& spec, const Field& initial, const InputSignal& input,
                    const SimulateOptions& opts) {
  spec.validate();
  initial.require_compatible(spec);
  if (!(opts.t_end > opts.t0)) throw Error("simulate: t_end must exceed t0");
  if (input.n_channels() != spec.n_channels) {
    throw ShapeMismatch("simulate: input channel count mismatch");
  }
  const double dt = opts.dt > 0.0 ? opts.dt : default_dt(spec);
  const long n_steps = std::lround((opts.t_end - opts.t0) / dt);
  const int stride = std::max(opts.stride, 1);

  Trajectory traj;
  traj.input = input;
  traj.times.push_back(opts.t0);
  traj.states.push_back(initial);

  Stepper stepper(spec, dt);
  Field state = initial;
  for (long k = 0; k < n_steps; ++k) {
    const double t = opts.t0 + static_cast<double>(k) * dt;
    state = stepper.advance(state, input.sample(spec.grid, t));
    const double t_next = opts.t0 + static_cast<double>(k + 1) * dt;
    const double sup = state.values.cwiseAbs().maxCoeff();
    if (sup > opts.m_max || !std::isfinite(sup)) {
      traj.blowup = t_next;
      traj.times.push_back(t_next);
      traj.states.push_back(state);
      return traj;
    }
    if ((k + 1) % stride == 0 || k + 1 == n_steps) {
      traj.times.push_back(t_next);
      traj.states.push_back(state);
    }
  }
  return traj;
}

double field_norm(const SystemSpec& spec, const Field& state, NormKind which, int species) {
  if (species < 0 || species >= spec.n_species) throw ShapeMismatch("field_norm: bad species");
  const auto bc = spec.bc[static_cast<std::size_t>(species)];
  const auto s = state.values.col(species);
  const int n = spec.grid.n_interior;
  const double h = spec.grid.h();

  switch (which) {
    case NormKind::Sup:
      return s.cwiseAbs().maxCoeff();
    case NormKind::L2: {
      const Eigen::VectorXd w = quadrature_weights(spec.grid, bc);
      return std::sqrt((w.array() * s.array().square()).sum());
    }
    case NormKind::L4: {
      const Eigen::VectorXd w = quadrature_weights(spec.grid, bc);
      return std::pow((w.array() * s.array().square().square()).sum(), 0.25);
    }
    case NormKind::H10: {
      // Forward differences of the padded field: zero boundary values for
      // Dirichlet, mirrored for Neumann (zero boundary slope).
      double acc = 0.0;
      const double lo = bc == BoundaryCondition::Dirichlet0 ? 0.0 : s(0);
      const double hi = bc == BoundaryCondition::Dirichlet0 ? 0.0 : s(n - 1);
      acc += (s(0) - lo) * (s(0) - lo);
      for (int i = 0; i + 1 < n; ++i) acc += (s(i + 1) - s(i)) * (s(i + 1) - s(i));
      acc += (hi - s(n - 1)) * (hi - s(n - 1));
      return std::sqrt(acc / h);
    }
  }
  throw Error("field_norm: unreachable");
}

double composite_norm(const SystemSpec& spec, const Field& state, NormKind which) {
  double acc = 0.0;
  for (int k = 0; k < spec.n_species; ++k) acc += field_norm(spec, state, which, k);
  return acc;
}

std::vector<std::complex<double>> generator_spectrum(const SystemSpec& spec) {
  const Eigen::MatrixXd A = Eigen::MatrixXd(linear_generator(spec));
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw EigensolverFailure("generator_spectrum: solver failed");
  std::vector<std::complex<double>> ev(static_cast<std::size_t>(A.rows()));
  for (Eigen::Index i = 0; i < A.rows(); ++i) ev[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
  std::sort(ev.begin(), ev.end(),
            [](const std::complex<double>& a, const std::complex<double>& b) {
              return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
            });
  return ev;
}

double max_real_eigenvalue(const SystemSpec& spec) {
  return generator_spectrum(spec).front().real();
}

double species_mean(const SystemSpec& spec, const Field& state, int species) {
  if (species < 0 || species >= spec.n_species) throw ShapeMismatch("species_mean: bad species");
  // Unweighted nodal mean: the coefficient of the Neumann constant mode,
  // which the mirror-ghost stencil conserves exactly under pure diffusion.
  return state.values.col(species).mean();
}

}  // namespace isskit
