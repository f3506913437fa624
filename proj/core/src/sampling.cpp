#include "isskit/sampling.hpp"

#include <cmath>

namespace isskit {

namespace {
const double kPi = 3.14159265358979323846;
}

std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

FieldSampler::FieldSampler(const SystemSpec& spec, FieldSamplerOptions opts, std::uint64_t seed)
    : spec_(spec), opts_(opts), rng_(seed) {
  spec_.validate();
}

Field FieldSampler::random_direction() {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = spec_.grid.n_interior;
  const int modes = std::min(opts_.max_modes, n);
  Field f(spec_.grid, spec_.n_species);
  for (int k = 0; k < spec_.n_species; ++k) {
    const bool dirichlet = spec_.bc[static_cast<std::size_t>(k)] == BoundaryCondition::Dirichlet0;
    for (int m = 1; m <= modes; ++m) {
      const double a = gauss(rng_) / std::pow(static_cast<double>(m), opts_.spectral_decay);
      for (int i = 0; i < n; ++i) {
        const double x = spec_.grid.node(i);
        const double phi = dirichlet ? std::sin(m * kPi * x / spec_.grid.d)
                                     : std::cos((m - 1) * kPi * x / spec_.grid.d);
        f.values(i, k) += a * phi;
      }
    }
  }
  return f;
}

Field FieldSampler::sample() {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double amp = opts_.amp_lo * std::pow(opts_.amp_hi / opts_.amp_lo, u(rng_));
  return sample_with_norm(opts_.amp_norm, amp);
}

Field FieldSampler::sample_with_norm(NormKind which, double target) {
  Field f = random_direction();
  double norm = 0.0;
  for (int k = 0; k < spec_.n_species; ++k) norm += field_norm(spec_, f, which, k);
  if (norm == 0.0 || target == 0.0) {
    f.values.setZero();
    return f;
  }
  f.values *= target / norm;
  return f;
}

Eigen::MatrixXd FieldSampler::sample_input(double l2_target) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = spec_.grid.n_interior;
  const int modes = std::min(opts_.max_modes, n);
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n, std::max(spec_.n_channels, 1));
  for (int ch = 0; ch < u.cols(); ++ch) {
    for (int m = 1; m <= modes; ++m) {
      const double a = gauss(rng_) / static_cast<double>(m);
      for (int i = 0; i < n; ++i) {
        u(i, ch) += a * std::sin(m * kPi * spec_.grid.node(i) / spec_.grid.d);
      }
    }
    const double norm = std::sqrt(spec_.grid.h() * u.col(ch).squaredNorm());
    if (norm > 0.0) u.col(ch) *= l2_target / norm;
  }
  return u;
}

double input_l2_norm(const SystemSpec& spec, const Eigen::MatrixXd& u_fields, int channel) {
  if (channel < 0 || channel >= u_fields.cols()) throw ShapeMismatch("input_l2_norm: bad channel");
  return std::sqrt(spec.grid.h() * u_fields.col(channel).squaredNorm());
}

}  // namespace isskit
