#pragma once

#include <cstdint>
#include <random>

#include "isskit/pde.hpp"

namespace isskit {

/// splitmix64 step: derives independent per-sample seeds from one master
/// seed so ensemble loops stay deterministic under any thread count.
std::uint64_t split_seed(std::uint64_t master, std::uint64_t index);

struct FieldSamplerOptions {
  int max_modes = 12;
  double amp_lo = 1e-3;          // log-uniform amplitude range
  double amp_hi = 1.0;
  NormKind amp_norm = NormKind::Sup;
  double spectral_decay = 1.0;   // mode-k coefficient scale 1/k^decay
};

/// Random truncated Fourier states: sine series for Dirichlet species,
/// cosine series (constant mode included) for Neumann ones, coefficients
/// damped by 1/k^decay and the whole state rescaled to a log-uniform target
/// amplitude in the requested norm.
class FieldSampler {
 public:
  FieldSampler(const SystemSpec& spec, FieldSamplerOptions opts, std::uint64_t seed);

  Field sample();
  /// Random direction rescaled so the given norm of species 0..n-1 summed
  /// equals `target` exactly (returns a zero field for target 0).
  Field sample_with_norm(NormKind which, double target);
  /// Random single-channel input profile scaled to the given L2 magnitude.
  Eigen::MatrixXd sample_input(double l2_target);

  std::mt19937_64& rng() { return rng_; }

 private:
  Field random_direction();
  const SystemSpec& spec_;
  FieldSamplerOptions opts_;
  std::mt19937_64 rng_;
};

/// Plain-trapezoid L2 magnitude of one input channel (uniform h weights;
/// input functions carry no boundary condition).
double input_l2_norm(const SystemSpec& spec, const Eigen::MatrixXd& u_fields, int channel = 0);

}  // namespace isskit
