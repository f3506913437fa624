#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "isskit/certificate.hpp"
#include "isskit/kfun.hpp"

namespace isskit {

/// Interconnection gains of an n-subsystem network. entries[i][j] is the
/// class-K gain through which subsystem j's Lyapunov level enters subsystem
/// i's implication premise; absent means no influence. Self-gains are
/// forbidden (a diagonal influence belongs in the subsystem's own dynamics).
/// input_gains[i] is the gain of the external input into subsystem i.
class GainMatrix {
 public:
  explicit GainMatrix(std::size_t n);

  std::size_t size() const { return n_; }

  /// Sets the gain from subsystem `from` into subsystem `to` (0-based).
  void set(std::size_t to, std::size_t from, KFun gain);
  const std::optional<KFun>& entry(std::size_t to, std::size_t from) const;

  void set_input_gain(std::size_t i, KFun gain);
  const std::optional<KFun>& input_gain(std::size_t i) const;

  /// Componentwise gain-operator image: out_i = max over present j of
  /// entries[i][j](s_j), zero for an empty row. Throws DimensionMismatch.
  std::vector<double> apply(const std::vector<double>& s) const;

  /// Directed edges (to, from) with a present gain, row-major order.
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;

 private:
  std::size_t n_;
  std::vector<std::optional<KFun>> entries_;  // n*n, row-major
  std::vector<std::optional<KFun>> input_gains_;
};

/// One elementary cycle of the gain digraph together with the composite gain
/// accumulated around it (composition in influence order).
struct GainCycle {
  std::vector<std::size_t> nodes;  // 0-based, starting at the smallest vertex
  KFun composite;
  bool holds_global = false;   // composite < Id on (0, inf)
  bool holds_on_range = false; // composite < Id on the default working range
  double margin = 0.0;         // 1 - sup over the working range of composite(r)/r
};

struct SmallGainOptions {
  Interval working_range{1e-6, 1e6};
  std::size_t range_samples = 256;
  /// Iteration cross-check: starting vectors per instance and iteration cap.
  std::size_t probe_starts = 50;
  std::size_t probe_iterations = 10000;
  bool run_iteration_probe = true;
};

/// Decides the small-gain condition (no s != 0 with Gamma(s) >= s) by
/// enumerating every elementary cycle and testing its composite gain against
/// the identity. Exact for power-law cycles: a composite with exponent 1
/// passes iff its coefficient is < 1, any other exponent fails globally. The
/// certificate lists every cycle, its verdicts on (0, inf) and on the
/// bounded working range, and (when enabled) whether the monotone-iteration
/// probe agrees with the cycle decision.
Certificate check_small_gain(const GainMatrix& gains, const SmallGainOptions& opts = {});

/// Plain result of iterating Gamma from several starting vectors: true when
/// every orbit decays towards zero. Independent of the cycle decision; used
/// as its cross-check oracle.
bool small_gain_iteration_probe(const GainMatrix& gains, const SmallGainOptions& opts = {});

/// Enumerates the elementary cycles of the gain digraph with their
/// composite gains.
std::vector<GainCycle> gain_cycles(const GainMatrix& gains, const SmallGainOptions& opts = {});

/// A vector of K-infinity functions sigma with Gamma(sigma(r)) <= sigma(r)
/// for all r > 0, used to blend subsystem Lyapunov functions into one.
struct OmegaPath {
  enum class Provenance { Constructed, UserSupplied };
  std::vector<KFun> sigmas;
  Provenance provenance = Provenance::UserSupplied;
  bool verified = false;
};

/// Builds an omega-path by the max-of-iterates construction: sigma(t) is the
/// componentwise max of a*t, Gamma(a*t), ..., Gamma^(n-1)(a*t). Requires the
/// small-gain condition and throws SmallGainViolated otherwise. With
/// power-law gains the result is exact (piecewise power), so the weak path
/// inequality holds pointwise up to roundoff.
OmegaPath build_omega_path(const GainMatrix& gains, const std::vector<double>& anchor,
                           const SmallGainOptions& opts = {});
OmegaPath build_omega_path(const GainMatrix& gains, const SmallGainOptions& opts = {});

struct OmegaPathVerifyOptions {
  Interval r_range{1e-6, 1e6};
  std::size_t r_samples = 100;
  double relative_slack = 1e-9;
};

/// Samples Gamma(sigma(r)) - sigma(r) componentwise at log-spaced r and
/// passes iff every component stays within the relative slack. Sets
/// path.verified on success.
Certificate verify_omega_path(const GainMatrix& gains, OmegaPath& path,
                              const OmegaPathVerifyOptions& opts = {});

}  // namespace isskit
