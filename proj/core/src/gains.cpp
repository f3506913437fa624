#include "isskit/gains.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace isskit {

namespace {

// Clamp used when a margin is reported for a condition that fails on all of
// (0, inf) by exponent mismatch; keeps JSON finite.
constexpr double kGlobalFailMargin = -1e300;

// sup over (0, inf) of f(r)/r, exact for power-law pieces and for tables
// (the ratio is monotone between nodes).
double sup_ratio_global(const KFun& f) {
  if (f.is_tabulated()) {
    const auto& pts = f.points();
    double sup = pts[1][1] / pts[1][0];  // slope limit at 0+
    for (std::size_t i = 1; i < pts.size(); ++i) sup = std::max(sup, pts[i][1] / pts[i][0]);
    return sup;
  }
  const auto& segs = f.segments();
  double sup = 0.0;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const auto& s = segs[i];
    const double hi = (i + 1 < segs.size()) ? segs[i + 1].r_lo
                                            : std::numeric_limits<double>::infinity();
    if (std::abs(s.expo - 1.0) < 1e-12) {
      sup = std::max(sup, s.coeff);
    } else if (s.expo > 1.0) {
      if (std::isinf(hi)) return std::numeric_limits<double>::infinity();
      sup = std::max(sup, s.coeff * std::pow(hi, s.expo - 1.0));
    } else {
      if (s.r_lo == 0.0) return std::numeric_limits<double>::infinity();
      sup = std::max(sup, s.coeff * std::pow(s.r_lo, s.expo - 1.0));
    }
  }
  return sup;
}

double sup_ratio_on_range(const KFun& f, Interval range, std::size_t n) {
  double hi = std::min(range.hi, f.max_argument());
  const double lo = std::max(range.lo, 1e-300);
  double sup = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) *
                                                 static_cast<double>(k) / static_cast<double>(n - 1));
    sup = std::max(sup, f(r) / r);
  }
  return sup;
}

}  // namespace

GainMatrix::GainMatrix(std::size_t n) : n_(n), entries_(n * n), input_gains_(n) {
  if (n == 0) throw DimensionMismatch("GainMatrix: need at least one subsystem");
}

void GainMatrix::set(std::size_t to, std::size_t from, KFun gain) {
  if (to >= n_ || from >= n_) throw DimensionMismatch("GainMatrix::set: index out of range");
  if (to == from) throw Error("GainMatrix::set: self-gains are forbidden");
  entries_[to * n_ + from] = std::move(gain);
}

const std::optional<KFun>& GainMatrix::entry(std::size_t to, std::size_t from) const {
  if (to >= n_ || from >= n_) throw DimensionMismatch("GainMatrix::entry: index out of range");
  return entries_[to * n_ + from];
}

void GainMatrix::set_input_gain(std::size_t i, KFun gain) {
  if (i >= n_) throw DimensionMismatch("GainMatrix::set_input_gain: index out of range");
  input_gains_[i] = std::move(gain);
}

const std::optional<KFun>& GainMatrix::input_gain(std::size_t i) const {
  if (i >= n_) throw DimensionMismatch("GainMatrix::input_gain: index out of range");
  return input_gains_[i];
}

std::vector<double> GainMatrix::apply(const std::vector<double>& s) const {
  if (s.size() != n_) throw DimensionMismatch("GainMatrix::apply: vector length mismatch");
  std::vector<double> out(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    double m = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      const auto& g = entries_[i * n_ + j];
      if (g) m = std::max(m, (*g)(s[j]));
    }
    out[i] = m;
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> GainMatrix::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) {
      if (entries_[i * n_ + j]) out.emplace_back(i, j);
    }
  }
  return out;
}

namespace {

// Elementary-cycle enumeration in influence direction (v -> w when
// entry(w, v) is present). Each cycle is reported once, rooted at its
// smallest vertex. Fine for the desk-scale networks this library targets.
void cycle_dfs(const GainMatrix& g, std::size_t root, std::vector<std::size_t>& path,
               std::vector<bool>& on_path, std::vector<std::vector<std::size_t>>& cycles) {
  const std::size_t v = path.back();
  for (std::size_t w = root; w < g.size(); ++w) {
    if (!g.entry(w, v)) continue;
    if (w == root) {
      cycles.push_back(path);
    } else if (!on_path[w]) {
      on_path[w] = true;
      path.push_back(w);
      cycle_dfs(g, root, path, on_path, cycles);
      path.pop_back();
      on_path[w] = false;
    }
  }
}

}  // namespace

std::vector<GainCycle> gain_cycles(const GainMatrix& gains, const SmallGainOptions& opts) {
  std::vector<std::vector<std::size_t>> raw;
  for (std::size_t root = 0; root < gains.size(); ++root) {
    std::vector<std::size_t> path{root};
    std::vector<bool> on_path(gains.size(), false);
    on_path[root] = true;
    cycle_dfs(gains, root, path, on_path, raw);
  }

  std::vector<GainCycle> out;
  out.reserve(raw.size());
  for (const auto& nodes : raw) {
    // Composite in influence order: walking nodes[0] -> nodes[1] -> ... -> nodes[0],
    // each hop applies entry(next, current) on top of what was accumulated.
    KFun comp;
    bool first = true;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const std::size_t from = nodes[k];
      const std::size_t to = nodes[(k + 1) % nodes.size()];
      const KFun& hop = *gains.entry(to, from);
      comp = first ? hop : compose(hop, comp);
      first = false;
    }
    GainCycle c;
    c.nodes = nodes;
    c.holds_global = less_than_id(comp);
    c.holds_on_range = less_than_id(comp, opts.working_range, opts.range_samples);
    const double sup = sup_ratio_global(comp);
    c.margin = std::isinf(sup) ? kGlobalFailMargin : 1.0 - sup;
    c.composite = std::move(comp);
    out.push_back(std::move(c));
  }
  return out;
}

bool small_gain_iteration_probe(const GainMatrix& gains, const SmallGainOptions& opts) {
  const std::size_t n = gains.size();
  std::vector<std::vector<double>> starts;
  for (double scale : {1e-2, 1.0, 1e2}) {
    starts.emplace_back(n, scale);
    for (std::size_t i = 0; i < n && starts.size() < opts.probe_starts; ++i) {
      std::vector<double> e(n, 0.0);
      e[i] = scale;
      starts.push_back(std::move(e));
    }
  }
  std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> mag(-2.0, 2.0);
  while (starts.size() < opts.probe_starts) {
    std::vector<double> s(n);
    for (auto& x : s) x = std::pow(10.0, mag(rng));
    starts.push_back(std::move(s));
  }

  for (const auto& s0 : starts) {
    const double m0 = *std::max_element(s0.begin(), s0.end());
    if (m0 == 0.0) continue;
    std::vector<double> s = s0;
    bool decayed = false;
    try {
      for (std::size_t it = 0; it < opts.probe_iterations; ++it) {
        s = gains.apply(s);
        const double m = *std::max_element(s.begin(), s.end());
        if (m <= 1e-12 * m0) {
          decayed = true;
          break;
        }
        if (m >= 1e12 * m0) break;
      }
      if (!decayed) {
        const double m = *std::max_element(s.begin(), s.end());
        decayed = m < 1e-6 * m0;
      }
    } catch (const OutOfTableRange&) {
      decayed = false;  // orbit escaped a tabulated gain's domain
    }
    if (!decayed) return false;
  }
  return true;
}

Certificate check_small_gain(const GainMatrix& gains, const SmallGainOptions& opts) {
  Certificate cert;
  cert.check = "small_gain";
  cert.parameters = {{"n", gains.size()},
                     {"working_range", {opts.working_range.lo, opts.working_range.hi}}};

  const auto cycles = gain_cycles(gains, opts);
  bool holds = true;
  double worst = std::numeric_limits<double>::infinity();
  nlohmann::json jcycles = nlohmann::json::array();
  for (const auto& c : cycles) {
    holds = holds && c.holds_global;
    // Keep the certificate invariant exact: a failing cycle contributes a
    // strictly negative margin even on the coeff == 1 knife edge.
    const double m = c.holds_global ? std::max(c.margin, 0.0) : std::min(c.margin, -1e-300);
    worst = std::min(worst, m);
    nlohmann::json jc;
    nlohmann::json jnodes = nlohmann::json::array();
    for (auto v : c.nodes) jnodes.push_back(v + 1);  // 1-based in reports
    jc["nodes"] = jnodes;
    if (c.composite.is_power_law()) {
      jc["coeff"] = c.composite.coeff();
      jc["expo"] = c.composite.expo();
    }
    jc["holds_global"] = c.holds_global;
    jc["holds_on_range"] = c.holds_on_range;
    jc["margin"] = c.margin;
    jc["range_sup_ratio"] = sup_ratio_on_range(c.composite, opts.working_range, opts.range_samples);
    jcycles.push_back(std::move(jc));
  }
  cert.details["cycles"] = std::move(jcycles);

  cert.samples_tested = static_cast<long>(cycles.size());
  cert.samples_applicable = static_cast<long>(cycles.size());
  cert.worst_margin = worst;
  cert.tolerance = 0.0;
  cert.verdict = holds;
  cert.vacuous = cycles.empty();

  if (opts.run_iteration_probe) {
    const bool probe = small_gain_iteration_probe(gains, opts);
    cert.details["iteration_probe"] = probe;
    cert.details["iteration_agrees"] = probe == holds;
  }
  return cert;
}

OmegaPath build_omega_path(const GainMatrix& gains, const SmallGainOptions& opts) {
  return build_omega_path(gains, std::vector<double>(gains.size(), 1.0), opts);
}

OmegaPath build_omega_path(const GainMatrix& gains, const std::vector<double>& anchor,
                           const SmallGainOptions& opts) {
  const std::size_t n = gains.size();
  if (anchor.size() != n) throw DimensionMismatch("build_omega_path: anchor length mismatch");
  for (double a : anchor) {
    if (!(a > 0.0)) throw Error("build_omega_path: anchor must be strictly positive");
  }
  {
    const Certificate sg = check_small_gain(gains, opts);
    if (!sg.verdict) {
      throw SmallGainViolated("build_omega_path: gain matrix violates the small-gain condition");
    }
  }

  // Symbolic iterates of the gain operator applied to t -> a*t. Empty rows
  // produce the zero function, represented as an absent candidate.
  std::vector<std::optional<KFun>> current(n);
  std::vector<std::vector<KFun>> candidates(n);
  for (std::size_t i = 0; i < n; ++i) {
    current[i] = KFun::power(anchor[i], 1.0);
    candidates[i].push_back(*current[i]);
  }
  for (std::size_t k = 1; k < n; ++k) {
    std::vector<std::optional<KFun>> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<KFun> terms;
      for (std::size_t j = 0; j < n; ++j) {
        const auto& g = gains.entry(i, j);
        if (g && current[j]) terms.push_back(compose(*g, *current[j]));
      }
      if (!terms.empty()) {
        next[i] = pointwise_max(terms);
        candidates[i].push_back(*next[i]);
      }
    }
    current = std::move(next);
  }

  OmegaPath path;
  path.provenance = OmegaPath::Provenance::Constructed;
  path.sigmas.reserve(n);
  for (std::size_t i = 0; i < n; ++i) path.sigmas.push_back(pointwise_max(candidates[i]));
  return path;
}

Certificate verify_omega_path(const GainMatrix& gains, OmegaPath& path,
                              const OmegaPathVerifyOptions& opts) {
  const std::size_t n = gains.size();
  Certificate cert;
  cert.check = "omega_path";
  cert.parameters = {{"n", n},
                     {"r_samples", opts.r_samples},
                     {"range", {opts.r_range.lo, opts.r_range.hi}},
                     {"relative_slack", opts.relative_slack}};
  if (path.sigmas.size() != n) throw DimensionMismatch("verify_omega_path: path length mismatch");

  // Clip the sample range so tabulated components stay inside their tables.
  double hi = opts.r_range.hi;
  for (std::size_t i = 0; i < n; ++i) {
    const double cover = path.sigmas[i].max_argument();
    if (std::isfinite(cover)) hi = std::min(hi, cover);
    for (std::size_t j = 0; j < n; ++j) {
      const auto& g = gains.entry(i, j);
      if (g && std::isfinite(g->max_argument())) {
        hi = std::min(hi, invert(path.sigmas[j])(g->max_argument()));
      }
    }
  }
  const double lo = opts.r_range.lo;
  if (!(lo > 0.0) || !(hi > lo)) {
    throw NotInvertibleOnRange("verify_omega_path: path not evaluable on the requested range");
  }

  cert.tolerance = opts.relative_slack;
  std::vector<double> sig(n);
  for (std::size_t k = 0; k < opts.r_samples; ++k) {
    const double r = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * static_cast<double>(k) /
                                                 static_cast<double>(opts.r_samples - 1));
    for (std::size_t i = 0; i < n; ++i) sig[i] = path.sigmas[i](r);
    const std::vector<double> gs = gains.apply(sig);
    for (std::size_t i = 0; i < n; ++i) {
      const double scale = std::max(sig[i], 1e-300);
      cert.record((sig[i] - gs[i]) / scale);
    }
    ++cert.samples_tested;
  }
  cert.finalize();
  if (cert.verdict) path.verified = true;
  return cert;
}

}  // namespace isskit
