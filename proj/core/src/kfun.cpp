#include "isskit/kfun.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

namespace isskit {

namespace {

constexpr double kParallelExpoTol = 1e-12;

bool same_law(const KFun::Segment& a, const KFun::Segment& b) {
  return std::abs(a.coeff - b.coeff) <= 1e-14 * std::max(std::abs(a.coeff), std::abs(b.coeff)) &&
         std::abs(a.expo - b.expo) <= 1e-14 * std::max(std::abs(a.expo), std::abs(b.expo));
}

double eval_law(double coeff, double expo, double r) {
  if (r == 0.0) return 0.0;
  return coeff * std::pow(r, expo);
}

std::vector<double> log_spaced(double lo, double hi, std::size_t n) {
  std::vector<double> out;
  out.reserve(n);
  if (n == 1) {
    out.push_back(lo);
    return out;
  }
  const double llo = std::log(lo), lhi = std::log(hi);
  for (std::size_t k = 0; k < n; ++k) {
    out.push_back(std::exp(llo + (lhi - llo) * static_cast<double>(k) / static_cast<double>(n - 1)));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

// Crossing point of c1 r^p1 and c2 r^p2, or 0 if parallel/degenerate.
double law_crossing(double c1, double p1, double c2, double p2) {
  if (std::abs(p1 - p2) < kParallelExpoTol) return 0.0;
  const double r = std::pow(c2 / c1, 1.0 / (p1 - p2));
  if (!std::isfinite(r) || r <= 0.0) return 0.0;
  return r;
}

}  // namespace

KFun KFun::power(double coeff, double expo) {
  if (!(coeff > 0.0) || !(expo > 0.0)) {
    throw Error("KFun::power: coeff and expo must be positive");
  }
  KFun f;
  f.segments_ = {{0.0, coeff, expo}};
  f.points_.clear();
  return f;
}

KFun KFun::piecewise(std::vector<Segment> segments) {
  if (segments.empty()) throw Error("KFun::piecewise: no segments");
  if (segments.front().r_lo != 0.0) throw Error("KFun::piecewise: first segment must start at 0");
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (!(segments[i].coeff > 0.0) || !(segments[i].expo > 0.0)) {
      throw Error("KFun::piecewise: coeff and expo must be positive");
    }
    if (i > 0 && !(segments[i].r_lo > segments[i - 1].r_lo)) {
      throw Error("KFun::piecewise: segment starts must be strictly increasing");
    }
  }
  // Merge adjacent segments carrying the same law.
  std::vector<Segment> merged;
  for (const auto& s : segments) {
    if (!merged.empty() && same_law(merged.back(), s)) continue;
    merged.push_back(s);
  }
  KFun f;
  f.segments_ = std::move(merged);
  f.points_.clear();
  return f;
}

KFun KFun::table(std::vector<std::array<double, 2>> points) {
  if (points.size() < 2) throw Error("KFun::table: need at least two points");
  if (points.front()[0] != 0.0 || points.front()[1] != 0.0) {
    throw Error("KFun::table: table must start at (0, 0)");
  }
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (!(points[i][0] > points[i - 1][0]) || !(points[i][1] > points[i - 1][1])) {
      throw Error("KFun::table: table must be strictly increasing in both coordinates");
    }
  }
  KFun f;
  f.segments_.clear();
  f.points_ = std::move(points);
  return f;
}

KFun::Kind KFun::kind() const {
  if (!points_.empty()) return Kind::Tabulated;
  return segments_.size() == 1 ? Kind::PowerLaw : Kind::PiecewisePower;
}

double KFun::coeff() const {
  if (!is_power_law()) throw Error("KFun::coeff: not a single power law");
  return segments_.front().coeff;
}

double KFun::expo() const {
  if (!is_power_law()) throw Error("KFun::expo: not a single power law");
  return segments_.front().expo;
}

double KFun::operator()(double r) const {
  if (r < 0.0) throw NegativeArgument("KFun: negative argument");
  if (is_tabulated()) {
    if (r >= points_.back()[0]) {
      if (r > points_.back()[0]) throw OutOfTableRange("KFun: argument beyond table range");
      return points_.back()[1];
    }
    auto it = std::upper_bound(points_.begin(), points_.end(), r,
                               [](double x, const std::array<double, 2>& p) { return x < p[0]; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    if (r == lo[0]) return lo[1];
    const double t = (r - lo[0]) / (hi[0] - lo[0]);
    return lo[1] + t * (hi[1] - lo[1]);
  }
  auto it = std::upper_bound(segments_.begin(), segments_.end(), r,
                             [](double x, const Segment& s) { return x < s.r_lo; });
  const Segment& s = *(it - 1);
  return eval_law(s.coeff, s.expo, r);
}

double KFun::derivative(double r) const {
  if (r < 0.0) throw NegativeArgument("KFun: negative argument");
  if (is_tabulated()) {
    if (r >= points_.back()[0]) throw OutOfTableRange("KFun: argument beyond table range");
    auto it = std::upper_bound(points_.begin(), points_.end(), r,
                               [](double x, const std::array<double, 2>& p) { return x < p[0]; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    return (hi[1] - lo[1]) / (hi[0] - lo[0]);
  }
  auto it = std::upper_bound(segments_.begin(), segments_.end(), r,
                             [](double x, const Segment& s) { return x <= s.r_lo; });
  const Segment& s = *(it - 1);
  if (r == 0.0) {
    if (s.expo == 1.0) return s.coeff;
    return s.expo > 1.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return s.coeff * s.expo * std::pow(r, s.expo - 1.0);
}

double KFun::max_argument() const {
  if (is_tabulated()) return points_.back()[0];
  return std::numeric_limits<double>::infinity();
}

double KFun::max_value() const {
  if (is_tabulated()) return points_.back()[1];
  return std::numeric_limits<double>::infinity();
}

namespace {

// Shared-grid tabulation used whenever exact piecewise algebra is not
// available. The node set keeps every node of the tabulated operands so
// piecewise-linear inputs are reproduced exactly at their own nodes.
KFun tabulate(const std::vector<const KFun*>& fs, double r_max,
              const TabulationGrid& grid,
              const std::function<double(double)>& value_at) {
  std::set<double> nodes;
  nodes.insert(0.0);
  for (const KFun* f : fs) {
    if (f->is_tabulated()) {
      for (const auto& p : f->points()) {
        if (p[0] <= r_max) nodes.insert(p[0]);
      }
    }
  }
  const double hi = std::min(grid.hi, r_max);
  for (double r : log_spaced(grid.lo, hi, grid.n)) nodes.insert(r);
  nodes.insert(r_max);

  std::vector<std::array<double, 2>> pts;
  pts.reserve(nodes.size());
  double last_v = -1.0;
  for (double r : nodes) {
    if (r > r_max) break;
    const double v = value_at(r);
    if (r > 0.0 && !(v > last_v)) continue;  // enforce strict monotonicity against roundoff
    pts.push_back({r, v});
    last_v = v;
  }
  return KFun::table(std::move(pts));
}

}  // namespace

KFun compose(const KFun& f, const KFun& g, const TabulationGrid& grid) {
  if (!f.is_tabulated() && !g.is_tabulated()) {
    // Breakpoints of f∘g: all of g's, plus preimages under g of f's.
    std::set<double> breaks;
    for (const auto& s : g.segments()) breaks.insert(s.r_lo);
    const KFun g_inv = invert(g);
    for (const auto& s : f.segments()) {
      if (s.r_lo > 0.0) breaks.insert(g_inv(s.r_lo));
    }
    std::vector<KFun::Segment> segs;
    std::vector<double> bs(breaks.begin(), breaks.end());
    for (std::size_t i = 0; i < bs.size(); ++i) {
      const double lo = bs[i];
      const double hi = (i + 1 < bs.size()) ? bs[i + 1] : std::numeric_limits<double>::infinity();
      const double rm = std::isinf(hi) ? std::max(2.0 * lo, 1.0) : (lo == 0.0 ? hi / 2 : std::sqrt(lo * hi));
      // Active laws of g at rm and of f at g(rm).
      const auto& gs = g.segments();
      auto git = std::upper_bound(gs.begin(), gs.end(), rm,
                                  [](double x, const KFun::Segment& s) { return x < s.r_lo; });
      const KFun::Segment& sg = *(git - 1);
      const double v = g(rm);
      const auto& fsg = f.segments();
      auto fit = std::upper_bound(fsg.begin(), fsg.end(), v,
                                  [](double x, const KFun::Segment& s) { return x < s.r_lo; });
      const KFun::Segment& sf = *(fit - 1);
      segs.push_back({lo, sf.coeff * std::pow(sg.coeff, sf.expo), sf.expo * sg.expo});
    }
    return KFun::piecewise(std::move(segs));
  }

  // Tabulated fallback: domain ends where g runs out or where g exceeds f's table.
  double r_max = g.max_argument();
  if (std::isfinite(f.max_argument())) {
    const double pre = g.is_tabulated() && g.max_value() <= f.max_argument()
                           ? g.max_argument()
                           : invert(g)(std::min(f.max_argument(), g.max_value()));
    r_max = std::min(r_max, pre);
  }
  if (!std::isfinite(r_max)) r_max = grid.hi;
  return tabulate({&f, &g}, r_max, grid, [&](double r) { return f(g(r)); });
}

KFun invert(const KFun& f) {
  if (f.is_tabulated()) {
    std::vector<std::array<double, 2>> swapped;
    swapped.reserve(f.points().size());
    for (const auto& p : f.points()) swapped.push_back({p[1], p[0]});
    return KFun::table(std::move(swapped));
  }
  std::vector<KFun::Segment> segs;
  segs.reserve(f.segments().size());
  for (const auto& s : f.segments()) {
    const double v_lo = eval_law(s.coeff, s.expo, s.r_lo);
    segs.push_back({v_lo, std::pow(s.coeff, -1.0 / s.expo), 1.0 / s.expo});
  }
  return KFun::piecewise(std::move(segs));
}

namespace {

KFun envelope(const std::vector<KFun>& fs, bool upper, const TabulationGrid& grid) {
  if (fs.empty()) throw EmptyList("pointwise envelope of an empty list");
  if (fs.size() == 1) return fs.front();

  bool any_tab = std::any_of(fs.begin(), fs.end(), [](const KFun& f) { return f.is_tabulated(); });
  if (any_tab) {
    double r_max = std::numeric_limits<double>::infinity();
    for (const auto& f : fs) r_max = std::min(r_max, f.max_argument());
    if (!std::isfinite(r_max)) r_max = grid.hi;
    std::vector<const KFun*> ptrs;
    for (const auto& f : fs) ptrs.push_back(&f);
    return tabulate(ptrs, r_max, grid, [&](double r) {
      double v = fs.front()(r);
      for (std::size_t i = 1; i < fs.size(); ++i) {
        v = upper ? std::max(v, fs[i](r)) : std::min(v, fs[i](r));
      }
      return v;
    });
  }

  // Exact envelope of power-law pieces. Candidate breakpoints: every segment
  // start plus every pairwise law crossing; between consecutive candidates
  // the winner cannot change.
  std::set<double> breaks;
  std::vector<KFun::Segment> all_laws;
  for (const auto& f : fs) {
    for (const auto& s : f.segments()) {
      breaks.insert(s.r_lo);
      all_laws.push_back(s);
    }
  }
  for (std::size_t i = 0; i < all_laws.size(); ++i) {
    for (std::size_t j = i + 1; j < all_laws.size(); ++j) {
      const double r = law_crossing(all_laws[i].coeff, all_laws[i].expo,
                                    all_laws[j].coeff, all_laws[j].expo);
      if (r > 0.0 && std::isfinite(r)) breaks.insert(r);
    }
  }

  std::vector<double> bs(breaks.begin(), breaks.end());
  std::vector<KFun::Segment> segs;
  for (std::size_t i = 0; i < bs.size(); ++i) {
    const double lo = bs[i];
    const double hi = (i + 1 < bs.size()) ? bs[i + 1] : std::numeric_limits<double>::infinity();
    const double rm = std::isinf(hi) ? std::max(2.0 * lo, 1.0) : (lo == 0.0 ? hi / 2 : std::sqrt(lo * hi));
    std::size_t win = 0;
    double best = fs[0](rm);
    for (std::size_t k = 1; k < fs.size(); ++k) {
      const double v = fs[k](rm);
      if (upper ? (v > best) : (v < best)) {
        best = v;
        win = k;
      }
    }
    const auto& ws = fs[win].segments();
    auto it = std::upper_bound(ws.begin(), ws.end(), rm,
                               [](double x, const KFun::Segment& s) { return x < s.r_lo; });
    const KFun::Segment& s = *(it - 1);
    if (!segs.empty() && same_law(segs.back(), s)) continue;
    segs.push_back({lo, s.coeff, s.expo});
  }
  return KFun::piecewise(std::move(segs));
}

}  // namespace

KFun pointwise_max(const std::vector<KFun>& fs, const TabulationGrid& grid) {
  return envelope(fs, /*upper=*/true, grid);
}

KFun pointwise_min(const std::vector<KFun>& fs, const TabulationGrid& grid) {
  return envelope(fs, /*upper=*/false, grid);
}

bool less_than_id(const KFun& f, Interval r_range, std::size_t n_samples) {
  if (r_range.is_global() && !f.is_tabulated()) {
    // Exact: c r^p < r on (lo, hi) iff c r^(p-1) stays below 1, checked at
    // the sup of each segment.
    const auto& segs = f.segments();
    for (std::size_t i = 0; i < segs.size(); ++i) {
      const auto& s = segs[i];
      const double hi = (i + 1 < segs.size()) ? segs[i + 1].r_lo
                                              : std::numeric_limits<double>::infinity();
      if (std::abs(s.expo - 1.0) < kParallelExpoTol) {
        if (!(s.coeff < 1.0)) return false;
      } else if (s.expo > 1.0) {
        if (std::isinf(hi)) return false;
        if (s.coeff * std::pow(hi, s.expo - 1.0) > 1.0) return false;
      } else {  // expo < 1: sup at the left end; diverges at 0
        if (s.r_lo == 0.0) return false;
        if (s.coeff * std::pow(s.r_lo, s.expo - 1.0) >= 1.0) return false;
      }
    }
    return true;
  }

  double lo = r_range.lo, hi = r_range.hi;
  if (std::isinf(hi) && f.is_tabulated()) hi = f.max_argument();
  if (r_range.is_global()) lo = TabulationGrid{}.lo;
  if (!(lo > 0.0) || !(hi > lo) || !std::isfinite(hi)) {
    throw DegenerateRange("less_than_id: need 0 < lo < hi < inf for sampled decision");
  }
  for (double r : log_spaced(lo, hi, std::max<std::size_t>(n_samples, 2))) {
    if (!(f(r) <= r * (1.0 - kLessThanIdSlack))) return false;
  }
  return true;
}

KLFun KLFun::exp_envelope(double M, double a) {
  if (!(M > 0.0) || !(a > 0.0)) throw Error("KLFun::exp_envelope: M and a must be positive");
  KLFun b;
  b.kind_ = Kind::ExpEnvelope;
  b.M_ = M;
  b.a_ = a;
  return b;
}

KLFun KLFun::product(std::vector<std::array<double, 2>> zeta_of_t, KFun of_r) {
  if (zeta_of_t.size() < 2) throw Error("KLFun::product: need at least two zeta nodes");
  for (std::size_t i = 1; i < zeta_of_t.size(); ++i) {
    if (!(zeta_of_t[i][0] > zeta_of_t[i - 1][0]) || zeta_of_t[i][1] > zeta_of_t[i - 1][1]) {
      throw Error("KLFun::product: zeta must be decreasing over increasing t");
    }
  }
  KLFun b;
  b.kind_ = Kind::Product;
  b.zeta_ = std::move(zeta_of_t);
  b.of_r_ = std::move(of_r);
  return b;
}

double KLFun::operator()(double r, double t) const {
  if (r < 0.0 || t < 0.0) throw NegativeArgument("KLFun: negative argument");
  if (kind_ == Kind::ExpEnvelope) return M_ * std::exp(-a_ * t) * r;
  double z;
  if (t >= zeta_.back()[0]) {
    z = zeta_.back()[1];
  } else if (t <= zeta_.front()[0]) {
    z = zeta_.front()[1];
  } else {
    auto it = std::upper_bound(zeta_.begin(), zeta_.end(), t,
                               [](double x, const std::array<double, 2>& p) { return x < p[0]; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double s = (t - lo[0]) / (hi[0] - lo[0]);
    z = lo[1] + s * (hi[1] - lo[1]);
  }
  return z * of_r_(r);
}

}  // namespace isskit
