#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "isskit/errors.hpp"

namespace isskit {

/// Half-open argument range (lo, hi) for sampled decisions on comparison
/// functions. lo <= 0 together with hi == inf denotes all of (0, inf).
struct Interval {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();

  static Interval positive_global() { return {0.0, std::numeric_limits<double>::infinity()}; }
  bool is_global() const { return lo <= 0.0 && std::isinf(hi); }
};

/// Default grid used whenever an operation has to fall back to tabulation:
/// log-spaced points covering all desk-scale magnitudes.
struct TabulationGrid {
  double lo = 1e-6;
  double hi = 1e6;
  std::size_t n = 512;
};

/// A class-K comparison function: continuous, strictly increasing, zero at
/// zero. Three representations are supported:
///
///   PowerLaw        coeff * r^expo with coeff, expo > 0 (always K-infinity)
///   PiecewisePower  continuous upper/lower envelopes of power laws, produced
///                   by compose/invert/max when exponents mix; exact algebra
///   Tabulated       user-supplied strictly increasing sample table with
///                   linear interpolation, first point (0, 0)
///
/// PowerLaw and PiecewisePower values are closed under composition,
/// inversion and pointwise max/min, so gain arithmetic stays exact whenever
/// the inputs are power laws. Any Tabulated operand degrades the result to
/// Tabulated via evaluation on a shared grid.
///
/// Instances are immutable after construction and safe to share across
/// threads.
class KFun {
 public:
  enum class Kind { PowerLaw, PiecewisePower, Tabulated };

  /// One power-law piece, active on [r_lo, next r_lo).
  struct Segment {
    double r_lo;
    double coeff;
    double expo;
  };

  KFun() : segments_{{0.0, 1.0, 1.0}} {}

  static KFun power(double coeff, double expo);
  static KFun identity() { return power(1.0, 1.0); }
  /// Segments must be sorted by r_lo with segments[0].r_lo == 0.
  static KFun piecewise(std::vector<Segment> segments);
  /// Points must be strictly increasing in both coordinates, points[0] == (0,0).
  static KFun table(std::vector<std::array<double, 2>> points);

  Kind kind() const;
  bool is_power_law() const { return kind() == Kind::PowerLaw; }
  bool is_tabulated() const { return kind() == Kind::Tabulated; }

  /// PowerLaw accessors; only valid when is_power_law().
  double coeff() const;
  double expo() const;

  const std::vector<Segment>& segments() const { return segments_; }
  const std::vector<std::array<double, 2>>& points() const { return points_; }

  /// Evaluates f(r). Throws NegativeArgument for r < 0 and OutOfTableRange
  /// when a Tabulated function is queried beyond its last node.
  double operator()(double r) const;

  /// One-sided derivative at r (right-sided on breakpoints).
  double derivative(double r) const;

  /// Largest argument this function can be evaluated at (inf unless Tabulated).
  double max_argument() const;
  /// Largest value the function attains on its domain (inf unless Tabulated).
  double max_value() const;
  /// Structurally K-infinity: unbounded range.
  bool is_unbounded() const { return !is_tabulated(); }

 private:
  std::vector<Segment> segments_;               // empty iff Tabulated
  std::vector<std::array<double, 2>> points_;   // empty unless Tabulated
};

/// f after g: returns r -> f(g(r)). Exact (PiecewisePower) unless an operand
/// is Tabulated, in which case the result is tabulated on a shared grid.
KFun compose(const KFun& f, const KFun& g, const TabulationGrid& grid = {});

/// Inverse of a K-infinity function. For power laws the closed form
/// coeff^(-1/expo) * r^(1/expo); for tables, the coordinate swap (exact for
/// linear interpolation). A bounded table only inverts on its value range;
/// evaluation beyond it throws OutOfTableRange.
KFun invert(const KFun& f);

/// Upper envelope max_i f_i. Power laws with a common exponent collapse back
/// to a single power law; mixed exponents yield an exact piecewise-power
/// envelope; any Tabulated operand yields a Tabulated result. Throws
/// EmptyList on an empty input.
KFun pointwise_max(const std::vector<KFun>& fs, const TabulationGrid& grid = {});

/// Lower envelope min_i f_i (same representation rules as pointwise_max).
KFun pointwise_min(const std::vector<KFun>& fs, const TabulationGrid& grid = {});

/// Decides f < Id on r_range. Exact for PowerLaw/PiecewisePower on the
/// global range (0, inf); otherwise sampled at n_samples log-spaced points
/// with relative slack kLessThanIdSlack in favour of rejection (the
/// small-gain condition is strict, so marginal cases fail). Throws
/// DegenerateRange for an empty or nonpositive bounded range.
inline constexpr double kLessThanIdSlack = 1e-9;
bool less_than_id(const KFun& f, Interval r_range = Interval::positive_global(),
                  std::size_t n_samples = 256);

/// A class-KL envelope beta(r, t): class K in r for fixed t, decreasing to
/// zero in t for fixed r. ExpEnvelope is M e^{-a t} r; Product is a
/// decreasing-to-zero table in t times a KFun in r.
class KLFun {
 public:
  enum class Kind { ExpEnvelope, Product };

  static KLFun exp_envelope(double M, double a);
  static KLFun product(std::vector<std::array<double, 2>> zeta_of_t, KFun of_r);

  Kind kind() const { return kind_; }
  double M() const { return M_; }
  double rate() const { return a_; }

  double operator()(double r, double t) const;

 private:
  Kind kind_ = Kind::ExpEnvelope;
  double M_ = 1.0;
  double a_ = 1.0;
  std::vector<std::array<double, 2>> zeta_;
  KFun of_r_;
};

}  // namespace isskit
