#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "isskit/kfun.hpp"

using namespace isskit;

namespace {
const double kPi = 3.14159265358979323846;
}

TEST_CASE("power-law evaluation") {
  CHECK(KFun::power(1, 1)(0.0) == 0.0);
  CHECK(KFun::power(2, 0.5)(9.0) == doctest::Approx(6.0).epsilon(1e-15));

  // Gain of the semilinear example, a * pi^((1-m)/2) * r^m, at a=2, m=1:
  // the pi power collapses to 1 and the gain is linear.
  const double a = 2.0, m = 1.0;
  const KFun chi = KFun::power(a * std::pow(kPi, (1.0 - m) / 2.0), m);
  CHECK(chi(3.0) == doctest::Approx(6.0).epsilon(1e-15));

  CHECK_THROWS_AS(KFun::power(2, 1)(-1.0), NegativeArgument);
  CHECK_THROWS_AS(KFun::power(0, 1), Error);
}

TEST_CASE("tabulated evaluation and range errors") {
  const KFun f = KFun::table({{0, 0}, {1, 2}, {3, 5}});
  CHECK(f(0.0) == 0.0);
  CHECK(f(0.5) == doctest::Approx(1.0));
  CHECK(f(2.0) == doctest::Approx(3.5));
  CHECK(f(3.0) == doctest::Approx(5.0));
  CHECK_THROWS_AS(f(3.5), OutOfTableRange);
  CHECK_THROWS_AS(KFun::table({{0, 0}, {1, 1}, {1, 2}}), Error);
  CHECK_THROWS_AS(KFun::table({{0.5, 0}, {1, 1}}), Error);
}

TEST_CASE("compose: power laws stay power laws") {
  const KFun lin = compose(KFun::power(2, 1), KFun::power(3, 1));
  CHECK(lin.is_power_law());
  CHECK(lin.coeff() == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(lin.expo() == doctest::Approx(1.0).epsilon(1e-15));

  const KFun f = KFun::power(2, 2);
  const KFun g = KFun::power(3, 0.5);
  const KFun fg = compose(f, g);
  CHECK(fg.is_power_law());
  CHECK(fg.coeff() == doctest::Approx(18.0).epsilon(1e-12));
  CHECK(fg.expo() == doctest::Approx(1.0).epsilon(1e-12));
  for (double r : {0.1, 1.0, 10.0}) {
    CHECK(fg(r) == doctest::Approx(f(g(r))).epsilon(1e-12));
  }

  const KFun h = KFun::power(1.7, 1.3);
  const KFun hid = compose(h, KFun::identity());
  CHECK(hid.coeff() == doctest::Approx(h.coeff()).epsilon(1e-15));
  CHECK(hid.expo() == doctest::Approx(h.expo()).epsilon(1e-15));
}

TEST_CASE("compose is associative on power laws") {
  const KFun f = KFun::power(0.7, 1.4);
  const KFun g = KFun::power(2.3, 0.6);
  const KFun h = KFun::power(1.1, 2.0);
  const KFun lhs = compose(compose(f, g), h);
  const KFun rhs = compose(f, compose(g, h));
  for (double r = 1e-3; r <= 1e3; r *= 3.7) {
    CHECK(lhs(r) == doctest::Approx(rhs(r)).epsilon(1e-12));
  }
}

TEST_CASE("invert: closed form and round trip") {
  const KFun f = KFun::power(4, 2);
  const KFun fi = invert(f);
  CHECK(fi.coeff() == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(fi.expo() == doctest::Approx(0.5).epsilon(1e-14));
  for (double r : {0.5, 2.0, 7.0}) {
    CHECK(fi(f(r)) == doctest::Approx(r).epsilon(1e-12));
  }

  const KFun id = invert(KFun::identity());
  CHECK(id.coeff() == doctest::Approx(1.0));
  CHECK(id.expo() == doctest::Approx(1.0));

  const KFun li = invert(KFun::power(2, 1));
  CHECK(li.coeff() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(li.expo() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("invert of a composition equals reversed composition of inverses") {
  const KFun f = KFun::power(3.0, 1.5);
  const KFun g = KFun::power(0.4, 0.8);
  const KFun lhs = invert(compose(f, g));
  const KFun rhs = compose(invert(g), invert(f));
  for (double r = 1e-2; r <= 1e2; r *= 2.9) {
    CHECK(lhs(r) == doctest::Approx(rhs(r)).epsilon(1e-10));
  }
}

TEST_CASE("pointwise max") {
  SUBCASE("same exponent collapses to one power law") {
    const KFun m = pointwise_max({KFun::power(2, 1), KFun::power(3, 1)});
    CHECK(m.is_power_law());
    CHECK(m.coeff() == doctest::Approx(3.0));
    CHECK(m.expo() == doctest::Approx(1.0));
  }
  SUBCASE("mixed exponents give the exact upper envelope") {
    const KFun m = pointwise_max({KFun::power(1, 1), KFun::power(1, 2)});
    CHECK(m.kind() == KFun::Kind::PiecewisePower);
    CHECK(m(0.5) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(m(2.0) == doctest::Approx(4.0).epsilon(1e-14));
    // Crossing sits exactly at r = 1.
    CHECK(m(1.0) == doctest::Approx(1.0).epsilon(1e-12));
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int k = 0; k < 200; ++k) {
      const double r = std::pow(10.0, u(rng));
      CHECK(m(r) == doctest::Approx(std::max(r, r * r)).epsilon(1e-12));
    }
  }
  SUBCASE("singleton") {
    const KFun f = KFun::power(1.3, 0.7);
    const KFun m = pointwise_max({f});
    CHECK(m(2.0) == doctest::Approx(f(2.0)));
  }
  SUBCASE("empty list throws") {
    CHECK_THROWS_AS(pointwise_max({}), EmptyList);
  }
}

TEST_CASE("pointwise min is the lower envelope") {
  const KFun m = pointwise_min({KFun::power(1, 1), KFun::power(1, 2)});
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int k = 0; k < 200; ++k) {
    const double r = std::pow(10.0, u(rng));
    CHECK(m(r) == doctest::Approx(std::min(r, r * r)).epsilon(1e-12));
  }
}

TEST_CASE("less_than_id") {
  CHECK(less_than_id(KFun::power(0.81, 1)));
  CHECK_FALSE(less_than_id(KFun::power(1.0, 1)));
  // Oracle: f(r) = 0.5 r^2 exceeds Id at r = 4 (f(4) = 8 > 4).
  CHECK_FALSE(less_than_id(KFun::power(0.5, 2)));
  CHECK(less_than_id(KFun::power(0.5, 2), Interval{1e-3, 1.0}));
  CHECK_FALSE(less_than_id(KFun::power(0.5, 2), Interval{1.0, 10.0}));
  CHECK_THROWS_AS(less_than_id(KFun::power(0.5, 2), Interval{-1.0, 2.0}), DegenerateRange);

  const KFun tab = KFun::table({{0, 0}, {1, 0.5}, {10, 5}});
  CHECK(less_than_id(tab, Interval{1e-3, 10.0}));
}

TEST_CASE("strict monotonicity on random pairs") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> u(-4, 4);
  const std::vector<KFun> fs = {
      KFun::power(2.5, 1.0),
      KFun::power(0.3, 2.2),
      pointwise_max({KFun::power(1, 1), KFun::power(1, 2), KFun::power(4, 0.5)}),
      compose(KFun::power(2, 1.5), pointwise_max({KFun::power(1, 1), KFun::power(0.2, 2)})),
      KFun::table({{0, 0}, {0.5, 0.1}, {2, 3}, {10, 11}}),
  };
  for (const auto& f : fs) {
    for (int k = 0; k < 1000; ++k) {
      double r1 = std::pow(10.0, u(rng));
      double r2 = std::pow(10.0, u(rng));
      if (r1 == r2) continue;
      if (r1 > r2) std::swap(r1, r2);
      if (r2 > f.max_argument()) continue;
      CHECK(f(r1) < f(r2));
    }
  }
}

TEST_CASE("less_than_id implies iterated contraction") {
  std::mt19937_64 rng(321);
  std::uniform_real_distribution<double> cdist(0.05, 0.99);
  std::uniform_real_distribution<double> rdist(-3, 3);
  for (int k = 0; k < 50; ++k) {
    const KFun f = KFun::power(cdist(rng), 1.0);
    REQUIRE(less_than_id(f));
    const double r0 = std::pow(10.0, rdist(rng));
    double r = r0;
    bool shrank = false;
    for (int it = 0; it < 10000; ++it) {
      r = f(r);
      if (r < 1e-6 * r0) {
        shrank = true;
        break;
      }
    }
    CHECK(shrank);
  }
}

TEST_CASE("piecewise inversion round trip") {
  const KFun m = pointwise_max({KFun::power(1, 1), KFun::power(1, 2), KFun::power(3, 0.5)});
  const KFun mi = invert(m);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-4, 4);
  for (int k = 0; k < 300; ++k) {
    const double r = std::pow(10.0, u(rng));
    CHECK(mi(m(r)) == doctest::Approx(r).epsilon(1e-10));
  }
}

TEST_CASE("tabulated operands degrade gracefully") {
  const KFun tab = KFun::table({{0, 0}, {1, 1}, {2, 4}, {4, 16}});
  const KFun pow2 = KFun::power(1, 2);
  const KFun c = compose(tab, pow2);
  CHECK(c.is_tabulated());
  CHECK(c(1.0) == doctest::Approx(tab(1.0)).epsilon(1e-12));
  const KFun m = pointwise_max({tab, KFun::power(0.5, 1)});
  CHECK(m.is_tabulated());
  CHECK(m(2.0) == doctest::Approx(4.0).epsilon(1e-9));
  const KFun ti = invert(tab);
  CHECK(ti(16.0) == doctest::Approx(4.0));
  CHECK(ti(2.5) == doctest::Approx(1.5));  // linear interpolation inverts exactly
}

TEST_CASE("KL envelopes") {
  const KLFun b = KLFun::exp_envelope(2.0, 0.5);
  CHECK(b(3.0, 0.0) == doctest::Approx(6.0));
  CHECK(b(3.0, 2.0) == doctest::Approx(6.0 * std::exp(-1.0)));
  // Class K in r for fixed t, decreasing in t for fixed r.
  CHECK(b(0.0, 1.0) == 0.0);
  CHECK(b(2.0, 1.0) < b(3.0, 1.0));
  CHECK(b(3.0, 2.0) < b(3.0, 1.0));

  const KLFun p = KLFun::product({{0, 1}, {1, 0.5}, {10, 0}}, KFun::power(2, 1));
  CHECK(p(1.0, 0.0) == doctest::Approx(2.0));
  CHECK(p(1.0, 1.0) == doctest::Approx(1.0));
  CHECK(p(1.0, 20.0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(KLFun::product({{0, 0.5}, {1, 1.0}}, KFun::identity()), Error);
}
