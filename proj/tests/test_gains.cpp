#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "isskit/gains.hpp"

using namespace isskit;

namespace {

const double kPi = 3.14159265358979323846;

GainMatrix two_system(double c12, double c21) {
  GainMatrix g(2);
  g.set(0, 1, KFun::power(c12, 1));
  g.set(1, 0, KFun::power(c21, 1));
  return g;
}

// Random linear-gain instances with cycle products kept away from the
// decision boundary so the iteration probe terminates decisively.
GainMatrix random_instance(std::mt19937_64& rng, bool* expected_holds) {
  std::uniform_int_distribution<std::size_t> ndist(2, 5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = ndist(rng);
  const bool make_stable = u(rng) < 0.5;
  GainMatrix g(n);
  bool has_edge = false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || u(rng) < 0.45) continue;
      // Stable draws keep every per-edge coefficient below (0.9)^(1/n) so
      // that all cycle products stay below 0.9; unstable draws get one
      // boosted edge below to force a bad cycle.
      const double cap = std::pow(0.9, 1.0 / static_cast<double>(n));
      const double c = 0.05 + (cap - 0.05) * u(rng);
      g.set(i, j, KFun::power(c, 1));
      has_edge = true;
    }
  }
  if (!has_edge || make_stable) {
    *expected_holds = true;
    return g;
  }
  // Force a two-cycle whose product is comfortably above one.
  std::uniform_int_distribution<std::size_t> vdist(0, n - 1);
  std::size_t a = vdist(rng), b = vdist(rng);
  if (a == b) b = (a + 1) % n;
  g.set(a, b, KFun::power(1.6, 1));
  g.set(b, a, KFun::power(1.6, 1));
  *expected_holds = false;
  return g;
}

}  // namespace

TEST_CASE("gain operator application") {
  GainMatrix g = two_system(0.5, 2.0);

  SUBCASE("zero maps to zero") {
    const auto out = g.apply({0.0, 0.0});
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 0.0);
  }
  SUBCASE("componentwise max of cross gains") {
    const auto out = g.apply({1.0, 1.0});
    CHECK(out[0] == doctest::Approx(0.5));
    CHECK(out[1] == doctest::Approx(2.0));
  }
  SUBCASE("nonlinear interconnection gain at unit parameters") {
    // chi_12(r) = r / (c1^2 (pi/d)^4 (1-eps1)^2) with c1 = 1, d = pi, eps1 = 0.
    GainMatrix h(2);
    h.set(0, 1, KFun::power(1.0 / (1.0 * std::pow(kPi / kPi, 4.0)), 1.0));
    const auto out = h.apply({0.0, 1.0});
    CHECK(out[0] == doctest::Approx(1.0));
    CHECK(out[1] == 0.0);
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(g.apply({1.0}), DimensionMismatch);
  }
  SUBCASE("self-gain forbidden") {
    CHECK_THROWS_AS(g.set(0, 0, KFun::identity()), Error);
  }
}

TEST_CASE("gain operator is monotone and vanishes at zero") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  bool holds = false;
  for (int inst = 0; inst < 20; ++inst) {
    const GainMatrix g = random_instance(rng, &holds);
    const std::size_t n = g.size();
    const auto zero = g.apply(std::vector<double>(n, 0.0));
    for (double z : zero) CHECK(z == 0.0);
    for (int k = 0; k < 50; ++k) {
      std::vector<double> s(n), t(n);
      for (std::size_t i = 0; i < n; ++i) {
        s[i] = 10.0 * u(rng);
        t[i] = s[i] + 5.0 * u(rng);
      }
      const auto gs = g.apply(s);
      const auto gt = g.apply(t);
      for (std::size_t i = 0; i < n; ++i) CHECK(gs[i] <= gt[i]);
    }
  }
}

TEST_CASE("small-gain decision by cycle enumeration") {
  SUBCASE("two-cycle with composite coefficient 0.81 holds") {
    const Certificate cert = check_small_gain(two_system(0.9, 0.9));
    CHECK(cert.verdict);
    REQUIRE(cert.details["cycles"].size() == 1);
    CHECK(cert.details["cycles"][0]["coeff"].get<double>() == doctest::Approx(0.81));
    CHECK(cert.details["cycles"][0]["expo"].get<double>() == doctest::Approx(1.0));
    CHECK(cert.worst_margin == doctest::Approx(0.19));
    CHECK(cert.details["iteration_agrees"].get<bool>());
  }
  SUBCASE("no edges holds vacuously") {
    const Certificate cert = check_small_gain(GainMatrix(3));
    CHECK(cert.verdict);
    CHECK(cert.vacuous);
  }
  SUBCASE("three-ring with product 2 fails and the iteration oracle agrees") {
    GainMatrix g(3);
    g.set(1, 0, KFun::power(2, 1));
    g.set(2, 1, KFun::power(1, 1));
    g.set(0, 2, KFun::power(1, 1));
    const Certificate cert = check_small_gain(g);
    CHECK_FALSE(cert.verdict);
    CHECK_FALSE(cert.details["iteration_probe"].get<bool>());
    // Oracle: iterate from (1,1,1); the orbit grows.
    std::vector<double> s{1.0, 1.0, 1.0};
    for (int it = 0; it < 64; ++it) s = g.apply(s);
    CHECK(*std::max_element(s.begin(), s.end()) > 1e6);
  }
  SUBCASE("non-unit composite exponent fails globally, may hold on a range") {
    GainMatrix g(2);
    g.set(0, 1, KFun::power(0.1, 2));
    g.set(1, 0, KFun::power(0.1, 1));
    const Certificate cert = check_small_gain(g);
    CHECK_FALSE(cert.verdict);
    CHECK(cert.details["cycles"][0]["holds_on_range"].get<bool>() ==
          less_than_id(compose(KFun::power(0.1, 2), KFun::power(0.1, 1)), Interval{1e-6, 1e6}));
  }
}

TEST_CASE("two-system criterion reduces to the composed-gain test") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> c(0.1, 2.0);
  std::uniform_real_distribution<double> p(0.5, 2.0);
  for (int k = 0; k < 100; ++k) {
    GainMatrix g(2);
    const KFun f12 = KFun::power(c(rng), p(rng));
    const KFun f21 = KFun::power(c(rng), p(rng));
    g.set(0, 1, f12);
    g.set(1, 0, f21);
    const SmallGainOptions opts{.run_iteration_probe = false};
    CHECK(check_small_gain(g, opts).verdict == less_than_id(compose(f12, f21)));
  }
}

TEST_CASE("cycle decision agrees with the iteration oracle on random instances") {
  std::mt19937_64 rng(2024);
  int checked = 0;
  for (int k = 0; k < 60; ++k) {
    bool expected = false;
    const GainMatrix g = random_instance(rng, &expected);
    SmallGainOptions opts;
    opts.run_iteration_probe = false;
    const Certificate cert = check_small_gain(g, opts);
    CHECK(cert.verdict == expected);
    CHECK(small_gain_iteration_probe(g) == cert.verdict);
    ++checked;
  }
  CHECK(checked == 60);
}

TEST_CASE("omega path construction") {
  SUBCASE("symmetric half gains collapse to the identity path") {
    OmegaPath path = build_omega_path(two_system(0.5, 0.5));
    REQUIRE(path.sigmas.size() == 2);
    for (double t : {0.1, 1.0, 10.0}) {
      CHECK(path.sigmas[0](t) == doctest::Approx(t).epsilon(1e-14));
      CHECK(path.sigmas[1](t) == doctest::Approx(t).epsilon(1e-14));
    }
  }
  SUBCASE("asymmetric gains: hand-evaluated Q") {
    // Q(a t) = (max(t, 2t), max(t, 0.25t)) = (2t, t).
    OmegaPath path = build_omega_path(two_system(2.0, 0.25));
    for (double t : {0.02, 0.7, 40.0}) {
      CHECK(path.sigmas[0](t) == doctest::Approx(2.0 * t).epsilon(1e-14));
      CHECK(path.sigmas[1](t) == doctest::Approx(t).epsilon(1e-14));
    }
  }
  SUBCASE("single system without gains gets the anchor ray") {
    OmegaPath path = build_omega_path(GainMatrix(1), std::vector<double>{3.0});
    CHECK(path.sigmas[0](2.0) == doctest::Approx(6.0));
  }
  SUBCASE("refuses to construct when small gain fails") {
    CHECK_THROWS_AS(build_omega_path(two_system(2.0, 1.0)), SmallGainViolated);
  }
}

TEST_CASE("omega path verification") {
  SUBCASE("constructed paths pass") {
    GainMatrix g = two_system(2.0, 0.25);
    OmegaPath path = build_omega_path(g);
    const Certificate cert = verify_omega_path(g, path);
    CHECK(cert.verdict);
    CHECK(path.verified);
  }
  SUBCASE("identity path fails against an expanding gain") {
    GainMatrix g(2);
    g.set(0, 1, KFun::power(2, 1));
    OmegaPath path;
    path.sigmas = {KFun::identity(), KFun::identity()};
    const Certificate cert = verify_omega_path(g, path);
    CHECK_FALSE(cert.verdict);
    CHECK_FALSE(path.verified);
    CHECK(cert.worst_margin == doctest::Approx(-1.0));  // (r - 2r)/r
  }
  SUBCASE("zero gain matrix passes any K-infinity path") {
    GainMatrix g(2);
    OmegaPath path;
    path.sigmas = {KFun::power(3, 1.2), KFun::power(0.5, 0.7)};
    const Certificate cert = verify_omega_path(g, path);
    CHECK(cert.verdict);
  }
}

TEST_CASE("constructed paths verify across random admissible instances") {
  std::mt19937_64 rng(4242);
  int built = 0;
  for (int k = 0; k < 40; ++k) {
    bool expected = false;
    GainMatrix g = random_instance(rng, &expected);
    if (!expected) {
      CHECK_THROWS_AS(build_omega_path(g), SmallGainViolated);
      continue;
    }
    OmegaPath path = build_omega_path(g);
    const Certificate cert = verify_omega_path(g, path);
    CHECK(cert.verdict);
    ++built;
  }
  CHECK(built > 5);
}

TEST_CASE("mixed-exponent acyclic gains still build exact paths") {
  GainMatrix g(3);
  g.set(0, 1, KFun::power(2.0, 2.0));   // quadratic, off-cycle
  g.set(1, 2, KFun::power(0.5, 0.5));   // square root, off-cycle
  OmegaPath path = build_omega_path(g);
  Certificate cert = verify_omega_path(g, path);
  CHECK(cert.verdict);
  // sigma_1 must dominate both the anchor ray and the composed influence.
  CHECK(path.sigmas[0](4.0) >= doctest::Approx(2.0 * std::pow(path.sigmas[1](4.0), 2.0)));
}
