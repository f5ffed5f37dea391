#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "spmm/error.hpp"
#include "spmm/fuzzy.hpp"

using namespace spmm;
using MF = MembershipFunction;

namespace {

// Reference shapes written out piecewise, independent of the library.
double ref_tri(double a, double b, double c, double x) {
  if (x == b) return 1.0;
  if (x < a || x > c) return 0.0;
  return x < b ? (x - a) / (b - a) : (c - x) / (c - b);
}

double ref_z(double a, double b, double x) {
  if (x <= a) return 1.0;
  if (x >= b) return 0.0;
  const double m = 0.5 * (a + b);
  if (x <= m) return 1.0 - 2.0 * std::pow((x - a) / (b - a), 2);
  return 2.0 * std::pow((x - b) / (b - a), 2);
}

double ref_s(double a, double b, double x) { return 1.0 - ref_z(a, b, x); }

double centroid(const std::function<double(double)>& mu, double lo, double hi, int n) {
  const double w = (hi - lo) / n;
  double num = 0, den = 0;
  for (int i = 0; i < n; ++i) {
    const double x = lo + (i + 0.5) * w;
    num += x * mu(x);
    den += mu(x);
  }
  return den > 0 ? num / den : 0.5 * (lo + hi);
}

// Default likelihood by hand: min-AND, max aggregation, clipped triangles.
double ref_default(double pd, double he, int samples) {
  pd = std::clamp(pd, 0.0, 100.0);
  he = std::clamp(he, 0.0, 180.0);
  const double sh = ref_z(10, 40, pd), lg = ref_s(10, 40, pd);
  const double sm = ref_z(15, 60, he), la = ref_s(15, 60, he);
  const double high = std::min(sh, sm);
  const double avg = std::max(std::min(sh, la), std::min(lg, sm));
  const double low = std::min(lg, la);
  auto mu = [&](double x) {
    return std::max({std::min(low, ref_tri(0, 0, 50, x)), std::min(avg, ref_tri(25, 50, 75, x)),
                     std::min(high, ref_tri(50, 100, 100, x))});
  };
  return centroid(mu, 0, 100, samples);
}

}  // namespace

TEST_CASE("membership shapes") {
  const auto t = MF::triangular(0, 10, 20);
  CHECK(t(10) == 1.0);
  CHECK(t(15) == 0.5);
  CHECK(t(-1) == 0.0);
  CHECK(t(25) == 0.0);
  CHECK(MF::triangular(0, 0, 50)(0) == 1.0);
  CHECK(MF::triangular(50, 100, 100)(100) == 1.0);

  const auto tr = MF::trapezoidal(0, 10, 20, 40);
  CHECK(tr(15) == 1.0);
  CHECK(tr(30) == 0.5);

  const auto z = MF::z_shaped(10, 40), s = MF::s_shaped(10, 40);
  CHECK(z(10) == 1.0);
  CHECK(z(25) == doctest::Approx(0.5));
  CHECK(z(40) == 0.0);
  CHECK(s(25) == doctest::Approx(0.5));

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> x(-50, 150);
  for (int i = 0; i < 1000; ++i) {
    const double v = x(rng);
    REQUIRE(z(v) == doctest::Approx(ref_z(10, 40, v)).epsilon(1e-12));
    REQUIRE(z(v) + s(v) == doctest::Approx(1.0));
    REQUIRE(t(v) == doctest::Approx(ref_tri(0, 10, 20, v)));
    for (double m : {t(v), tr(v), z(v), s(v)}) {
      REQUIRE(m >= 0.0);
      REQUIRE(m <= 1.0);
    }
  }

  CHECK_THROWS_AS(MF::triangular(5, 1, 10), DomainError);
  CHECK_THROWS_AS(MF::trapezoidal(0, 3, 2, 4), DomainError);
  CHECK_THROWS_AS(MF::z_shaped(4, 4), DomainError);
}

TEST_CASE("variables clamp and must cover their universe") {
  const auto rb = default_rule_base();
  const auto& pd = rb.inputs()[0];
  CHECK(pd.membership("long", 500) == 1.0);
  CHECK(pd.membership("short", 500) == 0.0);
  CHECK(pd.clamp(-3) == 0.0);
  const auto m = pd.fuzzify(25);
  REQUIRE(m.size() == 2);
  CHECK(m[0] + m[1] == doctest::Approx(1.0));
  CHECK_THROWS_AS(pd.term_index("medium"), DomainError);

  CHECK_THROWS_AS(FuzzyVariable("gap", 0, 100,
                                {{"a", MF::triangular(0, 0, 30)}, {"b", MF::triangular(60, 100, 100)}}),
                  DomainError);
}

TEST_CASE("single rule at full strength gives the whole consequent") {
  const auto rb = default_rule_base();
  const std::vector<std::vector<double>> m{{1.0, 0.0}, {1.0, 0.0}};
  const auto agg = rb.infer(m);
  for (int i = 0; i <= 200; ++i) {
    const double x = i * 0.5;
    REQUIRE(agg(x) == doctest::Approx(ref_tri(50, 100, 100, x)));
  }
  CHECK(defuzzify_centroid(agg) == doctest::Approx(ref_default(0, 0, 201)).epsilon(1e-12));
}

TEST_CASE("no rule fires: midpoint") {
  const auto rb = default_rule_base();
  const std::vector<std::vector<double>> m{{0.0, 0.0}, {0.0, 0.0}};
  const auto agg = rb.infer(m);
  CHECK(agg.is_zero());
  CHECK(defuzzify_centroid(agg) == 50.0);
}

TEST_CASE("two rules at 0.6 and 0.3 match a 201-point hand discretization") {
  const auto rb = default_rule_base();
  // short 0.6, long 0.3, small 1: rule 1 fires 0.6 (high), rule 3 fires 0.3 (average).
  const std::vector<std::vector<double>> m{{0.6, 0.3}, {1.0, 0.0}};
  const auto fs = rb.firing_strengths(m);
  CHECK(fs == std::vector<double>{0.6, 0.0, 0.3, 0.0});
  const auto agg = rb.infer(m);
  auto ref = [](double x) {
    return std::max(std::min(0.6, ref_tri(50, 100, 100, x)), std::min(0.3, ref_tri(25, 50, 75, x)));
  };
  for (int i = 0; i < 201; ++i) {
    const double x = (i + 0.5) * 100.0 / 201;
    REQUIRE(agg(x) == doctest::Approx(ref(x)).epsilon(1e-12));
  }
  CHECK(defuzzify_centroid(agg) == doctest::Approx(centroid(ref, 0, 100, 201)).epsilon(1e-12));
  CHECK(std::abs(defuzzify_centroid(agg) - centroid(ref, 0, 100, 100001)) < 0.1);
}

TEST_CASE("centroid of a symmetric triangle and of a clipped trapezoid") {
  FuzzyVariable out("y", 0, 100,
                    {{"mid", MF::triangular(-10, 50, 110)}, {"trap", MF::trapezoidal(10, 30, 60, 95)}});
  FuzzyAggregate sym{&out, {1.0, 0.0}};
  CHECK(defuzzify_centroid(sym) == doctest::Approx(50.0).epsilon(1e-12));

  FuzzyAggregate clipped{&out, {0.0, 0.45}};
  auto trap = [](double x) {
    if (x > 10 && x < 30) return (x - 10) / 20;
    if (x >= 30 && x <= 60) return 1.0;
    if (x > 60 && x < 95) return (95 - x) / 35;
    return 0.0;
  };
  auto ref = [&](double x) { return std::min(0.45, trap(x)); };
  CHECK(std::abs(defuzzify_centroid(clipped) - centroid(ref, 0, 100, 100001)) < 0.1);

  FuzzyAggregate mixed{&out, {0.2, 0.7}};
  auto ref2 = [&](double x) {
    return std::max(std::min(0.2, ref_tri(-10, 50, 110, x)), std::min(0.7, trap(x)));
  };
  CHECK(std::abs(defuzzify_centroid(mixed) - centroid(ref2, 0, 100, 100001)) < 0.1);
}

TEST_CASE("rule weight scales the firing strength") {
  auto rb = default_rule_base();
  RuleBase weighted(rb.inputs(), rb.output());
  weighted.add_rule({{"pd", "short"}, {"he", "small"}}, "high", 0.5);
  const std::vector<std::vector<double>> m{{0.8, 0.2}, {1.0, 0.0}};
  CHECK(weighted.firing_strengths(m) == std::vector<double>{0.4});
  CHECK_THROWS_AS(weighted.add_rule({{"pd", "tiny"}}, "high"), DomainError);
  CHECK_THROWS_AS(weighted.add_rule({{"speed", "short"}}, "high"), DomainError);
  CHECK_THROWS_AS(weighted.add_rule({{"pd", "short"}}, "huge"), DomainError);
}

TEST_CASE("default rule base against the hand-built inference") {
  const auto rb = default_rule_base();
  auto eval = [&](double pd, double he) {
    const double in[2] = {pd, he};
    return rb.evaluate(in);
  };
  CHECK(eval(0, 0) >= 80.0);
  CHECK(eval(100, 180) <= 20.0);
  CHECK(eval(0, 0) == doctest::Approx(ref_default(0, 0, 201)).epsilon(1e-12));
  CHECK(eval(100, 180) == doctest::Approx(ref_default(100, 180, 201)).epsilon(1e-12));
  CHECK(eval(500, 400) == eval(100, 180));

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> pd(0, 120), he(0, 180);
  for (int i = 0; i < 1000; ++i) {
    const double a = pd(rng), b = he(rng);
    const double l = eval(a, b);
    REQUIRE(l == doctest::Approx(ref_default(a, b, 201)).epsilon(1e-9));
    REQUIRE(std::abs(l - ref_default(a, b, 100001)) < 0.1);
    REQUIRE(l >= 0.0);
    REQUIRE(l <= 100.0);
    REQUIRE(eval(a, b) == l);
  }
}

TEST_CASE("default likelihood is non-increasing in PD and in HE") {
  const auto rb = default_rule_base();
  double grid[50][50];
  for (int i = 0; i < 50; ++i) {
    for (int j = 0; j < 50; ++j) {
      const double in[2] = {i * 100.0 / 49, j * 180.0 / 49};
      grid[i][j] = rb.evaluate(in);
    }
  }
  constexpr double slack = 1e-9;
  for (int i = 0; i < 50; ++i) {
    for (int j = 0; j < 50; ++j) {
      if (i + 1 < 50) REQUIRE(grid[i + 1][j] <= grid[i][j] + slack);
      if (j + 1 < 50) REQUIRE(grid[i][j + 1] <= grid[i][j] + slack);
    }
  }
}
