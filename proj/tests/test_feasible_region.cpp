#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <vector>

#include "fixtures.hpp"
#include "optdesign/feasible_region.hpp"
#include "optdesign/rng.hpp"

using namespace optdesign;
using Catch::Approx;

TEST_CASE("is_feasible basics") {
  const LinearConstraintSet cs = fixtures::trial_constraints();
  CHECK(is_feasible(std::vector<double>{0.25, 0.2, 0.05, 0.5, 0, 0}, cs));
  CHECK_FALSE(is_feasible(std::vector<double>{0.3, 0.2, 0.05, 0.45, 0, 0}, cs));

  const LinearConstraintSet s0 = LinearConstraintSet::simplex_only(3);
  CHECK_FALSE(is_feasible(std::vector<double>{0.3, 0.3, 0.3}, s0));  // off the simplex
  CHECK(is_feasible(std::vector<double>{0.3, 0.3, 0.4}, s0));
  CHECK_FALSE(is_feasible(std::vector<double>{0.5, 0.6, -0.1}, s0));
}

TEST_CASE("liftone_interval on the bare simplex is [0, 1]") {
  const LinearConstraintSet s0 = LinearConstraintSet::simplex_only(3);
  const Interval iv = liftone_interval(0, std::vector<double>{0.2, 0.3, 0.5}, s0);
  CHECK_FALSE(iv.empty);
  CHECK(iv.lo == Approx(0.0).margin(1e-14));
  CHECK(iv.hi == Approx(1.0).margin(1e-14));
}

TEST_CASE("liftone_interval reproduces the published case formula") {
  const LinearConstraintSet cs = fixtures::small_logistic_constraints();
  const std::vector<double> w{1.0 / 6, 1.0 / 6, 2.0 / 3};
  const Interval iv = liftone_interval(0, w, cs);
  REQUIRE_FALSE(iv.empty);
  // r_11 = max{-4, -0.25, 1/6}, r_12 = min{1/6, 1/3}
  CHECK(iv.lo == Approx(1.0 / 6).margin(1e-12));
  CHECK(iv.hi == Approx(1.0 / 6).margin(1e-12));
}

TEST_CASE("liftone_interval agrees with the hand-coded closures") {
  SECTION("trial bounds") {
    const LinearConstraintSet cs = fixtures::trial_constraints();
    Rng rng(101);
    int checked = 0;
    while (checked < 100) {
      const std::vector<double> w = random_feasible(cs, rng.bits());
      for (std::size_t i = 0; i < 6; ++i) {
        const Interval iv = liftone_interval(i, w, cs);
        REQUIRE_FALSE(iv.empty);
        CHECK(iv.lo == Approx(fixtures::trial_lower_bound(i, w)).margin(1e-9));
        CHECK(iv.hi == Approx(fixtures::trial_upper_bound(i, w)).margin(1e-9));
      }
      ++checked;
    }
  }

  SECTION("case formulas for the vertex-constrained logistic set") {
    const LinearConstraintSet cs = fixtures::small_logistic_constraints();
    Rng rng(103);
    int checked = 0;
    while (checked < 100) {
      const std::vector<double> w = random_feasible(cs, rng.bits());
      if (w[0] <= 1e-6 || w[1] <= 1e-6) continue;  // the closures divide by these
      for (std::size_t i = 0; i < 3; ++i) {
        const Interval iv = liftone_interval(i, w, cs);
        REQUIRE_FALSE(iv.empty);
        CHECK(iv.lo == Approx(fixtures::s2_lower_bound(i, w)).margin(1e-9));
        CHECK(iv.hi == Approx(fixtures::s2_upper_bound(i, w)).margin(1e-9));
      }
      ++checked;
    }
  }
}

TEST_CASE("liftone_interval always contains the current weight") {
  const LinearConstraintSet cs = fixtures::trial_constraints();
  Rng rng(107);
  for (int rep = 0; rep < 50; ++rep) {
    const std::vector<double> w = random_feasible(cs, rng.bits());
    for (std::size_t i = 0; i < w.size(); ++i) {
      const Interval iv = liftone_interval(i, w, cs);
      REQUIRE_FALSE(iv.empty);
      CHECK(w[i] >= iv.lo - 1e-10);
      CHECK(w[i] <= iv.hi + 1e-10);
    }
  }
}

TEST_CASE("lp_maximize basics") {
  const LinearConstraintSet s0 = LinearConstraintSet::simplex_only(3);
  const LpResult r = lp_maximize(std::vector<double>{1, 0, 0}, s0);
  CHECK(r.value == Approx(1.0));
  CHECK(r.x[0] == Approx(1.0));
  CHECK(r.x[1] == Approx(0.0).margin(1e-12));

  // contradictory rows have no feasible point
  LinearConstraintSet infeasible(2);
  infeasible.add({1, 0}, Dir::ge, 0.8);
  infeasible.add({0, 1}, Dir::ge, 0.8);
  CHECK_THROWS_AS(lp_maximize(std::vector<double>{1, 1}, infeasible), InfeasibleError);
  CHECK_THROWS_AS(require_feasible(infeasible), InfeasibleError);
}

TEST_CASE("lp_maximize dominates every sampled feasible point") {
  const LinearConstraintSet cs = fixtures::trial_constraints();
  Rng rng(109);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<double> c(6);
    for (double& v : c) v = rng.normal();
    const LpResult r = lp_maximize(c, cs);
    CHECK(is_feasible(r.x, cs, 1e-8));
    for (int probe = 0; probe < 100; ++probe) {
      const std::vector<double> w = random_feasible(cs, rng.bits());
      const double val = std::inner_product(c.begin(), c.end(), w.begin(), 0.0);
      CHECK(r.value >= val - 1e-9);
    }
  }
}

TEST_CASE("lp_maximize is deterministic") {
  const LinearConstraintSet cs = fixtures::trial_constraints();
  const std::vector<double> c{0.3, -0.1, 0.7, 0.2, -0.5, 0.05};
  const LpResult a = lp_maximize(c, cs);
  const LpResult b = lp_maximize(c, cs);
  CHECK(a.value == b.value);
  for (std::size_t i = 0; i < 6; ++i) CHECK(a.x[i] == b.x[i]);
}

TEST_CASE("random_feasible properties") {
  SECTION("feasible over many seeds") {
    const LinearConstraintSet cs = fixtures::trial_constraints();
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const std::vector<double> w = random_feasible(cs, seed);
      CHECK(is_feasible(w, cs, 1e-8));
    }
  }

  SECTION("deterministic per seed") {
    const LinearConstraintSet cs = fixtures::small_logistic_constraints();
    const auto a = random_feasible(cs, 42);
    const auto b = random_feasible(cs, 42);
    for (std::size_t i = 0; i < 3; ++i) CHECK(a[i] == b[i]);
  }

  SECTION("equality-pinned region returns its single point") {
    LinearConstraintSet cs(3);
    cs.add({1, 0, 0}, Dir::eq, 0.2);
    cs.add({0, 1, 0}, Dir::eq, 0.3);
    const std::vector<double> w = random_feasible(cs, 7);
    CHECK(w[0] == Approx(0.2).margin(1e-10));
    CHECK(w[1] == Approx(0.3).margin(1e-10));
    CHECK(w[2] == Approx(0.5).margin(1e-10));
  }

  SECTION("interior point of the bare simplex") {
    const LinearConstraintSet s0 = LinearConstraintSet::simplex_only(3);
    const std::vector<double> w = random_feasible(s0, 11);
    double sum = 0.0;
    for (double v : w) {
      CHECK(v > 0.0);
      sum += v;
    }
    CHECK(sum == Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("constraint-set validation") {
  LinearConstraintSet cs(3);
  CHECK_THROWS_AS(cs.add({1, 0}, Dir::le, 0.5), DimensionError);
  CHECK_THROWS_AS(cs.add({1, 0, std::nan("")}, Dir::le, 0.5), DimensionError);
}
