#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <vector>

#include "fixtures.hpp"
#include "optdesign/optdesign.hpp"

using namespace optdesign;
using Catch::Approx;

namespace {

// Exhaustive search over the simplex grid with the given step, filtered by
// feasibility; the independent optimum oracle for small problems.
double grid_search_best(const std::vector<Matrix>& fis, const LinearConstraintSet& cs,
                        int steps) {
  const std::size_t m = fis.size();
  double best = 0.0;
  std::vector<int> k(m, 0);
  std::vector<double> w(m);
  const auto eval = [&]() {
    for (std::size_t j = 0; j < m; ++j) w[j] = static_cast<double>(k[j]) / steps;
    if (!is_feasible(w, cs, 1e-9)) return;
    best = std::max(best, determinant(weighted_matrix_sum(fis, w)));
  };
  // enumerate compositions of `steps` into m parts
  const std::function<void(std::size_t, int)> rec = [&](std::size_t pos, int left) {
    if (pos + 1 == m) {
      k[pos] = left;
      eval();
      return;
    }
    for (int take = 0; take <= left; ++take) {
      k[pos] = take;
      rec(pos + 1, left - take);
    }
  };
  rec(0, steps);
  return best;
}

}  // namespace

TEST_CASE("unconstrained lift-one solves the three-point logistic problem") {
  const DesignProblem prob{fixtures::small_logistic(), {}};
  OptimOptions opts;
  opts.random = false;
  opts.w00 = std::vector<double>{1.0 / 6, 1.0 / 6, 2.0 / 3};
  const OptimResult res = liftone(prob, opts);
  for (double v : res.w) CHECK(v == Approx(1.0 / 3).margin(1e-6));
  CHECK(res.maximum == Approx(0.0077).margin(5e-4));
  CHECK(res.convergence);
  CHECK(res.itmax <= 7);
  CHECK(res.maximum == Approx(fisher_det(prob, ApproximateAllocation(res.w))).epsilon(1e-9));
}

TEST_CASE("two-point symmetric problem splits evenly") {
  GlmProblem glm;
  glm.link = Link::logit;
  glm.X = Matrix(2, 2, {1, 1, 1, -1});
  glm.beta = {0, 0};
  const OptimResult res = liftone(DesignProblem{glm, {}}, {});
  CHECK(res.w[0] == Approx(0.5).margin(1e-8));
  CHECK(res.w[1] == Approx(0.5).margin(1e-8));
}

TEST_CASE("small MLM matches a grid search") {
  Rng rng(211);
  const MlmProblem mlm = fixtures::random_mlm(rng, 3, 3);
  const DesignProblem prob{mlm, {}};
  const auto fis = point_fishers(prob);
  OptimOptions opts;
  opts.nram = 4;
  opts.seed = 9;
  const OptimResult res = liftone(fis, opts);
  const double grid = grid_search_best(fis, LinearConstraintSet::simplex_only(3), 100);
  CHECK(res.maximum >= grid * (1.0 - 1e-3));
}

TEST_CASE("constrained lift-one reproduces the published vertex optimum") {
  const DesignProblem prob{fixtures::small_logistic(), {}};
  const LinearConstraintSet cs = fixtures::small_logistic_constraints();
  OptimOptions opts;
  opts.random = false;
  opts.w00 = std::vector<double>{1.0 / 6, 1.0 / 6, 2.0 / 3};
  const OptimResult res = liftone_constrained(prob, cs, opts);

  CHECK(res.w[0] == Approx(1.0 / 6).margin(1e-4));
  CHECK(res.w[1] == Approx(0.3).margin(1e-4));
  CHECK(res.w[2] == Approx(8.0 / 15).margin(1e-4));
  CHECK(res.maximum == Approx(0.0055).margin(5e-4));
  CHECK(res.deriv[0] == Approx(0.0199).margin(2e-3));
  CHECK(res.deriv[1] == Approx(0.0026).margin(2e-3));
  CHECK(res.deriv[2] == Approx(-0.0133).margin(2e-3));
  REQUIRE(res.gmax.has_value());
  CHECK(*res.gmax <= 1e-8);
  CHECK(res.reason == "gmax <= 0");
  CHECK(res.convergence);
}

TEST_CASE("constrained lift-one reproduces the trial optimum") {
  const DesignProblem prob{fixtures::trial_problem(), {}};
  const LinearConstraintSet cs = fixtures::trial_constraints();
  OptimOptions opts;
  opts.nram = 4;
  opts.seed = 92;
  const OptimResult res = liftone_constrained(prob, cs, opts);
  const std::vector<double> expected{0.25, 0.2, 0.05, 0.5, 0.0, 0.0};
  for (std::size_t i = 0; i < 6; ++i) CHECK(res.w[i] == Approx(expected[i]).margin(1e-4));
  CHECK(res.maximum == Approx(2.8813e-08).epsilon(1e-3));
  CHECK(res.reason == "gmax <= 0");
}

TEST_CASE("singleton feasible region returns its point, certified") {
  const DesignProblem prob{fixtures::small_logistic(), {}};
  LinearConstraintSet cs(3);
  cs.add({1, 0, 0}, Dir::eq, 0.2);
  cs.add({0, 1, 0}, Dir::eq, 0.3);
  const OptimResult res = liftone_constrained(prob, cs, {});
  CHECK(res.w[0] == Approx(0.2).margin(1e-9));
  CHECK(res.w[1] == Approx(0.3).margin(1e-9));
  CHECK(res.w[2] == Approx(0.5).margin(1e-9));
  CHECK(res.convergence);
  CHECK(res.reason != "not converged");
}

TEST_CASE("infeasible constraints are rejected before any work") {
  const DesignProblem prob{fixtures::small_logistic(), {}};
  LinearConstraintSet cs(3);
  cs.add({1, 1, 1}, Dir::le, 0.5);  // cannot hold on the simplex
  CHECK_THROWS_AS(liftone_constrained(prob, cs, {}), InfeasibleError);
}

TEST_CASE("monotone objective and feasibility along the whole trajectory") {
  const DesignProblem prob{fixtures::trial_problem(), {}};
  const LinearConstraintSet cs = fixtures::trial_constraints();
  double last = -1.0;
  int moves = 0;
  OptimOptions opts;
  opts.nram = 1;
  opts.seed = 5;
  opts.on_iterate = [&](std::span<const double> w, double objective) {
    CHECK(is_feasible(w, cs, 1e-8));
    CHECK(objective >= last - 1e-12 * std::abs(last));
    last = objective;
    ++moves;
  };
  liftone_constrained(prob, cs, opts);
  CHECK(moves > 0);
}

TEST_CASE("identical seeds give bit-identical results") {
  const DesignProblem prob{fixtures::trial_problem(), {}};
  const LinearConstraintSet cs = fixtures::trial_constraints();
  OptimOptions opts;
  opts.nram = 3;
  opts.seed = 77;
  const OptimResult a = liftone_constrained(prob, cs, opts);
  const OptimResult b = liftone_constrained(prob, cs, opts);
  REQUIRE(a.w.size() == b.w.size());
  for (std::size_t i = 0; i < a.w.size(); ++i) CHECK(a.w[i] == b.w[i]);
  CHECK(a.maximum == b.maximum);
  CHECK(a.reason == b.reason);

  // parallel restarts merge to the same answer
  OptimOptions threaded = opts;
  threaded.threads = 3;
  const OptimResult c = liftone_constrained(prob, cs, threaded);
  for (std::size_t i = 0; i < a.w.size(); ++i) CHECK(a.w[i] == c.w[i]);
  CHECK(a.reason == c.reason);
}

TEST_CASE("gmax certificate is sound against sampling") {
  const DesignProblem prob{fixtures::trial_problem(), {}};
  const LinearConstraintSet cs = fixtures::trial_constraints();
  OptimOptions opts;
  opts.nram = 4;
  opts.seed = 92;
  const OptimResult res = liftone_constrained(prob, cs, opts);
  REQUIRE(res.reason == "gmax <= 0");

  const double scale = std::max(1.0, res.maximum);
  Rng rng(301);
  for (int probe = 0; probe < 1000; ++probe) {
    const std::vector<double> w = random_feasible(cs, rng.bits());
    double g = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
      g += w[i] * (1.0 - res.w[i]) * res.deriv[i];
    CHECK(g <= opts.epsilon * scale + 1e-10);
  }
}

TEST_CASE("directional derivative matches finite differences") {
  Rng rng(401);
  int checked = 0;
  while (checked < 30) {
    const GlmProblem glm = fixtures::random_glm(rng, 4, 3);
    const auto fis = point_fishers(DesignProblem{glm, {}});
    std::vector<double> w(4);
    double sum = 0.0;
    for (double& v : w) {
      v = 0.1 + rng.uniform01();
      sum += v;
    }
    for (double& v : w) v /= sum;
    const std::size_t i = rng.below(4);
    const double h = 1e-6;
    if (w[i] < 2 * h || w[i] > 1.0 - 2 * h) continue;

    const double analytic = directional_derivative(fis, w, i);
    const auto at = [&](double z) {
      const auto moved = lift_one_path(ApproximateAllocation(w), i, z);
      return determinant(weighted_matrix_sum(fis, moved.w));
    };
    const double fd = (at(w[i] + h) - at(w[i] - h)) / (2 * h);
    CHECK(analytic == Approx(fd).epsilon(1e-4).margin(1e-12));
    ++checked;
  }
}

TEST_CASE("derivatives vanish at an interior unconstrained optimum") {
  const DesignProblem prob{fixtures::small_logistic(), {}};
  const OptimResult res = liftone(prob, {});
  for (double d : res.deriv) CHECK(std::abs(d) <= 1e-6 * std::max(1.0, res.maximum));
}

TEST_CASE("directional derivative rejects a degenerate path") {
  const auto fis = point_fishers(DesignProblem{fixtures::small_logistic(), {}});
  CHECK_THROWS_AS(directional_derivative(fis, std::vector<double>{1.0, 0.0, 0.0}, 0),
                  DegeneratePathError);
}

TEST_CASE("constrained optimum matches grid search on random small problems") {
  Rng rng(501);
  for (int rep = 0; rep < 4; ++rep) {
    const GlmProblem glm = fixtures::random_glm(rng, 3, 3);
    const DesignProblem prob{glm, {}};
    const auto fis = point_fishers(prob);

    const std::vector<double> center = random_feasible(LinearConstraintSet::simplex_only(3),
                                                       rng.bits());
    LinearConstraintSet cs(3);
    std::vector<double> ub(3);
    for (std::size_t i = 0; i < 3; ++i) ub[i] = std::min(1.0, center[i] + 0.35);
    cs.add_upper_bounds(ub);

    OptimOptions opts;
    opts.nram = 6;
    opts.seed = rng.bits();
    const OptimResult res = liftone_constrained(fis, cs, opts);
    const double grid = grid_search_best(fis, cs, 200);
    CHECK(res.maximum >= grid * (1.0 - 1e-3));
  }
}

TEST_CASE("all-singular problems are flagged, not looped") {
  // one-column-of-information design: every F_i is the same rank-1 matrix
  GlmProblem glm;
  glm.link = Link::logit;
  glm.X = Matrix(2, 2, {1, 0, 1, 0});
  glm.beta = {0, 0};
  const OptimResult res = liftone(DesignProblem{glm, {}}, {});
  CHECK(res.maximum == 0.0);
  CHECK_FALSE(res.convergence);
  CHECK(res.reason == "not converged");
}
