#pragma once

// Shared problem builders and golden data for the test and acceptance suites.

#include <vector>

#include "optdesign/optdesign.hpp"

namespace fixtures {

using namespace optdesign;

// Three-point logistic problem with beta = (0.5, 0.5, 0.5); the workhorse small
// example (its uniform-allocation information matrix has diagonal 0.23500371).
inline GlmProblem small_logistic() {
  GlmProblem glm;
  glm.link = Link::logit;
  glm.X = Matrix(3, 3, {1, -1, -1, 1, -1, 1, 1, 1, -1});
  glm.beta = {0.5, 0.5, 0.5};
  return glm;
}

// Constraints {w1 <= 1/6, w3 >= 8/15, 4 w1 >= w3} around small_logistic().
inline LinearConstraintSet small_logistic_constraints() {
  LinearConstraintSet cs(3);
  cs.add({1, 0, 0}, Dir::le, 1.0 / 6.0);
  cs.add({0, 0, 1}, Dir::ge, 8.0 / 15.0);
  cs.add({4, 0, -1}, Dir::ge, 0.0);
  return cs;
}

// Clinical-trial scenario: six gender/age strata, logit link, beta = (0,3,3,3),
// 200 of 500 volunteers, per-stratum caps (50, 40, 10, 200, 150, 50).
inline GlmProblem trial_problem() {
  GlmProblem glm;
  glm.link = Link::logit;
  glm.X = Matrix(6, 4,
                 {1, 0, 0, 0, 1, 0, 1, 0, 1, 0, 0, 1, 1, 1, 0, 0, 1, 1, 1, 0, 1, 1, 0, 1});
  glm.beta = {0, 3, 3, 3};
  return glm;
}

inline std::vector<long long> trial_bounds() { return {50, 40, 10, 200, 150, 50}; }
constexpr long long kTrialSampleSize = 200;

inline LinearConstraintSet trial_constraints() {
  LinearConstraintSet cs(6);
  std::vector<double> ub(6);
  const auto caps = trial_bounds();
  for (std::size_t i = 0; i < 6; ++i)
    ub[i] = std::min(1.0, static_cast<double>(caps[i]) / kTrialSampleSize);
  cs.add_upper_bounds(ub);
  return cs;
}

inline PriorSpec trial_prior() {
  return PriorSpec::box({-2, -1, -1, -1}, {2, 5, 5, 5});
}

// Trauma scenario: cumulative-logit npo model, J = 5 outcome levels, four dose
// levels crossed with two severity grades, 600 of 802 patients, severity-group
// totals capped at 392 (mild) and 410 (moderate/severe).
inline MlmProblem trauma_problem() {
  MlmProblem mlm;
  mlm.kind = MlmKind::cumulative;
  mlm.J = 5;
  mlm.theta = {-4.047, -0.131, 4.214, -2.225, -0.376, 3.519,
               -0.302, -0.237, 2.420,  1.386, -0.120, 1.284};
  for (int severity = 0; severity <= 1; ++severity)
    for (int dose = 1; dose <= 4; ++dose) {
      Matrix x(5, 12);
      for (int j = 0; j < 4; ++j) {
        x(j, 3 * j + 0) = 1.0;
        x(j, 3 * j + 1) = dose;
        x(j, 3 * j + 2) = severity;
      }
      mlm.Xi.push_back(std::move(x));
    }
  return mlm;
}

constexpr long long kTraumaSampleSize = 600;

inline LinearConstraintSet trauma_constraints() {
  LinearConstraintSet cs(8);
  cs.add({1, 1, 1, 1, 0, 0, 0, 0}, Dir::le, 392.0 / 600.0);
  cs.add({0, 0, 0, 0, 1, 1, 1, 1}, Dir::le, 410.0 / 600.0);
  return cs;
}

// Information matrix of the trauma model at the uniform allocation w = 1/8 each.
inline Matrix trauma_uniform_fisher_golden() {
  return Matrix(
      12, 12,
      {0.44505694,  1.37915564,  0.43609135,  -0.37247296, -1.21252053, -0.36379349,
       0.0,         0.0,         0.0,         0.0,         0.0,         0.0,
       1.37915564,  4.78410934,  1.35694145,  -1.21252053, -4.31436344, -1.19085831,
       0.0,         0.0,         0.0,         0.0,         0.0,         0.0,
       0.43609135,  1.35694145,  0.43609135,  -0.36379349, -1.19085831, -0.36379349,
       0.0,         0.0,         0.0,         0.0,         0.0,         0.0,
       -0.37247296, -1.21252053, -0.36379349, 0.51192600,  1.55177413,  0.48018678,
       -0.09154268, -0.22027625, -0.07471168, 0.0,         0.0,         0.0,
       -1.21252053, -4.31436344, -1.19085831, 1.55177413,  5.31193908,  1.48241981,
       -0.22027625, -0.64323991, -0.18445802, 0.0,         0.0,         0.0,
       -0.36379349, -1.19085831, -0.36379349, 0.48018678,  1.48241981,  0.48018678,
       -0.07471168, -0.18445802, -0.07471168, 0.0,         0.0,         0.0,
       0.0,         0.0,         0.0,         -0.09154268, -0.22027625, -0.07471168,
       0.29320484,  0.71978889,  0.16205254,  -0.10435894, -0.25399393, -0.06194131,
       0.0,         0.0,         0.0,         -0.22027625, -0.64323991, -0.18445802,
       0.71978889,  2.13312603,  0.41294396,  -0.25399393, -0.74842743, -0.15305771,
       0.0,         0.0,         0.0,         -0.07471168, -0.18445802, -0.07471168,
       0.16205254,  0.41294396,  0.16205254,  -0.06194131, -0.15305771, -0.06194131,
       0.0,         0.0,         0.0,         0.0,         0.0,         0.0,
       -0.10435894, -0.25399393, -0.06194131, 0.17861575,  0.45287619,  0.06925715,
       0.0,         0.0,         0.0,         0.0,         0.0,         0.0,
       -0.25399393, -0.74842743, -0.15305771, 0.45287619,  1.37180187,  0.17395849,
       0.0,         0.0,         0.0,         0.0,         0.0,         0.0,
       -0.06194131, -0.15305771, -0.06194131, 0.06925715,  0.17395849,  0.06925715});
}

// Hand-coded feasible-interval closures for the trial bounds, mirroring the
// lower.bound/upper.bound functions a user of the reference package would
// write for step 3 of the constrained sweep.
inline double trial_lower_bound(std::size_t i, const std::vector<double>& w) {
  const auto caps = trial_bounds();
  double lo = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (j == i || w[j] <= 0.0) continue;
    const double rc = std::min(1.0, static_cast<double>(caps[j]) / kTrialSampleSize);
    lo = std::max(lo, 1.0 - rc * (1.0 - w[i]) / w[j]);
  }
  return lo;
}

inline double trial_upper_bound(std::size_t i, const std::vector<double>& w) {
  const auto caps = trial_bounds();
  return std::min(1.0, static_cast<double>(caps[i]) / kTrialSampleSize);
}

// Case formulas for the small-logistic constraint set.
inline double s2_lower_bound(std::size_t i, const std::vector<double>& w) {
  if (i == 0)
    return std::max({1.0 - (1.0 - w[0]) / w[1], 1.0 - (1.0 - w[0]) / w[2],
                     w[2] / (4.0 - 4.0 * w[0] + w[2])});
  if (i == 1)
    return std::max({0.0, 1.0 - (1.0 - w[1]) / (6.0 * w[0]), 1.0 - (1.0 - w[1]) / w[2]});
  return std::max({8.0 / 15.0, 1.0 - (1.0 - w[2]) / (6.0 * w[0]),
                   1.0 - (1.0 - w[2]) / w[1]});
}

inline double s2_upper_bound(std::size_t i, const std::vector<double>& w) {
  if (i == 0)
    return std::min(1.0 / 6.0, 1.0 - 8.0 * (1.0 - w[0]) / (15.0 * w[2]));
  if (i == 1) return 1.0 - 8.0 * (1.0 - w[1]) / (15.0 * w[2]);
  return 4.0 * w[0] / (1.0 + 4.0 * w[0] - w[2]);
}

// Random well-conditioned GLM problem for property tests.
inline GlmProblem random_glm(Rng& rng, std::size_t m, std::size_t p) {
  GlmProblem glm;
  glm.link = Link::logit;
  Matrix x(m, p);
  for (std::size_t r = 0; r < m; ++r) {
    x(r, 0) = 1.0;
    for (std::size_t c = 1; c < p; ++c) x(r, c) = rng.uniform(-1.0, 1.0);
  }
  glm.X = std::move(x);
  glm.beta.resize(p);
  for (double& b : glm.beta) b = rng.uniform(-1.0, 1.0);
  return glm;
}

// Random MLM problem (kind cycles with the rng; theta kept moderate so the
// cumulative latent sequence stays increasing).
inline MlmProblem random_mlm(Rng& rng, std::size_t m, std::size_t J) {
  MlmProblem mlm;
  const MlmKind kinds[] = {MlmKind::baseline, MlmKind::cumulative, MlmKind::adjacent,
                           MlmKind::continuation};
  mlm.kind = kinds[rng.below(4)];
  mlm.J = J;
  const std::size_t p = J;  // one free parameter per logit plus a shared slope
  mlm.theta.resize(p);
  for (std::size_t j = 0; j + 1 < J; ++j) mlm.theta[j] = -1.5 + 3.0 * j / (J - 1);
  mlm.theta[p - 1] = rng.uniform(-0.5, 0.5);
  for (std::size_t i = 0; i < m; ++i) {
    Matrix x(J, p);
    const double covariate = rng.uniform(-1.0, 1.0);
    for (std::size_t j = 0; j + 1 < J; ++j) {
      x(j, j) = 1.0;
      x(j, p - 1) = covariate;
    }
    mlm.Xi.push_back(std::move(x));
  }
  return mlm;
}

}  // namespace fixtures
