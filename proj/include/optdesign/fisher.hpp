#pragma once

#include <functional>
#include <variant>
#include <vector>

#include "optdesign/allocation.hpp"
#include "optdesign/glm.hpp"
#include "optdesign/mlm.hpp"

namespace optdesign {

/// Per-point Fisher matrices for either model family; the optimizer and the
/// rounding criteria work on these uniformly.
inline std::vector<Matrix> point_fishers(const DesignProblem& problem) {
  problem.validate();
  if (problem.is_glm()) return glm_point_fishers(problem.glm());
  return mlm_point_fishers(problem.mlm());
}

inline Matrix fisher_matrix(const DesignProblem& problem, const ApproximateAllocation& w) {
  if (problem.is_glm()) return fisher_glm(w, problem.glm());
  return fisher_mlm(w, problem.mlm());
}

inline double fisher_det(const DesignProblem& problem, const ApproximateAllocation& w) {
  if (problem.is_glm()) return fisher_det_glm(w, problem.glm());
  return fisher_det_mlm(w, problem.mlm());
}

inline double fisher_det(const DesignProblem& problem, const ExactAllocation& alloc) {
  if (problem.is_glm()) return fisher_det_glm(alloc, problem.glm());
  return fisher_det_mlm(alloc, problem.mlm());
}

/// Exact-allocation determinant criterion bound to a problem, for greedy rounding.
inline std::function<double(const ExactAllocation&)> make_det_criterion(
    const DesignProblem& problem) {
  const std::vector<Matrix> fis = point_fishers(problem);
  return [fis](const ExactAllocation& alloc) {
    std::vector<double> coeffs(alloc.counts.begin(), alloc.counts.end());
    return determinant(weighted_matrix_sum(fis, coeffs));
  };
}

}  // namespace optdesign
