#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "optdesign/errors.hpp"
#include "optdesign/numkernel.hpp"

namespace optdesign {

/// Weight vector on the probability simplex: the fraction of the sample assigned
/// to each design point.
struct ApproximateAllocation {
  std::vector<double> w;

  explicit ApproximateAllocation(std::vector<double> weights) : w(std::move(weights)) {
    double sum = 0.0;
    for (double v : w) {
      if (!std::isfinite(v) || v < -1e-12)
        throw DimensionError("allocation weights must be nonnegative and finite");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw DimensionError("allocation weights must sum to 1 (got " + std::to_string(sum) +
                           ")");
  }

  static ApproximateAllocation uniform(std::size_t m) {
    return ApproximateAllocation(std::vector<double>(m, 1.0 / static_cast<double>(m)));
  }

  std::size_t size() const { return w.size(); }
  double operator[](std::size_t i) const { return w[i]; }
};

/// Integer per-point counts summing to the total sample size.
struct ExactAllocation {
  std::vector<long long> counts;

  explicit ExactAllocation(std::vector<long long> c) : counts(std::move(c)) {
    for (long long v : counts)
      if (v < 0) throw DimensionError("exact allocation counts must be nonnegative");
  }

  long long total() const {
    return std::accumulate(counts.begin(), counts.end(), 0ll);
  }
  std::size_t size() const { return counts.size(); }
};

/// Lift-one path w_i(z): coordinate i moves to z, the remaining weights shrink
/// proportionally so the result stays on the simplex.
inline ApproximateAllocation lift_one_path(const ApproximateAllocation& alloc,
                                           std::size_t i, double z) {
  const auto& w = alloc.w;
  if (i >= w.size()) throw DimensionError("lift_one_path: index out of range");
  if (z < 0.0 || z > 1.0)
    throw DimensionError("lift_one_path: z must lie in [0, 1]");
  if (w[i] == 1.0) {
    if (z == 1.0) return alloc;
    throw DegeneratePathError("lift_one_path: coordinate already carries weight 1");
  }
  std::vector<double> out(w.size());
  const double scale = (1.0 - z) / (1.0 - w[i]);
  for (std::size_t j = 0; j < w.size(); ++j) out[j] = scale * w[j];
  out[i] = z;
  return ApproximateAllocation(std::move(out));
}

// ---------------------------------------------------------------------------
// Design problems. Predictor functions are not modeled symbolically: callers
// supply already-evaluated numeric model matrices.
// ---------------------------------------------------------------------------

enum class Link { logit, probit, cloglog, loglog, identity, log };

enum class MlmKind { baseline, cumulative, adjacent, continuation };

/// GLM design: m x p design matrix X (one row per design point) and coefficients.
struct GlmProblem {
  Link link = Link::logit;
  Matrix X;                   // m x p
  std::vector<double> beta;   // length p
  double sigma = 1.0;         // gaussian response scale under the identity link

  std::size_t point_count() const { return X.rows(); }
  std::size_t param_count() const { return X.cols(); }

  void validate() const {
    if (X.rows() < 2) throw DimensionError("GLM problem needs at least 2 design points");
    if (X.cols() < 2) throw DimensionError("GLM problem needs at least 2 parameters");
    if (beta.size() != X.cols())
      throw DimensionError("GLM coefficient length must match design matrix columns");
    if (link == Link::identity && !(sigma > 0.0))
      throw DimensionError("gaussian sigma must be positive");
  }
};

/// MLM design: per-point J x p model matrices and a shared coefficient vector.
struct MlmProblem {
  MlmKind kind = MlmKind::cumulative;
  std::size_t J = 0;
  std::vector<Matrix> Xi;     // m matrices, each J x p, last row zero
  std::vector<double> theta;  // length p

  std::size_t point_count() const { return Xi.size(); }
  std::size_t param_count() const { return theta.size(); }

  void validate() const {
    if (Xi.size() < 2) throw DimensionError("MLM problem needs at least 2 design points");
    if (theta.size() < 2) throw DimensionError("MLM problem needs at least 2 parameters");
    if (J < 2) throw DimensionError("MLM problem needs at least 2 response categories");
    for (const Matrix& x : Xi) {
      if (x.rows() != J || x.cols() != theta.size())
        throw DimensionError("every MLM model matrix must be J x p");
      for (double v : x.row(J - 1))
        if (v != 0.0)
          throw DimensionError("last row of each MLM model matrix must be zero");
    }
  }
};

struct DesignProblem {
  std::variant<GlmProblem, MlmProblem> model;
  std::vector<std::string> labels;  // optional, one per design point

  std::size_t point_count() const {
    return std::visit([](const auto& m) { return m.point_count(); }, model);
  }
  std::size_t param_count() const {
    return std::visit([](const auto& m) { return m.param_count(); }, model);
  }

  bool is_glm() const { return std::holds_alternative<GlmProblem>(model); }
  const GlmProblem& glm() const { return std::get<GlmProblem>(model); }
  const MlmProblem& mlm() const { return std::get<MlmProblem>(model); }

  void validate() const {
    std::visit([](const auto& m) { m.validate(); }, model);
    if (!labels.empty() && labels.size() != point_count())
      throw DimensionError("label count must match the number of design points");
  }
};

}  // namespace optdesign
