#pragma once

#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "optdesign/allocation.hpp"
#include "optdesign/errors.hpp"
#include "optdesign/numkernel.hpp"

namespace optdesign {

namespace detail {

// exp(2*eta - e^eta) / (1 - e^(-e^eta)), arranged so extreme eta underflows to 0
// instead of producing inf*0.
inline double cloglog_nu(double eta) {
  const double t = std::exp(eta);
  const double denom = -std::expm1(-t);
  if (denom <= 0.0) return 0.0;  // t underflowed; the limit is e^eta itself
  const double v = std::exp(2.0 * eta - t) / denom;
  return std::isfinite(v) ? v : 0.0;
}

}  // namespace detail

/// Per-point information weight nu = (1/Var Y) (dmu/deta)^2 for one linear
/// predictor value. The closed forms per link follow standard GLM theory; the
/// loglog form is the cloglog form reflected in eta.
inline double nu(Link link, double eta, double sigma = 1.0) {
  switch (link) {
    case Link::logit: {
      // symmetric in eta; written with e^{-|eta|} so it never overflows
      const double t = std::exp(-std::abs(eta));
      return t / ((1.0 + t) * (1.0 + t));
    }
    case Link::probit: {
      const double inv_sqrt2 = 0.70710678118654752440;
      const double phi = std::exp(-0.5 * eta * eta) * 0.39894228040143267794;
      const double Phi = 0.5 * std::erfc(-eta * inv_sqrt2);
      const double Phic = 0.5 * std::erfc(eta * inv_sqrt2);
      const double denom = Phi * Phic;
      if (denom <= 0.0) return 0.0;
      const double v = phi * phi / denom;
      return std::isfinite(v) ? v : 0.0;
    }
    case Link::cloglog:
      return detail::cloglog_nu(eta);
    case Link::loglog:
      return detail::cloglog_nu(-eta);
    case Link::identity:
      return 1.0 / (sigma * sigma);
    case Link::log:
      return std::exp(eta);
  }
  throw UnsupportedError("unknown link function");
}

/// Diagonal information weights nu_i for every design point of a GLM problem.
inline std::vector<double> glm_weights(const GlmProblem& problem) {
  problem.validate();
  std::vector<double> out(problem.point_count());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto row = problem.X.row(i);
    const double eta =
        std::inner_product(row.begin(), row.end(), problem.beta.begin(), 0.0);
    out[i] = nu(problem.link, eta, problem.sigma);
  }
  return out;
}

/// Per-point Fisher contributions nu_i X_i X_i^T (p x p each).
inline std::vector<Matrix> glm_point_fishers(const GlmProblem& problem) {
  const std::vector<double> w = glm_weights(problem);
  const std::size_t p = problem.param_count();
  std::vector<Matrix> out;
  out.reserve(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    Matrix f(p, p);
    f.add_scaled_outer(w[i], problem.X.row(i));
    out.push_back(std::move(f));
  }
  return out;
}

namespace detail {

inline Matrix glm_fisher_with_coeffs(const GlmProblem& problem,
                                     std::span<const double> coeffs) {
  if (coeffs.size() != problem.point_count())
    throw DimensionError("allocation length must match the number of design points");
  const std::vector<double> nu_w = glm_weights(problem);
  const std::size_t p = problem.param_count();
  Matrix f(p, p);
  for (std::size_t i = 0; i < coeffs.size(); ++i)
    f.add_scaled_outer(coeffs[i] * nu_w[i], problem.X.row(i));
  return f;
}

}  // namespace detail

/// Fisher information F(w) = sum_i w_i nu_i X_i X_i^T. The sample-size factor n
/// is dropped for approximate allocations; it scales the determinant by n^p and
/// never moves the argmax.
inline Matrix fisher_glm(const ApproximateAllocation& w, const GlmProblem& problem) {
  return detail::glm_fisher_with_coeffs(problem, w.w);
}

inline double fisher_det_glm(const ApproximateAllocation& w, const GlmProblem& problem) {
  return determinant(detail::glm_fisher_with_coeffs(problem, w.w));
}

/// Exact-allocation determinant uses raw counts, so det(exact) = n^p det(approx)
/// when n_i = n w_i.
inline double fisher_det_glm(const ExactAllocation& alloc, const GlmProblem& problem) {
  std::vector<double> coeffs(alloc.counts.begin(), alloc.counts.end());
  return determinant(detail::glm_fisher_with_coeffs(problem, coeffs));
}

inline std::string link_name(Link link) {
  switch (link) {
    case Link::logit: return "logit";
    case Link::probit: return "probit";
    case Link::cloglog: return "cloglog";
    case Link::loglog: return "loglog";
    case Link::identity: return "identity";
    case Link::log: return "log";
  }
  return "?";
}

inline Link link_from_name(const std::string& name) {
  if (name == "logit") return Link::logit;
  if (name == "probit") return Link::probit;
  if (name == "cloglog") return Link::cloglog;
  if (name == "loglog") return Link::loglog;
  if (name == "identity") return Link::identity;
  if (name == "log") return Link::log;
  throw UnsupportedError("unknown link function: " + name);
}

}  // namespace optdesign
