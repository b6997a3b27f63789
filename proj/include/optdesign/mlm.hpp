#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "optdesign/allocation.hpp"
#include "optdesign/errors.hpp"
#include "optdesign/numkernel.hpp"

namespace optdesign {

/// Constant matrices of the multinomial logit system  c * log(l * pi) = X_i theta.
/// `c` is J x (2J-1): rows 1..J-1 form log(numerator_j) - log(denominator_j),
/// the last row reads the all-ones row of `l` (the sum-to-one slot).
/// `l` is (2J-1) x J: one numerator row and one denominator row per logit,
/// then a final all-ones row. The numerator/denominator patterns are what
/// distinguish the four model families.
struct ClMatrices {
  Matrix c;  // J x (2J-1)
  Matrix l;  // (2J-1) x J
};

inline ClMatrices build_cl(std::size_t J, MlmKind kind) {
  if (J < 2) throw DimensionError("build_cl: J must be at least 2");
  const std::size_t rows = 2 * J - 1;

  Matrix c(J, rows);
  for (std::size_t j = 0; j + 1 < J; ++j) {
    c(j, j) = 1.0;
    c(j, (J - 1) + j) = -1.0;
  }
  c(J - 1, rows - 1) = 1.0;

  Matrix l(rows, J);
  for (std::size_t j = 0; j + 1 < J; ++j) {
    auto num = l.row(j);
    auto den = l.row((J - 1) + j);
    switch (kind) {
      case MlmKind::baseline:
        num[j] = 1.0;
        den[J - 1] = 1.0;
        break;
      case MlmKind::cumulative:
        for (std::size_t k = 0; k <= j; ++k) num[k] = 1.0;
        for (std::size_t k = j + 1; k < J; ++k) den[k] = 1.0;
        break;
      case MlmKind::adjacent:
        num[j] = 1.0;
        den[j + 1] = 1.0;
        break;
      case MlmKind::continuation:
        num[j] = 1.0;
        for (std::size_t k = j + 1; k < J; ++k) den[k] = 1.0;
        break;
    }
  }
  for (std::size_t k = 0; k < J; ++k) l(rows - 1, k) = 1.0;
  return {std::move(c), std::move(l)};
}

namespace detail {

// Numerically stable softmax over logits (the reference category carries logit 0).
inline std::vector<double> softmax(std::vector<double> logits) {
  double top = logits[0];
  for (double v : logits) top = std::max(top, v);
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - top);
    sum += v;
  }
  for (double& v : logits) v /= sum;
  return logits;
}

inline std::vector<double> linear_predictors(const Matrix& Xi,
                                             std::span<const double> theta) {
  if (Xi.cols() != theta.size())
    throw DimensionError("model matrix columns must match parameter count");
  std::vector<double> eta = Xi * theta;
  for (double v : Xi.row(Xi.rows() - 1))
    if (v != 0.0)
      throw InvalidParameterError("last row of the MLM model matrix must be zero");
  return eta;
}

}  // namespace detail

/// Category probabilities pi from theta by closed-form inversion of the logit
/// system for the given family. Cumulative models with a non-increasing latent
/// sequence are rejected rather than clipped.
inline std::vector<double> category_probs(const Matrix& Xi, std::span<const double> theta,
                                          MlmKind kind) {
  const std::size_t J = Xi.rows();
  if (J < 2) throw DimensionError("category_probs: J must be at least 2");
  const std::vector<double> eta = detail::linear_predictors(Xi, theta);

  std::vector<double> pi(J);
  switch (kind) {
    case MlmKind::baseline: {
      std::vector<double> logits(eta.begin(), eta.end() - 1);
      logits.push_back(0.0);
      pi = detail::softmax(std::move(logits));
      break;
    }
    case MlmKind::cumulative: {
      std::vector<double> gamma(J - 1);
      for (std::size_t j = 0; j + 1 < J; ++j) gamma[j] = detail::expit(eta[j]);
      for (std::size_t j = 0; j + 2 < J; ++j)
        if (gamma[j] >= gamma[j + 1])
          throw InvalidParameterError(
              "cumulative model: latent sequence not increasing between categories " +
              std::to_string(j + 1) + " and " + std::to_string(j + 2));
      double prev = 0.0;
      for (std::size_t j = 0; j + 1 < J; ++j) {
        pi[j] = gamma[j] - prev;
        prev = gamma[j];
      }
      pi[J - 1] = 1.0 - prev;
      break;
    }
    case MlmKind::adjacent: {
      // log(pi_j / pi_{j+1}) = eta_j, so pi_j carries the tail sum of etas
      std::vector<double> logits(J, 0.0);
      double tail = 0.0;
      for (std::size_t j = J - 1; j-- > 0;) {
        tail += eta[j];
        logits[j] = tail;
      }
      pi = detail::softmax(std::move(logits));
      break;
    }
    case MlmKind::continuation: {
      double remaining = 1.0;
      for (std::size_t j = 0; j + 1 < J; ++j) {
        pi[j] = remaining * detail::expit(eta[j]);
        remaining -= pi[j];
      }
      pi[J - 1] = remaining;
      break;
    }
  }

  for (std::size_t j = 0; j < J; ++j)
    if (!(pi[j] > 0.0))
      throw InvalidParameterError("category probability " + std::to_string(j + 1) +
                                  " is not strictly positive for the supplied theta");
  return pi;
}

/// Per-point Fisher information F_i = U^T diag(pi)^{-1} U with
/// U = (c diag(l pi)^{-1} l)^{-1} X_i, the Jacobian of pi in theta.
inline Matrix fisher_point_mlm(const Matrix& Xi, std::span<const double> theta,
                               MlmKind kind) {
  const std::size_t J = Xi.rows();
  const std::size_t p = Xi.cols();
  const std::vector<double> pi = category_probs(Xi, theta, kind);
  const ClMatrices cl = build_cl(J, kind);

  const std::vector<double> lpi = cl.l * std::span<const double>(pi);
  Matrix scaled_l = cl.l;
  for (std::size_t r = 0; r < scaled_l.rows(); ++r) {
    const double d = lpi[r];
    if (!(d > 0.0))
      throw InvalidParameterError("degenerate aggregated probability in the logit system");
    for (double& v : scaled_l.row(r)) v /= d;
  }

  const Matrix system = cl.c * scaled_l;     // J x J
  const Matrix u = solve(system, Xi);        // J x p Jacobian d pi / d theta^T
  Matrix f(p, p);
  for (std::size_t r = 0; r < J; ++r) f.add_scaled_outer(1.0 / pi[r], u.row(r));
  return f;
}

/// Per-point Fisher matrices for every design point of an MLM problem.
inline std::vector<Matrix> mlm_point_fishers(const MlmProblem& problem) {
  problem.validate();
  std::vector<Matrix> out;
  out.reserve(problem.Xi.size());
  for (const Matrix& xi : problem.Xi)
    out.push_back(fisher_point_mlm(xi, problem.theta, problem.kind));
  return out;
}

namespace detail {

inline Matrix mlm_fisher_with_coeffs(const MlmProblem& problem,
                                     std::span<const double> coeffs) {
  if (coeffs.size() != problem.point_count())
    throw DimensionError("allocation length must match the number of design points");
  const std::size_t p = problem.param_count();
  Matrix f(p, p);
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    if (coeffs[i] == 0.0) continue;  // zero-weight points contribute nothing
    f += fisher_point_mlm(problem.Xi[i], problem.theta, problem.kind) * coeffs[i];
  }
  return f;
}

}  // namespace detail

inline Matrix fisher_mlm(const ApproximateAllocation& w, const MlmProblem& problem) {
  return detail::mlm_fisher_with_coeffs(problem, w.w);
}

inline Matrix fisher_mlm(const ExactAllocation& alloc, const MlmProblem& problem) {
  std::vector<double> coeffs(alloc.counts.begin(), alloc.counts.end());
  return detail::mlm_fisher_with_coeffs(problem, coeffs);
}

inline double fisher_det_mlm(const ApproximateAllocation& w, const MlmProblem& problem) {
  return determinant(fisher_mlm(w, problem));
}

inline double fisher_det_mlm(const ExactAllocation& alloc, const MlmProblem& problem) {
  return determinant(fisher_mlm(alloc, problem));
}

inline std::string mlm_kind_name(MlmKind kind) {
  switch (kind) {
    case MlmKind::baseline: return "baseline";
    case MlmKind::cumulative: return "cumulative";
    case MlmKind::adjacent: return "adjacent";
    case MlmKind::continuation: return "continuation";
  }
  return "?";
}

inline MlmKind mlm_kind_from_name(const std::string& name) {
  if (name == "baseline") return MlmKind::baseline;
  if (name == "cumulative") return MlmKind::cumulative;
  if (name == "adjacent") return MlmKind::adjacent;
  if (name == "continuation") return MlmKind::continuation;
  throw UnsupportedError("unknown multinomial logit model kind: " + name);
}

}  // namespace optdesign
