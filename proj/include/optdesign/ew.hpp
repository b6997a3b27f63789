#pragma once

#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "optdesign/allocation.hpp"
#include "optdesign/errors.hpp"
#include "optdesign/glm.hpp"
#include "optdesign/numkernel.hpp"

namespace optdesign {

/// Coefficient prior for EW D-optimality: independent bounded uniform marginals,
/// or an explicit equally-weighted sample of coefficient vectors.
struct PriorSpec {
  std::vector<double> lo;  // box form; empty when sample-based
  std::vector<double> hi;
  std::vector<std::vector<double>> sample;  // sample form; empty when box-based
  int quadrature_order = 24;               // Gauss-Legendre points per axis

  bool is_sample() const { return !sample.empty(); }

  static PriorSpec box(std::vector<double> lo_, std::vector<double> hi_, int order = 24) {
    PriorSpec p;
    p.lo = std::move(lo_);
    p.hi = std::move(hi_);
    p.quadrature_order = order;
    return p;
  }

  static PriorSpec from_sample(std::vector<std::vector<double>> draws) {
    PriorSpec p;
    p.sample = std::move(draws);
    return p;
  }

  void validate(std::size_t p_expected) const {
    if (is_sample()) {
      if (sample.empty()) throw UnsupportedError("prior sample must be nonempty");
      for (const auto& d : sample)
        if (d.size() != p_expected)
          throw DimensionError("prior sample draw length must match parameter count");
      return;
    }
    if (lo.size() != p_expected || hi.size() != p_expected)
      throw DimensionError("prior bounds length must match parameter count");
    for (std::size_t j = 0; j < lo.size(); ++j) {
      if (!std::isfinite(lo[j]) || !std::isfinite(hi[j]))
        throw UnsupportedError("unbounded prior without an explicit sample");
      if (lo[j] > hi[j]) throw DimensionError("prior bound lo > hi");
    }
    if (quadrature_order < 1)
      throw DimensionError("quadrature order must be positive");
  }
};

namespace detail {

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 0; k < n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k + 1.0) * z * p1 - k * p2) / (k + 1.0);
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

}  // namespace detail

/// E[nu(link, x^T beta)] under the prior. Box priors use tensor-product
/// Gauss-Legendre quadrature over the box; axes the predictor does not touch
/// integrate out exactly. Sample priors average.
inline double expected_nu(std::span<const double> x_row, const PriorSpec& prior, Link link,
                          double sigma = 1.0) {
  prior.validate(x_row.size());

  if (prior.is_sample()) {
    double acc = 0.0;
    for (const auto& beta : prior.sample)
      acc += nu(link, std::inner_product(x_row.begin(), x_row.end(), beta.begin(), 0.0),
                sigma);
    return acc / static_cast<double>(prior.sample.size());
  }

  const std::size_t p = x_row.size();
  std::vector<std::size_t> active;  // axes that both vary and enter the predictor
  double eta_base = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    const double width = prior.hi[j] - prior.lo[j];
    if (x_row[j] == 0.0 || width == 0.0)
      eta_base += x_row[j] * 0.5 * (prior.lo[j] + prior.hi[j]);
    else
      active.push_back(j);
  }
  if (active.empty()) return nu(link, eta_base, sigma);

  std::vector<double> gl_x, gl_w;
  detail::gauss_legendre(prior.quadrature_order, gl_x, gl_w);
  const std::size_t g = gl_x.size();

  // Per-axis predictor contributions and normalized weights (density folded in).
  std::vector<std::vector<double>> contrib(active.size()), weight(active.size());
  for (std::size_t a = 0; a < active.size(); ++a) {
    const std::size_t j = active[a];
    const double mid = 0.5 * (prior.lo[j] + prior.hi[j]);
    const double half = 0.5 * (prior.hi[j] - prior.lo[j]);
    contrib[a].resize(g);
    weight[a].resize(g);
    for (std::size_t k = 0; k < g; ++k) {
      contrib[a][k] = x_row[j] * (mid + half * gl_x[k]);
      weight[a][k] = 0.5 * gl_w[k];
    }
  }

  std::vector<std::size_t> idx(active.size(), 0);
  double acc = 0.0;
  while (true) {
    double eta = eta_base;
    double wgt = 1.0;
    for (std::size_t a = 0; a < active.size(); ++a) {
      eta += contrib[a][idx[a]];
      wgt *= weight[a][idx[a]];
    }
    acc += wgt * nu(link, eta, sigma);

    std::size_t a = 0;
    while (a < idx.size() && ++idx[a] == g) idx[a++] = 0;
    if (a == idx.size()) break;
  }
  return acc;
}

/// Row-wise expected information weights E(W) for a GLM design matrix.
inline std::vector<double> expected_W(const Matrix& X, const PriorSpec& prior, Link link,
                                      double sigma = 1.0) {
  std::vector<double> out(X.rows());
  for (std::size_t i = 0; i < X.rows(); ++i)
    out[i] = expected_nu(X.row(i), prior, link, sigma);
  return out;
}

/// Per-point Fisher contributions with nu replaced by its prior expectation.
inline std::vector<Matrix> ew_point_fishers(const GlmProblem& problem,
                                            const PriorSpec& prior) {
  problem.validate();
  const std::vector<double> ew = expected_W(problem.X, prior, problem.link, problem.sigma);
  const std::size_t p = problem.param_count();
  std::vector<Matrix> out;
  out.reserve(ew.size());
  for (std::size_t i = 0; i < ew.size(); ++i) {
    Matrix f(p, p);
    f.add_scaled_outer(ew[i], problem.X.row(i));
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace optdesign
