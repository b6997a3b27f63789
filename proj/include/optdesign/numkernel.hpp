#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "optdesign/errors.hpp"

namespace optdesign {

/// Dense row-major matrix. Sized for design problems: a few hundred rows at most,
/// entries required finite.
class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (!std::isfinite(fill)) throw DimensionError("matrix entries must be finite");
  }

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
      : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows_ * cols_)
      throw DimensionError("matrix entry count does not match " + std::to_string(rows_) +
                           "x" + std::to_string(cols_));
    for (double v : data_)
      if (!std::isfinite(v)) throw DimensionError("matrix entries must be finite");
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }
  std::span<double> row(std::size_t r) {
    return std::span<double>(data_).subspan(r * cols_, cols_);
  }

  const std::vector<double>& data() const { return data_; }

  Matrix transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  Matrix& operator+=(const Matrix& o) {
    require_same_shape(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }

  Matrix& operator-=(const Matrix& o) {
    require_same_shape(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }

  Matrix& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(Matrix a, double s) { return a *= s; }
  friend Matrix operator*(double s, Matrix a) { return a *= s; }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) throw DimensionError("matrix product shape mismatch");
    Matrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  /// Accumulate coeff * x x^T into this (square, dim = x.size()).
  void add_scaled_outer(double coeff, std::span<const double> x) {
    if (rows_ != cols_ || rows_ != x.size())
      throw DimensionError("outer-product accumulation shape mismatch");
    if (coeff == 0.0) return;
    for (std::size_t i = 0; i < rows_; ++i) {
      const double cxi = coeff * x[i];
      if (cxi == 0.0) continue;
      for (std::size_t j = 0; j < cols_; ++j) (*this)(i, j) += cxi * x[j];
    }
  }

  friend std::vector<double> operator*(const Matrix& a, std::span<const double> v) {
    if (a.cols_ != v.size()) throw DimensionError("matrix-vector shape mismatch");
    std::vector<double> out(a.rows_, 0.0);
    for (std::size_t i = 0; i < a.rows_; ++i)
      out[i] = std::inner_product(a.row(i).begin(), a.row(i).end(), v.begin(), 0.0);
    return out;
  }

 private:
  void require_same_shape(const Matrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw DimensionError("matrix shape mismatch");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Weighted sum of equally-shaped matrices: sum_i coeffs[i] * terms[i].
inline Matrix weighted_matrix_sum(const std::vector<Matrix>& terms,
                                  std::span<const double> coeffs) {
  if (terms.size() != coeffs.size())
    throw DimensionError("weighted sum: coefficient count mismatch");
  if (terms.empty()) throw DimensionError("weighted sum of no matrices");
  Matrix acc(terms[0].rows(), terms[0].cols());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (coeffs[i] == 0.0) continue;
    if (terms[i].rows() != acc.rows() || terms[i].cols() != acc.cols())
      throw DimensionError("weighted sum: matrix shape mismatch");
    acc += terms[i] * coeffs[i];
  }
  return acc;
}

namespace detail {

struct LuFactors {
  Matrix lu;
  std::vector<std::size_t> perm;
  double sign = 1.0;
  bool singular = false;
  std::size_t pivot_index = 0;
};

// Partial-pivot LU. A pivot below 1e-12 times the largest Euclidean row norm of
// the input is treated as an exact zero: boundary allocations make F genuinely
// singular and the objective must read 0 there, not rounding noise.
inline LuFactors lu_factor(const Matrix& a) {
  const std::size_t n = a.rows();
  LuFactors f;
  f.lu = a;
  f.perm.resize(n);
  for (std::size_t i = 0; i < n; ++i) f.perm[i] = i;

  double max_row_norm = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < n; ++c) s += a(r, c) * a(r, c);
    max_row_norm = std::max(max_row_norm, std::sqrt(s));
  }
  const double tol = 1e-12 * max_row_norm;

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::abs(f.lu(k, k));
    for (std::size_t r = k + 1; r < n; ++r) {
      const double v = std::abs(f.lu(r, k));
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (best <= tol) {
      f.singular = true;
      f.pivot_index = k;
      return f;
    }
    if (piv != k) {
      for (std::size_t c = 0; c < n; ++c) std::swap(f.lu(k, c), f.lu(piv, c));
      std::swap(f.perm[k], f.perm[piv]);
      f.sign = -f.sign;
    }
    const double pivot = f.lu(k, k);
    for (std::size_t r = k + 1; r < n; ++r) {
      const double m = f.lu(r, k) / pivot;
      f.lu(r, k) = m;
      if (m == 0.0) continue;
      for (std::size_t c = k + 1; c < n; ++c) f.lu(r, c) -= m * f.lu(k, c);
    }
  }
  return f;
}

}  // namespace detail

/// Determinant via pivoted LU; returns exactly 0 for rank-deficient input.
inline double determinant(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("determinant of non-square matrix");
  if (m.rows() == 0) return 1.0;
  const auto f = detail::lu_factor(m);
  if (f.singular) return 0.0;
  double det = f.sign;
  for (std::size_t k = 0; k < m.rows(); ++k) det *= f.lu(k, k);
  return det;
}

/// Solve A X = B for X. Throws SingularMatrixError naming the failed pivot.
inline Matrix solve(const Matrix& a, const Matrix& b) {
  if (a.rows() != a.cols()) throw DimensionError("solve: A must be square");
  if (a.rows() != b.rows()) throw DimensionError("solve: row counts must match");
  const std::size_t n = a.rows();
  const auto f = detail::lu_factor(a);
  if (f.singular) throw SingularMatrixError(f.pivot_index);

  Matrix x(n, b.cols());
  for (std::size_t col = 0; col < b.cols(); ++col) {
    // Ly = Pb
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = b(f.perm[i], col);
      for (std::size_t j = 0; j < i; ++j) s -= f.lu(i, j) * y[j];
      y[i] = s;
    }
    // Ux = y
    for (std::size_t ii = n; ii-- > 0;) {
      double s = y[ii];
      for (std::size_t j = ii + 1; j < n; ++j) s -= f.lu(ii, j) * x(j, col);
      x(ii, col) = s / f.lu(ii, ii);
    }
  }
  return x;
}

/// Univariate polynomial, coefficients in ascending degree order.
class Polynomial {
 public:
  Polynomial() : coeffs_{0.0} {}

  explicit Polynomial(std::vector<double> ascending_coeffs)
      : coeffs_(std::move(ascending_coeffs)) {
    if (coeffs_.empty()) coeffs_.push_back(0.0);
    for (double c : coeffs_)
      if (!std::isfinite(c)) throw DimensionError("polynomial coefficients must be finite");
  }

  double operator()(double z) const {
    double acc = 0.0;
    for (std::size_t k = coeffs_.size(); k-- > 0;) acc = acc * z + coeffs_[k];
    return acc;
  }

  Polynomial derivative() const {
    if (coeffs_.size() <= 1) return Polynomial(std::vector<double>{0.0});
    std::vector<double> d(coeffs_.size() - 1);
    for (std::size_t k = 1; k < coeffs_.size(); ++k)
      d[k - 1] = static_cast<double>(k) * coeffs_[k];
    return Polynomial(std::move(d));
  }

  std::size_t degree() const { return coeffs_.size() - 1; }
  const std::vector<double>& coefficients() const { return coeffs_; }

 private:
  std::vector<double> coeffs_;
};

/// Interpolating polynomial through the given points (Newton divided differences,
/// expanded to monomial coefficients). Abscissae must be distinct.
inline Polynomial fit_polynomial(std::span<const std::pair<double, double>> points) {
  const std::size_t k = points.size();
  if (k == 0) throw DimensionError("fit_polynomial: no points");
  double scale = 1.0;
  for (const auto& [z, f] : points) scale = std::max(scale, std::abs(z));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j)
      if (std::abs(points[i].first - points[j].first) < 1e-14 * scale)
        throw DimensionError("fit_polynomial: duplicate abscissae at " +
                             std::to_string(points[i].first));

  std::vector<double> z(k), dd(k);
  for (std::size_t i = 0; i < k; ++i) {
    z[i] = points[i].first;
    dd[i] = points[i].second;
  }
  for (std::size_t level = 1; level < k; ++level)
    for (std::size_t i = k - 1; i >= level; --i)
      dd[i] = (dd[i] - dd[i - 1]) / (z[i] - z[i - level]);

  // Expand c0 + c1(x-z0) + c2(x-z0)(x-z1) + ... into monomials.
  std::vector<double> mono(k, 0.0);
  std::vector<double> basis{1.0};  // running product of (x - z_j)
  mono[0] = dd[0];
  for (std::size_t level = 1; level < k; ++level) {
    basis.push_back(0.0);
    for (std::size_t j = basis.size() - 1; j > 0; --j)
      basis[j] = basis[j - 1] - z[level - 1] * basis[j];
    basis[0] *= -z[level - 1];
    for (std::size_t j = 0; j < basis.size(); ++j) mono[j] += dd[level] * basis[j];
  }
  return Polynomial(std::move(mono));
}

/// Chebyshev interpolation nodes of [lo, hi], ascending.
inline std::vector<double> chebyshev_nodes(double lo, double hi, std::size_t count) {
  if (count == 0) throw DimensionError("chebyshev_nodes: count must be positive");
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  std::vector<double> nodes(count);
  if (count == 1) {
    nodes[0] = mid;
    return nodes;
  }
  const double pi = 3.14159265358979323846;
  for (std::size_t j = 0; j < count; ++j)
    nodes[j] = mid - half * std::cos(pi * (2.0 * (count - 1 - j) + 1.0) / (2.0 * count));
  std::sort(nodes.begin(), nodes.end());
  return nodes;
}

namespace detail {

inline double expit(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double t = std::exp(x);
  return t / (1.0 + t);
}

inline int sign_of(double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); }

inline double poly_eval(const std::vector<double>& c, double z) {
  double acc = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) acc = acc * z + c[k];
  return acc;
}

// Drop leading coefficients that are negligible relative to the largest one.
inline std::vector<double> trim_poly(std::vector<double> c, double rel = 1e-13) {
  double maxabs = 0.0;
  for (double v : c) maxabs = std::max(maxabs, std::abs(v));
  if (maxabs == 0.0) return {0.0};
  while (c.size() > 1 && std::abs(c.back()) < rel * maxabs) c.pop_back();
  return c;
}

// Remainder of a / b (ascending coefficients), b non-constant.
inline std::vector<double> poly_remainder(std::vector<double> a, const std::vector<double>& b) {
  const std::size_t db = b.size() - 1;
  const double lead = b.back();
  while (a.size() > db) {
    const double q = a.back() / lead;
    const std::size_t shift = a.size() - 1 - db;
    for (std::size_t j = 0; j < db; ++j) a[shift + j] -= q * b[j];
    a.pop_back();
  }
  return a;
}

struct SturmChain {
  std::vector<std::vector<double>> seq;

  int variations(double x) const {
    int count = 0;
    int prev = 0;
    for (const auto& p : seq) {
      const int s = sign_of(poly_eval(p, x));
      if (s == 0) continue;
      if (prev != 0 && s != prev) ++count;
      prev = s;
    }
    return count;
  }
};

inline SturmChain build_sturm_chain(const std::vector<double>& p) {
  SturmChain chain;
  chain.seq.push_back(p);
  std::vector<double> d(p.size() - 1);
  for (std::size_t k = 1; k < p.size(); ++k) d[k - 1] = static_cast<double>(k) * p[k];
  chain.seq.push_back(trim_poly(std::move(d)));
  while (chain.seq.back().size() > 1) {
    auto r = poly_remainder(chain.seq[chain.seq.size() - 2], chain.seq.back());
    for (double& v : r) v = -v;
    r = trim_poly(std::move(r));
    double maxabs = 0.0;
    for (double v : r) maxabs = std::max(maxabs, std::abs(v));
    if (maxabs < 1e-14) break;  // gcd reached (multiple roots); counts stay on distinct roots
    for (double& v : r) v /= maxabs;
    chain.seq.push_back(std::move(r));
  }
  return chain;
}

inline double bisect_root(const std::vector<double>& p, double a, double b) {
  double fa = poly_eval(p, a);
  if (fa == 0.0) return a;
  double fb = poly_eval(p, b);
  if (fb == 0.0) return b;
  for (int iter = 0; iter < 200; ++iter) {
    const double m = 0.5 * (a + b);
    if (m <= a || m >= b) break;
    const double fm = poly_eval(p, m);
    if (fm == 0.0) return m;
    if (sign_of(fa) != sign_of(fm)) {
      b = m;
      fb = fm;
    } else {
      a = m;
      fa = fm;
    }
    if (b - a <= 1e-15 * std::max({1.0, std::abs(a), std::abs(b)})) break;
  }
  return 0.5 * (a + b);
}

inline void isolate_roots(const SturmChain& chain, const std::vector<double>& p, double a,
                          double b, int va, int vb, double width_floor,
                          std::vector<double>& out) {
  const int count = va - vb;
  if (count <= 0) return;
  if (b - a <= width_floor) {
    out.push_back(0.5 * (a + b));
    return;
  }
  if (count == 1) {
    if (sign_of(poly_eval(p, a)) * sign_of(poly_eval(p, b)) <= 0) {
      out.push_back(bisect_root(p, a, b));
      return;
    }
    // No sign change across an isolated root: even multiplicity. Narrow down
    // and report the midpoint; callers only use roots as evaluation candidates.
  }
  const double m = 0.5 * (a + b);
  const int vm = chain.variations(m);
  isolate_roots(chain, p, a, m, va, vm, width_floor, out);
  isolate_roots(chain, p, m, b, vm, vb, width_floor, out);
}

/// All real roots of `poly` inside [lo, hi], ascending. Sturm bracketing plus
/// bisection; deterministic. Root locations are scale-invariant, so the
/// coefficients are normalized before sign work.
inline std::vector<double> real_roots_in_interval(const Polynomial& poly, double lo,
                                                  double hi) {
  std::vector<double> c = trim_poly(poly.coefficients());
  double maxabs = 0.0;
  for (double v : c) maxabs = std::max(maxabs, std::abs(v));
  if (maxabs == 0.0) return {};
  for (double& v : c) v /= maxabs;
  c = trim_poly(std::move(c));

  const std::size_t deg = c.size() - 1;
  std::vector<double> roots;
  if (deg == 0) return roots;
  if (deg == 1) {
    const double r = -c[0] / c[1];
    if (r >= lo && r <= hi) roots.push_back(r);
    return roots;
  }
  if (deg == 2) {
    const double a = c[2], b = c[1], c0 = c[0];
    const double disc = b * b - 4.0 * a * c0;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      const double q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
      double r1 = q / a;
      double r2 = (q != 0.0) ? c0 / q : r1;
      if (r1 > r2) std::swap(r1, r2);
      if (r1 >= lo && r1 <= hi) roots.push_back(r1);
      if (r2 >= lo && r2 <= hi && r2 != r1) roots.push_back(r2);
    }
    return roots;
  }

  const SturmChain chain = build_sturm_chain(c);
  // Nudge the window marginally so boundary roots do not confuse the counts;
  // the enclosing maximizer evaluates interval endpoints separately anyway.
  const double span_scale = std::max({1.0, std::abs(lo), std::abs(hi)});
  const double eps = 1e-14 * span_scale;
  const double a = lo - eps, b = hi + eps;
  const int va = chain.variations(a);
  const int vb = chain.variations(b);
  isolate_roots(chain, c, a, b, va, vb, 1e-13 * span_scale, roots);
  std::sort(roots.begin(), roots.end());
  for (double& r : roots) r = std::min(std::max(r, lo), hi);
  roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
  return roots;
}

}  // namespace detail

struct IntervalMaximum {
  double z = 0.0;
  double value = 0.0;
};

/// Global maximum of `poly` over [lo, hi]: endpoints plus every stationary point
/// inside the interval are evaluated; ties resolve to the smallest z.
inline IntervalMaximum maximize_on_interval(const Polynomial& poly, double lo, double hi) {
  if (lo > hi) throw EmptyIntervalError("maximize_on_interval: lo > hi");
  if (lo == hi) return {lo, poly(lo)};

  std::vector<double> candidates = detail::real_roots_in_interval(poly.derivative(), lo, hi);
  candidates.push_back(lo);
  candidates.push_back(hi);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  IntervalMaximum best{candidates.front(), poly(candidates.front())};
  for (std::size_t k = 1; k < candidates.size(); ++k) {
    const double v = poly(candidates[k]);
    if (v > best.value) best = {candidates[k], v};
  }
  return best;
}

}  // namespace optdesign
