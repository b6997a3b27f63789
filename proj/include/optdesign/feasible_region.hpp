#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "optdesign/errors.hpp"
#include "optdesign/rng.hpp"

namespace optdesign {

enum class Dir { le, eq, ge };

struct ConstraintRow {
  std::vector<double> a;
  Dir dir = Dir::le;
  double b = 0.0;
};

/// Linear constraints over the allocation simplex. The simplex itself
/// (sum w = 1, w_i >= 0) is implicit; rows only add to it.
class LinearConstraintSet {
 public:
  explicit LinearConstraintSet(std::size_t m) : m_(m) {
    if (m < 1) throw DimensionError("constraint set dimension must be positive");
  }

  static LinearConstraintSet simplex_only(std::size_t m) { return LinearConstraintSet(m); }

  void add(std::vector<double> a, Dir dir, double b) {
    if (a.size() != m_) throw DimensionError("constraint row length mismatch");
    for (double v : a)
      if (!std::isfinite(v)) throw DimensionError("constraint coefficients must be finite");
    if (!std::isfinite(b)) throw DimensionError("constraint rhs must be finite");
    rows_.push_back({std::move(a), dir, b});
  }

  /// Per-coordinate caps w_i <= ub_i.
  void add_upper_bounds(std::span<const double> ub) {
    if (ub.size() != m_) throw DimensionError("upper bound length mismatch");
    for (std::size_t i = 0; i < m_; ++i) {
      std::vector<double> a(m_, 0.0);
      a[i] = 1.0;
      add(std::move(a), Dir::le, ub[i]);
    }
  }

  std::size_t dimension() const { return m_; }
  std::span<const ConstraintRow> rows() const { return rows_; }

 private:
  std::size_t m_;
  std::vector<ConstraintRow> rows_;
};

inline bool is_feasible(std::span<const double> w, const LinearConstraintSet& cs,
                        double eps = 1e-9) {
  if (w.size() != cs.dimension()) throw DimensionError("allocation length mismatch");
  double sum = 0.0;
  for (double v : w) {
    if (v < -eps) return false;
    sum += v;
  }
  if (std::abs(sum - 1.0) > eps) return false;
  for (const ConstraintRow& row : cs.rows()) {
    const double val = std::inner_product(row.a.begin(), row.a.end(), w.begin(), 0.0);
    switch (row.dir) {
      case Dir::le:
        if (val > row.b + eps) return false;
        break;
      case Dir::ge:
        if (val < row.b - eps) return false;
        break;
      case Dir::eq:
        if (std::abs(val - row.b) > eps) return false;
        break;
    }
  }
  return true;
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool empty = false;

  static Interval none() { return {0.0, 0.0, true}; }
  double width() const { return empty ? 0.0 : hi - lo; }
};

/// Exact feasible range of the lift-one variable: substituting the affine path
/// w_i(z) into each row turns it into a half-line in z; intersect them all with
/// [0, 1]. No caller-supplied bound functions are needed.
inline Interval liftone_interval(std::size_t i, std::span<const double> w,
                                 const LinearConstraintSet& cs) {
  if (w.size() != cs.dimension()) throw DimensionError("allocation length mismatch");
  if (i >= w.size()) throw DimensionError("liftone_interval: index out of range");
  if (w[i] == 1.0)
    throw DegeneratePathError("liftone_interval: coordinate already carries weight 1");

  double lo = 0.0, hi = 1.0;
  bool empty = false;

  // Along the path, row value is v(z) = t + z * (a_i - t) with t the rescaled
  // contribution of the other coordinates.
  for (const ConstraintRow& row : cs.rows()) {
    const double ai = row.a[i];
    const double aw = std::inner_product(row.a.begin(), row.a.end(), w.begin(), 0.0);
    const double t = (aw - ai * w[i]) / (1.0 - w[i]);
    const double slope = ai - t;
    const double slope_tol = 1e-13 * std::max({1.0, std::abs(ai), std::abs(t)});

    const auto bound_above = [&](double limit) {  // v(z) <= limit
      if (slope > slope_tol)
        hi = std::min(hi, (limit - t) / slope);
      else if (slope < -slope_tol)
        lo = std::max(lo, (limit - t) / slope);
      else if (t > limit + 1e-10)
        empty = true;
    };
    const auto bound_below = [&](double limit) {  // v(z) >= limit
      if (slope > slope_tol)
        lo = std::max(lo, (limit - t) / slope);
      else if (slope < -slope_tol)
        hi = std::min(hi, (limit - t) / slope);
      else if (t < limit - 1e-10)
        empty = true;
    };

    switch (row.dir) {
      case Dir::le:
        bound_above(row.b);
        break;
      case Dir::ge:
        bound_below(row.b);
        break;
      case Dir::eq:
        bound_above(row.b);
        bound_below(row.b);
        break;
    }
    if (empty) return Interval::none();
  }

  if (lo > hi + 1e-12) return Interval::none();
  lo = std::clamp(lo, 0.0, 1.0);
  hi = std::clamp(hi, 0.0, 1.0);
  if (lo > hi) lo = hi;
  return {lo, hi, false};
}

struct LpResult {
  std::vector<double> x;
  double value = 0.0;
};

namespace detail {

// Dense two-phase simplex under Bland's rule. Problem sizes here are tiny
// (m up to ~100 weights) and gmax certificates need exact vertices, so a
// textbook tableau beats an interior-point dependency.
class SimplexSolver {
 public:
  SimplexSolver(std::span<const double> c, const LinearConstraintSet& cs) : m_(cs.dimension()) {
    if (c.size() != m_) throw DimensionError("objective length mismatch");

    struct Row {
      std::vector<double> a;
      Dir dir;
      double b;
    };
    std::vector<Row> rows;
    for (const ConstraintRow& r : cs.rows()) rows.push_back({r.a, r.dir, r.b});
    rows.push_back({std::vector<double>(m_, 1.0), Dir::eq, 1.0});

    for (Row& r : rows) {
      if (r.b < 0.0) {
        for (double& v : r.a) v = -v;
        r.b = -r.b;
        if (r.dir == Dir::le)
          r.dir = Dir::ge;
        else if (r.dir == Dir::ge)
          r.dir = Dir::le;
      }
    }

    const std::size_t nrows = rows.size();
    std::size_t nslack = 0, nart = 0;
    for (const Row& r : rows) {
      if (r.dir != Dir::eq) ++nslack;
      if (r.dir != Dir::le) ++nart;
    }
    ncols_ = m_ + nslack + nart;
    art_begin_ = m_ + nslack;
    tab_.assign(nrows, std::vector<double>(ncols_ + 1, 0.0));
    basis_.assign(nrows, 0);

    std::size_t slack = m_, art = art_begin_;
    for (std::size_t r = 0; r < nrows; ++r) {
      std::copy(rows[r].a.begin(), rows[r].a.end(), tab_[r].begin());
      tab_[r][ncols_] = rows[r].b;
      switch (rows[r].dir) {
        case Dir::le:
          tab_[r][slack] = 1.0;
          basis_[r] = slack++;
          break;
        case Dir::ge:
          tab_[r][slack++] = -1.0;
          tab_[r][art] = 1.0;
          basis_[r] = art++;
          break;
        case Dir::eq:
          tab_[r][art] = 1.0;
          basis_[r] = art++;
          break;
      }
    }
    objective_.assign(c.begin(), c.end());
    objective_.resize(ncols_, 0.0);
    blocked_.assign(ncols_, false);
  }

  LpResult solve() {
    // Phase 1: drive the artificial variables to zero.
    std::vector<double> phase1(ncols_, 0.0);
    for (std::size_t j = art_begin_; j < ncols_; ++j) phase1[j] = -1.0;
    load_objective(phase1);
    iterate();
    if (objval_ < -kFeasTol)
      throw InfeasibleError("constraint set infeasible (phase-1 residual " +
                            std::to_string(-objval_) + ")");
    remove_artificials();

    // Phase 2: the caller's objective over the feasible basis.
    load_objective(objective_);
    iterate();

    LpResult out;
    out.x.assign(m_, 0.0);
    for (std::size_t r = 0; r < tab_.size(); ++r)
      if (basis_[r] < m_) out.x[basis_[r]] = tab_[r][ncols_];
    out.value = std::inner_product(objective_.begin(), objective_.begin() + m_,
                                   out.x.begin(), 0.0);
    return out;
  }

 private:
  static constexpr double kPivotTol = 1e-11;
  static constexpr double kFeasTol = 1e-9;

  void load_objective(const std::vector<double>& c) {
    red_.assign(c.begin(), c.end());
    red_.resize(ncols_, 0.0);
    objval_ = 0.0;
    for (std::size_t r = 0; r < tab_.size(); ++r) {
      const double cb = c[basis_[r]];
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j < ncols_; ++j) red_[j] -= cb * tab_[r][j];
      objval_ += cb * tab_[r][ncols_];
    }
  }

  void pivot(std::size_t prow, std::size_t pcol) {
    const double piv = tab_[prow][pcol];
    for (double& v : tab_[prow]) v /= piv;
    for (std::size_t r = 0; r < tab_.size(); ++r) {
      if (r == prow) continue;
      const double f = tab_[r][pcol];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= ncols_; ++j) tab_[r][j] -= f * tab_[prow][j];
    }
    const double f = red_[pcol];
    if (f != 0.0) {
      for (std::size_t j = 0; j < ncols_; ++j) red_[j] -= f * tab_[prow][j];
      objval_ += f * tab_[prow][ncols_];
    }
    basis_[prow] = pcol;
  }

  void iterate() {
    for (long guard = 0; guard < 100000; ++guard) {
      // Bland's rule: smallest improving column, then smallest basic index on ties.
      std::size_t enter = ncols_;
      for (std::size_t j = 0; j < ncols_; ++j)
        if (!blocked_[j] && red_[j] > kPivotTol) {
          enter = j;
          break;
        }
      if (enter == ncols_) return;

      std::size_t leave = tab_.size();
      double best_ratio = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < tab_.size(); ++r) {
        const double a = tab_[r][enter];
        if (a <= kPivotTol) continue;
        const double ratio = tab_[r][ncols_] / a;
        if (leave == tab_.size() || ratio < best_ratio - 1e-12) {
          best_ratio = ratio;
          leave = r;
        } else if (ratio <= best_ratio + 1e-12 && basis_[r] < basis_[leave]) {
          best_ratio = std::min(best_ratio, ratio);
          leave = r;
        }
      }
      if (leave == tab_.size())
        throw InfeasibleError("linear program unbounded (simplex row missing?)");
      pivot(leave, enter);
    }
    throw std::runtime_error("simplex iteration limit exceeded");
  }

  void remove_artificials() {
    // Pivot lingering artificial basics out on any usable column; a fully zero
    // row is redundant and can be ignored by blocking its artificial.
    for (std::size_t r = 0; r < tab_.size(); ++r) {
      if (basis_[r] < art_begin_) continue;
      std::size_t col = art_begin_;
      for (std::size_t j = 0; j < art_begin_; ++j)
        if (std::abs(tab_[r][j]) > 1e-9) {
          col = j;
          break;
        }
      if (col < art_begin_) pivot(r, col);
    }
    blocked_.assign(ncols_, false);
    for (std::size_t j = art_begin_; j < ncols_; ++j) blocked_[j] = true;
  }

  std::size_t m_;
  std::size_t ncols_ = 0;
  std::size_t art_begin_ = 0;
  std::vector<std::vector<double>> tab_;
  std::vector<std::size_t> basis_;
  std::vector<double> objective_;
  std::vector<double> red_;
  std::vector<char> blocked_;
  double objval_ = 0.0;
};

}  // namespace detail

/// Vertex maximizer of c^T w over the constraint set (two-phase dense simplex,
/// deterministic under Bland's rule). Throws InfeasibleError when the set is empty.
inline LpResult lp_maximize(std::span<const double> c, const LinearConstraintSet& cs) {
  detail::SimplexSolver solver(c, cs);
  return solver.solve();
}

/// Throws InfeasibleError when the constraint set has no point.
inline void require_feasible(const LinearConstraintSet& cs) {
  const std::vector<double> zero(cs.dimension(), 0.0);
  lp_maximize(zero, cs);
}

/// A strictly feasible point (when the region has interior): a Dirichlet-weighted
/// convex combination of m+1 LP vertices from seeded random objectives.
/// Deterministic given the seed.
inline std::vector<double> random_feasible(const LinearConstraintSet& cs,
                                           std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t m = cs.dimension();
  std::vector<std::vector<double>> vertices;
  vertices.reserve(m + 1);
  for (std::size_t k = 0; k < m + 1; ++k) {
    std::vector<double> c(m);
    for (double& v : c) v = rng.normal();
    vertices.push_back(lp_maximize(c, cs).x);
  }
  std::vector<double> gamma(m + 1);
  double total = 0.0;
  for (double& g : gamma) {
    g = rng.exponential();
    total += g;
  }
  std::vector<double> w(m, 0.0);
  for (std::size_t k = 0; k < vertices.size(); ++k) {
    const double lambda = gamma[k] / total;
    for (std::size_t j = 0; j < m; ++j) w[j] += lambda * vertices[k][j];
  }
  double sum = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= sum;
  return w;
}

}  // namespace optdesign
