#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "optdesign/allocation.hpp"
#include "optdesign/errors.hpp"
#include "optdesign/feasible_region.hpp"
#include "optdesign/fisher.hpp"
#include "optdesign/numkernel.hpp"
#include "optdesign/rng.hpp"

namespace optdesign {

struct OptimOptions {
  double reltol = 1e-10;  // relative objective gain per sweep below which a run stops
  int maxit = 100;        // sweep cap per run
  bool random = true;     // multiple random restarts
  int nram = 4;           // restart count when random
  std::uint64_t seed = 0;
  double epsilon = 1e-8;  // certificate tolerance, scaled by max(1, objective)
  std::optional<std::vector<double>> w00;  // explicit start for the first run only
  int threads = 1;        // parallel restarts cap

  /// Diagnostics hook: called with (w, objective) after every accepted move.
  std::function<void(std::span<const double>, double)> on_iterate;
};

struct OptimResult {
  std::vector<double> w;
  std::vector<double> w0;
  double maximum = 0.0;
  int itmax = 0;
  bool convergence = false;
  std::vector<double> deriv;          // f_i'(w_i) along each lift-one path
  std::optional<double> gmax;         // LP certificate value, when computed
  std::string reason;                 // "all derivatives <= 0" | "gmax <= 0" | "not converged"
};

namespace detail {

inline double objective_at(const std::vector<Matrix>& fis, std::span<const double> w) {
  return determinant(weighted_matrix_sum(fis, w));
}

// Interpolate f_i(z) = |F(w_i(z))| on [lo, hi]. F(w_i(z)) is affine in z, so the
// determinant is a polynomial of degree <= p; p+1 Chebyshev nodes pin it exactly.
// Returns the polynomial of f/scale together with the scale used.
struct FittedPath {
  Polynomial poly;
  double scale = 1.0;
};

inline FittedPath fit_liftone_path(const std::vector<Matrix>& fis,
                                   std::span<const double> w, std::size_t i, double lo,
                                   double hi) {
  const std::size_t p = fis[i].rows();
  const double wi = w[i];

  // F(w_i(z)) = z * F_i + (1 - z) * G with G the rescaled remainder matrix.
  Matrix g(p, p);
  for (std::size_t j = 0; j < fis.size(); ++j) {
    if (j == i || w[j] == 0.0) continue;
    g += fis[j] * (w[j] / (1.0 - wi));
  }

  const std::vector<double> nodes = chebyshev_nodes(lo, hi, p + 1);
  std::vector<std::pair<double, double>> samples(nodes.size());
  double scale = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const double z = nodes[k];
    const Matrix fz = fis[i] * z + g * (1.0 - z);
    samples[k] = {z, determinant(fz)};
    scale = std::max(scale, std::abs(samples[k].second));
  }
  if (scale == 0.0) return {Polynomial(std::vector<double>{0.0}), 0.0};
  for (auto& s : samples) s.second /= scale;
  return {fit_polynomial(samples), scale};
}

struct LiftOneRun {
  std::vector<double> w;
  std::vector<double> w0;
  double objective = 0.0;
  int sweeps = 0;
  bool converged = false;
};

inline LiftOneRun run_liftone(const std::vector<Matrix>& fis, const LinearConstraintSet& cs,
                              std::vector<double> start, const OptimOptions& opts,
                              std::uint64_t sweep_seed) {
  const std::size_t m = fis.size();
  LiftOneRun run;
  run.w0 = start;
  run.w = std::move(start);
  run.objective = objective_at(fis, run.w);

  Rng rng(sweep_seed);
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);

  for (int sweep = 1; sweep <= opts.maxit; ++sweep) {
    run.sweeps = sweep;
    const double before = run.objective;
    rng.shuffle(order.begin(), order.end());

    for (std::size_t i : order) {
      if (run.w[i] >= 1.0 - 1e-12) continue;
      const Interval iv = liftone_interval(i, run.w, cs);
      if (iv.empty || iv.width() < 1e-12) continue;

      const FittedPath path = fit_liftone_path(fis, run.w, i, iv.lo, iv.hi);
      if (path.scale == 0.0) continue;  // objective vanishes along the whole path
      const IntervalMaximum zstar = maximize_on_interval(path.poly, iv.lo, iv.hi);
      if (zstar.z == run.w[i]) continue;

      const ApproximateAllocation moved =
          lift_one_path(ApproximateAllocation(run.w), i, zstar.z);
      const double obj_new = objective_at(fis, moved.w);
      if (obj_new > run.objective) {
        run.w = moved.w;
        run.objective = obj_new;
        if (opts.on_iterate) opts.on_iterate(run.w, run.objective);
      }
    }

    if (before > 0.0 && run.objective - before <= opts.reltol * before) {
      run.converged = true;
      break;
    }
    if (before == 0.0 && run.objective == 0.0) break;  // all paths singular; flag it
  }
  return run;
}

struct Certificate {
  std::vector<double> deriv;
  std::optional<double> gmax;
  std::vector<double> gmax_vertex;  // LP argmax, when the LP ran
  bool certified = false;
  std::string reason = "not converged";
};

// Step 7/8 optimality decision: first-order derivative test; when positive
// directions remain, the LP bound gmax = max_S sum_i w_i (1 - w_i*) f_i'(w_i*)
// settles whether any feasible ascent direction exists.
inline Certificate certify(const std::vector<Matrix>& fis, std::span<const double> w,
                           double objective, const LinearConstraintSet& cs,
                           double epsilon) {
  const std::size_t m = fis.size();
  Certificate cert;
  cert.deriv.resize(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (w[i] >= 1.0 - 1e-12) {
      cert.deriv[i] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const FittedPath path = fit_liftone_path(fis, w, i, 0.0, 1.0);
    cert.deriv[i] = path.scale * path.poly.derivative()(w[i]);
  }

  const double tol = epsilon * std::max(1.0, std::abs(objective));
  bool all_nonpositive = true;
  for (double d : cert.deriv)
    if (!(d <= tol)) all_nonpositive = false;

  if (all_nonpositive) {
    cert.certified = true;
    cert.reason = "all derivatives <= 0";
    return cert;
  }

  std::vector<double> c(m);
  for (std::size_t i = 0; i < m; ++i)
    c[i] = std::isnan(cert.deriv[i]) ? 0.0 : (1.0 - w[i]) * cert.deriv[i];
  const LpResult lp = lp_maximize(c, cs);
  cert.gmax = lp.value;
  cert.gmax_vertex = lp.x;
  if (*cert.gmax <= tol) {
    cert.certified = true;
    cert.reason = "gmax <= 0";
  }
  return cert;
}

struct ScoredRun {
  LiftOneRun run;
  Certificate cert;
};

// Exact determinant maximization along the segment (1-a) from + a to, a in [0,1].
// The blend is affine in a, so the determinant is again a degree <= p polynomial.
struct SegmentMaximum {
  std::vector<double> w;
  double objective = 0.0;
};

inline SegmentMaximum maximize_on_segment(const std::vector<Matrix>& fis,
                                          std::span<const double> from,
                                          std::span<const double> to) {
  const std::size_t m = fis.size();
  const std::size_t p = fis[0].rows();
  const auto blend = [&](double a) {
    std::vector<double> w(m);
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      w[j] = (1.0 - a) * from[j] + a * to[j];
      sum += w[j];
    }
    for (double& v : w) v /= sum;
    return w;
  };

  const std::vector<double> nodes = chebyshev_nodes(0.0, 1.0, p + 1);
  std::vector<std::pair<double, double>> samples(nodes.size());
  double scale = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    samples[k] = {nodes[k], objective_at(fis, blend(nodes[k]))};
    scale = std::max(scale, std::abs(samples[k].second));
  }
  if (scale == 0.0) return {blend(0.0), 0.0};
  for (auto& s : samples) s.second /= scale;
  const IntervalMaximum top = maximize_on_interval(fit_polynomial(samples), 0.0, 1.0);
  std::vector<double> w = blend(top.z);
  return {w, objective_at(fis, w)};
}

// One restart, including certificate-guided recovery. Coordinate paths can
// stall on boundary faces whose active rows couple several weights (once a cap
// binds, no other coordinate may shrink), and they cannot land exactly on
// vertices. When a converged sweep fails its certificate, the run therefore
// line-maximizes the determinant toward the certificate LP's argmax vertex --
// the gap gmax is exactly the directional derivative of that segment, so a
// failed certificate guarantees strict ascent -- and resumes sweeping from the
// maximizer. Objectives increase strictly across recoveries, so the loop
// terminates; the budget is a safety stop.
inline ScoredRun execute_run(const std::vector<Matrix>& fis, const LinearConstraintSet& cs,
                             std::vector<double> start, const OptimOptions& opts,
                             std::uint64_t run_seed) {
  const std::vector<double> w0 = start;

  LiftOneRun seg = run_liftone(fis, cs, std::move(start), opts, split_seed(run_seed, 1));
  Certificate cert = certify(fis, seg.w, seg.objective, cs, opts.epsilon);
  int total_sweeps = seg.sweeps;

  ScoredRun best{seg, cert};

  for (std::size_t jump = 0; jump < 100; ++jump) {
    if (!seg.converged || cert.certified || cert.gmax_vertex.empty()) break;
    const SegmentMaximum line = maximize_on_segment(fis, seg.w, cert.gmax_vertex);
    if (!(line.objective > seg.objective)) break;

    seg = run_liftone(fis, cs, line.w, opts, split_seed(run_seed, 2 + jump));
    cert = certify(fis, seg.w, seg.objective, cs, opts.epsilon);
    total_sweeps += seg.sweeps;

    const bool seg_ok = seg.converged && cert.certified;
    const bool best_ok = best.run.converged && best.cert.certified;
    if ((seg_ok && !best_ok) || (seg_ok == best_ok && seg.objective > best.run.objective))
      best = {seg, cert};
    if (seg_ok) break;
  }

  best.run.w0 = w0;
  best.run.sweeps = total_sweeps;
  return best;
}

inline OptimResult merge_runs(std::vector<ScoredRun> runs) {
  // Certified runs outrank uncertified ones; then higher objective wins and the
  // earliest run breaks exact ties, so parallel and sequential merges agree.
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    const bool cand_cert = runs[r].cert.certified && runs[r].run.converged;
    const bool best_cert = runs[best].cert.certified && runs[best].run.converged;
    if (cand_cert != best_cert) {
      if (cand_cert) best = r;
      continue;
    }
    if (runs[r].run.objective > runs[best].run.objective) best = r;
  }

  ScoredRun& top = runs[best];
  OptimResult out;
  out.w = std::move(top.run.w);
  out.w0 = std::move(top.run.w0);
  out.maximum = top.run.objective;
  out.itmax = top.run.sweeps;
  out.deriv = std::move(top.cert.deriv);
  out.gmax = top.cert.gmax;
  const bool ok = top.run.converged && top.cert.certified;
  out.convergence = ok;
  out.reason = ok ? top.cert.reason : "not converged";
  return out;
}

inline OptimResult drive_liftone(const std::vector<Matrix>& fis,
                                 const LinearConstraintSet& cs, const OptimOptions& opts,
                                 bool unconstrained_default_start) {
  if (fis.empty()) throw DimensionError("liftone: no design points");
  const std::size_t m = fis.size();
  if (cs.dimension() != m) throw DimensionError("constraint dimension mismatch");
  require_feasible(cs);

  if (opts.w00) {
    if (opts.w00->size() != m) throw DimensionError("w00 length mismatch");
    if (!is_feasible(*opts.w00, cs, 1e-8))
      throw InfeasibleError("starting allocation w00 violates the constraint set");
  }

  const int nruns = opts.random ? std::max(1, opts.nram) : 1;
  const auto start_for = [&](int r) -> std::vector<double> {
    if (r == 0) {
      if (opts.w00) return *opts.w00;
      if (unconstrained_default_start)
        return std::vector<double>(m, 1.0 / static_cast<double>(m));
    }
    return random_feasible(cs, split_seed(split_seed(opts.seed, r), 0));
  };

  std::vector<ScoredRun> runs(nruns);
  const auto execute = [&](int r) {
    runs[r] = execute_run(fis, cs, start_for(r), opts, split_seed(opts.seed, r));
  };

  const int threads = std::min(std::max(1, opts.threads), nruns);
  if (threads <= 1) {
    for (int r = 0; r < nruns; ++r) execute(r);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < nruns; r = next.fetch_add(1)) execute(r);
      });
    for (std::thread& t : pool) t.join();
  }
  return merge_runs(std::move(runs));
}

}  // namespace detail

/// Unconstrained lift-one: coordinate ascent over seeded random sweep orders,
/// each move solving the exact one-dimensional problem on [0, 1].
inline OptimResult liftone(const std::vector<Matrix>& point_fishers,
                           const OptimOptions& opts = {}) {
  const LinearConstraintSet cs = LinearConstraintSet::simplex_only(point_fishers.size());
  return detail::drive_liftone(point_fishers, cs, opts, /*unconstrained default*/ true);
}

inline OptimResult liftone(const DesignProblem& problem, const OptimOptions& opts = {}) {
  return liftone(point_fishers(problem), opts);
}

/// Constrained lift-one: every move is confined to the feasible z-interval, and
/// converged runs carry a first-order or LP (gmax) optimality certificate.
/// Uncertified runs fall back to the best objective with reason "not converged".
inline OptimResult liftone_constrained(const std::vector<Matrix>& point_fishers,
                                       const LinearConstraintSet& cs,
                                       const OptimOptions& opts = {}) {
  return detail::drive_liftone(point_fishers, cs, opts, /*unconstrained default*/ false);
}

inline OptimResult liftone_constrained(const DesignProblem& problem,
                                       const LinearConstraintSet& cs,
                                       const OptimOptions& opts = {}) {
  return liftone_constrained(point_fishers(problem), cs, opts);
}

/// d/dz |F(w_i(z))| at z = w_i via the interpolated path polynomial.
inline double directional_derivative(const std::vector<Matrix>& point_fishers,
                                     std::span<const double> w, std::size_t i) {
  if (i >= w.size()) throw DimensionError("directional_derivative: index out of range");
  if (w[i] >= 1.0)
    throw DegeneratePathError("directional_derivative: coordinate carries weight 1");
  const detail::FittedPath path = detail::fit_liftone_path(point_fishers, w, i, 0.0, 1.0);
  return path.scale * path.poly.derivative()(w[i]);
}

inline double directional_derivative(const DesignProblem& problem,
                                     std::span<const double> w, std::size_t i) {
  return directional_derivative(point_fishers(problem), w, i);
}

}  // namespace optdesign
