#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "optdesign/allocation.hpp"
#include "optdesign/errors.hpp"
#include "optdesign/feasible_region.hpp"

namespace optdesign {

/// Indices eligible for one more subject at the current allocation.
using GrowthSet = std::function<std::vector<bool>(const ExactAllocation&)>;

/// Criterion evaluated by the greedy rounding step.
using AllocationCriterion = std::function<double(const ExactAllocation&)>;

inline GrowthSet growth_all(std::size_t m) {
  return [m](const ExactAllocation&) { return std::vector<bool>(m, true); };
}

/// Growth set derived from a constraint polytope: index i stays eligible while
/// (alloc + e_i)/n keeps every <= and == row satisfied at the final total n.
/// Lower-bound (>=) rows cannot be broken by adding subjects and are ignored
/// during growth.
inline GrowthSet growth_from_constraints(const LinearConstraintSet& cs, long long n) {
  return [cs, n](const ExactAllocation& alloc) {
    const std::size_t m = alloc.size();
    std::vector<bool> eligible(m, true);
    for (const ConstraintRow& row : cs.rows()) {
      if (row.dir == Dir::ge) continue;
      double val = 0.0;
      for (std::size_t j = 0; j < m; ++j)
        val += row.a[j] * static_cast<double>(alloc.counts[j]);
      const double limit = row.b * static_cast<double>(n) + 1e-9;
      for (std::size_t i = 0; i < m; ++i)
        if (eligible[i] && val + row.a[i] > limit) eligible[i] = false;
    }
    return eligible;
  };
}

struct RoundingResult {
  ExactAllocation alloc;
  double criterion = 0.0;
};

/// Floor n*w, then hand out the remaining subjects one at a time to the eligible
/// index that maximizes the criterion (ties to the smallest index).
inline RoundingResult approx_to_exact_constrained(long long n, std::span<const double> w,
                                                  const AllocationCriterion& criterion,
                                                  const GrowthSet& growth) {
  const std::size_t m = w.size();
  if (m == 0) throw DimensionError("rounding: empty allocation");
  if (n < 0) throw DimensionError("rounding: negative total");

  std::vector<long long> counts(m);
  for (std::size_t i = 0; i < m; ++i)
    counts[i] = static_cast<long long>(
        std::floor(static_cast<double>(n) * w[i] + 1e-9));

  ExactAllocation alloc(counts);
  long long total = alloc.total();
  while (total < n) {
    std::vector<bool> eligible = growth(alloc);
    std::size_t best = m;
    double best_val = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (!eligible[i]) continue;
      ++alloc.counts[i];
      const double val = criterion(alloc);
      --alloc.counts[i];
      if (best == m || val > best_val) {
        best = i;
        best_val = val;
      }
    }
    if (best == m)
      throw StuckAllocationError(
          "no eligible index left with " + std::to_string(n - total) +
          " subjects unassigned; constraint set too tight for this start");
    ++alloc.counts[best];
    ++total;
  }
  return {alloc, criterion(alloc)};
}

/// Same, but the floor start is also validated against the polytope.
inline RoundingResult approx_to_exact_constrained(long long n, std::span<const double> w,
                                                  const AllocationCriterion& criterion,
                                                  const LinearConstraintSet& cs) {
  std::vector<long long> counts(w.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    counts[i] = static_cast<long long>(
        std::floor(static_cast<double>(n) * w[i] + 1e-9));
  for (const ConstraintRow& row : cs.rows()) {
    if (row.dir == Dir::ge) continue;
    double val = 0.0;
    for (std::size_t j = 0; j < counts.size(); ++j)
      val += row.a[j] * static_cast<double>(counts[j]);
    if (val > row.b * static_cast<double>(n) + 1e-9)
      throw InfeasibleError("floor allocation already violates a constraint row");
  }
  return approx_to_exact_constrained(n, w, criterion, growth_from_constraints(cs, n));
}

inline RoundingResult approx_to_exact(long long n, std::span<const double> w,
                                      const AllocationCriterion& criterion) {
  return approx_to_exact_constrained(n, w, criterion, growth_all(w.size()));
}

/// Uniformity criterion: the product of the positive counts. Greedy maximization
/// always feeds the smallest stratum, so it waterfills toward the most uniform
/// feasible allocation.
inline double det_unif(const ExactAllocation& alloc) {
  double prod = 1.0;
  for (long long c : alloc.counts)
    if (c >= 1) prod *= static_cast<double>(c);
  return prod;
}

/// Most-uniform allocation under per-stratum caps: n_i = min(k, N_i) with the
/// waterfilling level k, remainder going +1 to the groups with the most headroom
/// (then smallest index).
inline ExactAllocation bounded_uniform(std::span<const long long> Ni, long long n) {
  const std::size_t m = Ni.size();
  if (m == 0) throw DimensionError("bounded_uniform: no strata");
  long long cap = 0;
  for (long long v : Ni) {
    if (v < 0) throw DimensionError("bounded_uniform: negative stratum size");
    cap += v;
  }
  if (cap < n) throw InfeasibleError("stratum sizes sum below the requested total");

  const auto level_sum = [&](long long k) {
    long long s = 0;
    for (long long v : Ni) s += std::min(k, v);
    return s;
  };
  long long k = 0;
  while (level_sum(k + 1) <= n) ++k;

  std::vector<long long> counts(m);
  for (std::size_t i = 0; i < m; ++i) counts[i] = std::min(k, Ni[i]);
  long long remainder = n - level_sum(k);

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < m; ++i)
    if (Ni[i] > k) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return Ni[a] - k > Ni[b] - k;
  });
  for (std::size_t idx = 0; idx < order.size() && remainder > 0; ++idx, --remainder)
    ++counts[order[idx]];

  return ExactAllocation(std::move(counts));
}

}  // namespace optdesign
