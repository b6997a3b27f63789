#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "optdesign/allocation.hpp"
#include "optdesign/errors.hpp"
#include "optdesign/glm.hpp"
#include "optdesign/numkernel.hpp"
#include "optdesign/rng.hpp"

namespace optdesign {

/// Finite population for sampling benchmarks: one covariate row per individual
/// plus a stratum label (0-based).
struct Population {
  Matrix covariates;                    // N x p rows, intercept column included
  std::vector<std::size_t> labels;      // length N, values in [0, m)
  std::vector<long long> stratum_sizes; // length m

  std::size_t size() const { return labels.size(); }

  void validate() const {
    if (covariates.rows() != labels.size())
      throw DimensionError("population covariate rows must match label count");
    std::vector<long long> seen(stratum_sizes.size(), 0);
    for (std::size_t lab : labels) {
      if (lab >= stratum_sizes.size())
        throw DimensionError("population label out of range");
      ++seen[lab];
    }
    if (seen != stratum_sizes)
      throw DimensionError("stratum sizes do not match the labels");
  }
};

/// Population with N_i identical individuals per design point, in stratum order.
inline Population make_stratified_population(const Matrix& design_rows,
                                             std::span<const long long> Ni) {
  if (design_rows.rows() != Ni.size())
    throw DimensionError("stratum count must match design rows");
  long long total = 0;
  for (long long v : Ni) {
    if (v < 0) throw DimensionError("negative stratum size");
    total += v;
  }
  Matrix cov(static_cast<std::size_t>(total), design_rows.cols());
  std::vector<std::size_t> labels(static_cast<std::size_t>(total));
  std::size_t at = 0;
  for (std::size_t i = 0; i < Ni.size(); ++i)
    for (long long k = 0; k < Ni[i]; ++k, ++at) {
      std::copy(design_rows.row(i).begin(), design_rows.row(i).end(),
                cov.row(at).begin());
      labels[at] = i;
    }
  return {std::move(cov), std::move(labels), std::vector<long long>(Ni.begin(), Ni.end())};
}

namespace detail {

inline double inverse_link_mean(Link link, double eta) {
  switch (link) {
    case Link::logit:
      return expit(eta);
    case Link::probit:
      return 0.5 * std::erfc(-eta * 0.70710678118654752440);
    case Link::cloglog:
      return -std::expm1(-std::exp(eta));
    case Link::loglog:
      return std::exp(-std::exp(-eta));
    default:
      throw UnsupportedError("response generation needs a binary-response link");
  }
}

}  // namespace detail

/// Independent Bernoulli responses with mean invlink(x^T beta); deterministic per rng.
inline std::vector<int> generate_binary_responses(const Population& pop,
                                                  std::span<const double> beta, Link link,
                                                  Rng& rng) {
  if (pop.covariates.cols() != beta.size())
    throw DimensionError("coefficient length must match population covariates");
  std::vector<int> y(pop.size());
  for (std::size_t k = 0; k < pop.size(); ++k) {
    const auto row = pop.covariates.row(k);
    const double eta = std::inner_product(row.begin(), row.end(), beta.begin(), 0.0);
    y[k] = rng.bernoulli(detail::inverse_link_mean(link, eta)) ? 1 : 0;
  }
  return y;
}

/// Within-stratum SRSWOR by sequential selection: scanning the population once,
/// each unit is accepted with probability (wanted - taken)/(remaining in stratum).
inline std::vector<std::size_t> stratified_sample(std::span<const std::size_t> labels,
                                                  const ExactAllocation& wanted, Rng& rng) {
  const std::size_t m = wanted.size();
  std::vector<long long> sizes(m, 0);
  for (std::size_t lab : labels) {
    if (lab >= m) throw DimensionError("label out of range");
    ++sizes[lab];
  }
  for (std::size_t i = 0; i < m; ++i)
    if (wanted.counts[i] > sizes[i])
      throw InfeasibleError("stratum " + std::to_string(i + 1) +
                            " cannot supply the requested sample");

  std::vector<long long> taken(m, 0), seen(m, 0);
  std::vector<std::size_t> out;
  out.reserve(static_cast<std::size_t>(wanted.total()));
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const std::size_t i = labels[k];
    ++seen[i];
    if (taken[i] >= wanted.counts[i]) continue;
    const double p = static_cast<double>(wanted.counts[i] - taken[i]) /
                     static_cast<double>(sizes[i] - seen[i] + 1);
    if (rng.uniform01() < p) {
      ++taken[i];
      out.push_back(k);
    }
  }
  return out;
}

/// Uniform n-subset of {0..N-1}, same sequential-selection scheme.
inline std::vector<std::size_t> srswor(std::size_t N, std::size_t n, Rng& rng) {
  if (n > N) throw InfeasibleError("srswor: sample larger than population");
  std::vector<std::size_t> out;
  out.reserve(n);
  std::size_t taken = 0;
  for (std::size_t k = 0; k < N && taken < n; ++k) {
    const double p = static_cast<double>(n - taken) / static_cast<double>(N - k);
    if (rng.uniform01() < p) {
      ++taken;
      out.push_back(k);
    }
  }
  return out;
}

struct LogisticFit {
  std::vector<double> beta;
  bool converged = false;
  int iterations = 0;
};

/// Maximum-likelihood logistic regression by IRLS. Separated or singular data
/// comes back with converged = false; estimates beyond |beta| = 15 are treated
/// as separation since the score can still dip under tolerance on its way out.
inline LogisticFit fit_logistic(const Matrix& X, std::span<const int> y) {
  if (X.rows() != y.size()) throw DimensionError("fit_logistic: row count mismatch");
  const std::size_t n = X.rows(), p = X.cols();
  LogisticFit fit;
  fit.beta.assign(p, 0.0);

  for (int iter = 1; iter <= 50; ++iter) {
    fit.iterations = iter;
    std::vector<double> score(p, 0.0);
    Matrix info(p, p);
    for (std::size_t k = 0; k < n; ++k) {
      const auto row = X.row(k);
      const double eta =
          std::inner_product(row.begin(), row.end(), fit.beta.begin(), 0.0);
      const double mu = detail::expit(eta);
      const double resid = static_cast<double>(y[k]) - mu;
      const double wk = std::max(mu * (1.0 - mu), 1e-10);
      for (std::size_t j = 0; j < p; ++j) score[j] += row[j] * resid;
      info.add_scaled_outer(wk, row);
    }

    double score_max = 0.0;
    for (double s : score) score_max = std::max(score_max, std::abs(s));
    if (score_max < 1e-8) {
      fit.converged = true;
      break;
    }

    Matrix rhs(p, 1);
    for (std::size_t j = 0; j < p; ++j) rhs(j, 0) = score[j];
    Matrix step;
    try {
      step = solve(info, rhs);
    } catch (const SingularMatrixError&) {
      fit.converged = false;
      return fit;
    }
    for (std::size_t j = 0; j < p; ++j) {
      fit.beta[j] += step(j, 0);
      if (!std::isfinite(fit.beta[j])) {
        fit.converged = false;
        return fit;
      }
    }
  }

  for (double b : fit.beta)
    if (std::abs(b) > 15.0) fit.converged = false;
  return fit;
}

// ---------------------------------------------------------------------------
// RMSE benchmark across sampling strategies
// ---------------------------------------------------------------------------

enum class Strategy { full, srswor, uniform, local_d, ew };

inline std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::full: return "full";
    case Strategy::srswor: return "srswor";
    case Strategy::uniform: return "constrained-uniform";
    case Strategy::local_d: return "local-D";
    case Strategy::ew: return "EW";
  }
  return "?";
}

inline Strategy strategy_from_name(const std::string& name) {
  if (name == "full") return Strategy::full;
  if (name == "srswor") return Strategy::srswor;
  if (name == "constrained-uniform" || name == "uniform") return Strategy::uniform;
  if (name == "local-D") return Strategy::local_d;
  if (name == "EW") return Strategy::ew;
  throw UnsupportedError("unknown sampling strategy: " + name);
}

struct SimScenario {
  Population population;
  std::vector<double> beta_true;   // same length as covariate columns
  Link link = Link::logit;
  long long sample_size = 0;       // per-strategy n (full ignores it)
  std::vector<Strategy> strategies;
  std::map<Strategy, ExactAllocation> allocations;  // for uniform / local-D / EW
  int replications = 100;
  std::uint64_t master_seed = 0;
  std::vector<std::string> coef_names;  // defaults to beta0..beta{p-1}
};

struct RmseRecord {
  int replication = 0;
  Strategy strategy = Strategy::full;
  std::string group;
  double rmse = 0.0;
  bool missing = false;
};

struct GroupStats {
  double mean = 0.0;
  double sd = 0.0;
  int count = 0;
  int missing = 0;
};

struct RmseReport {
  std::vector<RmseRecord> records;
  std::vector<Strategy> strategies;
  std::vector<std::string> groups;

  /// NA-tolerant aggregation: missing replications drop out of mean and sd.
  GroupStats stats(Strategy s, const std::string& group) const {
    GroupStats out;
    double sum = 0.0, sumsq = 0.0;
    for (const RmseRecord& r : records) {
      if (r.strategy != s || r.group != group) continue;
      if (r.missing) {
        ++out.missing;
        continue;
      }
      ++out.count;
      sum += r.rmse;
      sumsq += r.rmse * r.rmse;
    }
    if (out.count > 0) out.mean = sum / out.count;
    if (out.count > 1)
      out.sd = std::sqrt(std::max(0.0, (sumsq - sum * sum / out.count) / (out.count - 1)));
    return out;
  }

  void to_csv(std::ostream& os) const {
    os << "replication,strategy,coefficient_group,rmse\n";
    char buf[64];
    for (const RmseRecord& r : records) {
      os << r.replication << ',' << strategy_name(r.strategy) << ',' << r.group << ',';
      if (r.missing) {
        os << "NA";
      } else {
        std::snprintf(buf, sizeof(buf), "%.17g", r.rmse);
        os << buf;
      }
      os << '\n';
    }
  }
};

/// Replicated comparison of sampling strategies: fresh responses per replication,
/// one sample and one logistic fit per strategy, RMSE per coefficient group.
/// Seeds derive from the master seed as split(split(master, rep), stream), so
/// the full experiment is reproducible and replications are independent.
inline RmseReport rmse_experiment(const SimScenario& scenario) {
  scenario.population.validate();
  const std::size_t p = scenario.population.covariates.cols();
  if (scenario.beta_true.size() != p)
    throw DimensionError("true coefficient length must match covariates");
  for (Strategy s : scenario.strategies)
    if (s != Strategy::full && s != Strategy::srswor && !scenario.allocations.count(s))
      throw DimensionError("strategy " + strategy_name(s) + " needs an allocation");

  std::vector<std::string> names = scenario.coef_names;
  if (names.empty()) {
    names.resize(p);
    for (std::size_t j = 0; j < p; ++j) names[j] = "beta" + std::to_string(j);
  }

  RmseReport report;
  report.strategies = scenario.strategies;
  report.groups.push_back(names[0]);
  report.groups.push_back("pooled");
  for (std::size_t j = 1; j < p; ++j) report.groups.push_back(names[j]);

  const Matrix& cov = scenario.population.covariates;
  for (int rep = 1; rep <= scenario.replications; ++rep) {
    const std::uint64_t rep_seed = split_seed(scenario.master_seed, rep);
    Rng response_rng(split_seed(rep_seed, 0));
    const std::vector<int> y =
        generate_binary_responses(scenario.population, scenario.beta_true, scenario.link,
                                  response_rng);

    for (Strategy s : scenario.strategies) {
      Rng rng(split_seed(rep_seed, 1 + static_cast<std::uint64_t>(s)));
      std::vector<std::size_t> idx;
      switch (s) {
        case Strategy::full:
          idx.resize(scenario.population.size());
          std::iota(idx.begin(), idx.end(), 0);
          break;
        case Strategy::srswor:
          idx = srswor(scenario.population.size(),
                       static_cast<std::size_t>(scenario.sample_size), rng);
          break;
        default:
          idx = stratified_sample(scenario.population.labels, scenario.allocations.at(s),
                                  rng);
      }

      Matrix xs(idx.size(), p);
      std::vector<int> ys(idx.size());
      for (std::size_t k = 0; k < idx.size(); ++k) {
        std::copy(cov.row(idx[k]).begin(), cov.row(idx[k]).end(), xs.row(k).begin());
        ys[k] = y[idx[k]];
      }
      const LogisticFit fit = fit_logistic(xs, ys);

      const auto push = [&](const std::string& group, double value) {
        report.records.push_back({rep, s, group, fit.converged ? value : 0.0,
                                  !fit.converged});
      };
      double pooled = 0.0;
      for (std::size_t j = 1; j < p; ++j) {
        const double err = fit.converged ? fit.beta[j] - scenario.beta_true[j] : 0.0;
        pooled += err * err;
      }
      push(names[0], fit.converged ? std::abs(fit.beta[0] - scenario.beta_true[0]) : 0.0);
      push("pooled", std::sqrt(pooled / static_cast<double>(p - 1)));
      for (std::size_t j = 1; j < p; ++j)
        push(names[j],
             fit.converged ? std::abs(fit.beta[j] - scenario.beta_true[j]) : 0.0);
    }
  }
  return report;
}

}  // namespace optdesign
