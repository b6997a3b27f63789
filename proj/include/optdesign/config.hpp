#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "optdesign/allocation.hpp"
#include "optdesign/errors.hpp"
#include "optdesign/ew.hpp"
#include "optdesign/feasible_region.hpp"
#include "optdesign/glm.hpp"
#include "optdesign/mlm.hpp"
#include "optdesign/optimizer.hpp"
#include "optdesign/simharness.hpp"

namespace optdesign {

struct SimulationConfig {
  int replications = 100;
  std::uint64_t seed = 0;
  std::vector<Strategy> strategies;
};

/// One problem per JSON document; arrays are row-major with explicit dims so
/// goldens stay diff-able.
struct ProblemConfig {
  DesignProblem problem;
  long long n = 0;
  std::vector<long long> bounds;        // per-stratum caps N_i (empty when absent)
  std::vector<ConstraintRow> rows;      // general rows over w
  std::optional<PriorSpec> prior;
  OptimOptions options;
  std::optional<SimulationConfig> simulation;

  bool has_constraints() const { return !bounds.empty() || !rows.empty(); }

  /// Bounds become rows w_i <= min(1, N_i/n); general rows pass through.
  LinearConstraintSet constraint_set() const {
    const std::size_t m = problem.point_count();
    LinearConstraintSet cs(m);
    if (!bounds.empty()) {
      std::vector<double> ub(m);
      for (std::size_t i = 0; i < m; ++i)
        ub[i] = std::min(1.0, static_cast<double>(bounds[i]) / static_cast<double>(n));
      cs.add_upper_bounds(ub);
    }
    for (const ConstraintRow& r : rows) cs.add(r.a, r.dir, r.b);
    return cs;
  }
};

namespace detail {

using nlohmann::json;

inline const json& member(const json& j, const std::string& key, const std::string& path) {
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError(path + ": missing required field '" + key + "'");
  return *it;
}

inline std::vector<double> double_array(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path + ": expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError(path + ": expected numeric entries");
    out.push_back(v.get<double>());
  }
  return out;
}

inline Matrix matrix_2d(const json& j, const std::string& path) {
  const auto dims = member(j, "dims", path);
  if (!dims.is_array() || dims.size() != 2)
    throw ConfigError(path + ".dims: expected [rows, cols]");
  const auto data = double_array(member(j, "data", path), path + ".data");
  const std::size_t r = dims[0].get<std::size_t>(), c = dims[1].get<std::size_t>();
  if (data.size() != r * c)
    throw ConfigError(path + ".data: expected " + std::to_string(r * c) + " entries");
  return Matrix(r, c, data);
}

inline Dir dir_from_string(const std::string& s, const std::string& path) {
  if (s == "<=") return Dir::le;
  if (s == ">=") return Dir::ge;
  if (s == "==" || s == "=") return Dir::eq;
  throw ConfigError(path + ": direction must be one of \"<=\", \"==\", \">=\"");
}

inline std::string dir_to_string(Dir d) {
  switch (d) {
    case Dir::le: return "<=";
    case Dir::ge: return ">=";
    case Dir::eq: return "==";
  }
  return "?";
}

inline DesignProblem parse_model(const json& j) {
  const std::string type = member(j, "type", "model").get<std::string>();
  DesignProblem problem;
  if (type == "glm") {
    GlmProblem glm;
    glm.link = link_from_name(member(j, "link", "model").get<std::string>());
    glm.X = matrix_2d(member(j, "X", "model"), "model.X");
    glm.beta = double_array(member(j, "beta", "model"), "model.beta");
    if (j.contains("sigma")) glm.sigma = j["sigma"].get<double>();
    problem.model = std::move(glm);
  } else if (type == "mlm") {
    MlmProblem mlm;
    mlm.kind = mlm_kind_from_name(member(j, "kind", "model").get<std::string>());
    mlm.J = member(j, "J", "model").get<std::size_t>();
    mlm.theta = double_array(member(j, "theta", "model"), "model.theta");
    const auto& xi = member(j, "Xi", "model");
    const auto dims = member(xi, "dims", "model.Xi");
    if (!dims.is_array() || dims.size() != 3)
      throw ConfigError("model.Xi.dims: expected [m, J, p]");
    const std::size_t m = dims[0].get<std::size_t>(), J = dims[1].get<std::size_t>(),
                      p = dims[2].get<std::size_t>();
    if (J != mlm.J) throw ConfigError("model.Xi.dims: J does not match model.J");
    if (p != mlm.theta.size())
      throw ConfigError("model.Xi.dims: p does not match model.theta length");
    const auto data = double_array(member(xi, "data", "model.Xi"), "model.Xi.data");
    if (data.size() != m * J * p)
      throw ConfigError("model.Xi.data: expected " + std::to_string(m * J * p) +
                        " entries");
    for (std::size_t i = 0; i < m; ++i) {
      std::vector<double> block(data.begin() + static_cast<long>(i * J * p),
                                data.begin() + static_cast<long>((i + 1) * J * p));
      mlm.Xi.emplace_back(J, p, std::move(block));
    }
    problem.model = std::move(mlm);
  } else {
    throw ConfigError("model.type: expected \"glm\" or \"mlm\"");
  }
  return problem;
}

}  // namespace detail

inline ProblemConfig parse_config(const nlohmann::json& j) {
  using detail::member;
  ProblemConfig cfg;
  cfg.problem = detail::parse_model(member(j, "model", "$"));

  cfg.n = member(j, "n", "$").get<long long>();
  if (cfg.n <= 0) throw ConfigError("n: sample size must be positive");

  const std::size_t m = cfg.problem.point_count();
  if (j.contains("labels")) {
    for (const auto& v : j["labels"]) cfg.problem.labels.push_back(v.get<std::string>());
    if (cfg.problem.labels.size() != m)
      throw ConfigError("labels: expected one label per design point");
  }

  if (j.contains("constraints")) {
    const auto& c = j["constraints"];
    if (c.contains("bounds")) {
      for (const auto& v : c["bounds"]) cfg.bounds.push_back(v.get<long long>());
      if (cfg.bounds.size() != m)
        throw ConfigError("constraints.bounds: expected one cap per design point");
    }
    if (c.contains("rows")) {
      std::size_t idx = 0;
      for (const auto& r : c["rows"]) {
        const std::string path = "constraints.rows[" + std::to_string(idx++) + "]";
        ConstraintRow row;
        row.a = detail::double_array(member(r, "coeffs", path), path + ".coeffs");
        if (row.a.size() != m)
          throw ConfigError(path + ".coeffs: expected one coefficient per design point");
        row.dir = detail::dir_from_string(member(r, "dir", path).get<std::string>(), path);
        row.b = member(r, "rhs", path).get<double>();
        cfg.rows.push_back(std::move(row));
      }
    }
  }

  if (j.contains("prior")) {
    const auto& p = j["prior"];
    const std::string type = member(p, "type", "prior").get<std::string>();
    if (type == "uniform") {
      PriorSpec prior = PriorSpec::box(
          detail::double_array(member(p, "lo", "prior"), "prior.lo"),
          detail::double_array(member(p, "hi", "prior"), "prior.hi"));
      if (p.contains("quadrature_order"))
        prior.quadrature_order = p["quadrature_order"].get<int>();
      cfg.prior = std::move(prior);
    } else if (type == "sample") {
      const Matrix draws = detail::matrix_2d(member(p, "draws", "prior"), "prior.draws");
      std::vector<std::vector<double>> rows;
      for (std::size_t r = 0; r < draws.rows(); ++r)
        rows.emplace_back(draws.row(r).begin(), draws.row(r).end());
      cfg.prior = PriorSpec::from_sample(std::move(rows));
    } else {
      throw ConfigError("prior.type: expected \"uniform\" or \"sample\"");
    }
    cfg.prior->validate(cfg.problem.param_count());
  }

  if (j.contains("options")) {
    const auto& o = j["options"];
    if (o.contains("reltol")) cfg.options.reltol = o["reltol"].get<double>();
    if (o.contains("maxit")) cfg.options.maxit = o["maxit"].get<int>();
    if (o.contains("random")) cfg.options.random = o["random"].get<bool>();
    if (o.contains("nram")) cfg.options.nram = o["nram"].get<int>();
    if (o.contains("seed")) cfg.options.seed = o["seed"].get<std::uint64_t>();
    if (o.contains("epsilon")) cfg.options.epsilon = o["epsilon"].get<double>();
    if (cfg.options.reltol <= 0 || cfg.options.maxit < 1 || cfg.options.nram < 1)
      throw ConfigError("options: reltol must be > 0, maxit >= 1, nram >= 1");
  }

  if (j.contains("simulation")) {
    const auto& s = j["simulation"];
    SimulationConfig sim;
    if (s.contains("replications")) sim.replications = s["replications"].get<int>();
    if (s.contains("seed")) sim.seed = s["seed"].get<std::uint64_t>();
    for (const auto& v : member(s, "strategies", "simulation"))
      sim.strategies.push_back(strategy_from_name(v.get<std::string>()));
    if (sim.replications < 1)
      throw ConfigError("simulation.replications: must be at least 1");
    cfg.simulation = std::move(sim);
  }

  try {
    cfg.problem.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  return cfg;
}

inline ProblemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  try {
    return parse_config(j);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline nlohmann::json emit_config(const ProblemConfig& cfg) {
  using nlohmann::json;
  json j;

  json model;
  if (cfg.problem.is_glm()) {
    const GlmProblem& g = cfg.problem.glm();
    model["type"] = "glm";
    model["link"] = link_name(g.link);
    model["X"] = {{"dims", {g.X.rows(), g.X.cols()}}, {"data", g.X.data()}};
    model["beta"] = g.beta;
    model["sigma"] = g.sigma;
  } else {
    const MlmProblem& mlm = cfg.problem.mlm();
    model["type"] = "mlm";
    model["kind"] = mlm_kind_name(mlm.kind);
    model["J"] = mlm.J;
    model["theta"] = mlm.theta;
    std::vector<double> data;
    for (const Matrix& xi : mlm.Xi)
      data.insert(data.end(), xi.data().begin(), xi.data().end());
    model["Xi"] = {{"dims", {mlm.Xi.size(), mlm.J, mlm.theta.size()}}, {"data", data}};
  }
  j["model"] = std::move(model);
  j["n"] = cfg.n;

  if (!cfg.problem.labels.empty()) j["labels"] = cfg.problem.labels;

  if (cfg.has_constraints()) {
    json c;
    if (!cfg.bounds.empty()) c["bounds"] = cfg.bounds;
    if (!cfg.rows.empty()) {
      json rows = json::array();
      for (const ConstraintRow& r : cfg.rows)
        rows.push_back({{"coeffs", r.a},
                        {"dir", detail::dir_to_string(r.dir)},
                        {"rhs", r.b}});
      c["rows"] = std::move(rows);
    }
    j["constraints"] = std::move(c);
  }

  if (cfg.prior) {
    json p;
    if (cfg.prior->is_sample()) {
      p["type"] = "sample";
      std::vector<double> data;
      for (const auto& d : cfg.prior->sample) data.insert(data.end(), d.begin(), d.end());
      p["draws"] = {{"dims", {cfg.prior->sample.size(), cfg.prior->sample[0].size()}},
                    {"data", data}};
    } else {
      p["type"] = "uniform";
      p["lo"] = cfg.prior->lo;
      p["hi"] = cfg.prior->hi;
      p["quadrature_order"] = cfg.prior->quadrature_order;
    }
    j["prior"] = std::move(p);
  }

  j["options"] = {{"reltol", cfg.options.reltol}, {"maxit", cfg.options.maxit},
                  {"random", cfg.options.random}, {"nram", cfg.options.nram},
                  {"seed", cfg.options.seed},     {"epsilon", cfg.options.epsilon}};

  if (cfg.simulation) {
    json s;
    s["replications"] = cfg.simulation->replications;
    s["seed"] = cfg.simulation->seed;
    json names = json::array();
    for (Strategy st : cfg.simulation->strategies) names.push_back(strategy_name(st));
    s["strategies"] = std::move(names);
    j["simulation"] = std::move(s);
  }
  return j;
}

}  // namespace optdesign
