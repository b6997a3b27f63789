// optdesign: constrained D-optimal sampling allocations from JSON problem configs.
//
// Subcommands: fisher (information matrix at an allocation), optimize
// (lift-one / constrained lift-one, optionally EW and exact rounding), round
// (approximate-to-exact conversion), uniform (constrained uniform allocation),
// simulate (RMSE benchmark across sampling strategies).
//
// Exit codes: 0 success, 1 internal/numeric error, 2 user/config error.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "optdesign/optdesign.hpp"

namespace od = optdesign;
using nlohmann::json;

namespace {

// Paper-style table numbers: about four significant decimals, scientific
// notation outside a sane range.
std::string fmt_value(double x) {
  if (x == 0.0) return "0.0";
  const double a = std::abs(x);
  char buf[64];
  if (a >= 1e-4 && a < 1e6) {
    std::snprintf(buf, sizeof(buf), "%.4f", x);
    std::string s(buf);
    while (s.size() > 1 && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.push_back('0');
    return s;
  }
  std::snprintf(buf, sizeof(buf), "%.4e", x);
  return buf;
}

std::string fmt_count(long long c) { return std::to_string(c) + ".0"; }

constexpr const char* kRule =
    "--------------------------------------------------------------------------------";

std::vector<std::string> point_labels(const od::ProblemConfig& cfg) {
  if (!cfg.problem.labels.empty()) return cfg.problem.labels;
  std::vector<std::string> out(cfg.problem.point_count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::to_string(i + 1);
  return out;
}

void print_aligned_rows(std::ostream& os, const std::vector<std::string>& header,
                        const std::vector<std::pair<std::string, std::vector<std::string>>>& rows) {
  std::size_t name_w = 0;
  for (const auto& [name, _] : rows) name_w = std::max(name_w, name.size());
  std::vector<std::size_t> col_w(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    col_w[c] = header[c].size();
    for (const auto& [_, vals] : rows) col_w[c] = std::max(col_w[c], vals[c].size());
  }
  os << std::string(name_w, ' ');
  for (std::size_t c = 0; c < header.size(); ++c) {
    os << ' ' << header[c] << std::string(col_w[c] - header[c].size(), ' ');
  }
  os << '\n';
  for (const auto& [name, vals] : rows) {
    os << name << std::string(name_w - name.size(), ' ');
    for (std::size_t c = 0; c < vals.size(); ++c)
      os << ' ' << vals[c] << std::string(col_w[c] - vals[c].size(), ' ');
    os << '\n';
  }
}

void print_field(std::ostream& os, const std::string& name, const std::string& value) {
  os << name << " :\n" << value << "\n" << kRule << "\n";
}

std::vector<double> parse_weight_list(const std::string& text, std::size_t m) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw od::ConfigError("cannot parse allocation entry '" + tok + "'");
    }
  }
  if (out.size() != m)
    throw od::ConfigError("allocation needs " + std::to_string(m) + " entries, got " +
                          std::to_string(out.size()));
  return out;
}

void write_output(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out_path);
  if (!f) throw std::runtime_error("cannot open output file: " + out_path);
  f << text;
}

int thread_cap() {
  const char* env = std::getenv("OPTDESIGN_THREADS");
  if (env == nullptr) return 1;
  const int v = std::atoi(env);
  return std::max(1, std::min(v, 64));
}

struct CommonArgs {
  std::string config_path;
  std::string out_path;
  std::string format = "table";
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "problem config (JSON)")->required();
  cmd->add_option("--out", args.out_path, "write machine-readable output to this path");
  cmd->add_option("--format", args.format, "table|json|csv")
      ->check(CLI::IsMember({"table", "json", "csv"}));
  cmd->add_option("--seed", args.seed, "override the config seed");
}

od::ProblemConfig load(const CommonArgs& args) {
  od::ProblemConfig cfg = od::load_config(args.config_path);
  if (args.seed) cfg.options.seed = *args.seed;
  cfg.options.threads = thread_cap();
  return cfg;
}

// ---------------------------------------------------------------------------

int cmd_fisher(const CommonArgs& args, const std::string& w_text,
               const std::string& counts_text) {
  const od::ProblemConfig cfg = load(args);
  const std::size_t m = cfg.problem.point_count();

  od::Matrix F;
  double det = 0.0;
  json alloc_json;
  if (!counts_text.empty()) {
    const std::vector<double> raw = parse_weight_list(counts_text, m);
    std::vector<long long> counts(m);
    for (std::size_t i = 0; i < m; ++i) counts[i] = static_cast<long long>(raw[i]);
    const std::vector<double> coeffs(counts.begin(), counts.end());
    F = od::weighted_matrix_sum(od::point_fishers(cfg.problem), coeffs);
    det = od::determinant(F);
    alloc_json["counts"] = counts;
  } else {
    std::vector<double> w(m, 1.0 / static_cast<double>(m));
    if (!w_text.empty()) w = parse_weight_list(w_text, m);
    const od::ApproximateAllocation alloc(w);
    F = od::fisher_matrix(cfg.problem, alloc);
    det = od::fisher_det(cfg.problem, alloc);
    alloc_json["w"] = w;
  }

  if (args.format == "json") {
    json out;
    out["command"] = "fisher";
    out["allocation"] = alloc_json;
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < F.rows(); ++r)
      rows.emplace_back(F.row(r).begin(), F.row(r).end());
    out["F"] = rows;
    out["determinant"] = det;
    write_output(args.out_path, out.dump(2) + "\n");
    return 0;
  }

  std::ostringstream os;
  os << "Dimensions: " << F.rows() << " x " << F.cols() << "\nMatrix:\n" << kRule << "\n";
  for (std::size_t r = 0; r < F.rows(); ++r) {
    for (std::size_t c = 0; c < F.cols(); ++c) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), " %12.8f", F(r, c));
      os << buf;
    }
    os << '\n';
  }
  os << kRule << "\n";
  os << "determinant :\n" << fmt_value(det) << "\n";
  write_output(args.out_path, os.str());
  return 0;
}

// ---------------------------------------------------------------------------

json optimize_report_json(const od::OptimResult& res, bool constrained, bool ew,
                          const std::vector<std::string>& labels) {
  json out;
  out["command"] = "optimize";
  out["constrained"] = constrained;
  out["ew"] = ew;
  out["labels"] = labels;
  out["w"] = res.w;
  out["w0"] = res.w0;
  out["maximum"] = res.maximum;
  out["convergence"] = res.convergence;
  out["itmax"] = res.itmax;
  out["deriv"] = res.deriv;
  if (res.gmax)
    out["gmax"] = *res.gmax;
  else
    out["gmax"] = nullptr;
  out["reason"] = res.reason;
  return out;
}

void print_optimize_table(std::ostream& os, const od::OptimResult& res,
                          const std::vector<std::string>& labels) {
  os << "Optimal Sampling Results:\n"
     << "================================================================================\n";
  os << "Optimal approximate allocation:\n";
  std::vector<std::string> wrow, w0row;
  for (double v : res.w) wrow.push_back(fmt_value(v));
  for (double v : res.w0) w0row.push_back(fmt_value(v));
  print_aligned_rows(os, labels, {{"w ", wrow}, {"w0", w0row}});
  os << kRule << "\n";
  print_field(os, "maximum", fmt_value(res.maximum));
  print_field(os, "convergence", res.convergence ? "TRUE" : "FALSE");
  print_field(os, "itmax", fmt_value(res.itmax));
  std::string derivs;
  for (std::size_t i = 0; i < res.deriv.size(); ++i) {
    if (i) derivs += ", ";
    derivs += fmt_value(res.deriv[i]);
  }
  print_field(os, "deriv.ans", derivs);
  if (res.gmax) print_field(os, "gmax", fmt_value(*res.gmax));
  print_field(os, "reason", "\"" + res.reason + "\"");
}

void print_exact_table(std::ostream& os, const od::ExactAllocation& alloc,
                       const std::vector<double>& w_real, double det,
                       const std::vector<std::string>& labels, const char* det_label) {
  os << "Optimal exact allocation:\n";
  std::vector<std::string> arow, rrow;
  for (long long c : alloc.counts) arow.push_back(fmt_count(c));
  for (double v : w_real) rrow.push_back(fmt_value(v));
  print_aligned_rows(os, labels,
                     {{"allocation      ", arow}, {"allocation.real ", rrow}});
  os << kRule << "\n";
  print_field(os, det_label, fmt_value(det));
}

int cmd_optimize(const CommonArgs& args, bool constrained, bool ew, bool exact) {
  od::ProblemConfig cfg = load(args);
  if (constrained && !cfg.has_constraints())
    throw od::ConfigError("--constrained requires a constraints section in the config");
  if (ew && !cfg.prior)
    throw od::ConfigError("--ew requires a prior section in the config");
  if (ew && !cfg.problem.is_glm())
    throw od::ConfigError("--ew is supported for GLM problems only");

  const std::vector<od::Matrix> fis =
      ew ? od::ew_point_fishers(cfg.problem.glm(), *cfg.prior)
         : od::point_fishers(cfg.problem);

  od::OptimResult res;
  od::LinearConstraintSet cs = od::LinearConstraintSet::simplex_only(fis.size());
  if (constrained) {
    cs = cfg.constraint_set();
    res = od::liftone_constrained(fis, cs, cfg.options);
  } else {
    res = od::liftone(fis, cfg.options);
  }

  const std::vector<std::string> labels = point_labels(cfg);
  json out = optimize_report_json(res, constrained, ew, labels);

  std::optional<od::RoundingResult> rounded;
  if (exact) {
    const auto det_fn = od::make_det_criterion(cfg.problem);
    rounded = constrained
                  ? od::approx_to_exact_constrained(cfg.n, res.w, det_fn, cs)
                  : od::approx_to_exact(cfg.n, res.w, det_fn);
    out["allocation"] = rounded->alloc.counts;
    out["allocation_real"] = res.w;
    out["det_maximum"] = rounded->criterion;
  }

  if (args.format == "json") {
    write_output(args.out_path, out.dump(2) + "\n");
    return 0;
  }
  std::ostringstream os;
  print_optimize_table(os, res, labels);
  if (rounded) {
    os << '\n';
    os << "Optimal Sampling Results:\n"
       << "================================================================================\n";
    print_exact_table(os, rounded->alloc, res.w, rounded->criterion, labels, "det.maximum");
  }
  write_output(args.out_path, os.str());
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_round(const CommonArgs& args, const std::string& w_text, bool constrained) {
  od::ProblemConfig cfg = load(args);
  const std::size_t m = cfg.problem.point_count();
  if (w_text.empty()) throw od::ConfigError("round requires --w");
  const std::vector<double> w = parse_weight_list(w_text, m);
  if (constrained && !cfg.has_constraints())
    throw od::ConfigError("--constrained requires a constraints section in the config");

  const auto det_fn = od::make_det_criterion(cfg.problem);
  const od::RoundingResult r =
      constrained ? od::approx_to_exact_constrained(cfg.n, w, det_fn, cfg.constraint_set())
                  : od::approx_to_exact(cfg.n, w, det_fn);

  if (args.format == "json") {
    json out;
    out["command"] = "round";
    out["allocation"] = r.alloc.counts;
    out["allocation_real"] = w;
    out["det_maximum"] = r.criterion;
    write_output(args.out_path, out.dump(2) + "\n");
    return 0;
  }
  std::ostringstream os;
  os << "Optimal Sampling Results:\n"
     << "================================================================================\n";
  print_exact_table(os, r.alloc, w, r.criterion, point_labels(cfg), "det.maximum");
  write_output(args.out_path, os.str());
  return 0;
}

// ---------------------------------------------------------------------------

od::ExactAllocation uniform_allocation(const od::ProblemConfig& cfg, double* det_out) {
  if (!cfg.has_constraints())
    throw od::ConfigError("uniform requires bounds or constraint rows");
  if (!cfg.bounds.empty() && cfg.rows.empty()) {
    od::ExactAllocation alloc = od::bounded_uniform(cfg.bounds, cfg.n);
    if (det_out) *det_out = od::det_unif(alloc);
    return alloc;
  }
  // General constraints: greedy uniformity from one subject per stratum.
  const std::size_t m = cfg.problem.point_count();
  const std::vector<double> w00(m, 1.0 / static_cast<double>(cfg.n));
  const od::RoundingResult r =
      od::approx_to_exact_constrained(cfg.n, w00, od::det_unif, cfg.constraint_set());
  if (det_out) *det_out = r.criterion;
  return r.alloc;
}

int cmd_uniform(const CommonArgs& args) {
  const od::ProblemConfig cfg = load(args);
  double det = 0.0;
  const od::ExactAllocation alloc = uniform_allocation(cfg, &det);

  if (args.format == "json") {
    json out;
    out["command"] = "uniform";
    out["allocation"] = alloc.counts;
    out["det_maximum"] = det;
    write_output(args.out_path, out.dump(2) + "\n");
    return 0;
  }
  std::ostringstream os;
  os << "Optimal Sampling Results:\n"
     << "================================================================================\n";
  os << "Optimal exact allocation:\n";
  std::vector<std::string> arow;
  for (long long c : alloc.counts) arow.push_back(fmt_count(c));
  print_aligned_rows(os, point_labels(cfg), {{"allocation", arow}});
  os << kRule << "\n";
  print_field(os, "det.maximum", fmt_value(det));
  write_output(args.out_path, os.str());
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const CommonArgs& args) {
  od::ProblemConfig cfg = load(args);
  if (!cfg.simulation)
    throw od::ConfigError("simulate requires a simulation section in the config");
  if (!cfg.problem.is_glm() || cfg.problem.glm().link != od::Link::logit)
    throw od::ConfigError("simulate supports the logit GLM scenario only");
  if (cfg.bounds.empty())
    throw od::ConfigError("simulate requires constraints.bounds (the stratum sizes)");
  if (args.seed) cfg.simulation->seed = *args.seed;

  const od::GlmProblem& glm = cfg.problem.glm();
  const od::LinearConstraintSet cs = cfg.constraint_set();
  const auto det_fn = od::make_det_criterion(cfg.problem);

  od::SimScenario sc;
  sc.population = od::make_stratified_population(glm.X, cfg.bounds);
  sc.beta_true = glm.beta;
  sc.link = glm.link;
  sc.sample_size = cfg.n;
  sc.strategies = cfg.simulation->strategies;
  sc.replications = cfg.simulation->replications;
  sc.master_seed = cfg.simulation->seed;

  for (od::Strategy s : sc.strategies) {
    switch (s) {
      case od::Strategy::uniform:
        sc.allocations.emplace(s, uniform_allocation(cfg, nullptr));
        break;
      case od::Strategy::local_d: {
        const od::OptimResult r = od::liftone_constrained(cfg.problem, cs, cfg.options);
        sc.allocations.emplace(
            s, od::approx_to_exact_constrained(cfg.n, r.w, det_fn, cs).alloc);
        break;
      }
      case od::Strategy::ew: {
        if (!cfg.prior) throw od::ConfigError("EW strategy requires a prior section");
        const od::OptimResult r = od::liftone_constrained(
            od::ew_point_fishers(glm, *cfg.prior), cs, cfg.options);
        sc.allocations.emplace(
            s, od::approx_to_exact_constrained(cfg.n, r.w, det_fn, cs).alloc);
        break;
      }
      default:
        break;
    }
  }

  const od::RmseReport report = od::rmse_experiment(sc);

  std::ostringstream csv;
  report.to_csv(csv);

  if (args.format == "json") {
    json out;
    out["command"] = "simulate";
    out["replications"] = sc.replications;
    out["master_seed"] = sc.master_seed;
    json rows = json::array();
    for (od::Strategy s : sc.strategies)
      for (const std::string& g : report.groups) {
        const od::GroupStats st = report.stats(s, g);
        rows.push_back({{"strategy", od::strategy_name(s)},
                        {"group", g},
                        {"mean", st.mean},
                        {"sd", st.sd},
                        {"count", st.count},
                        {"missing", st.missing}});
      }
    out["summary"] = std::move(rows);
    write_output(args.out_path, out.dump(2) + "\n");
    return 0;
  }
  // CSV goes to --out when given (or to stdout under --format csv); the
  // summary table prints to stdout unless it would mix with the CSV stream.
  if (!args.out_path.empty()) {
    write_output(args.out_path, csv.str());
  } else if (args.format == "csv") {
    std::cout << csv.str();
    return 0;
  }

  std::cout << "RMSE summary (" << sc.replications << " replications, master seed "
            << sc.master_seed << "):\n";
  std::printf("%-20s %-10s %10s %10s %7s %8s\n", "strategy", "group", "mean", "sd", "fits",
              "missing");
  for (od::Strategy s : sc.strategies)
    for (const std::string& g : report.groups) {
      const od::GroupStats st = report.stats(s, g);
      std::printf("%-20s %-10s %10.4f %10.4f %7d %8d\n", od::strategy_name(s).c_str(),
                  g.c_str(), st.mean, st.sd, st.count, st.missing);
    }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained D-optimal sampling allocations"};
  app.require_subcommand(1);

  CommonArgs fisher_args, opt_args, round_args, unif_args, sim_args;
  std::string fisher_w, fisher_counts, round_w;
  bool constrained = false, ew = false, exact = false, round_constrained = false;

  CLI::App* fisher = app.add_subcommand("fisher", "Fisher information at an allocation");
  add_common(fisher, fisher_args);
  fisher->add_option("--w", fisher_w, "approximate allocation (comma-separated)");
  fisher->add_option("--counts", fisher_counts, "exact allocation counts");

  CLI::App* optimize = app.add_subcommand("optimize", "lift-one D-optimal allocation");
  add_common(optimize, opt_args);
  optimize->add_flag("--constrained", constrained, "respect the config constraint set");
  optimize->add_flag("--ew", ew, "EW D-optimality (expected information weights)");
  optimize->add_flag("--exact", exact, "also round to an exact allocation");

  CLI::App* round = app.add_subcommand("round", "approximate-to-exact conversion");
  add_common(round, round_args);
  round->add_option("--w", round_w, "approximate allocation to round")->required();
  round->add_flag("--constrained", round_constrained, "respect the config constraint set");

  CLI::App* uniform = app.add_subcommand("uniform", "constrained uniform allocation");
  add_common(uniform, unif_args);

  CLI::App* simulate = app.add_subcommand("simulate", "RMSE sampling-strategy benchmark");
  add_common(simulate, sim_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (fisher->parsed()) return cmd_fisher(fisher_args, fisher_w, fisher_counts);
    if (optimize->parsed()) return cmd_optimize(opt_args, constrained, ew, exact);
    if (round->parsed()) return cmd_round(round_args, round_w, round_constrained);
    if (uniform->parsed()) return cmd_uniform(unif_args);
    if (simulate->parsed()) return cmd_simulate(sim_args);
  } catch (const od::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const od::UnsupportedError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const od::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
