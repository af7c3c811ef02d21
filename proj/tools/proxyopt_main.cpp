// proxyopt: optimize conjunctive ML-inference query plans with correlation-
// aware proxy filters. Subcommands: gen, score, optimize, run, compare,
// report. PROXYOPT_SEED sets the default seed.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"

#include "proxyopt/config.hpp"
#include "proxyopt/report.hpp"

using namespace proxyopt;

namespace {

std::uint64_t env_default_seed() {
  const char* env = std::getenv("PROXYOPT_SEED");
  if (!env) return 0;
  return std::strtoull(env, nullptr, 10);
}

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> accuracy;
  std::optional<double> alpha_step;
  std::optional<double> eps;
  std::optional<double> head;
  std::optional<std::string> tree;
  std::optional<std::string> alloc;
  std::vector<std::string> methods;
  std::vector<std::uint64_t> seeds;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON config file")->required();
  cmd->add_option("--seed", flags.seed, "override config seed");
  cmd->add_option("--seeds", flags.seeds, "override config seed list");
  cmd->add_option("--accuracy", flags.accuracy, "target accuracy");
  cmd->add_option("--alpha-step", flags.alpha_step, "accuracy grid step");
  cmd->add_option("--eps", flags.eps, "classifier reuse tolerance");
  cmd->add_option("--head", flags.head, "optimizer head fraction (k%)");
  cmd->add_option("--tree", flags.tree, "search tree: coarse|fine");
  cmd->add_option("--alloc", flags.alloc, "allocation mode: exhaustive|hill");
  cmd->add_option("--methods", flags.methods, "methods: orig ns pp core");
}

RunConfig resolve_config(const CommonFlags& flags) {
  RunConfig config = load_config(flags.config_path);
  if (config.seed == 0) config.seed = env_default_seed();
  if (flags.seed) config.seed = *flags.seed;
  if (!flags.seeds.empty()) config.seeds = flags.seeds;
  if (flags.accuracy) config.target_accuracy = *flags.accuracy;
  if (flags.alpha_step) config.alpha_step = *flags.alpha_step;
  if (flags.eps) config.eps = *flags.eps;
  if (flags.head) config.head_fraction = *flags.head;
  if (flags.tree) config.tree = *flags.tree;
  if (flags.alloc) config.alloc_mode = *flags.alloc;
  if (!flags.methods.empty()) config.methods = flags.methods;
  config.validate();
  return config;
}

int cmd_gen(std::size_t rows, int preds, double rho, std::uint64_t seed,
            std::vector<double> sels, int dim, double noise, const std::string& out_prefix) {
  SyntheticConfig sc;
  sc.n_rows = rows;
  sc.n_predicates = preds;
  sc.correlation = rho;
  sc.seed = seed;
  sc.dim = dim > 0 ? dim : preds + 2;
  if (sels.empty()) sels.assign(preds, 0.5);
  sc.selectivities = sels;
  sc.noise_sigma = noise;
  sc.validate();

  auto [table, udfs] = generate_dataset(sc);
  save_csv(table, out_prefix + ".csv");

  nlohmann::ordered_json meta;
  meta["schema_version"] = 1;
  meta["rows"] = rows;
  meta["dim"] = sc.dim;
  meta["rho"] = rho;
  meta["seed"] = seed;
  meta["selectivities"] = sels;
  nlohmann::ordered_json cols = nlohmann::ordered_json::array();
  for (const auto& u : udfs) cols.push_back(u.output_column);
  meta["columns"] = std::move(cols);
  nlohmann::ordered_json kappas = nlohmann::ordered_json::array();
  for (int k = 0; k + 1 < preds; ++k) {
    auto cs = correlation_score(table, synthetic_column_name(k), synthetic_column_name(k + 1));
    kappas.push_back(cs.value);
  }
  meta["pair_correlations"] = kappas;
  std::ofstream meta_out(out_prefix + ".meta.json");
  meta_out << meta.dump(2) << '\n';

  std::cout << meta.dump(2) << '\n';
  return 0;
}

int cmd_score(const std::string& csv, int dim, const std::string& col_a,
              const std::string& col_b, std::size_t sample_n) {
  Table table = load_csv(csv, dim);
  auto cs = correlation_score(table, col_a, col_b, sample_n);
  nlohmann::ordered_json j;
  j["kappa2"] = cs.value;
  j["n"] = cs.n;
  j["d1"] = cs.d1;
  j["d2"] = cs.d2;
  j["degenerate"] = cs.degenerate;
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_optimize(const CommonFlags& flags, const std::string& out_path) {
  RunConfig config = resolve_config(flags);
  auto [table, query] = materialize_inputs(config, config.seed);
  CoreOptions copts;
  copts.head_fraction = config.head_fraction;
  copts.search = search_options(config, config.seed);
  CorePlanResult core = optimize_core(query, config.target_accuracy, table, copts);
  for (const auto& w : core.warnings) std::cerr << "warning: " << w << '\n';

  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["config"] = config_to_json(config);
  j["order"] = core.search.order;
  j["alphas"] = core.search.allocation.alphas;
  j["estimated_cost_per_record"] = core.search.total_cost;
  j["optimizer"] = {{"labeling_ms", core.labeling_ms},
                    {"training_ms", core.training_ms},
                    {"search_ms", core.search_ms},
                    {"trainings", core.search.stats.trainings},
                    {"scorer_reuses", core.search.stats.scorer_reuses},
                    {"allocation_calls", core.search.stats.allocation_calls},
                    {"nodes_expanded", core.search.stats.nodes_expanded},
                    {"nodes_pruned", core.search.stats.nodes_pruned},
                    {"plans_pruned", core.search.stats.plans_pruned}};
  nlohmann::ordered_json proxies = nlohmann::ordered_json::array();
  for (const auto& st : core.search.allocation.stages) proxies.push_back(proxy_to_json(st.proxy));
  j["proxies"] = std::move(proxies);

  if (out_path.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    std::ofstream out(out_path);
    out << j.dump(2) << '\n';
    std::cout << "wrote " << out_path << '\n';
  }
  return 0;
}

int cmd_run(const CommonFlags& flags, const std::string& method, const std::string& plan_path) {
  RunConfig config = resolve_config(flags);
  auto [table, query] = materialize_inputs(config, config.seed);
  auto head_rows = static_cast<long long>(
      std::ceil(config.head_fraction * static_cast<double>(table.size())));
  Table tail = tail_table(table, head_rows);
  RunReport orig_report = execute(original_plan(query), tail);

  ExecutablePlan plan;
  if (!plan_path.empty()) {
    std::ifstream in(plan_path);
    if (!in) throw ConfigError("cannot open plan: " + plan_path);
    nlohmann::json pj;
    in >> pj;
    plan.query = query;
    auto order = pj.at("order").get<std::vector<int>>();
    for (std::size_t i = 0; i < order.size(); ++i) {
      PlanStage ps;
      ps.stage = order[i];
      ps.proxy = proxy_from_json(pj.at("proxies").at(i));
      plan.stages.push_back(std::move(ps));
    }
  } else if (method == "orig") {
    plan = original_plan(query);
  } else {
    AllocOptions aopts = alloc_options(config, config.seed);
    std::vector<Record> head(table.records.begin(), table.records.begin() + head_rows);
    if (method == "ns") {
      plan = build_ns_baseline(query, config.target_accuracy, head, aopts);
    } else if (method == "pp") {
      plan = build_pp_baseline(query, config.target_accuracy, head, aopts);
    } else {
      CoreOptions copts;
      copts.head_fraction = config.head_fraction;
      copts.search = search_options(config, config.seed);
      plan = optimize_core(query, config.target_accuracy, table, copts).plan;
    }
  }

  RunReport report = execute(plan, tail);
  nlohmann::ordered_json j;
  j["rows_in"] = report.rows_in;
  j["rows_out"] = report.rows_out;
  j["simulated_cost_ms"] = report.simulated_cost_ms;
  j["cost_per_record"] =
      tail.size() ? report.simulated_cost_ms / static_cast<double>(tail.size()) : 0.0;
  j["measured_accuracy"] = measure_accuracy(report, orig_report);
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_compare(const CommonFlags& flags, const std::string& out_json,
                const std::string& out_csv, const std::string& out_stages) {
  RunConfig config = resolve_config(flags);
  ExperimentReport report = run_experiment(config);
  if (!out_json.empty()) write_report_json(report, out_json);
  if (!out_csv.empty()) write_report_csv(report, out_csv);
  if (!out_stages.empty()) write_stage_csv(report, out_stages);
  if (out_json.empty()) std::cout << report_to_json(report).dump(2) << '\n';

  if (!report.failed_methods.empty()) {
    std::cerr << "failed methods:";
    for (const auto& m : report.failed_methods) std::cerr << ' ' << m;
    std::cerr << '\n';
    return 1;
  }
  return 0;
}

int cmd_report(const std::string& in_json, const std::string& out_csv,
               const std::string& out_stages) {
  std::ifstream in(in_json);
  if (!in) throw ConfigError("cannot open report: " + in_json);
  nlohmann::json j;
  in >> j;

  std::ofstream out(out_csv);
  out << "seed,method,cost_ms,cost_per_record,rows_in,rows_out,measured_accuracy\n";
  out.precision(17);
  for (const auto& run : j.at("runs")) {
    for (const auto& m : run.at("methods")) {
      if (!m.at("ok").get<bool>()) continue;
      out << run.at("seed").get<std::uint64_t>() << ',' << m.at("method").get<std::string>()
          << ',' << m.at("cost_ms").get<double>() << ',' << m.at("cost_per_record").get<double>()
          << ',' << m.at("rows_in").get<long long>() << ',' << m.at("rows_out").get<long long>()
          << ',' << m.at("measured_accuracy").get<double>() << '\n';
    }
  }
  if (!out_stages.empty()) {
    std::ofstream st(out_stages);
    st.precision(17);
    st << "seed,method,position,stage,entered,passed_proxy,passed_pred,"
          "estimated_reduction,measured_reduction\n";
    for (const auto& run : j.at("runs")) {
      for (const auto& m : run.at("methods")) {
        if (!m.at("ok").get<bool>()) continue;
        int pos = 0;
        for (const auto& s : m.at("stages")) {
          st << run.at("seed").get<std::uint64_t>() << ','
             << m.at("method").get<std::string>() << ',' << pos++ << ','
             << s.at("stage").get<int>() << ',' << s.at("entered").get<long long>() << ','
             << s.at("passed_proxy").get<long long>() << ','
             << s.at("passed_pred").get<long long>() << ','
             << s.at("estimated_reduction").get<double>() << ','
             << s.at("measured_reduction").get<double>() << '\n';
        }
      }
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Correlation-aware proxy-filter plan optimizer"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a synthetic correlated dataset");
  std::size_t rows = 0;
  int preds = 2, dim = 0;
  double rho = 0.0, noise = 0.1;
  std::uint64_t gen_seed = env_default_seed();
  std::vector<double> sels;
  std::string out_prefix = "dataset";
  gen->add_option("--rows", rows, "number of rows")->required();
  gen->add_option("--preds", preds, "number of predicates");
  gen->add_option("--rho", rho, "correlation knob in [0,1]");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--sels", sels, "per-predicate target selectivities");
  gen->add_option("--dim", dim, "feature dimension (default preds+2)");
  gen->add_option("--noise", noise, "feature noise sigma");
  gen->add_option("--out", out_prefix, "output path prefix");

  // score
  auto* score = app.add_subcommand("score", "Chi-squared correlation of two label columns");
  std::string score_csv, col_a, col_b;
  int score_dim = 0;
  std::size_t sample_n = 10000;
  score->add_option("--csv", score_csv)->required();
  score->add_option("--dim", score_dim)->required();
  score->add_option("--col-a", col_a)->required();
  score->add_option("--col-b", col_b)->required();
  score->add_option("--sample-n", sample_n);

  // optimize
  auto* optimize = app.add_subcommand("optimize", "Build an optimized plan on the head sample");
  CommonFlags opt_flags;
  std::string opt_out;
  add_common(optimize, opt_flags);
  optimize->add_option("--out", opt_out, "plan JSON output path");

  // run
  auto* run = app.add_subcommand("run", "Execute one method (or a saved plan) on the tail");
  CommonFlags run_flags;
  std::string run_method = "core", run_plan;
  add_common(run, run_flags);
  run->add_option("--method", run_method, "orig|ns|pp|core");
  run->add_option("--plan", run_plan, "saved plan JSON to execute");

  // compare
  auto* compare = app.add_subcommand("compare", "Run all requested methods across seeds");
  CommonFlags cmp_flags;
  std::string cmp_json, cmp_csv, cmp_stages;
  add_common(compare, cmp_flags);
  compare->add_option("--out", cmp_json, "report JSON path");
  compare->add_option("--csv", cmp_csv, "summary CSV path");
  compare->add_option("--stages-csv", cmp_stages, "per-stage CSV path");

  // report
  auto* rep = app.add_subcommand("report", "Convert a report JSON to plot-ready CSV");
  std::string rep_in, rep_csv = "report.csv", rep_stages;
  rep->add_option("--in", rep_in)->required();
  rep->add_option("--csv", rep_csv);
  rep->add_option("--stages-csv", rep_stages);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      return cmd_gen(rows, preds, rho, gen_seed, sels, dim, noise, out_prefix);
    }
    if (score->parsed()) return cmd_score(score_csv, score_dim, col_a, col_b, sample_n);
    if (optimize->parsed()) return cmd_optimize(opt_flags, opt_out);
    if (run->parsed()) return cmd_run(run_flags, run_method, run_plan);
    if (compare->parsed()) return cmd_compare(cmp_flags, cmp_json, cmp_csv, cmp_stages);
    if (rep->parsed()) return cmd_report(rep_in, rep_csv, rep_stages);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
