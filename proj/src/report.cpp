#include "proxyopt/report.hpp"

#include <fstream>

namespace proxyopt {

namespace {

MethodResult run_method(const std::string& method, const RunConfig& config,
                        const QuerySpec& query, const Table& table, std::uint64_t seed,
                        const RunReport& orig_tail_report, const Table& tail) {
  MethodResult mr;
  mr.method = method;
  AllocOptions aopts = alloc_options(config, seed);

  auto head_rows = static_cast<long long>(
      std::ceil(config.head_fraction * static_cast<double>(table.size())));

  ExecutablePlan plan;
  if (method == "orig") {
    plan = original_plan(query);
  } else if (method == "ns") {
    std::vector<Record> head(table.records.begin(), table.records.begin() + head_rows);
    plan = build_ns_baseline(query, config.target_accuracy, head, aopts);
  } else if (method == "pp") {
    std::vector<Record> head(table.records.begin(), table.records.begin() + head_rows);
    plan = build_pp_baseline(query, config.target_accuracy, head, aopts);
  } else {  // core
    CoreOptions copts;
    copts.head_fraction = config.head_fraction;
    copts.search = search_options(config, seed);
    CorePlanResult core = optimize_core(query, config.target_accuracy, table, copts);
    plan = std::move(core.plan);
    mr.labeling_ms = core.labeling_ms;
    mr.training_ms = core.training_ms;
    mr.search_ms = core.search_ms;
    mr.trainings = core.search.stats.trainings;
    mr.scorer_reuses = core.search.stats.scorer_reuses;
    mr.nodes_expanded = core.search.stats.nodes_expanded;
    mr.nodes_pruned = core.search.stats.nodes_pruned;
    mr.plans_pruned = core.search.stats.plans_pruned;
    mr.order = core.search.order;
    mr.alphas = core.search.allocation.alphas;
  }

  RunReport report = execute(plan, tail);
  mr.cost_ms = report.simulated_cost_ms;
  mr.cost_per_record =
      tail.size() ? report.simulated_cost_ms / static_cast<double>(tail.size()) : 0.0;
  mr.rows_in = report.rows_in;
  mr.rows_out = report.rows_out;
  mr.measured_accuracy =
      method == "orig" ? 1.0 : measure_accuracy(report, orig_tail_report);
  mr.stage_counts = report.stage_counts;
  for (const auto& sc : report.stage_counts) {
    double measured = sc.entered > 0 ? 1.0 - static_cast<double>(sc.passed_proxy) /
                                                 static_cast<double>(sc.entered)
                                     : 0.0;
    mr.measured_reductions.push_back(measured);
    mr.estimated_reductions.push_back(sc.estimated_reduction);
  }
  mr.ok = true;
  return mr;
}

}  // namespace

ExperimentReport run_experiment(const RunConfig& config) {
  config.validate();
  ExperimentReport report;
  report.config = config;

  std::vector<std::uint64_t> seeds = config.seeds.empty()
                                         ? std::vector<std::uint64_t>{config.seed}
                                         : config.seeds;
  for (std::uint64_t seed : seeds) {
    SeedRun run;
    run.seed = seed;
    auto [table, query] = materialize_inputs(config, seed);

    // Correlation scores between adjacent predicate columns, CORDS-style on a
    // 10k-row sample. Labels must exist: synthetic tables carry them; CSV
    // tables carry whatever the file had.
    for (std::size_t i = 0; i + 1 < query.stages.size(); ++i) {
      try {
        auto cs = correlation_score(table, query.stages[i].pred.column,
                                    query.stages[i + 1].pred.column);
        run.pair_correlations.push_back(cs.value);
      } catch (const std::exception&) {
        run.pair_correlations.push_back(0.0);
      }
    }

    auto head_rows = static_cast<long long>(
        std::ceil(config.head_fraction * static_cast<double>(table.size())));
    Table tail = tail_table(table, head_rows);
    RunReport orig_report = execute(original_plan(query), tail);

    for (const auto& method : config.methods) {
      try {
        run.methods.push_back(
            run_method(method, config, query, table, seed, orig_report, tail));
      } catch (const std::exception& e) {
        MethodResult mr;
        mr.method = method;
        mr.ok = false;
        mr.error = e.what();
        run.methods.push_back(mr);
        report.failed_methods.push_back(method);
      }
    }
    report.runs.push_back(std::move(run));
  }
  return report;
}

nlohmann::ordered_json report_to_json(const ExperimentReport& report) {
  nlohmann::ordered_json j;
  j["schema_version"] = report.schema_version;
  j["config"] = config_to_json(report.config);
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  for (const auto& run : report.runs) {
    nlohmann::ordered_json r;
    r["seed"] = run.seed;
    r["pair_correlations"] = run.pair_correlations;
    nlohmann::ordered_json methods = nlohmann::ordered_json::array();
    for (const auto& m : run.methods) {
      nlohmann::ordered_json mj;
      mj["method"] = m.method;
      mj["ok"] = m.ok;
      if (!m.ok) {
        mj["error"] = m.error;
        methods.push_back(std::move(mj));
        continue;
      }
      mj["cost_ms"] = m.cost_ms;
      mj["cost_per_record"] = m.cost_per_record;
      mj["rows_in"] = m.rows_in;
      mj["rows_out"] = m.rows_out;
      mj["measured_accuracy"] = m.measured_accuracy;
      nlohmann::ordered_json stages = nlohmann::ordered_json::array();
      for (std::size_t i = 0; i < m.stage_counts.size(); ++i) {
        const auto& sc = m.stage_counts[i];
        stages.push_back({{"stage", sc.stage},
                          {"entered", sc.entered},
                          {"passed_proxy", sc.passed_proxy},
                          {"passed_pred", sc.passed_pred},
                          {"estimated_reduction", m.estimated_reductions[i]},
                          {"measured_reduction", m.measured_reductions[i]}});
      }
      mj["stages"] = std::move(stages);
      if (m.method == "core") {
        mj["optimizer"] = {{"labeling_ms", m.labeling_ms},
                           {"training_ms", m.training_ms},
                           {"search_ms", m.search_ms},
                           {"trainings", m.trainings},
                           {"scorer_reuses", m.scorer_reuses},
                           {"nodes_expanded", m.nodes_expanded},
                           {"nodes_pruned", m.nodes_pruned},
                           {"plans_pruned", m.plans_pruned},
                           {"order", m.order},
                           {"alphas", m.alphas}};
      }
      methods.push_back(std::move(mj));
    }
    r["methods"] = std::move(methods);
    runs.push_back(std::move(r));
  }
  j["runs"] = std::move(runs);
  return j;
}

void write_report_json(const ExperimentReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write report: " + path);
  out << report_to_json(report).dump(2) << '\n';
}

void write_report_csv(const ExperimentReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write report: " + path);
  out.precision(17);
  out << "seed,method,cost_ms,cost_per_record,rows_in,rows_out,measured_accuracy\n";
  for (const auto& run : report.runs) {
    for (const auto& m : run.methods) {
      if (!m.ok) continue;
      out << run.seed << ',' << m.method << ',' << m.cost_ms << ',' << m.cost_per_record << ','
          << m.rows_in << ',' << m.rows_out << ',' << m.measured_accuracy << '\n';
    }
  }
}

void write_stage_csv(const ExperimentReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write report: " + path);
  out.precision(17);
  out << "seed,method,position,stage,entered,passed_proxy,passed_pred,"
         "estimated_reduction,measured_reduction\n";
  for (const auto& run : report.runs) {
    for (const auto& m : run.methods) {
      if (!m.ok) continue;
      for (std::size_t i = 0; i < m.stage_counts.size(); ++i) {
        const auto& sc = m.stage_counts[i];
        out << run.seed << ',' << m.method << ',' << i << ',' << sc.stage << ',' << sc.entered
            << ',' << sc.passed_proxy << ',' << sc.passed_pred << ','
            << m.estimated_reductions[i] << ',' << m.measured_reductions[i] << '\n';
      }
    }
  }
}

}  // namespace proxyopt
