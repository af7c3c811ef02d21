#pragma once

#include <string>
#include <vector>

#include "proxyopt/config.hpp"
#include "proxyopt/exec.hpp"

#include "json.hpp"

namespace proxyopt {

struct MethodResult {
  std::string method;
  bool ok = false;
  std::string error;
  double cost_ms = 0.0;
  double cost_per_record = 0.0;
  long long rows_in = 0;
  long long rows_out = 0;
  double measured_accuracy = 1.0;
  std::vector<StageCounts> stage_counts;
  std::vector<double> measured_reductions;   // per executed stage
  std::vector<double> estimated_reductions;  // what the optimizer expected
  // core-only optimizer stats
  double labeling_ms = 0.0, training_ms = 0.0, search_ms = 0.0;
  long long trainings = 0, scorer_reuses = 0;
  int nodes_expanded = 0, nodes_pruned = 0, plans_pruned = 0;
  std::vector<int> order;
  std::vector<double> alphas;
};

struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<MethodResult> methods;
  std::vector<double> pair_correlations;  // kappa^2 per adjacent column pair
};

struct ExperimentReport {
  int schema_version = 1;
  RunConfig config;
  std::vector<SeedRun> runs;
  std::vector<std::string> failed_methods;
};

// Runs every requested method for every seed over the config's dataset.
ExperimentReport run_experiment(const RunConfig& config);

nlohmann::ordered_json report_to_json(const ExperimentReport& report);
void write_report_json(const ExperimentReport& report, const std::string& path);
// Plot-ready CSV: one row per (seed, method) with cost and accuracy columns.
void write_report_csv(const ExperimentReport& report, const std::string& path);
// Per-stage pass counts across runs/methods.
void write_stage_csv(const ExperimentReport& report, const std::string& path);

}  // namespace proxyopt
