#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "proxyopt/allocate.hpp"
#include "proxyopt/reorder.hpp"

namespace proxyopt {

// Test/analysis plan component: passes a fixed id set regardless of features.
struct OracleProxy {
  std::set<int> pass_ids;
  double cost_ms = 0.01;
};

struct PlanStage {
  int stage = -1;  // index into the query's stages
  std::optional<ProxyModel> proxy;
  std::optional<OracleProxy> oracle;  // test-only alternative to proxy
};

struct ExecutablePlan {
  QuerySpec query;              // stage definitions (original order)
  std::vector<PlanStage> stages;  // execution order
};

struct StageCounts {
  int stage = -1;
  long long entered = 0;       // records reaching this stage
  long long passed_proxy = 0;  // records that went on to the UDF
  long long passed_pred = 0;   // records surviving the predicate
  double estimated_reduction = 0.0;  // r the optimizer expected here
};

struct RunReport {
  long long rows_in = 0;
  long long rows_out = 0;
  double simulated_cost_ms = 0.0;
  double measured_accuracy = 1.0;  // filled by measure_accuracy
  std::vector<StageCounts> stage_counts;
  std::vector<int> output_ids;
};

RunReport execute(const ExecutablePlan& plan, const Table& table);

// |out(plan) ∩ out(orig)| / |out(orig)| by record id (1 when orig is empty).
double measure_accuracy(const RunReport& plan_report, const RunReport& orig_report);

ExecutablePlan original_plan(const QuerySpec& query);

// NoScope-style: one proxy at the head trained on the full-conjunction label
// over the raw sample, thresholded at the target accuracy.
ExecutablePlan build_ns_baseline(const QuerySpec& query, double target_accuracy,
                                 const std::vector<Record>& sample, const AllocOptions& opts);

// Probabilistic-predicates-style: per-predicate proxies trained on the raw
// sample, accuracies allocated on the grid under the independence assumption
// (delta == 1, reductions from raw-input curves), original stage order.
ExecutablePlan build_pp_baseline(const QuerySpec& query, double target_accuracy,
                                 const std::vector<Record>& sample, const AllocOptions& opts);

struct CoreOptions {
  double head_fraction = 0.05;  // k% of the input used for optimization
  SearchOptions search;
};

struct CorePlanResult {
  ExecutablePlan plan;
  SearchResult search;
  long long head_rows = 0;
  long long tail_rows = 0;
  double labeling_ms = 0.0;  // simulated optimizer costs
  double training_ms = 0.0;
  double search_ms = 0.0;
  std::vector<std::string> warnings;
};

// Optimizes on the k% head and wires the winning plan for the tail.
CorePlanResult optimize_core(const QuerySpec& query, double target_accuracy, const Table& table,
                             const CoreOptions& opts);

// Rows after the optimizer head (the plan's execution input).
Table tail_table(const Table& table, long long head_rows);

}  // namespace proxyopt
