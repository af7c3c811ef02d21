#pragma once

// Shared fixtures for the test suites: indicator-feature tables with exact
// pass counts, the worked two-stage example (200 -> 120 -> 96 -> 66 -> 54),
// and synthetic query wiring.

#include <set>
#include <vector>

#include "proxyopt/exec.hpp"
#include "proxyopt/rng.hpp"

namespace testutil {

using namespace proxyopt;

// UDF k labels "pos" iff feature k is above 0.5; features are indicators.
inline QueryStage indicator_stage(int k, double udf_cost_ms = 20.0,
                                  double proxy_cost_ms = 0.01) {
  QueryStage stage;
  stage.udf.id = k;
  stage.udf.cost_ms = udf_cost_ms;
  stage.udf.output_column = "c" + std::to_string(k);
  stage.udf.labeler = [k](const Record& r) { return r.features[k] > 0.5 ? "pos" : "neg"; };
  stage.pred.id = k;
  stage.pred.column = stage.udf.output_column;
  stage.pred.value = "pos";
  stage.proxy_cost_ms = proxy_cost_ms;
  return stage;
}

// Table whose records pass predicate k iff their id is in member_sets[k].
inline Table indicator_table(int n, const std::vector<std::set<int>>& member_sets) {
  Table table;
  table.dim = static_cast<int>(member_sets.size());
  for (int k = 0; k < table.dim; ++k) table.schema.push_back("c" + std::to_string(k));
  for (int i = 0; i < n; ++i) {
    Record rec;
    rec.id = i;
    for (const auto& s : member_sets) rec.features.push_back(s.count(i) ? 1.0 : 0.0);
    table.records.push_back(std::move(rec));
  }
  return table;
}

inline std::set<int> id_range(int lo, int hi) {  // [lo, hi)
  std::set<int> s;
  for (int i = lo; i < hi; ++i) s.insert(i);
  return s;
}

// The worked example: 200 rows, sigma1 keeps 100, sigma2 keeps 60 of those;
// oracle proxy 1 passes 120 (96 true), oracle proxy 2 passes 66 of 96 (54
// true). Pass sets are laid out by record id.
struct WorkedExample {
  Table table;
  QuerySpec query;
  OracleProxy proxy1;
  OracleProxy proxy2;
};

inline WorkedExample make_worked_example() {
  WorkedExample ex;
  std::set<int> p1 = id_range(0, 100);  // sigma1 truth
  std::set<int> p2 = id_range(0, 56);   // sigma2 truth: 56 inside proxy1-cap,
  for (int i = 96; i < 100; ++i) p2.insert(i);  // plus 4 outside it (60 total in p1)

  ex.table = indicator_table(200, {p1, p2});
  ex.query.target_accuracy = 0.9;
  ex.query.stages.push_back(indicator_stage(0, 20.0, 0.01));
  ex.query.stages.push_back(indicator_stage(1, 20.0, 0.01));

  // Proxy 1 passes ids 0..95 (96 sigma1-true) plus 100..123 (24 false): 120.
  ex.proxy1.pass_ids = id_range(0, 96);
  for (int i = 100; i < 124; ++i) ex.proxy1.pass_ids.insert(i);
  ex.proxy1.cost_ms = 0.01;

  // Proxy 2, applied to the 96 survivors (ids 0..95): passes 0..53 (54 true)
  // plus 56..67 (12 false): 66 of 96.
  ex.proxy2.pass_ids = id_range(0, 54);
  for (int i = 56; i < 68; ++i) ex.proxy2.pass_ids.insert(i);
  ex.proxy2.cost_ms = 0.01;
  return ex;
}

// Synthetic table plus a query over its generated label columns.
inline std::pair<Table, QuerySpec> synthetic_query(const SyntheticConfig& config,
                                                   const std::vector<double>& udf_costs,
                                                   double target_accuracy,
                                                   double proxy_cost_ms = 0.01) {
  auto [table, udfs] = generate_dataset(config);
  QuerySpec query;
  query.target_accuracy = target_accuracy;
  for (std::size_t k = 0; k < udfs.size(); ++k) {
    QueryStage stage;
    stage.udf = udfs[k];
    stage.udf.cost_ms = udf_costs[k];
    stage.pred.id = static_cast<int>(k);
    stage.pred.column = stage.udf.output_column;
    stage.pred.value = "pos";
    stage.proxy_cost_ms = proxy_cost_ms;
    query.stages.push_back(std::move(stage));
  }
  return {std::move(table), std::move(query)};
}

// Random fixed-threshold linear proxies for commutativity-style tests.
inline ProxyModel random_fixed_proxy(Rng& rng, int dim, int target_pred) {
  ProxyModel proxy;
  proxy.target_pred = target_pred;
  proxy.cost_ms = 0.01;
  for (int d = 0; d < dim; ++d) proxy.scorer.weights.push_back(rng.next_gaussian(0.0, 1.0));
  proxy.scorer.bias = rng.next_gaussian(0.0, 0.5);
  CurvePoint pt;
  pt.alpha = 0.9;
  pt.theta = rng.next_gaussian(0.0, 0.5);
  pt.reduction = 0.0;
  proxy.curve.points = {pt};
  proxy.chosen = pt;
  return proxy;
}

}  // namespace testutil
