#include "proxyopt/exec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

namespace proxyopt {

RunReport execute(const ExecutablePlan& plan, const Table& table) {
  RunReport report;
  report.rows_in = static_cast<long long>(table.size());

  CostMeter meter;
  std::vector<Record> alive = table.records;
  for (const auto& ps : plan.stages) {
    const auto& stage = plan.query.stages[ps.stage];
    StageCounts counts;
    counts.stage = ps.stage;
    counts.entered = static_cast<long long>(alive.size());

    std::vector<Record> kept;
    if (ps.oracle) {
      meter.add(ps.oracle->cost_ms * static_cast<double>(alive.size()));
      for (auto& r : alive) {
        if (ps.oracle->pass_ids.count(r.id)) kept.push_back(std::move(r));
      }
    } else if (ps.proxy) {
      meter.add(ps.proxy->cost_ms * static_cast<double>(alive.size()));
      double theta = ps.proxy->chosen ? ps.proxy->chosen->theta
                                      : -std::numeric_limits<double>::infinity();
      for (auto& r : alive) {
        if (ps.proxy->is_null() || ps.proxy->scorer.score(r) >= theta) kept.push_back(std::move(r));
      }
      counts.estimated_reduction = ps.proxy->chosen ? ps.proxy->chosen->reduction : 0.0;
    } else {
      kept = std::move(alive);
    }
    counts.passed_proxy = static_cast<long long>(kept.size());

    std::vector<Record> survivors;
    for (auto& r : kept) {
      apply_udf(stage.udf, r, meter);
      if (predicate_pass(stage.pred, r)) survivors.push_back(std::move(r));
    }
    counts.passed_pred = static_cast<long long>(survivors.size());
    report.stage_counts.push_back(counts);
    alive = std::move(survivors);
  }

  report.rows_out = static_cast<long long>(alive.size());
  report.simulated_cost_ms = meter.ms;
  for (const auto& r : alive) report.output_ids.push_back(r.id);
  std::sort(report.output_ids.begin(), report.output_ids.end());
  return report;
}

double measure_accuracy(const RunReport& plan_report, const RunReport& orig_report) {
  if (orig_report.output_ids.empty()) return 1.0;
  std::unordered_set<int> orig(orig_report.output_ids.begin(), orig_report.output_ids.end());
  long long hit = 0;
  for (int id : plan_report.output_ids) {
    if (orig.count(id)) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(orig.size());
}

ExecutablePlan original_plan(const QuerySpec& query) {
  ExecutablePlan plan;
  plan.query = query;
  for (std::size_t i = 0; i < query.stages.size(); ++i) {
    PlanStage ps;
    ps.stage = static_cast<int>(i);
    plan.stages.push_back(ps);
  }
  return plan;
}

namespace {

// Label the raw sample by the conjunction of all predicates.
LabeledSample conjunction_sample(const QuerySpec& query, const std::vector<Record>& sample,
                                 std::size_t cap) {
  LabeledSample out;
  out.target_pred = -1;
  CostMeter scratch;
  for (std::size_t i = 0; i < sample.size() && i < cap; ++i) {
    Record r = sample[i];
    bool pass = true;
    for (const auto& stage : query.stages) {
      apply_udf(stage.udf, r, scratch);
      if (!predicate_pass(stage.pred, r)) {
        pass = false;
        break;
      }
    }
    out.records.push_back(std::move(r));
    out.labels.push_back(pass ? 1 : -1);
  }
  return out;
}

LabeledSample single_pred_sample(const QuerySpec& query, int stage_idx,
                                 const std::vector<Record>& sample, std::size_t cap) {
  LabeledSample out;
  out.target_pred = query.stages[stage_idx].pred.id;
  CostMeter scratch;
  for (std::size_t i = 0; i < sample.size() && i < cap; ++i) {
    Record r = sample[i];
    apply_udf(query.stages[stage_idx].udf, r, scratch);
    bool pass = predicate_pass(query.stages[stage_idx].pred, r);
    out.records.push_back(std::move(r));
    out.labels.push_back(pass ? 1 : -1);
  }
  return out;
}

}  // namespace

ExecutablePlan build_ns_baseline(const QuerySpec& query, double target_accuracy,
                                 const std::vector<Record>& sample, const AllocOptions& opts) {
  LabeledSample labeled = conjunction_sample(query, sample, opts.sample_cap);
  ProxyModel proxy = build_proxy(labeled, target_accuracy, opts.alpha_step,
                                 query.stages.front().proxy_cost_ms,
                                 stage_seed(opts.seed, /*stage=*/100, /*depth=*/0));
  if (!proxy.is_null()) {
    CurvePoint pt = select_threshold(proxy.curve, target_accuracy);
    proxy.chosen = pt;
  }

  ExecutablePlan plan = original_plan(query);
  plan.stages.front().proxy = std::move(proxy);
  return plan;
}

ExecutablePlan build_pp_baseline(const QuerySpec& query, double target_accuracy,
                                 const std::vector<Record>& sample, const AllocOptions& opts) {
  const std::size_t n = query.stages.size();

  // Raw-input proxies and raw marginal selectivities.
  std::vector<ProxyModel> proxies;
  std::vector<double> raw_s(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    LabeledSample labeled = single_pred_sample(query, static_cast<int>(i), sample,
                                               opts.sample_cap);
    long long pos = std::count(labeled.labels.begin(), labeled.labels.end(), 1);
    raw_s[i] = labeled.size() ? static_cast<double>(pos) / static_cast<double>(labeled.size())
                              : 0.0;
    proxies.push_back(build_proxy(labeled, target_accuracy, opts.alpha_step,
                                  query.stages[i].proxy_cost_ms,
                                  stage_seed(opts.seed, static_cast<int>(i), 0)));
  }

  // Grid allocation under independence: delta == 1, per-stage reductions from
  // the raw curves, selectivities from raw marginals.
  auto grid = grid_values(target_accuracy, opts.alpha_step);
  std::vector<int> best_vec, current;
  double best_cost = std::numeric_limits<double>::infinity();
  bool have_best = false;

  std::function<void(double)> recurse = [&](double product) {
    if (current.size() == n) {
      if (product < target_accuracy - 1e-9 ||
          product >= target_accuracy + static_cast<double>(n) * opts.alpha_step - 1e-9) {
        return;
      }
      double cost = 0.0, pref = 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        StageCostInputs in;
        bool null_proxy = proxies[i].is_null();
        CurvePoint pt = null_proxy ? CurvePoint{} : select_threshold(proxies[i].curve,
                                                                     grid[current[i]]);
        in.proxy_cost = null_proxy ? 0.0 : query.stages[i].proxy_cost_ms;
        in.udf_cost = query.stages[i].udf.cost_ms;
        in.alpha = null_proxy ? 1.0 : grid[current[i]];
        in.reduction = pt.reduction;
        in.prefix_product = pref;
        cost += pair_cost(in);
        pref *= raw_s[i] * in.alpha;
      }
      if (!have_best || cost <= best_cost) {
        have_best = true;
        best_cost = cost;
        best_vec = current;
      }
      return;
    }
    if (product < target_accuracy - 1e-9) return;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      current.push_back(static_cast<int>(k));
      recurse(product * grid[k]);
      current.pop_back();
    }
  };
  recurse(1.0);

  ExecutablePlan plan = original_plan(query);
  for (std::size_t i = 0; i < n; ++i) {
    if (!proxies[i].is_null() && have_best) {
      proxies[i].chosen = select_threshold(proxies[i].curve, grid[best_vec[i]]);
    }
    plan.stages[i].proxy = std::move(proxies[i]);
  }
  return plan;
}

Table tail_table(const Table& table, long long head_rows) {
  Table tail;
  tail.dim = table.dim;
  tail.schema = table.schema;
  tail.records.assign(table.records.begin() + head_rows, table.records.end());
  return tail;
}

CorePlanResult optimize_core(const QuerySpec& query, double target_accuracy, const Table& table,
                             const CoreOptions& opts) {
  CorePlanResult result;
  auto head_rows = static_cast<long long>(
      std::ceil(opts.head_fraction * static_cast<double>(table.size())));
  head_rows = std::min<long long>(head_rows, static_cast<long long>(table.size()));
  result.head_rows = head_rows;
  result.tail_rows = static_cast<long long>(table.size()) - head_rows;

  SearchOptions search_opts = opts.search;
  if (static_cast<std::size_t>(head_rows) < search_opts.alloc.sample_cap) {
    auto shrunk = static_cast<std::size_t>(std::max<long long>(head_rows, 100));
    result.warnings.push_back("optimizer head smaller than |L| target; shrinking |L| to " +
                              std::to_string(shrunk));
    search_opts.alloc.sample_cap = shrunk;
  }

  std::vector<Record> head(table.records.begin(), table.records.begin() + head_rows);
  SampleStore store(std::move(head), query);
  result.search = bb_pruning(target_accuracy, store, search_opts);

  result.labeling_ms = store.labeling_ms();
  result.training_ms = result.search.stats.training_ms;
  result.search_ms = result.search.stats.search_ms;

  ExecutablePlan plan;
  plan.query = query;
  for (std::size_t i = 0; i < result.search.order.size(); ++i) {
    PlanStage ps;
    ps.stage = result.search.order[i];
    ps.proxy = result.search.allocation.stages[i].proxy;
    plan.stages.push_back(ps);
  }
  result.plan = std::move(plan);
  return result;
}

}  // namespace proxyopt
