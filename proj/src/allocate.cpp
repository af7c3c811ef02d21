#include "proxyopt/allocate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "proxyopt/rng.hpp"

namespace proxyopt {

SampleStore::SampleStore(std::vector<Record> rows, QuerySpec query)
    : rows_(std::move(rows)), query_(std::move(query)) {
  labeled_.assign(query_.stages.size(), std::vector<char>(rows_.size(), 0));
  std::vector<int> all(rows_.size());
  for (std::size_t i = 0; i < rows_.size(); ++i) all[i] = static_cast<int>(i);
  lprime_.emplace(std::vector<int>{}, std::move(all));
}

void SampleStore::ensure_labels(const std::vector<int>& rows_idx, int stage_idx) {
  auto& done = labeled_[stage_idx];
  const auto& udf = query_.stages[stage_idx].udf;
  for (int r : rows_idx) {
    if (done[r]) continue;
    apply_udf(udf, rows_[r], labeling_meter_);
    ++udf_invocations_;
    done[r] = 1;
  }
}

bool SampleStore::pred_pass(int row_idx, int stage_idx) const {
  return predicate_pass(query_.stages[stage_idx].pred, rows_[row_idx]);
}

const std::vector<int>* SampleStore::lprime_if_cached(std::vector<int> pred_set) const {
  std::sort(pred_set.begin(), pred_set.end());
  auto it = lprime_.find(pred_set);
  return it == lprime_.end() ? nullptr : &it->second;
}

const std::vector<int>& SampleStore::lprime_chain(std::span<const int> order, int depth) {
  std::vector<int> key(order.begin(), order.begin() + depth);
  std::sort(key.begin(), key.end());
  auto it = lprime_.find(key);
  if (it != lprime_.end()) return it->second;

  // Materialize from the chain predecessor: filter by the depth-th predicate.
  const auto& parent = lprime_chain(order, depth - 1);
  int stage = order[depth - 1];
  ensure_labels(parent, stage);
  std::vector<int> filtered;
  for (int r : parent) {
    if (pred_pass(r, stage)) filtered.push_back(r);
  }
  ++materializations_;
  return lprime_.emplace(std::move(key), std::move(filtered)).first->second;
}

std::vector<double> grid_values(double target_accuracy, double step) {
  if (target_accuracy > 1.0) throw ConfigError("target accuracy above 1: no feasible grid");
  std::vector<double> values;
  auto steps = static_cast<long long>(std::ceil((1.0 - target_accuracy) / step - 1e-9));
  for (long long k = 0; k <= steps; ++k) {
    values.push_back(std::min(1.0, target_accuracy + static_cast<double>(k) * step));
  }
  if (values.size() >= 2 && values[values.size() - 2] == values.back()) values.pop_back();
  return values;
}

std::uint64_t stage_seed(std::uint64_t base, int stage_idx, int depth) {
  return mix_seed(base, static_cast<std::uint64_t>(stage_idx) + 1,
                  static_cast<std::uint64_t>(depth) + 1);
}

Scorer maybe_reuse_scorer(const Scorer* candidate, const LabeledSample& l_star,
                          const LabeledSample& l, double eps, const Split& split,
                          std::uint64_t seed, bool samples_identical, AllocStats& stats,
                          double train_flop_ms) {
  if (candidate && !candidate->null) {
    bool admit = samples_identical ||
                 (eps > 0.0 && eps_approx(*candidate, l_star, l, eps));
    if (admit) {
      ++stats.reuses;
      return *candidate;
    }
  }
  // Simulated training cost: full-batch epochs over the rebalanced train part
  // for each learning rate on the grid.
  long long pos = 0, neg = 0;
  for (int i : split.train) (l.labels[i] > 0 ? pos : neg) += 1;
  long long balanced = 2 * std::max(pos, neg);
  std::size_t dim = l.records.empty() ? 0 : l.records[0].features.size();
  TrainOptions topts;
  stats.training_ms += static_cast<double>(topts.epochs) * static_cast<double>(balanced) *
                       static_cast<double>(dim + 1) *
                       static_cast<double>(topts.learning_rates.size()) * train_flop_ms;
  ++stats.trainings;
  return train_scorer(l, split, seed, topts);
}

LabeledSample derive_L(SampleStore& store, std::span<const int> order, int depth,
                       std::span<const ProxyModel* const> prefix_proxies) {
  if (depth < 0 || static_cast<std::size_t>(depth) >= order.size()) {
    throw std::out_of_range("derive_L: depth must address a stage of the order");
  }
  const auto& lp = store.lprime_chain(order, depth);
  int stage = order[depth];
  // Label the target predicate on the surviving rows via the next chain set.
  store.lprime_chain(order, depth + 1);

  LabeledSample sample;
  sample.target_pred = store.query().stages[stage].pred.id;
  for (int r : lp) {
    bool pass = true;
    for (const auto* proxy : prefix_proxies) {
      if (!proxy || proxy->is_null()) continue;
      double theta = proxy->chosen ? proxy->chosen->theta
                                   : -std::numeric_limits<double>::infinity();
      if (proxy->scorer.score(store.row(r)) < theta) {
        pass = false;
        break;
      }
    }
    if (!pass) continue;
    sample.records.push_back(store.row(r));
    sample.labels.push_back(store.pred_pass(r, stage) ? 1 : -1);
  }
  return sample;
}

namespace {

struct TrainNode {
  bool null_proxy = false;
  Scorer scorer;
  AccuracyReductionCurve curve;
  double s = 0.0;
  double s_bar = 0.0;
  bool zero_support = false;
  long long bar_in = 0, bar_pass = 0;
  std::vector<int> rows_in;
  std::vector<int> pos_rows;
  std::vector<int> sample_rows;  // rows used for L
};

struct SelectNode {
  double theta = -std::numeric_limits<double>::infinity();
  double curve_alpha = 1.0;
  double curve_r = 0.0;
  double measured_alpha = 1.0;
  long long kept = 0, kept_pos = 0;
  std::vector<int> rows_out;
};

class AllocationEngine {
 public:
  AllocationEngine(std::span<const int> order, double target, SampleStore& store,
                   const AllocOptions& opts)
      : order_(order.begin(), order.end()),
        target_(target),
        store_(store),
        opts_(opts),
        grid_(grid_values(target, opts.alpha_step)),
        last_built_(order.size()) {
    materializations_before_ = store_.materializations();
    labeling_before_ = store_.labeling_ms();
  }

  const std::vector<double>& grid() const { return grid_; }
  std::size_t depth_count() const { return order_.size(); }

  struct VectorEval {
    bool feasible = false;
    double cost = 0.0;
    double measured_accuracy = 1.0;
  };

  VectorEval evaluate(const std::vector<int>& vec) {
    ++stats.vectors_evaluated;
    VectorEval ev;
    ev.cost = 0.0;
    ev.measured_accuracy = 1.0;
    double prefix_product = 1.0;
    std::vector<int> prefix;
    prefix.reserve(vec.size());
    for (std::size_t i = 0; i < order_.size(); ++i) {
      const TrainNode& tn = train_node(prefix);
      const SelectNode& sn = select_node(prefix, vec[i]);
      const auto& stage = store_.query().stages[order_[i]];

      StageEstimates est = estimate_stage(static_cast<long long>(tn.rows_in.size()), sn.kept,
                                          sn.kept_pos, static_cast<long long>(tn.pos_rows.size()),
                                          tn.bar_in, tn.bar_pass);
      StageCostInputs in;
      in.proxy_cost = tn.null_proxy ? 0.0 : stage.proxy_cost_ms;
      in.udf_cost = stage.udf.cost_ms;
      in.alpha = tn.null_proxy ? 1.0 : grid_[vec[i]];
      in.reduction = sn.curve_r;
      in.prefix_product = prefix_product;
      ev.cost += pair_cost(in);
      prefix_product *= est.s * in.alpha;
      ev.measured_accuracy *= sn.measured_alpha * est.delta;
      prefix.push_back(vec[i]);
    }
    ev.feasible = ev.measured_accuracy >= target_ - 1e-12;
    return ev;
  }

  // Fresh rebuild of the winning vector with reuse disabled; returns the
  // reported result (Algorithm-1 line 12 retraining).
  AllocationResult finalize(const std::vector<int>& vec, bool force_pass_all) {
    AllocationResult result;
    result.order = order_;
    double prefix_product = 1.0;
    PrefixDescriptor prefix_desc;
    std::vector<int> rows = store_.lprime_chain(order_, 0);

    for (std::size_t i = 0; i < order_.size(); ++i) {
      int stage_idx = order_[i];
      const auto& stage = store_.query().stages[stage_idx];
      double alloc_alpha = force_pass_all ? 1.0 : grid_[vec[i]];

      const auto& lp_prev = store_.lprime_chain(order_, static_cast<int>(i));
      const auto& lp_cur = store_.lprime_chain(order_, static_cast<int>(i) + 1);

      std::vector<int> pos_rows;
      for (int r : rows) {
        if (store_.pred_pass(r, stage_idx)) pos_rows.push_back(r);
      }

      std::vector<int> sample_rows(rows.begin(),
                                   rows.begin() + std::min(rows.size(), opts_.sample_cap));
      LabeledSample sample = make_sample(sample_rows, stage_idx);

      ProxyModel proxy;
      bool is_null = false;
      if (force_pass_all) {
        proxy = ProxyModel::null_proxy(prefix_desc, stage.pred.id);
        // Keep the trained scorer out of it entirely: pass-all fallback.
        is_null = true;
      } else {
        proxy = build_stage_proxy(sample, stage_idx, static_cast<int>(i), prefix_desc);
        is_null = proxy.is_null();
        if (!is_null) proxy.sample = sample;
      }

      SelectNode sn = apply_selection(proxy, is_null, rows, pos_rows, stage_idx, alloc_alpha);
      if (!is_null) {
        proxy.chosen = CurvePoint{sn.curve_alpha, sn.theta, sn.curve_r};
      }

      StageOutcome out;
      out.stage = stage_idx;
      out.alloc_alpha = alloc_alpha;
      out.measured_alpha = sn.measured_alpha;
      out.curve_reduction = sn.curve_r;
      out.rows_in = static_cast<long long>(rows.size());
      out.estimates = estimate_stage(static_cast<long long>(rows.size()), sn.kept, sn.kept_pos,
                                     static_cast<long long>(pos_rows.size()),
                                     static_cast<long long>(lp_prev.size()),
                                     static_cast<long long>(lp_cur.size()));
      StageCostInputs in;
      in.proxy_cost = is_null ? 0.0 : stage.proxy_cost_ms;
      in.udf_cost = stage.udf.cost_ms;
      in.alpha = is_null ? 1.0 : alloc_alpha;
      in.reduction = sn.curve_r;
      in.prefix_product = prefix_product;
      result.total_cost += pair_cost(in);
      result.measured_accuracy *= sn.measured_alpha * out.estimates.delta;
      prefix_product *= out.estimates.s * in.alpha;
      result.estimate.estimates.push_back(out.estimates);
      result.estimate.cost_inputs.push_back(in);
      result.estimate.predicted_accuracy *= sn.measured_alpha * out.estimates.delta;

      prefix_desc.push_back({PrefixEntry::Kind::Proxy, stage.pred.id, alloc_alpha});
      prefix_desc.push_back({PrefixEntry::Kind::Filter, stage.pred.id, 1.0});

      out.proxy = std::move(proxy);
      result.stages.push_back(std::move(out));
      result.alphas.push_back(alloc_alpha);
      rows = std::move(sn.rows_out);
    }
    result.estimate.total_cost = result.total_cost;
    stats.lprime_materializations = store_.materializations() - materializations_before_;
    stats.labeling_ms = store_.labeling_ms() - labeling_before_;
    stats.fallback_pass_all = force_pass_all;
    result.stats = stats;
    return result;
  }

  AllocStats stats;

 private:
  LabeledSample make_sample(const std::vector<int>& sample_rows, int stage_idx) {
    LabeledSample sample;
    sample.target_pred = store_.query().stages[stage_idx].pred.id;
    sample.records.reserve(sample_rows.size());
    sample.labels.reserve(sample_rows.size());
    for (int r : sample_rows) {
      sample.records.push_back(store_.row(r));
      sample.labels.push_back(store_.pred_pass(r, stage_idx) ? 1 : -1);
    }
    return sample;
  }

  // Builds scorer+curve for a stage sample; null proxy on degenerate input.
  ProxyModel build_stage_proxy(const LabeledSample& sample, int stage_idx, int depth,
                               PrefixDescriptor prefix_desc, TrainNode* reuse_slot = nullptr) {
    const auto& stage = store_.query().stages[stage_idx];
    if (sample.size() < 10) return ProxyModel::null_proxy(std::move(prefix_desc), stage.pred.id);

    Split split = split_622(sample.size(), stage_seed(opts_.seed, stage_idx, depth));
    Scorer scorer;
    if (reuse_slot) {
      const TrainNode* cand = last_built_[depth].has_candidate ? &last_built_[depth].node : nullptr;
      bool identical = cand && last_built_[depth].sample_ids == reuse_slot->sample_rows;
      LabeledSample empty;
      scorer = maybe_reuse_scorer(cand && opts_.reuse ? &cand->scorer : nullptr,
                                  cand ? last_built_[depth].sample : empty, sample, opts_.eps,
                                  split, stage_seed(opts_.seed, stage_idx, depth),
                                  identical, stats, opts_.train_flop_ms);
    } else {
      scorer = maybe_reuse_scorer(nullptr, sample, sample, 0.0, split,
                                  stage_seed(opts_.seed, stage_idx, depth), false, stats,
                                  opts_.train_flop_ms);
    }
    if (scorer.null) return ProxyModel::null_proxy(std::move(prefix_desc), stage.pred.id);

    ProxyModel proxy;
    proxy.prefix = std::move(prefix_desc);
    proxy.target_pred = stage.pred.id;
    proxy.scorer = std::move(scorer);
    proxy.cost_ms = stage.proxy_cost_ms;
    try {
      proxy.curve = build_curve(proxy.scorer, subsample(sample, split.validation), target_,
                                opts_.alpha_step);
    } catch (const DegenerateSampleError&) {
      return ProxyModel::null_proxy(std::move(proxy.prefix), stage.pred.id);
    }
    return proxy;
  }

  SelectNode apply_selection(const ProxyModel& proxy, bool is_null, const std::vector<int>& rows,
                             const std::vector<int>& pos_rows, int stage_idx, double alpha) {
    SelectNode sn;
    if (is_null) {
      sn.kept = static_cast<long long>(rows.size());
      sn.kept_pos = static_cast<long long>(pos_rows.size());
      sn.rows_out = pos_rows;
      sn.measured_alpha = 1.0;
      return sn;
    }
    CurvePoint pt = select_threshold(proxy.curve, alpha);
    sn.theta = pt.theta;
    sn.curve_alpha = pt.alpha;
    sn.curve_r = pt.reduction;
    stats.search_ms += static_cast<double>(rows.size()) *
                       store_.query().stages[stage_idx].proxy_cost_ms;
    for (int r : rows) {
      if (proxy.scorer.score(store_.row(r)) >= sn.theta) {
        ++sn.kept;
        if (store_.pred_pass(r, stage_idx)) {
          ++sn.kept_pos;
          sn.rows_out.push_back(r);
        }
      }
    }
    sn.measured_alpha = pos_rows.empty()
                            ? 1.0
                            : static_cast<double>(sn.kept_pos) /
                                  static_cast<double>(pos_rows.size());
    return sn;
  }

  TrainNode& train_node(const std::vector<int>& prefix) {
    auto it = train_nodes_.find(prefix);
    if (it != train_nodes_.end()) return it->second;

    int depth = static_cast<int>(prefix.size());
    int stage_idx = order_[depth];
    TrainNode node;
    if (depth == 0) {
      node.rows_in = store_.lprime_chain(order_, 0);
    } else {
      std::vector<int> parent(prefix.begin(), prefix.end() - 1);
      node.rows_in = select_node(parent, prefix.back()).rows_out;
    }
    const auto& lp_prev = store_.lprime_chain(order_, depth);
    const auto& lp_cur = store_.lprime_chain(order_, depth + 1);
    node.bar_in = static_cast<long long>(lp_prev.size());
    node.bar_pass = static_cast<long long>(lp_cur.size());
    node.s_bar = node.bar_in > 0
                     ? static_cast<double>(node.bar_pass) / static_cast<double>(node.bar_in)
                     : 0.0;
    for (int r : node.rows_in) {
      if (store_.pred_pass(r, stage_idx)) node.pos_rows.push_back(r);
    }
    node.zero_support = node.rows_in.empty();
    node.s = node.rows_in.empty() ? 0.0
                                  : static_cast<double>(node.pos_rows.size()) /
                                        static_cast<double>(node.rows_in.size());
    node.sample_rows.assign(node.rows_in.begin(),
                            node.rows_in.begin() +
                                std::min(node.rows_in.size(), opts_.sample_cap));

    LabeledSample sample = make_sample(node.sample_rows, stage_idx);
    ProxyModel proxy = build_stage_proxy(sample, stage_idx, depth, {}, &node);
    node.null_proxy = proxy.is_null();
    node.scorer = proxy.scorer;
    node.curve = proxy.curve;

    if (!node.null_proxy) {
      last_built_[depth].has_candidate = true;
      last_built_[depth].node.scorer = node.scorer;
      last_built_[depth].sample = std::move(sample);
      last_built_[depth].sample_ids = node.sample_rows;
    }
    return train_nodes_.emplace(prefix, std::move(node)).first->second;
  }

  const SelectNode& select_node(const std::vector<int>& prefix, int alpha_idx) {
    std::vector<int> key = prefix;
    key.push_back(alpha_idx);
    auto it = select_nodes_.find(key);
    if (it != select_nodes_.end()) return it->second;

    TrainNode& tn = train_node(prefix);
    int stage_idx = order_[prefix.size()];
    ProxyModel tmp;
    tmp.scorer = tn.scorer;
    tmp.curve = tn.curve;
    SelectNode sn = apply_selection(tmp, tn.null_proxy, tn.rows_in, tn.pos_rows, stage_idx,
                                    grid_[alpha_idx]);
    return select_nodes_.emplace(std::move(key), std::move(sn)).first->second;
  }

  struct LastBuilt {
    bool has_candidate = false;
    TrainNode node;
    LabeledSample sample;
    std::vector<int> sample_ids;
  };

  std::vector<int> order_;
  double target_;
  SampleStore& store_;
  AllocOptions opts_;
  std::vector<double> grid_;
  std::map<std::vector<int>, TrainNode> train_nodes_;
  std::map<std::vector<int>, SelectNode> select_nodes_;
  std::vector<LastBuilt> last_built_;
  int materializations_before_ = 0;
  double labeling_before_ = 0.0;
};

void enumerate_band(const std::vector<double>& grid, std::size_t depth_count, double target,
                    double step, std::vector<int>& current, double product,
                    const std::function<void(const std::vector<int>&)>& visit) {
  if (current.size() == depth_count) {
    if (product >= target - 1e-9 &&
        product < target + static_cast<double>(depth_count) * step - 1e-9) {
      visit(current);
    }
    return;
  }
  if (product < target - 1e-9) return;  // can only shrink further
  for (std::size_t k = 0; k < grid.size(); ++k) {
    current.push_back(static_cast<int>(k));
    enumerate_band(grid, depth_count, target, step, current, product * grid[k], visit);
    current.pop_back();
  }
}

}  // namespace

AllocationResult accuracy_allocation(std::span<const int> order, double target_accuracy,
                                     SampleStore& store, const AllocOptions& opts) {
  if (target_accuracy > 1.0) throw ConfigError("no grid-feasible vector: target accuracy > 1");
  AllocationEngine engine(order, target_accuracy, store, opts);
  const auto& grid = engine.grid();
  const std::size_t m = order.size();

  bool have_best = false;
  std::vector<int> best_vec;
  double best_cost = std::numeric_limits<double>::infinity();

  if (opts.mode == AllocOptions::Mode::Exhaustive) {
    std::vector<int> current;
    enumerate_band(grid, m, target_accuracy, opts.alpha_step, current, 1.0,
                   [&](const std::vector<int>& vec) {
                     auto ev = engine.evaluate(vec);
                     if (!ev.feasible) {
                       ++engine.stats.vectors_rejected;
                       return;
                     }
                     // Ties go to the lexicographically largest vector, i.e.
                     // the latest one in ascending enumeration order.
                     if (!have_best || ev.cost <= best_cost) {
                       have_best = true;
                       best_cost = ev.cost;
                       best_vec = vec;
                     }
                   });
  } else {
    // Hill climbing from the uniform vector, moving one grid step of accuracy
    // mass between stage pairs while the cost improves.
    double uniform = std::pow(target_accuracy, 1.0 / static_cast<double>(m));
    int start_idx = 0;
    while (start_idx + 1 < static_cast<int>(grid.size()) && grid[start_idx] + 1e-12 < uniform) {
      ++start_idx;
    }
    std::vector<int> current(m, start_idx);
    auto in_band = [&](const std::vector<int>& vec) {
      double p = 1.0;
      for (int k : vec) p *= grid[k];
      return p >= target_accuracy - 1e-9 &&
             p < target_accuracy + static_cast<double>(m) * opts.alpha_step - 1e-9;
    };
    auto cur_ev = engine.evaluate(current);
    // Repair an infeasible start by raising single entries.
    while (!cur_ev.feasible) {
      bool moved = false;
      for (std::size_t i = 0; i < m && !moved; ++i) {
        if (current[i] + 1 >= static_cast<int>(grid.size())) continue;
        auto cand = current;
        ++cand[i];
        auto ev = engine.evaluate(cand);
        if (ev.measured_accuracy > cur_ev.measured_accuracy + 1e-15) {
          current = cand;
          cur_ev = ev;
          moved = true;
        }
      }
      if (!moved) break;
    }
    if (cur_ev.feasible) {
      have_best = true;
      best_vec = current;
      best_cost = cur_ev.cost;
      bool improved = true;
      while (improved) {
        improved = false;
        std::vector<int> next = best_vec;
        double next_cost = best_cost;
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < m; ++j) {
            if (i == j) continue;
            auto cand = best_vec;
            if (cand[i] == 0 || cand[j] + 1 >= static_cast<int>(grid.size())) continue;
            --cand[i];
            ++cand[j];
            if (!in_band(cand)) continue;
            auto ev = engine.evaluate(cand);
            if (!ev.feasible) continue;
            if (ev.cost < next_cost) {
              next = cand;
              next_cost = ev.cost;
            }
          }
        }
        if (next_cost < best_cost) {
          best_vec = next;
          best_cost = next_cost;
          improved = true;
        }
      }
    }
  }

  if (!have_best) {
    // Nothing on the grid met the measured-accuracy requirement: fall back to
    // pass-everything proxies, which trivially meet it.
    std::vector<int> ones(m, static_cast<int>(grid.size()) - 1);
    return engine.finalize(ones, /*force_pass_all=*/true);
  }
  return engine.finalize(best_vec, /*force_pass_all=*/false);
}

}  // namespace proxyopt
