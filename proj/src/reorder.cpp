#include "proxyopt/reorder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace proxyopt {

void initialize_bounds(SearchNode& node, double target_accuracy, double proxy_cost,
                       double udf_cost) {
  node.bounds.alpha_lo = target_accuracy;
  node.bounds.alpha_hi = 1.0;
  node.bounds.s_lo = 0.0;
  node.bounds.s_hi = 1.0;
  node.bounds.r_lo = 0.0;
  node.bounds.r_hi = 1.0;
  if (node.kind == SearchNode::Kind::LNode) {
    node.bounds.cost_lo = 0.0;
    node.bounds.cost_hi = 0.0;
    return;
  }
  // Expr 7/8 at the extremes: the prefix product vanishes below depth 1
  // because s_lo = 0; r_hi = 1 leaves only the proxy scan at depth 1.
  node.bounds.cost_lo = node.depth == 1 ? proxy_cost : 0.0;
  node.bounds.cost_hi = proxy_cost + udf_cost;
}

std::pair<double, double> fine_grained_bounds(double s_star, double target_accuracy, int k) {
  if (k <= 0) return {s_star, s_star};
  double lo = (s_star - std::pow(1.0 - target_accuracy, k)) / std::pow(target_accuracy, k);
  lo = std::clamp(lo, 0.0, s_star);
  return {lo, s_star};
}

namespace {

struct Tree {
  std::vector<SearchNode> nodes;
};

// Builds the shared-prefix permutation tree. In the fine-grained kind each
// stage contributes an L-node followed by its M-node.
void build_paths(Tree& tree, std::vector<PlanState>& plans, const QuerySpec& query,
                 TreeKind kind, double target) {
  const int n = static_cast<int>(query.stages.size());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);

  std::map<std::vector<int>, std::pair<int, int>> prefix_nodes;  // prefix -> (L id, M id)
  int plan_id = 0;
  do {
    PlanState plan;
    plan.id = plan_id++;
    plan.order.assign(perm.begin(), perm.end());
    std::vector<int> prefix;
    for (int depth = 1; depth <= n; ++depth) {
      int stage = perm[depth - 1];
      prefix.push_back(stage);
      auto it = prefix_nodes.find(prefix);
      if (it == prefix_nodes.end()) {
        int parent = plan.node_path.empty() ? -1 : plan.node_path.back();
        int l_id = -1;
        if (kind == TreeKind::FineGrained) {
          SearchNode lnode;
          lnode.stage = stage;
          lnode.depth = depth;
          lnode.kind = SearchNode::Kind::LNode;
          lnode.parent = parent;
          initialize_bounds(lnode, target, 0.0, 0.0);
          l_id = static_cast<int>(tree.nodes.size());
          tree.nodes.push_back(lnode);
          parent = l_id;
        }
        SearchNode mnode;
        mnode.stage = stage;
        mnode.depth = depth;
        mnode.kind = kind == TreeKind::FineGrained ? SearchNode::Kind::MNode
                                                   : SearchNode::Kind::Coarse;
        mnode.parent = parent;
        initialize_bounds(mnode, target, query.stages[stage].proxy_cost_ms,
                          query.stages[stage].udf.cost_ms);
        int m_id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back(mnode);
        it = prefix_nodes.emplace(prefix, std::make_pair(l_id, m_id)).first;
      }
      if (it->second.first >= 0) plan.node_path.push_back(it->second.first);
      plan.node_path.push_back(it->second.second);
    }
    plan.acc_lo = std::pow(target, n);
    plan.acc_hi = 1.0;
    plan.sum_cost_lo = 0.0;
    plan.sum_cost_hi = std::numeric_limits<double>::infinity();
    plans.push_back(std::move(plan));
  } while (std::next_permutation(perm.begin(), perm.end()));
}

class Search {
 public:
  Search(double target, SampleStore& store, const SearchOptions& opts)
      : target_(target), store_(store), opts_(opts) {
    store_.query().validate();
    build_paths(tree_, plans_, store_.query(), opts_.tree, target_);
  }

  SearchResult run() {
    recompute_and_prune(/*allow_prune=*/false);
    int step = 0;
    for (;;) {
      auto survivors = surviving();
      if (survivors.size() <= 1) break;
      bool all_evaluated = true;
      for (int p : survivors) {
        if (!plans_[p].fully_evaluated) all_evaluated = false;
      }
      if (all_evaluated) break;

      int plan_idx = -1, node_id = -1;
      pop_unvisited(plan_idx, node_id);
      if (plan_idx < 0) break;
      visit(plan_idx, node_id);
      recompute_and_prune(/*allow_prune=*/true);
      ++step;
      emit_snapshot(step);
    }

    // A lone unevaluated survivor still needs its full allocation.
    int winner = -1;
    for (int p : surviving()) {
      if (!plans_[p].fully_evaluated) {
        evaluate_fully(p);
        recompute_and_prune(/*allow_prune=*/false);
      }
      if (winner < 0 || plans_[p].allocation.total_cost < plans_[winner].allocation.total_cost) {
        winner = p;
      }
    }
    emit_snapshot(step + 1);

    SearchResult result;
    result.order = plans_[winner].order;
    result.allocation = plans_[winner].allocation;
    result.total_cost = plans_[winner].allocation.total_cost;
    result.stats = stats_;
    return result;
  }

 private:
  void emit_snapshot(int step) {
    if (!opts_.observer) return;
    SearchSnapshot snap;
    snap.step = step;
    snap.plans = &plans_;
    opts_.observer(snap);
  }

  std::vector<int> surviving() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < plans_.size(); ++i) {
      if (!plans_[i].pruned) out.push_back(static_cast<int>(i));
    }
    return out;
  }

  // Queue order: mean cost ascending, ties by lexicographic plan id.
  std::vector<int> queue_order() const {
    auto order = surviving();
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      double ma = 0.5 * (plans_[a].sum_cost_lo + plans_[a].sum_cost_hi);
      double mb = 0.5 * (plans_[b].sum_cost_lo + plans_[b].sum_cost_hi);
      if (ma != mb) return ma < mb;
      return plans_[a].id < plans_[b].id;
    });
    return order;
  }

  void pop_unvisited(int& plan_idx, int& node_id) {
    plan_idx = -1;
    node_id = -1;
    for (int p : queue_order()) {
      for (int nid : plans_[p].node_path) {
        if (!tree_.nodes[nid].visited) {
          plan_idx = p;
          node_id = nid;
          return;
        }
      }
    }
  }

  void visit(int plan_idx, int node_id) {
    SearchNode& node = tree_.nodes[node_id];
    node.visited = true;
    ++stats_.nodes_expanded;
    if (node.kind == SearchNode::Kind::LNode) {
      visit_lnode(plan_idx, node_id);
    } else {
      visit_mnode(plan_idx, node_id);
    }
  }

  // L-node: materialize the predicate-only chain through this stage (labels
  // shared store-wide) and bound the stage selectivity from it.
  void visit_lnode(int plan_idx, int node_id) {
    const auto& plan = plans_[plan_idx];
    int depth = tree_.nodes[node_id].depth;
    store_.lprime_chain(plan.order, depth - 1);
    store_.lprime_chain(plan.order, depth);
    refresh_lnode(plan_idx, node_id);
  }

  // Sets an L-node's selectivity bounds from cached predicate-only rows: s*
  // is the predicate-only conditional selectivity, and every prefix proxy is
  // unavailable (its threshold is not frozen until the final allocation), so
  // k is the full prefix length.
  void refresh_lnode(int plan_idx, int node_id) {
    SearchNode& node = tree_.nodes[node_id];
    if (node.has_sstar) return;
    const auto& plan = plans_[plan_idx];
    int depth = node.depth;

    std::vector<int> prefix_set(plan.order.begin(), plan.order.begin() + depth - 1);
    std::vector<int> full_set(plan.order.begin(), plan.order.begin() + depth);
    const auto* rows_prefix = store_.lprime_if_cached(prefix_set);
    const auto* rows_full = store_.lprime_if_cached(full_set);
    if (!rows_prefix || !rows_full) return;

    double s_star = rows_prefix->empty()
                        ? 0.0
                        : static_cast<double>(rows_full->size()) /
                              static_cast<double>(rows_prefix->size());
    node.has_sstar = true;
    node.s_star = s_star;
    node.k_unavailable = depth - 1;
    auto [lo, hi] = fine_grained_bounds(s_star, target_, node.k_unavailable);
    node.bounds.s_lo = lo;
    node.bounds.s_hi = hi;
  }

  void absorb_alloc_stats(const AllocStats& s) {
    ++stats_.allocation_calls;
    stats_.trainings += s.trainings;
    stats_.scorer_reuses += s.reuses;
    stats_.training_ms += s.training_ms;
    stats_.search_ms += s.search_ms;
  }

  void visit_mnode(int plan_idx, int node_id) {
    const auto& plan = plans_[plan_idx];
    int depth = tree_.nodes[node_id].depth;
    std::span<const int> prefix(plan.order.data(), static_cast<std::size_t>(depth));
    AllocationResult alloc = accuracy_allocation(prefix, target_, store_, opts_.alloc);
    absorb_alloc_stats(alloc.stats);
    apply_update(plan_idx, alloc);
    if (depth == static_cast<int>(plan.order.size())) {
      plans_[plan_idx].fully_evaluated = true;
      plans_[plan_idx].allocation = std::move(alloc);
    }
  }

  void evaluate_fully(int plan_idx) {
    auto& plan = plans_[plan_idx];
    AllocationResult alloc = accuracy_allocation(plan.order, target_, store_, opts_.alloc);
    absorb_alloc_stats(alloc.stats);
    apply_update(plan_idx, alloc);
    int leaf = plan.node_path.back();
    tree_.nodes[leaf].visited = true;
    plan.fully_evaluated = true;
    plan.allocation = std::move(alloc);
  }

  // update_node(): accuracy factors pin for every allocated stage; the
  // depth-1 stage additionally gets sound cost tightening, since its curve
  // and marginal selectivity do not depend on the accuracy vector. A
  // pass-all fallback says nothing about other vectors, so it updates
  // nothing.
  void apply_update(int plan_idx, const AllocationResult& alloc) {
    if (alloc.stats.fallback_pass_all) return;
    const auto& plan = plans_[plan_idx];
    for (std::size_t i = 0; i < alloc.stages.size(); ++i) {
      const auto& st = alloc.stages[i];
      SearchNode& m = tree_.nodes[stage_mnode(plan, static_cast<int>(i))];
      m.has_acc = true;
      m.acc_factor = st.measured_alpha * st.estimates.delta;
      if (i == 0 && !m.stage_known) {
        m.stage_known = true;
        m.bounds.s_lo = m.bounds.s_hi = st.estimates.s;
        if (st.proxy.is_null()) {
          m.known_null = true;
          m.bounds.alpha_lo = m.bounds.alpha_hi = 1.0;
          m.bounds.r_lo = m.bounds.r_hi = 0.0;
        } else {
          const auto& pts = st.proxy.curve.points;
          m.bounds.r_lo = pts.back().reduction;   // alpha = 1 end
          m.bounds.r_hi = pts.front().reduction;  // alpha = A end
        }
      }
    }
  }

  int stage_mnode(const PlanState& plan, int stage_pos) const {
    // node_path holds [L,M] pairs in the fine tree, single nodes otherwise.
    if (opts_.tree == TreeKind::FineGrained) return plan.node_path[2 * stage_pos + 1];
    return plan.node_path[stage_pos];
  }

  void recompute_plan(PlanState& plan) {
    if (plan.fully_evaluated) {
      plan.sum_cost_lo = plan.sum_cost_hi = plan.allocation.total_cost;
    } else {
      const auto& stages = store_.query().stages;
      double lo = 0.0, hi = 0.0;
      double pref_lo = 1.0, pref_hi = 1.0;
      for (std::size_t i = 0; i < plan.order.size(); ++i) {
        const SearchNode& m = tree_.nodes[stage_mnode(plan, static_cast<int>(i))];
        const auto& stage = stages[plan.order[i]];
        double s_lo = m.bounds.s_lo, s_hi = m.bounds.s_hi;
        if (opts_.tree == TreeKind::FineGrained && !m.stage_known) {
          const SearchNode& l = tree_.nodes[plan.node_path[2 * i]];
          s_lo = std::max(s_lo, l.bounds.s_lo);
          s_hi = std::min(s_hi, l.bounds.s_hi);
        }
        double c = stage.udf.cost_ms;
        double chat = stage.proxy_cost_ms;
        double term_lo;
        if (m.stage_known) {
          term_lo = (m.known_null ? 0.0 : chat) + (1.0 - m.bounds.r_hi) * c;
        } else {
          // An undiscovered NullProxy pays the UDF in full but no proxy scan.
          term_lo = std::min(c, chat + (1.0 - m.bounds.r_hi) * c);
        }
        double term_hi = (m.known_null ? 0.0 : chat) + (1.0 - m.bounds.r_lo) * c;
        lo += pref_lo * term_lo;
        hi += pref_hi * term_hi;
        pref_lo *= s_lo * m.bounds.alpha_lo;
        pref_hi *= s_hi * m.bounds.alpha_hi;
      }
      plan.sum_cost_lo = lo;
      plan.sum_cost_hi = hi;
    }

    double acc_pinned = 1.0;
    int unpinned = 0;
    for (std::size_t i = 0; i < plan.order.size(); ++i) {
      const SearchNode& m = tree_.nodes[stage_mnode(plan, static_cast<int>(i))];
      if (m.has_acc) {
        acc_pinned *= m.acc_factor;
      } else {
        ++unpinned;
      }
    }
    plan.acc_lo = acc_pinned * std::pow(target_, unpinned);
    plan.acc_hi = acc_pinned;
  }

  void recompute_and_prune(bool allow_prune) {
    if (opts_.tree == TreeKind::FineGrained) {
      for (std::size_t p = 0; p < plans_.size(); ++p) {
        if (plans_[p].pruned) continue;
        for (std::size_t i = 0; i < plans_[p].order.size(); ++i) {
          refresh_lnode(static_cast<int>(p), plans_[p].node_path[2 * i]);
        }
      }
    }
    for (auto& plan : plans_) {
      if (!plan.pruned) recompute_plan(plan);
    }
    if (!allow_prune) return;

    auto survivors = surviving();
    double best_hi = std::numeric_limits<double>::infinity();
    int best_hi_plan = -1;
    for (int p : survivors) {
      if (plans_[p].sum_cost_hi < best_hi) {
        best_hi = plans_[p].sum_cost_hi;
        best_hi_plan = p;
      }
    }
    for (int p : survivors) {
      if (p == best_hi_plan) continue;
      if (plans_[p].sum_cost_lo > best_hi + 1e-12) {
        plans_[p].pruned = true;
        ++stats_.plans_pruned;
        count_pruned_nodes(p);
      }
    }
  }

  void count_pruned_nodes(int pruned_idx) {
    for (int nid : plans_[pruned_idx].node_path) {
      if (tree_.nodes[nid].visited) continue;
      bool shared = false;
      for (const auto& other : plans_) {
        if (other.pruned || other.id == plans_[pruned_idx].id) continue;
        if (std::find(other.node_path.begin(), other.node_path.end(), nid) !=
            other.node_path.end()) {
          shared = true;
          break;
        }
      }
      if (!shared) ++stats_.nodes_pruned;
    }
  }

  double target_;
  SampleStore& store_;
  SearchOptions opts_;
  Tree tree_;
  std::vector<PlanState> plans_;
  SearchStats stats_;
};

}  // namespace

SearchResult bb_pruning(double target_accuracy, SampleStore& store, const SearchOptions& opts) {
  Search search(target_accuracy, store, opts);
  return search.run();
}

SearchResult exhaustive_search(double target_accuracy, SampleStore& store,
                               const AllocOptions& alloc) {
  store.query().validate();
  const int n = static_cast<int>(store.query().stages.size());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);

  SearchResult result;
  bool first = true;
  do {
    AllocationResult r = accuracy_allocation(perm, target_accuracy, store, alloc);
    ++result.stats.allocation_calls;
    result.stats.trainings += r.stats.trainings;
    result.stats.scorer_reuses += r.stats.reuses;
    result.stats.training_ms += r.stats.training_ms;
    result.stats.search_ms += r.stats.search_ms;
    if (first || r.total_cost < result.total_cost) {
      first = false;
      result.order = perm;
      result.total_cost = r.total_cost;
      result.allocation = std::move(r);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return result;
}

}  // namespace proxyopt
