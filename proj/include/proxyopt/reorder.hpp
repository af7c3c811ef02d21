#pragma once

#include <functional>
#include <span>
#include <vector>

#include "proxyopt/allocate.hpp"

namespace proxyopt {

enum class TreeKind { Coarse, FineGrained };

// Per-node bound state. Bounds are only ever tightened with quantities that
// hold for every accuracy vector the final allocation may pick: a stage's
// depth-1 curve and marginal selectivity are fixed by the data, predicate-only
// selectivities bound deeper stages, and alpha always ranges over [A, 1].
struct BoundState {
  double alpha_lo = 0.0, alpha_hi = 1.0;
  double s_lo = 0.0, s_hi = 1.0;
  double r_lo = 0.0, r_hi = 1.0;
  double cost_lo = 0.0, cost_hi = 0.0;  // per-node init values (Lemma-4 extremes)
};

struct SearchNode {
  int stage = -1;  // query stage index
  int depth = 0;   // stage depth (root children at 1)
  enum class Kind { Coarse, LNode, MNode } kind = Kind::Coarse;
  int parent = -1;
  BoundState bounds;
  bool visited = false;
  bool stage_known = false;  // depth-1 curve/selectivity tightening applied
  bool known_null = false;   // stage proxy degenerate (charges no proxy cost)
  bool has_acc = false;      // accuracy factor pinned by an allocation
  double acc_factor = 1.0;   // measured alpha*delta from the last allocation
  // L-node extras (fine-grained tree)
  bool has_sstar = false;
  double s_star = 0.0;
  int k_unavailable = 0;
};

struct PlanState {
  int id = 0;                  // lexicographic rank of the order
  std::vector<int> order;      // stage indices
  std::vector<int> node_path;  // tree node ids, root -> leaf
  double sum_cost_lo = 0.0;
  double sum_cost_hi = 0.0;
  double acc_lo = 0.0, acc_hi = 1.0;
  bool pruned = false;
  bool fully_evaluated = false;
  AllocationResult allocation;  // valid when fully evaluated
};

struct SearchStats {
  int nodes_expanded = 0;
  int nodes_pruned = 0;
  int plans_pruned = 0;
  long long allocation_calls = 0;
  long long trainings = 0;
  long long scorer_reuses = 0;
  double training_ms = 0.0;  // simulated, summed over allocation calls
  double search_ms = 0.0;
};

struct SearchResult {
  std::vector<int> order;
  AllocationResult allocation;
  double total_cost = 0.0;
  SearchStats stats;
};

struct SearchSnapshot {
  int step = 0;
  const std::vector<PlanState>* plans = nullptr;
};

struct SearchOptions {
  TreeKind tree = TreeKind::Coarse;
  AllocOptions alloc;
  std::function<void(const SearchSnapshot&)> observer;
};

// Initial per-node cost bounds (Lemma-4 extremes): a depth-1 node costs at
// least its proxy scan and at most proxy + UDF; deeper nodes start at zero
// because an all-discarding prefix empties their input.
void initialize_bounds(SearchNode& node, double target_accuracy, double proxy_cost,
                       double udf_cost);

// Selectivity bounds at an L-node whose sample was built with k prefix
// proxies unavailable: s_hi = s*, s_lo = (s* - (1-A)^k) / A^k clamped to
// [0, s*]; k = 0 pins both to s*.
std::pair<double, double> fine_grained_bounds(double s_star, double target_accuracy, int k);

// Branch-and-bound over stage orders (Algorithm-2 style): visit nodes of the
// queue-head plan, allocate accuracies for the visited prefix, tighten bounds,
// then sort plans by mean cost and prune strictly dominated ones. A plan's
// final cost always comes from a full allocation over its complete order.
SearchResult bb_pruning(double target_accuracy, SampleStore& store, const SearchOptions& opts);

// Exhaustive order enumeration sharing the same allocator; the oracle twin of
// bb_pruning and the CORE-h style baseline.
SearchResult exhaustive_search(double target_accuracy, SampleStore& store,
                               const AllocOptions& alloc);

}  // namespace proxyopt
