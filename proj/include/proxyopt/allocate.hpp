#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "proxyopt/costmodel.hpp"
#include "proxyopt/proxy.hpp"
#include "proxyopt/relation.hpp"
#include "proxyopt/udfsim.hpp"

namespace proxyopt {

// Shared optimizer sample. Rows are labeled lazily, once per (row, stage);
// predicate-only materializations L' are keyed by predicate set so every
// order sharing a prefix set reuses both the rows and the labels.
class SampleStore {
 public:
  SampleStore(std::vector<Record> rows, QuerySpec query);

  const std::vector<Record>& rows() const { return rows_; }
  const QuerySpec& query() const { return query_; }
  const Record& row(int idx) const { return rows_[idx]; }

  // Rows passing the first `depth` predicates of `order`, materialized
  // progressively along the chain (raw input at depth 0).
  const std::vector<int>& lprime_chain(std::span<const int> order, int depth);

  // Lookup without materializing; nullptr when the set is not cached.
  const std::vector<int>* lprime_if_cached(std::vector<int> pred_set) const;

  bool pred_pass(int row_idx, int stage_idx) const;

  double labeling_ms() const { return labeling_meter_.ms; }
  long long udf_invocations() const { return udf_invocations_; }
  int materializations() const { return materializations_; }

 private:
  void ensure_labels(const std::vector<int>& rows_idx, int stage_idx);

  std::vector<Record> rows_;
  QuerySpec query_;
  std::vector<std::vector<char>> labeled_;  // [stage][row]
  std::map<std::vector<int>, std::vector<int>> lprime_;
  CostMeter labeling_meter_;
  long long udf_invocations_ = 0;
  int materializations_ = 0;
};

struct AllocOptions {
  double alpha_step = 0.01;
  double eps = 0.05;
  bool reuse = true;
  enum class Mode { Exhaustive, HillClimb } mode = Mode::Exhaustive;
  std::size_t sample_cap = 1000;  // |L| target per stage
  std::uint64_t seed = 0;
  double train_flop_ms = 1e-6;  // simulated cost per row*epoch*weight*rate
};

struct AllocStats {
  int lprime_materializations = 0;
  int trainings = 0;
  int reuses = 0;
  long long vectors_evaluated = 0;
  long long vectors_rejected = 0;
  bool fallback_pass_all = false;
  double labeling_ms = 0.0;
  double training_ms = 0.0;
  double search_ms = 0.0;
};

struct StageOutcome {
  int stage = -1;              // index into the query's stages
  ProxyModel proxy;            // thresholded (chosen alpha/theta/r)
  double alloc_alpha = 1.0;
  double measured_alpha = 1.0;  // kept positives / positives on the sample
  double curve_reduction = 0.0;
  StageEstimates estimates;
  long long rows_in = 0;  // sample rows entering this stage
};

struct AllocationResult {
  std::vector<int> order;
  std::vector<double> alphas;
  std::vector<StageOutcome> stages;
  PlanEstimate estimate;           // analytical view: estimates + cost inputs
  double total_cost = 0.0;         // per input record, Eq-1 sum
  double measured_accuracy = 1.0;  // sample-measured prod alpha*delta
  AllocStats stats;
};

// Grid {A, A+step, ..., 1.0} (last value clamped to 1.0).
std::vector<double> grid_values(double target_accuracy, double step);

// Deterministic per-stage seed used for splits and training inside the
// allocator; exposed so independent oracles can reproduce builds exactly.
std::uint64_t stage_seed(std::uint64_t base, int stage_idx, int depth);

// Algorithm: enumerate accuracy vectors on the grid whose raw product lies in
// [A, A + m*step), build proxies along the order reusing materialized samples
// and (optionally) classifiers, drop vectors whose sample-measured accuracy
// falls below A, and return the cheapest feasible vector with its proxies
// retrained fresh.
AllocationResult accuracy_allocation(std::span<const int> order, double target_accuracy,
                                     SampleStore& store, const AllocOptions& opts);

// Labeled sample for stage `order[depth]` given thresholded prefix proxies:
// predicate-only L' first (Theorem-1 commutation), then the proxy filters.
LabeledSample derive_L(SampleStore& store, std::span<const int> order, int depth,
                       std::span<const ProxyModel* const> prefix_proxies);

// Returns `candidate` when the eps-approximation test admits it, otherwise a
// freshly trained scorer. At eps=0 reuse additionally requires the samples to
// be identical so reused and fresh scorers coincide bit-for-bit.
Scorer maybe_reuse_scorer(const Scorer* candidate, const LabeledSample& l_star,
                          const LabeledSample& l, double eps, const Split& split,
                          std::uint64_t seed, bool samples_identical, AllocStats& stats,
                          double train_flop_ms = 1e-6);

}  // namespace proxyopt
