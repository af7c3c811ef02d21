#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "proxyopt/relation.hpp"

namespace proxyopt {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Per-execution-context cost accumulator (simulated milliseconds).
struct CostMeter {
  double ms = 0.0;
  void add(double delta) { ms += delta; }
};

// A simulated ML UDF: a row manipulator that writes one categorical label
// column per record at a fixed per-record cost.
struct UdfSpec {
  int id = 0;
  double cost_ms = 0.0;
  std::string output_column;
  // Deterministic and pure with respect to the record contents.
  std::function<std::string(const Record&)> labeler;
};

// Equality predicate `column = value` on a UDF output column.
struct PredicateSpec {
  int id = 0;
  std::string column;
  std::string value;
};

struct QueryStage {
  UdfSpec udf;
  PredicateSpec pred;
  double proxy_cost_ms = 0.01;  // c-hat for the proxy guarding this stage
};

struct QuerySpec {
  std::vector<QueryStage> stages;
  double target_accuracy = 0.9;

  void validate() const;
};

struct SyntheticConfig {
  std::size_t n_rows = 0;
  int dim = 0;
  int n_predicates = 0;
  double correlation = 0.0;  // rho in [0,1]
  std::vector<double> selectivities;
  std::uint64_t seed = 0;
  double noise_sigma = 0.1;

  void validate() const;
};

struct CorrelationScore {
  double value = 0.0;  // kappa-hat squared
  int n = 0;
  int d1 = 0;
  int d2 = 0;
  bool degenerate = false;
};

// Latent-factor generator: per row a shared u ~ U(0,1) and per predicate an
// independent v_k ~ U(0,1); z_k = rho*u + (1-rho)*v_k. Row is "pos" for
// predicate k iff z_k is below the empirical quantile matching the target
// selectivity. Features carry z_k + N(0, sigma) noise plus uniform padding.
std::pair<Table, std::vector<UdfSpec>> generate_dataset(const SyntheticConfig& config);

// Chi-squared column-pair correlation on the first sample_n rows:
// Pearson cell statistic normalized by n*(min(d1,d2)-1).
CorrelationScore correlation_score(const Table& table, const std::string& col_a,
                                   const std::string& col_b, std::size_t sample_n = 10000);

// Runs the labeler, writes the output column, charges cost_ms to the meter.
void apply_udf(const UdfSpec& udf, Record& record, CostMeter& meter);

bool predicate_pass(const PredicateSpec& pred, const Record& record);

// Column name used for generated predicate columns.
std::string synthetic_column_name(int k);

}  // namespace proxyopt
