#include "proxyopt/udfsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "proxyopt/rng.hpp"

namespace proxyopt {

void QuerySpec::validate() const {
  if (stages.empty() || stages.size() > 8) {
    throw ConfigError("query must have between 1 and 8 stages, got " +
                      std::to_string(stages.size()));
  }
  if (!(target_accuracy > 0.0 && target_accuracy <= 1.0)) {
    throw ConfigError("target accuracy must be in (0,1]");
  }
  for (const auto& st : stages) {
    if (st.pred.column != st.udf.output_column) {
      throw ConfigError("predicate column '" + st.pred.column +
                        "' does not match UDF output column '" + st.udf.output_column + "'");
    }
    if (st.udf.cost_ms < 0 || st.proxy_cost_ms < 0) throw ConfigError("negative stage cost");
  }
}

void SyntheticConfig::validate() const {
  if (n_rows == 0) throw ConfigError("n_rows must be positive");
  if (n_predicates <= 0) throw ConfigError("n_predicates must be positive");
  if (dim < n_predicates) throw ConfigError("dim must be >= n_predicates");
  if (correlation < 0.0 || correlation > 1.0) throw ConfigError("correlation must be in [0,1]");
  if (static_cast<int>(selectivities.size()) != n_predicates) {
    throw ConfigError("need one selectivity per predicate");
  }
  for (double s : selectivities) {
    if (!(s > 0.0 && s < 1.0)) throw ConfigError("selectivities must be in (0,1)");
  }
  if (noise_sigma < 0.0) throw ConfigError("noise sigma must be >= 0");
}

std::string synthetic_column_name(int k) { return "c" + std::to_string(k); }

std::pair<Table, std::vector<UdfSpec>> generate_dataset(const SyntheticConfig& config) {
  config.validate();
  const std::size_t n = config.n_rows;
  const int k_preds = config.n_predicates;
  Rng rng(config.seed);

  std::vector<std::vector<double>> z(k_preds, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    double u = rng.next_double();
    for (int k = 0; k < k_preds; ++k) {
      double v = rng.next_double();
      z[k][i] = config.correlation * u + (1.0 - config.correlation) * v;
    }
  }

  // Empirical quantile per predicate: pos iff z < threshold, threshold chosen
  // so exactly round(s*n) rows qualify (up to ties).
  std::vector<double> thresholds(k_preds);
  for (int k = 0; k < k_preds; ++k) {
    auto sorted = z[k];
    std::sort(sorted.begin(), sorted.end());
    auto m = static_cast<std::size_t>(std::llround(config.selectivities[k] * static_cast<double>(n)));
    thresholds[k] = m >= n ? std::numeric_limits<double>::infinity() : sorted[m];
  }

  Table table;
  table.dim = config.dim;
  for (int k = 0; k < k_preds; ++k) table.schema.push_back(synthetic_column_name(k));
  table.records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Record rec;
    rec.id = static_cast<int>(i);
    rec.features.reserve(config.dim);
    for (int k = 0; k < k_preds; ++k) {
      rec.features.push_back(z[k][i] + rng.next_gaussian(0.0, config.noise_sigma));
    }
    for (int d = k_preds; d < config.dim; ++d) rec.features.push_back(rng.next_double());
    for (int k = 0; k < k_preds; ++k) {
      rec.labels[synthetic_column_name(k)] = z[k][i] < thresholds[k] ? "pos" : "neg";
    }
    table.records.push_back(std::move(rec));
  }

  // The "expensive model" for generated data reproduces the precomputed truth
  // column; purity holds because the column travels with the record.
  std::vector<UdfSpec> udfs;
  for (int k = 0; k < k_preds; ++k) {
    UdfSpec udf;
    udf.id = k;
    udf.cost_ms = 0.0;
    udf.output_column = synthetic_column_name(k);
    std::string col = udf.output_column;
    udf.labeler = [col](const Record& r) { return r.labels.at(col); };
    udfs.push_back(std::move(udf));
  }
  return {std::move(table), std::move(udfs)};
}

CorrelationScore correlation_score(const Table& table, const std::string& col_a,
                                   const std::string& col_b, std::size_t sample_n) {
  CorrelationScore score;
  const std::size_t n = std::min(sample_n, table.size());
  score.n = static_cast<int>(n);

  std::map<std::string, int> cat_a, cat_b;
  std::map<std::pair<int, int>, long long> joint;
  std::vector<long long> row_counts, col_counts;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& labels = table.records[i].labels;
    auto ita = labels.find(col_a);
    auto itb = labels.find(col_b);
    if (ita == labels.end() || itb == labels.end()) {
      throw SchemaError("column not populated on sampled rows");
    }
    auto ia = cat_a.emplace(ita->second, static_cast<int>(cat_a.size())).first->second;
    auto ib = cat_b.emplace(itb->second, static_cast<int>(cat_b.size())).first->second;
    if (static_cast<std::size_t>(ia) >= row_counts.size()) row_counts.push_back(0);
    if (static_cast<std::size_t>(ib) >= col_counts.size()) col_counts.push_back(0);
    ++row_counts[ia];
    ++col_counts[ib];
    ++joint[{ia, ib}];
  }
  score.d1 = static_cast<int>(cat_a.size());
  score.d2 = static_cast<int>(cat_b.size());
  if (std::min(score.d1, score.d2) < 2) {
    score.degenerate = true;
    score.value = 0.0;
    return score;
  }

  // Pearson chi-squared with expected counts from the marginals, normalized
  // by n*(min(d1,d2)-1) so a deterministic one-to-one pair scores 1.
  double chi2 = 0.0;
  for (int i = 0; i < score.d1; ++i) {
    for (int j = 0; j < score.d2; ++j) {
      double expected = static_cast<double>(row_counts[i]) * static_cast<double>(col_counts[j]) /
                        static_cast<double>(n);
      if (expected <= 0.0) continue;
      auto it = joint.find({i, j});
      double observed = it == joint.end() ? 0.0 : static_cast<double>(it->second);
      double diff = observed - expected;
      chi2 += diff * diff / expected;
    }
  }
  score.value = chi2 / (static_cast<double>(n) * (std::min(score.d1, score.d2) - 1));
  return score;
}

void apply_udf(const UdfSpec& udf, Record& record, CostMeter& meter) {
  record.labels[udf.output_column] = udf.labeler(record);
  meter.add(udf.cost_ms);
}

bool predicate_pass(const PredicateSpec& pred, const Record& record) {
  auto it = record.labels.find(pred.column);
  return it != record.labels.end() && it->second == pred.value;
}

}  // namespace proxyopt
