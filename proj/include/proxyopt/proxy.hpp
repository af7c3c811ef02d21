#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "proxyopt/relation.hpp"
#include "proxyopt/udfsim.hpp"

#include "json.hpp"

namespace proxyopt {

// Linear scorer M(x) = w.x + b trained with full-batch gradient descent on
// the logistic loss. A null scorer marks a degenerate stage (NullProxy).
struct Scorer {
  std::vector<double> weights;
  double bias = 0.0;
  bool null = false;
  struct Meta {
    int epochs = 0;
    double learning_rate = 0.0;
    std::uint64_t seed = 0;
  } meta;

  double score(const Record& r) const {
    double s = bias;
    for (std::size_t i = 0; i < weights.size() && i < r.features.size(); ++i) {
      s += weights[i] * r.features[i];
    }
    return s;
  }
};

struct CurvePoint {
  double alpha = 1.0;       // achieved accuracy on the validation set
  double theta = -std::numeric_limits<double>::infinity();
  double reduction = 0.0;   // achieved reduction on the validation set
};

// Pareto mapping alpha -> (theta, r), alpha ascending, r non-increasing.
struct AccuracyReductionCurve {
  std::vector<CurvePoint> points;
};

struct PrefixEntry {
  enum class Kind { Filter, Proxy };
  Kind kind = Kind::Filter;
  int pred_id = -1;
  double alpha = 1.0;  // meaningful for Kind::Proxy
};
using PrefixDescriptor = std::vector<PrefixEntry>;

struct ProxyModel {
  PrefixDescriptor prefix;           // d: the input relation it was built for
  int target_pred = -1;              // sigma: the predicate it guards
  Scorer scorer;                     // M
  LabeledSample sample;              // L: what the scorer was built from
  AccuracyReductionCurve curve;      // R
  std::optional<CurvePoint> chosen;  // (alpha, theta, r) once allocated
  double cost_ms = 0.01;             // c-hat; 0 for NullProxy

  bool is_null() const { return scorer.null; }

  static ProxyModel null_proxy(PrefixDescriptor prefix, int target_pred);
};

struct TrainOptions {
  int epochs = 200;
  std::vector<double> learning_rates = {0.01, 0.1, 1.0};
};

// Trains on the rebalanced train part; picks the learning rate with the best
// F1 at theta=0 on the test part (ties -> smaller rate). Degenerate train
// part yields a null scorer.
Scorer train_scorer(const LabeledSample& sample, const Split& split, std::uint64_t seed,
                    const TrainOptions& opts = {});

// Sweeps candidate thresholds (midpoints of consecutive distinct scores plus
// -inf) over the validation sample and keeps, for each grid accuracy in
// {min_alpha .. 1.0 step alpha_step}, the maximum-reduction point.
AccuracyReductionCurve build_curve(const Scorer& scorer, const LabeledSample& validation,
                                   double min_alpha, double alpha_step = 0.01);

// Smallest curve alpha >= requested alpha (conservative). Above all points ->
// pass-everything.
CurvePoint select_threshold(const AccuracyReductionCurve& curve, double alpha);

// Keeps records scoring >= chosen theta, preserving order; meters cost_ms per
// input record. NullProxy passes everything.
std::vector<Record> apply_proxy(const ProxyModel& proxy, std::span<const Record> records,
                                CostMeter& meter);

// F1 of the scorer at theta=0 on the sample; 0 when undefined.
double f1_at_zero(const Scorer& scorer, const LabeledSample& sample);

// Classifier-reuse test: (1-eps)*phi(L*) <= phi(L) <= (1+eps)*phi(L*), with
// phi = F1 of m_star at theta=0.
bool eps_approx(const Scorer& m_star, const LabeledSample& l_star, const LabeledSample& l,
                double eps);

// Full build pipeline: 6:2:2 split, rebalance, train, curve. Degenerate input
// (fewer than 10 rows, single class, no validation positives) -> NullProxy.
ProxyModel build_proxy(const LabeledSample& sample, double min_alpha, double alpha_step,
                       double cost_ms, std::uint64_t seed, PrefixDescriptor prefix = {});

nlohmann::ordered_json proxy_to_json(const ProxyModel& proxy);
ProxyModel proxy_from_json(const nlohmann::json& j);

}  // namespace proxyopt
