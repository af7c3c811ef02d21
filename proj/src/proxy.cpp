#include "proxyopt/proxy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "proxyopt/rng.hpp"

namespace proxyopt {

ProxyModel ProxyModel::null_proxy(PrefixDescriptor prefix, int target_pred) {
  ProxyModel p;
  p.prefix = std::move(prefix);
  p.target_pred = target_pred;
  p.scorer.null = true;
  p.curve.points = {CurvePoint{}};  // alpha=1, theta=-inf, r=0
  p.chosen = CurvePoint{};
  p.cost_ms = 0.0;
  return p;
}

namespace {

struct F1Counts {
  long long tp = 0, fp = 0, fn = 0;
};

F1Counts count_at_zero(const Scorer& scorer, const LabeledSample& sample) {
  F1Counts c;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    bool predicted = scorer.score(sample.records[i]) >= 0.0;
    bool actual = sample.labels[i] > 0;
    if (predicted && actual) ++c.tp;
    else if (predicted && !actual) ++c.fp;
    else if (!predicted && actual) ++c.fn;
  }
  return c;
}

Scorer fit_logistic(const LabeledSample& train, double lr, int epochs) {
  const std::size_t n = train.size();
  const std::size_t dim = train.records.empty() ? 0 : train.records[0].features.size();
  Scorer scorer;
  scorer.weights.assign(dim, 0.0);
  scorer.bias = 0.0;
  std::vector<double> grad(dim);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& x = train.records[i].features;
      double y = train.labels[i] > 0 ? 1.0 : -1.0;
      double margin = y * scorer.score(train.records[i]);
      // d/dm log(1+exp(-m)) = -1/(1+exp(m))
      double coeff = -y / (1.0 + std::exp(margin));
      for (std::size_t d = 0; d < dim; ++d) grad[d] += coeff * x[d];
      grad_b += coeff;
    }
    double scale = lr / static_cast<double>(n);
    for (std::size_t d = 0; d < dim; ++d) scorer.weights[d] -= scale * grad[d];
    scorer.bias -= scale * grad_b;
  }
  return scorer;
}

}  // namespace

double f1_at_zero(const Scorer& scorer, const LabeledSample& sample) {
  F1Counts c = count_at_zero(scorer, sample);
  long long denom = 2 * c.tp + c.fp + c.fn;
  if (denom == 0) return 0.0;  // no predicted positives and no actual positives
  return 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

Scorer train_scorer(const LabeledSample& sample, const Split& split, std::uint64_t seed,
                    const TrainOptions& opts) {
  LabeledSample train = subsample(sample, split.train);
  LabeledSample test = subsample(sample, split.test);

  LabeledSample balanced;
  try {
    balanced = rebalance(train, mix_seed(seed, 0x5eb));
  } catch (const DegenerateSampleError&) {
    Scorer s;
    s.null = true;
    return s;
  }

  Scorer best;
  double best_f1 = -1.0;
  for (double lr : opts.learning_rates) {
    Scorer candidate = fit_logistic(balanced, lr, opts.epochs);
    candidate.meta = {opts.epochs, lr, seed};
    double f1 = f1_at_zero(candidate, test);
    if (f1 > best_f1) {  // ties keep the smaller rate (grid is ascending)
      best_f1 = f1;
      best = candidate;
    }
  }
  return best;
}

AccuracyReductionCurve build_curve(const Scorer& scorer, const LabeledSample& validation,
                                   double min_alpha, double alpha_step) {
  if (validation.size() < 10) throw DegenerateSampleError("validation sample too small");

  const std::size_t n = validation.size();
  std::vector<double> scores(n);
  long long positives = 0;
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = scorer.score(validation.records[i]);
    if (validation.labels[i] > 0) ++positives;
  }
  if (positives == 0) throw DegenerateSampleError("degenerate validation");

  // Candidate thresholds: -inf plus midpoints between consecutive distinct
  // scores. Walking the sorted scores gives (alpha, r) for each candidate in
  // one pass: records strictly below theta are dropped.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  struct Candidate {
    double theta, alpha, reduction;
  };
  std::vector<Candidate> cands;
  cands.push_back({-std::numeric_limits<double>::infinity(), 1.0, 0.0});
  long long dropped = 0, dropped_pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ++dropped;
    if (validation.labels[order[i]] > 0) ++dropped_pos;
    if (i + 1 < n && scores[order[i + 1]] > scores[order[i]]) {
      double theta = 0.5 * (scores[order[i]] + scores[order[i + 1]]);
      double alpha = static_cast<double>(positives - dropped_pos) / static_cast<double>(positives);
      double reduction = static_cast<double>(dropped) / static_cast<double>(n);
      cands.push_back({theta, alpha, reduction});
    }
  }

  // For each grid accuracy keep the max-reduction candidate achieving it
  // (ties -> higher achieved alpha), then dedupe. Candidates have distinct
  // drop counts, so the kept points end up alpha-ascending, r-non-increasing.
  AccuracyReductionCurve curve;
  auto steps = static_cast<long long>(std::ceil((1.0 - min_alpha) / alpha_step - 1e-9));
  for (long long g = steps; g >= 0; --g) {
    double target = std::min(1.0, min_alpha + static_cast<double>(g) * alpha_step);
    const Candidate* best = nullptr;
    for (const auto& c : cands) {
      if (c.alpha + 1e-12 < target) continue;
      if (!best || c.reduction > best->reduction ||
          (c.reduction == best->reduction && c.alpha > best->alpha)) {
        best = &c;
      }
    }
    if (!best) continue;
    if (curve.points.empty() || curve.points.back().theta != best->theta) {
      curve.points.push_back(CurvePoint{best->alpha, best->theta, best->reduction});
    }
  }
  std::reverse(curve.points.begin(), curve.points.end());
  return curve;
}

CurvePoint select_threshold(const AccuracyReductionCurve& curve, double alpha) {
  for (const auto& pt : curve.points) {
    if (pt.alpha + 1e-12 >= alpha) return pt;
  }
  return CurvePoint{};  // alpha above all points: pass everything
}

std::vector<Record> apply_proxy(const ProxyModel& proxy, std::span<const Record> records,
                                CostMeter& meter) {
  meter.add(proxy.cost_ms * static_cast<double>(records.size()));
  std::vector<Record> out;
  if (proxy.is_null()) {
    out.assign(records.begin(), records.end());
    return out;
  }
  double theta = proxy.chosen ? proxy.chosen->theta : -std::numeric_limits<double>::infinity();
  for (const auto& r : records) {
    if (proxy.scorer.score(r) >= theta) out.push_back(r);
  }
  return out;
}

bool eps_approx(const Scorer& m_star, const LabeledSample& l_star, const LabeledSample& l,
                double eps) {
  double phi_star = f1_at_zero(m_star, l_star);
  double phi = f1_at_zero(m_star, l);
  return (1.0 - eps) * phi_star <= phi && phi <= (1.0 + eps) * phi_star;
}

ProxyModel build_proxy(const LabeledSample& sample, double min_alpha, double alpha_step,
                       double cost_ms, std::uint64_t seed, PrefixDescriptor prefix) {
  if (sample.size() < 10) return ProxyModel::null_proxy(std::move(prefix), sample.target_pred);

  Split split = split_622(sample, seed);
  Scorer scorer = train_scorer(sample, split, seed);
  if (scorer.null) return ProxyModel::null_proxy(std::move(prefix), sample.target_pred);

  LabeledSample validation = subsample(sample, split.validation);
  ProxyModel proxy;
  proxy.prefix = std::move(prefix);
  proxy.target_pred = sample.target_pred;
  proxy.scorer = std::move(scorer);
  proxy.sample = sample;
  proxy.cost_ms = cost_ms;
  try {
    proxy.curve = build_curve(proxy.scorer, validation, min_alpha, alpha_step);
  } catch (const DegenerateSampleError&) {
    return ProxyModel::null_proxy(std::move(proxy.prefix), sample.target_pred);
  }
  return proxy;
}

nlohmann::ordered_json proxy_to_json(const ProxyModel& proxy) {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["target_pred"] = proxy.target_pred;
  j["null"] = proxy.is_null();
  j["cost_ms"] = proxy.cost_ms;
  nlohmann::ordered_json prefix = nlohmann::ordered_json::array();
  for (const auto& e : proxy.prefix) {
    prefix.push_back({{"kind", e.kind == PrefixEntry::Kind::Filter ? "filter" : "proxy"},
                      {"pred", e.pred_id},
                      {"alpha", e.alpha}});
  }
  j["prefix"] = std::move(prefix);
  if (!proxy.is_null()) {
    j["weights"] = proxy.scorer.weights;
    j["bias"] = proxy.scorer.bias;
    j["training"] = {{"epochs", proxy.scorer.meta.epochs},
                     {"learning_rate", proxy.scorer.meta.learning_rate},
                     {"seed", proxy.scorer.meta.seed}};
  }
  nlohmann::ordered_json curve = nlohmann::ordered_json::array();
  for (const auto& pt : proxy.curve.points) {
    curve.push_back({{"alpha", pt.alpha},
                     {"theta", std::isinf(pt.theta) ? -1e308 : pt.theta},
                     {"reduction", pt.reduction}});
  }
  j["curve"] = std::move(curve);
  if (proxy.chosen) {
    j["chosen"] = {{"alpha", proxy.chosen->alpha},
                   {"theta", std::isinf(proxy.chosen->theta) ? -1e308 : proxy.chosen->theta},
                   {"reduction", proxy.chosen->reduction}};
  }
  return j;
}

ProxyModel proxy_from_json(const nlohmann::json& j) {
  if (j.at("version").get<int>() != 1) throw ConfigError("unsupported proxy version");
  ProxyModel proxy;
  proxy.target_pred = j.at("target_pred").get<int>();
  proxy.cost_ms = j.at("cost_ms").get<double>();
  for (const auto& e : j.at("prefix")) {
    PrefixEntry entry;
    entry.kind = e.at("kind").get<std::string>() == "filter" ? PrefixEntry::Kind::Filter
                                                             : PrefixEntry::Kind::Proxy;
    entry.pred_id = e.at("pred").get<int>();
    entry.alpha = e.at("alpha").get<double>();
    proxy.prefix.push_back(entry);
  }
  if (j.at("null").get<bool>()) {
    proxy.scorer.null = true;
  } else {
    proxy.scorer.weights = j.at("weights").get<std::vector<double>>();
    proxy.scorer.bias = j.at("bias").get<double>();
    proxy.scorer.meta.epochs = j.at("training").at("epochs").get<int>();
    proxy.scorer.meta.learning_rate = j.at("training").at("learning_rate").get<double>();
    proxy.scorer.meta.seed = j.at("training").at("seed").get<std::uint64_t>();
  }
  for (const auto& p : j.at("curve")) {
    CurvePoint pt;
    pt.alpha = p.at("alpha").get<double>();
    pt.theta = p.at("theta").get<double>();
    if (pt.theta <= -1e308) pt.theta = -std::numeric_limits<double>::infinity();
    pt.reduction = p.at("reduction").get<double>();
    proxy.curve.points.push_back(pt);
  }
  if (j.contains("chosen")) {
    CurvePoint pt;
    pt.alpha = j.at("chosen").at("alpha").get<double>();
    pt.theta = j.at("chosen").at("theta").get<double>();
    if (pt.theta <= -1e308) pt.theta = -std::numeric_limits<double>::infinity();
    pt.reduction = j.at("chosen").at("reduction").get<double>();
    proxy.chosen = pt;
  }
  return proxy;
}

}  // namespace proxyopt
