#include "proxyopt/costmodel.hpp"

#include <cmath>

namespace proxyopt {

double pair_cost(const StageCostInputs& in) {
  return in.prefix_product * (in.proxy_cost + (1.0 - in.reduction) * in.udf_cost);
}

double plan_accuracy(std::span<const double> alphas, std::span<const double> deltas) {
  double product = 1.0;
  for (std::size_t i = 0; i < alphas.size(); ++i) product *= alphas[i] * deltas[i];
  return product;
}

StageEstimates estimate_stage(long long prefix_in, long long proxy_pass, long long pred_pass,
                              long long pred_pass_all, long long bar_in, long long bar_pass) {
  StageEstimates est;
  if (prefix_in <= 0) {
    est.zero_support = true;
    est.s = 0.0;
    est.s_bar = 0.0;
    est.s_hat = 1.0;
    est.s_ddot = 0.0;
    est.delta = 1.0;
    return est;
  }
  est.s = static_cast<double>(pred_pass_all) / static_cast<double>(prefix_in);
  est.s_hat = static_cast<double>(proxy_pass) / static_cast<double>(prefix_in);
  est.s_ddot = proxy_pass > 0 ? static_cast<double>(pred_pass) / static_cast<double>(proxy_pass) : 0.0;
  est.s_bar = bar_in > 0 ? static_cast<double>(bar_pass) / static_cast<double>(bar_in) : 0.0;
  if (est.s_bar <= 0.0) {
    est.delta = 1.0;
    est.zero_support = true;
  } else {
    est.delta = est.s / est.s_bar;
  }
  return est;
}

double stage_accuracy(const StageEstimates& est) {
  if (est.zero_support || est.s <= 0.0) return 1.0;
  return est.s_hat * est.s_ddot / est.s;
}

double nonconvexity_cost_curve(double x) {
  double t = 2.0 * x - 1.0;
  return std::exp(-(t * t * t)) + 1.0 - (x - 1.0) * (x - 1.0);
}

NonconvexityWitness nonconvexity_witness() {
  const double x1 = 0.1, x2 = 0.5;
  NonconvexityWitness w;
  w.f_mid = nonconvexity_cost_curve(0.5 * (x1 + x2));
  w.endpoint_mean = 0.5 * (nonconvexity_cost_curve(x1) + nonconvexity_cost_curve(x2));
  return w;
}

}  // namespace proxyopt
