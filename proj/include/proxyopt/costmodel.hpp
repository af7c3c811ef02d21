#pragma once

#include <span>
#include <vector>

namespace proxyopt {

// Conditional selectivities around one stage:
//   s      selectivity of the predicate given prefix proxies and filters
//   s_bar  selectivity given original-query prefix filters only
//   s_hat  selectivity of the proxy itself
//   s_ddot selectivity of the predicate given prefix plus its own proxy
//   delta  s / s_bar, the input-relation shift caused by prefix proxies
struct StageEstimates {
  double s = 0.0;
  double s_bar = 0.0;
  double s_hat = 1.0;
  double s_ddot = 0.0;
  double delta = 1.0;
  bool zero_support = false;
};

struct StageCostInputs {
  double proxy_cost = 0.0;     // c-hat per record
  double udf_cost = 0.0;       // c per record
  double alpha = 1.0;          // allocated accuracy
  double reduction = 0.0;      // r from the curve
  double prefix_product = 1.0; // prod_{j<i} s_j * alpha_j
};

struct PlanEstimate {
  std::vector<StageEstimates> estimates;
  std::vector<StageCostInputs> cost_inputs;
  double total_cost = 0.0;
  double predicted_accuracy = 1.0;
};

// C = prefix_product * (c_hat + (1 - r) * c)
double pair_cost(const StageCostInputs& in);

// prod_i alpha_i * delta_i
double plan_accuracy(std::span<const double> alphas, std::span<const double> deltas);

// Counting form of the stage estimates. All inputs are pass counts on the
// optimizer's sample:
//   prefix_in        rows entering the stage (prefix proxies+filters applied)
//   proxy_pass       of those, rows passing the stage's proxy
//   pred_pass        of proxy_pass, rows passing the predicate
//   pred_pass_all    of prefix_in, rows passing the predicate (no own proxy)
//   bar_in/bar_pass  rows entering/passing under predicate-only prefixes
StageEstimates estimate_stage(long long prefix_in, long long proxy_pass, long long pred_pass,
                              long long pred_pass_all, long long bar_in, long long bar_pass);

// alpha = s_hat * s_ddot / s (zero-support stages report 1).
double stage_accuracy(const StageEstimates& est);

// Cost curve from the non-convexity construction:
// f(x) = exp(-(2x-1)^3) + 1 - (x-1)^2.
double nonconvexity_cost_curve(double x);

struct NonconvexityWitness {
  double f_mid = 0.0;
  double endpoint_mean = 0.0;
};

// Evaluates the construction at x1=0.1, x2=0.5, lambda=1/2.
NonconvexityWitness nonconvexity_witness();

}  // namespace proxyopt
