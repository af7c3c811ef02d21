#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>

#include "proxyopt/costmodel.hpp"
#include "proxyopt/rng.hpp"

using namespace proxyopt;

TEST_CASE("pair cost matches the worked numbers") {
  StageCostInputs in;
  in.proxy_cost = 0.01;
  in.udf_cost = 20.0;
  in.reduction = 80.0 / 200.0;
  in.prefix_product = 1.0;
  in.alpha = 0.96;
  CHECK(pair_cost(in) == doctest::Approx(12.01).epsilon(1e-9));

  in.reduction = 1.0;
  in.prefix_product = 0.37;
  CHECK(pair_cost(in) == doctest::Approx(0.37 * 0.01).epsilon(1e-12));

  in.reduction = 0.0;
  in.prefix_product = 1.0;
  CHECK(pair_cost(in) == doctest::Approx(20.01).epsilon(1e-12));
}

TEST_CASE("pair cost monotonicity") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    StageCostInputs in;
    in.proxy_cost = rng.next_double();
    in.udf_cost = 50.0 * rng.next_double();
    in.reduction = rng.next_double();
    in.prefix_product = rng.next_double();
    double base = pair_cost(in);

    StageCostInputs up = in;
    up.udf_cost += 1.0;
    CHECK(pair_cost(up) >= base);
    up = in;
    up.proxy_cost += 0.5;
    CHECK(pair_cost(up) >= base);
    up = in;
    up.prefix_product = std::min(1.0, in.prefix_product + 0.1);
    CHECK(pair_cost(up) >= base);
    up = in;
    up.reduction = std::min(1.0, in.reduction + 0.1);
    CHECK(pair_cost(up) <= base);
  }
}

TEST_CASE("plan accuracy is the alpha-delta product") {
  std::array<double, 2> alphas{0.96, 54.0 / 56.0};
  std::array<double, 2> deltas{1.0, (56.0 / 96.0) / (60.0 / 100.0)};
  double acc = plan_accuracy(alphas, deltas);
  CHECK(acc == doctest::Approx(0.9).epsilon(1e-9));  // telescopes to 54/60

  std::array<double, 3> ones{1.0, 1.0, 1.0};
  CHECK(plan_accuracy(ones, ones) == 1.0);
  std::array<double, 2> zero{0.0, 0.9};
  std::array<double, 2> d{1.0, 1.0};
  CHECK(plan_accuracy(zero, d) == 0.0);
}

TEST_CASE("stage estimates reproduce the worked example") {
  // Stage 2 of the example: 96 rows enter (after proxy1 and sigma1), 56 pass
  // the predicate; under predicate-only prefixes 100 enter and 60 pass.
  StageEstimates second = estimate_stage(96, 66, 54, 56, 100, 60);
  CHECK(second.s == doctest::Approx(56.0 / 96.0).epsilon(1e-12));
  CHECK(second.s_bar == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(second.delta == doctest::Approx(0.972).epsilon(1e-3));
  CHECK(stage_accuracy(second) == doctest::Approx(54.0 / 56.0).epsilon(1e-12));

  // Stage 1: no prefix proxies, delta is exactly 1.
  StageEstimates first = estimate_stage(200, 120, 96, 100, 200, 100);
  CHECK(first.delta == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(first.s_hat == doctest::Approx(120.0 / 200.0).epsilon(1e-12));
  CHECK(first.s_ddot == doctest::Approx(96.0 / 120.0).epsilon(1e-12));
  CHECK(stage_accuracy(first) == doctest::Approx(0.96).epsilon(1e-12));
}

TEST_CASE("zero-support prefixes flag and default") {
  StageEstimates est = estimate_stage(0, 0, 0, 0, 0, 0);
  CHECK(est.zero_support);
  CHECK(est.delta == 1.0);
  CHECK(est.s == 0.0);
  CHECK(stage_accuracy(est) == 1.0);
}

TEST_CASE("nonconvexity cost curve evaluates the stated formula") {
  // Literal evaluation (independently computed): exp(0.064) + 0.51 at the
  // midpoint of (0.1, 0.5).
  CHECK(nonconvexity_cost_curve(0.3) == doctest::Approx(1.5760923987615052).epsilon(1e-12));
  CHECK(nonconvexity_cost_curve(0.1) == doctest::Approx(std::exp(0.512) + 0.19).epsilon(1e-12));
  CHECK(nonconvexity_cost_curve(0.5) == doctest::Approx(1.75).epsilon(1e-12));
}

TEST_CASE("the cost curve is non-convex") {
  // The curve does violate convexity, e.g. between 0.5 and 0.9.
  double mid = nonconvexity_cost_curve(0.7);
  double mean = 0.5 * (nonconvexity_cost_curve(0.5) + nonconvexity_cost_curve(0.9));
  CHECK(mid > mean);
}

TEST_CASE("witness evaluates at the stated points") {
  NonconvexityWitness w = nonconvexity_witness();
  CHECK(w.f_mid == doctest::Approx(nonconvexity_cost_curve(0.3)).epsilon(1e-12));
  CHECK(w.endpoint_mean ==
        doctest::Approx(0.5 * (nonconvexity_cost_curve(0.1) + nonconvexity_cost_curve(0.5)))
            .epsilon(1e-12));
}
