#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>

#include "proxyopt/report.hpp"

using namespace proxyopt;

namespace {

RunConfig tiny_config() {
  RunConfig c;
  c.seed = 11;
  c.target_accuracy = 0.9;
  c.alpha_step = 0.05;
  c.head_fraction = 0.25;
  c.sample_cap = 400;
  c.methods = {"orig", "pp"};
  SyntheticConfig sc;
  sc.n_rows = 2000;
  sc.dim = 4;
  sc.n_predicates = 2;
  sc.correlation = 0.6;
  sc.selectivities = {0.5, 0.4};
  c.synthetic = sc;
  c.stages = {{"c0", "pos", 20.0, 0.01}, {"c1", "pos", 20.0, 0.01}};
  return c;
}

}  // namespace

TEST_CASE("config survives a JSON round trip") {
  RunConfig c = tiny_config();
  auto j = config_to_json(c);
  RunConfig back = config_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.seed == c.seed);
  CHECK(back.target_accuracy == c.target_accuracy);
  CHECK(back.alpha_step == c.alpha_step);
  CHECK(back.methods == c.methods);
  REQUIRE(back.synthetic.has_value());
  CHECK(back.synthetic->n_rows == 2000);
  CHECK(back.synthetic->selectivities == c.synthetic->selectivities);
  REQUIRE(back.stages.size() == 2);
  CHECK(back.stages[1].column == "c1");
  CHECK(config_to_json(back).dump() == j.dump());
}

TEST_CASE("config validation catches bad values") {
  RunConfig c = tiny_config();
  c.target_accuracy = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_config();
  c.methods = {"magic"};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_config();
  c.stages.clear();
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("materialize_inputs wires the query against the dataset") {
  RunConfig c = tiny_config();
  auto [table, query] = materialize_inputs(c, c.seed);
  CHECK(table.size() == 2000);
  REQUIRE(query.stages.size() == 2);
  CHECK(query.stages[0].pred.column == "c0");

  // UDF labelers read the generated truth columns.
  CostMeter m;
  Record r = table.records[0];
  apply_udf(query.stages[0].udf, r, m);
  CHECK(r.labels.at("c0") == table.records[0].labels.at("c0"));

  c.stages[0].column = "missing";
  CHECK_THROWS_AS(materialize_inputs(c, c.seed), ConfigError);
}

TEST_CASE("reports are byte-identical for identical config and seed") {
  RunConfig c = tiny_config();
  ExperimentReport a = run_experiment(c);
  ExperimentReport b = run_experiment(c);
  CHECK(report_to_json(a).dump(2) == report_to_json(b).dump(2));
  CHECK(a.failed_methods.empty());
}

TEST_CASE("a methods subset produces exactly those methods") {
  RunConfig c = tiny_config();
  c.methods = {"orig"};
  ExperimentReport report = run_experiment(c);
  REQUIRE(report.runs.size() == 1);
  REQUIRE(report.runs[0].methods.size() == 1);
  CHECK(report.runs[0].methods[0].method == "orig");
  CHECK(report.runs[0].methods[0].measured_accuracy == 1.0);
}

TEST_CASE("multi-seed runs aggregate into one report with CSV output") {
  RunConfig c = tiny_config();
  c.seeds = {1, 2};
  ExperimentReport report = run_experiment(c);
  REQUIRE(report.runs.size() == 2);

  std::string path = "test_cli_tmp_report.csv";
  write_report_csv(report, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "seed,method,cost_ms,cost_per_record,rows_in,rows_out,measured_accuracy");
  int lines = 0;
  std::string line;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 4);  // 2 seeds x 2 methods
  in.close();
  std::remove(path.c_str());
}

TEST_CASE("correlation scores are reported per adjacent pair") {
  RunConfig c = tiny_config();
  ExperimentReport report = run_experiment(c);
  REQUIRE(report.runs[0].pair_correlations.size() == 1);
  CHECK(report.runs[0].pair_correlations[0] > 0.0);
}

TEST_CASE("on correlated workloads every proxy method beats ORIG and CORE beats PP") {
  RunConfig c;
  c.target_accuracy = 0.9;
  c.alpha_step = 0.01;
  c.head_fraction = 0.1;
  c.sample_cap = 1000;
  c.methods = {"orig", "ns", "pp", "core"};
  c.seeds = {0, 1, 2, 3, 4};
  SyntheticConfig sc;
  sc.n_rows = 20000;
  sc.dim = 4;
  sc.n_predicates = 2;
  sc.correlation = 0.9;
  sc.selectivities = {0.5, 0.25};
  c.synthetic = sc;
  c.stages = {{"c0", "pos", 20.0, 0.01}, {"c1", "pos", 60.0, 0.01}};

  ExperimentReport report = run_experiment(c);
  REQUIRE(report.failed_methods.empty());

  std::map<std::string, std::vector<double>> costs;
  for (const auto& run : report.runs) {
    for (const auto& m : run.methods) costs[m.method].push_back(m.cost_ms);
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  double orig = median(costs["orig"]);
  CHECK(median(costs["ns"]) < orig);
  CHECK(median(costs["pp"]) < orig);
  CHECK(median(costs["core"]) < orig);
  CHECK(median(costs["core"]) < median(costs["pp"]));
}
