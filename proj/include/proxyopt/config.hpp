#pragma once

#include <optional>
#include <string>
#include <vector>

#include "proxyopt/exec.hpp"
#include "proxyopt/udfsim.hpp"

#include "json.hpp"

namespace proxyopt {

struct StageConfig {
  std::string column;
  std::string value = "pos";
  double udf_cost_ms = 20.0;
  double proxy_cost_ms = 0.01;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds;  // compare runs; falls back to {seed}
  double target_accuracy = 0.9;
  double alpha_step = 0.01;
  double eps = 0.05;
  bool reuse = true;
  double head_fraction = 0.05;
  std::size_t sample_cap = 1000;
  std::string tree = "coarse";        // coarse | fine
  std::string alloc_mode = "exhaustive";  // exhaustive | hill
  std::vector<std::string> methods = {"orig", "ns", "pp", "core"};

  // Dataset: either a CSV path (+dim) or a synthetic spec.
  std::optional<std::string> csv_path;
  int csv_dim = 0;
  std::optional<SyntheticConfig> synthetic;

  std::vector<StageConfig> stages;

  void validate() const;
};

RunConfig config_from_json(const nlohmann::json& j);
nlohmann::ordered_json config_to_json(const RunConfig& config);
RunConfig load_config(const std::string& path);

// Materializes the dataset (loading or generating) and the query spec; the
// synthetic path re-generates deterministically from the embedded seed.
std::pair<Table, QuerySpec> materialize_inputs(const RunConfig& config, std::uint64_t seed);

AllocOptions alloc_options(const RunConfig& config, std::uint64_t seed);
SearchOptions search_options(const RunConfig& config, std::uint64_t seed);

}  // namespace proxyopt
