#include "proxyopt/config.hpp"

#include <fstream>

namespace proxyopt {

void RunConfig::validate() const {
  if (!(target_accuracy > 0.0 && target_accuracy <= 1.0)) {
    throw ConfigError("target_accuracy must be in (0,1]");
  }
  if (alpha_step <= 0.0 || alpha_step > 1.0) throw ConfigError("alpha_step must be in (0,1]");
  if (eps < 0.0 || eps >= 1.0) throw ConfigError("eps must be in [0,1)");
  if (head_fraction <= 0.0 || head_fraction >= 1.0) {
    throw ConfigError("head_fraction must be in (0,1)");
  }
  if (tree != "coarse" && tree != "fine") throw ConfigError("tree must be coarse|fine");
  if (alloc_mode != "exhaustive" && alloc_mode != "hill") {
    throw ConfigError("alloc_mode must be exhaustive|hill");
  }
  if (!csv_path && !synthetic) throw ConfigError("config needs a csv or synthetic dataset");
  if (stages.empty()) throw ConfigError("config needs at least one query stage");
  for (const auto& m : methods) {
    if (m != "orig" && m != "ns" && m != "pp" && m != "core") {
      throw ConfigError("unknown method: " + m);
    }
  }
}

RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("target_accuracy")) c.target_accuracy = j.at("target_accuracy").get<double>();
  if (j.contains("alpha_step")) c.alpha_step = j.at("alpha_step").get<double>();
  if (j.contains("eps")) c.eps = j.at("eps").get<double>();
  if (j.contains("reuse")) c.reuse = j.at("reuse").get<bool>();
  if (j.contains("head_fraction")) c.head_fraction = j.at("head_fraction").get<double>();
  if (j.contains("sample_cap")) c.sample_cap = j.at("sample_cap").get<std::size_t>();
  if (j.contains("tree")) c.tree = j.at("tree").get<std::string>();
  if (j.contains("alloc_mode")) c.alloc_mode = j.at("alloc_mode").get<std::string>();
  if (j.contains("methods")) c.methods = j.at("methods").get<std::vector<std::string>>();

  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    if (d.contains("csv")) {
      c.csv_path = d.at("csv").get<std::string>();
      c.csv_dim = d.at("dim").get<int>();
    }
    if (d.contains("synthetic")) {
      const auto& s = d.at("synthetic");
      SyntheticConfig sc;
      sc.n_rows = s.at("rows").get<std::size_t>();
      sc.dim = s.at("dim").get<int>();
      sc.n_predicates = s.at("predicates").get<int>();
      sc.correlation = s.at("rho").get<double>();
      sc.selectivities = s.at("selectivities").get<std::vector<double>>();
      if (s.contains("noise_sigma")) sc.noise_sigma = s.at("noise_sigma").get<double>();
      sc.seed = c.seed;
      c.synthetic = sc;
    }
  }
  if (j.contains("query")) {
    for (const auto& st : j.at("query").at("stages")) {
      StageConfig sc;
      sc.column = st.at("column").get<std::string>();
      if (st.contains("value")) sc.value = st.at("value").get<std::string>();
      if (st.contains("udf_cost_ms")) sc.udf_cost_ms = st.at("udf_cost_ms").get<double>();
      if (st.contains("proxy_cost_ms")) sc.proxy_cost_ms = st.at("proxy_cost_ms").get<double>();
      c.stages.push_back(sc);
    }
  }
  return c;
}

nlohmann::ordered_json config_to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  if (!c.seeds.empty()) j["seeds"] = c.seeds;
  j["target_accuracy"] = c.target_accuracy;
  j["alpha_step"] = c.alpha_step;
  j["eps"] = c.eps;
  j["reuse"] = c.reuse;
  j["head_fraction"] = c.head_fraction;
  j["sample_cap"] = c.sample_cap;
  j["tree"] = c.tree;
  j["alloc_mode"] = c.alloc_mode;
  j["methods"] = c.methods;
  nlohmann::ordered_json d;
  if (c.csv_path) {
    d["csv"] = *c.csv_path;
    d["dim"] = c.csv_dim;
  }
  if (c.synthetic) {
    d["synthetic"] = {{"rows", c.synthetic->n_rows},
                      {"dim", c.synthetic->dim},
                      {"predicates", c.synthetic->n_predicates},
                      {"rho", c.synthetic->correlation},
                      {"selectivities", c.synthetic->selectivities},
                      {"noise_sigma", c.synthetic->noise_sigma}};
  }
  j["dataset"] = std::move(d);
  nlohmann::ordered_json stages = nlohmann::ordered_json::array();
  for (const auto& st : c.stages) {
    stages.push_back({{"column", st.column},
                      {"value", st.value},
                      {"udf_cost_ms", st.udf_cost_ms},
                      {"proxy_cost_ms", st.proxy_cost_ms}});
  }
  j["query"] = {{"stages", std::move(stages)}};
  return j;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  nlohmann::json j;
  in >> j;
  return config_from_json(j);
}

std::pair<Table, QuerySpec> materialize_inputs(const RunConfig& config, std::uint64_t seed) {
  Table table;
  if (config.synthetic) {
    SyntheticConfig sc = *config.synthetic;
    sc.seed = seed;
    table = generate_dataset(sc).first;
  } else {
    table = load_csv(*config.csv_path, config.csv_dim);
  }

  QuerySpec query;
  query.target_accuracy = config.target_accuracy;
  for (std::size_t i = 0; i < config.stages.size(); ++i) {
    const auto& sc = config.stages[i];
    bool known = std::find(table.schema.begin(), table.schema.end(), sc.column) !=
                 table.schema.end();
    if (!known) throw ConfigError("query column not in dataset schema: " + sc.column);
    QueryStage stage;
    stage.udf.id = static_cast<int>(i);
    stage.udf.cost_ms = sc.udf_cost_ms;
    stage.udf.output_column = sc.column;
    std::string col = sc.column;
    stage.udf.labeler = [col](const Record& r) { return r.labels.at(col); };
    stage.pred.id = static_cast<int>(i);
    stage.pred.column = sc.column;
    stage.pred.value = sc.value;
    stage.proxy_cost_ms = sc.proxy_cost_ms;
    query.stages.push_back(std::move(stage));
  }
  query.validate();
  return {std::move(table), std::move(query)};
}

AllocOptions alloc_options(const RunConfig& config, std::uint64_t seed) {
  AllocOptions opts;
  opts.alpha_step = config.alpha_step;
  opts.eps = config.eps;
  opts.reuse = config.reuse;
  opts.mode = config.alloc_mode == "hill" ? AllocOptions::Mode::HillClimb
                                          : AllocOptions::Mode::Exhaustive;
  opts.sample_cap = config.sample_cap;
  opts.seed = seed;
  return opts;
}

SearchOptions search_options(const RunConfig& config, std::uint64_t seed) {
  SearchOptions opts;
  opts.tree = config.tree == "fine" ? TreeKind::FineGrained : TreeKind::Coarse;
  opts.alloc = alloc_options(config, seed);
  return opts;
}

}  // namespace proxyopt
