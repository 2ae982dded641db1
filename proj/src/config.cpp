#include "dlms/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace dlms {

using nlohmann::json;

namespace {

Eigen::MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw std::domain_error("config: matrix must be a nested array");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j.at(r).size()) != cols)
      throw std::domain_error("config: ragged matrix rows");
    for (int c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
  }
  return m;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

RuleSpec rule_from_json(const json& j) {
  RuleSpec rule;
  if (j.is_string()) {
    rule.name = j.get<std::string>();
  } else if (j.is_object() && j.contains("explicit")) {
    rule.name = "explicit";
    rule.matrix = matrix_from_json(j.at("explicit"));
  } else {
    throw std::domain_error("config: combination rule must be a name or {\"explicit\": [[...]]}");
  }
  return rule;
}

json rule_to_json(const RuleSpec& rule) {
  if (rule.name == "explicit") return json{{"explicit", matrix_to_json(rule.matrix)}};
  return json(rule.name);
}

}  // namespace

void ExperimentConfig::validate() const {
  const std::set<std::string> scenarios = {"line-1d", "poisson-2d"};
  if (!scenarios.count(scenario))
    throw std::domain_error("config: unknown scenario '" + scenario + "'");
  if (trials < 1) throw std::domain_error("config: trials must be >= 1");
  if (horizon < 1) throw std::domain_error("config: horizon must be >= 1");
  if (algorithms.empty()) throw std::domain_error("config: need at least one algorithm");
  for (const auto& a : algorithms) algorithm_from_name(a);  // throws on unknown names
  const std::set<std::string> rules = {"identity", "uniform", "metropolis", "relative-degree",
                                       "explicit"};
  for (const RuleSpec* r : {&a1, &a2, &c})
    if (!rules.count(r->name))
      throw std::domain_error("config: unknown combination rule '" + r->name + "'");
  const std::set<std::string> topologies = {"line", "complete", "grid"};
  if (!topologies.count(network.topology))
    throw std::domain_error("config: unknown topology '" + network.topology + "'");
  if (scenario == "line-1d") {
    if (network.nodes < 1) throw std::domain_error("config: need at least one node");
    if (model.functions < 1 || model.basis_count < 1)
      throw std::domain_error("config: model dimensions must be positive");
    if (model.covariance != "scaled-identity" && model.covariance != "explicit")
      throw std::domain_error("config: unknown covariance source '" + model.covariance + "'");
    if (model.truth != "random" && model.truth != "explicit" &&
        model.truth != "theta-chebyshev")
      throw std::domain_error("config: unknown truth source '" + model.truth + "'");
    if (model.truth == "theta-chebyshev" && model.functions != 3)
      throw std::domain_error("config: theta-derived truth needs exactly 3 functions");
    if (!(model.nu > 0.0))
      throw std::domain_error("config: nu must be positive");
    if (model.noise_variance_range.size() != 2 ||
        model.noise_variance_range[0] > model.noise_variance_range[1] ||
        model.noise_variance_range[0] < 0)
      throw std::domain_error("config: bad noise variance range");
    if (model.regressor_trace_range.size() != 2 ||
        model.regressor_trace_range[0] > model.regressor_trace_range[1] ||
        model.regressor_trace_range[0] <= 0)
      throw std::domain_error("config: bad regressor trace range");
  } else {
    if (poisson.interior_x < 1 || poisson.interior_y < 1)
      throw std::domain_error("config: poisson grid must have interior points");
    if (poisson.basis_count_x < 1 || poisson.basis_count_y < 1)
      throw std::domain_error("config: poisson basis counts must be positive");
    if (poisson.snr_band_db.size() != 2 || poisson.snr_band_db[0] >= poisson.snr_band_db[1])
      throw std::domain_error("config: bad SNR band");
  }
  if (step_size && !(*step_size > 0.0))
    throw std::domain_error("config: step size must be positive");
  if (!(auto_step_safety > 0.0 && auto_step_safety <= 1.0))
    throw std::domain_error("config: auto step safety must lie in (0, 1]");
  if (!(centralized_step_scale > 0.0))
    throw std::domain_error("config: centralized step scale must be positive");
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
    throw std::domain_error("config: tail fraction must lie in (0, 1]");
  if (threads < 0) throw std::domain_error("config: threads must be >= 0");
}

ExperimentConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::domain_error(std::string("config: JSON parse error: ") + e.what());
  }
  ExperimentConfig cfg;
  cfg.schema_version = j.value("schema_version", 1);
  if (cfg.schema_version != 1)
    throw std::domain_error("config: unsupported schema_version");
  cfg.name = j.value("name", std::string("custom"));
  cfg.scenario = j.value("scenario", std::string("line-1d"));
  cfg.seed = j.value("seed", std::uint64_t{1});
  cfg.trials = j.value("trials", 1);
  cfg.horizon = j.value("horizon", long{1000});
  cfg.output_dir = j.value("output_dir", std::string("out"));
  if (j.contains("algorithms"))
    cfg.algorithms = j.at("algorithms").get<std::vector<std::string>>();
  else if (j.contains("algorithm"))
    cfg.algorithms = {j.at("algorithm").get<std::string>()};

  if (j.contains("network")) {
    const json& n = j.at("network");
    cfg.network.nodes = n.value("nodes", cfg.network.nodes);
    cfg.network.topology = n.value("topology", cfg.network.topology);
    cfg.network.length = n.value("length", cfg.network.length);
  }
  if (j.contains("model")) {
    const json& m = j.at("model");
    cfg.model.functions = m.value("functions", cfg.model.functions);
    cfg.model.basis_count = m.value("basis_count", cfg.model.basis_count);
    if (m.contains("noise_variance_range"))
      cfg.model.noise_variance_range = m.at("noise_variance_range").get<std::vector<double>>();
    if (m.contains("regressor_trace_range"))
      cfg.model.regressor_trace_range = m.at("regressor_trace_range").get<std::vector<double>>();
    if (m.contains("noise_variance"))
      cfg.model.noise_variance = m.at("noise_variance").get<double>();
    if (m.contains("covariance")) {
      if (m.at("covariance").is_string()) {
        cfg.model.covariance = m.at("covariance").get<std::string>();
      } else {
        cfg.model.covariance = "explicit";
        cfg.model.covariance_matrix = matrix_from_json(m.at("covariance"));
      }
    }
    if (m.contains("truth")) {
      if (m.at("truth").is_string()) {
        cfg.model.truth = m.at("truth").get<std::string>();
      } else {
        cfg.model.truth = "explicit";
        cfg.model.truth_coefficients = matrix_from_json(m.at("truth"));
      }
    }
    cfg.model.nu = m.value("nu", cfg.model.nu);
  }
  if (j.contains("poisson")) {
    const json& p = j.at("poisson");
    cfg.poisson.interior_x = p.value("interior_x", cfg.poisson.interior_x);
    cfg.poisson.interior_y = p.value("interior_y", cfg.poisson.interior_y);
    cfg.poisson.length = p.value("length", cfg.poisson.length);
    cfg.poisson.basis_count_x = p.value("basis_count_x", cfg.poisson.basis_count_x);
    cfg.poisson.basis_count_y = p.value("basis_count_y", cfg.poisson.basis_count_y);
    if (p.contains("kappa")) cfg.poisson.kappa = p.at("kappa").get<double>();
    if (p.contains("snr_band_db"))
      cfg.poisson.snr_band_db = p.at("snr_band_db").get<std::vector<double>>();
    cfg.poisson.snr_margin_db = p.value("snr_margin_db", cfg.poisson.snr_margin_db);
    cfg.poisson.relaxation = p.value("relaxation", cfg.poisson.relaxation);
    cfg.poisson.solver_tolerance = p.value("solver_tolerance", cfg.poisson.solver_tolerance);
    cfg.poisson.solver_max_iterations =
        p.value("solver_max_iterations", cfg.poisson.solver_max_iterations);
    cfg.poisson.zero_noise = p.value("zero_noise", cfg.poisson.zero_noise);
  }
  if (j.contains("combination")) {
    const json& c = j.at("combination");
    if (c.contains("a1")) cfg.a1 = rule_from_json(c.at("a1"));
    if (c.contains("a2")) cfg.a2 = rule_from_json(c.at("a2"));
    if (c.contains("c")) cfg.c = rule_from_json(c.at("c"));
  }
  if (j.contains("step_size")) {
    if (j.at("step_size").is_number())
      cfg.step_size = j.at("step_size").get<double>();
    else if (j.at("step_size") != json("auto"))
      throw std::domain_error("config: step_size must be a number or \"auto\"");
  }
  cfg.auto_step_safety = j.value("auto_step_safety", cfg.auto_step_safety);
  cfg.centralized_step_scale = j.value("centralized_step_scale", cfg.centralized_step_scale);
  if (j.contains("theory_overlay")) cfg.theory_overlay = j.at("theory_overlay").get<bool>();
  cfg.unit_tolerance = j.value("unit_tolerance", cfg.unit_tolerance);
  cfg.tail_fraction = j.value("tail_fraction", cfg.tail_fraction);
  cfg.threads = j.value("threads", cfg.threads);
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return config_from_json_text(buffer.str());
}

std::string config_to_json_text(const ExperimentConfig& cfg) {
  json j;
  j["schema_version"] = cfg.schema_version;
  j["name"] = cfg.name;
  j["scenario"] = cfg.scenario;
  j["seed"] = cfg.seed;
  j["trials"] = cfg.trials;
  j["horizon"] = cfg.horizon;
  j["output_dir"] = cfg.output_dir;
  j["algorithms"] = cfg.algorithms;
  j["network"] = {{"nodes", cfg.network.nodes},
                  {"topology", cfg.network.topology},
                  {"length", cfg.network.length}};
  json m;
  m["functions"] = cfg.model.functions;
  m["basis_count"] = cfg.model.basis_count;
  m["noise_variance_range"] = cfg.model.noise_variance_range;
  m["regressor_trace_range"] = cfg.model.regressor_trace_range;
  if (cfg.model.noise_variance) m["noise_variance"] = *cfg.model.noise_variance;
  if (cfg.model.covariance == "explicit")
    m["covariance"] = matrix_to_json(cfg.model.covariance_matrix);
  else
    m["covariance"] = cfg.model.covariance;
  if (cfg.model.truth == "explicit")
    m["truth"] = matrix_to_json(cfg.model.truth_coefficients);
  else
    m["truth"] = cfg.model.truth;
  m["nu"] = cfg.model.nu;
  j["model"] = m;
  if (cfg.scenario == "poisson-2d") {
    json p;
    p["interior_x"] = cfg.poisson.interior_x;
    p["interior_y"] = cfg.poisson.interior_y;
    p["length"] = cfg.poisson.length;
    p["basis_count_x"] = cfg.poisson.basis_count_x;
    p["basis_count_y"] = cfg.poisson.basis_count_y;
    if (cfg.poisson.kappa) p["kappa"] = *cfg.poisson.kappa;
    p["snr_band_db"] = cfg.poisson.snr_band_db;
    p["snr_margin_db"] = cfg.poisson.snr_margin_db;
    p["relaxation"] = cfg.poisson.relaxation;
    p["solver_tolerance"] = cfg.poisson.solver_tolerance;
    p["solver_max_iterations"] = cfg.poisson.solver_max_iterations;
    p["zero_noise"] = cfg.poisson.zero_noise;
    j["poisson"] = p;
  }
  j["combination"] = {{"a1", rule_to_json(cfg.a1)},
                      {"a2", rule_to_json(cfg.a2)},
                      {"c", rule_to_json(cfg.c)}};
  if (cfg.step_size)
    j["step_size"] = *cfg.step_size;
  else
    j["step_size"] = "auto";
  j["auto_step_safety"] = cfg.auto_step_safety;
  j["centralized_step_scale"] = cfg.centralized_step_scale;
  if (cfg.theory_overlay) j["theory_overlay"] = *cfg.theory_overlay;
  j["unit_tolerance"] = cfg.unit_tolerance;
  j["tail_fraction"] = cfg.tail_fraction;
  j["threads"] = cfg.threads;
  return j.dump(2);
}

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "diffusion") return Algorithm::Diffusion;
  if (name == "atc") return Algorithm::Atc;
  if (name == "centralized") return Algorithm::Centralized;
  if (name == "non-cooperative") return Algorithm::NonCooperative;
  throw std::domain_error("config: unknown algorithm '" + name + "'");
}

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::Diffusion: return "diffusion";
    case Algorithm::Atc: return "atc";
    case Algorithm::Centralized: return "centralized";
    case Algorithm::NonCooperative: return "non-cooperative";
  }
  return "unknown";
}

Eigen::MatrixXd build_rule(const RuleSpec& rule, const NetworkGraph& graph) {
  if (rule.name == "identity")
    return Eigen::MatrixXd::Identity(graph.nodes(), graph.nodes());
  if (rule.name == "uniform") return uniform_weights(graph);
  if (rule.name == "metropolis") return metropolis_weights(graph);
  if (rule.name == "relative-degree") return relative_degree_weights(graph);
  if (rule.name == "explicit") {
    if (rule.matrix.rows() != graph.nodes() || rule.matrix.cols() != graph.nodes())
      throw std::domain_error("config: explicit combination matrix has wrong shape");
    return rule.matrix;
  }
  throw std::domain_error("config: unknown combination rule '" + rule.name + "'");
}

}  // namespace dlms
