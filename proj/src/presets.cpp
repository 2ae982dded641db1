#include "dlms/presets.hpp"

#include <map>
#include <stdexcept>

namespace dlms {

namespace {

// One-command reproduction of the reference experiments. Horizons are chosen
// so the tail window sits past the slowest predicted mode at the preset step
// size.
const std::map<std::string, std::string>& preset_map() {
  static const std::map<std::string, std::string> presets = {
      {"s5a", R"JSON({
  "name": "s5a",
  "scenario": "line-1d",
  "seed": 20240807,
  "trials": 300,
  "horizon": 50000,
  "output_dir": "out/s5a",
  "algorithms": ["diffusion"],
  "network": {"nodes": 4, "topology": "line", "length": 1.0},
  "model": {
    "functions": 2,
    "basis_count": 5,
    "noise_variance_range": [0.05, 0.1],
    "regressor_trace_range": [1.0, 5.0],
    "covariance": "scaled-identity",
    "truth": "random"
  },
  "combination": {"a1": "identity", "a2": "uniform", "c": "metropolis"},
  "step_size": 0.01,
  "theory_overlay": true,
  "tail_fraction": 0.1
})JSON"},
      {"s5b-nb5", R"JSON({
  "name": "s5b-nb5",
  "scenario": "line-1d",
  "seed": 20240810,
  "trials": 300,
  "horizon": 30000,
  "output_dir": "out/s5b-nb5",
  "algorithms": ["diffusion", "centralized"],
  "network": {"nodes": 10, "topology": "line", "length": 1.0},
  "model": {
    "functions": 2,
    "basis_count": 5,
    "noise_variance_range": [0.05, 0.1],
    "regressor_trace_range": [1.0, 5.0],
    "covariance": "scaled-identity",
    "truth": "random"
  },
  "combination": {"a1": "identity", "a2": "uniform", "c": "metropolis"},
  "step_size": 0.02,
  "centralized_step_scale": 0.1,
  "theory_overlay": false,
  "tail_fraction": 0.1
})JSON"},
      {"s5b-nb10", R"JSON({
  "name": "s5b-nb10",
  "scenario": "line-1d",
  "seed": 20240811,
  "trials": 300,
  "horizon": 30000,
  "output_dir": "out/s5b-nb10",
  "algorithms": ["diffusion", "centralized"],
  "network": {"nodes": 10, "topology": "line", "length": 1.0},
  "model": {
    "functions": 2,
    "basis_count": 10,
    "noise_variance_range": [0.05, 0.1],
    "regressor_trace_range": [1.0, 5.0],
    "covariance": "scaled-identity",
    "truth": "random"
  },
  "combination": {"a1": "identity", "a2": "uniform", "c": "metropolis"},
  "step_size": 0.02,
  "centralized_step_scale": 0.1,
  "theory_overlay": false,
  "tail_fraction": 0.1
})JSON"},
      {"poisson2d", R"JSON({
  "name": "poisson2d",
  "scenario": "poisson-2d",
  "seed": 20240812,
  "trials": 10,
  "horizon": 3000,
  "output_dir": "out/poisson2d",
  "algorithms": ["diffusion"],
  "poisson": {
    "interior_x": 11,
    "interior_y": 11,
    "length": 1.0,
    "basis_count_x": 4,
    "basis_count_y": 4,
    "snr_band_db": [20.0, 30.0],
    "snr_margin_db": 1.5,
    "relaxation": 0.9,
    "solver_tolerance": 1e-8,
    "solver_max_iterations": 200000
  },
  "combination": {"a1": "identity", "a2": "relative-degree", "c": "metropolis"},
  "step_size": 0.01,
  "tail_fraction": 0.1
})JSON"},
      {"example1", R"JSON({
  "name": "example1",
  "scenario": "line-1d",
  "seed": 20240813,
  "trials": 1,
  "horizon": 100,
  "output_dir": "out/example1",
  "algorithms": ["diffusion"],
  "network": {"nodes": 3, "topology": "line", "length": 1.0},
  "model": {
    "functions": 2,
    "basis_count": 1,
    "covariance": [[1.0, 0.0], [0.0, 0.0]],
    "noise_variance": 0.05,
    "truth": [[0.7], [-0.3]]
  },
  "combination": {"a1": "metropolis", "a2": "metropolis", "c": "metropolis"},
  "step_size": 0.1,
  "theory_overlay": true
})JSON"},
      {"example2", R"JSON({
  "name": "example2",
  "scenario": "line-1d",
  "seed": 20240814,
  "trials": 1,
  "horizon": 100,
  "output_dir": "out/example2",
  "algorithms": ["diffusion"],
  "network": {"nodes": 3, "topology": "line", "length": 1.0},
  "model": {
    "functions": 2,
    "basis_count": 1,
    "covariance": [[1.0, 0.0], [0.0, 0.0]],
    "noise_variance": 0.05,
    "truth": [[1.0], [1.0]]
  },
  "combination": {
    "a1": {"explicit": [[0.5, 0.0, 0.0], [0.5, 0.0, 1.0], [0.0, 1.0, 0.0]]},
    "a2": "identity",
    "c": "identity"
  },
  "step_size": 0.1,
  "theory_overlay": true
})JSON"},
      {"fullrank", R"JSON({
  "name": "fullrank",
  "scenario": "line-1d",
  "seed": 20240815,
  "trials": 2000,
  "horizon": 600,
  "output_dir": "out/fullrank",
  "algorithms": ["diffusion"],
  "network": {"nodes": 4, "topology": "line", "length": 1.0},
  "model": {
    "functions": 2,
    "basis_count": 2,
    "noise_variance_range": [0.05, 0.1],
    "regressor_trace_range": [1.0, 5.0],
    "covariance": "scaled-identity",
    "truth": "random"
  },
  "combination": {"a1": "identity", "a2": "uniform", "c": "metropolis"},
  "step_size": 0.05,
  "theory_overlay": true,
  "tail_fraction": 0.2
})JSON"},
      {"rankdef-noncoop", R"JSON({
  "name": "rankdef-noncoop",
  "scenario": "line-1d",
  "seed": 20240816,
  "trials": 2000,
  "horizon": 5000,
  "output_dir": "out/rankdef-noncoop",
  "algorithms": ["non-cooperative"],
  "network": {"nodes": 4, "topology": "line", "length": 1.0},
  "model": {
    "functions": 2,
    "basis_count": 5,
    "noise_variance_range": [0.05, 0.1],
    "regressor_trace_range": [1.0, 5.0],
    "covariance": "scaled-identity",
    "truth": "random"
  },
  "combination": {"a1": "identity", "a2": "identity", "c": "identity"},
  "step_size": 0.01,
  "theory_overlay": true,
  "tail_fraction": 0.1
})JSON"},
  };
  return presets;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, text] : preset_map()) names.push_back(name);
  return names;
}

bool has_preset(const std::string& name) { return preset_map().count(name) > 0; }

std::string preset_json(const std::string& name) {
  auto it = preset_map().find(name);
  if (it == preset_map().end()) throw std::domain_error("unknown preset '" + name + "'");
  return it->second;
}

ExperimentConfig load_preset(const std::string& name) {
  return config_from_json_text(preset_json(name));
}

}  // namespace dlms
