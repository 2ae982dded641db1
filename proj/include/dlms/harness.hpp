#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "dlms/config.hpp"
#include "dlms/pde_model.hpp"
#include "dlms/report.hpp"
#include "dlms/theory.hpp"

namespace dlms {

// Everything materialized from a configuration: geometry, basis, graph,
// policy, second-order model, ground truth, step sizes. The model draw uses
// seed stream 0; Monte-Carlo trial t uses stream t + 1.
struct Experiment {
  ExperimentConfig config;
  std::unique_ptr<BasisSet> basis;
  std::unique_ptr<NetworkGraph> graph;
  CombinationPolicy policy;
  std::vector<Eigen::MatrixXd> covariances;
  std::vector<double> noise_variances;
  Eigen::VectorXd step_sizes;
  Eigen::VectorXd truth_coeffs;
  std::vector<Eigen::VectorXd> truth_params;
  std::optional<RegressorSpec> spec;  // absent when a covariance is singular

  // 2D scenario extras.
  std::optional<GridDomain2D> grid;
  std::unique_ptr<BasisSet2D> basis2d;
  Eigen::MatrixXd field;          // solved Poisson field (full grid)
  Eigen::MatrixXd input;          // discrete input h° (full grid)
  Eigen::MatrixXd noise_grid;     // per-point measurement variances
  Eigen::MatrixXd snr_grid_db;    // implied per-node stream SNR
  double solver_residual = 0.0;
  long solver_iterations = 0;
};

Experiment build_experiment(const ExperimentConfig& config);

// Per-node stability bounds 2 / lambda_max(R_k) computed from the policy and
// covariances without assembling the full network operators.
Eigen::VectorXd stability_bounds(const BasisSet& basis, const CombinationPolicy& policy,
                                 const std::vector<Eigen::MatrixXd>& covariances);

struct SteadyStateDb {
  double msd_w_db = 0.0;
  double msd_h_db = 0.0;
  double emse_db = 0.0;
};

struct RunResult {
  std::map<std::string, MetricsSeries> series;        // per algorithm
  std::map<std::string, SteadyStateDb> sim_steady;    // network level
  std::map<std::string, SteadyStateDb> theory_steady; // algorithms with overlays
  std::string verdict;  // classification of the configured diffusion policy
  double spectral_radius = 0.0;
  std::string summary_path;
  double runtime_seconds = 0.0;
};

// Monte-Carlo execution: writes sim_<algorithm>.csv, learning-curve SVGs,
// theory.json (when an overlay is computed) and summary.json under the
// configured output directory.
RunResult run(const ExperimentConfig& config);

struct PredictResult {
  std::string verdict;
  double spectral_radius = 0.0;
  std::optional<SteadyStateDb> steady;  // absent when not power convergent
  std::string theory_path;
};

// Theory-only report; no simulation. Non-convergent configurations are
// reported, not thrown.
PredictResult predict(const ExperimentConfig& config);

struct CompareOptions {
  double steady_tolerance_db = 1.0;
  double transient_tolerance_db = 2.0;
  long skip_iterations = 50;
  double tail_fraction = 0.1;
};

struct CompareResult {
  double steady_gap_w_db = 0.0;
  double steady_gap_h_db = 0.0;
  double transient_gap_w_db = 0.0;
  double transient_gap_h_db = 0.0;
  long compared_iterations = 0;
  bool within_tolerance = false;
};

// Gap report between a simulation trajectory CSV and a theory report.
// Throws std::runtime_error on schema mismatches.
CompareResult compare(const std::string& sim_csv_path, const std::string& theory_json_path,
                      const CompareOptions& options = {});

struct PoissonDemoResult {
  double solver_residual = 0.0;
  long solver_iterations = 0;
  Eigen::MatrixXd truth_surface;      // interior values
  Eigen::MatrixXd estimated_surface;  // interior values, first trial after the horizon
  Eigen::MatrixXd msd_map_db;         // per-node steady-state MSD
  Eigen::MatrixXd snr_map_db;
  double network_steady_msd_db = 0.0;
  double surface_max_error = 0.0;  // max |estimated - truth| over nodes
  std::string summary_path;
};

// The 2D input-estimation demo: solves the field, runs diffusion on the
// noisy reference stream, and writes surface/MSD/SNR artifacts.
PoissonDemoResult poisson_demo(const ExperimentConfig& config);

}  // namespace dlms
