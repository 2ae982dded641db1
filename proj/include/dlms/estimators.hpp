#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "dlms/basis.hpp"
#include "dlms/network.hpp"
#include "dlms/pde_model.hpp"

namespace dlms {

// Centralized stochastic-gradient estimator of the global coefficient vector;
// every iteration consumes the data of all nodes.
class CentralizedLms {
 public:
  CentralizedLms(const BasisSet& basis, double step_size);

  void step(const SampleBatch& batch);
  void set_coeffs(const Eigen::VectorXd& w);

  const Eigen::VectorXd& coeffs() const { return coeffs_; }
  Eigen::VectorXd local_params(int k) const { return basis_->apply_block(k, coeffs_); }
  long iteration() const { return iteration_; }

 private:
  const BasisSet* basis_;
  double step_size_;
  Eigen::VectorXd coeffs_;
  Eigen::VectorXd grad_;
  Eigen::VectorXd scratch_;
  long iteration_ = -1;
};

// General diffusion estimator: combine over A1, adapt with neighborhood data
// weighted by C, combine over A2. The update is synchronous: all first-stage
// combinations read the previous iteration's state before any adaptation
// writes.
class DiffusionLms {
 public:
  DiffusionLms(const BasisSet& basis, const NetworkGraph& graph, CombinationPolicy policy,
               Eigen::VectorXd step_sizes);

  void step(const SampleBatch& batch);
  void set_coeffs(const Eigen::MatrixXd& w);

  // Column k holds node k's coefficient estimate.
  const Eigen::MatrixXd& coeffs() const { return coeffs_; }
  // Column k holds node k's local parameter estimate B_k w_k.
  const Eigen::MatrixXd& local_params() const { return local_; }
  long iteration() const { return iteration_; }

 private:
  const BasisSet* basis_;
  const NetworkGraph* graph_;
  CombinationPolicy policy_;
  Eigen::VectorXd step_sizes_;
  Eigen::MatrixXd coeffs_;
  Eigen::MatrixXd mixed_;
  Eigen::MatrixXd adapted_;
  Eigen::MatrixXd local_;
  Eigen::VectorXd grad_;
  Eigen::VectorXd scratch_;
  long iteration_ = -1;
};

// Adapt-then-combine specialization: per-node adaptation on own data followed
// by one combination over a left-stochastic matrix. Kept as a separate fast
// path; its trajectory coincides with DiffusionLms under (I, A, I).
class AtcLms {
 public:
  AtcLms(const BasisSet& basis, const NetworkGraph& graph, Eigen::MatrixXd combiner,
         Eigen::VectorXd step_sizes);

  void step(const SampleBatch& batch);
  void set_coeffs(const Eigen::MatrixXd& w);

  const Eigen::MatrixXd& coeffs() const { return coeffs_; }
  const Eigen::MatrixXd& local_params() const { return local_; }
  long iteration() const { return iteration_; }

 private:
  const BasisSet* basis_;
  const NetworkGraph* graph_;
  Eigen::MatrixXd combiner_;
  Eigen::VectorXd step_sizes_;
  Eigen::MatrixXd coeffs_;
  Eigen::MatrixXd adapted_;
  Eigen::MatrixXd local_;
  Eigen::VectorXd grad_;
  Eigen::VectorXd scratch_;
  long iteration_ = -1;
};

CombinationPolicy identity_policy(int nodes);

enum class Algorithm { Diffusion, Atc, Centralized, NonCooperative };

// Per-iteration squared-error records of one run. Columns are nodes.
struct TrialRecord {
  Eigen::MatrixXd w_err2;     // |w° - w_k,i|^2
  Eigen::MatrixXd h_err2;     // |h°_k - h_k,i|^2
  Eigen::MatrixXd apriori2;   // |u_k,i (h°_k - h_k,i-1)|^2
  // Ensemble snapshots of the coefficient matrix at requested iterations,
  // in request order, plus the final state.
  std::vector<Eigen::MatrixXd> snapshots;
  Eigen::MatrixXd final_coeffs;
  Eigen::MatrixXd final_local;
};

struct TrialSetup {
  const BasisSet* basis = nullptr;
  const NetworkGraph* graph = nullptr;
  const CombinationPolicy* policy = nullptr;  // Atc uses policy->a2
  Algorithm algorithm = Algorithm::Diffusion;
  Eigen::VectorXd step_sizes;                 // length N (Centralized uses entry 0)
  Eigen::VectorXd truth_coeffs;               // w° (or its best basis representation)
  std::vector<Eigen::VectorXd> truth_params;  // h°_k
  long horizon = 0;
  std::vector<long> snapshot_iterations;      // ascending
};

using BatchSource = std::function<SampleBatch(long iteration)>;

// Runs one trial from the all-zero initial state; deterministic given the
// batch source.
TrialRecord run_trial(const TrialSetup& setup, const BatchSource& source);

// Batch source backed by synthesize_batch for a fixed trial seed.
BatchSource gaussian_batch_source(const RegressorSpec& spec, const GroundTruthModel& truth,
                                  const BasisSet& basis, std::uint64_t trial_seed);

}  // namespace dlms
