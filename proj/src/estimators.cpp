#include "dlms/estimators.hpp"

#include <optional>
#include <stdexcept>

namespace dlms {

namespace {

void check_batch(const SampleBatch& batch, int nodes, int functions) {
  if (static_cast<int>(batch.regressors.size()) != nodes ||
      static_cast<int>(batch.observations.size()) != nodes)
    throw std::domain_error("estimator step: batch does not cover all nodes");
  for (const auto& u : batch.regressors)
    if (u.size() != functions)
      throw std::domain_error("estimator step: regressor length mismatch");
}

// d - u * (B_k w), evaluated through the shared basis helpers so that every
// algorithm produces identical floating-point sequences on identical inputs.
double residual(const BasisSet& basis, int k, const Eigen::RowVectorXd& u, double d,
                const Eigen::Ref<const Eigen::VectorXd>& w, Eigen::VectorXd& scratch) {
  basis.apply_block_into(k, w, scratch);
  return d - u.dot(scratch);
}

// dest = sum over the neighborhood of weights(l, k) * states.col(l), skipping
// exact zeros, ascending l.
void combine_into(const Eigen::MatrixXd& states, const Eigen::MatrixXd& weights,
                  const std::vector<int>& neighborhood, int k, Eigen::Ref<Eigen::VectorXd> dest) {
  dest.setZero();
  for (int l : neighborhood) {
    const double a = weights(l, k);
    if (a == 0.0) continue;
    dest += a * states.col(l);
  }
}

}  // namespace

CentralizedLms::CentralizedLms(const BasisSet& basis, double step_size)
    : basis_(&basis), step_size_(step_size) {
  if (!(step_size >= 0.0)) throw std::domain_error("CentralizedLms: step size must be >= 0");
  coeffs_ = Eigen::VectorXd::Zero(basis.coeff_size());
  grad_.resize(basis.coeff_size());
  scratch_.resize(basis.functions());
}

void CentralizedLms::set_coeffs(const Eigen::VectorXd& w) {
  if (w.size() != coeffs_.size())
    throw std::domain_error("CentralizedLms::set_coeffs: length mismatch");
  coeffs_ = w;
}

void CentralizedLms::step(const SampleBatch& batch) {
  check_batch(batch, basis_->nodes(), basis_->functions());
  grad_.setZero();
  for (int k = 0; k < basis_->nodes(); ++k) {
    const double e = residual(*basis_, k, batch.regressors[k], batch.observations[k], coeffs_,
                              scratch_);
    basis_->accumulate_gradient(k, batch.regressors[k], e, 1.0, grad_);
  }
  coeffs_ += step_size_ * grad_;
  iteration_ = batch.iteration;
}

DiffusionLms::DiffusionLms(const BasisSet& basis, const NetworkGraph& graph,
                           CombinationPolicy policy, Eigen::VectorXd step_sizes)
    : basis_(&basis), graph_(&graph), policy_(std::move(policy)),
      step_sizes_(std::move(step_sizes)) {
  policy_.validate(graph);
  if (graph.nodes() != basis.nodes())
    throw std::domain_error("DiffusionLms: graph and basis node counts disagree");
  if (step_sizes_.size() != graph.nodes())
    throw std::domain_error("DiffusionLms: need one step size per node");
  if (step_sizes_.minCoeff() < 0.0)
    throw std::domain_error("DiffusionLms: negative step size");
  const int n = graph.nodes();
  coeffs_ = Eigen::MatrixXd::Zero(basis.coeff_size(), n);
  mixed_.resizeLike(coeffs_);
  adapted_.resizeLike(coeffs_);
  local_ = Eigen::MatrixXd::Zero(basis.functions(), n);
  grad_.resize(basis.coeff_size());
  scratch_.resize(basis.functions());
  Eigen::VectorXd h(basis.functions());
  for (int k = 0; k < n; ++k) {
    basis.apply_block_into(k, coeffs_.col(k), h);
    local_.col(k) = h;
  }
}

void DiffusionLms::set_coeffs(const Eigen::MatrixXd& w) {
  if (w.rows() != coeffs_.rows() || w.cols() != coeffs_.cols())
    throw std::domain_error("DiffusionLms::set_coeffs: shape mismatch");
  coeffs_ = w;
  Eigen::VectorXd h(basis_->functions());
  for (int k = 0; k < graph_->nodes(); ++k) {
    basis_->apply_block_into(k, coeffs_.col(k), h);
    local_.col(k) = h;
  }
}

void DiffusionLms::step(const SampleBatch& batch) {
  const int n = graph_->nodes();
  check_batch(batch, n, basis_->functions());

  // First combination: reads only the previous iteration's coefficients.
  for (int k = 0; k < n; ++k)
    combine_into(coeffs_, policy_.a1, graph_->neighbors(k), k, mixed_.col(k));

  // Adaptation on the neighborhood data.
  for (int k = 0; k < n; ++k) {
    grad_.setZero();
    for (int l : graph_->neighbors(k)) {
      const double c = policy_.c(l, k);
      if (c == 0.0) continue;
      const double e = residual(*basis_, l, batch.regressors[l], batch.observations[l],
                                mixed_.col(k), scratch_);
      basis_->accumulate_gradient(l, batch.regressors[l], e, c, grad_);
    }
    adapted_.col(k) = mixed_.col(k) + step_sizes_[k] * grad_;
  }

  // Second combination.
  for (int k = 0; k < n; ++k)
    combine_into(adapted_, policy_.a2, graph_->neighbors(k), k, coeffs_.col(k));

  Eigen::VectorXd h(basis_->functions());
  for (int k = 0; k < n; ++k) {
    basis_->apply_block_into(k, coeffs_.col(k), h);
    local_.col(k) = h;
  }
  iteration_ = batch.iteration;
}

AtcLms::AtcLms(const BasisSet& basis, const NetworkGraph& graph, Eigen::MatrixXd combiner,
               Eigen::VectorXd step_sizes)
    : basis_(&basis), graph_(&graph), combiner_(std::move(combiner)),
      step_sizes_(std::move(step_sizes)) {
  if (graph.nodes() != basis.nodes())
    throw std::domain_error("AtcLms: graph and basis node counts disagree");
  if (!validate_stochastic(combiner_, Stochasticity::Left, 1e-12, &graph).pass)
    throw std::domain_error("AtcLms: combiner is not left-stochastic on the graph support");
  if (step_sizes_.size() != graph.nodes())
    throw std::domain_error("AtcLms: need one step size per node");
  const int n = graph.nodes();
  coeffs_ = Eigen::MatrixXd::Zero(basis.coeff_size(), n);
  adapted_.resizeLike(coeffs_);
  local_ = Eigen::MatrixXd::Zero(basis.functions(), n);
  grad_.resize(basis.coeff_size());
  scratch_.resize(basis.functions());
}

void AtcLms::set_coeffs(const Eigen::MatrixXd& w) {
  if (w.rows() != coeffs_.rows() || w.cols() != coeffs_.cols())
    throw std::domain_error("AtcLms::set_coeffs: shape mismatch");
  coeffs_ = w;
  Eigen::VectorXd h(basis_->functions());
  for (int k = 0; k < graph_->nodes(); ++k) {
    basis_->apply_block_into(k, coeffs_.col(k), h);
    local_.col(k) = h;
  }
}

void AtcLms::step(const SampleBatch& batch) {
  const int n = graph_->nodes();
  check_batch(batch, n, basis_->functions());
  for (int k = 0; k < n; ++k) {
    grad_.setZero();
    const double e = residual(*basis_, k, batch.regressors[k], batch.observations[k],
                              coeffs_.col(k), scratch_);
    basis_->accumulate_gradient(k, batch.regressors[k], e, 1.0, grad_);
    adapted_.col(k) = coeffs_.col(k) + step_sizes_[k] * grad_;
  }
  for (int k = 0; k < n; ++k)
    combine_into(adapted_, combiner_, graph_->neighbors(k), k, coeffs_.col(k));
  Eigen::VectorXd h(basis_->functions());
  for (int k = 0; k < n; ++k) {
    basis_->apply_block_into(k, coeffs_.col(k), h);
    local_.col(k) = h;
  }
  iteration_ = batch.iteration;
}

CombinationPolicy identity_policy(int nodes) {
  CombinationPolicy p;
  p.a1 = Eigen::MatrixXd::Identity(nodes, nodes);
  p.a2 = p.a1;
  p.c = p.a1;
  return p;
}

BatchSource gaussian_batch_source(const RegressorSpec& spec, const GroundTruthModel& truth,
                                  const BasisSet& basis, std::uint64_t trial_seed) {
  return [&spec, &truth, &basis, trial_seed](long iteration) {
    return synthesize_batch(spec, truth, basis, trial_seed, iteration);
  };
}

TrialRecord run_trial(const TrialSetup& setup, const BatchSource& source) {
  if (!setup.basis || !setup.graph || !setup.policy)
    throw std::domain_error("run_trial: incomplete setup");
  if (setup.horizon < 1) throw std::domain_error("run_trial: horizon must be >= 1");
  const BasisSet& basis = *setup.basis;
  const int n = setup.graph->nodes();
  if (static_cast<int>(setup.truth_params.size()) != n)
    throw std::domain_error("run_trial: truth parameter count mismatch");
  if (setup.step_sizes.size() != n)
    throw std::domain_error("run_trial: need one step size per node");

  TrialRecord record;
  record.w_err2.resize(setup.horizon, n);
  record.h_err2.resize(setup.horizon, n);
  record.apriori2.resize(setup.horizon, n);

  std::optional<CentralizedLms> central;
  std::optional<DiffusionLms> diffusion;
  std::optional<AtcLms> atc;
  switch (setup.algorithm) {
    case Algorithm::Centralized:
      central.emplace(basis, setup.step_sizes[0]);
      break;
    case Algorithm::Atc:
      atc.emplace(basis, *setup.graph, setup.policy->a2, setup.step_sizes);
      break;
    case Algorithm::NonCooperative:
      diffusion.emplace(basis, *setup.graph, identity_policy(n), setup.step_sizes);
      break;
    case Algorithm::Diffusion:
      diffusion.emplace(basis, *setup.graph, *setup.policy, setup.step_sizes);
      break;
  }

  Eigen::MatrixXd prev_local = Eigen::MatrixXd::Zero(basis.functions(), n);
  auto snapshot_it = setup.snapshot_iterations.begin();
  Eigen::VectorXd h(basis.functions());
  for (long i = 0; i < setup.horizon; ++i) {
    const SampleBatch batch = source(i);
    for (int k = 0; k < n; ++k) {
      const double ap = batch.regressors[k].dot(setup.truth_params[k] - prev_local.col(k));
      record.apriori2(i, k) = ap * ap;
    }

    if (central) {
      central->step(batch);
      const double werr = (setup.truth_coeffs - central->coeffs()).squaredNorm();
      for (int k = 0; k < n; ++k) {
        basis.apply_block_into(k, central->coeffs(), h);
        record.w_err2(i, k) = werr;
        record.h_err2(i, k) = (setup.truth_params[k] - h).squaredNorm();
        prev_local.col(k) = h;
      }
    } else {
      if (atc)
        atc->step(batch);
      else
        diffusion->step(batch);
      const Eigen::MatrixXd& coeffs = atc ? atc->coeffs() : diffusion->coeffs();
      const Eigen::MatrixXd& local = atc ? atc->local_params() : diffusion->local_params();
      for (int k = 0; k < n; ++k) {
        record.w_err2(i, k) = (setup.truth_coeffs - coeffs.col(k)).squaredNorm();
        record.h_err2(i, k) = (setup.truth_params[k] - local.col(k)).squaredNorm();
      }
      prev_local = local;
    }

    if (snapshot_it != setup.snapshot_iterations.end() && *snapshot_it == i) {
      if (central)
        record.snapshots.emplace_back(central->coeffs().replicate(1, n));
      else
        record.snapshots.emplace_back(atc ? atc->coeffs() : diffusion->coeffs());
      ++snapshot_it;
    }
  }

  if (central) {
    record.final_coeffs = central->coeffs().replicate(1, n);
    record.final_local.resize(basis.functions(), n);
    for (int k = 0; k < n; ++k) record.final_local.col(k) = central->local_params(k);
  } else {
    record.final_coeffs = atc ? atc->coeffs() : diffusion->coeffs();
    record.final_local = atc ? atc->local_params() : diffusion->local_params();
  }
  return record;
}

}  // namespace dlms
