#include "dlms/theory.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include <Eigen/Dense>

#include "dlms/errors.hpp"

namespace dlms {

namespace {

// (A (x) I)' X, block rows of size `blk`.
Eigen::MatrixXd lift_pre_transpose(const Eigen::MatrixXd& a, const Eigen::MatrixXd& x, int blk) {
  const int n = static_cast<int>(a.rows());
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(x.rows(), x.cols());
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      const double w = a(l, k);
      if (w != 0.0) y.middleRows(k * blk, blk) += w * x.middleRows(l * blk, blk);
    }
  return y;
}

// X (A (x) I), block columns of size `blk`.
Eigen::MatrixXd lift_post(const Eigen::MatrixXd& a, const Eigen::MatrixXd& x, int blk) {
  const int n = static_cast<int>(a.rows());
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(x.rows(), x.cols());
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double w = a(i, j);
      if (w != 0.0) y.middleCols(j * blk, blk) += w * x.middleCols(i * blk, blk);
    }
  return y;
}

// X (A (x) I)'.
Eigen::MatrixXd lift_post_transpose(const Eigen::MatrixXd& a, const Eigen::MatrixXd& x, int blk) {
  const int n = static_cast<int>(a.rows());
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(x.rows(), x.cols());
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double w = a(j, i);
      if (w != 0.0) y.middleCols(j * blk, blk) += w * x.middleCols(i * blk, blk);
    }
  return y;
}

Eigen::VectorXd lift_pre_transpose_vec(const Eigen::MatrixXd& a, const Eigen::VectorXd& x,
                                       int blk) {
  const int n = static_cast<int>(a.rows());
  Eigen::VectorXd y = Eigen::VectorXd::Zero(x.size());
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      const double w = a(l, k);
      if (w != 0.0) y.segment(k * blk, blk) += w * x.segment(l * blk, blk);
    }
  return y;
}

}  // namespace

Eigen::VectorXd TheoryArtifacts::node_pseudo_solution(int k) const {
  const Eigen::MatrixXd& q = node_eigvecs.at(k);
  const Eigen::VectorXd& lam = node_eigvals.at(k);
  const int nb = static_cast<int>(lam.size());
  const int rank = node_rank.at(k);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(nb);
  // Eigenvalues ascending: the top `rank` entries are the nonzero ones.
  for (int i = nb - rank; i < nb; ++i) inv[i] = 1.0 / lam[i];
  return q * (inv.asDiagonal() * (q.transpose() * node_cross.at(k)));
}

Eigen::MatrixXd TheoryArtifacts::node_null_projector(int k) const {
  const Eigen::MatrixXd& q = node_eigvecs.at(k);
  const int nb = static_cast<int>(node_eigvals.at(k).size());
  const int rank = node_rank.at(k);
  const Eigen::MatrixXd null_part = q.leftCols(nb - rank);
  return null_part * null_part.transpose();
}

TheoryArtifacts assemble(const BasisSet& basis, const CombinationPolicy& policy,
                         const std::vector<Eigen::MatrixXd>& covariances,
                         const std::vector<double>& noise_variances,
                         const Eigen::VectorXd& step_sizes, const Eigen::VectorXd& truth_coeffs,
                         const AssembleOptions& options) {
  const int n = policy.nodes();
  if (basis.nodes() != n || static_cast<int>(covariances.size()) != n ||
      static_cast<int>(noise_variances.size()) != n)
    throw std::domain_error("assemble: node counts disagree");
  for (const auto& r : covariances) {
    if (r.rows() != basis.functions() || r.cols() != basis.functions())
      throw std::domain_error("assemble: covariance dimension does not match basis functions");
    if (!r.isApprox(r.transpose(), 1e-10))
      throw std::domain_error("assemble: covariance is not symmetric");
  }
  if (step_sizes.size() != n) throw std::domain_error("assemble: need one step size per node");
  if (truth_coeffs.size() != basis.coeff_size())
    throw std::domain_error("assemble: truth coefficient length mismatch");

  TheoryArtifacts art;
  art.nodes = n;
  art.functions = basis.functions();
  art.basis_count = basis.basis_count();
  art.a1 = policy.a1;
  art.a2 = policy.a2;
  art.c = policy.c;
  art.step_sizes = step_sizes;
  art.truth_coeffs = truth_coeffs;
  art.noise_var.resize(n);

  const int blk = art.block();
  const int dim = art.dim();

  art.transformed_cov.reserve(n);
  art.transformed_cross.reserve(n);
  art.block_gram.reserve(n);
  for (int k = 0; k < n; ++k) {
    const Eigen::MatrixXd& bk = basis.block_matrix(k);
    art.transformed_cov.push_back(bk.transpose() * covariances[k] * bk);
    const Eigen::VectorXd h = basis.apply_block(k, truth_coeffs);
    art.transformed_cross.push_back(bk.transpose() * (covariances[k] * h));
    art.block_gram.push_back(bk.transpose() * bk);
    art.noise_var[k] = noise_variances[k];
  }

  art.node_cov.assign(n, Eigen::MatrixXd::Zero(blk, blk));
  art.node_cross.assign(n, Eigen::VectorXd::Zero(blk));
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      const double c = policy.c(l, k);
      if (c == 0.0) continue;
      art.node_cov[k] += c * art.transformed_cov[l];
      art.node_cross[k] += c * art.transformed_cross[l];
    }

  art.cov_blockdiag = Eigen::MatrixXd::Zero(dim, dim);
  art.cross_stacked.resize(dim);
  art.step_diag.resize(dim);
  for (int k = 0; k < n; ++k) {
    art.cov_blockdiag.block(k * blk, k * blk, blk, blk) = art.node_cov[k];
    art.cross_stacked.segment(k * blk, blk) = art.node_cross[k];
    art.step_diag.segment(k * blk, blk).setConstant(step_sizes[k]);
  }

  art.node_eigvecs.reserve(n);
  art.node_eigvals.reserve(n);
  art.node_rank.reserve(n);
  for (int k = 0; k < n; ++k) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(art.node_cov[k]);
    if (eig.info() != Eigen::Success)
      throw NumericalError("assemble: node covariance eigendecomposition failed");
    const Eigen::VectorXd& lam = eig.eigenvalues();
    const double cutoff = options.rank_tolerance * std::max(1.0, lam.cwiseAbs().maxCoeff());
    int rank = 0;
    for (int i = 0; i < lam.size(); ++i)
      if (lam[i] > cutoff) ++rank;
    art.node_eigvecs.push_back(eig.eigenvectors());
    art.node_eigvals.push_back(lam);
    art.node_rank.push_back(rank);
  }

  // Mean transition A2_ext' (I - M R) A1_ext'.
  Eigen::MatrixXd core = art.step_diag.asDiagonal() * art.cov_blockdiag;
  core = Eigen::MatrixXd::Identity(dim, dim) - core;
  art.mean_transition = lift_post_transpose(art.a1, lift_pre_transpose(art.a2, core, blk), blk);

  // Noise moment C_ext' diag{sigma2 transformed_cov} C_ext and the injected
  // energy A2_ext' M G M A2_ext.
  Eigen::MatrixXd weighted = Eigen::MatrixXd::Zero(dim, dim);
  for (int k = 0; k < n; ++k)
    weighted.block(k * blk, k * blk, blk, blk) = art.noise_var[k] * art.transformed_cov[k];
  art.noise_moment = lift_post(art.c, lift_pre_transpose(art.c, weighted, blk), blk);
  Eigen::MatrixXd mgm =
      art.step_diag.asDiagonal() * art.noise_moment * art.step_diag.asDiagonal();
  art.noise_energy = lift_post(art.a2, lift_pre_transpose(art.a2, mgm, blk), blk);

  art.forcing = lift_pre_transpose_vec(
      art.a2, (art.step_diag.array() * art.cross_stacked.array()).matrix(), blk);

  art.stacked_truth.resize(dim);
  for (int k = 0; k < n; ++k) art.stacked_truth.segment(k * blk, blk) = truth_coeffs;

  return art;
}

TheoryArtifacts assemble(const BasisSet& basis, const CombinationPolicy& policy,
                         const RegressorSpec& spec, const Eigen::VectorXd& step_sizes,
                         const Eigen::VectorXd& truth_coeffs, const AssembleOptions& options) {
  std::vector<Eigen::MatrixXd> covariances;
  std::vector<double> noise_variances;
  covariances.reserve(spec.nodes());
  noise_variances.reserve(spec.nodes());
  for (int k = 0; k < spec.nodes(); ++k) {
    covariances.push_back(spec.covariance(k));
    noise_variances.push_back(spec.noise_variance(k));
  }
  return assemble(basis, policy, covariances, noise_variances, step_sizes, truth_coeffs, options);
}

Eigen::VectorXd step_size_bounds(const TheoryArtifacts& art) {
  Eigen::VectorXd bounds(art.nodes);
  for (int k = 0; k < art.nodes; ++k) {
    const double lmax = art.node_eigvals[k].maxCoeff();
    bounds[k] = 2.0 / lmax;
  }
  return bounds;
}

double noncooperative_spectral_radius(const TheoryArtifacts& art) {
  double rho = 0.0;
  for (int k = 0; k < art.nodes; ++k)
    for (int i = 0; i < art.node_eigvals[k].size(); ++i)
      rho = std::max(rho, std::abs(1.0 - art.step_sizes[k] * art.node_eigvals[k][i]));
  return rho;
}

SpectralClassification classify(const TheoryArtifacts& art, double unit_tol) {
  SpectralClassification out;
  out.unit_tolerance = unit_tol;
  const Eigen::MatrixXd& b = art.mean_transition;

  Eigen::EigenSolver<Eigen::MatrixXd> eig(b, /*computeEigenvectors=*/false);
  if (eig.info() != Eigen::Success)
    throw NumericalError("classify: eigensolver failed on the mean transition");
  out.eigenvalues = eig.eigenvalues();
  out.spectral_radius = out.eigenvalues.cwiseAbs().maxCoeff();

  bool radius_exceeded = out.spectral_radius > 1.0 + unit_tol;
  for (int i = 0; i < out.eigenvalues.size(); ++i) {
    const std::complex<double> lam = out.eigenvalues[i];
    const bool unit_modulus = std::abs(std::abs(lam) - 1.0) <= unit_tol;
    const bool is_one = std::abs(lam - std::complex<double>(1.0, 0.0)) <= unit_tol;
    if (is_one) {
      out.unit_indices.push_back(i);
    } else if (unit_modulus || std::abs(lam) > 1.0 + unit_tol) {
      out.offending_indices.push_back(i);
    }
  }
  out.algebraic_multiplicity = static_cast<int>(out.unit_indices.size());

  // Nullity of I - B decides semisimplicity of the unit eigenvalue.
  Eigen::MatrixXd x = Eigen::MatrixXd::Identity(b.rows(), b.cols()) - b;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(x);
  const double smax = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
  const double cutoff = unit_tol * std::max(1.0, smax);
  int nullity = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] <= cutoff) ++nullity;
  out.geometric_multiplicity = nullity;
  out.defective_at_unit = out.algebraic_multiplicity > out.geometric_multiplicity;

  if (out.geometric_multiplicity > out.algebraic_multiplicity)
    throw NumericalError(
        "classify: nullity of I - B exceeds the eigenvalue count near one; "
        "the unit tolerance does not separate the spectrum");

  if (radius_exceeded || !out.offending_indices.empty() || out.defective_at_unit)
    out.verdict = ConvergenceVerdict::NonConvergent;
  else if (out.algebraic_multiplicity == 0)
    out.verdict = ConvergenceVerdict::StrictlyStable;
  else
    out.verdict = ConvergenceVerdict::PowerConvergent;
  return out;
}

SpectralData spectral_data(const TheoryArtifacts& art, double unit_tol) {
  SpectralData data;
  data.classification = classify(art, unit_tol);
  if (data.classification.verdict == ConvergenceVerdict::NonConvergent)
    throw UnsupportedCaseError(
        "spectral_data: the mean transition is not power convergent");

  const Eigen::MatrixXd& b = art.mean_transition;
  const int dim = static_cast<int>(b.rows());
  const int p = data.classification.algebraic_multiplicity;
  if (p == 0) {
    data.projector = Eigen::MatrixXd::Zero(dim, dim);
    data.unit_right = Eigen::MatrixXd::Zero(dim, 0);
    data.unit_left_dual = Eigen::MatrixXd::Zero(0, dim);
    data.stable_part = b;
    return data;
  }

  Eigen::MatrixXd x = Eigen::MatrixXd::Identity(dim, dim) - b;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
  data.unit_right = svd.matrixV().rightCols(p);                 // right null basis of I - B
  const Eigen::MatrixXd left_null = svd.matrixU().rightCols(p); // left null basis

  Eigen::MatrixXd gram = left_null.transpose() * data.unit_right;  // p x p
  Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
  if (!lu.isInvertible())
    throw NumericalError("spectral_data: left and right unit eigenspaces are degenerate");
  data.unit_left_dual = lu.solve(left_null.transpose());
  data.projector = data.unit_right * data.unit_left_dual;
  data.stable_part = b - data.projector;

  const double residual = (b * data.projector - data.projector).cwiseAbs().maxCoeff();
  if (residual > 1e-6)
    throw NumericalError("spectral_data: projector does not commute with the transition");
  return data;
}

Eigen::VectorXd mean_limit(const TheoryArtifacts& art, const SpectralData& spectral,
                           const Eigen::VectorXd& initial_mean) {
  if (spectral.classification.verdict == ConvergenceVerdict::NonConvergent)
    throw UnsupportedCaseError("mean_limit: non-convergent mean recursion");
  const Eigen::MatrixXd& b = art.mean_transition;
  const int dim = static_cast<int>(b.rows());
  if (initial_mean.size() != dim)
    throw std::domain_error("mean_limit: initial mean has wrong length");

  Eigen::MatrixXd deflated = Eigen::MatrixXd::Identity(dim, dim) - b + spectral.projector;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(deflated);
  const Eigen::VectorXd particular = lu.solve(art.forcing) - spectral.projector * art.forcing;
  return spectral.projector * initial_mean + particular;
}

namespace {

double steady_series(const TheoryArtifacts& art, const SpectralData& spectral,
                     const Eigen::MatrixXd& sigma, const SeriesOptions& options) {
  const Eigen::MatrixXd& bs = spectral.stable_part;
  Eigen::MatrixXd s = sigma;
  double acc = 0.0;
  int small_streak = 0;
  for (long j = 0; j < options.max_terms; ++j) {
    const double term = (s.cwiseProduct(art.noise_energy)).sum();  // Tr(S_j Y)
    acc += term;
    if (std::abs(term) <= options.relative_floor * std::max(std::abs(acc), 1e-300)) {
      if (++small_streak >= options.consecutive_small) return acc;
    } else {
      small_streak = 0;
    }
    s = bs.transpose() * s * bs;
  }
  throw NumericalError("steady_state_wmse: weighted-variance series did not converge");
}

}  // namespace

std::vector<double> steady_state_wmse_many(const TheoryArtifacts& art,
                                           const SpectralData& spectral,
                                           const std::vector<Eigen::MatrixXd>& sigmas,
                                           const Eigen::VectorXd& initial_mean,
                                           const SeriesOptions& options) {
  if (spectral.classification.verdict == ConvergenceVerdict::NonConvergent)
    throw UnsupportedCaseError("steady_state_wmse: non-convergent mean recursion");
  const int dim = art.dim();
  if (initial_mean.size() != dim)
    throw std::domain_error("steady_state_wmse: initial mean has wrong length");
  for (const auto& sigma : sigmas)
    if (sigma.rows() != dim || sigma.cols() != dim)
      throw std::domain_error("steady_state_wmse: weighting matrix has wrong shape");

  const Eigen::VectorXd initial_err = spectral.projector * (art.stacked_truth - initial_mean);
  std::vector<double> out(sigmas.size());

  const bool use_kron = static_cast<long>(dim) * dim <= options.kron_dimension_limit;
  if (use_kron) {
    const int d2 = dim * dim;
    const Eigen::MatrixXd bst = spectral.stable_part.transpose();
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(d2, d2);
    // I - F with F = (Bs (x) Bs)' = Bs' (x) Bs'.
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j)
        if (bst(i, j) != 0.0)
          system.block(i * dim, j * dim, dim, dim) -= bst(i, j) * bst;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
    const Eigen::Map<const Eigen::VectorXd> y_vec(art.noise_energy.data(), d2);
    for (std::size_t s = 0; s < sigmas.size(); ++s) {
      const Eigen::Map<const Eigen::VectorXd> sig_vec(sigmas[s].data(), d2);
      const Eigen::VectorXd solved = lu.solve(sig_vec);
      out[s] = initial_err.dot(sigmas[s] * initial_err) + y_vec.dot(solved);
    }
  } else {
    for (std::size_t s = 0; s < sigmas.size(); ++s)
      out[s] = initial_err.dot(sigmas[s] * initial_err) +
               steady_series(art, spectral, sigmas[s], options);
  }
  return out;
}

double steady_state_wmse(const TheoryArtifacts& art, const SpectralData& spectral,
                         const Eigen::MatrixXd& sigma, const Eigen::VectorXd& initial_mean,
                         const SeriesOptions& options) {
  return steady_state_wmse_many(art, spectral, {sigma}, initial_mean, options).front();
}

WeightPair msd_emse_weights(const TheoryArtifacts& art, int k) {
  if (k < 0 || k >= art.nodes) throw std::domain_error("msd_emse_weights: node out of range");
  const int blk = art.block();
  const int dim = art.dim();
  WeightPair pair;
  pair.msd = Eigen::MatrixXd::Zero(dim, dim);
  pair.emse = Eigen::MatrixXd::Zero(dim, dim);
  pair.msd.block(k * blk, k * blk, blk, blk) = art.block_gram[k];
  pair.emse.block(k * blk, k * blk, blk, blk) = art.transformed_cov[k];
  return pair;
}

Eigen::MatrixXd network_weight_w(const TheoryArtifacts& art) {
  return Eigen::MatrixXd::Identity(art.dim(), art.dim()) / art.nodes;
}

Eigen::MatrixXd network_weight_h(const TheoryArtifacts& art) {
  const int blk = art.block();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(art.dim(), art.dim());
  for (int k = 0; k < art.nodes; ++k)
    w.block(k * blk, k * blk, blk, blk) = art.block_gram[k] / art.nodes;
  return w;
}

Eigen::MatrixXd network_weight_emse(const TheoryArtifacts& art) {
  const int blk = art.block();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(art.dim(), art.dim());
  for (int k = 0; k < art.nodes; ++k)
    w.block(k * blk, k * blk, blk, blk) = art.transformed_cov[k] / art.nodes;
  return w;
}

Eigen::VectorXd learning_curve(const TheoryArtifacts& art, const Eigen::MatrixXd& sigma,
                               long horizon) {
  if (horizon <= 0) throw std::domain_error("learning_curve: horizon must be positive");
  const int dim = art.dim();
  if (sigma.rows() != dim || sigma.cols() != dim)
    throw std::domain_error("learning_curve: weighting matrix has wrong shape");
  const Eigen::MatrixXd& b = art.mean_transition;
  const Eigen::VectorXd& w = art.stacked_truth;
  Eigen::VectorXd eta(horizon);
  Eigen::MatrixXd s = sigma;
  double acc = 0.0;
  for (long i = 0; i < horizon; ++i) {
    acc += (s.cwiseProduct(art.noise_energy)).sum();
    s = b.transpose() * s * b;
    eta[i] = w.dot(s * w) + acc;
  }
  return eta;
}

Eigen::MatrixXd learning_curves(const TheoryArtifacts& art,
                                const std::vector<Eigen::MatrixXd>& sigmas, long horizon) {
  if (horizon <= 0) throw std::domain_error("learning_curves: horizon must be positive");
  const int dim = art.dim();
  const int count = static_cast<int>(sigmas.size());
  for (const auto& sigma : sigmas)
    if (sigma.rows() != dim || sigma.cols() != dim)
      throw std::domain_error("learning_curves: weighting matrix has wrong shape");
  const Eigen::MatrixXd& b = art.mean_transition;
  Eigen::MatrixXd eta(count, horizon);
  Eigen::MatrixXd forward = art.noise_energy;  // B^j Y B'^j
  Eigen::VectorXd v = art.stacked_truth;       // B^{i+1} (1 (x) w°)
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(count);
  for (long i = 0; i < horizon; ++i) {
    for (int s = 0; s < count; ++s) acc[s] += (sigmas[s].cwiseProduct(forward)).sum();
    v = b * v;
    for (int s = 0; s < count; ++s) eta(s, i) = v.dot(sigmas[s] * v) + acc[s];
    forward = b * forward * b.transpose();
  }
  return eta;
}

GeneralizedInverseReport generalized_inverse_check(const TheoryArtifacts& art,
                                                   const SpectralData& spectral) {
  const int dim = art.dim();
  const Eigen::MatrixXd x = Eigen::MatrixXd::Identity(dim, dim) - art.mean_transition;
  Eigen::MatrixXd deflated = x + spectral.projector;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(deflated);
  GeneralizedInverseReport report;
  report.pseudo = lu.inverse() - spectral.projector;
  report.axiom1_residual = (x * report.pseudo * x - x).cwiseAbs().maxCoeff();
  report.axiom2_residual =
      (report.pseudo * x * report.pseudo - report.pseudo).cwiseAbs().maxCoeff();
  return report;
}

double block_max_norm(const Eigen::VectorXd& v, int block) {
  if (block < 1 || v.size() % block != 0)
    throw std::domain_error("block_max_norm: length is not a multiple of the block size");
  double best = 0.0;
  for (int k = 0; k * block < v.size(); ++k)
    best = std::max(best, v.segment(k * block, block).norm());
  return best;
}

MeanErrorBound mean_error_bound(const TheoryArtifacts& art, const Eigen::VectorXd& initial_mean,
                                long max_iterations, double tol) {
  const int dim = art.dim();
  if (initial_mean.size() != dim)
    throw std::domain_error("mean_error_bound: initial mean has wrong length");
  const int blk = art.block();

  bool any_rank_deficient = false;
  for (int k = 0; k < art.nodes; ++k)
    if (art.node_rank[k] < blk) any_rank_deficient = true;
  const double indicator_norm = any_rank_deficient ? 1.0 : 0.0;

  MeanErrorBound out;
  Eigen::VectorXd err = art.stacked_truth - initial_mean;
  out.bound = indicator_norm * block_max_norm(err, blk);

  // Iterate the mean-error recursion to numerical convergence.
  const Eigen::MatrixXd& b = art.mean_transition;
  Eigen::VectorXd next(dim);
  long it = 0;
  for (; it < max_iterations; ++it) {
    next = b * err;
    const double change = block_max_norm(next - err, blk);
    err = next;
    if (change <= tol * std::max(1.0, block_max_norm(err, blk))) break;
  }
  out.iterations = it;
  out.estimated_limit = block_max_norm(err, blk);
  out.holds = out.estimated_limit <= out.bound + 1e-10;
  return out;
}

}  // namespace dlms
