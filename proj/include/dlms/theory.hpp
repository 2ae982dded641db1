#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "dlms/basis.hpp"
#include "dlms/network.hpp"
#include "dlms/pde_model.hpp"

namespace dlms {

// Closed-form second-order description of the diffusion recursion: per-node
// transformed moments, their neighborhood aggregates, the block operators of
// the mean recursion, and the noise-energy matrix of the variance recursion.
//
// Sizes: M parameter functions, N_b basis functions, block = M*N_b per-node
// coefficients, dim = N*block stacked network coefficients.
struct TheoryArtifacts {
  int nodes = 0;
  int functions = 0;
  int basis_count = 0;

  // Per-node quantities, index k.
  std::vector<Eigen::MatrixXd> transformed_cov;    // B_k' R_u,k B_k
  std::vector<Eigen::VectorXd> transformed_cross;  // B_k' r_du,k
  std::vector<Eigen::MatrixXd> node_cov;           // sum_l c(l,k) transformed_cov[l]
  std::vector<Eigen::VectorXd> node_cross;         // sum_l c(l,k) transformed_cross[l]
  std::vector<Eigen::MatrixXd> block_gram;         // B_k' B_k

  // Eigenstructure of node_cov[k]; eigenvalues ascending, rank by tolerance.
  std::vector<Eigen::MatrixXd> node_eigvecs;
  std::vector<Eigen::VectorXd> node_eigvals;
  std::vector<int> node_rank;

  // Stacked network quantities.
  Eigen::MatrixXd cov_blockdiag;    // diag{node_cov}
  Eigen::VectorXd cross_stacked;    // col{node_cross}
  Eigen::VectorXd step_diag;        // per-entry step sizes (mu_k repeated per block)
  Eigen::MatrixXd mean_transition;  // A2_ext' (I - M R) A1_ext'
  Eigen::MatrixXd noise_moment;     // C_ext' diag{sigma2 transformed_cov} C_ext
  Eigen::MatrixXd noise_energy;     // A2_ext' M noise_moment M A2_ext
  Eigen::VectorXd forcing;          // A2_ext' M cross_stacked
  Eigen::VectorXd stacked_truth;    // 1 (x) w°

  Eigen::MatrixXd a1, a2, c;        // combination matrices
  Eigen::VectorXd step_sizes;       // per node
  Eigen::VectorXd truth_coeffs;     // w°
  std::vector<double> noise_var;

  int block() const { return functions * basis_count; }
  int dim() const { return nodes * block(); }

  // Minimum-norm solution of node_cov[k] x = node_cross[k].
  Eigen::VectorXd node_pseudo_solution(int k) const;
  // Orthogonal projector onto the null space of node_cov[k].
  Eigen::MatrixXd node_null_projector(int k) const;
};

struct AssembleOptions {
  double rank_tolerance = 1e-10;  // relative eigenvalue cutoff for node ranks
};

// Covariances must be symmetric PSD; singular covariances are admitted here
// (the analysis covers them) even though measurement synthesis requires
// strictly positive-definite ones.
TheoryArtifacts assemble(const BasisSet& basis, const CombinationPolicy& policy,
                         const std::vector<Eigen::MatrixXd>& covariances,
                         const std::vector<double>& noise_variances,
                         const Eigen::VectorXd& step_sizes, const Eigen::VectorXd& truth_coeffs,
                         const AssembleOptions& options = {});

TheoryArtifacts assemble(const BasisSet& basis, const CombinationPolicy& policy,
                         const RegressorSpec& spec, const Eigen::VectorXd& step_sizes,
                         const Eigen::VectorXd& truth_coeffs, const AssembleOptions& options = {});

// Per-node stability bound 2 / lambda_max(node_cov[k]).
Eigen::VectorXd step_size_bounds(const TheoryArtifacts& art);

// Spectral radius of the non-cooperative transition I - M R (block diagonal,
// so it is the largest |1 - mu_k lambda| over the node spectra).
double noncooperative_spectral_radius(const TheoryArtifacts& art);

enum class ConvergenceVerdict { StrictlyStable, PowerConvergent, NonConvergent };

struct SpectralClassification {
  double spectral_radius = 0.0;
  ConvergenceVerdict verdict = ConvergenceVerdict::NonConvergent;
  Eigen::VectorXcd eigenvalues;
  std::vector<int> unit_indices;       // eigenvalues within tol of 1
  std::vector<int> offending_indices;  // unit-modulus eigenvalues different from 1
  bool defective_at_unit = false;
  int algebraic_multiplicity = 0;  // count of eigenvalues within tol of 1
  int geometric_multiplicity = 0;  // nullity of I - mean_transition
  double unit_tolerance = 0.0;
};

// Classifies the mean-transition matrix: strictly stable, power convergent
// (all unit-modulus eigenvalues equal one and semisimple), or non-convergent.
// Semisimplicity is decided by comparing the eigenvalue count near one with
// the nullity of I - B from a singular value decomposition.
SpectralClassification classify(const TheoryArtifacts& art, double unit_tol = 1e-8);

// Spectral splitting at the unit eigenvalue: the oblique projector P onto the
// unit eigenspace along the stable complement, a right basis Z2 and its dual
// Z2bar with Z2bar Z2 = I and P = Z2 Z2bar, and the deflated transition
// B - P whose spectral radius is strictly below one.
struct SpectralData {
  SpectralClassification classification;
  Eigen::MatrixXd projector;       // P (dim x dim; zero when strictly stable)
  Eigen::MatrixXd unit_right;      // Z2, dim x p
  Eigen::MatrixXd unit_left_dual;  // Z2bar, p x dim
  Eigen::MatrixXd stable_part;     // B - P
};

// Throws UnsupportedCaseError when the verdict is non-convergent.
SpectralData spectral_data(const TheoryArtifacts& art, double unit_tol = 1e-8);

inline const Eigen::MatrixXd& unit_projector(const SpectralData& s) { return s.projector; }

// Limiting mean of the stacked estimate from initial mean E[w_{-1}]:
//   P E[w_{-1}] + (I - B)^- forcing,
// with the reflexive generalized inverse realized as (I - B + P)^{-1} - P.
Eigen::VectorXd mean_limit(const TheoryArtifacts& art, const SpectralData& spectral,
                           const Eigen::VectorXd& initial_mean);

struct SeriesOptions {
  long max_terms = 1000000;
  double relative_floor = 1e-14;  // per-term trace against the accumulated value
  int consecutive_small = 10;
  // Dimension bound for the explicit Kronecker solve; above it the deflated
  // series is used. Both routes satisfy the same contract.
  int kron_dimension_limit = 4096;
};

// Steady-state weighted mean-square error
//   |P (1(x)w° - initial_mean)|_Sigma^2 + vec(Y)' (I - F)^{-1} vec(Sigma)
// with the unit eigenspace deflated from F.
double steady_state_wmse(const TheoryArtifacts& art, const SpectralData& spectral,
                         const Eigen::MatrixXd& sigma, const Eigen::VectorXd& initial_mean,
                         const SeriesOptions& options = {});

// Same, for several weighting matrices; the Kronecker factorization (when
// applicable) is shared across the batch.
std::vector<double> steady_state_wmse_many(const TheoryArtifacts& art,
                                           const SpectralData& spectral,
                                           const std::vector<Eigen::MatrixXd>& sigmas,
                                           const Eigen::VectorXd& initial_mean,
                                           const SeriesOptions& options = {});

// Weighting matrices extracting node k's MSD (parameter domain) and EMSE.
struct WeightPair {
  Eigen::MatrixXd msd;
  Eigen::MatrixXd emse;
};
WeightPair msd_emse_weights(const TheoryArtifacts& art, int k);

// Network-average weights: coefficient-domain MSD, parameter-domain MSD, EMSE.
Eigen::MatrixXd network_weight_w(const TheoryArtifacts& art);
Eigen::MatrixXd network_weight_h(const TheoryArtifacts& art);
Eigen::MatrixXd network_weight_emse(const TheoryArtifacts& art);

// Transient prediction from the zero initial state: eta(i) for i < horizon,
// maintaining S_{j+1} = B' S_j B and accumulating
//   eta(i) = |1(x)w°|^2_{S_{i+1}} + sum_{j<=i} Tr(S_j Y).
Eigen::VectorXd learning_curve(const TheoryArtifacts& art, const Eigen::MatrixXd& sigma,
                               long horizon);

// Batched transient prediction: one row per weighting matrix. Algebraically
// identical to learning_curve per row (propagates B^j Y B'^j once instead of
// B'^j Sigma B^j per weight).
Eigen::MatrixXd learning_curves(const TheoryArtifacts& art,
                                const std::vector<Eigen::MatrixXd>& sigmas, long horizon);

// Residuals of the two reflexive generalized-inverse axioms for X = I - B
// with the constructed X^- = (X + P)^{-1} - P.
struct GeneralizedInverseReport {
  double axiom1_residual = 0.0;  // max |X X^- X - X|
  double axiom2_residual = 0.0;  // max |X^- X X^- - X^-|
  Eigen::MatrixXd pseudo;
};
GeneralizedInverseReport generalized_inverse_check(const TheoryArtifacts& art,
                                                   const SpectralData& spectral);

// Block-maximum norm of a stacked vector (max Euclidean norm over blocks).
double block_max_norm(const Eigen::VectorXd& v, int block);

// Theorem-style bound on the limiting mean error under rank deficiency:
//   lim |E[werr_i]|_{b,inf} <= |I - Ind(Lambda)|_{b,inf} |E[werr_{-1}]|_{b,inf},
// where the indicator factor is 1 exactly when some node covariance is rank
// deficient. The limit itself is estimated by iterating the mean recursion.
struct MeanErrorBound {
  double bound = 0.0;
  double estimated_limit = 0.0;
  bool holds = false;
  long iterations = 0;
};
MeanErrorBound mean_error_bound(const TheoryArtifacts& art, const Eigen::VectorXd& initial_mean,
                                long max_iterations = 100000, double tol = 1e-12);

}  // namespace dlms
