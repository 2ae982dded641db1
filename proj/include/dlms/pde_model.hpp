#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "dlms/basis.hpp"
#include "dlms/domain.hpp"

namespace dlms {

// Local regression weights obtained by finite-differencing the 1D diffusion
// equation: for interior node k,
//   h_1 = (nu/4) (theta_{k-1} + 4 theta_k - theta_{k+1})
//   h_2 = 1 - 2 nu theta_k
//   h_3 = (nu/4) (-theta_{k-1} + 4 theta_k + theta_{k+1})
// `theta` holds N+2 samples including the boundary-adjacent values.
std::vector<Eigen::VectorXd> discretize_theta_to_h(const std::vector<double>& theta, double nu);

// Global coefficient description of space-varying parameters: an M x N_b
// coefficient matrix whose rows expand each parameter function in the space
// basis, the stacked coefficient vector, and the per-node samples h_k.
class GroundTruthModel {
 public:
  GroundTruthModel(const BasisSet& basis, Eigen::MatrixXd coefficients);

  // Fit coefficients so that the per-node parameter vectors reproduce the
  // given h_k samples in the least-squares sense (exactly when the samples
  // lie in the span of the basis).
  static GroundTruthModel from_node_parameters(const BasisSet& basis,
                                               const std::vector<Eigen::VectorXd>& h);

  int functions() const { return static_cast<int>(coeff_.rows()); }
  int basis_count() const { return static_cast<int>(coeff_.cols()); }
  const Eigen::MatrixXd& coefficients() const { return coeff_; }
  const Eigen::VectorXd& stacked() const { return stacked_; }          // w°
  const Eigen::VectorXd& node_parameters(int k) const { return h_.at(k); }  // h°_k
  int nodes() const { return static_cast<int>(h_.size()); }

 private:
  Eigen::MatrixXd coeff_;
  Eigen::VectorXd stacked_;
  std::vector<Eigen::VectorXd> h_;
};

// Second-order description of the measurement streams: per-node regressor
// covariance (positive definite) and noise variance.
class RegressorSpec {
 public:
  RegressorSpec(std::vector<Eigen::MatrixXd> covariances, std::vector<double> noise_variances);

  int nodes() const { return static_cast<int>(cov_.size()); }
  int dimension() const { return static_cast<int>(cov_.front().rows()); }
  const Eigen::MatrixXd& covariance(int k) const { return cov_.at(k); }
  double noise_variance(int k) const { return sigma2_.at(k); }
  // Symmetric PSD square root used to color i.i.d. normals.
  const Eigen::MatrixXd& coloring(int k) const { return sqrt_.at(k); }

 private:
  std::vector<Eigen::MatrixXd> cov_;
  std::vector<double> sigma2_;
  std::vector<Eigen::MatrixXd> sqrt_;
};

// One synchronous snapshot of the network's measurements.
struct SampleBatch {
  long iteration = 0;
  std::vector<Eigen::RowVectorXd> regressors;  // u_k, 1 x M
  std::vector<double> observations;            // d_k
  std::vector<double> noises;                  // v_k (retained for diagnostics)
};

// Draws one batch as a pure function of (seed, iteration): regressors are
// zero-mean Gaussian with the spec covariances, noise is white Gaussian, and
// d_k = u_k B_k w° + v_k. Per node the draw order is M regressor normals
// followed by one noise normal, nodes ascending.
SampleBatch synthesize_batch(const RegressorSpec& spec, const GroundTruthModel& truth,
                             const BasisSet& basis, std::uint64_t seed, long iteration);

// 10 log10( h_k' R_k h_k / sigma^2_k ); +infinity when the noise variance is zero.
double node_snr_db(const RegressorSpec& spec, const GroundTruthModel& truth, int k);

// ---------------------------------------------------------------------------
// 2D Poisson input-estimation example.
// ---------------------------------------------------------------------------

// Grids are stored as (nx+2) x (ny+2) matrices including the zero Dirichlet
// boundary; entry (k1, k2) follows the grid indexing of GridDomain2D.
struct Poisson2DProblem {
  GridDomain2D grid;
  Eigen::MatrixXd input;  // h°_{k1,k2} on the full grid, zero on the boundary

  static Poisson2DProblem gaussian_input(const GridDomain2D& grid, double kappa);
};

struct JacobiOptions {
  double relaxation = 0.9;
  double tolerance = 1e-8;
  long max_iterations = 200000;
};

struct PoissonSolution {
  Eigen::MatrixXd field;  // f with zero boundary
  double residual = 0.0;
  long iterations = 0;
};

// Solves the five-point discrete Poisson equation
//   (f_E + f_N + f_W + f_S - 4 f) / dx^2 = h
// with zero Dirichlet boundary by Jacobi over-relaxation. Throws
// IterationLimitError if the residual target is not met in the budget.
PoissonSolution poisson_solve(const Poisson2DProblem& problem, const JacobiOptions& options = {});

// Max interior five-point residual of a candidate field.
double poisson_residual(const GridDomain2D& grid, const Eigen::MatrixXd& field,
                        const Eigen::MatrixXd& input);

// Reference stream of the 2D example: every grid point measures
// z(i) = f + n(i) with per-point variance from `noise_variances`, and each
// interior node forms d(i) from the five-point combination of the noisy
// samples; the regressor is the constant scalar 1.
struct PoissonBatch {
  long iteration = 0;
  Eigen::MatrixXd measurements;  // z over the full grid
  Eigen::MatrixXd references;    // d over the full grid (NaN on the boundary)
};

PoissonBatch poisson_reference_stream(const GridDomain2D& grid, const Eigen::MatrixXd& field,
                                      const Eigen::MatrixXd& noise_variances, std::uint64_t seed,
                                      long iteration);

// Reference value at a single interior node from given noisy samples.
double poisson_reference_at(const GridDomain2D& grid, const Eigen::MatrixXd& z, int k1, int k2);

// Per-node a-priori SNR of the reference stream:
//   snr(k) = h(k)^2 / Var(v_k),
// where Var(v_k) = (16 s_k + sum of the four neighbor s) / dx^4 follows from
// the five-point combination of independent measurement noises.
Eigen::MatrixXd poisson_stream_snr_db(const GridDomain2D& grid, const Eigen::MatrixXd& input,
                                      const Eigen::MatrixXd& noise_variances);

// Assigns per-point measurement-noise variances so that every interior node's
// stream SNR lands inside [lo_db, hi_db]. Targets are drawn uniformly with an
// interior margin and the coupled five-point system is solved by projected
// Gauss-Seidel; boundary points measure the known zero boundary and get zero
// variance. Returns the variance grid.
Eigen::MatrixXd poisson_noise_for_snr_band(const GridDomain2D& grid, const Eigen::MatrixXd& input,
                                           double lo_db, double hi_db, std::uint64_t seed,
                                           double margin_db = 1.5);

}  // namespace dlms
