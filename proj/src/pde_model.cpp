#include "dlms/pde_model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "dlms/errors.hpp"
#include "dlms/rng.hpp"

namespace dlms {

std::vector<Eigen::VectorXd> discretize_theta_to_h(const std::vector<double>& theta, double nu) {
  if (theta.size() < 3)
    throw std::domain_error("discretize_theta_to_h: need at least 3 diffusion samples");
  const int interior = static_cast<int>(theta.size()) - 2;
  std::vector<Eigen::VectorXd> h(interior);
  for (int k = 1; k <= interior; ++k) {
    Eigen::VectorXd hk(3);
    hk[0] = 0.25 * nu * (theta[k - 1] + 4.0 * theta[k] - theta[k + 1]);
    hk[1] = 1.0 - 2.0 * nu * theta[k];
    hk[2] = 0.25 * nu * (-theta[k - 1] + 4.0 * theta[k] + theta[k + 1]);
    h[k - 1] = std::move(hk);
  }
  return h;
}

GroundTruthModel::GroundTruthModel(const BasisSet& basis, Eigen::MatrixXd coefficients)
    : coeff_(std::move(coefficients)) {
  if (coeff_.rows() != basis.functions() || coeff_.cols() != basis.basis_count())
    throw std::domain_error("GroundTruthModel: coefficient shape does not match basis");
  stacked_.resize(basis.coeff_size());
  for (int m = 0; m < coeff_.rows(); ++m)
    stacked_.segment(m * coeff_.cols(), coeff_.cols()) = coeff_.row(m).transpose();
  h_.reserve(basis.nodes());
  for (int k = 0; k < basis.nodes(); ++k) h_.push_back(basis.apply_block(k, stacked_));
}

GroundTruthModel GroundTruthModel::from_node_parameters(const BasisSet& basis,
                                                        const std::vector<Eigen::VectorXd>& h) {
  if (static_cast<int>(h.size()) != basis.nodes())
    throw std::domain_error("GroundTruthModel: sample count does not match basis nodes");
  const int nb = basis.basis_count();
  const int m_count = basis.functions();
  Eigen::MatrixXd design(basis.nodes(), nb);
  for (int k = 0; k < basis.nodes(); ++k) design.row(k) = basis.sample(k).transpose();
  Eigen::MatrixXd coeff(m_count, nb);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
  for (int m = 0; m < m_count; ++m) {
    Eigen::VectorXd rhs(basis.nodes());
    for (int k = 0; k < basis.nodes(); ++k) {
      if (h[k].size() != m_count)
        throw std::domain_error("GroundTruthModel: parameter vector length mismatch");
      rhs[k] = h[k][m];
    }
    coeff.row(m) = svd.solve(rhs).transpose();
  }
  return GroundTruthModel(basis, std::move(coeff));
}

RegressorSpec::RegressorSpec(std::vector<Eigen::MatrixXd> covariances,
                             std::vector<double> noise_variances)
    : cov_(std::move(covariances)), sigma2_(std::move(noise_variances)) {
  if (cov_.empty() || cov_.size() != sigma2_.size())
    throw std::domain_error("RegressorSpec: covariance/noise counts disagree");
  const auto dim = cov_.front().rows();
  sqrt_.reserve(cov_.size());
  for (std::size_t k = 0; k < cov_.size(); ++k) {
    const Eigen::MatrixXd& r = cov_[k];
    if (r.rows() != dim || r.cols() != dim)
      throw std::domain_error("RegressorSpec: inconsistent covariance dimensions");
    if (!r.isApprox(r.transpose(), 1e-12))
      throw std::domain_error("RegressorSpec: covariance is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r);
    if (eig.info() != Eigen::Success)
      throw std::domain_error("RegressorSpec: eigendecomposition failed");
    if (eig.eigenvalues().minCoeff() <= 0.0)
      throw std::domain_error("RegressorSpec: covariance is not positive definite");
    sqrt_.push_back(eig.operatorSqrt());
    if (!(sigma2_[k] >= 0.0))
      throw std::domain_error("RegressorSpec: negative noise variance");
  }
}

SampleBatch synthesize_batch(const RegressorSpec& spec, const GroundTruthModel& truth,
                             const BasisSet& basis, std::uint64_t seed, long iteration) {
  const int n = spec.nodes();
  if (truth.nodes() != n || basis.nodes() != n)
    throw std::domain_error("synthesize_batch: node counts disagree");
  SampleBatch batch;
  batch.iteration = iteration;
  batch.regressors.resize(n);
  batch.observations.resize(n);
  batch.noises.resize(n);
  auto engine = make_engine(derive_seed(seed, static_cast<std::uint64_t>(iteration)));
  const int m = spec.dimension();
  for (int k = 0; k < n; ++k) {
    const Eigen::VectorXd z = standard_normal(engine, m);
    Eigen::RowVectorXd u = (spec.coloring(k) * z).transpose();
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double v = std::sqrt(spec.noise_variance(k)) * gauss(engine);
    batch.observations[k] = u.dot(truth.node_parameters(k)) + v;
    batch.noises[k] = v;
    batch.regressors[k] = std::move(u);
  }
  return batch;
}

double node_snr_db(const RegressorSpec& spec, const GroundTruthModel& truth, int k) {
  const Eigen::VectorXd& h = truth.node_parameters(k);
  const double signal = h.dot(spec.covariance(k) * h);
  const double sigma2 = spec.noise_variance(k);
  if (sigma2 == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(signal / sigma2);
}

Poisson2DProblem Poisson2DProblem::gaussian_input(const GridDomain2D& grid, double kappa) {
  Poisson2DProblem problem;
  problem.grid = grid;
  problem.input = Eigen::MatrixXd::Zero(grid.total_x(), grid.total_y());
  for (int k1 = 1; k1 <= grid.interior_x; ++k1)
    for (int k2 = 1; k2 <= grid.interior_y; ++k2) {
      const double a = std::exp(-kappa * ((k1 - 4.0) * (k1 - 4.0) + (k2 - 4.0) * (k2 - 4.0)));
      const double b = std::exp(-kappa * ((k1 - 8.0) * (k1 - 8.0) + (k2 - 8.0) * (k2 - 8.0)));
      problem.input(k1, k2) = a - 5.0 * b + 1.0;
    }
  return problem;
}

double poisson_residual(const GridDomain2D& grid, const Eigen::MatrixXd& field,
                        const Eigen::MatrixXd& input) {
  const double inv_dx2 = 1.0 / (grid.dx() * grid.dx());
  double worst = 0.0;
  for (int k1 = 1; k1 <= grid.interior_x; ++k1)
    for (int k2 = 1; k2 <= grid.interior_y; ++k2) {
      const double lap = inv_dx2 * (field(k1 + 1, k2) + field(k1, k2 + 1) + field(k1 - 1, k2) +
                                    field(k1, k2 - 1) - 4.0 * field(k1, k2));
      worst = std::max(worst, std::abs(lap - input(k1, k2)));
    }
  return worst;
}

PoissonSolution poisson_solve(const Poisson2DProblem& problem, const JacobiOptions& options) {
  const GridDomain2D& grid = problem.grid;
  if (problem.input.rows() != grid.total_x() || problem.input.cols() != grid.total_y())
    throw std::domain_error("poisson_solve: input grid has wrong shape");
  if (!(options.relaxation > 0.0 && options.relaxation <= 1.0))
    throw std::domain_error("poisson_solve: relaxation factor must lie in (0, 1]");
  const double dx2 = grid.dx() * grid.dx();
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(grid.total_x(), grid.total_y());
  Eigen::MatrixXd next = f;
  double residual = poisson_residual(grid, f, problem.input);
  long it = 0;
  while (residual > options.tolerance) {
    if (it >= options.max_iterations)
      throw IterationLimitError("poisson_solve: Jacobi over-relaxation did not converge", residual);
    for (int k1 = 1; k1 <= grid.interior_x; ++k1)
      for (int k2 = 1; k2 <= grid.interior_y; ++k2) {
        const double jac = 0.25 * (f(k1 + 1, k2) + f(k1, k2 + 1) + f(k1 - 1, k2) +
                                   f(k1, k2 - 1) - dx2 * problem.input(k1, k2));
        next(k1, k2) = (1.0 - options.relaxation) * f(k1, k2) + options.relaxation * jac;
      }
    f.swap(next);
    ++it;
    residual = poisson_residual(grid, f, problem.input);
  }
  return {std::move(f), residual, it};
}

double poisson_reference_at(const GridDomain2D& grid, const Eigen::MatrixXd& z, int k1, int k2) {
  if (!grid.is_interior(k1, k2))
    throw std::domain_error("poisson_reference_at: reference is defined on interior nodes only");
  const double inv_dx2 = 1.0 / (grid.dx() * grid.dx());
  return inv_dx2 * (z(k1 + 1, k2) + z(k1, k2 + 1) + z(k1 - 1, k2) + z(k1, k2 - 1) -
                    4.0 * z(k1, k2));
}

PoissonBatch poisson_reference_stream(const GridDomain2D& grid, const Eigen::MatrixXd& field,
                                      const Eigen::MatrixXd& noise_variances, std::uint64_t seed,
                                      long iteration) {
  if (field.rows() != grid.total_x() || field.cols() != grid.total_y() ||
      noise_variances.rows() != grid.total_x() || noise_variances.cols() != grid.total_y())
    throw std::domain_error("poisson_reference_stream: grid shapes disagree");
  PoissonBatch batch;
  batch.iteration = iteration;
  auto engine = make_engine(derive_seed(seed, static_cast<std::uint64_t>(iteration)));
  std::normal_distribution<double> gauss(0.0, 1.0);
  batch.measurements.resize(grid.total_x(), grid.total_y());
  for (int k1 = 0; k1 < grid.total_x(); ++k1)
    for (int k2 = 0; k2 < grid.total_y(); ++k2)
      batch.measurements(k1, k2) =
          field(k1, k2) + std::sqrt(noise_variances(k1, k2)) * gauss(engine);
  batch.references.setConstant(grid.total_x(), grid.total_y(),
                               std::numeric_limits<double>::quiet_NaN());
  for (int k1 = 1; k1 <= grid.interior_x; ++k1)
    for (int k2 = 1; k2 <= grid.interior_y; ++k2)
      batch.references(k1, k2) = poisson_reference_at(grid, batch.measurements, k1, k2);
  return batch;
}

Eigen::MatrixXd poisson_stream_snr_db(const GridDomain2D& grid, const Eigen::MatrixXd& input,
                                      const Eigen::MatrixXd& noise_variances) {
  const double dx4 = std::pow(grid.dx(), 4);
  Eigen::MatrixXd snr =
      Eigen::MatrixXd::Constant(grid.total_x(), grid.total_y(),
                                std::numeric_limits<double>::quiet_NaN());
  for (int k1 = 1; k1 <= grid.interior_x; ++k1)
    for (int k2 = 1; k2 <= grid.interior_y; ++k2) {
      const double var_v =
          (16.0 * noise_variances(k1, k2) + noise_variances(k1 + 1, k2) +
           noise_variances(k1 - 1, k2) + noise_variances(k1, k2 + 1) +
           noise_variances(k1, k2 - 1)) /
          dx4;
      if (var_v == 0.0)
        snr(k1, k2) = std::numeric_limits<double>::infinity();
      else
        snr(k1, k2) = 10.0 * std::log10(input(k1, k2) * input(k1, k2) / var_v);
    }
  return snr;
}

Eigen::MatrixXd poisson_noise_for_snr_band(const GridDomain2D& grid, const Eigen::MatrixXd& input,
                                           double lo_db, double hi_db, std::uint64_t seed,
                                           double margin_db) {
  if (!(hi_db > lo_db)) throw std::domain_error("poisson_noise_for_snr_band: empty band");
  const double lo = lo_db + margin_db;
  const double hi = hi_db - margin_db;
  if (!(hi >= lo)) throw std::domain_error("poisson_noise_for_snr_band: margin exceeds band");

  auto engine = make_engine(derive_seed(seed, 0x2d5eed));
  std::uniform_real_distribution<double> unif(lo, hi);

  // Target variance of the combined reference noise at each interior node.
  Eigen::MatrixXd target = Eigen::MatrixXd::Zero(grid.total_x(), grid.total_y());
  for (int k1 = 1; k1 <= grid.interior_x; ++k1)
    for (int k2 = 1; k2 <= grid.interior_y; ++k2) {
      const double snr_lin = std::pow(10.0, unif(engine) / 10.0);
      target(k1, k2) = input(k1, k2) * input(k1, k2) / snr_lin;
    }

  // Solve 16 s_k + sum of neighbor s = dx^4 * target_k for the per-point
  // measurement variances s, clamping at zero. The system is strictly
  // diagonally dominant, so Gauss-Seidel converges; clamping can only raise a
  // neighbor's achieved variance, which the drawing margin absorbs.
  const double dx4 = std::pow(grid.dx(), 4);
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(grid.total_x(), grid.total_y());
  for (int sweep = 0; sweep < 200; ++sweep) {
    double change = 0.0;
    for (int k1 = 1; k1 <= grid.interior_x; ++k1)
      for (int k2 = 1; k2 <= grid.interior_y; ++k2) {
        const double neigh =
            s(k1 + 1, k2) + s(k1 - 1, k2) + s(k1, k2 + 1) + s(k1, k2 - 1);
        const double value = std::max(0.0, (dx4 * target(k1, k2) - neigh) / 16.0);
        change = std::max(change, std::abs(value - s(k1, k2)));
        s(k1, k2) = value;
      }
    if (change < 1e-18) break;
  }
  return s;
}

}  // namespace dlms
