#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "dlms/errors.hpp"
#include "dlms/pde_model.hpp"
#include "dlms/rng.hpp"

using namespace dlms;

namespace {

RegressorSpec scaled_identity_spec(int nodes, int m, double trace, double sigma2) {
  std::vector<Eigen::MatrixXd> cov(nodes, (trace / m) * Eigen::MatrixXd::Identity(m, m));
  std::vector<double> noise(nodes, sigma2);
  return RegressorSpec(std::move(cov), std::move(noise));
}

GroundTruthModel random_truth(const BasisSet& basis, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd coeff(basis.functions(), basis.basis_count());
  for (int i = 0; i < coeff.rows(); ++i)
    for (int j = 0; j < coeff.cols(); ++j) coeff(i, j) = gauss(rng);
  return GroundTruthModel(basis, coeff);
}

}  // namespace

TEST_CASE("theta discretization hand values") {
  // Constant diffusion coefficient: symmetric stencil weights.
  auto h_const = discretize_theta_to_h({2.0, 2.0, 2.0, 2.0}, 0.3);
  REQUIRE(h_const.size() == 2);
  for (const auto& h : h_const) {
    CHECK(h[0] == doctest::Approx(0.6));
    CHECK(h[1] == doctest::Approx(1.0 - 1.2));
    CHECK(h[2] == doctest::Approx(0.6));
  }

  auto h = discretize_theta_to_h({1.0, 2.0, 3.0}, 1.0);
  REQUIRE(h.size() == 1);
  CHECK(h[0][0] == doctest::Approx(1.5));
  CHECK(h[0][1] == doctest::Approx(-3.0));
  CHECK(h[0][2] == doctest::Approx(2.5));

  auto frozen = discretize_theta_to_h({1.0, 2.0, 3.0}, 0.0);
  CHECK(frozen[0][0] == 0.0);
  CHECK(frozen[0][1] == 1.0);
  CHECK(frozen[0][2] == 0.0);

  CHECK_THROWS_AS(discretize_theta_to_h({1.0, 2.0}, 1.0), std::domain_error);
}

TEST_CASE("one explicit step equals the classical heat stencil for constant theta") {
  const double theta = 0.7;
  const double nu = 0.2;
  auto h = discretize_theta_to_h(std::vector<double>(7, theta), nu);
  // Smooth initial field sampled on the grid.
  std::vector<double> f(7);
  for (int k = 0; k < 7; ++k) f[k] = std::sin(0.5 * k) + 0.1 * k;
  for (int k = 1; k <= 5; ++k) {
    const double via_model = f[k - 1] * h[k - 1][0] + f[k] * h[k - 1][1] + f[k + 1] * h[k - 1][2];
    const double classic = f[k] + nu * theta * (f[k + 1] - 2.0 * f[k] + f[k - 1]);
    CHECK(via_model == doctest::Approx(classic).epsilon(1e-14));
  }
}

TEST_CASE("ground truth model stacks coefficients row-wise") {
  SpatialDomain domain(1.0, 3);
  BasisSet basis(domain, 3, 2);
  Eigen::MatrixXd coeff(2, 3);
  coeff << 1, 2, 3,
           4, 5, 6;
  GroundTruthModel truth(basis, coeff);
  Eigen::VectorXd expect(6);
  expect << 1, 2, 3, 4, 5, 6;
  CHECK(truth.stacked() == expect);
  for (int k = 0; k < 3; ++k)
    CHECK(truth.node_parameters(k) == basis.apply_block(k, truth.stacked()));
}

TEST_CASE("fitting node parameters recovers representable coefficients") {
  SpatialDomain domain(1.0, 6);
  BasisSet basis(domain, 4, 2);
  GroundTruthModel original = random_truth(basis, 11);
  std::vector<Eigen::VectorXd> samples;
  for (int k = 0; k < basis.nodes(); ++k) samples.push_back(original.node_parameters(k));
  GroundTruthModel refit = GroundTruthModel::from_node_parameters(basis, samples);
  CHECK((refit.stacked() - original.stacked()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("regressor spec rejects non positive definite covariances") {
  Eigen::MatrixXd singular = Eigen::MatrixXd::Zero(2, 2);
  singular(0, 0) = 1.0;
  CHECK_THROWS_AS(RegressorSpec({singular}, {0.1}), std::domain_error);
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.5, 0.0, 1.0;
  CHECK_THROWS_AS(RegressorSpec({asym}, {0.1}), std::domain_error);
}

TEST_CASE("noise-free observations satisfy the regression identity exactly") {
  SpatialDomain domain(1.0, 4);
  BasisSet basis(domain, 5, 2);
  GroundTruthModel truth = random_truth(basis, 3);
  RegressorSpec spec = scaled_identity_spec(4, 2, 2.0, 0.0);
  SampleBatch batch = synthesize_batch(spec, truth, basis, 42, 17);
  for (int k = 0; k < 4; ++k) {
    CHECK(batch.noises[k] == 0.0);
    CHECK(batch.observations[k] == batch.regressors[k].dot(truth.node_parameters(k)));
  }
}

TEST_CASE("batches replay identically for a fixed seed") {
  SpatialDomain domain(1.0, 3);
  BasisSet basis(domain, 4, 2);
  GroundTruthModel truth = random_truth(basis, 5);
  RegressorSpec spec = scaled_identity_spec(3, 2, 3.0, 0.07);
  SampleBatch a = synthesize_batch(spec, truth, basis, 1234, 9);
  SampleBatch b = synthesize_batch(spec, truth, basis, 1234, 9);
  for (int k = 0; k < 3; ++k) {
    CHECK(a.observations[k] == b.observations[k]);
    CHECK(a.regressors[k] == b.regressors[k]);
  }
  SampleBatch c = synthesize_batch(spec, truth, basis, 1234, 10);
  CHECK(a.observations[0] != c.observations[0]);
}

TEST_CASE("empirical regressor energy matches the configured trace") {
  SpatialDomain domain(1.0, 2);
  BasisSet basis(domain, 3, 2);
  GroundTruthModel truth = random_truth(basis, 21);
  const double trace = 3.7;
  RegressorSpec spec = scaled_identity_spec(2, 2, trace, 0.08);
  double acc = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    SampleBatch batch = synthesize_batch(spec, truth, basis, 777, i);
    acc += batch.regressors[0].squaredNorm();
  }
  CHECK(acc / draws == doctest::Approx(trace).epsilon(0.02));
}

TEST_CASE("noise stream is white at lag one") {
  SpatialDomain domain(1.0, 1);
  BasisSet basis(domain, 2, 1);
  GroundTruthModel truth = random_truth(basis, 2);
  RegressorSpec spec = scaled_identity_spec(1, 1, 1.0, 1.0);
  const int draws = 100000;
  double prev = 0.0, acc = 0.0, var = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double v = synthesize_batch(spec, truth, basis, 31337, i).noises[0];
    if (i > 0) acc += v * prev;
    var += v * v;
    prev = v;
  }
  const double corr = (acc / (draws - 1)) / (var / draws);
  CHECK(std::abs(corr) < 3.0 / std::sqrt(static_cast<double>(draws)));
}

TEST_CASE("node SNR pinned values and Monte-Carlo agreement") {
  SpatialDomain domain(1.0, 1);
  BasisSet basis(domain, 1, 2);
  Eigen::MatrixXd coeff(2, 1);
  coeff << 1.0, 0.0;  // h = e1
  GroundTruthModel truth(basis, coeff);

  CHECK(node_snr_db(scaled_identity_spec(1, 2, 2.0, 1.0), truth, 0) == doctest::Approx(0.0));
  CHECK(node_snr_db(scaled_identity_spec(1, 2, 2.0, 0.1), truth, 0) == doctest::Approx(10.0));
  CHECK(std::isinf(node_snr_db(scaled_identity_spec(1, 2, 2.0, 0.0), truth, 0)));

  // Random positive-definite covariance versus simulation.
  std::mt19937_64 rng(4);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd f(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) f(i, j) = gauss(rng);
  Eigen::MatrixXd cov = f * f.transpose() + 0.5 * Eigen::MatrixXd::Identity(2, 2);
  const double sigma2 = 0.2;
  RegressorSpec spec({cov}, {sigma2});
  const double predicted = node_snr_db(spec, truth, 0);
  double acc = 0.0;
  const int draws = 1000000;
  for (int i = 0; i < draws; ++i) {
    SampleBatch batch = synthesize_batch(spec, truth, basis, 555, i);
    const double s = batch.regressors[0].dot(truth.node_parameters(0));
    acc += s * s;
  }
  const double simulated = 10.0 * std::log10(acc / draws / sigma2);
  CHECK(std::pow(10.0, simulated / 10.0) ==
        doctest::Approx(std::pow(10.0, predicted / 10.0)).epsilon(0.01));
}

TEST_CASE("poisson solver returns zero field for zero input") {
  GridDomain2D grid(1.0, 1.0, 5, 5);
  Poisson2DProblem problem{grid, Eigen::MatrixXd::Zero(7, 7)};
  PoissonSolution sol = poisson_solve(problem);
  CHECK(sol.field.cwiseAbs().maxCoeff() == 0.0);
  CHECK(sol.iterations == 0);
}

TEST_CASE("poisson solver meets the residual target on the reference input") {
  GridDomain2D grid(1.0, 1.0, 11, 11);
  const double kappa = (11 - 1) * (11 - 1) / 4.0;
  Poisson2DProblem problem = Poisson2DProblem::gaussian_input(grid, kappa);
  // Boundary rows and columns of the input stay exactly zero.
  CHECK(problem.input.row(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(problem.input.col(12).cwiseAbs().maxCoeff() == 0.0);
  PoissonSolution sol = poisson_solve(problem);
  CHECK(sol.residual <= 1e-8);
  CHECK(poisson_residual(grid, sol.field, problem.input) <= 1e-8);
}

TEST_CASE("poisson solver throws on an exhausted iteration budget") {
  GridDomain2D grid(1.0, 1.0, 11, 11);
  Poisson2DProblem problem = Poisson2DProblem::gaussian_input(grid, 25.0);
  JacobiOptions options;
  options.max_iterations = 3;
  CHECK_THROWS_AS(poisson_solve(problem, options), IterationLimitError);
  try {
    poisson_solve(problem, options);
  } catch (const IterationLimitError& e) {
    CHECK(e.last_residual() > 0.0);
  }
}

TEST_CASE("manufactured solution is recovered to discretization accuracy") {
  constexpr double pi = std::numbers::pi;
  auto run = [&](int n) {
    GridDomain2D grid(1.0, 1.0, n, n);
    Poisson2DProblem problem{grid, Eigen::MatrixXd::Zero(n + 2, n + 2)};
    Eigen::MatrixXd exact(n + 2, n + 2);
    for (int k1 = 0; k1 < n + 2; ++k1)
      for (int k2 = 0; k2 < n + 2; ++k2) {
        exact(k1, k2) = std::sin(pi * grid.x(k1)) * std::sin(pi * grid.y(k2));
        problem.input(k1, k2) = -2.0 * pi * pi * exact(k1, k2);
      }
    // Zero Dirichlet boundary exactly (sin leaves roundoff-size residue).
    for (int k = 0; k < n + 2; ++k) {
      problem.input(0, k) = problem.input(n + 1, k) = 0.0;
      problem.input(k, 0) = problem.input(k, n + 1) = 0.0;
    }
    JacobiOptions options;
    options.tolerance = 1e-10;
    options.max_iterations = 2000000;
    PoissonSolution sol = poisson_solve(problem, options);
    double err = 0.0;
    for (int k1 = 1; k1 <= n; ++k1)
      for (int k2 = 1; k2 <= n; ++k2)
        err = std::max(err, std::abs(sol.field(k1, k2) - exact(k1, k2)));
    return err;
  };
  const double coarse = run(11);
  const double fine = run(23);
  const double dx_coarse = 1.0 / 12;
  CHECK(coarse < 2.0 * dx_coarse * dx_coarse);
  CHECK(coarse / fine > 3.0);  // second-order convergence halves the error twice
}

TEST_CASE("reference stream reduces to the discrete input without noise") {
  GridDomain2D grid(1.0, 1.0, 11, 11);
  Poisson2DProblem problem = Poisson2DProblem::gaussian_input(grid, 25.0);
  PoissonSolution sol = poisson_solve(problem);
  Eigen::MatrixXd zero_var = Eigen::MatrixXd::Zero(13, 13);
  PoissonBatch batch = poisson_reference_stream(grid, sol.field, zero_var, 9, 0);
  for (int k1 = 1; k1 <= 11; ++k1)
    for (int k2 = 1; k2 <= 11; ++k2) {
      CHECK(batch.measurements(k1, k2) == sol.field(k1, k2));
      CHECK(std::abs(batch.references(k1, k2) - problem.input(k1, k2)) <= 2e-7);
    }
}

TEST_CASE("reference value matches a hand five-point evaluation") {
  GridDomain2D grid(1.0, 1.0, 3, 3);
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(5, 5);
  z(2, 2) = 1.0;
  z(3, 2) = 2.0;
  z(1, 2) = 3.0;
  z(2, 3) = 4.0;
  z(2, 1) = 5.0;
  const double dx2 = grid.dx() * grid.dx();
  CHECK(poisson_reference_at(grid, z, 2, 2) ==
        doctest::Approx((2.0 + 4.0 + 3.0 + 5.0 - 4.0) / dx2));
  CHECK_THROWS_AS(poisson_reference_at(grid, z, 0, 2), std::domain_error);
}

TEST_CASE("snr band assignment keeps every interior node inside the band") {
  GridDomain2D grid(1.0, 1.0, 11, 11);
  Poisson2DProblem problem = Poisson2DProblem::gaussian_input(grid, 25.0);
  Eigen::MatrixXd variances =
      poisson_noise_for_snr_band(grid, problem.input, 20.0, 30.0, 2024);
  CHECK(variances.minCoeff() >= 0.0);
  // Boundary points measure the known boundary: no noise budget there.
  CHECK(variances.row(0).cwiseAbs().maxCoeff() == 0.0);
  Eigen::MatrixXd snr = poisson_stream_snr_db(grid, problem.input, variances);
  for (int k1 = 1; k1 <= 11; ++k1)
    for (int k2 = 1; k2 <= 11; ++k2) {
      CHECK(snr(k1, k2) >= 20.0);
      CHECK(snr(k1, k2) <= 30.0);
    }
}
