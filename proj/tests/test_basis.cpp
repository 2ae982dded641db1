#include <cmath>
#include <random>

#include <doctest.h>

#include "dlms/basis.hpp"

using namespace dlms;

namespace {

// Closed-form oracle: the shifted Chebyshev polynomial equals
// cos((n-1) acos(2x-1)) on [0, 1]. Test-only; production uses the recurrence.
double chebyshev_closed_form(int n, double x) {
  return std::cos((n - 1) * std::acos(2.0 * x - 1.0));
}

}  // namespace

TEST_CASE("shifted Chebyshev recurrence matches the cosine closed form") {
  for (int n = 1; n <= 10; ++n)
    for (int i = 0; i <= 100; ++i) {
      const double x = i / 100.0;
      CHECK(std::abs(chebyshev_shifted(n, x) - chebyshev_closed_form(n, x)) < 1e-10);
    }
}

TEST_CASE("shifted Chebyshev pinned values") {
  CHECK(chebyshev_shifted(1, 0.7) == 1.0);
  CHECK(chebyshev_shifted(2, 0.5) == 0.0);
  // Oracle value: cos(2 acos(-1)) = cos(2 pi) = 1.
  CHECK(chebyshev_shifted(3, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("shifted Chebyshev rejects bad arguments") {
  CHECK_THROWS_AS(chebyshev_shifted(0, 0.5), std::domain_error);
  CHECK_THROWS_AS(chebyshev_shifted(3, std::nan("")), std::domain_error);
  CHECK_THROWS_AS(chebyshev_shifted_row(0, 0.5), std::domain_error);
}

TEST_CASE("sampled basis has unit leading entry and bounded values") {
  SpatialDomain domain(1.0, 4);
  BasisSet basis(domain, 5, 2);
  REQUIRE(basis.nodes() == 4);
  for (int k = 0; k < 4; ++k) {
    const Eigen::VectorXd& b = basis.sample(k);
    REQUIRE(b.size() == 5);
    CHECK(b[0] == 1.0);
    CHECK(b.cwiseAbs().maxCoeff() <= 1.0 + 1e-14);
  }
}

TEST_CASE("single node at the midpoint samples [1, 0]") {
  SpatialDomain domain(2.0, 1);  // node at x = 1 = L/2, rescaled to 0.5
  BasisSet basis(domain, 2, 1);
  CHECK(basis.sample(0)[0] == 1.0);
  CHECK(basis.sample(0)[1] == 0.0);
}

TEST_CASE("sampled entries match the cosine oracle at node positions") {
  SpatialDomain domain(1.0, 3);
  BasisSet basis(domain, 3, 1);
  for (int k = 0; k < 3; ++k)
    for (int n = 1; n <= 3; ++n)
      CHECK(basis.sample(k)[n - 1] ==
            doctest::Approx(chebyshev_closed_form(n, domain.position(k))).epsilon(1e-12));
}

TEST_CASE("block matrices carry the sample vector in each row block") {
  SpatialDomain domain(1.0, 4);
  BasisSet basis(domain, 5, 3);
  for (int k = 0; k < basis.nodes(); ++k) {
    const Eigen::MatrixXd& bk = basis.block_matrix(k);
    REQUIRE(bk.rows() == 3);
    REQUIRE(bk.cols() == 15);
    for (int m = 0; m < 3; ++m)
      for (int j = 0; j < 15; ++j) {
        const double expected = (j / 5 == m) ? basis.sample(k)[j % 5] : 0.0;
        CHECK(bk(m, j) == expected);
      }
  }
}

TEST_CASE("block application equals independent inner products and the dense product") {
  SpatialDomain domain(1.0, 5);
  BasisSet basis(domain, 4, 3);
  std::mt19937_64 rng(99);
  std::normal_distribution<double> gauss;
  Eigen::VectorXd w(basis.coeff_size());
  for (int i = 0; i < w.size(); ++i) w[i] = gauss(rng);
  for (int k = 0; k < basis.nodes(); ++k) {
    const Eigen::VectorXd h = basis.apply_block(k, w);
    for (int m = 0; m < 3; ++m)
      CHECK(h[m] == basis.sample(k).dot(w.segment(m * 4, 4)));
    const Eigen::VectorXd dense = basis.block_matrix(k) * w;
    CHECK((h - dense).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("interpolation reproduces node parameters exactly and is linear in w") {
  SpatialDomain domain(1.0, 4);
  BasisSet basis(domain, 5, 2);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss;
  Eigen::VectorXd w(basis.coeff_size());
  for (int i = 0; i < w.size(); ++i) w[i] = gauss(rng);

  for (int k = 0; k < basis.nodes(); ++k) {
    const Eigen::VectorXd at_node = basis.interpolate(w, domain.position(k));
    const Eigen::VectorXd direct = basis.apply_block(k, w);
    CHECK(at_node[0] == direct[0]);
    CHECK(at_node[1] == direct[1]);
  }

  const Eigen::VectorXd zero = basis.interpolate(Eigen::VectorXd::Zero(basis.coeff_size()), 0.33);
  CHECK(zero.cwiseAbs().maxCoeff() == 0.0);

  // Off-node position: term-by-term expansion oracle.
  const double x = 0.5 * (domain.position(1) + domain.position(2));
  const Eigen::VectorXd h = basis.interpolate(w, x);
  for (int m = 0; m < 2; ++m) {
    double expect = 0.0;
    for (int n = 1; n <= 5; ++n) expect += w[m * 5 + (n - 1)] * chebyshev_shifted(n, x / 1.0);
    CHECK(h[m] == doctest::Approx(expect).epsilon(1e-12));
  }

  CHECK_THROWS_AS(basis.interpolate(Eigen::VectorXd::Zero(3), 0.5), std::domain_error);
}

TEST_CASE("basis handles rescaled domains") {
  SpatialDomain domain(10.0, 6);
  BasisSet basis(domain, 6, 1);
  for (int k = 0; k < basis.nodes(); ++k)
    CHECK(basis.sample(k).cwiseAbs().maxCoeff() <= 1.0 + 1e-14);
}

TEST_CASE("2D tensor basis dimensions and trivial element") {
  GridDomain2D grid(1.0, 1.0, 11, 11);
  BasisSet2D basis(grid, 4, 4);
  REQUIRE(basis.nodes() == 121);
  for (int node = 0; node < basis.nodes(); ++node) {
    REQUIRE(basis.row(node).size() == 16);
    CHECK(basis.row(node)[basis.flat_index(1, 1)] == 1.0);
  }
}

TEST_CASE("2D tensor basis equals products of 1D samples") {
  GridDomain2D grid(1.0, 1.0, 3, 3);
  BasisSet2D basis2d(grid, 2, 2);
  SpatialDomain line(1.0, 3);
  BasisSet basis1d(line, 2, 1);
  for (int k1 = 1; k1 <= 3; ++k1)
    for (int k2 = 1; k2 <= 3; ++k2)
      for (int n1 = 1; n1 <= 2; ++n1)
        for (int n2 = 1; n2 <= 2; ++n2)
          CHECK(basis2d.row(k1, k2)[basis2d.flat_index(n1, n2)] ==
                basis1d.sample(k1 - 1)[n1 - 1] * basis1d.sample(k2 - 1)[n2 - 1]);
  CHECK_THROWS_AS(sample_basis_2d(grid, 0, 2), std::domain_error);
}

TEST_CASE("2D flattening is row-major over the index pair") {
  GridDomain2D grid(1.0, 1.0, 2, 2);
  BasisSet2D basis(grid, 3, 2);
  CHECK(basis.flat_index(1, 1) == 0);
  CHECK(basis.flat_index(1, 2) == 1);
  CHECK(basis.flat_index(2, 1) == 2);
  CHECK(basis.flat_index(3, 2) == 5);
}
