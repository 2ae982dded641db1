#include <doctest.h>

#include "dlms/network.hpp"

using namespace dlms;

TEST_CASE("line topology neighborhoods include the node itself") {
  NetworkGraph g = line_topology(4);
  CHECK(g.neighbors(1) == std::vector<int>{0, 1, 2});
  CHECK(g.neighbors(0) == std::vector<int>{0, 1});
  NetworkGraph single = line_topology(1);
  CHECK(single.neighbors(0) == std::vector<int>{0});
}

TEST_CASE("grid topology links the four lattice neighbors") {
  NetworkGraph g = grid_topology(3, 3);
  // corner node
  CHECK(g.degree(0) == 3);
  // edge node
  CHECK(g.degree(1) == 4);
  // center node
  CHECK(g.degree(4) == 5);
  NetworkGraph big = grid_topology(11, 11);
  CHECK(big.degree(0) == 3);
  CHECK(big.degree(5 * 11 + 5) == 5);
}

TEST_CASE("metropolis weights on the two-node line") {
  NetworkGraph g = line_topology(2);
  Eigen::MatrixXd a = metropolis_weights(g);
  CHECK(a(0, 0) == doctest::Approx(0.5));
  CHECK(a(1, 0) == doctest::Approx(0.5));
  CHECK(a(0, 1) == doctest::Approx(0.5));
  CHECK(a(1, 1) == doctest::Approx(0.5));
}

TEST_CASE("metropolis weights are doubly stochastic") {
  for (const NetworkGraph& g :
       {line_topology(4), line_topology(7), grid_topology(3, 4), complete_topology(5)}) {
    Eigen::MatrixXd a = metropolis_weights(g);
    CHECK(validate_stochastic(a, Stochasticity::Doubly, 1e-12, &g).pass);
  }
}

TEST_CASE("uniform weights match the hand rule on the line") {
  NetworkGraph g = line_topology(4);
  Eigen::MatrixXd a = uniform_weights(g);
  CHECK(a(0, 1) == doctest::Approx(1.0 / 3));
  CHECK(a(1, 1) == doctest::Approx(1.0 / 3));
  CHECK(a(2, 1) == doctest::Approx(1.0 / 3));
  CHECK(a(3, 1) == 0.0);
  CHECK(validate_stochastic(a, Stochasticity::Left, 1e-12, &g).pass);
}

TEST_CASE("relative degree weights are left stochastic on the support") {
  NetworkGraph g = grid_topology(4, 3);
  Eigen::MatrixXd a = relative_degree_weights(g);
  CHECK(validate_stochastic(a, Stochasticity::Left, 1e-12, &g).pass);
  for (int k = 0; k < g.nodes(); ++k)
    for (int l = 0; l < g.nodes(); ++l)
      if (!g.adjacent(l, k)) CHECK(a(l, k) == 0.0);
}

TEST_CASE("stochasticity validation accepts and rejects correctly") {
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(3, 3);
  CHECK(validate_stochastic(eye, Stochasticity::Left, 1e-12).pass);
  CHECK(validate_stochastic(eye, Stochasticity::Right, 1e-12).pass);
  CHECK(validate_stochastic(eye, Stochasticity::Doubly, 1e-12).pass);

  // Non-primitive combination matrix used in the spectral examples.
  Eigen::MatrixXd a(3, 3);
  a << 0.5, 0.0, 0.0,
       0.5, 0.0, 1.0,
       0.0, 1.0, 0.0;
  CHECK(validate_stochastic(a, Stochasticity::Left, 1e-12).pass);
  CHECK_FALSE(validate_stochastic(a, Stochasticity::Right, 1e-12).pass);

  Eigen::MatrixXd bad = eye;
  bad(2, 0) = -0.1;
  StochasticityReport report = validate_stochastic(bad, Stochasticity::Left, 1e-12);
  REQUIRE_FALSE(report.pass);
  bool found_negative = false;
  for (const auto& v : report.violations)
    if (v.kind == "negative" && v.row == 2 && v.col == 0) found_negative = true;
  CHECK(found_negative);
}

TEST_CASE("kron lift preserves the stochastic orientation") {
  NetworkGraph g = line_topology(3);
  Eigen::MatrixXd a = uniform_weights(g);
  CHECK(validate_stochastic(kron_identity(a, 4), Stochasticity::Left, 1e-12).pass);
  Eigen::MatrixXd c = metropolis_weights(g);
  CHECK(validate_stochastic(kron_identity(c, 4), Stochasticity::Doubly, 1e-12).pass);
}

TEST_CASE("policy validation enforces orientations and support") {
  NetworkGraph g = line_topology(3);
  CombinationPolicy p;
  p.a1 = Eigen::MatrixXd::Identity(3, 3);
  p.a2 = uniform_weights(g);
  p.c = metropolis_weights(g);
  CHECK_NOTHROW(p.validate(g));

  CombinationPolicy off_support = p;
  off_support.a2 = Eigen::MatrixXd::Constant(3, 3, 1.0 / 3);  // dense, ignores the line support
  CHECK_THROWS_AS(off_support.validate(g), std::domain_error);

  CombinationPolicy wrong_orientation = p;
  wrong_orientation.c = uniform_weights(g);  // left-stochastic, rows do not sum to one
  CHECK_THROWS_AS(wrong_orientation.validate(g), std::domain_error);
}
