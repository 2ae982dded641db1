#pragma once

#include <vector>

#include <Eigen/Core>

#include "dlms/domain.hpp"

namespace dlms {

// Shifted Chebyshev polynomial b_n on [0, 1], 1-based degree index:
// b_1(x) = 1, b_2(x) = 2x - 1, b_{n+1}(x) = 2(2x-1) b_n(x) - b_{n-1}(x).
// Throws std::domain_error for n < 1 or non-finite x.
double chebyshev_shifted(int n, double x);

// First `count` shifted Chebyshev values at x, as a column vector.
Eigen::VectorXd chebyshev_shifted_row(int count, double x);

// Space basis sampled at the node positions of a 1D domain, together with the
// per-node block matrices that map the stacked coefficient vector to the
// local parameter vector.
//
// Coefficient layout: w stacks the M per-function coefficient vectors of
// length N_b, so w = col{w_1, ..., w_M} and the local parameters are
// h_m = b_k' w_m, i.e. h_k = (I_M (x) b_k') w.
class BasisSet {
 public:
  BasisSet(const SpatialDomain& domain, int basis_count, int functions);

  // Basis with explicitly given per-node sample vectors. Used to run the
  // estimators on bases that are not sampled from a 1D domain (tensor-product
  // grids in particular).
  BasisSet(std::vector<Eigen::VectorXd> samples, int functions, double domain_length);

  int basis_count() const { return basis_count_; }     // N_b
  int functions() const { return functions_; }         // M
  int nodes() const { return static_cast<int>(samples_.size()); }
  int coeff_size() const { return functions_ * basis_count_; }
  double domain_length() const { return length_; }

  // Sampled basis vector b_k at node k (length N_b).
  const Eigen::VectorXd& sample(int k) const { return samples_.at(k); }

  // Dense block matrix B_k = I_M (x) b_k' of shape M x (M*N_b).
  const Eigen::MatrixXd& block_matrix(int k) const { return blocks_.at(k); }

  // h = B_k w without forming the dense block matrix. This is the single
  // code path used for all local-parameter evaluations so results are
  // reproducible bit for bit.
  Eigen::VectorXd apply_block(int k, const Eigen::VectorXd& w) const;

  // B(x) w at an arbitrary position x in [0, L]; positions between nodes
  // interpolate the parameter functions.
  Eigen::VectorXd interpolate(const Eigen::VectorXd& w, double x) const;

  // Gradient-shaped product B_k' u' s for a row regressor u (1 x M) and a
  // scalar residual s; returns a vector of length M*N_b.
  Eigen::VectorXd block_transpose_apply(int k, const Eigen::RowVectorXd& u,
                                        double scalar) const;

  // Allocation-free forms for the estimator inner loops. Both use the same
  // per-entry expressions as their allocating counterparts.
  void apply_block_into(int k, const Eigen::Ref<const Eigen::VectorXd>& w,
                        Eigen::VectorXd& out) const;
  void accumulate_gradient(int k, const Eigen::RowVectorXd& u, double scalar, double weight,
                           Eigen::VectorXd& acc) const;

 private:
  int basis_count_;
  int functions_;
  double length_;
  std::vector<Eigen::VectorXd> samples_;
  std::vector<Eigen::MatrixXd> blocks_;
};

// Convenience constructor mirroring the sampling rule b_{n,k} = b_n(x_k / L).
BasisSet sample_basis(const SpatialDomain& domain, int basis_count, int functions);

// Tensor-product shifted Chebyshev basis over a 2D interior grid. Every node
// (k1, k2) gets a row vector p with entries p_n = b_{n1}(x_{k1}/Lx) *
// b_{n2}(y_{k2}/Ly), flattened row-major over (n1, n2).
class BasisSet2D {
 public:
  BasisSet2D(const GridDomain2D& grid, int basis_count_x, int basis_count_y);

  int basis_count_x() const { return count_x_; }
  int basis_count_y() const { return count_y_; }
  int coeff_size() const { return count_x_ * count_y_; }
  int nodes() const { return static_cast<int>(rows_.size()); }

  // Flattened index of the (n1, n2) pair, both 1-based.
  int flat_index(int n1, int n2) const { return (n1 - 1) * count_y_ + (n2 - 1); }

  // Basis row for the interior node with row-major index `node`.
  const Eigen::RowVectorXd& row(int node) const { return rows_.at(node); }
  const Eigen::RowVectorXd& row(int k1, int k2) const {
    return rows_.at(grid_.node_index(k1, k2));
  }

  // Basis row at an arbitrary position (x, y).
  Eigen::RowVectorXd row_at(double x, double y) const;

  const GridDomain2D& grid() const { return grid_; }

 private:
  GridDomain2D grid_;
  int count_x_;
  int count_y_;
  std::vector<Eigen::RowVectorXd> rows_;
};

BasisSet2D sample_basis_2d(const GridDomain2D& grid, int basis_count_x, int basis_count_y);

}  // namespace dlms
