#include "dlms/basis.hpp"

#include <cmath>
#include <stdexcept>

namespace dlms {

double chebyshev_shifted(int n, double x) {
  if (n < 1) throw std::domain_error("chebyshev_shifted: index must be >= 1");
  if (!std::isfinite(x)) throw std::domain_error("chebyshev_shifted: non-finite argument");
  const double t = 2.0 * x - 1.0;
  double prev = 1.0;  // b_1
  if (n == 1) return prev;
  double cur = t;  // b_2
  for (int m = 2; m < n; ++m) {
    const double next = 2.0 * t * cur - prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

Eigen::VectorXd chebyshev_shifted_row(int count, double x) {
  if (count < 1) throw std::domain_error("chebyshev_shifted_row: count must be >= 1");
  if (!std::isfinite(x)) throw std::domain_error("chebyshev_shifted_row: non-finite argument");
  Eigen::VectorXd b(count);
  const double t = 2.0 * x - 1.0;
  b[0] = 1.0;
  if (count > 1) b[1] = t;
  for (int n = 2; n < count; ++n) b[n] = 2.0 * t * b[n - 1] - b[n - 2];
  return b;
}

namespace {

Eigen::MatrixXd kron_block(const Eigen::VectorXd& b, int functions) {
  const int nb = static_cast<int>(b.size());
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(functions, functions * nb);
  for (int m = 0; m < functions; ++m) B.block(m, m * nb, 1, nb) = b.transpose();
  return B;
}

}  // namespace

BasisSet::BasisSet(const SpatialDomain& domain, int basis_count, int functions)
    : basis_count_(basis_count), functions_(functions), length_(domain.length) {
  if (basis_count < 1) throw std::domain_error("BasisSet: basis count must be >= 1");
  if (functions < 1) throw std::domain_error("BasisSet: function count must be >= 1");
  samples_.reserve(domain.nodes);
  blocks_.reserve(domain.nodes);
  for (int k = 0; k < domain.nodes; ++k) {
    Eigen::VectorXd b = chebyshev_shifted_row(basis_count, domain.position(k) / length_);
    blocks_.push_back(kron_block(b, functions));
    samples_.push_back(std::move(b));
  }
}

BasisSet::BasisSet(std::vector<Eigen::VectorXd> samples, int functions, double domain_length)
    : basis_count_(samples.empty() ? 0 : static_cast<int>(samples.front().size())),
      functions_(functions),
      length_(domain_length),
      samples_(std::move(samples)) {
  if (samples_.empty()) throw std::domain_error("BasisSet: no sample vectors");
  if (basis_count_ < 1) throw std::domain_error("BasisSet: basis count must be >= 1");
  if (functions < 1) throw std::domain_error("BasisSet: function count must be >= 1");
  blocks_.reserve(samples_.size());
  for (const auto& b : samples_) {
    if (b.size() != basis_count_)
      throw std::domain_error("BasisSet: inconsistent sample vector lengths");
    blocks_.push_back(kron_block(b, functions_));
  }
}

Eigen::VectorXd BasisSet::apply_block(int k, const Eigen::VectorXd& w) const {
  const Eigen::VectorXd& b = samples_.at(k);
  if (w.size() != coeff_size())
    throw std::domain_error("BasisSet::apply_block: coefficient length mismatch");
  Eigen::VectorXd h(functions_);
  for (int m = 0; m < functions_; ++m)
    h[m] = b.dot(w.segment(m * basis_count_, basis_count_));
  return h;
}

Eigen::VectorXd BasisSet::interpolate(const Eigen::VectorXd& w, double x) const {
  if (w.size() != coeff_size())
    throw std::domain_error("BasisSet::interpolate: coefficient length mismatch");
  const Eigen::VectorXd b = chebyshev_shifted_row(basis_count_, x / length_);
  Eigen::VectorXd h(functions_);
  for (int m = 0; m < functions_; ++m)
    h[m] = b.dot(w.segment(m * basis_count_, basis_count_));
  return h;
}

Eigen::VectorXd BasisSet::block_transpose_apply(int k, const Eigen::RowVectorXd& u,
                                                double scalar) const {
  const Eigen::VectorXd& b = samples_.at(k);
  if (u.size() != functions_)
    throw std::domain_error("BasisSet::block_transpose_apply: regressor length mismatch");
  Eigen::VectorXd g(coeff_size());
  for (int m = 0; m < functions_; ++m)
    g.segment(m * basis_count_, basis_count_) = (u[m] * scalar) * b;
  return g;
}

void BasisSet::apply_block_into(int k, const Eigen::Ref<const Eigen::VectorXd>& w,
                                Eigen::VectorXd& out) const {
  const Eigen::VectorXd& b = samples_[k];
  out.resize(functions_);
  for (int m = 0; m < functions_; ++m)
    out[m] = b.dot(w.segment(m * basis_count_, basis_count_));
}

void BasisSet::accumulate_gradient(int k, const Eigen::RowVectorXd& u, double scalar,
                                   double weight, Eigen::VectorXd& acc) const {
  const Eigen::VectorXd& b = samples_[k];
  for (int m = 0; m < functions_; ++m)
    acc.segment(m * basis_count_, basis_count_) += (weight * (u[m] * scalar)) * b;
}

BasisSet sample_basis(const SpatialDomain& domain, int basis_count, int functions) {
  return BasisSet(domain, basis_count, functions);
}

BasisSet2D::BasisSet2D(const GridDomain2D& grid, int basis_count_x, int basis_count_y)
    : grid_(grid), count_x_(basis_count_x), count_y_(basis_count_y) {
  if (basis_count_x < 1 || basis_count_y < 1)
    throw std::domain_error("BasisSet2D: basis counts must be >= 1");
  rows_.reserve(grid.interior_count());
  for (int k1 = 1; k1 <= grid.interior_x; ++k1) {
    const Eigen::VectorXd bx =
        chebyshev_shifted_row(count_x_, grid.x(k1) / grid.length_x);
    for (int k2 = 1; k2 <= grid.interior_y; ++k2) {
      const Eigen::VectorXd by =
          chebyshev_shifted_row(count_y_, grid.y(k2) / grid.length_y);
      Eigen::RowVectorXd p(count_x_ * count_y_);
      for (int n1 = 1; n1 <= count_x_; ++n1)
        for (int n2 = 1; n2 <= count_y_; ++n2)
          p[flat_index(n1, n2)] = bx[n1 - 1] * by[n2 - 1];
      rows_.push_back(std::move(p));
    }
  }
}

Eigen::RowVectorXd BasisSet2D::row_at(double x, double y) const {
  const Eigen::VectorXd bx = chebyshev_shifted_row(count_x_, x / grid_.length_x);
  const Eigen::VectorXd by = chebyshev_shifted_row(count_y_, y / grid_.length_y);
  Eigen::RowVectorXd p(count_x_ * count_y_);
  for (int n1 = 1; n1 <= count_x_; ++n1)
    for (int n2 = 1; n2 <= count_y_; ++n2)
      p[flat_index(n1, n2)] = bx[n1 - 1] * by[n2 - 1];
  return p;
}

BasisSet2D sample_basis_2d(const GridDomain2D& grid, int basis_count_x, int basis_count_y) {
  return BasisSet2D(grid, basis_count_x, basis_count_y);
}

}  // namespace dlms
