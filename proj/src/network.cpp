#include "dlms/network.hpp"

#include <algorithm>
#include <stdexcept>

namespace dlms {

NetworkGraph::NetworkGraph(int nodes) : nodes_(nodes) {
  if (nodes < 1) throw std::domain_error("NetworkGraph: need at least one node");
  neighborhoods_.resize(nodes);
  for (int k = 0; k < nodes; ++k) neighborhoods_[k].push_back(k);
}

void NetworkGraph::add_edge(int a, int b) {
  if (a < 0 || a >= nodes_ || b < 0 || b >= nodes_)
    throw std::domain_error("NetworkGraph::add_edge: node out of range");
  if (a == b) return;  // self-loops are implicit
  auto insert_sorted = [](std::vector<int>& v, int x) {
    auto it = std::lower_bound(v.begin(), v.end(), x);
    if (it == v.end() || *it != x) v.insert(it, x);
  };
  insert_sorted(neighborhoods_[a], b);
  insert_sorted(neighborhoods_[b], a);
}

bool NetworkGraph::adjacent(int a, int b) const {
  const auto& nb = neighborhoods_.at(a);
  return std::binary_search(nb.begin(), nb.end(), b);
}

NetworkGraph line_topology(int nodes) {
  NetworkGraph g(nodes);
  for (int k = 0; k + 1 < nodes; ++k) g.add_edge(k, k + 1);
  return g;
}

NetworkGraph grid_topology(int nx, int ny) {
  if (nx < 1 || ny < 1) throw std::domain_error("grid_topology: grid sides must be >= 1");
  NetworkGraph g(nx * ny);
  auto id = [ny](int i, int j) { return i * ny + j; };
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      if (i + 1 < nx) g.add_edge(id(i, j), id(i + 1, j));
      if (j + 1 < ny) g.add_edge(id(i, j), id(i, j + 1));
    }
  return g;
}

NetworkGraph complete_topology(int nodes) {
  NetworkGraph g(nodes);
  for (int a = 0; a < nodes; ++a)
    for (int b = a + 1; b < nodes; ++b) g.add_edge(a, b);
  return g;
}

Eigen::MatrixXd metropolis_weights(const NetworkGraph& g) {
  const int n = g.nodes();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    double off = 0.0;
    for (int l : g.neighbors(k)) {
      if (l == k) continue;
      a(l, k) = 1.0 / std::max(g.degree(k), g.degree(l));
      off += a(l, k);
    }
    a(k, k) = 1.0 - off;
  }
  return a;
}

Eigen::MatrixXd uniform_weights(const NetworkGraph& g) {
  const int n = g.nodes();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k)
    for (int l : g.neighbors(k)) a(l, k) = 1.0 / g.degree(k);
  return a;
}

Eigen::MatrixXd relative_degree_weights(const NetworkGraph& g) {
  const int n = g.nodes();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    double total = 0.0;
    for (int l : g.neighbors(k)) total += g.degree(l);
    for (int l : g.neighbors(k)) a(l, k) = g.degree(l) / total;
  }
  return a;
}

StochasticityReport validate_stochastic(const Eigen::MatrixXd& a, Stochasticity orientation,
                                        double tol, const NetworkGraph* graph) {
  StochasticityReport report;
  const int rows = static_cast<int>(a.rows());
  const int cols = static_cast<int>(a.cols());
  auto flag = [&report](int r, int c, double v, const char* kind) {
    report.pass = false;
    report.violations.push_back({r, c, v, kind});
  };

  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (a(r, c) < -tol) flag(r, c, a(r, c), "negative");
      if (graph && !graph->adjacent(r, c) && std::abs(a(r, c)) > tol)
        flag(r, c, a(r, c), "support");
    }

  if (orientation == Stochasticity::Left || orientation == Stochasticity::Doubly) {
    for (int c = 0; c < cols; ++c) {
      const double s = a.col(c).sum();
      if (std::abs(s - 1.0) > tol) flag(-1, c, s, "column-sum");
    }
  }
  if (orientation == Stochasticity::Right || orientation == Stochasticity::Doubly) {
    for (int r = 0; r < rows; ++r) {
      const double s = a.row(r).sum();
      if (std::abs(s - 1.0) > tol) flag(r, -1, s, "row-sum");
    }
  }
  return report;
}

Eigen::MatrixXd kron_identity(const Eigen::MatrixXd& a, int m) {
  const int n = static_cast<int>(a.rows());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n * m, static_cast<int>(a.cols()) * m);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < a.cols(); ++c)
      if (a(r, c) != 0.0)
        out.block(r * m, c * m, m, m) = a(r, c) * Eigen::MatrixXd::Identity(m, m);
  return out;
}

void CombinationPolicy::validate(const NetworkGraph& g, double tol) const {
  const int n = g.nodes();
  if (a1.rows() != n || a1.cols() != n || a2.rows() != n || a2.cols() != n ||
      c.rows() != n || c.cols() != n)
    throw std::domain_error("CombinationPolicy: matrix size does not match graph");
  if (!validate_stochastic(a1, Stochasticity::Left, tol, &g).pass)
    throw std::domain_error("CombinationPolicy: A1 is not left-stochastic on the graph support");
  if (!validate_stochastic(a2, Stochasticity::Left, tol, &g).pass)
    throw std::domain_error("CombinationPolicy: A2 is not left-stochastic on the graph support");
  if (!validate_stochastic(c, Stochasticity::Right, tol, &g).pass)
    throw std::domain_error("CombinationPolicy: C is not right-stochastic on the graph support");
}

}  // namespace dlms
