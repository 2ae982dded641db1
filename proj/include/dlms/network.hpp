#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace dlms {

// Undirected connectivity with self-loops implied: every node is a member of
// its own neighborhood.
class NetworkGraph {
 public:
  explicit NetworkGraph(int nodes);

  int nodes() const { return nodes_; }
  void add_edge(int a, int b);

  // Neighborhood of k including k itself, ascending.
  const std::vector<int>& neighbors(int k) const { return neighborhoods_.at(k); }
  int degree(int k) const { return static_cast<int>(neighborhoods_.at(k).size()); }
  bool adjacent(int a, int b) const;

 private:
  int nodes_;
  std::vector<std::vector<int>> neighborhoods_;
};

NetworkGraph line_topology(int nodes);
// 4-neighbor lattice over an nx x ny grid of nodes, row-major indexing.
NetworkGraph grid_topology(int nx, int ny);
NetworkGraph complete_topology(int nodes);

// Combination rules. Convention: entry (l, k) weights the contribution of
// node l to node k, so columns sum to one (left-stochastic). Metropolis
// weights are doubly stochastic. Neighborhood sizes n_k = |N_k| include the
// node itself.
Eigen::MatrixXd metropolis_weights(const NetworkGraph& g);
Eigen::MatrixXd uniform_weights(const NetworkGraph& g);
Eigen::MatrixXd relative_degree_weights(const NetworkGraph& g);

enum class Stochasticity { Left, Right, Doubly };

struct StochasticityViolation {
  int row = 0;
  int col = 0;
  double value = 0.0;
  std::string kind;  // "negative" | "column-sum" | "row-sum" | "support"
};

struct StochasticityReport {
  bool pass = true;
  std::vector<StochasticityViolation> violations;
};

// Checks nonnegativity, the declared sum orientation within `tol`, and, when
// a graph is given, that entries vanish off the neighborhood support. Never
// throws; all findings are reported with coordinates.
StochasticityReport validate_stochastic(const Eigen::MatrixXd& a, Stochasticity orientation,
                                        double tol, const NetworkGraph* graph = nullptr);

// A (x) I_m, the network-to-block lift of a combination matrix.
Eigen::MatrixXd kron_identity(const Eigen::MatrixXd& a, int m);

// The three combination matrices of the general diffusion strategy. A1 and A2
// are left-stochastic, C is right-stochastic; all respect the graph support.
struct CombinationPolicy {
  Eigen::MatrixXd a1;
  Eigen::MatrixXd a2;
  Eigen::MatrixXd c;

  int nodes() const { return static_cast<int>(a1.rows()); }

  // Throws std::domain_error on the first violated contract.
  void validate(const NetworkGraph& g, double tol = 1e-12) const;

  Eigen::MatrixXd extended_a1(int block) const { return kron_identity(a1, block); }
  Eigen::MatrixXd extended_a2(int block) const { return kron_identity(a2, block); }
  Eigen::MatrixXd extended_c(int block) const { return kron_identity(c, block); }
};

}  // namespace dlms
