#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace dlms {

// Per-iteration Monte-Carlo averages in linear scale. Columns 0..N-1 are the
// nodes, column N is the network average (arithmetic mean over nodes, taken
// row by row). Theory matrices are empty when no overlay was computed.
struct MetricsSeries {
  long horizon = 0;
  int nodes = 0;
  Eigen::MatrixXd msd_w;
  Eigen::MatrixXd msd_h;
  Eigen::MatrixXd emse;
  Eigen::MatrixXd msd_w_theory;
  Eigen::MatrixXd msd_h_theory;
  // Tail means (linear), length nodes + 1.
  Eigen::VectorXd steady_msd_w;
  Eigen::VectorXd steady_msd_h;
  Eigen::VectorXd steady_emse;
};

double to_db(double linear);

// Trajectory CSV, one row per (iteration, node) plus a `net` row per
// iteration. Fixed header:
//   iter,node,msd_w_db,msd_h_db,emse_db,msd_w_theory_db,msd_h_theory_db
// Theory columns are left empty when unavailable.
void write_trajectory_csv(const std::string& path, const MetricsSeries& series);

// Network rows of a trajectory CSV.
struct NetworkTrajectory {
  std::vector<double> msd_w_db;
  std::vector<double> msd_h_db;
  std::vector<double> emse_db;
};
NetworkTrajectory read_network_trajectory(const std::string& path);

struct PlotSeries {
  std::string label;
  std::vector<double> values;  // dB per iteration
  std::string color = "#1f6fb4";
  bool dashed = false;
};

void write_line_plot_svg(const std::string& path, const std::string& title,
                         const std::string& y_label, const std::vector<PlotSeries>& series);

// Heatmap of a matrix (NaN cells are drawn grey), with a value colorbar.
void write_heatmap_svg(const std::string& path, const std::string& title,
                       const Eigen::MatrixXd& values);

// Grid CSV with rows `k1,k2,value`.
void write_grid_csv(const std::string& path, const Eigen::MatrixXd& values);

}  // namespace dlms
