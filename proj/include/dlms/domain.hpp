#pragma once

#include <stdexcept>

namespace dlms {

// One-dimensional sampling domain [0, L] with N interior nodes at
// x_k = k*dx for k = 1..N, dx = L/(N+1). The endpoints x = 0 and x = L carry
// the Dirichlet boundary and host no node.
struct SpatialDomain {
  double length = 1.0;
  int nodes = 0;
  double time_step = 0.0;

  SpatialDomain() = default;
  SpatialDomain(double L, int N, double dt = 0.0)
      : length(L), nodes(N), time_step(dt) {
    if (!(L > 0.0)) throw std::domain_error("SpatialDomain: length must be > 0");
    if (N < 1) throw std::domain_error("SpatialDomain: need at least one node");
    if (dt < 0.0) throw std::domain_error("SpatialDomain: negative time step");
  }

  double dx() const { return length / (nodes + 1); }

  // dt / dx^2; the weight of the spatial second difference in the explicit
  // time-stepping scheme.
  double nu() const { return time_step / (dx() * dx()); }

  // Position of node k, 0-based: x = (k+1)*dx in (0, L).
  double position(int k) const {
    if (k < 0 || k >= nodes) throw std::domain_error("SpatialDomain: node index out of range");
    return (k + 1) * dx();
  }
};

// Uniform 2D grid over [0, Lx] x [0, Ly]: (nx+2) x (ny+2) total points of
// which the nx x ny interior points carry nodes. Spacing is uniform and equal
// in both directions.
struct GridDomain2D {
  double length_x = 1.0;
  double length_y = 1.0;
  int interior_x = 0;
  int interior_y = 0;

  GridDomain2D() = default;
  GridDomain2D(double Lx, double Ly, int nx, int ny)
      : length_x(Lx), length_y(Ly), interior_x(nx), interior_y(ny) {
    if (!(Lx > 0.0) || !(Ly > 0.0)) throw std::domain_error("GridDomain2D: lengths must be > 0");
    if (nx < 1 || ny < 1) throw std::domain_error("GridDomain2D: need interior points");
  }

  double dx() const { return length_x / (interior_x + 1); }
  double dy() const { return length_y / (interior_y + 1); }

  int interior_count() const { return interior_x * interior_y; }
  int total_x() const { return interior_x + 2; }
  int total_y() const { return interior_y + 2; }

  // Grid coordinates; k1 in [0, nx+1], k2 in [0, ny+1] (0 and max are boundary).
  double x(int k1) const { return k1 * dx(); }
  double y(int k2) const { return k2 * dy(); }

  bool is_interior(int k1, int k2) const {
    return k1 >= 1 && k1 <= interior_x && k2 >= 1 && k2 <= interior_y;
  }

  // Row-major node index over interior points, (k1, k2) 1-based on the grid.
  int node_index(int k1, int k2) const {
    if (!is_interior(k1, k2)) throw std::domain_error("GridDomain2D: not an interior point");
    return (k1 - 1) * interior_y + (k2 - 1);
  }
};

}  // namespace dlms
