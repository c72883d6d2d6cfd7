#pragma once

#include <array>
#include <vector>

#include "bulksurf/linalg.hpp"

namespace bulksurf {

/// Cell-centered finite-volume mesh covering the two supported geometries:
/// an interval (surface = two endpoint nodes) and a strip periodic in x and
/// bounded in y (surface = the two periodic boundary lines).
struct Mesh {
  enum class Geometry { Interval, Strip };

  /// One face of a cell: either an interior face to a neighbor cell or a
  /// boundary face tied to a boundary node. inv_h2 is 1/h^2 for the face
  /// direction, so a Laplacian contribution is (value_across - value) * inv_h2.
  struct Face {
    int neighbor{-1};  // interior neighbor cell, or -1 on the boundary
    int bnode{-1};     // boundary node index when neighbor < 0
    double inv_h2{0.0};
  };

  /// One surface node. inward lists the three cells walking into the bulk
  /// along the inward normal (for one-sided trace and flux stencils); left
  /// and right are the periodic surface neighbors on the strip (-1 on the
  /// interval, where the surface is zero-dimensional).
  struct BoundaryNode {
    int cell{-1};
    double h{0.0};  // normal cell spacing
    std::array<int, 3> inward{{-1, -1, -1}};
    int left{-1};
    int right{-1};
    double inv_hs2{0.0};  // 1/hx^2 along the surface (strip only)
    double weight{1.0};   // arc element for surface quadrature
  };

  Geometry geometry{Geometry::Interval};
  int n_cells{0};
  double cell_volume{0.0};
  std::vector<std::vector<Face>> cell_faces;
  std::vector<BoundaryNode> bnodes;
  Mat cell_pos;  // n_cells x dim (dim = 1 or 2)

  int n_bnodes() const { return static_cast<int>(bnodes.size()); }
  double surface_measure() const;
};

Mesh make_interval_mesh(int n_cells, double length);
Mesh make_strip_mesh(int nx, int ny, double lx, double ly);

} // namespace bulksurf
