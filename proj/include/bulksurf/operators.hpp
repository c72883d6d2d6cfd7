#pragma once

#include "bulksurf/linalg.hpp"
#include "bulksurf/mesh.hpp"

namespace bulksurf {

// Bulk fields are (n_cells x n_species) matrices; boundary tables are
// (n_bnodes x n_species); ghost closures provide one ghost value per
// boundary node and species.

/// Conservative second-order Laplacian d_s * Delta f with ghost closure.
Mat laplacian_apply(const Mesh& mesh, const Mat& f, const Vec& d, const Mat& ghosts);

/// Surface Laplacian of per-node values along each periodic boundary line;
/// identically zero on the interval, whose surface is zero-dimensional.
Vec surface_laplacian_apply(const Mesh& mesh, const Vec& g);

/// Second-order one-sided boundary extrapolation (3 f_0 - f_1) / 2, exact
/// for fields affine in the normal coordinate.
Mat boundary_trace(const Mesh& mesh, const Mat& f);

/// Outward flux -d * d_n f from a second-order one-sided stencil; positive
/// values leave the bulk domain.
Mat normal_flux(const Mesh& mesh, const Mat& f, const Vec& d);

/// Midpoint-rule cell quadrature.
double integrate_bulk(const Mesh& mesh, const Vec& cell_values);

/// Node sum weighted by the arc element.
double integrate_surface(const Mesh& mesh, const Vec& node_values);

} // namespace bulksurf
