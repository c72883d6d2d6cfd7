#include "bulksurf/operators.hpp"

#include <stdexcept>

namespace bulksurf {

Mat laplacian_apply(const Mesh& mesh, const Mat& f, const Vec& d, const Mat& ghosts) {
  if (f.rows() != mesh.n_cells || f.cols() != d.size())
    throw std::invalid_argument("laplacian_apply: field dimensions do not match the mesh");
  if (ghosts.rows() != mesh.n_bnodes() || ghosts.cols() != f.cols())
    throw std::invalid_argument("laplacian_apply: ghost closure missing boundary values");
  Mat out = Mat::Zero(f.rows(), f.cols());
  for (int c = 0; c < mesh.n_cells; ++c) {
    for (const Mesh::Face& face : mesh.cell_faces[c]) {
      if (face.neighbor >= 0)
        out.row(c) += (f.row(face.neighbor) - f.row(c)) * face.inv_h2;
      else
        out.row(c) += (ghosts.row(face.bnode) - f.row(c)) * face.inv_h2;
    }
  }
  for (int s = 0; s < d.size(); ++s) out.col(s) *= d[s];
  return out;
}

Vec surface_laplacian_apply(const Mesh& mesh, const Vec& g) {
  if (g.size() != mesh.n_bnodes())
    throw std::invalid_argument("surface_laplacian_apply: node count mismatch");
  Vec out = Vec::Zero(g.size());
  if (mesh.geometry == Mesh::Geometry::Interval) return out;
  for (int k = 0; k < mesh.n_bnodes(); ++k) {
    const Mesh::BoundaryNode& b = mesh.bnodes[k];
    out[k] = (g[b.left] - 2.0 * g[k] + g[b.right]) * b.inv_hs2;
  }
  return out;
}

Mat boundary_trace(const Mesh& mesh, const Mat& f) {
  Mat out(mesh.n_bnodes(), f.cols());
  for (int k = 0; k < mesh.n_bnodes(); ++k) {
    const Mesh::BoundaryNode& b = mesh.bnodes[k];
    out.row(k) = 1.5 * f.row(b.inward[0]) - 0.5 * f.row(b.inward[1]);
  }
  return out;
}

Mat normal_flux(const Mesh& mesh, const Mat& f, const Vec& d) {
  Mat out(mesh.n_bnodes(), f.cols());
  for (int k = 0; k < mesh.n_bnodes(); ++k) {
    const Mesh::BoundaryNode& b = mesh.bnodes[k];
    // inward derivative from cell centers at h/2, 3h/2, 5h/2; the outward
    // normal derivative is its negative, so -d * d_n f = +d * inward slope
    const Eigen::RowVectorXd slope =
        (-2.0 * f.row(b.inward[0]) + 3.0 * f.row(b.inward[1]) - f.row(b.inward[2])) / b.h;
    out.row(k) = slope.cwiseProduct(d.transpose());
  }
  return out;
}

double integrate_bulk(const Mesh& mesh, const Vec& cell_values) {
  if (cell_values.size() != mesh.n_cells)
    throw std::invalid_argument("integrate_bulk: cell count mismatch");
  return mesh.cell_volume * cell_values.sum();
}

double integrate_surface(const Mesh& mesh, const Vec& node_values) {
  if (node_values.size() != mesh.n_bnodes())
    throw std::invalid_argument("integrate_surface: node count mismatch");
  double total = 0.0;
  for (int k = 0; k < mesh.n_bnodes(); ++k) total += mesh.bnodes[k].weight * node_values[k];
  return total;
}

} // namespace bulksurf
