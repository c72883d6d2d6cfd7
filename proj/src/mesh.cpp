#include "bulksurf/mesh.hpp"

#include <stdexcept>

namespace bulksurf {

double Mesh::surface_measure() const {
  double m = 0.0;
  for (const BoundaryNode& b : bnodes) m += b.weight;
  return m;
}

Mesh make_interval_mesh(int n_cells, double length) {
  if (n_cells < 3) throw std::invalid_argument("interval mesh needs at least 3 cells");
  if (!(length > 0.0)) throw std::invalid_argument("interval length must be positive");
  Mesh m;
  m.geometry = Mesh::Geometry::Interval;
  m.n_cells = n_cells;
  const double h = length / n_cells;
  m.cell_volume = h;
  m.cell_faces.resize(n_cells);
  m.cell_pos = Mat(n_cells, 1);
  const double inv_h2 = 1.0 / (h * h);
  for (int i = 0; i < n_cells; ++i) {
    m.cell_pos(i, 0) = (i + 0.5) * h;
    if (i > 0)
      m.cell_faces[i].push_back({i - 1, -1, inv_h2});
    else
      m.cell_faces[i].push_back({-1, 0, inv_h2});
    if (i < n_cells - 1)
      m.cell_faces[i].push_back({i + 1, -1, inv_h2});
    else
      m.cell_faces[i].push_back({-1, 1, inv_h2});
  }
  Mesh::BoundaryNode lo;
  lo.cell = 0;
  lo.h = h;
  lo.inward = {0, 1, 2};
  lo.weight = 1.0;
  Mesh::BoundaryNode hi;
  hi.cell = n_cells - 1;
  hi.h = h;
  hi.inward = {n_cells - 1, n_cells - 2, n_cells - 3};
  hi.weight = 1.0;
  m.bnodes = {lo, hi};
  return m;
}

Mesh make_strip_mesh(int nx, int ny, double lx, double ly) {
  if (nx < 3 || ny < 3) throw std::invalid_argument("strip mesh needs at least 3 cells per direction");
  if (!(lx > 0.0) || !(ly > 0.0)) throw std::invalid_argument("strip dimensions must be positive");
  Mesh m;
  m.geometry = Mesh::Geometry::Strip;
  m.n_cells = nx * ny;
  const double hx = lx / nx;
  const double hy = ly / ny;
  m.cell_volume = hx * hy;
  m.cell_faces.resize(m.n_cells);
  m.cell_pos = Mat(m.n_cells, 2);
  const double inv_hx2 = 1.0 / (hx * hx);
  const double inv_hy2 = 1.0 / (hy * hy);
  auto cell = [nx](int i, int j) { return j * nx + i; };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int c = cell(i, j);
      m.cell_pos(c, 0) = (i + 0.5) * hx;
      m.cell_pos(c, 1) = (j + 0.5) * hy;
      m.cell_faces[c].push_back({cell((i + nx - 1) % nx, j), -1, inv_hx2});
      m.cell_faces[c].push_back({cell((i + 1) % nx, j), -1, inv_hx2});
      if (j > 0)
        m.cell_faces[c].push_back({cell(i, j - 1), -1, inv_hy2});
      else
        m.cell_faces[c].push_back({-1, i, inv_hy2});  // bottom node i
      if (j < ny - 1)
        m.cell_faces[c].push_back({cell(i, j + 1), -1, inv_hy2});
      else
        m.cell_faces[c].push_back({-1, nx + i, inv_hy2});  // top node nx+i
    }
  }
  m.bnodes.resize(2 * nx);
  for (int i = 0; i < nx; ++i) {
    Mesh::BoundaryNode& bot = m.bnodes[i];
    bot.cell = cell(i, 0);
    bot.h = hy;
    bot.inward = {cell(i, 0), cell(i, 1), cell(i, 2)};
    bot.left = (i + nx - 1) % nx;
    bot.right = (i + 1) % nx;
    bot.inv_hs2 = 1.0 / (hx * hx);
    bot.weight = hx;

    Mesh::BoundaryNode& top = m.bnodes[nx + i];
    top.cell = cell(i, ny - 1);
    top.h = hy;
    top.inward = {cell(i, ny - 1), cell(i, ny - 2), cell(i, ny - 3)};
    top.left = nx + (i + nx - 1) % nx;
    top.right = nx + (i + 1) % nx;
    top.inv_hs2 = 1.0 / (hx * hx);
    top.weight = hx;
  }
  return m;
}

} // namespace bulksurf
