#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "bulksurf/mesh.hpp"
#include "bulksurf/operators.hpp"

using namespace bulksurf;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Samples a scalar function of the normal coordinate on cells and ghost
// positions of an interval mesh.
struct IntervalField {
  Mat values;  // n_cells x 1
  Mat ghosts;  // 2 x 1, samples at -h/2 and L + h/2
};

IntervalField sample_interval(const Mesh& mesh, double length,
                              const std::function<double(double)>& f) {
  IntervalField out;
  out.values = Mat(mesh.n_cells, 1);
  for (int c = 0; c < mesh.n_cells; ++c) out.values(c, 0) = f(mesh.cell_pos(c, 0));
  const double h = mesh.cell_volume;
  out.ghosts = Mat(2, 1);
  out.ghosts(0, 0) = f(-0.5 * h);
  out.ghosts(1, 0) = f(length + 0.5 * h);
  return out;
}

// Observed convergence order between two max-norm errors at h and h/2.
double observed_order(double coarse, double fine) { return std::log2(coarse / fine); }

double laplacian_error(int n, double length) {
  const Mesh mesh = make_interval_mesh(n, length);
  const double w = 2.0 * kPi / length;
  const IntervalField f =
      sample_interval(mesh, length, [&](double y) { return std::sin(w * y); });
  const Mat lap = laplacian_apply(mesh, f.values, Vec::Constant(1, 1.0), f.ghosts);
  double err = 0.0;
  for (int c = 0; c < mesh.n_cells; ++c)
    err = std::max(err, std::abs(lap(c, 0) + w * w * std::sin(w * mesh.cell_pos(c, 0))));
  return err;
}

double trace_error(int n) {
  const Mesh mesh = make_interval_mesh(n, 1.0);
  const IntervalField f = sample_interval(mesh, 1.0, [](double y) { return y * y * y; });
  const Mat tr = boundary_trace(mesh, f.values);
  return std::max(std::abs(tr(0, 0) - 0.0), std::abs(tr(1, 0) - 1.0));
}

double flux_error(int n) {
  const Mesh mesh = make_interval_mesh(n, 1.0);
  const double w = 2.0 * kPi;
  const IntervalField f =
      sample_interval(mesh, 1.0, [&](double y) { return std::sin(w * y) + y; });
  const Mat flux = normal_flux(mesh, f.values, Vec::Constant(1, 3.0));
  // -d dn f with outward normals -y and +y: +d f'(0) and -d f'(1)
  const double lo = 3.0 * (w + 1.0), hi = -3.0 * (w + 1.0);
  return std::max(std::abs(flux(0, 0) - lo), std::abs(flux(1, 0) - hi));
}

double surface_laplacian_error(int nx) {
  const double lx = 2.0;
  const Mesh mesh = make_strip_mesh(nx, 3, lx, 1.0);
  const double w = 2.0 * kPi / lx;
  Vec g(mesh.n_bnodes());
  for (int k = 0; k < mesh.n_bnodes(); ++k) {
    const double x = (k % nx + 0.5) * (lx / nx);
    g[k] = std::sin(w * x);
  }
  const Vec lap = surface_laplacian_apply(mesh, g);
  return (lap + w * w * g).lpNorm<Eigen::Infinity>();
}

} // namespace

TEST_CASE("interval mesh: geometry bookkeeping") {
  const Mesh mesh = make_interval_mesh(10, 2.0);
  CHECK(mesh.n_cells == 10);
  CHECK(mesh.cell_volume == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(mesh.n_bnodes() == 2);
  CHECK(mesh.cell_pos(0, 0) == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(mesh.cell_pos(9, 0) == doctest::Approx(1.9).epsilon(1e-14));
  CHECK(mesh.surface_measure() == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(mesh.bnodes[0].cell == 0);
  CHECK(mesh.bnodes[1].cell == 9);
  CHECK_THROWS(make_interval_mesh(2, 1.0));
  CHECK_THROWS(make_interval_mesh(10, 0.0));
}

TEST_CASE("strip mesh: geometry bookkeeping and periodic wiring") {
  const int nx = 6, ny = 4;
  const Mesh mesh = make_strip_mesh(nx, ny, 3.0, 1.0);
  CHECK(mesh.n_cells == nx * ny);
  CHECK(mesh.cell_volume == doctest::Approx(0.5 * 0.25).epsilon(1e-14));
  CHECK(mesh.n_bnodes() == 2 * nx);
  CHECK(mesh.surface_measure() == doctest::Approx(2.0 * 3.0).epsilon(1e-14));
  // periodic surface neighbors wrap within each boundary line
  CHECK(mesh.bnodes[0].left == nx - 1);
  CHECK(mesh.bnodes[0].right == 1);
  CHECK(mesh.bnodes[nx].left == 2 * nx - 1);
  CHECK(mesh.bnodes[nx].right == nx + 1);
  // every cell has four faces; interior cells have no boundary face
  for (int c = 0; c < mesh.n_cells; ++c) CHECK(mesh.cell_faces[c].size() == 4);
  CHECK_THROWS(make_strip_mesh(2, 4, 1.0, 1.0));
  CHECK_THROWS(make_strip_mesh(4, 4, -1.0, 1.0));
}

TEST_CASE("laplacian: linear field with consistent ghosts vanishes") {
  const Mesh mesh = make_interval_mesh(8, 1.0);
  const IntervalField f = sample_interval(mesh, 1.0, [](double y) { return 3.0 * y - 1.0; });
  const Mat lap = laplacian_apply(mesh, f.values, Vec::Constant(1, 2.0), f.ghosts);
  CHECK(lap.lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("laplacian: exact on quadratics, result 2d everywhere") {
  const Mesh mesh = make_interval_mesh(16, 1.0);
  const IntervalField f = sample_interval(mesh, 1.0, [](double y) { return y * y; });
  const Mat lap = laplacian_apply(mesh, f.values, Vec::Constant(1, 0.7), f.ghosts);
  for (int c = 0; c < mesh.n_cells; ++c)
    CHECK(lap(c, 0) == doctest::Approx(1.4).epsilon(1e-11));
}

TEST_CASE("laplacian: refinement order at least 1.9 on a sine profile") {
  const double e1 = laplacian_error(20, 1.0);
  const double e2 = laplacian_error(40, 1.0);
  const double e3 = laplacian_error(80, 1.0);
  CHECK(observed_order(e1, e2) >= 1.9);
  CHECK(observed_order(e2, e3) >= 1.9);
}

TEST_CASE("laplacian: discrete divergence theorem on random data") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Mesh mesh = make_strip_mesh(5, 7, 1.3, 0.9);
  Mat f(mesh.n_cells, 2), ghosts(mesh.n_bnodes(), 2);
  for (int c = 0; c < mesh.n_cells; ++c)
    for (int s = 0; s < 2; ++s) f(c, s) = u(rng);
  for (int k = 0; k < mesh.n_bnodes(); ++k)
    for (int s = 0; s < 2; ++s) ghosts(k, s) = u(rng);
  Vec d(2);
  d << 0.5, 2.0;
  const Mat lap = laplacian_apply(mesh, f, d, ghosts);
  for (int s = 0; s < 2; ++s) {
    const double volume_sum = mesh.cell_volume * lap.col(s).sum();
    // interior faces cancel pairwise; only boundary faces survive
    double boundary_sum = 0.0;
    for (int c = 0; c < mesh.n_cells; ++c)
      for (const Mesh::Face& face : mesh.cell_faces[c])
        if (face.neighbor < 0)
          boundary_sum +=
              mesh.cell_volume * d[s] * (ghosts(face.bnode, s) - f(c, s)) * face.inv_h2;
    CHECK(volume_sum == doctest::Approx(boundary_sum).epsilon(1e-12));
  }
}

TEST_CASE("laplacian: linear in its arguments") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const Mesh mesh = make_interval_mesh(9, 1.0);
  Mat f(mesh.n_cells, 1), g(mesh.n_cells, 1), gf(2, 1), gg(2, 1);
  for (int c = 0; c < mesh.n_cells; ++c) {
    f(c, 0) = u(rng);
    g(c, 0) = u(rng);
  }
  for (int k = 0; k < 2; ++k) {
    gf(k, 0) = u(rng);
    gg(k, 0) = u(rng);
  }
  const Vec d = Vec::Constant(1, 1.7);
  const double a = 2.5, b = -0.75;
  const Mat lhs = laplacian_apply(mesh, a * f + b * g, d, a * gf + b * gg);
  const Mat rhs =
      a * laplacian_apply(mesh, f, d, gf) + b * laplacian_apply(mesh, g, d, gg);
  CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("laplacian rejects mismatched ghost tables") {
  const Mesh mesh = make_interval_mesh(5, 1.0);
  const Mat f = Mat::Ones(5, 1);
  CHECK_THROWS(laplacian_apply(mesh, f, Vec::Constant(1, 1.0), Mat::Ones(1, 1)));
  CHECK_THROWS(laplacian_apply(mesh, Mat::Ones(4, 1), Vec::Constant(1, 1.0), Mat::Ones(2, 1)));
}

TEST_CASE("surface laplacian: constants and interval geometry give zero") {
  const Mesh strip = make_strip_mesh(6, 3, 1.0, 1.0);
  CHECK(surface_laplacian_apply(strip, Vec::Constant(strip.n_bnodes(), 4.2)).isZero(1e-12));
  const Mesh interval = make_interval_mesh(5, 1.0);
  Vec g(2);
  g << 1.0, -3.0;
  CHECK(surface_laplacian_apply(interval, g).isZero());
}

TEST_CASE("surface laplacian: node sum vanishes by periodicity") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Mesh mesh = make_strip_mesh(7, 3, 2.0, 1.0);
  Vec g(mesh.n_bnodes());
  for (int k = 0; k < g.size(); ++k) g[k] = u(rng);
  const Vec lap = surface_laplacian_apply(mesh, g);
  CHECK(std::abs(lap.head(7).sum()) <= 1e-12);
  CHECK(std::abs(lap.tail(7).sum()) <= 1e-12);
}

TEST_CASE("surface laplacian: refinement order at least 1.9 on a sine profile") {
  const double e1 = surface_laplacian_error(16);
  const double e2 = surface_laplacian_error(32);
  const double e3 = surface_laplacian_error(64);
  CHECK(observed_order(e1, e2) >= 1.9);
  CHECK(observed_order(e2, e3) >= 1.9);
}

TEST_CASE("boundary trace: exact for constant and affine fields") {
  const Mesh mesh = make_interval_mesh(6, 1.0);
  const IntervalField cst = sample_interval(mesh, 1.0, [](double) { return 2.5; });
  const Mat tc = boundary_trace(mesh, cst.values);
  CHECK(tc(0, 0) == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(tc(1, 0) == doctest::Approx(2.5).epsilon(1e-14));
  const IntervalField aff = sample_interval(mesh, 1.0, [](double y) { return 2.0 * y - 1.0; });
  const Mat ta = boundary_trace(mesh, aff.values);
  CHECK(ta(0, 0) == doctest::Approx(-1.0).epsilon(1e-13));
  CHECK(ta(1, 0) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("boundary trace: refinement order at least 1.9 on a cubic") {
  const double e1 = trace_error(20);
  const double e2 = trace_error(40);
  const double e3 = trace_error(80);
  CHECK(observed_order(e1, e2) >= 1.9);
  CHECK(observed_order(e2, e3) >= 1.9);
}

TEST_CASE("normal flux: constant field gives zero, affine field gives +d/-d") {
  const Mesh mesh = make_interval_mesh(6, 1.0);
  const IntervalField cst = sample_interval(mesh, 1.0, [](double) { return 3.0; });
  CHECK(normal_flux(mesh, cst.values, Vec::Constant(1, 2.0)).lpNorm<Eigen::Infinity>() <=
        1e-12);
  const IntervalField lin = sample_interval(mesh, 1.0, [](double y) { return y; });
  const Mat flux = normal_flux(mesh, lin.values, Vec::Constant(1, 2.0));
  // positive flux leaves the domain: +d at y = 0, -d at y = L
  CHECK(flux(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(flux(1, 0) == doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("normal flux: refinement order at least 1.9 on a sine profile") {
  const double e1 = flux_error(20);
  const double e2 = flux_error(40);
  const double e3 = flux_error(80);
  CHECK(observed_order(e1, e2) >= 1.9);
  CHECK(observed_order(e2, e3) >= 1.9);
}

TEST_CASE("quadrature: constants integrate exactly") {
  const Mesh interval = make_interval_mesh(9, 2.5);
  CHECK(integrate_bulk(interval, Vec::Ones(9)) == doctest::Approx(2.5).epsilon(1e-14));
  const Mesh strip = make_strip_mesh(4, 5, 1.5, 0.8);
  CHECK(integrate_bulk(strip, Vec::Ones(20)) == doctest::Approx(1.2).epsilon(1e-14));
  CHECK(integrate_surface(strip, Vec::Ones(8)) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("quadrature: sin^2 average converges to L/2") {
  auto quad_error = [](int n) {
    const Mesh mesh = make_interval_mesh(n, 1.0);
    Vec v(n);
    for (int c = 0; c < n; ++c) {
      const double s = std::sin(2.0 * kPi * mesh.cell_pos(c, 0));
      v[c] = s * s;
    }
    return std::abs(integrate_bulk(mesh, v) - 0.5);
  };
  const double e1 = quad_error(10);
  CHECK(e1 <= 1e-12);  // midpoint rule is exact here by symmetry
  CHECK(quad_error(16) <= 1e-12);
}

TEST_CASE("quadrature rejects size mismatches") {
  const Mesh mesh = make_interval_mesh(5, 1.0);
  CHECK_THROWS(integrate_bulk(mesh, Vec::Ones(4)));
  CHECK_THROWS(integrate_surface(mesh, Vec::Ones(3)));
}
