#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "llg/fields.hpp"

using namespace llg;
using Catch::Approx;

namespace {

constexpr double pi = std::numbers::pi;

// Aharoni's closed form for the z factor of a 2a x 2b x 2c prism.
double aharoni_dz(double a, double b, double c) {
  const double r = std::sqrt(a * a + b * b + c * c);
  const double ab = std::sqrt(a * a + b * b), bc = std::sqrt(b * b + c * c), ac = std::sqrt(a * a + c * c);
  double s = (b * b - c * c) / (2 * b * c) * std::log((r - a) / (r + a));
  s += (a * a - c * c) / (2 * a * c) * std::log((r - b) / (r + b));
  s += b / (2 * c) * std::log((ab + a) / (ab - a));
  s += a / (2 * c) * std::log((ab + b) / (ab - b));
  s += c / (2 * a) * std::log((bc - b) / (bc + b));
  s += c / (2 * b) * std::log((ac - a) / (ac + a));
  s += 2 * std::atan(a * b / (c * r));
  s += (a * a * a + b * b * b - 2 * c * c * c) / (3 * a * b * c);
  s += (a * a + b * b - 2 * c * c) / (3 * a * b * c) * r;
  s += c / (a * b) * (ac + bc);
  s -= (std::pow(ab, 3) + std::pow(bc, 3) + std::pow(ac, 3)) / (3 * a * b * c);
  return s / pi;
}

VectorField random_vectors(const MeshSpec& m, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> U(-1, 1);
  VectorField f(m);
  for_each_cell(m, [&](int i, int j, int l) {
    for (int c = 0; c < 3; ++c) f(c, i, j, l) = U(rng);
  });
  return f;
}

VectorField direct_stray(const VectorField& m) {
  const MeshSpec& mesh = m.mesh();
  VectorField h(mesh);
  for_each_cell(mesh, [&](int i, int j, int l) {
    Vec3 acc{0, 0, 0};
    for_each_cell(mesh, [&](int a, int b, int c) {
      const SymTensor t =
          demag_tensor({(i - a) * mesh.spacing[0], (j - b) * mesh.spacing[1], (l - c) * mesh.spacing[2]}, mesh.spacing);
      const Vec3 v = at(m, a, b, c);
      acc[0] -= t.xx * v[0] + t.xy * v[1] + t.xz * v[2];
      acc[1] -= t.xy * v[0] + t.yy * v[1] + t.yz * v[2];
      acc[2] -= t.xz * v[0] + t.yz * v[1] + t.zz * v[2];
    });
    set(h, mesh.offset(i, j, l), acc);
  });
  return h;
}

double max_diff(const VectorField& a, const VectorField& b) {
  double e = 0;
  for_each_cell(a.mesh(), [&](int i, int j, int l) {
    for (int c = 0; c < 3; ++c) e = std::max(e, std::abs(a(c, i, j, l) - b(c, i, j, l)));
  });
  return e;
}

}  // namespace

TEST_CASE("reduced constants", "[fields]") {
  const double ms = 8e5, cex = 1.3e-11, ku = 100, l = 1e-7;
  const ReducedConstants r = nondimensionalize(cex, ku, ms, l);
  const double mu = 4e-7 * pi;
  CHECK(r.epsilon == Approx(cex / (mu * ms * ms * l * l)));
  CHECK(r.epsilon == Approx(1.6165e-3).epsilon(1e-3));
  CHECK(r.q == Approx(1.2434e-4).epsilon(1e-3));
  CHECK(time_unit_seconds(ms, 1.76e11) == Approx(5.6518e-12).epsilon(1e-4));
  CHECK(tesla_to_reduced(5e-3, ms) == Approx(4.9736e-3).epsilon(1e-4));
  CHECK_THROWS_AS(nondimensionalize(-1, ku, ms, l), std::invalid_argument);
  CHECK_NOTHROW(nondimensionalize(cex, 0.0, ms, l));
}

TEST_CASE("self demagnetizing factors match Aharoni", "[fields][demag]") {
  const SymTensor cube = demag_tensor({0, 0, 0}, {1, 1, 1});
  CHECK(cube.xx == Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(cube.zz == Approx(aharoni_dz(0.5, 0.5, 0.5)).epsilon(1e-10));
  CHECK(std::abs(cube.xy) < 1e-14);
  for (Vec3 cell : {Vec3{1, 1, 2}, Vec3{1, 1, 5}, Vec3{2, 1, 0.3}, Vec3{6.25, 1.5625, 1}}) {
    const SymTensor t = demag_tensor({0, 0, 0}, cell);
    CHECK(t.trace() == Approx(1.0).epsilon(1e-12));
    CHECK(t.zz == Approx(aharoni_dz(cell[0] / 2, cell[1] / 2, cell[2] / 2)).epsilon(1e-9));
    CHECK(t.xx == Approx(aharoni_dz(cell[1] / 2, cell[2] / 2, cell[0] / 2)).epsilon(1e-9));
  }
}

TEST_CASE("far-field tensor approaches the point dipole", "[fields][demag]") {
  const Vec3 cell{1, 0.5, 0.25};
  for (Vec3 lag : {Vec3{20, 0, 0}, Vec3{0, 15, 7}, Vec3{12, -9, 4}}) {
    const SymTensor n = newell_tensor(lag, cell), d = dipole_tensor(lag, cell);
    const double scale = std::abs(d.xx) + std::abs(d.yy) + std::abs(d.zz);
    for (auto [a, b] : {std::pair{n.xx, d.xx}, {n.yy, d.yy}, {n.zz, d.zz}, {n.xy, d.xy}, {n.xz, d.xz}, {n.yz, d.yz}})
      CHECK(std::abs(a - b) < 0.01 * scale);
  }
  // continuity across the switch
  const double r = kDipoleCutoffCells;
  const SymTensor in = demag_tensor({r * 0.999, 0, 0}, {1, 1, 1}), out = demag_tensor({r * 1.001, 0, 0}, {1, 1, 1});
  CHECK(in.xx == Approx(out.xx).epsilon(1e-2));
}

TEST_CASE("tensor symmetries", "[fields][demag]") {
  const Vec3 cell{1, 0.7, 0.4};
  const SymTensor a = newell_tensor({2, 1.4, 0.8}, cell), b = newell_tensor({-2, 1.4, 0.8}, cell);
  CHECK(a.xx == Approx(b.xx));
  CHECK(a.xy == Approx(-b.xy));
  CHECK(a.xz == Approx(-b.xz));
  CHECK(a.yz == Approx(b.yz));
}

TEST_CASE("spectral stray field equals direct convolution", "[fields][demag]") {
  for (Index3 d : {Index3{4, 3, 2}, Index3{5, 1, 1}, Index3{1, 3, 4}, Index3{3, 3, 3}, Index3{6, 4, 1}}) {
    const MeshSpec m = make_mesh(d, {d[0] * 1.0, d[1] * 0.7, d[2] * 0.4});
    const auto kernel = build_demag_kernel(m);
    DemagWorkspace ws;
    VectorField h(m);
    // Repeated evaluations share one workspace.
    for (unsigned seed : {1u, 2u, 3u}) {
      const VectorField mag = random_vectors(m, seed);
      stray_field_into(*kernel, mag, h, ws);
      const VectorField ref = direct_stray(mag);
      CHECK(max_diff(h, ref) < 1e-12);
    }
  }
}

TEST_CASE("single cubic cell", "[fields][demag]") {
  const MeshSpec m = make_mesh({1, 1, 1}, {1, 1, 1});
  const VectorField h = stray_field(*build_demag_kernel(m), fill_value(m, {1, 0, 0}));
  CHECK(h(0, 0, 0, 0) == Approx(-1.0 / 3.0).epsilon(1e-12));
  CHECK(std::abs(h(1, 0, 0, 0)) < 1e-14);
  CHECK(std::abs(h(2, 0, 0, 0)) < 1e-14);
}

TEST_CASE("stray field accepts fields with different ghost depths", "[fields][demag]") {
  const MeshSpec m1 = make_mesh({4, 4, 2}, {1, 1, 0.5}, 1), m2 = make_mesh({4, 4, 2}, {1, 1, 0.5}, 2);
  const auto kernel = build_demag_kernel(m1);
  const VectorField a = random_vectors(m1, 9);
  VectorField b(m2);
  copy_interior(a, b);
  const VectorField ha = stray_field(*kernel, a), hb = stray_field(*kernel, b);
  CHECK(max_diff(ha, hb) < 1e-15);
}

TEST_CASE("stray field is linear with nonnegative energy", "[fields][demag]") {
  const MeshSpec m = make_mesh({5, 4, 3}, {1, 0.8, 0.3});
  const auto kernel = build_demag_kernel(m);
  const VectorField a = random_vectors(m, 4), b = random_vectors(m, 5);
  VectorField c(m);
  for_each_cell(m, [&](int i, int j, int l) {
    for (int q = 0; q < 3; ++q) c(q, i, j, l) = 2 * a(q, i, j, l) - 3 * b(q, i, j, l);
  });
  const VectorField ha = stray_field(*kernel, a), hb = stray_field(*kernel, b), hc = stray_field(*kernel, c);
  VectorField combo(m);
  for_each_cell(m, [&](int i, int j, int l) {
    for (int q = 0; q < 3; ++q) combo(q, i, j, l) = 2 * ha(q, i, j, l) - 3 * hb(q, i, j, l);
  });
  CHECK(max_diff(hc, combo) < 1e-12);
  for (const VectorField* v : std::initializer_list<const VectorField*>{&a, &b, &c}) {
    const VectorField h = stray_field(*kernel, *v);
    double e = 0;
    for_each_cell(m, [&](int i, int j, int l) { e -= dot(at(h, i, j, l), at(*v, i, j, l)); });
    CHECK(e >= 0);
  }
}

TEST_CASE("uniform thin film is close to the slab limit", "[fields][demag]") {
  const MeshSpec m = make_mesh({32, 32, 1}, {1, 1, 0.01});
  const VectorField h = stray_field(*build_demag_kernel(m), fill_value(m, {0, 0, 1}));
  CHECK(h(2, 16, 16, 0) == Approx(-1.0).margin(0.03));
}

TEST_CASE("source term", "[fields]") {
  const MeshSpec m = make_mesh({2, 1, 1}, {1, 1, 1});
  ModelParams p;
  p.aniso_q = 0.5;
  p.h_ext = {0.1, 0.2, 0.3};
  VectorField mag(m);
  set(mag, m.offset(0, 0, 0), {0.6, 0.8, 0});
  set(mag, m.offset(1, 0, 0), {0, 0, 1});
  const VectorField f = source_term(p, mag, nullptr);
  CHECK(at(f, 0, 0, 0)[0] == Approx(0.1));
  CHECK(at(f, 0, 0, 0)[1] == Approx(0.2 - 0.4));
  CHECK(at(f, 0, 0, 0)[2] == Approx(0.3));
  CHECK(at(f, 1, 0, 0)[2] == Approx(0.3 - 0.5));

  VectorField hs = fill_value(m, {1, 1, 1});
  p.stray_enabled = true;
  const VectorField g = source_term(p, mag, &hs);
  CHECK(at(g, 1, 0, 0)[0] == Approx(1.1));
}

TEST_CASE("manufactured solution", "[fields]") {
  for (int dim : {1, 3}) {
    const ManufacturedSolution sol(dim);
    const double x = 0.3, y = 0.45, z = 0.7;
    // unit length
    CHECK(norm(sol.value(x, y, z, 0.37)) == Approx(1.0).epsilon(1e-15));
    // at t = 0 the state is uniform, so g = m_t
    const Vec3 g0 = sol.forcing(10.0, x, y, z, 0.0);
    const Vec3 mt0 = sol.value(x, y, z, 1e-7);
    for (int c = 0; c < 2; ++c) CHECK(g0[c] == Approx(mt0[c] / 1e-7).epsilon(1e-6));
    CHECK(std::abs(g0[2]) < 1e-12);

    // finite-difference residual of m_t - alpha Lap m - alpha |grad m|^2 m + m x Lap m
    const double alpha = 3.0, t = 0.41, d = 1e-3;
    auto m = [&](double a, double b, double c) { return sol.value(a, b, c, t); };
    const Vec3 m0 = m(x, y, z);
    Vec3 lap{0, 0, 0}, mt{0, 0, 0};
    double grad2 = 0;
    const int axes = dim;
    for (int a = 0; a < axes; ++a) {
      Vec3 e{0, 0, 0};
      e[a] = d;
      const Vec3 p = m(x + e[0], y + e[1], z + e[2]), q = m(x - e[0], y - e[1], z - e[2]);
      for (int c = 0; c < 3; ++c) {
        lap[c] += (p[c] - 2 * m0[c] + q[c]) / (d * d);
        const double s = (p[c] - q[c]) / (2 * d);
        grad2 += s * s;
      }
    }
    const Vec3 tp = sol.value(x, y, z, t + d), tm = sol.value(x, y, z, t - d);
    for (int c = 0; c < 3; ++c) mt[c] = (tp[c] - tm[c]) / (2 * d);
    const Vec3 mxl = cross(m0, lap);
    const Vec3 g = sol.forcing(alpha, x, y, z, t);
    for (int c = 0; c < 3; ++c)
      CHECK(g[c] == Approx(mt[c] - alpha * lap[c] - alpha * grad2 * m0[c] + mxl[c]).margin(1e-4));
  }
  CHECK_THROWS_AS(ManufacturedSolution(2), std::invalid_argument);
}

TEST_CASE("manufactured solution satisfies the Neumann condition", "[fields]") {
  const ManufacturedSolution sol(3);
  const double d = 1e-6;
  for (double t : {0.2, 0.9}) {
    const Vec3 a = sol.value(d, 0.3, 0.6, t), b = sol.value(-d, 0.3, 0.6, t);
    const Vec3 c = sol.value(0.4, 1 + d, 0.6, t), e = sol.value(0.4, 1 - d, 0.6, t);
    for (int q = 0; q < 3; ++q) {
      CHECK(std::abs(a[q] - b[q]) / (2 * d) < 1e-6);
      CHECK(std::abs(c[q] - e[q]) / (2 * d) < 1e-6);
    }
  }
}
