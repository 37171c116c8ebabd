#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "llg/fastsolve.hpp"

using namespace llg;
using Catch::Approx;

namespace {

Eigen::MatrixXd dense_1d(int n, double h, StencilOrder order) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  if (n == 1) return a;
  auto reflect = [n](int j) { return j < 0 ? -1 - j : (j >= n ? 2 * n - 1 - j : j); };
  const std::vector<std::pair<int, double>> w =
      order == StencilOrder::Second
          ? std::vector<std::pair<int, double>>{{-1, 1}, {0, -2}, {1, 1}}
          : std::vector<std::pair<int, double>>{{-2, -1}, {-1, 16}, {0, -30}, {1, 16}, {2, -1}};
  const double s = order == StencilOrder::Second ? 1 / (h * h) : 1 / (12 * h * h);
  for (int i = 0; i < n; ++i)
    for (auto [d, c] : w) a(i, reflect(i + d)) += c * s;
  return a;
}

// shift I - diffusion (Ax (+) Ay (+) Az), x fastest.
Eigen::MatrixXd dense_operator(const MeshSpec& m, StencilOrder order, double shift, double diffusion) {
  const int nx = m.dims[0], ny = m.dims[1], nz = m.dims[2], n = nx * ny * nz;
  const Eigen::MatrixXd ax = dense_1d(nx, m.spacing[0], order), ay = dense_1d(ny, m.spacing[1], order),
                        az = dense_1d(nz, m.spacing[2], order);
  Eigen::MatrixXd a = shift * Eigen::MatrixXd::Identity(n, n);
  auto id = [](int i) { return i; };
  for (int l = 0; l < nz; ++l)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const int r = i + nx * (j + ny * l);
        for (int i2 = 0; i2 < nx; ++i2) a(r, id(i2) + nx * (j + ny * l)) -= diffusion * ax(i, i2);
        for (int j2 = 0; j2 < ny; ++j2) a(r, i + nx * (j2 + ny * l)) -= diffusion * ay(j, j2);
        for (int l2 = 0; l2 < nz; ++l2) a(r, i + nx * (j + ny * l2)) -= diffusion * az(l, l2);
      }
  return a;
}

ScalarField random_field(const MeshSpec& m, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> U(-1, 1);
  ScalarField f(m);
  for_each_cell(m, [&](int i, int j, int l) { f(0, i, j, l) = U(rng); });
  return f;
}

}  // namespace

TEST_CASE("Laplacian symbols are the eigenvalues of the reflected stencils", "[fastsolve]") {
  for (int n = 2; n <= 8; ++n)
    for (StencilOrder order : {StencilOrder::Second, StencilOrder::Fourth}) {
      const double h = 0.7 / n;
      std::vector<double> sym = laplacian_symbol(n, h, order);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_1d(n, h, order));
      std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + n);
      std::sort(sym.begin(), sym.end());
      std::sort(ev.begin(), ev.end());
      for (int j = 0; j < n; ++j) CHECK(sym[j] == Approx(ev[j]).margin(1e-9 / (h * h)));
    }
}

TEST_CASE("symbol closed forms", "[fastsolve]") {
  const auto s2 = laplacian_symbol(4, 0.5, StencilOrder::Second);
  CHECK(s2[0] == 0.0);
  CHECK(s2[2] == Approx(-8.0));  // (2 cos(pi/2) - 2) / 0.25
  const auto s4 = laplacian_symbol(4, 0.5, StencilOrder::Fourth);
  CHECK(s4[2] == Approx((2.0 - 30.0) / 3.0));  // (-2 cos(pi) + 32 cos(pi/2) - 30) / 3
  CHECK(laplacian_symbol(1, 1.0, StencilOrder::Second) == std::vector<double>{0.0});
}

TEST_CASE("solve matches a dense direct solve", "[fastsolve]") {
  const std::vector<MeshSpec> meshes = {make_mesh({4, 4, 4}, {1, 1, 1}, 2), make_mesh({7, 1, 1}, {1, 1, 1}, 2),
                                        make_mesh({3, 5, 1}, {1, 0.6, 1}, 2), make_mesh({1, 2, 6}, {1, 1, 0.3}, 2)};
  for (const MeshSpec& m : meshes)
    for (StencilOrder order : {StencilOrder::Second, StencilOrder::Fourth})
      for (double shift : {1.0, 150.0}) {
        const double diffusion = 0.8;
        const HelmholtzPlan plan(m, order, shift, diffusion);
        const ScalarField rhs = random_field(m, 11);
        const ScalarField u = solve(plan, rhs);
        const Eigen::MatrixXd a = dense_operator(m, order, shift, diffusion);
        Eigen::VectorXd b(m.cell_count());
        std::size_t n = 0;
        for_each_cell(m, [&](int i, int j, int l) { b(n++) = rhs(0, i, j, l); });
        const Eigen::VectorXd x = a.partialPivLu().solve(b);
        n = 0;
        double err = 0, scale = 0;
        for_each_cell(m, [&](int i, int j, int l) {
          err = std::max(err, std::abs(u(0, i, j, l) - x(n)));
          scale = std::max(scale, std::abs(x(n++)));
        });
        CHECK(err <= 1e-12 * scale);
      }
}

TEST_CASE("solve inverts apply_helmholtz", "[fastsolve]") {
  const MeshSpec m = make_mesh({6, 5, 4}, {1, 1, 1}, 2);
  for (StencilOrder order : {StencilOrder::Second, StencilOrder::Fourth}) {
    const HelmholtzPlan plan(m, order, 3.0, 0.1);
    const ScalarField rhs = random_field(m, 5);
    const ScalarField u = solve(plan, rhs);
    const ScalarField back = apply_helmholtz(plan, u);
    for_each_cell(m, [&](int i, int j, int l) { CHECK(back(0, i, j, l) == Approx(rhs(0, i, j, l)).margin(1e-11)); });
  }
}

TEST_CASE("solution operator is self-adjoint", "[fastsolve]") {
  const MeshSpec m = make_mesh({5, 4, 3}, {1, 0.8, 0.6}, 2);
  for (StencilOrder order : {StencilOrder::Second, StencilOrder::Fourth}) {
    const HelmholtzPlan plan(m, order, 2.0, 0.5);
    const ScalarField a = random_field(m, 1), b = random_field(m, 2);
    const ScalarField sa = solve(plan, a), sb = solve(plan, b);
    double ab = 0, ba = 0;
    for_each_cell(m, [&](int i, int j, int l) {
      ab += sa(0, i, j, l) * b(0, i, j, l);
      ba += a(0, i, j, l) * sb(0, i, j, l);
    });
    CHECK(ab == Approx(ba).epsilon(1e-12));
  }
}

TEST_CASE("vector solve equals per-component scalar solves", "[fastsolve]") {
  const MeshSpec m = make_mesh({4, 3, 5}, {1, 1, 1});
  const HelmholtzPlan plan(m, StencilOrder::Second, 1.5, 1.0);
  VectorField v(m);
  std::array<ScalarField, 3> parts;
  for (int c = 0; c < 3; ++c) {
    parts[c] = random_field(m, 20 + c);
    for_each_cell(m, [&](int i, int j, int l) { v(c, i, j, l) = parts[c](0, i, j, l); });
  }
  const VectorField sv = solve_vector(plan, v);
  for (int c = 0; c < 3; ++c) {
    const ScalarField s = solve(plan, parts[c]);
    for_each_cell(m, [&](int i, int j, int l) { CHECK(sv(c, i, j, l) == s(0, i, j, l)); });
  }
}

TEST_CASE("constant right-hand side gives constant solution", "[fastsolve]") {
  const MeshSpec m = make_mesh({8, 8, 1}, {1, 1, 1});
  const HelmholtzPlan plan(m, StencilOrder::Second, 4.0, 10.0);
  ScalarField rhs(m);
  rhs.fill(2.0);
  const ScalarField u = solve(plan, rhs);
  for_each_cell(m, [&](int i, int j, int l) { CHECK(u(0, i, j, l) == Approx(0.5).epsilon(1e-13)); });
}

TEST_CASE("plan rejects bad parameters", "[fastsolve]") {
  const MeshSpec m = make_mesh({4, 1, 1}, {1, 1, 1});
  CHECK_THROWS_AS(HelmholtzPlan(m, StencilOrder::Second, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(HelmholtzPlan(m, StencilOrder::Second, 1.0, -1.0), std::invalid_argument);
  const HelmholtzPlan plan(m, StencilOrder::Second, 1.0, 1.0);
  CHECK_THROWS_AS(solve(plan, ScalarField(make_mesh({5, 1, 1}, {1, 1, 1}))), std::invalid_argument);
}
