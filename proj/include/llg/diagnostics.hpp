#pragma once

// Energy, error norms, order fitting and wall tracking.

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "llg/fields.hpp"
#include "llg/mesh.hpp"
#include "llg/order_fit.hpp"
#include "llg/stencils.hpp"

namespace llg {

/// Dimensionless energy contributions; multiply by mu0 Ms^2 / 2 for joules.
struct EnergyBreakdown {
  double exchange = 0.0;
  double anisotropy = 0.0;
  double zeeman = 0.0;
  double stray = 0.0;
  double total = 0.0;

  EnergyBreakdown scaled(double factor) const {
    return {exchange * factor, anisotropy * factor, zeeman * factor, stray * factor, total * factor};
  }
};

/// Midpoint-rule quadrature of
///   eps |grad m|^2 + q (m2^2 + m3^2) - 2 h_e.m - h_s.m.
/// `h_s` is ignored unless the stray field is enabled.
inline EnergyBreakdown energy(const VectorField& m, const ModelParams& p, const VectorField* h_s,
                              StencilOrder order = StencilOrder::Second) {
  MeshSpec mesh = m.mesh();
  mesh.ghost_depth = std::max(mesh.ghost_depth, required_ghost_depth(order));
  VectorField work(mesh);
  copy_interior(m, work);
  fill_ghosts(work);
  const ScalarField grad = gradient_norm_sq(work, order);
  const bool stray = p.stray_enabled && h_s != nullptr;
  if (stray && h_s->mesh().dims != mesh.dims) throw std::invalid_argument("energy: stray field mesh mismatch");

  EnergyBreakdown e;
  for_each_cell(mesh, [&](int i, int j, int l) {
    const Vec3 v = at(m, i, j, l);
    e.exchange += p.epsilon * grad(0, i, j, l);
    e.anisotropy += p.aniso_q * (v[1] * v[1] + v[2] * v[2]);
    e.zeeman -= 2.0 * dot(p.h_ext, v);
    if (stray) e.stray -= dot(at(*h_s, i, j, l), v);
  });
  const double vol = mesh.cell_volume();
  e.exchange *= vol;
  e.anisotropy *= vol;
  e.zeeman *= vol;
  e.stray *= vol;
  e.total = e.exchange + e.anisotropy + e.zeeman + e.stray;
  return e;
}

struct ErrorNorms {
  double linf = 0.0;
  double l2 = 0.0;
  double h1 = 0.0;
};

/// Norms of e = m - exact at cell centers. The H1 norm includes the L2 part.
inline ErrorNorms error_norms(const VectorField& m, const VectorField& exact, StencilOrder order = StencilOrder::Second) {
  if (m.mesh().dims != exact.mesh().dims) throw std::invalid_argument("error_norms: mesh mismatch");
  MeshSpec mesh = m.mesh();
  mesh.ghost_depth = std::max(mesh.ghost_depth, required_ghost_depth(order));
  VectorField e(mesh);
  for_each_cell(mesh, [&](int i, int j, int l) {
    for (int c = 0; c < 3; ++c) e(c, i, j, l) = m(c, i, j, l) - exact(c, i, j, l);
  });
  fill_ghosts(e);
  const ScalarField grad = gradient_norm_sq(e, order);
  ErrorNorms out;
  double sum = 0.0, gsum = 0.0;
  for_each_cell(mesh, [&](int i, int j, int l) {
    const double n2 = dot(at(e, i, j, l), at(e, i, j, l));
    out.linf = std::max(out.linf, std::sqrt(n2));
    sum += n2;
    gsum += grad(0, i, j, l);
  });
  const double vol = mesh.cell_volume();
  out.l2 = std::sqrt(vol * sum);
  out.h1 = std::sqrt(vol * (sum + gsum));
  return out;
}

inline ErrorNorms error_norms(const VectorField& m, const std::function<Vec3(double, double, double)>& sampler,
                              StencilOrder order = StencilOrder::Second) {
  const MeshSpec& mesh = m.mesh();
  VectorField exact(mesh);
  for_each_cell(mesh, [&](int i, int j, int l) {
    set(exact, mesh.offset(i, j, l), sampler(mesh.center(0, i), mesh.center(1, j), mesh.center(2, l)));
  });
  return error_norms(m, exact, order);
}

/// y/z-averaged first component along x.
inline std::vector<double> averaged_m1(const VectorField& m) {
  const MeshSpec& mesh = m.mesh();
  std::vector<double> avg(static_cast<std::size_t>(mesh.dims[0]), 0.0);
  for_each_cell(mesh, [&](int i, int j, int l) { avg[i] += m(0, i, j, l); });
  const double n = static_cast<double>(mesh.dims[1]) * mesh.dims[2];
  for (double& v : avg) v /= n;
  return avg;
}

/// Zero crossing of the averaged first component, by linear interpolation
/// between cell centers. Empty when there is no sign change.
inline std::optional<double> wall_position(const VectorField& m) {
  const MeshSpec& mesh = m.mesh();
  const std::vector<double> avg = averaged_m1(m);
  for (int i = 0; i + 1 < mesh.dims[0]; ++i) {
    const double a = avg[i], b = avg[i + 1];
    if (a == 0.0) return mesh.center(0, i);
    if ((a > 0.0) != (b > 0.0) && b != 0.0) {
      const double s = a / (a - b);
      return mesh.center(0, i) + s * mesh.spacing[0];
    }
    if (b == 0.0) return mesh.center(0, i + 1);
  }
  return std::nullopt;
}

/// In-plane angle atan2(m2, m1) per cell.
inline ScalarField angle_field(const VectorField& m) {
  ScalarField a(m.mesh());
  for_each_cell(m.mesh(), [&](int i, int j, int l) { a(0, i, j, l) = std::atan2(m(1, i, j, l), m(0, i, j, l)); });
  return a;
}

}  // namespace llg
