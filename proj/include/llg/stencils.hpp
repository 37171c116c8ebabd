#pragma once

// Ghost-cell boundary treatment and centered finite-difference operators.
//
// Homogeneous Neumann conditions are imposed by even reflection across each
// boundary face: m_0 = m_1, m_{-1} = m_2, m_{N+1} = m_N, m_{N+2} = m_{N-1}
// in 1-based interior numbering. Operators read ghosts but never write them,
// so callers fill ghosts first.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "llg/mesh.hpp"
#include "llg/order_fit.hpp"

namespace llg {

enum class StencilOrder { Second, Fourth };

inline int required_ghost_depth(StencilOrder order) { return order == StencilOrder::Fourth ? 2 : 1; }

inline void check_stencil_support(const MeshSpec& mesh, StencilOrder order) {
  if (mesh.active_axes() > 0 && mesh.ghost_depth < required_ghost_depth(order))
    throw std::invalid_argument("fourth-order stencils need ghost_depth = 2");
}

template <int NC>
void fill_ghosts(Field<NC>& f) {
  const MeshSpec& m = f.mesh();
  // Axis order x, y, z over the full padded extent of the other two axes,
  // so edge and corner ghosts come out as sequential face reflections.
  for (int a = 0; a < 3; ++a) {
    if (!m.active(a)) continue;
    const int b = (a + 1) % 3, c = (a + 2) % 3;
    const int g = m.ghost(a), n = m.dims[a];
    const std::ptrdiff_t sa = m.stride(a), sb = m.stride(b), sc = m.stride(c);
    for (int comp = 0; comp < NC; ++comp) {
      double* u = f.component(comp);
      for (int pc = 0; pc < m.padded(c); ++pc)
        for (int pb = 0; pb < m.padded(b); ++pb) {
          double* line = u + pb * sb + pc * sc;
          for (int d = 1; d <= g; ++d) {
            line[(g - d) * sa] = line[(g + d - 1) * sa];
            line[(g + n - 1 + d) * sa] = line[(g + n - d) * sa];
          }
        }
    }
  }
}

namespace detail {

/// Calls fn(offset) for every interior cell, row by row.
template <class Fn>
void for_each_interior_offset(const MeshSpec& m, Fn&& fn) {
  for (int l = 0; l < m.dims[2]; ++l)
    for (int j = 0; j < m.dims[1]; ++j) {
      const std::size_t row = m.offset(0, j, l);
      for (int i = 0; i < m.dims[0]; ++i) fn(row + static_cast<std::size_t>(i));
    }
}

struct AxisStencil {
  std::ptrdiff_t stride;
  double inv_h2;  // 1/h^2, or 1/(12 h^2) for the long stencil
  double inv_h;   // 1/(2h), or 1/(12 h)
};

inline std::vector<AxisStencil> active_stencils(const MeshSpec& m, StencilOrder order) {
  std::vector<AxisStencil> out;
  for (int a = 0; a < 3; ++a) {
    if (!m.active(a)) continue;
    const double h = m.spacing[a];
    if (order == StencilOrder::Second)
      out.push_back({m.stride(a), 1.0 / (h * h), 1.0 / (2.0 * h)});
    else
      out.push_back({m.stride(a), 1.0 / (12.0 * h * h), 1.0 / (12.0 * h)});
  }
  return out;
}

inline double lap_at(const double* u, std::size_t o, std::span<const AxisStencil> axes, StencilOrder order) {
  double acc = 0.0;
  if (order == StencilOrder::Second) {
    for (const auto& ax : axes) {
      const std::ptrdiff_t s = ax.stride;
      acc += (u[o + s] - 2.0 * u[o] + u[o - s]) * ax.inv_h2;
    }
  } else {
    for (const auto& ax : axes) {
      const std::ptrdiff_t s = ax.stride;
      acc += (-u[o + 2 * s] + 16.0 * u[o + s] - 30.0 * u[o] + 16.0 * u[o - s] - u[o - 2 * s]) * ax.inv_h2;
    }
  }
  return acc;
}

inline double slope_at(const double* u, std::size_t o, const AxisStencil& ax, StencilOrder order) {
  const std::ptrdiff_t s = ax.stride;
  if (order == StencilOrder::Second) return (u[o + s] - u[o - s]) * ax.inv_h;
  return (-u[o + 2 * s] + 8.0 * u[o + s] - 8.0 * u[o - s] + u[o - 2 * s]) * ax.inv_h;
}

}  // namespace detail

/// Discrete Laplacian on interior cells; `out` ghosts are left untouched.
template <int NC>
void laplacian_into(const Field<NC>& in, StencilOrder order, Field<NC>& out) {
  const MeshSpec& m = in.mesh();
  check_stencil_support(m, order);
  if (!m.same_grid(out.mesh())) throw std::invalid_argument("laplacian: mesh mismatch");
  const auto axes = detail::active_stencils(m, order);
  for (int c = 0; c < NC; ++c) {
    const double* u = in.component(c);
    double* r = out.component(c);
    detail::for_each_interior_offset(m, [&](std::size_t o) { r[o] = detail::lap_at(u, o, axes, order); });
  }
}

template <int NC>
Field<NC> laplacian(const Field<NC>& in, StencilOrder order) {
  Field<NC> out(in.mesh());
  laplacian_into(in, order, out);
  return out;
}

/// Sum over axes and components of squared centered slopes.
template <int NC>
void gradient_norm_sq_into(const Field<NC>& in, StencilOrder order, ScalarField& out) {
  const MeshSpec& m = in.mesh();
  check_stencil_support(m, order);
  if (!m.same_grid(out.mesh())) throw std::invalid_argument("gradient_norm_sq: mesh mismatch");
  const auto axes = detail::active_stencils(m, order);
  double* r = out.component(0);
  detail::for_each_interior_offset(m, [&](std::size_t o) { r[o] = 0.0; });
  for (int c = 0; c < NC; ++c) {
    const double* u = in.component(c);
    detail::for_each_interior_offset(m, [&](std::size_t o) {
      double acc = 0.0;
      for (const auto& ax : axes) {
        const double d = detail::slope_at(u, o, ax, order);
        acc += d * d;
      }
      r[o] += acc;
    });
  }
}

template <int NC>
ScalarField gradient_norm_sq(const Field<NC>& in, StencilOrder order) {
  ScalarField out(in.mesh());
  gradient_norm_sq_into(in, order, out);
  return out;
}

/// Centered slope of component `c` along `axis`, interior cells only.
inline ScalarField partial_derivative(const ScalarField& in, int axis, StencilOrder order) {
  const MeshSpec& m = in.mesh();
  check_stencil_support(m, order);
  ScalarField out(m);
  if (!m.active(axis)) return out;
  const double h = m.spacing[axis];
  const detail::AxisStencil ax{m.stride(axis), 0.0, order == StencilOrder::Second ? 1.0 / (2.0 * h) : 1.0 / (12.0 * h)};
  const double* u = in.component(0);
  double* r = out.component(0);
  detail::for_each_interior_offset(m, [&](std::size_t o) { r[o] = detail::slope_at(u, o, ax, order); });
  return out;
}

struct OrderProbe {
  double order = 0.0;
  bool exact = false;  // every error at round-off level
  std::vector<double> steps;
  std::vector<double> errors;
};

/// Applies `op` to `sample` on each mesh, measures the max interior error
/// against `exact`, and fits the convergence order in the largest spacing.
inline OrderProbe operator_order_probe(const std::function<ScalarField(const ScalarField&)>& op,
                                       const std::function<double(double, double, double)>& sample,
                                       const std::function<double(double, double, double)>& exact,
                                       std::span<const MeshSpec> meshes) {
  if (meshes.size() < 2) throw std::invalid_argument("operator_order_probe: need at least two meshes");
  OrderProbe probe;
  double scale = 0.0;
  for (const MeshSpec& m : meshes) {
    ScalarField f(m);
    for_each_cell(m, [&](int i, int j, int l) {
      f(0, i, j, l) = sample(m.center(0, i), m.center(1, j), m.center(2, l));
    });
    fill_ghosts(f);
    const ScalarField r = op(f);
    double err = 0.0;
    for_each_cell(m, [&](int i, int j, int l) {
      const double e = exact(m.center(0, i), m.center(1, j), m.center(2, l));
      scale = std::max(scale, std::abs(e));
      err = std::max(err, std::abs(r(0, i, j, l) - e));
    });
    double h = 0.0;
    for (int a = 0; a < 3; ++a)
      if (m.active(a)) h = std::max(h, m.spacing[a]);
    probe.steps.push_back(h);
    probe.errors.push_back(err);
  }
  const double floor = 1e-9 * std::max(1.0, scale);
  probe.exact = std::all_of(probe.errors.begin(), probe.errors.end(), [&](double e) { return e <= floor; });
  if (!probe.exact) probe.order = fit_order(probe.steps, probe.errors);
  return probe;
}

}  // namespace llg
