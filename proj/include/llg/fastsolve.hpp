#pragma once

// Constant-coefficient implicit solve (shift I - diffusion Lap_h) u = rhs on
// a cell-centered grid with even-reflection ghosts.
//
// Both Laplacian stencils are symmetric under the reflection and are
// diagonalized by the DCT-II basis cos(pi j (i + 1/2) / N), so a solve is a
// forward transform, a pointwise division, and an inverse transform.

#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "llg/fft.hpp"
#include "llg/mesh.hpp"
#include "llg/stencils.hpp"

namespace llg {

/// DCT-II eigenvalues of the reflected 1D Laplacian stencil on N cells of width h.
inline std::vector<double> laplacian_symbol(int n, double h, StencilOrder order) {
  std::vector<double> lam(static_cast<std::size_t>(n), 0.0);
  if (n == 1) return lam;
  for (int j = 0; j < n; ++j) {
    const double theta = std::numbers::pi * j / n;
    if (order == StencilOrder::Second)
      lam[j] = (2.0 * std::cos(theta) - 2.0) / (h * h);
    else
      lam[j] = (-2.0 * std::cos(2.0 * theta) + 32.0 * std::cos(theta) - 30.0) / (12.0 * h * h);
  }
  lam[0] = 0.0;
  return lam;
}

class HelmholtzPlan {
 public:
  HelmholtzPlan(const MeshSpec& mesh, StencilOrder order, double shift, double diffusion)
      : mesh_(mesh), order_(order), shift_(shift), diffusion_(diffusion) {
    mesh_.validate();
    if (!(shift > 0.0) || !std::isfinite(shift)) throw std::invalid_argument("HelmholtzPlan: shift must be > 0");
    if (!(diffusion >= 0.0) || !std::isfinite(diffusion))
      throw std::invalid_argument("HelmholtzPlan: diffusion must be >= 0");
    fft::Shape shape;
    for (int a = 2; a >= 0; --a)
      if (mesh_.active(a)) shape.push_back(mesh_.dims[a]);
    dct_ = fft::dct_plan(shape);
    for (int a = 0; a < 3; ++a) symbols_[a] = laplacian_symbol(mesh_.dims[a], mesh_.spacing[a], order);

    // Mode divisors in packed x-fastest order, with the transform
    // normalization folded in.
    const double norm = dct_->normalization();
    inv_denominator_.resize(mesh_.cell_count());
    std::size_t n = 0;
    for (int l = 0; l < mesh_.dims[2]; ++l)
      for (int j = 0; j < mesh_.dims[1]; ++j)
        for (int i = 0; i < mesh_.dims[0]; ++i) {
          const double lam = symbols_[0][i] + symbols_[1][j] + symbols_[2][l];
          inv_denominator_[n++] = 1.0 / ((shift_ - diffusion_ * lam) * norm);
        }
  }

  const MeshSpec& mesh() const { return mesh_; }
  StencilOrder order() const { return order_; }
  double shift() const { return shift_; }
  double diffusion() const { return diffusion_; }
  const std::vector<double>& symbol(int axis) const { return symbols_[axis]; }
  std::size_t size() const { return mesh_.cell_count(); }

  /// Solves in place on a packed interior array; `scratch` has the same size.
  void solve_packed(double* data, double* scratch) const {
    dct_->forward(data, scratch);
    const std::size_t n = inv_denominator_.size();
    for (std::size_t q = 0; q < n; ++q) scratch[q] *= inv_denominator_[q];
    dct_->backward(scratch, data);
  }

 private:
  MeshSpec mesh_;
  StencilOrder order_;
  double shift_;
  double diffusion_;
  std::array<std::vector<double>, 3> symbols_;
  std::shared_ptr<const fft::DctPlan> dct_;
  std::vector<double> inv_denominator_;
};

inline HelmholtzPlan build_plan(const MeshSpec& mesh, StencilOrder order, double shift, double diffusion) {
  return HelmholtzPlan(mesh, order, shift, diffusion);
}

/// Caller-owned scratch for repeated solves.
struct SolveWorkspace {
  fft::RealBuffer data;
  fft::RealBuffer scratch;
  explicit SolveWorkspace(std::size_t n = 0) : data(n), scratch(n) {}
};

inline void solve_into(const HelmholtzPlan& plan, const ScalarField& rhs, ScalarField& out, SolveWorkspace& ws) {
  if (!rhs.mesh().same_grid(plan.mesh()) || !out.mesh().same_grid(plan.mesh()))
    throw std::invalid_argument("solve: mesh mismatch");
  if (ws.data.size() != plan.size()) ws = SolveWorkspace(plan.size());
  pack_interior(rhs, 0, ws.data.data());
  plan.solve_packed(ws.data.data(), ws.scratch.data());
  unpack_interior(ws.data.data(), out, 0);
}

inline ScalarField solve(const HelmholtzPlan& plan, const ScalarField& rhs) {
  ScalarField out(rhs.mesh());
  SolveWorkspace ws(plan.size());
  solve_into(plan, rhs, out, ws);
  return out;
}

inline VectorField solve_vector(const HelmholtzPlan& plan, const VectorField& rhs) {
  if (!rhs.mesh().same_grid(plan.mesh())) throw std::invalid_argument("solve_vector: mesh mismatch");
  VectorField out(rhs.mesh());
  SolveWorkspace ws(plan.size());
  for (int c = 0; c < 3; ++c) {
    pack_interior(rhs, c, ws.data.data());
    plan.solve_packed(ws.data.data(), ws.scratch.data());
    unpack_interior(ws.data.data(), out, c);
  }
  return out;
}

/// (shift I - diffusion Lap_h) u on interior cells, with ghosts of a copy of
/// `u` filled by reflection.
template <int NC>
Field<NC> apply_helmholtz(const HelmholtzPlan& plan, const Field<NC>& u) {
  Field<NC> tmp = u;
  fill_ghosts(tmp);
  Field<NC> lap = laplacian(tmp, plan.order());
  Field<NC> out(u.mesh());
  for (int c = 0; c < NC; ++c)
    for_each_cell(u.mesh(), [&](int i, int j, int l) {
      out(c, i, j, l) = plan.shift() * u(c, i, j, l) - plan.diffusion() * lap(c, i, j, l);
    });
  return out;
}

}  // namespace llg
