#pragma once

// Cell-centered rectangular grids and the field containers that live on them.
//
// Storage order is fixed: x fastest, then y, then z. Each field component is
// one contiguous array covering the interior cells plus `ghost_depth` layers
// on both faces of every active axis. An axis with a single cell is
// degenerate: it carries no ghost layers and no stencil contribution.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace llg {

using Vec3 = std::array<double, 3>;
using Index3 = std::array<int, 3>;

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

struct MeshSpec {
  Index3 dims{1, 1, 1};
  Vec3 spacing{1.0, 1.0, 1.0};
  Vec3 origin{0.0, 0.0, 0.0};
  int ghost_depth = 1;

  bool active(int axis) const { return dims[axis] > 1; }
  int ghost(int axis) const { return active(axis) ? ghost_depth : 0; }
  int padded(int axis) const { return dims[axis] + 2 * ghost(axis); }

  std::size_t cell_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  std::size_t storage_size() const {
    return static_cast<std::size_t>(padded(0)) * padded(1) * padded(2);
  }
  double cell_volume() const { return spacing[0] * spacing[1] * spacing[2]; }
  int active_axes() const { return int(active(0)) + int(active(1)) + int(active(2)); }

  /// Center of interior cell `i` (0-based) along `axis`: origin + (i + 1/2) h.
  double center(int axis, int i) const { return origin[axis] + (i + 0.5) * spacing[axis]; }

  /// Offset of cell (i, j, l) in ghost-padded storage; ghost cells use
  /// negative indices or indices >= dims.
  std::size_t offset(int i, int j, int l) const {
    return static_cast<std::size_t>(i + ghost(0)) +
           static_cast<std::size_t>(padded(0)) *
               (static_cast<std::size_t>(j + ghost(1)) +
                static_cast<std::size_t>(padded(1)) * static_cast<std::size_t>(l + ghost(2)));
  }

  /// Storage stride of one step along `axis`.
  std::ptrdiff_t stride(int axis) const {
    if (axis == 0) return 1;
    if (axis == 1) return padded(0);
    return static_cast<std::ptrdiff_t>(padded(0)) * padded(1);
  }

  bool same_grid(const MeshSpec& other) const {
    return dims == other.dims && spacing == other.spacing && ghost_depth == other.ghost_depth;
  }

  void validate() const {
    for (int a = 0; a < 3; ++a) {
      if (dims[a] < 1) throw std::invalid_argument("mesh: cell counts must be >= 1");
      if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a]))
        throw std::invalid_argument("mesh: spacings must be positive");
    }
    if (ghost_depth != 1 && ghost_depth != 2)
      throw std::invalid_argument("mesh: ghost_depth must be 1 or 2");
  }
};

/// Uniform grid with `dims` cells covering [0, extent] per axis.
inline MeshSpec make_mesh(Index3 dims, Vec3 extent, int ghost_depth = 1) {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 1) throw std::invalid_argument("make_mesh: dims must be >= 1");
    if (!(extent[a] > 0.0)) throw std::invalid_argument("make_mesh: extents must be positive");
  }
  MeshSpec mesh;
  mesh.dims = dims;
  for (int a = 0; a < 3; ++a) mesh.spacing[a] = extent[a] / dims[a];
  mesh.ghost_depth = ghost_depth;
  mesh.validate();
  return mesh;
}

/// Visits every interior cell in storage order.
template <class Fn>
void for_each_cell(const MeshSpec& mesh, Fn&& fn) {
  for (int l = 0; l < mesh.dims[2]; ++l)
    for (int j = 0; j < mesh.dims[1]; ++j)
      for (int i = 0; i < mesh.dims[0]; ++i) fn(i, j, l);
}

/// NC scalar components sampled at cell centers, with ghost layers.
template <int NC>
class Field {
 public:
  static constexpr int components = NC;

  Field() = default;
  explicit Field(const MeshSpec& mesh) : mesh_(mesh) {
    mesh_.validate();
    for (auto& c : data_) c.assign(mesh_.storage_size(), 0.0);
  }

  const MeshSpec& mesh() const { return mesh_; }

  double& operator()(int c, int i, int j, int l) { return data_[c][mesh_.offset(i, j, l)]; }
  double operator()(int c, int i, int j, int l) const { return data_[c][mesh_.offset(i, j, l)]; }

  double* component(int c) { return data_[c].data(); }
  const double* component(int c) const { return data_[c].data(); }
  std::vector<double>& raw(int c) { return data_[c]; }
  const std::vector<double>& raw(int c) const { return data_[c]; }

  void fill(double v) {
    for (auto& c : data_) std::fill(c.begin(), c.end(), v);
  }

 private:
  MeshSpec mesh_;
  std::array<std::vector<double>, NC> data_;
};

using ScalarField = Field<1>;
using VectorField = Field<3>;

inline Vec3 get(const VectorField& f, std::size_t off) {
  return {f.component(0)[off], f.component(1)[off], f.component(2)[off]};
}
inline void set(VectorField& f, std::size_t off, const Vec3& v) {
  f.component(0)[off] = v[0];
  f.component(1)[off] = v[1];
  f.component(2)[off] = v[2];
}
inline Vec3 at(const VectorField& f, int i, int j, int l) { return get(f, f.mesh().offset(i, j, l)); }

/// Field equal to `v` in every cell. Ghosts hold the same value, which is
/// what even reflection produces for a constant.
inline VectorField fill_value(const MeshSpec& mesh, const Vec3& v) {
  VectorField f(mesh);
  for (int c = 0; c < 3; ++c) std::fill(f.raw(c).begin(), f.raw(c).end(), v[c]);
  return f;
}

/// Copies interior cells between fields whose grids may differ only in
/// ghost depth.
template <int NC>
void copy_interior(const Field<NC>& src, Field<NC>& dst) {
  const MeshSpec &a = src.mesh(), &b = dst.mesh();
  if (a.dims != b.dims) throw std::invalid_argument("copy_interior: dims mismatch");
  for (int c = 0; c < NC; ++c)
    for (int l = 0; l < a.dims[2]; ++l)
      for (int j = 0; j < a.dims[1]; ++j) {
        const double* s = src.component(c) + a.offset(0, j, l);
        double* d = dst.component(c) + b.offset(0, j, l);
        std::copy(s, s + a.dims[0], d);
      }
}

/// Copies interior values into a packed x-fastest array (no ghosts).
template <int NC>
void pack_interior(const Field<NC>& f, int c, double* out) {
  const MeshSpec& m = f.mesh();
  const double* src = f.component(c);
  std::size_t n = 0;
  for (int l = 0; l < m.dims[2]; ++l)
    for (int j = 0; j < m.dims[1]; ++j) {
      const double* row = src + m.offset(0, j, l);
      for (int i = 0; i < m.dims[0]; ++i) out[n++] = row[i];
    }
}

template <int NC>
void unpack_interior(const double* in, Field<NC>& f, int c) {
  const MeshSpec& m = f.mesh();
  double* dst = f.component(c);
  std::size_t n = 0;
  for (int l = 0; l < m.dims[2]; ++l)
    for (int j = 0; j < m.dims[1]; ++j) {
      double* row = dst + m.offset(0, j, l);
      for (int i = 0; i < m.dims[0]; ++i) row[i] = in[n++];
    }
}

}  // namespace llg
