#pragma once

// Source term f = -q (m2 e2 + m3 e3) + h_s + h_e, the demagnetizing (stray)
// field, unit conversions, and the manufactured solution used for
// convergence studies.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <stdexcept>

#include "llg/fft.hpp"
#include "llg/mesh.hpp"

namespace llg {

struct ModelParams {
  double epsilon = 1.0;  // exchange coefficient
  double aniso_q = 0.0;  // uniaxial anisotropy along e1
  double alpha = 1.0;    // Gilbert damping
  Vec3 h_ext{0.0, 0.0, 0.0};
  bool stray_enabled = false;
  bool forcing = false;  // manufactured forcing added by the driver

  void validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("ModelParams: epsilon must be > 0");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("ModelParams: alpha must be > 0");
    if (!(aniso_q >= 0.0) || !std::isfinite(aniso_q)) throw std::invalid_argument("ModelParams: q must be >= 0");
    for (double v : h_ext)
      if (!std::isfinite(v)) throw std::invalid_argument("ModelParams: external field must be finite");
  }
};

// ---------------------------------------------------------------------------
// Units

inline constexpr double mu0 = 4.0e-7 * std::numbers::pi;

struct ReducedConstants {
  double epsilon;
  double q;
};

/// epsilon = Cex / (mu0 Ms^2 L^2), q = Ku / (mu0 Ms^2).
inline ReducedConstants nondimensionalize(double cex, double ku, double ms, double length) {
  if (!(cex > 0.0) || !(ku >= 0.0) || !(ms > 0.0) || !(length > 0.0))
    throw std::invalid_argument("nondimensionalize: Cex, Ms, L must be positive and Ku nonnegative");
  const double scale = mu0 * ms * ms;
  return {cex / (scale * length * length), ku / scale};
}

/// Seconds per unit of reduced time tau = mu0 gamma Ms t.
inline double time_unit_seconds(double ms, double gamma) { return 1.0 / (mu0 * gamma * ms); }

/// Reduced field h = B / (mu0 Ms) for an applied flux density B in tesla.
inline double tesla_to_reduced(double b, double ms) { return b / (mu0 * ms); }

// ---------------------------------------------------------------------------
// Demagnetization tensor

struct SymTensor {
  double xx = 0, xy = 0, xz = 0, yy = 0, yz = 0, zz = 0;
  double trace() const { return xx + yy + zz; }
};

namespace newell {

using ld = long double;

inline ld f(ld x, ld y, ld z) {
  x = std::fabs(x);
  y = std::fabs(y);
  z = std::fabs(z);
  const ld x2 = x * x, y2 = y * y, z2 = z * z;
  const ld r = std::sqrt(x2 + y2 + z2);
  ld res = (2 * x2 - y2 - z2) * r / 6;
  if (y > 0 && x2 + z2 > 0) res += y / 2 * (z2 - x2) * std::asinh(y / std::sqrt(x2 + z2));
  if (z > 0 && x2 + y2 > 0) res += z / 2 * (y2 - x2) * std::asinh(z / std::sqrt(x2 + y2));
  if (x > 0 && y > 0 && z > 0) res -= x * y * z * std::atan(y * z / (x * r));
  return res;
}

inline ld g(ld x, ld y, ld z) {
  // Odd in x and y, even in z.
  const ld sign = (x < 0 ? -1 : 1) * (y < 0 ? -1 : 1);
  x = std::fabs(x);
  y = std::fabs(y);
  z = std::fabs(z);
  const ld x2 = x * x, y2 = y * y, z2 = z * z;
  const ld r = std::sqrt(x2 + y2 + z2);
  ld res = -x * y * r / 3;
  if (z > 0 && x2 + y2 > 0) res += x * y * z * std::asinh(z / std::sqrt(x2 + y2));
  if (x > 0 && y2 + z2 > 0) res += y / 6 * (3 * z2 - y2) * std::asinh(x / std::sqrt(y2 + z2));
  if (y > 0 && x2 + z2 > 0) res += x / 6 * (3 * z2 - x2) * std::asinh(y / std::sqrt(x2 + z2));
  if (z > 0 && r > 0) res -= z2 * z / 6 * std::atan(x * y / (z * r));
  if (y > 0 && r > 0) res -= z * y2 / 2 * std::atan(x * z / (y * r));
  if (x > 0 && r > 0) res -= z * x2 / 2 * std::atan(y * z / (x * r));
  return sign * res;
}

/// Tensor-product second difference (-1, 2, -1) of `fn` in all three
/// directions around (X, Y, Z) with steps (dx, dy, dz).
template <class Fn>
ld second_difference(Fn fn, ld X, ld Y, ld Z, ld dx, ld dy, ld dz) {
  static constexpr ld w[3] = {-1, 2, -1};
  ld acc = 0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        acc += w[a] * w[b] * w[c] * fn(X + (a - 1) * dx, Y + (b - 1) * dy, Z + (c - 1) * dz);
  return acc;
}

}  // namespace newell

/// Cell-averaged interaction tensor between two cells of size `cell` whose
/// centers differ by `lag`, from Newell's closed-form expressions.
inline SymTensor newell_tensor(const Vec3& lag, const Vec3& cell) {
  using newell::ld;
  const ld X = lag[0], Y = lag[1], Z = lag[2];
  const ld dx = cell[0], dy = cell[1], dz = cell[2];
  const ld scale = 1 / (4 * std::numbers::pi_v<ld> * dx * dy * dz);
  auto f = [](ld x, ld y, ld z) { return newell::f(x, y, z); };
  auto g = [](ld x, ld y, ld z) { return newell::g(x, y, z); };
  auto fyy = [](ld x, ld y, ld z) { return newell::f(y, x, z); };
  auto fzz = [](ld x, ld y, ld z) { return newell::f(z, y, x); };
  auto gxz = [](ld x, ld y, ld z) { return newell::g(x, z, y); };
  auto gyz = [](ld x, ld y, ld z) { return newell::g(y, z, x); };
  SymTensor t;
  t.xx = double(scale * newell::second_difference(f, X, Y, Z, dx, dy, dz));
  t.yy = double(scale * newell::second_difference(fyy, X, Y, Z, dx, dy, dz));
  t.zz = double(scale * newell::second_difference(fzz, X, Y, Z, dx, dy, dz));
  t.xy = double(scale * newell::second_difference(g, X, Y, Z, dx, dy, dz));
  t.xz = double(scale * newell::second_difference(gxz, X, Y, Z, dx, dy, dz));
  t.yz = double(scale * newell::second_difference(gyz, X, Y, Z, dx, dy, dz));
  return t;
}

/// Point-dipole limit: N = -V / (4 pi r^3) (3 r^ r^ - I).
inline SymTensor dipole_tensor(const Vec3& lag, const Vec3& cell) {
  const double r2 = dot(lag, lag);
  const double r = std::sqrt(r2);
  const double c = -cell[0] * cell[1] * cell[2] / (4.0 * std::numbers::pi * r2 * r);
  const Vec3 u{lag[0] / r, lag[1] / r, lag[2] / r};
  SymTensor t;
  t.xx = c * (3 * u[0] * u[0] - 1);
  t.yy = c * (3 * u[1] * u[1] - 1);
  t.zz = c * (3 * u[2] * u[2] - 1);
  t.xy = c * 3 * u[0] * u[1];
  t.xz = c * 3 * u[0] * u[2];
  t.yz = c * 3 * u[1] * u[2];
  return t;
}

/// Beyond this many largest-cell widths the closed form loses digits to
/// cancellation faster than the dipole limit loses accuracy.
inline constexpr double kDipoleCutoffCells = 60.0;

inline SymTensor demag_tensor(const Vec3& lag, const Vec3& cell) {
  const double dmax = std::max({cell[0], cell[1], cell[2]});
  if (norm(lag) > kDipoleCutoffCells * dmax) return dipole_tensor(lag, cell);
  return newell_tensor(lag, cell);
}

/// Zero-padded spectral demagnetization tensor for one mesh.
class DemagKernel {
 public:
  explicit DemagKernel(const MeshSpec& mesh) : mesh_(mesh) {
    mesh_.validate();
    for (int a = 0; a < 3; ++a) padded_[a] = mesh_.active(a) ? 2 * mesh_.dims[a] : 1;
    self_ = demag_tensor({0, 0, 0}, mesh_.spacing);
    if (mesh_.cell_count() == 1) return;

    fft::Shape shape;
    for (int a = 2; a >= 0; --a)
      if (padded_[a] > 1) shape.push_back(padded_[a]);
    plan_ = fft::real_fft_plan(shape);
    fft::Shape box;
    for (int a = 2; a >= 0; --a)
      if (padded_[a] > 1) box.push_back(mesh_.dims[a]);
    padded_plan_ = fft::padded_real_fft(shape, box);

    const std::size_t total = plan_->size();
    std::array<fft::RealBuffer, 6> real;
    for (auto& r : real) r.assign(total, 0.0);
    const Vec3& h = mesh_.spacing;
    for (int iz = 0; iz < mesh_.dims[2]; ++iz)
      for (int iy = 0; iy < mesh_.dims[1]; ++iy)
        for (int ix = 0; ix < mesh_.dims[0]; ++ix) {
          const SymTensor t = demag_tensor({ix * h[0], iy * h[1], iz * h[2]}, h);
          // Reflect into all sign combinations; off-diagonal entries are odd
          // in each of their two coordinates.
          for (int sz = -1; sz <= 1; sz += 2)
            for (int sy = -1; sy <= 1; sy += 2)
              for (int sx = -1; sx <= 1; sx += 2) {
                if ((ix == 0 && sx < 0) || (iy == 0 && sy < 0) || (iz == 0 && sz < 0)) continue;
                const std::size_t o = padded_index(sx * ix, sy * iy, sz * iz);
                real[0][o] = t.xx;
                real[1][o] = sx * sy * t.xy;
                real[2][o] = sx * sz * t.xz;
                real[3][o] = t.yy;
                real[4][o] = sy * sz * t.yz;
                real[5][o] = t.zz;
              }
        }
    for (int c = 0; c < 6; ++c) {
      spectra_[c].resize(plan_->spectral_size());
      plan_->forward(real[c].data(), spectra_[c].data());
    }
  }

  const MeshSpec& mesh() const { return mesh_; }
  const SymTensor& self_tensor() const { return self_; }
  const fft::RealFftPlan* plan() const { return plan_.get(); }
  /// Transform of box-supported arrays, used for the magnetization.
  const fft::PaddedRealFft* padded_plan() const { return padded_plan_.get(); }
  const std::array<int, 3>& padded_dims() const { return padded_; }
  /// Spectra in order xx, xy, xz, yy, yz, zz.
  const fft::ComplexBuffer& spectrum(int c) const { return spectra_[c]; }

  std::size_t padded_index(int ix, int iy, int iz) const {
    const int px = ix < 0 ? ix + padded_[0] : ix;
    const int py = iy < 0 ? iy + padded_[1] : iy;
    const int pz = iz < 0 ? iz + padded_[2] : iz;
    return static_cast<std::size_t>(px) +
           static_cast<std::size_t>(padded_[0]) * (static_cast<std::size_t>(py) + static_cast<std::size_t>(padded_[1]) * pz);
  }

 private:
  MeshSpec mesh_;
  std::array<int, 3> padded_{1, 1, 1};
  SymTensor self_;
  std::shared_ptr<const fft::RealFftPlan> plan_;
  std::shared_ptr<const fft::PaddedRealFft> padded_plan_;
  std::array<fft::ComplexBuffer, 6> spectra_;
};

inline std::shared_ptr<const DemagKernel> build_demag_kernel(const MeshSpec& mesh) {
  return std::make_shared<const DemagKernel>(mesh);
}

struct DemagWorkspace {
  std::array<fft::RealBuffer, 3> real;
  std::array<fft::ComplexBuffer, 3> spectral;
};

/// h_s = -N * m by zero-padded FFT convolution; writes interior cells of `out`.
inline void stray_field_into(const DemagKernel& kernel, const VectorField& m, VectorField& out, DemagWorkspace& ws) {
  const MeshSpec& mesh = kernel.mesh();
  if (m.mesh().dims != mesh.dims || out.mesh().dims != mesh.dims) throw std::invalid_argument("stray_field: mesh mismatch");
  if (!kernel.plan()) {
    const SymTensor& t = kernel.self_tensor();
    const Vec3 v = at(m, 0, 0, 0);
    out(0, 0, 0, 0) = -(t.xx * v[0] + t.xy * v[1] + t.xz * v[2]);
    out(1, 0, 0, 0) = -(t.xy * v[0] + t.yy * v[1] + t.yz * v[2]);
    out(2, 0, 0, 0) = -(t.xz * v[0] + t.yz * v[1] + t.zz * v[2]);
    return;
  }
  const auto& plan = *kernel.padded_plan();
  for (int c = 0; c < 3; ++c) {
    auto& r = ws.real[c];
    if (r.size() != plan.size()) r.assign(plan.size(), 0.0);
    ws.spectral[c].resize(plan.spectral_size());
    const double* src = m.component(c);
    for (int l = 0; l < mesh.dims[2]; ++l)
      for (int j = 0; j < mesh.dims[1]; ++j) {
        const double* row = src + m.mesh().offset(0, j, l);
        double* dst = r.data() + kernel.padded_index(0, j, l);
        for (int i = 0; i < mesh.dims[0]; ++i) dst[i] = row[i];
      }
    plan.forward(r.data(), ws.spectral[c].data());
  }
  const auto &nxx = kernel.spectrum(0), &nxy = kernel.spectrum(1), &nxz = kernel.spectrum(2);
  const auto &nyy = kernel.spectrum(3), &nyz = kernel.spectrum(4), &nzz = kernel.spectrum(5);
  auto &mx = ws.spectral[0], &my = ws.spectral[1], &mz = ws.spectral[2];
  for (std::size_t q = 0; q < plan.spectral_size(); ++q) {
    const std::complex<double> a = mx[q], b = my[q], c = mz[q];
    mx[q] = -(nxx[q] * a + nxy[q] * b + nxz[q] * c);
    my[q] = -(nxy[q] * a + nyy[q] * b + nyz[q] * c);
    mz[q] = -(nxz[q] * a + nyz[q] * b + nzz[q] * c);
  }
  const double scale = 1.0 / static_cast<double>(plan.size());
  for (int c = 0; c < 3; ++c) {
    plan.backward(ws.spectral[c].data(), ws.real[c].data());
    double* dst = out.component(c);
    for (int l = 0; l < mesh.dims[2]; ++l)
      for (int j = 0; j < mesh.dims[1]; ++j) {
        double* row = dst + out.mesh().offset(0, j, l);
        const double* src = ws.real[c].data() + kernel.padded_index(0, j, l);
        for (int i = 0; i < mesh.dims[0]; ++i) row[i] = src[i] * scale;
      }
  }
}

inline VectorField stray_field(const DemagKernel& kernel, const VectorField& m) {
  VectorField out(m.mesh());
  DemagWorkspace ws;
  stray_field_into(kernel, m, out, ws);
  return out;
}

// ---------------------------------------------------------------------------
// Source term

/// f = -q (0, m2, m3) + h_s + h_ext on interior cells. `h_s` may be null
/// when the stray field is disabled.
inline void source_term_into(const ModelParams& p, const VectorField& m, const VectorField* h_s, VectorField& f) {
  const MeshSpec& mesh = m.mesh();
  const bool use_hs = p.stray_enabled && h_s != nullptr;
  for (int l = 0; l < mesh.dims[2]; ++l)
    for (int j = 0; j < mesh.dims[1]; ++j) {
      const std::size_t row = mesh.offset(0, j, l);
      for (int i = 0; i < mesh.dims[0]; ++i) {
        const std::size_t o = row + i;
        Vec3 v{p.h_ext[0], p.h_ext[1] - p.aniso_q * m.component(1)[o], p.h_ext[2] - p.aniso_q * m.component(2)[o]};
        if (use_hs)
          for (int c = 0; c < 3; ++c) v[c] += h_s->component(c)[o];
        set(f, o, v);
      }
    }
}

inline VectorField source_term(const ModelParams& p, const VectorField& m, const VectorField* h_s) {
  VectorField f(m.mesh());
  source_term_into(p, m, h_s, f);
  return f;
}

// ---------------------------------------------------------------------------
// Manufactured solution
//
// m_e = (cos(phi) sin t, sin(phi) sin t, cos t) with phi = cos(pi x) in 1D
// and phi = cos(pi x) cos(pi y) cos(pi z) in 3D. It satisfies the
// homogeneous Neumann condition on the unit interval / cube and, with
// epsilon = 1 and f = 0, solves
//   m_t = alpha Lap m + alpha |grad m|^2 m - m x Lap m + g.

class ManufacturedSolution {
 public:
  explicit ManufacturedSolution(int dim) : dim_(dim) {
    if (dim != 1 && dim != 3) throw std::invalid_argument("ManufacturedSolution: dim must be 1 or 3");
  }
  int dim() const { return dim_; }

  Vec3 value(double x, double y, double z, double t) const {
    const double phi = phase(x, y, z).phi;
    return {std::cos(phi) * std::sin(t), std::sin(phi) * std::sin(t), std::cos(t)};
  }

  /// g = dm/dt - alpha Lap m - alpha |grad m|^2 m + m x Lap m.
  Vec3 forcing(double alpha, double x, double y, double z, double t) const {
    const Phase ph = phase(x, y, z);
    const double c = std::cos(ph.phi), s = std::sin(ph.phi);
    const double st = std::sin(t), ct = std::cos(t);
    const Vec3 m{c * st, s * st, ct};
    const Vec3 mt{c * ct, s * ct, -st};
    const Vec3 lap{st * (-c * ph.grad_sq - s * ph.lap), st * (-s * ph.grad_sq + c * ph.lap), 0.0};
    const double grad_m_sq = st * st * ph.grad_sq;
    const Vec3 mxl = cross(m, lap);
    Vec3 g;
    for (int a = 0; a < 3; ++a) g[a] = mt[a] - alpha * lap[a] - alpha * grad_m_sq * m[a] + mxl[a];
    return g;
  }

  VectorField sample(const MeshSpec& mesh, double t) const {
    VectorField f(mesh);
    for_each_cell(mesh, [&](int i, int j, int l) {
      set(f, mesh.offset(i, j, l), value(mesh.center(0, i), mesh.center(1, j), mesh.center(2, l), t));
    });
    return f;
  }

  void forcing_into(double alpha, double t, VectorField& g) const {
    const MeshSpec& mesh = g.mesh();
    for_each_cell(mesh, [&](int i, int j, int l) {
      set(g, mesh.offset(i, j, l), forcing(alpha, mesh.center(0, i), mesh.center(1, j), mesh.center(2, l), t));
    });
  }

 private:
  struct Phase {
    double phi, grad_sq, lap;
  };
  Phase phase(double x, double y, double z) const {
    constexpr double pi = std::numbers::pi;
    if (dim_ == 1) {
      const double cx = std::cos(pi * x), sx = std::sin(pi * x);
      return {cx, pi * pi * sx * sx, -pi * pi * cx};
    }
    const double cx = std::cos(pi * x), sx = std::sin(pi * x);
    const double cy = std::cos(pi * y), sy = std::sin(pi * y);
    const double cz = std::cos(pi * z), sz = std::sin(pi * z);
    const double phi = cx * cy * cz;
    const double gx = -pi * sx * cy * cz, gy = -pi * cx * sy * cz, gz = -pi * cx * cy * sz;
    return {phi, gx * gx + gy * gy + gz * gz, -3.0 * pi * pi * phi};
  }

  int dim_;
};

/// Forcing field g(t) at cell centers for the manufactured problem.
inline VectorField manufactured_forcing(double alpha, double t, const MeshSpec& mesh, int dim) {
  ManufacturedSolution sol(dim);
  VectorField g(mesh);
  sol.forcing_into(alpha, t, g);
  return g;
}

}  // namespace llg
