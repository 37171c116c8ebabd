#pragma once

// Semi-implicit BDF projection schemes for
//   m_t = alpha (eps Lap m + f) + alpha (eps |grad m|^2 - m.f) m - m x (eps Lap m + f).
//
// Order s in {1, 2, 3}. With backward-difference weights a_j and
// extrapolation weights b_j (newest first),
//
//   (a_0 mt^{n+s} + sum_j a_j mt^{n+s-j}) / k
//       = -mh x (eps Lap_h mth + fh) + alpha (eps Lap_h mt^{n+s} + fh)
//         + alpha (eps |grad_h mh|^2 - mh.fh) mh [+ g(t^{n+s})],
//   m^{n+s} = mt^{n+s} / |mt^{n+s}|,
//
// where mt are unprojected intermediates, mh/fh extrapolate the projected
// magnetization and the source term, and mth extrapolates the unprojected
// intermediates. Only the Laplacian is implicit, so each step is three
// independent constant-coefficient solves.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "llg/fastsolve.hpp"
#include "llg/fields.hpp"
#include "llg/mesh.hpp"
#include "llg/stencils.hpp"

namespace llg {

enum class Scheme { BDF1 = 1, BDF2 = 2, BDF3 = 3 };

inline int order_of(Scheme s) { return static_cast<int>(s); }
inline Scheme scheme_of_order(int s) {
  if (s < 1 || s > 3) throw std::invalid_argument("scheme order must be 1, 2 or 3");
  return static_cast<Scheme>(s);
}
inline std::string to_string(Scheme s) { return "bdf" + std::to_string(order_of(s)); }

/// Which history feeds the extrapolated field inside the explicit Laplacian.
enum class TildeSource { Unprojected, Projected };

struct BdfCoefficients {
  double lead;                  // a_0
  std::array<double, 3> back;   // -a_j, applied to mt^{n+s-j}, newest first
  std::array<double, 3> extrap; // b_j, newest first
};

inline const BdfCoefficients& bdf_coefficients(Scheme s) {
  static const BdfCoefficients table[3] = {
      {1.0, {1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}},
      {1.5, {2.0, -0.5, 0.0}, {2.0, -1.0, 0.0}},
      {11.0 / 6.0, {3.0, -1.5, 1.0 / 3.0}, {3.0, -3.0, 1.0}},
  };
  return table[order_of(s) - 1];
}

inline StencilOrder default_stencil(Scheme s) { return s == Scheme::BDF3 ? StencilOrder::Fourth : StencilOrder::Second; }

// ---------------------------------------------------------------------------
// Errors

class ProjectionError : public std::runtime_error {
 public:
  ProjectionError(Index3 cell, const std::string& what) : std::runtime_error(what), cell_(cell) {}
  Index3 cell() const { return cell_; }

 private:
  Index3 cell_;
};

/// A step produced a non-finite or runaway intermediate; the state is left
/// at the last completed step.
class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(int step, double max_norm, const std::string& what)
      : std::runtime_error(what), step_(step), max_norm_(max_norm) {}
  int step() const { return step_; }
  double max_tilde_norm() const { return max_norm_; }

 private:
  int step_;
  double max_norm_;
};

// ---------------------------------------------------------------------------
// Projection

/// Normalizes every interior cell in place; returns max ||m| - 1| afterwards.
inline double project(VectorField& m) {
  const MeshSpec& mesh = m.mesh();
  double dev = 0.0;
  for (int l = 0; l < mesh.dims[2]; ++l)
    for (int j = 0; j < mesh.dims[1]; ++j)
      for (int i = 0; i < mesh.dims[0]; ++i) {
        const std::size_t o = mesh.offset(i, j, l);
        const Vec3 v = get(m, o);
        const double n = norm(v);
        if (!(n > 0.0) || !std::isfinite(n)) {
          std::ostringstream os;
          os << "project: cannot normalize cell (" << i << ", " << j << ", " << l << "), |m| = " << n;
          throw ProjectionError({i, j, l}, os.str());
        }
        const Vec3 u{v[0] / n, v[1] / n, v[2] / n};
        set(m, o, u);
        dev = std::max(dev, std::abs(norm(u) - 1.0));
      }
  return dev;
}

inline VectorField projected(VectorField m) {
  project(m);
  return m;
}

/// Largest ||m| - 1| over interior cells.
inline double unit_length_deviation(const VectorField& m) {
  double dev = 0.0;
  const MeshSpec& mesh = m.mesh();
  for_each_cell(mesh, [&](int i, int j, int l) { dev = std::max(dev, std::abs(norm(at(m, i, j, l)) - 1.0)); });
  return dev;
}

// ---------------------------------------------------------------------------
// History

/// Fixed-capacity ring of fields, indexed by age (0 = newest).
class FieldHistory {
 public:
  FieldHistory() = default;
  FieldHistory(const MeshSpec& mesh, int capacity) {
    for (int i = 0; i < capacity; ++i) slots_.emplace_back(mesh);
  }

  int size() const { return size_; }
  int capacity() const { return static_cast<int>(slots_.size()); }
  const VectorField& operator[](int age) const {
    if (age >= size_) throw std::out_of_range("FieldHistory: not enough entries");
    return slots_[slot(age)];
  }

  /// Slot that becomes the newest entry after `commit`.
  VectorField& next() { return slots_[(head_ + 1) % capacity()]; }
  void commit() {
    head_ = (head_ + 1) % capacity();
    size_ = std::min(size_ + 1, capacity());
  }
  void push(const VectorField& f) {
    copy_interior(f, next());
    commit();
  }
  void clear() { size_ = 0; }

 private:
  std::size_t slot(int age) const { return static_cast<std::size_t>((head_ - age + capacity()) % capacity()); }
  std::vector<VectorField> slots_;
  int head_ = 0;
  int size_ = 0;
};

/// sum_j w_j hist[j] on interior cells.
inline void combine_into(const FieldHistory& hist, const std::array<double, 3>& w, int depth, VectorField& out) {
  const MeshSpec& mesh = out.mesh();
  for (int c = 0; c < 3; ++c)
    for (int l = 0; l < mesh.dims[2]; ++l)
      for (int j = 0; j < mesh.dims[1]; ++j) {
        const std::size_t row = mesh.offset(0, j, l);
        double* dst = out.component(c) + row;
        const double* s0 = hist[0].component(c) + row;
        if (depth == 1) {
          for (int i = 0; i < mesh.dims[0]; ++i) dst[i] = w[0] * s0[i];
        } else if (depth == 2) {
          const double* s1 = hist[1].component(c) + row;
          for (int i = 0; i < mesh.dims[0]; ++i) dst[i] = w[0] * s0[i] + w[1] * s1[i];
        } else {
          const double* s1 = hist[1].component(c) + row;
          const double* s2 = hist[2].component(c) + row;
          for (int i = 0; i < mesh.dims[0]; ++i) dst[i] = w[0] * s0[i] + w[1] * s1[i] + w[2] * s2[i];
        }
      }
}

/// Extrapolation of one history stream to the new time level.
inline VectorField extrapolate(const FieldHistory& hist, Scheme s) {
  const int depth = order_of(s);
  if (hist.size() < depth) throw std::invalid_argument("extrapolate: insufficient history for " + to_string(s));
  VectorField out(hist[0].mesh());
  combine_into(hist, bdf_coefficients(s).extrap, depth, out);
  return out;
}

// ---------------------------------------------------------------------------
// Scheme state

struct StepperOptions {
  Scheme scheme = Scheme::BDF1;
  double k = 1e-3;
  std::optional<StencilOrder> stencil;  // defaults to the scheme's order
  TildeSource tilde = TildeSource::Unprojected;
  int residual_every = 0;               // 0 disables the implicit-residual spot check
  double blowup_threshold = 1e3;        // max |mt| beyond which a step is a blow-up
};

struct StepReport {
  Scheme used = Scheme::BDF1;
  double max_tilde_norm = 0.0;
  double unit_deviation = 0.0;
  double residual = std::numeric_limits<double>::quiet_NaN();  // relative, when checked
};

/// Forcing callback: writes g(t) into interior cells of the given field.
using Forcing = std::function<void(double, VectorField&)>;

class SchemeState {
 public:
  SchemeState(const MeshSpec& mesh, StepperOptions opts, std::shared_ptr<const DemagKernel> kernel = nullptr)
      : opts_(std::move(opts)), kernel_(std::move(kernel)) {
    if (!(opts_.k > 0.0) || !std::isfinite(opts_.k)) throw std::invalid_argument("SchemeState: k must be > 0");
    stencil_ = opts_.stencil.value_or(default_stencil(opts_.scheme));
    mesh_ = mesh;
    mesh_.ghost_depth = std::max(mesh.ghost_depth, required_ghost_depth(stencil_));
    mesh_.validate();
    if (kernel_ && kernel_->mesh().dims != mesh_.dims) throw std::invalid_argument("SchemeState: kernel mesh mismatch");

    const int depth = order_of(opts_.scheme);
    m_ = FieldHistory(mesh_, depth);
    mt_ = FieldHistory(mesh_, depth);
    f_ = FieldHistory(mesh_, depth);
    m_hat_ = VectorField(mesh_);
    mt_hat_ = VectorField(mesh_);
    f_hat_ = VectorField(mesh_);
    f_tmp_ = VectorField(mesh_);
    lap_ = VectorField(mesh_);
    grad_sq_ = ScalarField(mesh_);
    forcing_ = VectorField(mesh_);
    h_s_ = VectorField(mesh_);
    tilde_new_ = VectorField(mesh_);
    const std::size_t n = mesh_.cell_count();
    for (auto& r : rhs_) r.resize(n);
    scratch_.resize(n);
  }

  /// Seeds the histories with m0 (projected) and mt0 := m0.
  void initialize(const VectorField& m0, const ModelParams& p, double t0 = 0.0) {
    p.validate();
    VectorField m(mesh_);
    copy_interior(m0, m);
    project(m);
    m_.clear();
    mt_.clear();
    f_.clear();
    m_.push(m);
    mt_.push(m);
    update_source(p, m_[0]);
    f_.push(f_new());
    time_ = t0;
    step_index_ = 0;
    scheme_log_.clear();
    max_unit_deviation_ = unit_length_deviation(m_[0]);
  }

  /// Seeds the histories with consecutive states m(t0), m(t0 + k), ...
  /// (oldest first, at most the scheme's depth), taking mt := m. The next
  /// step then starts from the last state.
  void seed(const std::vector<VectorField>& states, const ModelParams& p, double t0 = 0.0) {
    if (states.empty() || static_cast<int>(states.size()) > order_of(opts_.scheme))
      throw std::invalid_argument("SchemeState::seed: need between 1 and scheme-order states");
    initialize(states.front(), p, t0);
    VectorField m(mesh_);
    for (std::size_t i = 1; i < states.size(); ++i) {
      copy_interior(states[i], m);
      project(m);
      m_.push(m);
      mt_.push(m);
      update_source(p, m_[0]);
      f_.push(f_new());
      time_ += opts_.k;
      ++step_index_;
    }
  }

  const MeshSpec& mesh() const { return mesh_; }
  const StepperOptions& options() const { return opts_; }
  StencilOrder stencil() const { return stencil_; }
  Scheme scheme() const { return opts_.scheme; }
  double k() const { return opts_.k; }
  double time() const { return time_; }
  int step_index() const { return step_index_; }
  const VectorField& m() const { return m_[0]; }
  const VectorField& m_tilde() const { return mt_[0]; }
  const VectorField& f() const { return f_[0]; }
  const FieldHistory& m_history() const { return m_; }
  const FieldHistory& m_tilde_history() const { return mt_; }
  const FieldHistory& f_history() const { return f_; }
  /// Stray field of the newest projected magnetization (zero when disabled).
  const VectorField& stray() const { return h_s_; }
  const std::shared_ptr<const DemagKernel>& kernel() const { return kernel_; }
  const std::vector<Scheme>& scheme_log() const { return scheme_log_; }
  double max_unit_deviation() const { return max_unit_deviation_; }
  const StepReport& last_report() const { return report_; }

  /// Scheme the next step will use: lower order while history is short.
  Scheme next_scheme() const { return scheme_of_order(std::min(order_of(opts_.scheme), m_.size())); }

  StepReport advance(const ModelParams& p, const Forcing* forcing) {
    p.validate();
    if (m_.size() == 0) throw std::logic_error("SchemeState: initialize() before stepping");
    const Scheme s = next_scheme();
    const int depth = order_of(s);
    const BdfCoefficients& co = bdf_coefficients(s);
    const double k = opts_.k;
    const double eps = p.epsilon, alpha = p.alpha;
    const double t_new = time_ + k;

    combine_into(m_, co.extrap, depth, m_hat_);
    fill_ghosts(m_hat_);
    combine_into(opts_.tilde == TildeSource::Unprojected ? mt_ : m_, co.extrap, depth, mt_hat_);
    fill_ghosts(mt_hat_);
    combine_into(f_, co.extrap, depth, f_hat_);
    laplacian_into(mt_hat_, stencil_, lap_);
    gradient_norm_sq_into(m_hat_, stencil_, grad_sq_);
    const bool forced = forcing != nullptr && static_cast<bool>(*forcing);
    if (forced) (*forcing)(t_new, forcing_);

    // Right-hand side, packed per component.
    std::size_t n = 0;
    for (int l = 0; l < mesh_.dims[2]; ++l)
      for (int j = 0; j < mesh_.dims[1]; ++j) {
        const std::size_t row = mesh_.offset(0, j, l);
        for (int i = 0; i < mesh_.dims[0]; ++i, ++n) {
          const std::size_t o = row + i;
          const Vec3 mh = get(m_hat_, o), fh = get(f_hat_, o), lp = get(lap_, o);
          const Vec3 drive{eps * lp[0] + fh[0], eps * lp[1] + fh[1], eps * lp[2] + fh[2]};
          const Vec3 gyro = cross(mh, drive);
          const double coef = alpha * (eps * grad_sq_.component(0)[o] - dot(mh, fh));
          for (int c = 0; c < 3; ++c) {
            double hist = 0.0;
            for (int q = 0; q < depth; ++q) hist += co.back[q] * mt_[q].component(c)[o];
            double v = hist / k - gyro[c] + alpha * fh[c] + coef * mh[c];
            if (forced) v += forcing_.component(c)[o];
            rhs_[c][n] = v;
          }
        }
      }

    const HelmholtzPlan& plan = plan_for(s, alpha * eps);
    const bool check = opts_.residual_every > 0 && (step_index_ % opts_.residual_every) == 0;
    std::array<std::vector<double>, 3> rhs_copy;
    if (check)
      for (int c = 0; c < 3; ++c) rhs_copy[c].assign(rhs_[c].begin(), rhs_[c].end());
    for (int c = 0; c < 3; ++c) {
      plan.solve_packed(rhs_[c].data(), scratch_.data());
      unpack_interior(rhs_[c].data(), tilde_new_, c);
    }

    StepReport report;
    report.used = s;
    double max_norm = 0.0;
    bool finite = true;
    for_each_cell(mesh_, [&](int i, int j, int l) {
      const double v = norm(at(tilde_new_, i, j, l));
      if (!std::isfinite(v)) finite = false;
      max_norm = std::max(max_norm, v);
    });
    report.max_tilde_norm = finite ? max_norm : std::numeric_limits<double>::infinity();
    if (!finite || max_norm > opts_.blowup_threshold) {
      std::ostringstream os;
      os << "blow-up at step " << step_index_ + 1 << " (" << to_string(s) << "): max |mt| = " << report.max_tilde_norm;
      throw BlowUpError(step_index_ + 1, report.max_tilde_norm, os.str());
    }
    if (check) report.residual = implicit_residual(plan, rhs_copy);

    VectorField& m_next = m_.next();
    copy_interior(tilde_new_, m_next);
    try {
      report.unit_deviation = project(m_next);
    } catch (const ProjectionError& e) {
      throw BlowUpError(step_index_ + 1, report.max_tilde_norm, e.what());
    }
    copy_interior(tilde_new_, mt_.next());
    update_source(p, m_next);
    copy_interior(f_new(), f_.next());
    m_.commit();
    mt_.commit();
    f_.commit();

    ++step_index_;
    time_ = t_new;
    scheme_log_.push_back(s);
    max_unit_deviation_ = std::max(max_unit_deviation_, report.unit_deviation);
    report_ = report;
    return report;
  }

 private:
  const HelmholtzPlan& plan_for(Scheme s, double diffusion) {
    auto it = plans_.find(order_of(s));
    if (it == plans_.end() || it->second.diffusion() != diffusion) {
      const double shift = bdf_coefficients(s).lead / opts_.k;
      it = plans_.insert_or_assign(order_of(s), HelmholtzPlan(mesh_, stencil_, shift, diffusion)).first;
    }
    return it->second;
  }

  double implicit_residual(const HelmholtzPlan& plan, const std::array<std::vector<double>, 3>& rhs) const {
    const VectorField applied = apply_helmholtz(plan, tilde_new_);
    double res = 0.0, scale = 0.0;
    std::size_t n = 0;
    for (int l = 0; l < mesh_.dims[2]; ++l)
      for (int j = 0; j < mesh_.dims[1]; ++j)
        for (int i = 0; i < mesh_.dims[0]; ++i, ++n)
          for (int c = 0; c < 3; ++c) {
            res = std::max(res, std::abs(applied(c, i, j, l) - rhs[c][n]));
            scale = std::max(scale, std::abs(rhs[c][n]));
          }
    return scale > 0.0 ? res / scale : res;
  }

  void update_source(const ModelParams& p, const VectorField& m) {
    if (p.stray_enabled) {
      if (!kernel_) throw std::invalid_argument("SchemeState: stray field enabled without a demag kernel");
      stray_field_into(*kernel_, m, h_s_, demag_ws_);
    } else {
      h_s_.fill(0.0);
    }
    source_term_into(p, m, &h_s_, f_scratch());
  }

  VectorField& f_scratch() { return f_tmp_; }
  const VectorField& f_new() const { return f_tmp_; }

  StepperOptions opts_;
  std::shared_ptr<const DemagKernel> kernel_;
  StencilOrder stencil_;
  MeshSpec mesh_;
  FieldHistory m_, mt_, f_;
  VectorField m_hat_, mt_hat_, f_hat_, f_tmp_, lap_, forcing_, h_s_, tilde_new_;
  ScalarField grad_sq_;
  std::array<fft::RealBuffer, 3> rhs_;
  fft::RealBuffer scratch_;
  DemagWorkspace demag_ws_;
  std::map<int, HelmholtzPlan> plans_;
  double time_ = 0.0;
  int step_index_ = 0;
  std::vector<Scheme> scheme_log_;
  double max_unit_deviation_ = 0.0;
  StepReport report_;
};

/// Advances one step of `state`'s scheme, falling back to the startup
/// schemes while the history is shorter than the scheme's order.
inline StepReport step(SchemeState& state, const ModelParams& p, const Forcing* forcing = nullptr) {
  return state.advance(p, forcing);
}

/// Runs the startup steps (BDF1, then BDF2 for a BDF3 run) so that the
/// next call to `step` uses the full scheme. No-op for BDF1.
inline void bootstrap(SchemeState& state, const ModelParams& p, const Forcing* forcing = nullptr) {
  if (state.step_index() != 0) throw std::logic_error("bootstrap: state has already been stepped");
  while (state.next_scheme() != state.scheme()) state.advance(p, forcing);
}

}  // namespace llg
