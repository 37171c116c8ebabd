#pragma once

// Experiment drivers: manufactured-solution sweeps, timing sweeps, and the
// physical film and strip runs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "llg/diagnostics.hpp"
#include "llg/field_io.hpp"
#include "llg/fields.hpp"
#include "llg/harness/config.hpp"
#include "llg/harness/csv.hpp"
#include "llg/steppers.hpp"

namespace llg::harness {

// ---------------------------------------------------------------------------
// Manufactured-solution runs

struct AccuracyRow {
  Scheme scheme = Scheme::BDF1;
  double k = 0.0;
  double h = 0.0;
  int cells = 0;  // per active axis
  int steps = 0;
  bool failed = false;
  std::string message;
  ErrorNorms error;
  double wall_seconds = 0.0;
  double max_unit_deviation = 0.0;
};

struct NormOrders {
  std::optional<double> linf, l2, h1;
};

struct AccuracyTable {
  std::vector<AccuracyRow> rows;
  std::map<Scheme, NormOrders> orders;  // fitted against k (time) or h (space)
};

inline MeshSpec manufactured_mesh(int dim, int cells) {
  return dim == 1 ? make_mesh({cells, 1, 1}, {1.0, 1.0, 1.0}) : make_mesh({cells, cells, cells}, {1.0, 1.0, 1.0});
}

/// One manufactured run to t = steps * k; errors at the final time.
inline AccuracyRow run_manufactured(Scheme scheme, int dim, int cells, double k, int steps, double alpha,
                                    const RunConfig& cfg) {
  AccuracyRow row;
  row.scheme = scheme;
  row.k = k;
  row.h = 1.0 / cells;
  row.cells = cells;
  row.steps = steps;

  const MeshSpec mesh = manufactured_mesh(dim, cells);
  const ManufacturedSolution sol(dim);
  ModelParams p;
  p.epsilon = 1.0;
  p.alpha = alpha;
  p.forcing = true;
  StepperOptions opts;
  opts.scheme = scheme;
  opts.k = k;
  opts.stencil = cfg.stencil;
  opts.tilde = cfg.tilde;
  opts.residual_every = cfg.residual_every;
  opts.blowup_threshold = cfg.blowup_threshold;
  const Forcing g = [&](double t, VectorField& out) { sol.forcing_into(alpha, t, out); };

  const auto t0 = std::chrono::steady_clock::now();
  try {
    SchemeState state(mesh, opts);
    if (cfg.startup == Startup::Exact) {
      std::vector<VectorField> seeds;
      for (int i = 0; i < std::min(order_of(scheme), steps + 1); ++i) seeds.push_back(sol.sample(mesh, i * k));
      state.seed(seeds, p);
    } else {
      state.initialize(sol.sample(mesh, 0.0), p);
    }
    while (state.step_index() < steps) step(state, p, &g);
    row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    row.error = error_norms(state.m(), sol.sample(mesh, state.time()), state.stencil());
    row.max_unit_deviation = state.max_unit_deviation();
    if (!std::isfinite(row.error.linf)) throw BlowUpError(steps, std::numeric_limits<double>::infinity(), "non-finite error");
  } catch (const BlowUpError& e) {
    row.failed = true;
    row.message = e.what();
  }
  return row;
}

/// Cells per axis for a time-sweep entry.
inline int time_sweep_cells(const RunConfig& cfg, Scheme s, double k) {
  if (cfg.coupling == Coupling::None) return static_cast<int>(std::lround(1.0 / cfg.h));
  // k = h^2 (first order), k = h (second), k = h^{4/3} (third).
  static constexpr double exponent[3] = {2.0, 1.0, 4.0 / 3.0};
  return std::max(2, static_cast<int>(std::lround(std::pow(k, -1.0 / exponent[order_of(s) - 1]))));
}

inline void fit_orders(AccuracyTable& table, bool against_k) {
  for (Scheme s : {Scheme::BDF1, Scheme::BDF2, Scheme::BDF3}) {
    std::vector<double> x, a, b, c;
    for (const auto& r : table.rows)
      if (r.scheme == s && !r.failed && r.error.linf > 0.0) {
        x.push_back(against_k ? r.k : r.h);
        a.push_back(r.error.linf);
        b.push_back(r.error.l2);
        c.push_back(r.error.h1);
      }
    if (x.size() < 2) continue;
    NormOrders o;
    try {
      o.linf = fit_order(x, a);
      o.l2 = fit_order(x, b);
      o.h1 = fit_order(x, c);
    } catch (const std::invalid_argument&) {
    }
    table.orders[s] = o;
  }
}

/// Temporal sweep: k = T/n for each configured divisor.
inline AccuracyTable run_accuracy_time(const RunConfig& cfg, const std::function<void(const AccuracyRow&)>& progress = {}) {
  AccuracyTable table;
  const double alpha = cfg.alphas.front();
  for (Scheme s : cfg.schemes)
    for (int n : cfg.divisors_for(s)) {
      const double k = cfg.final_time / n;
      auto row = run_manufactured(s, cfg.dim, time_sweep_cells(cfg, s, k), k, n, alpha, cfg);
      if (progress) progress(row);
      table.rows.push_back(std::move(row));
    }
  fit_orders(table, true);
  return table;
}

/// Spatial sweep: fixed k, h = 1/N.
inline AccuracyTable run_accuracy_space(const RunConfig& cfg, const std::function<void(const AccuracyRow&)>& progress = {}) {
  AccuracyTable table;
  const double alpha = cfg.alphas.front();
  const int steps = static_cast<int>(std::lround(cfg.final_time / cfg.k));
  for (Scheme s : cfg.schemes)
    for (int n : cfg.cells) {
      auto row = run_manufactured(s, cfg.dim, n, cfg.k, steps, alpha, cfg);
      if (progress) progress(row);
      table.rows.push_back(std::move(row));
    }
  fit_orders(table, false);
  return table;
}

// ---------------------------------------------------------------------------
// Efficiency

struct EfficiencyRow {
  std::string sweep;  // "k" or "h"
  AccuracyRow run;    // wall_seconds is the minimum over repeats
};

struct EfficiencyMatch {
  std::string sweep;
  double target_error = 0.0;            // BDF2 error at its middle sweep point
  double reference_seconds = 0.0;       // BDF2 wall time there
  std::optional<AccuracyRow> cheapest;  // cheapest BDF3 run reaching the target
  bool faster() const { return cheapest && cheapest->wall_seconds < reference_seconds; }
};

struct EfficiencyResult {
  std::vector<EfficiencyRow> rows;
  std::vector<EfficiencyMatch> matches;
};

inline AccuracyRow timed_run(Scheme s, int dim, int cells, double k, int steps, double alpha, const RunConfig& cfg) {
  AccuracyRow best;
  for (int r = 0; r < cfg.repeats; ++r) {
    AccuracyRow row = run_manufactured(s, dim, cells, k, steps, alpha, cfg);
    if (r == 0 || row.wall_seconds < best.wall_seconds) best = row;
  }
  return best;
}

inline std::optional<EfficiencyMatch> match_efficiency(const std::vector<EfficiencyRow>& rows, const std::string& sweep) {
  std::vector<const AccuracyRow*> bdf2, bdf3;
  for (const auto& r : rows) {
    if (r.sweep != sweep || r.run.failed) continue;
    if (r.run.scheme == Scheme::BDF2) bdf2.push_back(&r.run);
    if (r.run.scheme == Scheme::BDF3) bdf3.push_back(&r.run);
  }
  if (bdf2.empty()) return std::nullopt;
  EfficiencyMatch m;
  m.sweep = sweep;
  const AccuracyRow& mid = *bdf2[bdf2.size() / 2];
  m.target_error = mid.error.linf;
  m.reference_seconds = mid.wall_seconds;
  for (const AccuracyRow* r : bdf3)
    if (r->error.linf <= m.target_error && (!m.cheapest || r->wall_seconds < m.cheapest->wall_seconds)) m.cheapest = *r;
  return m;
}

inline EfficiencyResult run_efficiency(const RunConfig& cfg, const std::function<void(const EfficiencyRow&)>& progress = {}) {
  EfficiencyResult out;
  const double alpha = cfg.alphas.front();
  for (Scheme s : cfg.schemes)
    for (int n : cfg.divisors_for(s)) {
      const double k = cfg.final_time / n;
      EfficiencyRow row{"k", timed_run(s, cfg.dim, time_sweep_cells(cfg, s, k), k, n, alpha, cfg)};
      if (progress) progress(row);
      out.rows.push_back(std::move(row));
    }
  const int steps = static_cast<int>(std::lround(cfg.final_time / cfg.k));
  for (Scheme s : cfg.schemes)
    for (int n : cfg.cells) {
      EfficiencyRow row{"h", timed_run(s, cfg.dim, n, cfg.k, steps, alpha, cfg)};
      if (progress) progress(row);
      out.rows.push_back(std::move(row));
    }
  for (const char* sweep : {"k", "h"})
    if (auto m = match_efficiency(out.rows, sweep)) out.matches.push_back(*m);
  return out;
}

// ---------------------------------------------------------------------------
// Physical runs

/// Reduced model for a configured material and box. Lengths are scaled by
/// the largest box edge.
struct PhysicalSetup {
  MeshSpec mesh;
  ReducedConstants reduced;
  double length_m = 0.0;
  double time_unit_s = 0.0;
  double energy_unit_J = 0.0;  // mu0 Ms^2 / 2 * L^3
  Vec3 h_ext{0, 0, 0};
  std::shared_ptr<const DemagKernel> kernel;

  ModelParams params(double alpha, bool with_field) const {
    ModelParams p;
    p.epsilon = reduced.epsilon;
    p.aniso_q = reduced.q;
    p.alpha = alpha;
    p.stray_enabled = kernel != nullptr;
    if (with_field) p.h_ext = h_ext;
    return p;
  }
  double reduced_time(double seconds) const { return seconds / time_unit_s; }
};

inline PhysicalSetup make_physical_setup(const RunConfig& cfg) {
  PhysicalSetup s;
  const double lnm = std::max({cfg.extent_nm[0], cfg.extent_nm[1], cfg.extent_nm[2]});
  s.length_m = lnm * 1e-9;
  s.mesh = make_mesh(cfg.grid, {cfg.extent_nm[0] / lnm, cfg.extent_nm[1] / lnm, cfg.extent_nm[2] / lnm});
  s.reduced = nondimensionalize(cfg.cex, cfg.ku, cfg.ms, s.length_m);
  s.time_unit_s = time_unit_seconds(cfg.ms, cfg.gamma);
  s.energy_unit_J = 0.5 * mu0 * cfg.ms * cfg.ms * s.length_m * s.length_m * s.length_m;
  if (cfg.field_mT != 0.0) {
    const double hm = tesla_to_reduced(cfg.field_mT * 1e-3, cfg.ms);
    const double n = norm(cfg.field_direction);
    for (int a = 0; a < 3; ++a) s.h_ext[a] = hm * cfg.field_direction[a] / n;
  }
  if (cfg.stray) s.kernel = build_demag_kernel(s.mesh);
  return s;
}

struct EnergySample {
  int step = 0;
  double time_ns = 0.0;
  EnergyBreakdown energy;  // joules
};

struct WallSample {
  int step = 0;
  double time_ns = 0.0;
  std::optional<double> position_nm;
};

struct MagneticRun {
  Scheme scheme = Scheme::BDF1;
  double alpha = 0.0;
  double k_ps = 0.0;
  int planned_steps = 0;
  int steps_done = 0;
  bool blew_up = false;
  int blowup_step = 0;
  std::string message;
  double max_unit_deviation = 0.0;
  std::vector<EnergySample> energy;
  std::vector<WallSample> wall;

  std::string status() const { return blew_up ? "blew_up" : "completed"; }
  /// Final minus initial wall position, when both exist.
  std::optional<double> wall_displacement_nm() const {
    if (wall.empty() || !wall.front().position_nm || !wall.back().position_nm) return std::nullopt;
    return *wall.back().position_nm - *wall.front().position_nm;
  }
};

inline std::string run_tag(Scheme s, double alpha, double k_ps) {
  return to_string(s) + "_a" + format_number(alpha) + "_k" + format_number(k_ps) + "ps";
}

/// Standard Neel ansatz m = (cos t, sin t, 0), t = 2 atan(exp((x - xc)/delta)).
inline VectorField neel_profile(const MeshSpec& mesh, double center, double width) {
  VectorField m(mesh);
  for_each_cell(mesh, [&](int i, int j, int l) {
    const double th = 2.0 * std::atan(std::exp((mesh.center(0, i) - center) / width));
    set(m, mesh.offset(i, j, l), {std::cos(th), std::sin(th), 0.0});
  });
  return m;
}

inline VectorField initial_state(const RunConfig& cfg, const PhysicalSetup& setup) {
  if (cfg.experiment == Experiment::NeelWall) {
    const double width = std::sqrt(setup.reduced.epsilon / std::max(setup.reduced.q, 1e-300));
    const double center = setup.mesh.origin[0] + 0.5 * setup.mesh.dims[0] * setup.mesh.spacing[0];
    return neel_profile(setup.mesh, center, width);
  }
  return projected(fill_value(setup.mesh, cfg.initial_direction));
}

/// Output hooks for snapshots; the run itself never touches the filesystem.
struct MagneticOutput {
  std::function<void(const std::string& tag, int step, const VectorField& m)> snapshot;
};

/// BDF1 relaxation without external field; used to settle the Neel ansatz.
inline VectorField relax_bdf1(const VectorField& m0, const PhysicalSetup& setup, double alpha, double k, int steps,
                              const RunConfig& cfg) {
  StepperOptions opts;
  opts.scheme = Scheme::BDF1;
  opts.k = k;
  opts.stencil = cfg.stencil;
  opts.blowup_threshold = cfg.blowup_threshold;
  SchemeState state(setup.mesh, opts, setup.kernel);
  const ModelParams p = setup.params(alpha, false);
  state.initialize(m0, p);
  for (int n = 0; n < steps; ++n) step(state, p);
  VectorField out(setup.mesh);
  copy_interior(state.m(), out);
  return out;
}

inline MagneticRun run_magnetic(const RunConfig& cfg, const PhysicalSetup& setup, Scheme scheme, double alpha,
                                double k_ps, const MagneticOutput& output = {}) {
  MagneticRun run;
  run.scheme = scheme;
  run.alpha = alpha;
  run.k_ps = k_ps;
  const double k_s = k_ps * 1e-12;
  const double k = setup.reduced_time(k_s);
  run.planned_steps = static_cast<int>(std::lround(cfg.duration_ns * 1e-9 / k_s));
  const std::string tag = run_tag(scheme, alpha, k_ps);
  const bool neel = cfg.experiment == Experiment::NeelWall;

  StepperOptions opts;
  opts.scheme = scheme;
  opts.k = k;
  opts.stencil = cfg.stencil;
  opts.tilde = cfg.tilde;
  opts.residual_every = cfg.residual_every;
  opts.blowup_threshold = cfg.blowup_threshold;
  SchemeState state(setup.mesh, opts, setup.kernel);
  const ModelParams p = setup.params(alpha, true);

  VectorField m0 = initial_state(cfg, setup);
  if (neel && cfg.relax_ns > 0.0) {
    const int relax_steps = static_cast<int>(std::lround(cfg.relax_ns * 1e-9 / k_s));
    try {
      m0 = relax_bdf1(m0, setup, alpha, k, relax_steps, cfg);
    } catch (const BlowUpError& e) {
      run.blew_up = true;
      run.message = std::string("relaxation: ") + e.what();
      return run;
    }
  }
  state.initialize(m0, p);

  const double to_ns = setup.time_unit_s * 1e9;
  auto record = [&](int n) {
    if (n % cfg.energy_every == 0 || n == run.planned_steps) {
      const EnergyBreakdown e = energy(state.m(), p, &state.stray(), state.stencil());
      run.energy.push_back({n, state.time() * to_ns, e.scaled(setup.energy_unit_J)});
    }
    if (neel && (n % cfg.trajectory_every == 0 || n == run.planned_steps)) {
      WallSample w{n, state.time() * to_ns, std::nullopt};
      if (auto x = wall_position(state.m())) w.position_nm = *x * setup.length_m * 1e9;
      run.wall.push_back(w);
    }
    if (output.snapshot && (n == 0 || n == run.planned_steps || (cfg.snapshot_every > 0 && n % cfg.snapshot_every == 0)))
      output.snapshot(tag, n, state.m());
  };
  record(0);
  try {
    while (state.step_index() < run.planned_steps) {
      step(state, p);
      record(state.step_index());
    }
  } catch (const BlowUpError& e) {
    run.blew_up = true;
    run.blowup_step = e.step();
    run.message = e.what();
    if (output.snapshot) output.snapshot(tag, state.step_index(), state.m());
  }
  run.steps_done = state.step_index();
  run.max_unit_deviation = state.max_unit_deviation();
  return run;
}

inline std::vector<MagneticRun> run_magnetic_sweep(const RunConfig& cfg, const MagneticOutput& output = {},
                                                   const std::function<void(const MagneticRun&)>& progress = {}) {
  const PhysicalSetup setup = make_physical_setup(cfg);
  std::vector<MagneticRun> runs;
  for (Scheme s : cfg.schemes)
    for (double a : cfg.alphas)
      for (double k : cfg.steps_ps) {
        runs.push_back(run_magnetic(cfg, setup, s, a, k, output));
        if (progress) progress(runs.back());
      }
  return runs;
}

// ---------------------------------------------------------------------------
// Energy-series properties

/// Largest step-to-step increase after the first `skip_fraction` of the
/// series, relative to |E(0)|.
inline double max_late_increase(const std::vector<EnergySample>& e, double skip_fraction) {
  if (e.size() < 2) return 0.0;
  const double e0 = std::abs(e.front().energy.total);
  const int last = e.back().step;
  double worst = 0.0;
  for (std::size_t i = 1; i < e.size(); ++i) {
    if (e[i - 1].step < skip_fraction * last) continue;
    worst = std::max(worst, e[i].energy.total - e[i - 1].energy.total);
  }
  return e0 > 0.0 ? worst / e0 : worst;
}

/// Largest rise above the running minimum, relative to |E(0)|.
inline double max_rise_above_minimum(const std::vector<EnergySample>& e) {
  if (e.empty()) return 0.0;
  const double e0 = std::abs(e.front().energy.total);
  double lo = e.front().energy.total, worst = 0.0;
  for (const auto& s : e) {
    lo = std::min(lo, s.energy.total);
    worst = std::max(worst, s.energy.total - lo);
  }
  return e0 > 0.0 ? worst / e0 : worst;
}

// ---------------------------------------------------------------------------
// Writers

inline void write_accuracy(const AccuracyTable& t, const std::filesystem::path& dir) {
  CsvWriter table(dir / "accuracy.csv", {"scheme", "k", "h", "linf", "l2", "h1"});
  CsvWriter runs(dir / "runs.csv", {"scheme", "k", "h", "steps", "status", "wall_seconds", "max_unit_deviation"});
  for (const auto& r : t.rows) {
    const std::string f = "failed";
    table.row({to_string(r.scheme), format_number(r.k), format_number(r.h), r.failed ? f : format_number(r.error.linf),
               r.failed ? f : format_number(r.error.l2), r.failed ? f : format_number(r.error.h1)});
    runs.row({to_string(r.scheme), format_number(r.k), format_number(r.h), std::to_string(r.steps),
              r.failed ? "failed" : "completed", format_number(r.wall_seconds), format_number(r.max_unit_deviation)});
  }
  CsvWriter orders(dir / "orders.csv", {"scheme", "linf", "l2", "h1"});
  auto o = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string("failed"); };
  for (const auto& [s, n] : t.orders) orders.row({to_string(s), o(n.linf), o(n.l2), o(n.h1)});
}

inline void write_efficiency(const EfficiencyResult& r, const std::filesystem::path& dir) {
  CsvWriter rows(dir / "efficiency.csv", {"sweep", "scheme", "k", "h", "linf", "wall_seconds"});
  for (const auto& e : r.rows)
    rows.row({e.sweep, to_string(e.run.scheme), format_number(e.run.k), format_number(e.run.h),
              e.run.failed ? "failed" : format_number(e.run.error.linf), format_number(e.run.wall_seconds)});
  CsvWriter m(dir / "efficiency_match.csv",
              {"sweep", "target_linf", "bdf2_seconds", "bdf3_seconds", "bdf3_k", "bdf3_h", "bdf3_faster"});
  for (const auto& x : r.matches) {
    const std::string na = "none";
    m.row({x.sweep, format_number(x.target_error), format_number(x.reference_seconds),
           x.cheapest ? format_number(x.cheapest->wall_seconds) : na, x.cheapest ? format_number(x.cheapest->k) : na,
           x.cheapest ? format_number(x.cheapest->h) : na, x.faster() ? "true" : "false"});
  }
}

inline void write_energy(const MagneticRun& run, const std::filesystem::path& path) {
  CsvWriter w(path, {"step", "time", "exchange", "anisotropy", "zeeman", "stray", "total"});
  for (const auto& s : run.energy)
    w.row({std::to_string(s.step), format_number(s.time_ns), format_number(s.energy.exchange),
           format_number(s.energy.anisotropy), format_number(s.energy.zeeman), format_number(s.energy.stray),
           format_number(s.energy.total)});
}

inline void write_wall(const MagneticRun& run, const std::filesystem::path& path) {
  CsvWriter w(path, {"step", "time", "position"});
  for (const auto& s : run.wall)
    w.row({std::to_string(s.step), format_number(s.time_ns), s.position_nm ? format_number(*s.position_nm) : "none"});
}

inline void write_magnetic_summary(const std::vector<MagneticRun>& runs, const std::filesystem::path& path) {
  CsvWriter w(path, {"scheme", "alpha", "k_ps", "status", "blowup_step", "steps", "max_unit_deviation",
                     "initial_energy", "final_energy", "max_rise", "wall_displacement_nm"});
  for (const auto& r : runs) {
    const std::string none = "none";
    const auto d = r.wall_displacement_nm();
    w.row({to_string(r.scheme), format_number(r.alpha), format_number(r.k_ps), r.status(), std::to_string(r.blowup_step),
           std::to_string(r.steps_done), format_number(r.max_unit_deviation),
           r.energy.empty() ? none : format_number(r.energy.front().energy.total),
           r.energy.empty() ? none : format_number(r.energy.back().energy.total),
           format_number(max_rise_above_minimum(r.energy)), d ? format_number(*d) : none});
  }
}

inline void write_metadata(const RunConfig& cfg, const std::filesystem::path& dir,
                           const std::optional<PhysicalSetup>& setup = std::nullopt) {
  std::filesystem::create_directories(dir);
  std::ofstream os(dir / "config.ini");
  os << serialize(cfg);
  if (setup) {
    std::ofstream md(dir / "metadata.txt");
    md << "length_m = " << format_number(setup->length_m) << "\n";
    md << "time_unit_s = " << format_number(setup->time_unit_s) << "\n";
    md << "energy_unit_J = " << format_number(setup->energy_unit_J) << "\n";
    md << "epsilon = " << format_number(setup->reduced.epsilon) << "\n";
    md << "q = " << format_number(setup->reduced.q) << "\n";
    md << "h_ext = " << format_number(setup->h_ext[0]) << " " << format_number(setup->h_ext[1]) << " "
       << format_number(setup->h_ext[2]) << "\n";
    md << "field_mT = " << format_number(cfg.field_mT) << "\n";
  }
}

/// Snapshot writer producing m_<tag>_<step>.llgf and angle_<tag>_<step>.llgf.
inline MagneticOutput snapshot_writer(const std::filesystem::path& dir) {
  MagneticOutput out;
  out.snapshot = [dir](const std::string& tag, int step, const VectorField& m) {
    std::filesystem::create_directories(dir);
    write_field((dir / ("m_" + tag + "_" + std::to_string(step) + ".llgf")).string(), m);
    write_field((dir / ("angle_" + tag + "_" + std::to_string(step) + ".llgf")).string(), angle_field(m));
  };
  return out;
}

}  // namespace llg::harness
