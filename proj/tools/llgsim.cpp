// llgsim: runs configured experiments and writes CSV tables and field dumps.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include "llg/harness/harness.hpp"

namespace fs = std::filesystem;
using namespace llg;
using namespace llg::harness;

namespace {

std::string fmt_opt(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *v);
  return buf;
}

void print_row(const AccuracyRow& r) {
  if (r.failed)
    std::printf("%-5s k=%-12.5g h=%-10.5g failed: %s\n", to_string(r.scheme).c_str(), r.k, r.h, r.message.c_str());
  else
    std::printf("%-5s k=%-12.5g h=%-10.5g linf=%.4e l2=%.4e h1=%.4e  (%.3fs)\n", to_string(r.scheme).c_str(), r.k, r.h,
                r.error.linf, r.error.l2, r.error.h1, r.wall_seconds);
  std::fflush(stdout);
}

void print_orders(const AccuracyTable& t) {
  for (const auto& [s, o] : t.orders)
    std::printf("order %-5s linf %s  l2 %s  h1 %s\n", to_string(s).c_str(), fmt_opt(o.linf).c_str(),
                fmt_opt(o.l2).c_str(), fmt_opt(o.h1).c_str());
}

void print_magnetic(const MagneticRun& r) {
  std::printf("%-5s alpha=%-5g k=%-4g ps  %s", to_string(r.scheme).c_str(), r.alpha, r.k_ps, r.status().c_str());
  if (r.blew_up) std::printf(" at step %d", r.blowup_step);
  if (!r.energy.empty())
    std::printf("  E0=%.4e J  E=%.4e J  rise=%.3g", r.energy.front().energy.total, r.energy.back().energy.total,
                max_rise_above_minimum(r.energy));
  if (auto d = r.wall_displacement_nm()) std::printf("  wall shift=%.2f nm", *d);
  if (r.blew_up) std::printf("  (%s)", r.message.c_str());
  std::printf("\n");
  std::fflush(stdout);
}

RunConfig load_for(const std::string& path, Experiment expected) {
  RunConfig cfg = load_config(path);
  if (cfg.experiment != expected && !(expected == Experiment::RelaxFilm && cfg.experiment == Experiment::EnergyCurves) &&
      !(expected == Experiment::EnergyCurves && cfg.experiment == Experiment::RelaxFilm))
    throw ConfigError("config experiment '" + to_string(cfg.experiment) + "' does not match subcommand");
  return cfg;
}

int run(Experiment e, const std::string& config, const fs::path& out) {
  RunConfig cfg = load_for(config, e);
  if (e == Experiment::EnergyCurves || e == Experiment::RelaxFilm) cfg.experiment = e;
  switch (e) {
    case Experiment::AccuracyTime:
    case Experiment::AccuracySpace: {
      write_metadata(cfg, out);
      const AccuracyTable t = e == Experiment::AccuracyTime ? run_accuracy_time(cfg, print_row) : run_accuracy_space(cfg, print_row);
      print_orders(t);
      write_accuracy(t, out);
      break;
    }
    case Experiment::Efficiency: {
      write_metadata(cfg, out);
      const EfficiencyResult r = run_efficiency(cfg, [](const EfficiencyRow& row) {
        std::printf("[%s] ", row.sweep.c_str());
        print_row(row.run);
      });
      for (const auto& m : r.matches)
        std::printf("%s-sweep: target %.3e, bdf2 %.4fs, bdf3 %s\n", m.sweep.c_str(), m.target_error,
                    m.reference_seconds, m.cheapest ? (std::to_string(m.cheapest->wall_seconds) + "s").c_str() : "none");
      write_efficiency(r, out);
      break;
    }
    case Experiment::RelaxFilm:
    case Experiment::EnergyCurves:
    case Experiment::NeelWall: {
      const PhysicalSetup setup = make_physical_setup(cfg);
      write_metadata(cfg, out, setup);
      MagneticOutput output;
      if (e != Experiment::EnergyCurves) output = snapshot_writer(out / "snapshots");
      std::vector<MagneticRun> runs;
      for (Scheme s : cfg.schemes)
        for (double a : cfg.alphas)
          for (double k : cfg.steps_ps) {
            runs.push_back(run_magnetic(cfg, setup, s, a, k, output));
            const MagneticRun& r = runs.back();
            print_magnetic(r);
            write_energy(r, out / ("energy_" + run_tag(s, a, k) + ".csv"));
            if (e == Experiment::NeelWall) write_wall(r, out / ("wall_" + run_tag(s, a, k) + ".csv"));
          }
      write_magnetic_summary(runs, out / "runs.csv");
      break;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-implicit BDF solvers for the Landau-Lifshitz-Gilbert equation"};
  app.require_subcommand(1);
  std::string config;
  std::string out;
  const std::map<std::string, Experiment> commands{
      {"accuracy-time", Experiment::AccuracyTime}, {"accuracy-space", Experiment::AccuracySpace},
      {"efficiency", Experiment::Efficiency},      {"relax-film", Experiment::RelaxFilm},
      {"energy-curves", Experiment::EnergyCurves}, {"neel-wall", Experiment::NeelWall},
  };
  for (const auto& [name, exp] : commands) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "INI run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory")->required();
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    for (const auto& [name, exp] : commands)
      if (app.got_subcommand(name)) return run(exp, config, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
