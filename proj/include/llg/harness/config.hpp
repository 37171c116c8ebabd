#pragma once

// Run configuration: INI text with sections, parsed with Boost.PropertyTree.
//
//   [run]       experiment, schemes, alpha, tilde, stencil, startup, ...
//   [accuracy]  manufactured-solution sweeps
//   [material]  physical constants and geometry
//   [dynamics]  physical time stepping, fields, output cadence

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <array>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "llg/steppers.hpp"

namespace llg::harness {

enum class Experiment { AccuracyTime, AccuracySpace, Efficiency, RelaxFilm, EnergyCurves, NeelWall };

/// How the first s-1 history levels of a BDF-s run are produced.
enum class Startup {
  Bootstrap,  // lower-order steps of size k
  Exact,      // manufactured solution sampled at t = k, 2k (accuracy runs only)
};

enum class Coupling { None, Scaled };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  Experiment experiment = Experiment::AccuracyTime;
  std::vector<Scheme> schemes{Scheme::BDF1, Scheme::BDF2, Scheme::BDF3};
  std::vector<double> alphas{10.0};
  TildeSource tilde = TildeSource::Unprojected;
  std::optional<StencilOrder> stencil;  // scheme default when empty
  Startup startup = Startup::Exact;
  double blowup_threshold = 1e3;
  int residual_every = 0;
  std::uint64_t seed = 0;

  // [accuracy]
  int dim = 1;
  double final_time = 0.1;
  double h = 1e-4;                                   // time sweeps without coupling
  std::map<Scheme, std::vector<int>> divisors;       // k = T / n
  Coupling coupling = Coupling::None;
  double k = 1e-5;                                   // space sweeps
  std::vector<int> cells{16, 32, 64, 128, 256};      // space sweeps
  int repeats = 1;                                   // timing repetitions

  // [material]
  double cex = 1.3e-11;
  double ku = 100.0;
  double ms = 8.0e5;
  double gamma = 1.76e11;
  Vec3 extent_nm{480.0, 480.0, 20.0};
  Index3 grid{100, 100, 4};

  // [dynamics]
  double duration_ns = 2.0;
  std::vector<double> steps_ps{1.0};
  double field_mT = 0.0;
  Vec3 field_direction{1.0, 0.0, 0.0};
  bool stray = true;
  Vec3 initial_direction{1.0, 0.0, 0.0};
  double relax_ns = 0.1;
  int snapshot_every = 0;    // 0: initial and final only
  int energy_every = 1;
  int trajectory_every = 10;

  bool operator==(const RunConfig&) const = default;

  /// Divisor list for one scheme, falling back to the shared list.
  const std::vector<int>& divisors_for(Scheme s) const {
    auto it = divisors.find(s);
    if (it != divisors.end()) return it->second;
    auto shared = divisors.find(Scheme(0));
    if (shared == divisors.end()) throw ConfigError("accuracy.divisors missing for " + to_string(s));
    return shared->second;
  }

  void validate() const;
};

// ---------------------------------------------------------------------------
// Text conversions

inline std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::AccuracyTime: return "accuracy_time";
    case Experiment::AccuracySpace: return "accuracy_space";
    case Experiment::Efficiency: return "efficiency";
    case Experiment::RelaxFilm: return "relax_film";
    case Experiment::EnergyCurves: return "energy_curves";
    case Experiment::NeelWall: return "neel_wall";
  }
  return "?";
}

inline Experiment parse_experiment(const std::string& s) {
  for (Experiment e : {Experiment::AccuracyTime, Experiment::AccuracySpace, Experiment::Efficiency,
                       Experiment::RelaxFilm, Experiment::EnergyCurves, Experiment::NeelWall})
    if (to_string(e) == s) return e;
  throw ConfigError("unknown experiment '" + s + "'");
}

inline Scheme parse_scheme(const std::string& s) {
  if (s == "bdf1") return Scheme::BDF1;
  if (s == "bdf2") return Scheme::BDF2;
  if (s == "bdf3") return Scheme::BDF3;
  throw ConfigError("unknown scheme '" + s + "'");
}

namespace detail {

inline std::string fmt(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  while (b < e && *b == ' ') ++b;
  auto r = std::from_chars(b, e, v);
  if (r.ec != std::errc() || r.ptr != e || !std::isfinite(v)) throw ConfigError(key + ": not a number: '" + s + "'");
  return v;
}

inline long long parse_int(const std::string& key, const std::string& s) {
  long long v = 0;
  const char* b = s.data();
  const char* e = b + s.size();
  while (b < e && *b == ' ') ++b;
  auto r = std::from_chars(b, e, v);
  if (r.ec != std::errc() || r.ptr != e) throw ConfigError(key + ": not an integer: '" + s + "'");
  return v;
}

inline std::vector<std::string> words(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  throw ConfigError(key + ": expected true/false, got '" + s + "'");
}

template <class T, class Fn>
std::string join(const std::vector<T>& v, Fn&& f) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + f(v[i]);
  return out;
}

/// Reads keys out of a property tree and tracks which ones were consumed.
class Reader {
 public:
  explicit Reader(const boost::property_tree::ptree& tree) : tree_(tree) {}

  std::optional<std::string> get(const std::string& key) {
    auto v = tree_.get_optional<std::string>(boost::property_tree::ptree::path_type(key, '.'));
    if (!v) return std::nullopt;
    used_.push_back(key);
    return *v;
  }
  template <class Fn>
  void read(const std::string& key, Fn&& fn) {
    if (auto v = get(key)) fn(*v);
  }
  double number(const std::string& key, double fallback) {
    auto v = get(key);
    return v ? parse_double(key, *v) : fallback;
  }
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    auto v = get(key);
    if (!v) return fallback;
    std::vector<double> out;
    for (const auto& w : words(*v)) out.push_back(parse_double(key, w));
    return out;
  }
  std::vector<int> ints(const std::string& key) {
    std::vector<int> out;
    if (auto v = get(key))
      for (const auto& w : words(*v)) out.push_back(static_cast<int>(parse_int(key, w)));
    return out;
  }
  Vec3 vec3(const std::string& key, Vec3 fallback) {
    auto v = numbers(key, {fallback[0], fallback[1], fallback[2]});
    if (v.size() != 3) throw ConfigError(key + ": expected three numbers");
    return {v[0], v[1], v[2]};
  }

  /// Rejects keys that no reader asked for.
  void check_all_used() const {
    for (const auto& [section, body] : tree_) {
      if (body.empty() && !body.data().empty()) throw ConfigError("key outside a section: " + section);
      for (const auto& [key, value] : body) {
        const std::string full = section + "." + key;
        if (std::find(used_.begin(), used_.end(), full) == used_.end()) throw ConfigError("unknown key " + full);
      }
    }
  }

 private:
  const boost::property_tree::ptree& tree_;
  std::vector<std::string> used_;
};

}  // namespace detail

inline void RunConfig::validate() const {
  if (schemes.empty()) throw ConfigError("run.schemes must not be empty");
  if (alphas.empty()) throw ConfigError("run.alpha must not be empty");
  for (double a : alphas)
    if (!(a > 0.0)) throw ConfigError("run.alpha values must be > 0");
  if (!(blowup_threshold > 1.0)) throw ConfigError("run.blowup_threshold must be > 1");
  if (residual_every < 0) throw ConfigError("run.residual_every must be >= 0");
  const bool accuracy = experiment == Experiment::AccuracyTime || experiment == Experiment::AccuracySpace ||
                        experiment == Experiment::Efficiency;
  if (accuracy) {
    if (dim != 1 && dim != 3) throw ConfigError("accuracy.dim must be 1 or 3");
    if (!(final_time > 0.0)) throw ConfigError("accuracy.final_time must be > 0");
    if (repeats < 1) throw ConfigError("accuracy.repeats must be >= 1");
    if (experiment != Experiment::AccuracySpace) {
      if (coupling == Coupling::None && !(h > 0.0 && h <= 1.0)) throw ConfigError("accuracy.h must be in (0, 1]");
      for (Scheme s : schemes) {
        const auto& d = divisors_for(s);
        if (d.empty()) throw ConfigError("accuracy.divisors must not be empty");
        for (int n : d)
          if (n < order_of(s)) throw ConfigError("accuracy.divisors must be >= the scheme order");
      }
    }
    if (experiment != Experiment::AccuracyTime) {
      if (!(k > 0.0 && k <= final_time)) throw ConfigError("accuracy.k must be in (0, final_time]");
      if (cells.empty()) throw ConfigError("accuracy.cells must not be empty");
      for (int n : cells)
        if (n < 2) throw ConfigError("accuracy.cells must be >= 2");
    }
  } else {
    if (!(cex > 0.0) || !(ku >= 0.0) || !(ms > 0.0) || !(gamma > 0.0)) throw ConfigError("material constants out of range");
    for (int a = 0; a < 3; ++a) {
      if (grid[a] < 1) throw ConfigError("material.cells must be >= 1");
      if (!(extent_nm[a] > 0.0)) throw ConfigError("material.extent_nm must be > 0");
    }
    if (!(duration_ns > 0.0)) throw ConfigError("dynamics.duration_ns must be > 0");
    if (steps_ps.empty()) throw ConfigError("dynamics.steps_ps must not be empty");
    for (double s : steps_ps)
      if (!(s > 0.0)) throw ConfigError("dynamics.steps_ps values must be > 0");
    if (norm(initial_direction) == 0.0) throw ConfigError("dynamics.initial_direction must be nonzero");
    if (field_mT != 0.0 && norm(field_direction) == 0.0) throw ConfigError("dynamics.field_direction must be nonzero");
    if (relax_ns < 0.0) throw ConfigError("dynamics.relax_ns must be >= 0");
    if (snapshot_every < 0 || energy_every < 1 || trajectory_every < 1)
      throw ConfigError("dynamics output cadences out of range");
    if (startup == Startup::Exact) throw ConfigError("run.startup = exact needs a manufactured solution");
  }
}

inline RunConfig parse_config(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  detail::Reader r(tree);
  RunConfig c;
  const auto exp = r.get("run.experiment");
  if (!exp) throw ConfigError("run.experiment is required");
  c.experiment = parse_experiment(*exp);
  const bool physical = c.experiment == Experiment::RelaxFilm || c.experiment == Experiment::EnergyCurves ||
                        c.experiment == Experiment::NeelWall;
  if (physical) c.startup = Startup::Bootstrap;

  r.read("run.schemes", [&](const std::string& v) {
    c.schemes.clear();
    for (const auto& w : detail::words(v)) c.schemes.push_back(parse_scheme(w));
  });
  c.alphas = r.numbers("run.alpha", c.alphas);
  r.read("run.tilde", [&](const std::string& v) {
    if (v == "unprojected") c.tilde = TildeSource::Unprojected;
    else if (v == "projected") c.tilde = TildeSource::Projected;
    else throw ConfigError("run.tilde must be unprojected or projected");
  });
  r.read("run.stencil", [&](const std::string& v) {
    if (v == "auto") c.stencil.reset();
    else if (v == "second") c.stencil = StencilOrder::Second;
    else if (v == "fourth") c.stencil = StencilOrder::Fourth;
    else throw ConfigError("run.stencil must be auto, second or fourth");
  });
  r.read("run.startup", [&](const std::string& v) {
    if (v == "bootstrap") c.startup = Startup::Bootstrap;
    else if (v == "exact") c.startup = Startup::Exact;
    else throw ConfigError("run.startup must be bootstrap or exact");
  });
  c.blowup_threshold = r.number("run.blowup_threshold", c.blowup_threshold);
  r.read("run.residual_every", [&](const std::string& v) { c.residual_every = int(detail::parse_int("run.residual_every", v)); });
  r.read("run.seed", [&](const std::string& v) {
    const long long s = detail::parse_int("run.seed", v);
    if (s < 0) throw ConfigError("run.seed must be >= 0");
    c.seed = static_cast<std::uint64_t>(s);
  });

  r.read("accuracy.dim", [&](const std::string& v) { c.dim = int(detail::parse_int("accuracy.dim", v)); });
  c.final_time = r.number("accuracy.final_time", c.final_time);
  c.h = r.number("accuracy.h", c.h);
  if (auto d = r.ints("accuracy.divisors"); !d.empty()) c.divisors[Scheme(0)] = d;
  for (Scheme s : {Scheme::BDF1, Scheme::BDF2, Scheme::BDF3})
    if (auto d = r.ints("accuracy.divisors_" + to_string(s)); !d.empty()) c.divisors[s] = d;
  r.read("accuracy.coupling", [&](const std::string& v) {
    if (v == "none") c.coupling = Coupling::None;
    else if (v == "scaled") c.coupling = Coupling::Scaled;
    else throw ConfigError("accuracy.coupling must be none or scaled");
  });
  c.k = r.number("accuracy.k", c.k);
  if (auto v = r.ints("accuracy.cells"); !v.empty()) c.cells = v;
  r.read("accuracy.repeats", [&](const std::string& v) { c.repeats = int(detail::parse_int("accuracy.repeats", v)); });

  c.cex = r.number("material.cex", c.cex);
  c.ku = r.number("material.ku", c.ku);
  c.ms = r.number("material.ms", c.ms);
  c.gamma = r.number("material.gamma", c.gamma);
  c.extent_nm = r.vec3("material.extent_nm", c.extent_nm);
  if (auto v = r.ints("material.cells"); !v.empty()) {
    if (v.size() != 3) throw ConfigError("material.cells: expected three integers");
    c.grid = {v[0], v[1], v[2]};
  }

  c.duration_ns = r.number("dynamics.duration_ns", c.duration_ns);
  c.steps_ps = r.numbers("dynamics.steps_ps", c.steps_ps);
  c.field_mT = r.number("dynamics.field_mT", c.field_mT);
  c.field_direction = r.vec3("dynamics.field_direction", c.field_direction);
  r.read("dynamics.stray", [&](const std::string& v) { c.stray = detail::parse_bool("dynamics.stray", v); });
  c.initial_direction = r.vec3("dynamics.initial_direction", c.initial_direction);
  c.relax_ns = r.number("dynamics.relax_ns", c.relax_ns);
  r.read("dynamics.snapshot_every", [&](const std::string& v) { c.snapshot_every = int(detail::parse_int("dynamics.snapshot_every", v)); });
  r.read("dynamics.energy_every", [&](const std::string& v) { c.energy_every = int(detail::parse_int("dynamics.energy_every", v)); });
  r.read("dynamics.trajectory_every", [&](const std::string& v) { c.trajectory_every = int(detail::parse_int("dynamics.trajectory_every", v)); });

  r.check_all_used();
  c.validate();
  return c;
}

inline RunConfig parse_config(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_config(in);
}

inline std::string serialize(const RunConfig& c) {
  using detail::fmt;
  using detail::join;
  auto f = [](double v) { return fmt(v); };
  auto i = [](int v) { return std::to_string(v); };
  auto v3 = [](const Vec3& v) { return fmt(v[0]) + " " + fmt(v[1]) + " " + fmt(v[2]); };
  std::ostringstream os;
  os << "[run]\n";
  os << "experiment = " << to_string(c.experiment) << "\n";
  os << "schemes = " << join(c.schemes, [](Scheme s) { return to_string(s); }) << "\n";
  os << "alpha = " << join(c.alphas, f) << "\n";
  os << "tilde = " << (c.tilde == TildeSource::Unprojected ? "unprojected" : "projected") << "\n";
  os << "stencil = " << (!c.stencil ? "auto" : *c.stencil == StencilOrder::Second ? "second" : "fourth") << "\n";
  os << "startup = " << (c.startup == Startup::Exact ? "exact" : "bootstrap") << "\n";
  os << "blowup_threshold = " << fmt(c.blowup_threshold) << "\n";
  os << "residual_every = " << c.residual_every << "\n";
  os << "seed = " << c.seed << "\n";
  os << "\n[accuracy]\n";
  os << "dim = " << c.dim << "\n";
  os << "final_time = " << fmt(c.final_time) << "\n";
  os << "h = " << fmt(c.h) << "\n";
  for (const auto& [s, d] : c.divisors)
    os << (order_of(s) == 0 ? std::string("divisors") : "divisors_" + to_string(s)) << " = " << join(d, i) << "\n";
  os << "coupling = " << (c.coupling == Coupling::None ? "none" : "scaled") << "\n";
  os << "k = " << fmt(c.k) << "\n";
  os << "cells = " << join(c.cells, i) << "\n";
  os << "repeats = " << c.repeats << "\n";
  os << "\n[material]\n";
  os << "cex = " << fmt(c.cex) << "\n";
  os << "ku = " << fmt(c.ku) << "\n";
  os << "ms = " << fmt(c.ms) << "\n";
  os << "gamma = " << fmt(c.gamma) << "\n";
  os << "extent_nm = " << v3(c.extent_nm) << "\n";
  os << "cells = " << c.grid[0] << " " << c.grid[1] << " " << c.grid[2] << "\n";
  os << "\n[dynamics]\n";
  os << "duration_ns = " << fmt(c.duration_ns) << "\n";
  os << "steps_ps = " << join(c.steps_ps, f) << "\n";
  os << "field_mT = " << fmt(c.field_mT) << "\n";
  os << "field_direction = " << v3(c.field_direction) << "\n";
  os << "stray = " << (c.stray ? "true" : "false") << "\n";
  os << "initial_direction = " << v3(c.initial_direction) << "\n";
  os << "relax_ns = " << fmt(c.relax_ns) << "\n";
  os << "snapshot_every = " << c.snapshot_every << "\n";
  os << "energy_every = " << c.energy_every << "\n";
  os << "trajectory_every = " << c.trajectory_every << "\n";
  return os.str();
}

}  // namespace llg::harness
