#pragma once

// Run configuration: one "key = value" pair per line, '#' starts a comment,
// blank lines are ignored. Keys are dotted (grid.points, solver.dt, ...);
// unknown or repeated keys are errors reported with their line number.
// Vectors are whitespace-separated numbers. "auto", "none" and "off" select
// the documented fallback where a key allows it.

#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "llg/csv.hpp"
#include "llg/error.hpp"
#include "llg/grid.hpp"
#include "llg/llg_solver.hpp"
#include "llg/scenario.hpp"

namespace llg {

struct FrameSettings {
  std::optional<Vec3> reference;  // default_reference(m_infinity) when unset
  bool coulomb_gauge = true;
  double residual_tolerance = 1e-6;
};

struct PicardSettings {
  double t_end = 0.5;
  int intervals = 50;
  int max_iter = 50;
  double tol = 1e-10;
  std::optional<double> smallness_gate = 0.5;
  bool compare_llg = false;
  double llg_dt = 1e-3;
};

struct MonitorSettings {
  double delta = 0.62;
  bool derived = true;
  std::optional<std::array<double, 2>> decay_window;  // [0.1, t_gap / 2] clipped to the run when unset
  std::string input;                                   // norms CSV read by the monitor command
};

struct RunConfig {
  GridSpec grid{3, 32, 2.0 * std::numbers::pi};
  SolverConfig solver;
  ScenarioSpec scenario;
  FrameSettings frames;
  PicardSettings picard;
  MonitorSettings monitor;
  std::string out_dir = "out";
  int checkpoint_every = 0;  // records between field checkpoints, 0 disables
  /// Every key with its effective value, for the run summary.
  std::map<std::string, std::string> echo;
};

namespace config_detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
  auto d = csv::to_number(v);
  if (d && std::isfinite(*d)) return *d;
  throw Error(ErrorKind::Config, key + ": expected a number, got '" + v + "'");
}

inline long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    long i = std::stol(v, &used);
    if (used == v.size()) return i;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::Config, key + ": expected an integer, got '" + v + "'");
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw Error(ErrorKind::Config, key + ": expected true or false, got '" + v + "'");
}

inline std::vector<double> to_list(const std::string& key, const std::string& v, std::size_t count) {
  std::istringstream in(v);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(to_double(key, tok));
  if (out.size() != count)
    throw Error(ErrorKind::Config, key + ": expected " + std::to_string(count) + " numbers, got '" + v + "'");
  return out;
}

inline Vec3 to_vec3(const std::string& key, const std::string& v) {
  auto l = to_list(key, v, 3);
  return {l[0], l[1], l[2]};
}

inline bool is_auto(const std::string& v) { return v == "auto" || v == "none" || v == "off"; }

inline Scheme to_scheme(const std::string& key, const std::string& v) {
  if (v == "imex-projection") return Scheme::ImexProjection;
  if (v == "explicit-rk4-projection" || v == "rk4-projection") return Scheme::Rk4Projection;
  throw Error(ErrorKind::Config, key + ": unknown scheme '" + v + "'");
}

struct KeySpec {
  const char* key;
  const char* default_value;
  const char* help;
  std::function<void(RunConfig&, const std::string& key, const std::string& value)> apply;
};

inline const std::vector<KeySpec>& keys() {
  static const std::vector<KeySpec> table = {
      {"grid.dimension", "3", "spatial dimension n (1, 2 or 3)",
       [](RunConfig& c, auto& k, auto& v) { c.grid.dimension = static_cast<int>(to_int(k, v)); }},
      {"grid.points", "32", "points per axis N (even, >= 8)",
       [](RunConfig& c, auto& k, auto& v) { c.grid.points = static_cast<int>(to_int(k, v)); }},
      {"grid.length", "6.283185307179586", "box side L",
       [](RunConfig& c, auto& k, auto& v) { c.grid.length = to_double(k, v); }},

      {"solver.lambda", "1", "Gilbert damping lambda > 0",
       [](RunConfig& c, auto& k, auto& v) { c.solver.lambda = to_double(k, v); }},
      {"solver.dt", "0.001", "time step", [](RunConfig& c, auto& k, auto& v) { c.solver.dt = to_double(k, v); }},
      {"solver.t_end", "1", "final time", [](RunConfig& c, auto& k, auto& v) { c.solver.t_end = to_double(k, v); }},
      {"solver.scheme", "imex-projection", "imex-projection or explicit-rk4-projection",
       [](RunConfig& c, auto& k, auto& v) { c.solver.scheme = to_scheme(k, v); }},
      {"solver.projection_tolerance", "1e-10", "unit-length tolerance after projection",
       [](RunConfig& c, auto& k, auto& v) { c.solver.projection_tolerance = to_double(k, v); }},
      {"solver.record_every", "10", "steps between recorded samples",
       [](RunConfig& c, auto& k, auto& v) { c.solver.record_every = static_cast<int>(to_int(k, v)); }},
      {"solver.blowup_ceiling", "auto", "ceiling on ||grad m||_inf (auto = 1000 / h)",
       [](RunConfig& c, auto& k, auto& v) {
         if (is_auto(v)) c.solver.blowup_ceiling.reset();
         else c.solver.blowup_ceiling = to_double(k, v);
       }},
      {"solver.dealias", "true", "2/3-rule truncation of nonlinear products",
       [](RunConfig& c, auto& k, auto& v) { c.solver.dealias = to_bool(k, v); }},

      {"scenario.kind", "linear-wave", "linear-wave, bubble, random-small or custom-file",
       [](RunConfig& c, auto&, auto& v) { c.scenario.kind = scenario_kind_from_string(v); }},
      {"scenario.amplitude", "0.001", "wave amplitude, bubble angle or random scale",
       [](RunConfig& c, auto& k, auto& v) { c.scenario.amplitude = to_double(k, v); }},
      {"scenario.wavevector", "1 0 0", "integer wavevector of the linear wave",
       [](RunConfig& c, auto& k, auto& v) {
         auto l = to_list(k, v, 3);
         for (int a = 0; a < 3; ++a) {
           if (l[a] != std::round(l[a])) throw Error(ErrorKind::Config, std::string(k) + ": entries must be integers");
           c.scenario.wavevector[a] = static_cast<int>(l[a]);
         }
       }},
      {"scenario.radius", "1", "bubble support radius",
       [](RunConfig& c, auto& k, auto& v) { c.scenario.radius = to_double(k, v); }},
      {"scenario.center", "auto", "bubble center (auto = box center)",
       [](RunConfig& c, auto& k, auto& v) {
         if (is_auto(v)) c.scenario.center.reset();
         else c.scenario.center = to_vec3(k, v);
       }},
      {"scenario.seed", "1", "random seed",
       [](RunConfig& c, auto& k, auto& v) {
         long s = to_int(k, v);
         if (s < 0) throw Error(ErrorKind::Config, std::string(k) + ": seed must be >= 0");
         c.scenario.seed = static_cast<std::uint64_t>(s);
       }},
      {"scenario.mode_cutoff", "3", "largest |k| of random modes",
       [](RunConfig& c, auto& k, auto& v) { c.scenario.mode_cutoff = static_cast<int>(to_int(k, v)); }},
      {"scenario.target_grad_ln", "none", "tune the amplitude so ||grad m0||_{L^n} equals this",
       [](RunConfig& c, auto& k, auto& v) {
         if (is_auto(v)) c.scenario.target_grad_ln.reset();
         else c.scenario.target_grad_ln = to_double(k, v);
       }},
      {"scenario.m_infinity", "0 0 1", "constant state at infinity (unit vector)",
       [](RunConfig& c, auto& k, auto& v) { c.scenario.m_infinity = to_vec3(k, v); }},
      {"scenario.path", "", "field file for custom-file",
       [](RunConfig& c, auto&, auto& v) { c.scenario.path = v; }},

      {"frames.reference", "auto", "frame reference vector e (auto = axis least aligned with m_infinity)",
       [](RunConfig& c, auto& k, auto& v) {
         if (is_auto(v)) c.frames.reference.reset();
         else c.frames.reference = to_vec3(k, v);
       }},
      {"frames.coulomb_gauge", "true", "fix the Coulomb gauge",
       [](RunConfig& c, auto& k, auto& v) { c.frames.coulomb_gauge = to_bool(k, v); }},
      {"frames.residual_tolerance", "1e-6", "tolerance reported for torsion, curvature and u0 residuals",
       [](RunConfig& c, auto& k, auto& v) { c.frames.residual_tolerance = to_double(k, v); }},

      {"picard.t_end", "0.5", "Picard time horizon",
       [](RunConfig& c, auto& k, auto& v) { c.picard.t_end = to_double(k, v); }},
      {"picard.intervals", "50", "coarse mesh intervals (first 10% refined 2x)",
       [](RunConfig& c, auto& k, auto& v) { c.picard.intervals = static_cast<int>(to_int(k, v)); }},
      {"picard.max_iter", "50", "iterate budget",
       [](RunConfig& c, auto& k, auto& v) { c.picard.max_iter = static_cast<int>(to_int(k, v)); }},
      {"picard.tol", "1e-10", "stop when sup_t ||u_next - u||_{L^n} drops below this",
       [](RunConfig& c, auto& k, auto& v) { c.picard.tol = to_double(k, v); }},
      {"picard.smallness_gate", "0.5", "largest admissible ||u0||_{L^n} (off disables)",
       [](RunConfig& c, auto& k, auto& v) {
         if (is_auto(v)) c.picard.smallness_gate.reset();
         else c.picard.smallness_gate = to_double(k, v);
       }},
      {"picard.compare_llg", "false", "also run LLG and compare frame-extracted u on the mesh",
       [](RunConfig& c, auto& k, auto& v) { c.picard.compare_llg = to_bool(k, v); }},
      {"picard.llg_dt", "0.001", "RK4 step of the comparison LLG run",
       [](RunConfig& c, auto& k, auto& v) { c.picard.llg_dt = to_double(k, v); }},

      {"monitor.delta", "0.62", "exponent delta of the weighted norms, in (1/2, 1)",
       [](RunConfig& c, auto& k, auto& v) { c.monitor.delta = to_double(k, v); }},
      {"monitor.derived", "true", "extract frames along the run for u-norms, R and R0",
       [](RunConfig& c, auto& k, auto& v) { c.monitor.derived = to_bool(k, v); }},
      {"monitor.decay_window", "auto", "decay-bound window t0 t1 (auto = 0.1 .. t_gap/2)",
       [](RunConfig& c, auto& k, auto& v) {
         if (is_auto(v)) {
           c.monitor.decay_window.reset();
         } else {
           auto l = to_list(k, v, 2);
           c.monitor.decay_window = std::array<double, 2>{l[0], l[1]};
         }
       }},
      {"monitor.input", "", "norms CSV for the monitor command",
       [](RunConfig& c, auto&, auto& v) { c.monitor.input = v; }},

      {"output.dir", "out", "output directory",
       [](RunConfig& c, auto&, auto& v) { c.out_dir = v; }},
      {"output.checkpoint_every", "0", "recorded samples between field checkpoints (0 = final only)",
       [](RunConfig& c, auto& k, auto& v) { c.checkpoint_every = static_cast<int>(to_int(k, v)); }},
  };
  return table;
}

inline const KeySpec* find_key(const std::string& key) {
  for (const auto& k : keys())
    if (key == k.key) return &k;
  return nullptr;
}

}  // namespace config_detail

/// Checks cross-field constraints after all keys are applied.
inline void validate(const RunConfig& c) {
  auto wrap = [](const std::function<void()>& fn) {
    try {
      fn();
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Config) throw;
      throw Error(ErrorKind::Config, e.message());
    }
  };
  wrap([&] { GridSpec check(c.grid.dimension, c.grid.points, c.grid.length); });
  wrap([&] { c.solver.validate(); });
  wrap([&] { c.scenario.validate(); });
  require(c.frames.residual_tolerance > 0.0, "frames.residual_tolerance must be positive", ErrorKind::Config);
  require(c.picard.t_end > 0.0, "picard.t_end must be positive", ErrorKind::Config);
  require(c.picard.intervals >= 1, "picard.intervals must be >= 1", ErrorKind::Config);
  require(c.picard.max_iter >= 1, "picard.max_iter must be >= 1", ErrorKind::Config);
  require(c.picard.tol > 0.0, "picard.tol must be positive", ErrorKind::Config);
  require(c.picard.llg_dt > 0.0, "picard.llg_dt must be positive", ErrorKind::Config);
  require(c.monitor.delta > 0.5 && c.monitor.delta < 1.0, "monitor.delta must lie in (1/2, 1)", ErrorKind::Config);
  if (c.monitor.decay_window)
    require((*c.monitor.decay_window)[0] > 0.0 && (*c.monitor.decay_window)[0] < (*c.monitor.decay_window)[1],
            "monitor.decay_window needs 0 < t0 < t1", ErrorKind::Config);
  require(c.checkpoint_every >= 0, "output.checkpoint_every must be >= 0", ErrorKind::Config);
  require(!c.out_dir.empty(), "output.dir must not be empty", ErrorKind::Config);
}

/// Applies a single override (used for --seed and --out) and refreshes the echo.
inline void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
  const auto* spec = config_detail::find_key(key);
  require(spec != nullptr, "unknown key '" + key + "'", ErrorKind::Config);
  spec->apply(c, key, value);
  c.echo[key] = value;
}

inline RunConfig parse_config(const std::string& text, const std::string& source = "config") {
  RunConfig c;
  for (const auto& k : config_detail::keys()) {
    k.apply(c, k.key, k.default_value);
    c.echo[k.key] = k.default_value;
  }
  std::map<std::string, int> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = config_detail::trim(line);
    if (line.empty()) continue;
    auto where = source + ":" + std::to_string(lineno) + ": ";
    auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::Config, where + "expected 'key = value', got '" + line + "'");
    std::string key = config_detail::trim(line.substr(0, eq));
    std::string value = config_detail::trim(line.substr(eq + 1));
    const auto* spec = config_detail::find_key(key);
    if (!spec) throw Error(ErrorKind::Config, where + "unknown key '" + key + "'");
    if (auto it = seen.find(key); it != seen.end())
      throw Error(ErrorKind::Config, where + "key '" + key + "' already set on line " + std::to_string(it->second));
    seen[key] = lineno;
    try {
      spec->apply(c, key, value);
    } catch (const Error& e) {
      throw Error(ErrorKind::Config, where + e.message());
    }
    c.echo[key] = value;
  }
  validate(c);
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

/// Reference config listing every key with its default.
inline std::string reference_config() {
  std::ostringstream os;
  os << "# LLG run configuration: key = value, '#' starts a comment.\n";
  std::string section;
  for (const auto& k : config_detail::keys()) {
    std::string key = k.key;
    std::string head = key.substr(0, key.find('.'));
    if (head != section) {
      os << "\n# [" << head << "]\n";
      section = head;
    }
    os << "# " << k.help << "\n" << key << " = " << k.default_value << "\n";
  }
  return os.str();
}

}  // namespace llg
