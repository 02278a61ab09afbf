/**
 * @file config.hpp
 * @brief Run configuration: flat `section.key = value` text with `#`
 * comments.  Unknown or repeated keys are rejected with the line number.
 */
#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nhse/basin.hpp"
#include "nhse/poincare.hpp"
#include "nhse/shooting.hpp"
#include "nhse/sweep.hpp"

namespace nhse {

/// Shortest decimal that reads back to the same double ("%.17g").
inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct PredictSection {
  double gamma_min = -1.2;
  double gamma_max = 0.6;
  int n = 181;
};

struct BifurcationSection {
  double gamma_start = 0.5;
  double gamma_min = -1.5;
  double gamma_max = 0.5;
  double initial_step = 0.05;
  double min_step = 1e-7;
  double max_step = 0.5;
  int max_points = 2000;
  double fold_refine_tol = 1e-8;
};

struct TrajectorySection {
  double s = 8.69755;
  double length = 40.0;
  int samples = 2001;
  bool classify = true;
};

struct BasinSection {
  double gamma_min = -1.3;
  double gamma_max = 0.3;
  int n = 33;
  double tol_s = 1e-6;
  std::string density = "cauchy";
  /// Cauchy scale; 0 selects sqrt(2E).
  double s0 = 0.0;
  std::string density_file;
  bool normalize = false;
  double jump_delta = 1e-3;
  /// Numeric fold; NaN (written "auto") runs continuation.
  double fold_gamma = std::nan("");
};

struct SweepSection {
  double gamma_high = 0.5;
  double gamma_low = -1.5;
  int n_steps = 200;
  double relax_periods = 50.0;
  std::string direction = "both";
  double noise = 1e-9;
  bool inject_noise = true;
  std::uint64_t seed = 12345;
  double skin_threshold = 0.0;
  double tail_periods = 2.0;
};

struct OutputSection {
  std::string path;
  std::string format = "csv";
};

struct RunConfig {
  double gamma = -0.5;
  double a = 0.5;
  double b = 1.0 / 32.0;
  double E = 8.0;
  IntegratorConfig integrator;
  ClassifierConfig classifier;
  CycleSolverConfig cycle;
  PredictSection predict;
  BifurcationSection bifurcation;
  TrajectorySection trajectory;
  BasinSection basin;
  SweepSection sweep;
  OutputSection output;
  int workers = 0;

  /// Throws Error(ConfigError) naming the offending key.
  ModelParams model() const {
    try {
      return ModelParams(gamma, a, b, E);
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigError, std::string("model: ") + e.what());
    }
  }

  ClassifierConfig effective_classifier() const {
    ClassifierConfig c = classifier;
    c.integrator = integrator;
    return c;
  }
};

namespace detail {

struct KeyDef {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

[[noreturn]] inline void bad_value(const std::string& key, const std::string& what, const std::string& v) {
  throw Error(ErrorCode::ConfigError, "key '" + key + "': expected " + what + ", got '" + v + "'");
}

inline double parse_real(const std::string& key, const std::string& v) {
  if (v == "nan" || v == "auto") return std::nan("");
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad_value(key, "a number", v);
  return out;
}

template <class I>
I parse_integer(const std::string& key, const std::string& v) {
  I out{};
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad_value(key, "an integer", v);
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, "true or false", v);
}

template <class Acc>
KeyDef real_key(std::string k, Acc acc) {
  return {k, [k, acc](RunConfig& c, const std::string& v) { acc(c) = parse_real(k, v); },
          [acc](const RunConfig& c) {
            const double v = acc(c);
            return std::isnan(v) ? std::string("auto") : format_real(v);
          }};
}

template <class Acc>
KeyDef int_key(std::string k, Acc acc) {
  using T = std::remove_reference_t<decltype(acc(std::declval<RunConfig&>()))>;
  return {k, [k, acc](RunConfig& c, const std::string& v) { acc(c) = parse_integer<T>(k, v); },
          [acc](const RunConfig& c) { return std::to_string(acc(c)); }};
}

template <class Acc>
KeyDef bool_key(std::string k, Acc acc) {
  return {k, [k, acc](RunConfig& c, const std::string& v) { acc(c) = parse_bool(k, v); },
          [acc](const RunConfig& c) { return std::string(acc(c) ? "true" : "false"); }};
}

template <class Acc>
KeyDef text_key(std::string k, Acc acc) {
  return {k, [acc](RunConfig& c, const std::string& v) { acc(c) = v; },
          [acc](const RunConfig& c) { return std::string(acc(c)); }};
}

#define NHSE_ACC(expr) [](auto& c) -> auto& { return c.expr; }

inline const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = {
      real_key("model.gamma", NHSE_ACC(gamma)),
      real_key("model.a", NHSE_ACC(a)),
      real_key("model.b", NHSE_ACC(b)),
      real_key("model.E", NHSE_ACC(E)),
      real_key("integrator.rel_tol", NHSE_ACC(integrator.rel_tol)),
      real_key("integrator.abs_tol", NHSE_ACC(integrator.abs_tol)),
      real_key("integrator.max_step", NHSE_ACC(integrator.max_step)),
      real_key("integrator.max_x", NHSE_ACC(integrator.max_x)),
      real_key("classifier.base_length", NHSE_ACC(classifier.base_length)),
      int_key("classifier.max_doublings", NHSE_ACC(classifier.max_doublings)),
      real_key("classifier.d2_threshold", NHSE_ACC(classifier.d2_threshold)),
      real_key("classifier.d2_convergence", NHSE_ACC(classifier.d2_convergence)),
      real_key("classifier.early_exit_V", NHSE_ACC(classifier.early_exit_V)),
      real_key("classifier.stationarity_band", NHSE_ACC(classifier.stationarity_band)),
      int_key("classifier.amplitude_window", NHSE_ACC(classifier.amplitude_window)),
      bool_key("classifier.early_exit", NHSE_ACC(classifier.early_exit)),
      bool_key("classifier.trapping_exit", NHSE_ACC(classifier.trapping_exit)),
      real_key("cycle.tol_newton", NHSE_ACC(cycle.tol_newton)),
      int_key("cycle.max_iter", NHSE_ACC(cycle.max_iter)),
      real_key("cycle.tol_h", NHSE_ACC(cycle.tol_h)),
      real_key("cycle.fd_step", NHSE_ACC(cycle.fd_step)),
      real_key("cycle.rel_tol", NHSE_ACC(cycle.integrator.rel_tol)),
      real_key("cycle.abs_tol", NHSE_ACC(cycle.integrator.abs_tol)),
      real_key("predict.gamma_min", NHSE_ACC(predict.gamma_min)),
      real_key("predict.gamma_max", NHSE_ACC(predict.gamma_max)),
      int_key("predict.n", NHSE_ACC(predict.n)),
      real_key("bifurcation.gamma_start", NHSE_ACC(bifurcation.gamma_start)),
      real_key("bifurcation.gamma_min", NHSE_ACC(bifurcation.gamma_min)),
      real_key("bifurcation.gamma_max", NHSE_ACC(bifurcation.gamma_max)),
      real_key("bifurcation.initial_step", NHSE_ACC(bifurcation.initial_step)),
      real_key("bifurcation.min_step", NHSE_ACC(bifurcation.min_step)),
      real_key("bifurcation.max_step", NHSE_ACC(bifurcation.max_step)),
      int_key("bifurcation.max_points", NHSE_ACC(bifurcation.max_points)),
      real_key("bifurcation.fold_refine_tol", NHSE_ACC(bifurcation.fold_refine_tol)),
      real_key("trajectory.s", NHSE_ACC(trajectory.s)),
      real_key("trajectory.length", NHSE_ACC(trajectory.length)),
      int_key("trajectory.samples", NHSE_ACC(trajectory.samples)),
      bool_key("trajectory.classify", NHSE_ACC(trajectory.classify)),
      real_key("basin.gamma_min", NHSE_ACC(basin.gamma_min)),
      real_key("basin.gamma_max", NHSE_ACC(basin.gamma_max)),
      int_key("basin.n", NHSE_ACC(basin.n)),
      real_key("basin.tol_s", NHSE_ACC(basin.tol_s)),
      text_key("basin.density", NHSE_ACC(basin.density)),
      real_key("basin.s0", NHSE_ACC(basin.s0)),
      text_key("basin.density_file", NHSE_ACC(basin.density_file)),
      bool_key("basin.normalize", NHSE_ACC(basin.normalize)),
      real_key("basin.jump_delta", NHSE_ACC(basin.jump_delta)),
      real_key("basin.fold_gamma", NHSE_ACC(basin.fold_gamma)),
      real_key("sweep.gamma_high", NHSE_ACC(sweep.gamma_high)),
      real_key("sweep.gamma_low", NHSE_ACC(sweep.gamma_low)),
      int_key("sweep.n_steps", NHSE_ACC(sweep.n_steps)),
      real_key("sweep.relax_periods", NHSE_ACC(sweep.relax_periods)),
      text_key("sweep.direction", NHSE_ACC(sweep.direction)),
      real_key("sweep.noise", NHSE_ACC(sweep.noise)),
      bool_key("sweep.inject_noise", NHSE_ACC(sweep.inject_noise)),
      int_key("sweep.seed", NHSE_ACC(sweep.seed)),
      real_key("sweep.skin_threshold", NHSE_ACC(sweep.skin_threshold)),
      real_key("sweep.tail_periods", NHSE_ACC(sweep.tail_periods)),
      text_key("output.path", NHSE_ACC(output.path)),
      text_key("output.format", NHSE_ACC(output.format)),
      int_key("run.workers", NHSE_ACC(workers)),
  };
  return table;
}

#undef NHSE_ACC

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Set one key; throws ConfigError for an unknown key or a bad value.
inline void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& k : detail::key_table()) {
    if (k.key == key) {
      k.set(cfg, value);
      return;
    }
  }
  throw Error(ErrorCode::ConfigError, "unknown key '" + key + "'");
}

/// Parse config text over the defaults.
inline RunConfig parse_config(const std::string& text, RunConfig cfg = {}) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::map<std::string, int> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) throw Error(ErrorCode::ConfigError, where + "expected 'section.key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (auto it = seen.find(key); it != seen.end())
      throw Error(ErrorCode::ConfigError, where + "key '" + key + "' already set on line " + std::to_string(it->second));
    seen[key] = lineno;
    try {
      set_config_value(cfg, key, value);
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigError, where + std::string(e.what()).substr(std::string("ConfigError: ").size()));
    }
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::ConfigError, "cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, path + ": " + std::string(e.what()).substr(std::string("ConfigError: ").size()));
  }
}

/// Every key with its effective value, in table order.
inline std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : detail::key_table()) out.emplace_back(k.key, k.get(cfg));
  return out;
}

/// Config text that parse_config reads back to an equal configuration.
inline std::string emit_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : config_entries(cfg)) out += k + " = " + v + "\n";
  return out;
}

/// Checks shared by all commands plus the section used by `command`.
inline void validate_config(const RunConfig& cfg, const std::string& command) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); };
  const ModelParams p = cfg.model();
  auto guard = [&](const char* section, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ConfigError) throw;
      fail(std::string(section) + ": " + e.what());
    }
  };
  guard("integrator", [&] { cfg.integrator.validate(); });
  guard("classifier", [&] { cfg.effective_classifier().validate(p); });
  guard("cycle", [&] { cfg.cycle.integrator.validate(); });
  if (!(cfg.cycle.tol_newton > 0.0)) fail("cycle.tol_newton must be > 0");
  if (cfg.cycle.max_iter < 1) fail("cycle.max_iter must be >= 1");
  if (cfg.output.format != "csv" && cfg.output.format != "json") fail("output.format must be csv or json");
  if (cfg.workers < 0) fail("run.workers must be >= 0");

  if (command == "predict") {
    if (cfg.predict.n < 1) fail("predict.n must be >= 1");
    if (cfg.predict.n > 1 && !(cfg.predict.gamma_min < cfg.predict.gamma_max))
      fail("predict.gamma_min must be < predict.gamma_max");
  } else if (command == "bifurcation") {
    const auto& b = cfg.bifurcation;
    if (!(b.gamma_min < b.gamma_max)) fail("bifurcation: empty gamma range (gamma_min must be < gamma_max)");
    if (b.gamma_start < b.gamma_min || b.gamma_start > b.gamma_max)
      fail("bifurcation.gamma_start must lie in [gamma_min, gamma_max]");
    if (!(b.min_step > 0.0 && b.min_step <= b.initial_step && b.initial_step <= b.max_step))
      fail("bifurcation steps must satisfy 0 < min_step <= initial_step <= max_step");
    if (b.max_points < 2) fail("bifurcation.max_points must be >= 2");
  } else if (command == "trajectory") {
    if (!(cfg.trajectory.s >= 0.0)) fail("trajectory.s must be >= 0");
    if (!(cfg.trajectory.length > 0.0)) fail("trajectory.length must be > 0");
    if (cfg.trajectory.samples < 2) fail("trajectory.samples must be >= 2");
  } else if (command == "basin") {
    const auto& b = cfg.basin;
    if (b.n < 1) fail("basin.n must be >= 1");
    if (b.n > 1 && !(b.gamma_min < b.gamma_max)) fail("basin.gamma_min must be < basin.gamma_max");
    if (!(b.tol_s > 0.0)) fail("basin.tol_s must be > 0");
    if (b.density != "cauchy" && b.density != "file") fail("basin.density must be cauchy or file");
    if (b.density == "file" && b.density_file.empty()) fail("basin.density_file is required when basin.density = file");
    if (b.s0 < 0.0) fail("basin.s0 must be >= 0 (0 selects sqrt(2E))");
    if (!(b.jump_delta > 0.0)) fail("basin.jump_delta must be > 0");
  } else if (command == "sweep") {
    const auto& s = cfg.sweep;
    if (s.n_steps < 10) fail("sweep.n_steps must be >= 10 (got " + std::to_string(s.n_steps) + ")");
    if (s.relax_periods < 20.0) fail("sweep.relax_periods must be >= 20");
    if (!(s.gamma_low < s.gamma_high)) fail("sweep.gamma_low must be < sweep.gamma_high");
    if (s.direction != "both" && s.direction != "up" && s.direction != "down")
      fail("sweep.direction must be both, up or down");
    if (!(s.noise >= 0.0)) fail("sweep.noise must be >= 0");
    if (!(s.tail_periods > 0.0)) fail("sweep.tail_periods must be > 0");
  }
}

/// Two whitespace-separated columns (s, density) per line; `#` comments.
inline SlopeDensity load_density_file(const std::string& path, bool normalize) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::ConfigError, "cannot read density file '" + path + "'");
  std::vector<double> grid, values;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (detail::trim(line).empty()) continue;
    std::istringstream ls(line);
    double s = 0.0, v = 0.0;
    std::string extra;
    if (!(ls >> s >> v) || (ls >> extra))
      throw Error(ErrorCode::ConfigError, path + ": line " + std::to_string(lineno) + ": expected two numbers");
    grid.push_back(s);
    values.push_back(v);
  }
  try {
    return SlopeDensity::tabulated(std::move(grid), std::move(values), normalize);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, path + ": " + e.what());
  }
}

}  // namespace nhse
