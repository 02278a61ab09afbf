/**
 * @file commands.hpp
 * @brief Dataset builders behind the command-line tool, and the canonical
 * per-figure bundles.
 */
#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nhse/averaging.hpp"
#include "nhse/basin.hpp"
#include "nhse/dataset.hpp"
#include "nhse/poincare.hpp"
#include "nhse/shooting.hpp"
#include "nhse/sweep.hpp"

namespace nhse {

/// A dataset plus the failure text when the numerics stopped early; the
/// dataset then holds whatever was computed before the failure.
struct CommandOutput {
  Dataset data;
  std::optional<std::string> failure;
};

namespace detail {

inline std::vector<double> linear_grid(double lo, double hi, int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  return g;
}

inline double opt_or_nan(const std::optional<double>& v) { return v.value_or(std::nan("")); }

/// Uniform samples of a trajectory launched from `y0`, tagged with `curve`.
inline void append_samples(Dataset& d, const ModelParams& p, const std::string& curve, PhaseState y0, double length,
                           int samples, const IntegratorConfig& icfg) {
  IntegratorConfig c = icfg;
  c.store_dense = true;
  if (c.resolved_max_x(p) < length) c.max_x = length;
  const Trajectory t = integrate(p, y0, {0.0, length}, c, {});
  const double w = p.omega();
  for (int i = 0; i < samples; ++i) {
    const double x = length * i / (samples - 1);
    const PhaseState y = evaluate_dense(t, std::min(x, t.x_end));
    if (curve.empty())
      d.add_row({x, y.psi, y.v, y.v / w, lyapunov_value(p, y)});
    else
      d.add_row({curve, x, y.psi, y.v, y.v / w});
  }
}

}  // namespace detail

inline CommandOutput cmd_predict(const RunConfig& cfg) {
  validate_config(cfg, "predict");
  const ModelParams base = cfg.model();
  Dataset d = make_dataset("predict", "predict", cfg,
                           {"gamma", "a_in", "a_out", "gamma_c_th", "regime", "validity_in", "validity_out"});
  const std::vector<double> gammas = cfg.predict.n == 1 ? std::vector<double>{cfg.gamma}
                                                        : detail::linear_grid(cfg.predict.gamma_min,
                                                                              cfg.predict.gamma_max, cfg.predict.n);
  for (double g : gammas) {
    const ModelParams p = base.with_gamma(g);
    const auto th = branch_amplitudes(p);
    const double vin = th.a_in ? slow_amplitude_validity(p, *th.a_in) : std::nan("");
    const double vout = th.a_out ? slow_amplitude_validity(p, *th.a_out) : std::nan("");
    d.add_row({g, detail::opt_or_nan(th.a_in), detail::opt_or_nan(th.a_out), th.gamma_c_th,
               std::string(to_string(th.regime)), vin, vout});
  }
  d.meta["gamma_c_th"] = gamma_c_theory(base);
  return {std::move(d), std::nullopt};
}

inline ContinuationSettings continuation_settings(const RunConfig& cfg) {
  ContinuationSettings s;
  s.initial_step = cfg.bifurcation.initial_step;
  s.min_step = cfg.bifurcation.min_step;
  s.max_step = cfg.bifurcation.max_step;
  s.gamma_min = cfg.bifurcation.gamma_min;
  s.gamma_max = cfg.bifurcation.gamma_max;
  s.max_points = cfg.bifurcation.max_points;
  s.fold_refine_tol = cfg.bifurcation.fold_refine_tol;
  return s;
}

/// Cycle branch from the stable cycle at gamma_start, with the averaged
/// amplitude and relative deviation of each point from it.
inline CommandOutput cmd_bifurcation(const RunConfig& cfg) {
  validate_config(cfg, "bifurcation");
  const ModelParams base = cfg.model();
  Dataset d = make_dataset(
      "bifurcation", "bifurcation", cfg,
      {"index", "branch", "gamma", "s_fixed", "amplitude", "multiplier", "stability", "period", "a_th", "rel_dev"});
  d.meta["gamma_c_th"] = gamma_c_theory(base);
  try {
    const ModelParams p0 = base.with_gamma(cfg.bifurcation.gamma_start);
    const auto th0 = branch_amplitudes(p0);
    if (!th0.a_out)
      throw Error(ErrorCode::InvalidParameter, "bifurcation.gamma_start lies below the averaged fold; no stable cycle seed");
    const LimitCycle start = find_cycle(p0, p0.omega() * *th0.a_out, cfg.cycle);
    const Branch br = continue_branch(base, start, continuation_settings(cfg), cfg.cycle);
    for (std::size_t i = 0; i < br.points.size(); ++i) {
      const auto& c = br.points[i].cycle;
      const bool inner = br.fold_index && i > *br.fold_index;
      const auto th = branch_amplitudes(base.with_gamma(c.gamma));
      const double a_th = detail::opt_or_nan(inner ? th.a_in : th.a_out);
      const double dev = std::isnan(a_th) ? std::nan("") : (c.amplitude - a_th) / a_th;
      d.add_row({static_cast<long long>(i), std::string(inner ? "inner" : "outer"), c.gamma, c.s_fixed, c.amplitude,
                 c.multiplier, std::string(to_string(c.stability)), c.period, a_th, dev});
    }
    d.meta["end"] = to_string(br.end);
    if (br.fold) {
      const ModelParams pf = base.with_gamma(br.fold->gamma_c);
      const double period = return_map(pf, br.fold->s_c, cfg.cycle.integrator).period;
      const double amp = cycle_amplitude(pf, br.fold->s_c, period, cfg.cycle.integrator);
      d.add_row({static_cast<long long>(br.points.size()), std::string("fold"), br.fold->gamma_c, br.fold->s_c, amp,
                 br.fold->multiplier, std::string("fold"), period, std::nan(""), std::nan("")});
      d.meta["fold"] = {{"gamma_c", br.fold->gamma_c},
                        {"s_c", br.fold->s_c},
                        {"multiplier", br.fold->multiplier},
                        {"gamma_width", br.fold->gamma_width}};
    }
  } catch (const Error& e) {
    d.meta["error"] = e.what();
    return {std::move(d), std::string(e.what())};
  }
  return {std::move(d), std::nullopt};
}

inline nlohmann::ordered_json shot_json(const ShotResult& r) {
  nlohmann::ordered_json j;
  j["slope"] = r.slope;
  j["outcome"] = to_string(r.outcome);
  j["rule"] = to_string(r.rule);
  j["d2"] = r.d2;
  j["ipr"] = r.ipr;
  j["transit_length"] = r.transit_length;
  if (r.asymptotic_amplitude)
    j["asymptotic_amplitude"] = *r.asymptotic_amplitude;
  else
    j["asymptotic_amplitude"] = nullptr;
  return j;
}

/// Sampled profile psi(x), v(x) from (0, s) with the portrait column v/sqrt(2E).
inline CommandOutput cmd_trajectory(const RunConfig& cfg, const std::string& name = "trajectory") {
  validate_config(cfg, "trajectory");
  const ModelParams p = cfg.model();
  Dataset d = make_dataset(name, "trajectory", cfg, {"x", "psi", "v", "v_norm", "V"});
  const auto th = branch_amplitudes(p);
  d.meta["guide_a_in"] = th.a_in ? nlohmann::ordered_json(*th.a_in) : nlohmann::ordered_json(nullptr);
  d.meta["guide_a_out"] = th.a_out ? nlohmann::ordered_json(*th.a_out) : nlohmann::ordered_json(nullptr);
  try {
    if (cfg.trajectory.classify) d.meta["classification"] = shot_json(classify(p, cfg.trajectory.s, cfg.effective_classifier()));
    detail::append_samples(d, p, "", {0.0, cfg.trajectory.s}, cfg.trajectory.length, cfg.trajectory.samples,
                           cfg.integrator);
  } catch (const Error& e) {
    d.meta["error"] = e.what();
    return {std::move(d), std::string(e.what())};
  }
  return {std::move(d), std::nullopt};
}

inline SlopeDensity basin_density(const RunConfig& cfg) {
  if (cfg.basin.density == "file") return load_density_file(cfg.basin.density_file, cfg.basin.normalize);
  return SlopeDensity::cauchy(cfg.basin.s0 > 0.0 ? cfg.basin.s0 : cfg.model().omega());
}

inline CommandOutput cmd_basin(const RunConfig& cfg) {
  validate_config(cfg, "basin");
  const ModelParams base = cfg.model();
  const SlopeDensity rho = basin_density(cfg);
  Dataset d = make_dataset("basin", "basin", cfg, {"gamma", "regime", "s_star", "p_skin", "bisection_width", "status"});
  BasinConfig bc;
  bc.classifier = cfg.effective_classifier();
  bc.tol_s = cfg.basin.tol_s;
  bc.jump_delta = cfg.basin.jump_delta;
  bc.workers = cfg.workers;
  bc.solver = cfg.cycle;
  if (!std::isnan(cfg.basin.fold_gamma)) bc.fold_gamma = cfg.basin.fold_gamma;
  try {
    const auto scan =
        basin_scan(base, detail::linear_grid(cfg.basin.gamma_min, cfg.basin.gamma_max, cfg.basin.n), rho, bc);
    for (const auto& bp : scan.points)
      d.add_row({bp.gamma, std::string(to_string(bp.regime)), detail::opt_or_nan(bp.s_star), bp.p_skin,
                 bp.bisection_width, bp.status});
    d.meta["gamma_c_num"] = scan.gamma_c;
    if (scan.jump)
      d.meta["jump"] = {{"gamma", scan.jump->gamma}, {"s_star", scan.jump->s_star}, {"delta_p", scan.jump->delta_p}};
    else
      d.meta["jump"] = {{"error", scan.jump_status}};
  } catch (const Error& e) {
    d.meta["error"] = e.what();
    return {std::move(d), std::string(e.what())};
  }
  return {std::move(d), std::nullopt};
}

inline SweepConfig sweep_config(const RunConfig& cfg) {
  SweepConfig s;
  s.skin_threshold = cfg.sweep.skin_threshold;
  s.tail_periods = cfg.sweep.tail_periods;
  s.noise = cfg.sweep.noise;
  s.inject_noise = cfg.sweep.inject_noise;
  s.seed = cfg.sweep.seed;
  s.integrator = cfg.integrator;
  s.integrator.store_dense = false;
  return s;
}

/// Stable-cycle state on the section, used to start a downward sweep.
inline PhaseState extended_start(const ModelParams& p, const CycleSolverConfig& solver) {
  const auto th = branch_amplitudes(p);
  if (!th.a_out) throw Error(ErrorCode::InvalidParameter, "no stable cycle to start a downward sweep");
  return {0.0, find_cycle(p, p.omega() * *th.a_out, solver).s_fixed};
}

inline CommandOutput cmd_sweep(const RunConfig& cfg) {
  validate_config(cfg, "sweep");
  const ModelParams base = cfg.model();
  const auto& sc = cfg.sweep;
  Dataset d = make_dataset("sweep", "sweep", cfg,
                           {"direction", "step", "gamma", "psi_end", "v_end", "amplitude", "label", "a_out_th"});
  std::vector<SweepDirection> dirs;
  if (sc.direction != "up") dirs.push_back(SweepDirection::Down);
  if (sc.direction != "down") dirs.push_back(SweepDirection::Up);
  const SweepConfig swc = sweep_config(cfg);
  const double relax = sc.relax_periods * base.period();
  try {
    const auto results = parallel_map<SweepResult>(dirs.size(), resolve_workers(cfg.workers), [&](std::size_t i) {
      if (dirs[i] == SweepDirection::Down)
        return quasi_static_sweep(base, sc.gamma_high, sc.gamma_low, sc.n_steps, relax,
                                  extended_start(base.with_gamma(sc.gamma_high), cfg.cycle), swc);
      return quasi_static_sweep(base, sc.gamma_low, sc.gamma_high, sc.n_steps, relax,
                                {0.0, 1e-3 * base.omega()}, swc);
    });
    for (const auto& r : results) {
      for (std::size_t k = 0; k < r.records.size(); ++k) {
        const auto& rec = r.records[k];
        d.add_row({std::string(to_string(r.direction)), static_cast<long long>(k), rec.gamma, rec.end_state.psi,
                   rec.end_state.v, rec.amplitude_estimate, std::string(to_string(rec.label)),
                   detail::opt_or_nan(branch_amplitudes(base.with_gamma(rec.gamma)).a_out)});
      }
      const std::string key = std::string("switch_gamma_") + to_string(r.direction);
      d.meta[key] = r.switch_gamma ? nlohmann::ordered_json(*r.switch_gamma) : nlohmann::ordered_json(nullptr);
      d.meta[std::string("label_changes_") + to_string(r.direction)] = r.label_changes;
    }
  } catch (const Error& e) {
    d.meta["error"] = e.what();
    return {std::move(d), std::string(e.what())};
  }
  return {std::move(d), std::nullopt};
}

/// Flow portrait at one gamma: trajectories from a fixed slope set plus one
/// period of each cycle found by a root scan of the return map.
inline CommandOutput portrait(const RunConfig& cfg, const std::string& name, const std::vector<double>& slopes,
                              double length) {
  const ModelParams p = cfg.model();
  Dataset d = make_dataset(name, "reproduce", cfg, {"curve", "x", "psi", "v", "v_norm"});
  try {
    for (double s : slopes)
      detail::append_samples(d, p, "s=" + format_real(s), {0.0, s}, length, 801, cfg.integrator);
    const auto roots = scan_cycle_roots(p, 1e-2, 80.0, 400, cfg.cycle);
    nlohmann::ordered_json cycles = nlohmann::ordered_json::array();
    for (double r : roots) {
      const LimitCycle lc = find_cycle(p, r, cfg.cycle);
      const std::string tag = lc.stability == Stability::Stable ? "stable_cycle" : "unstable_cycle";
      detail::append_samples(d, p, tag, {0.0, lc.s_fixed}, lc.period, 401, cfg.integrator);
      cycles.push_back({{"s_fixed", lc.s_fixed},
                        {"amplitude", lc.amplitude},
                        {"multiplier", lc.multiplier},
                        {"stability", to_string(lc.stability)}});
    }
    d.meta["cycles"] = cycles;
  } catch (const Error& e) {
    d.meta["error"] = e.what();
    return {std::move(d), std::string(e.what())};
  }
  return {std::move(d), std::nullopt};
}

/// Fixed point at the origin: stable for gamma < 0, unstable for gamma > 0.
inline Dataset origin_branch(const RunConfig& cfg, double lo, double hi, int n) {
  Dataset d = make_dataset("origin", "reproduce", cfg, {"gamma", "amplitude", "stability"});
  for (double g : detail::linear_grid(lo, hi, n))
    d.add_row({g, 0.0, std::string(g < 0.0 ? "stable" : (g > 0.0 ? "unstable" : "nonhyperbolic"))});
  return d;
}

/// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct BundleEntry {
  std::string file;
  double runtime_s = 0.0;
  std::optional<std::string> failure;
};

struct Bundle {
  std::string figure;
  std::vector<BundleEntry> entries;
  bool failed() const {
    for (const auto& e : entries)
      if (e.failure) return true;
    return false;
  }
};

/// Canonical configuration for a figure: reference parameters with the
/// figure's grids.
inline RunConfig figure_config(const std::string& figure) {
  RunConfig c;
  if (figure == "fig1" || figure == "fig3") {
    c.bifurcation.gamma_min = -1.5;
    c.bifurcation.gamma_max = 0.5;
    c.predict.gamma_min = -1.2;
    c.predict.gamma_max = 0.6;
  } else if (figure == "fig4") {
    c.basin.gamma_min = -1.3;
    c.basin.gamma_max = 0.3;
    c.basin.n = 65;
  } else if (figure != "fig2") {
    throw Error(ErrorCode::UnknownFigure, "unknown figure '" + figure + "' (expected fig1, fig2, fig3 or fig4)");
  }
  return c;
}

/// Run a figure's canonical config and write its datasets and manifest.json
/// into `dir`.
inline Bundle reproduce(const std::string& figure, const std::filesystem::path& dir, const std::string& format,
                        int workers) {
  RunConfig base = figure_config(figure);
  base.workers = workers;
  base.output.format = format;
  std::filesystem::create_directories(dir);
  Bundle bundle;
  bundle.figure = figure;
  const std::string ext = format == "json" ? ".json" : ".csv";
  nlohmann::ordered_json manifest;
  manifest["figure"] = figure;
  manifest["config_hash"] = fnv1a_hex(emit_config(base));
  manifest["config"] = emit_config(base);
  nlohmann::ordered_json items = nlohmann::ordered_json::array();

  auto run = [&](const std::string& name, const std::function<CommandOutput()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    CommandOutput out = fn();
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.data.name = name;
    out.data.meta["dataset"] = name;
    write_dataset_file((dir / (name + ext)).string(), out.data, format);
    bundle.entries.push_back({name + ext, dt, out.failure});
    nlohmann::ordered_json item = {{"dataset", name}, {"file", name + ext}, {"rows", out.data.rows.size()},
                                   {"runtime_s", dt}};
    if (out.failure) item["error"] = *out.failure;
    items.push_back(item);
  };

  if (figure == "fig1" || figure == "fig3") {
    run(figure + "_branch", [&] { return cmd_bifurcation(base); });
    run(figure + "_theory", [&] { return cmd_predict(base); });
    if (figure == "fig1") run("fig1_origin", [&] { return CommandOutput{origin_branch(base, -1.5, 0.5, 81), std::nullopt}; });
  } else if (figure == "fig2") {
    struct Panel {
      std::string id;
      double gamma;
      std::optional<double> s;
    };
    const std::vector<Panel> panels = {{"a", -1.2, {}},      {"b", -1.2, 6.0},      {"c", -0.5, {}},
                                       {"d", -0.5, 7.0},     {"e", -0.5, 8.69755},  {"f", -0.5, 8.69756},
                                       {"g", -0.5, 10.0},    {"h", 0.2, {}},        {"i", 0.2, 2.0}};
    for (const auto& pn : panels) {
      RunConfig c = base;
      c.gamma = pn.gamma;
      if (pn.s) {
        c.trajectory.s = *pn.s;
        c.trajectory.length = 40.0;
        run("fig2" + pn.id + "_profile", [&] { return cmd_trajectory(c); });
      } else {
        run("fig2" + pn.id + "_portrait", [&] { return portrait(c, "portrait", {2.0, 6.0, 10.0, 14.0, 20.0, 30.0}, 12.0); });
      }
    }
  } else if (figure == "fig4") {
    run("fig4_basin", [&] { return cmd_basin(base); });
  }
  double total = 0.0;
  for (const auto& e : bundle.entries) total += e.runtime_s;
  manifest["datasets"] = items;
  manifest["total_runtime_s"] = total;
  std::ofstream(dir / "manifest.json") << manifest.dump(1) << "\n";
  return bundle;
}

}  // namespace nhse
