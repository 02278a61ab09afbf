/**
 * @file sweep.hpp
 * @brief Quasi-static gamma sweeps: gamma is frozen on each grid step, the
 * carried state relaxes for a fixed length and is handed to the next step.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "nhse/integrator.hpp"

namespace nhse {

enum class SweepDirection { Down, Up };
enum class BranchLabel { OnExtendedBranch, OnSkinBranch };

inline const char* to_string(SweepDirection d) { return d == SweepDirection::Down ? "down" : "up"; }
inline const char* to_string(BranchLabel l) {
  return l == BranchLabel::OnSkinBranch ? "skin" : "extended";
}

struct SweepRecord {
  double gamma = 0.0;
  PhaseState end_state;
  double amplitude_estimate = 0.0;
  /// V at the start and end of the tail window.
  double tail_V_start = 0.0;
  double tail_V_end = 0.0;
  BranchLabel label = BranchLabel::OnExtendedBranch;
};

struct SweepResult {
  SweepDirection direction = SweepDirection::Down;
  std::vector<SweepRecord> records;
  std::optional<double> switch_gamma;
  int label_changes = 0;
};

struct SweepConfig {
  /// Skin label needs the tail amplitude below this; 0 selects 0.1 sqrt(a/b).
  double skin_threshold = 0.0;
  /// Length of the tail window, in harmonic periods.
  double tail_periods = 2.0;
  /// Relative size of the random kick applied after each gamma step; the
  /// reference scale is max(|state|, omega sqrt(a/b)).
  double noise = 1e-9;
  bool inject_noise = true;
  std::uint64_t seed = 12345;
  IntegratorConfig integrator{1e-10, 1e-12, 0.0, 0.0, false};

  double resolved_skin_threshold(const ModelParams& p) const {
    return skin_threshold > 0.0 ? skin_threshold : 0.1 * std::sqrt(p.a() / p.b());
  }
};

/// Relax `y` at fixed parameters for `length`; record the tail amplitude
/// (largest |psi| at turning points in the tail) and V across the tail.
inline SweepRecord relax_step(const ModelParams& p, PhaseState y, double length, const SweepConfig& cfg) {
  SweepRecord rec;
  rec.gamma = p.gamma();
  IntegratorConfig c = cfg.integrator;
  c.store_dense = false;
  // Small states need an absolute tolerance below their own size.
  const double scale = std::max(y.norm(), 1e-290);
  c.abs_tol = std::min(c.abs_tol, c.rel_tol * scale);
  if (c.resolved_max_x(p) < length) c.max_x = length;
  const double tail = std::min(length, cfg.tail_periods * p.period());
  auto pass = [](const DenseSegment&, double, std::span<const EventRecord>) { return true; };
  std::vector<EventRecord> log;
  const RunSummary head = integrate_observed(p, y, 0.0, length - tail, c, {}, log, pass);
  rec.tail_V_start = lyapunov_value(p, head.end);
  const std::vector<EventSpec> events = {EventSpec::turning_point()};
  const RunSummary run = integrate_observed(p, head.end, length - tail, length, c, events, log, pass);
  rec.end_state = run.end;
  rec.tail_V_end = lyapunov_value(p, run.end);
  double amp = std::abs(run.end.psi);
  for (const auto& e : log) amp = std::max(amp, std::abs(e.state.psi));
  rec.amplitude_estimate = amp;
  const bool decreasing = rec.tail_V_end < rec.tail_V_start;
  rec.label = (amp < cfg.resolved_skin_threshold(p) && decreasing) ? BranchLabel::OnSkinBranch
                                                                   : BranchLabel::OnExtendedBranch;
  return rec;
}

/// Linear grid of n_steps + 1 gamma values from gamma_from to gamma_to.
inline SweepResult quasi_static_sweep(const ModelParams& p_base, double gamma_from, double gamma_to, int n_steps,
                                      double relax_length, PhaseState init, const SweepConfig& cfg = {}) {
  if (n_steps < 10) throw Error(ErrorCode::InvalidParameter, "sweep needs n_steps >= 10");
  if (!(relax_length >= 20.0 * p_base.period() * (1.0 - 1e-12)))
    throw Error(ErrorCode::InvalidParameter, "relax_length must be at least 20 harmonic periods");
  if (gamma_from == gamma_to) throw Error(ErrorCode::InvalidParameter, "sweep range is empty");
  if (!init.finite()) throw Error(ErrorCode::InvalidParameter, "initial state must be finite");
  cfg.integrator.validate();

  SweepResult res;
  res.direction = gamma_to < gamma_from ? SweepDirection::Down : SweepDirection::Up;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double floor_scale = p_base.omega() * std::sqrt(p_base.a() / p_base.b());
  PhaseState y = init;
  for (int k = 0; k <= n_steps; ++k) {
    const double g = gamma_from + (gamma_to - gamma_from) * static_cast<double>(k) / n_steps;
    if (cfg.inject_noise && k > 0) {
      const double amp = cfg.noise * std::max(y.norm(), floor_scale);
      y.psi += amp * gauss(rng);
      y.v += amp * gauss(rng);
    }
    SweepRecord rec = relax_step(p_base.with_gamma(g), y, relax_length, cfg);
    y = rec.end_state;
    if (!res.records.empty() && rec.label != res.records.back().label) {
      ++res.label_changes;
      if (!res.switch_gamma) res.switch_gamma = 0.5 * (res.records.back().gamma + rec.gamma);
    }
    res.records.push_back(rec);
  }
  return res;
}

}  // namespace nhse
