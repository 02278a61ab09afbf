/**
 * @file poincare.hpp
 * @brief Poincare return map on the section {psi = 0, v > 0}, limit cycles as
 * its fixed points, pseudo-arclength continuation of cycle branches in gamma
 * and localization of the saddle-node of cycles (fold).
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "nhse/integrator.hpp"

namespace nhse {

enum class Stability { Stable, Unstable, Nonhyperbolic };

inline const char* to_string(Stability s) {
  switch (s) {
    case Stability::Stable: return "stable";
    case Stability::Unstable: return "unstable";
    case Stability::Nonhyperbolic: return "nonhyperbolic";
  }
  return "?";
}

struct ReturnResult {
  double s_next = 0.0;
  double period = 0.0;
};

struct LimitCycle {
  double gamma = 0.0;
  double s_fixed = 0.0;
  double period = 0.0;
  double amplitude = 0.0;
  double multiplier = 0.0;
  Stability stability = Stability::Nonhyperbolic;
};

struct CycleSolverConfig {
  double tol_newton = 1e-10;
  int max_iter = 50;
  /// Hyperbolicity band around |multiplier| = 1.
  double tol_h = 1e-3;
  /// Relative finite-difference step for P'(s).
  double fd_step = 1e-6;
  /// Finite-difference step in gamma for the continuation Jacobian.
  double fd_step_gamma = 1e-6;
  /// Return-map integrations run tighter than the shooting default so that
  /// |P(s) - s| can reach tol_newton at s ~ 30.
  IntegratorConfig integrator{1e-12, 1e-14, 0.0, 0.0, false};
};

inline Stability classify_stability(double multiplier, double tol_h) {
  const double m = std::abs(multiplier);
  if (m < 1.0 - tol_h) return Stability::Stable;
  if (m > 1.0 + tol_h) return Stability::Unstable;
  return Stability::Nonhyperbolic;
}

/// Next return to the section from (0, s).  Crossings during the first tenth
/// of a harmonic period are ignored so the launch point is not counted.
inline ReturnResult return_map(const ModelParams& p, double s, const IntegratorConfig& cfg) {
  if (!(s > 0.0)) throw Error(ErrorCode::InvalidParameter, "return map needs s > 0");
  IntegratorConfig c = cfg;
  c.store_dense = false;
  const PhaseState start{0.0, s};
  const double V0 = lyapunov_value(p, start);
  const std::vector<EventSpec> events = {EventSpec::section_crossing(true, 0.1 * p.period()),
                                         EventSpec::lyapunov_below(1e-24 * V0, true)};
  std::vector<EventRecord> log;
  const RunSummary run = integrate_observed(p, start, 0.0, c.resolved_max_x(p), c, events, log,
                                            [](const DenseSegment&, double, std::span<const EventRecord>) {
                                              return true;
                                            });
  if (run.terminal_event && !log.empty() && log.back().kind == EventKind::SectionCrossing)
    return {log.back().state.v, log.back().x};
  if (run.terminal_event)
    throw Error(ErrorCode::NoReturn, "trajectory from s = " + std::to_string(s) + " decayed to the origin");
  throw Error(ErrorCode::NoReturn, "no return to the section within max_x from s = " + std::to_string(s));
}

/// P'(s) by central difference with step fd_step * max(1, s).
inline double return_map_derivative(const ModelParams& p, double s, const CycleSolverConfig& cfg) {
  double h = cfg.fd_step * std::max(1.0, std::abs(s));
  if (s - h <= 0.0) h = 0.5 * s;
  const double up = return_map(p, s + h, cfg.integrator).s_next;
  const double dn = return_map(p, s - h, cfg.integrator).s_next;
  return (up - dn) / (2.0 * h);
}

/// Largest |psi| over the turning points of one period launched from (0, s).
inline double cycle_amplitude(const ModelParams& p, double s_fixed, double period, const IntegratorConfig& cfg) {
  IntegratorConfig c = cfg;
  c.store_dense = false;
  const std::vector<EventSpec> events = {EventSpec::turning_point()};
  std::vector<EventRecord> log;
  integrate_observed(p, {0.0, s_fixed}, 0.0, period, c, events, log,
                     [](const DenseSegment&, double, std::span<const EventRecord>) { return true; });
  double amp = 0.0;
  for (const auto& e : log) amp = std::max(amp, std::abs(e.state.psi));
  if (!(amp > 0.0)) throw Error(ErrorCode::InsufficientEvents, "cycle has no turning point");
  return amp;
}

inline double cycle_amplitude(const ModelParams& p, const LimitCycle& lc, const IntegratorConfig& cfg) {
  return cycle_amplitude(p, lc.s_fixed, lc.period, cfg);
}

/// Fill period, multiplier, stability and amplitude for a converged root.
inline LimitCycle make_cycle(const ModelParams& p, double s, const CycleSolverConfig& cfg) {
  LimitCycle lc;
  lc.gamma = p.gamma();
  lc.s_fixed = s;
  lc.period = return_map(p, s, cfg.integrator).period;
  lc.multiplier = return_map_derivative(p, s, cfg);
  lc.stability = classify_stability(lc.multiplier, cfg.tol_h);
  lc.amplitude = cycle_amplitude(p, s, lc.period, cfg.integrator);
  return lc;
}

/// Newton iteration for F_LC(s) = P(s) - s = 0.  The origin is always a
/// fixed point, so the iteration runs on the deflated G(s) = P(s) / s - 1;
/// plain Newton from below an attracting cycle at gamma > 0 slides to s = 0.
inline LimitCycle find_cycle(const ModelParams& p, double s_guess, const CycleSolverConfig& cfg = {}) {
  if (!(s_guess > 0.0)) throw Error(ErrorCode::InvalidParameter, "s_guess must be > 0");
  double s = s_guess;
  for (int it = 0; it < cfg.max_iter; ++it) {
    const double P = return_map(p, s, cfg.integrator).s_next;
    const double F = P - s;
    if (std::abs(F) < cfg.tol_newton) return make_cycle(p, s, cfg);
    // -G / G' = -F / (P' - P / s)
    const double dF = return_map_derivative(p, s, cfg) - P / s;
    if (!(std::abs(dF) > 1e-14) || !std::isfinite(dF))
      throw Error(ErrorCode::NoConvergence, "singular Newton derivative at s = " + std::to_string(s));
    double step = -F / dF;
    int halvings = 0;
    while (s + step <= 0.0 && halvings < 60) {
      step *= 0.5;
      ++halvings;
    }
    if (s + step <= 0.0) throw Error(ErrorCode::NoConvergence, "Newton iterate left s > 0");
    s += step;
  }
  throw Error(ErrorCode::NoConvergence,
              "no fixed point after " + std::to_string(cfg.max_iter) + " Newton iterations from s = " +
                  std::to_string(s_guess));
}

/// Roots of F_LC on a geometric grid over [s_lo, s_hi], refined by
/// safeguarded false position.  Used to count cycles.
inline std::vector<double> scan_cycle_roots(const ModelParams& p, double s_lo, double s_hi, int n,
                                            const CycleSolverConfig& cfg = {}) {
  if (!(s_lo > 0.0 && s_hi > s_lo && n >= 2)) throw Error(ErrorCode::InvalidParameter, "bad root-scan grid");
  std::vector<double> grid(static_cast<std::size_t>(n));
  const double ratio = std::log(s_hi / s_lo) / (n - 1);
  for (int i = 0; i < n; ++i) grid[static_cast<std::size_t>(i)] = s_lo * std::exp(ratio * i);
  auto F = [&](double s) -> std::optional<double> {
    try {
      return return_map(p, s, cfg.integrator).s_next - s;
    } catch (const Error&) {
      return std::nullopt;
    }
  };
  std::vector<std::optional<double>> vals(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) vals[i] = F(grid[i]);
  std::vector<double> roots;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    if (!vals[i] || !vals[i + 1]) continue;
    double a = grid[i], b = grid[i + 1], fa = *vals[i], fb = *vals[i + 1];
    if (fa == 0.0) {
      roots.push_back(a);
      continue;
    }
    if ((fa < 0.0) == (fb < 0.0)) continue;
    for (int it = 0; it < 200 && b - a > 1e-13 * b; ++it) {
      double m = b - fb * (b - a) / (fb - fa);
      if (!(m > a && m < b) || it % 3 == 2) m = 0.5 * (a + b);
      const auto fm = F(m);
      if (!fm) break;
      if (std::abs(*fm) < cfg.tol_newton) {
        a = b = m;
        break;
      }
      if ((*fm < 0.0) == (fa < 0.0)) {
        a = m;
        fa = *fm;
      } else {
        b = m;
        fb = *fm;
      }
    }
    roots.push_back(0.5 * (a + b));
  }
  return roots;
}

// ---------------------------------------------------------------------------
// Continuation

enum class BranchEnd { GammaLimit, FoldMargin, SectionFloor, StepUnderflow, MaxPoints };

inline const char* to_string(BranchEnd e) {
  switch (e) {
    case BranchEnd::GammaLimit: return "gamma_limit";
    case BranchEnd::FoldMargin: return "fold_margin";
    case BranchEnd::SectionFloor: return "section_floor";
    case BranchEnd::StepUnderflow: return "step_underflow";
    case BranchEnd::MaxPoints: return "max_points";
  }
  return "?";
}

struct ContinuationSettings {
  double initial_step = 0.05;
  double min_step = 1e-7;
  double max_step = 0.5;
  double grow = 1.3;
  int fast_iterations = 3;
  int max_corrector_iterations = 10;
  /// The branch is kept inside [gamma_min, gamma_max].
  double gamma_min = -1.5;
  double gamma_max = 0.5;
  /// Stop once s_fixed drops below this; 0 selects 1e-3 * omega.
  double s_floor = 0.0;
  /// Stop this far (in gamma) past a detected fold, when set.
  std::optional<double> fold_margin;
  /// Steps across the fold are refined until both neighbours have
  /// |multiplier - 1| below this.
  double fold_multiplier_band = 0.05;
  double fold_refine_tol = 1e-8;
  int max_points = 2000;
  /// Initial direction of travel in gamma (-1 downward, +1 upward).
  int direction = -1;
};

struct BranchPoint {
  LimitCycle cycle;
  double tangent_s = 0.0;
  double tangent_gamma = 0.0;
};

struct FoldPoint {
  double gamma_c = 0.0;
  double s_c = 0.0;
  double multiplier = 1.0;
  double gamma_width = 0.0;
};

struct Branch {
  ModelParams base = ModelParams::reference(0.0);
  CycleSolverConfig solver;
  std::vector<BranchPoint> points;
  /// Arclength of the step from point k to k + 1.
  std::vector<double> arclength_steps;
  std::optional<FoldPoint> fold;
  /// Index k such that the fold lies between points k and k + 1.
  std::optional<std::size_t> fold_index;
  BranchEnd end = BranchEnd::MaxPoints;
};

namespace detail {

struct Gradient {
  double F = 0.0;
  double Fs = 0.0;
  double Fg = 0.0;
};

inline Gradient flc_gradient(const ModelParams& base, double s, double gamma, const CycleSolverConfig& cfg) {
  const ModelParams p = base.with_gamma(gamma);
  Gradient g;
  g.F = return_map(p, s, cfg.integrator).s_next - s;
  g.Fs = return_map_derivative(p, s, cfg) - 1.0;
  const double hg = cfg.fd_step_gamma;
  const double up = return_map(base.with_gamma(gamma + hg), s, cfg.integrator).s_next;
  const double dn = return_map(base.with_gamma(gamma - hg), s, cfg.integrator).s_next;
  g.Fg = (up - dn) / (2.0 * hg);
  return g;
}

/// Unit tangent (-F_gamma, F_s) to the solution curve, oriented along `ref`.
inline std::pair<double, double> curve_tangent(const Gradient& g, double ref_s, double ref_gamma) {
  double ts = -g.Fg;
  double tg = g.Fs;
  const double n = std::hypot(ts, tg);
  ts /= n;
  tg /= n;
  if (ts * ref_s + tg * ref_gamma < 0.0) {
    ts = -ts;
    tg = -tg;
  }
  return {ts, tg};
}

struct Corrected {
  double s = 0.0;
  double gamma = 0.0;
  int iterations = 0;
  Gradient grad;
};

/// Newton on {F = 0, t . (u - u_pred) = 0}.
inline std::optional<Corrected> correct(const ModelParams& base, double s_pred, double g_pred, double ts, double tg,
                                        const CycleSolverConfig& cfg, int max_iter) {
  double s = s_pred, g = g_pred;
  for (int it = 1; it <= max_iter; ++it) {
    if (!(s > 0.0)) return std::nullopt;
    Gradient gr;
    try {
      gr = flc_gradient(base, s, g, cfg);
    } catch (const Error&) {
      return std::nullopt;
    }
    const double r1 = gr.F;
    const double r2 = ts * (s - s_pred) + tg * (g - g_pred);
    const double det = gr.Fs * tg - gr.Fg * ts;
    if (!(std::abs(det) > 1e-300)) return std::nullopt;
    const double ds = (-r1 * tg + r2 * gr.Fg) / det;
    const double dg = (-gr.Fs * r2 + ts * r1) / det;
    s += ds;
    g += dg;
    if (std::abs(r1) < cfg.tol_newton && std::hypot(ds, dg) < 1e-9 * (1.0 + std::abs(s))) {
      if (!(s > 0.0)) return std::nullopt;
      try {
        gr = flc_gradient(base, s, g, cfg);
      } catch (const Error&) {
        return std::nullopt;
      }
      return Corrected{s, g, it, gr};
    }
  }
  return std::nullopt;
}

inline BranchPoint make_point(const ModelParams& base, const Corrected& c, double ref_s, double ref_g,
                              const CycleSolverConfig& cfg) {
  const ModelParams p = base.with_gamma(c.gamma);
  BranchPoint bp;
  bp.cycle.gamma = c.gamma;
  bp.cycle.s_fixed = c.s;
  bp.cycle.period = return_map(p, c.s, cfg.integrator).period;
  bp.cycle.multiplier = c.grad.Fs + 1.0;
  bp.cycle.stability = classify_stability(bp.cycle.multiplier, cfg.tol_h);
  bp.cycle.amplitude = cycle_amplitude(p, c.s, bp.cycle.period, cfg.integrator);
  const auto [ts, tg] = curve_tangent(c.grad, ref_s, ref_g);
  bp.tangent_s = ts;
  bp.tangent_gamma = tg;
  return bp;
}

}  // namespace detail

/// Locate the fold between the branch points that bracket a sign change of
/// the gamma-component of the tangent, by bisection along arclength.
inline FoldPoint locate_fold(const Branch& b, double refine_tol = 1e-8) {
  std::optional<std::size_t> k = b.fold_index;
  if (!k) {
    for (std::size_t i = 0; i + 1 < b.points.size(); ++i) {
      if ((b.points[i].tangent_gamma < 0.0) != (b.points[i + 1].tangent_gamma < 0.0)) {
        k = i;
        break;
      }
    }
  }
  if (!k) throw Error(ErrorCode::NoFoldInBranch, "tangent gamma-component never changes sign");
  const BranchPoint& p0 = b.points[*k];
  const BranchPoint& p1 = b.points[*k + 1];
  const double ts = p0.tangent_s, tg = p0.tangent_gamma;
  const bool sign0 = tg < 0.0;
  double lo = 0.0, hi = b.arclength_steps[*k];
  double g_lo = p0.cycle.gamma, g_hi = p1.cycle.gamma;
  double s_mid = 0.5 * (p0.cycle.s_fixed + p1.cycle.s_fixed);
  double g_mid = 0.5 * (g_lo + g_hi);
  double mult = 0.5 * (p0.cycle.multiplier + p1.cycle.multiplier);
  for (int it = 0; it < 80; ++it) {
    if (std::abs(g_hi - g_lo) < refine_tol && hi - lo < 1e-6 * (1.0 + b.arclength_steps[*k])) break;
    const double lam = 0.5 * (lo + hi);
    const auto c = detail::correct(b.base, p0.cycle.s_fixed + lam * ts, p0.cycle.gamma + lam * tg, ts, tg, b.solver,
                                   12);
    if (!c) throw Error(ErrorCode::NoConvergence, "fold bisection corrector failed");
    const auto [nts, ntg] = detail::curve_tangent(c->grad, ts, tg);
    (void)nts;
    s_mid = c->s;
    g_mid = c->gamma;
    mult = c->grad.Fs + 1.0;
    if ((ntg < 0.0) == sign0) {
      lo = lam;
      g_lo = c->gamma;
    } else {
      hi = lam;
      g_hi = c->gamma;
    }
  }
  return FoldPoint{g_mid, s_mid, mult, std::abs(g_hi - g_lo)};
}

/// Pseudo-arclength continuation of F_LC(s, gamma) = 0 from a converged cycle.
inline Branch continue_branch(const ModelParams& p_base, const LimitCycle& cycle_start,
                              const ContinuationSettings& set = {}, const CycleSolverConfig& solver = {}) {
  Branch br;
  br.base = p_base;
  br.solver = solver;
  const double s_floor = set.s_floor > 0.0 ? set.s_floor : 1e-3 * p_base.omega();

  detail::Corrected c0;
  c0.s = cycle_start.s_fixed;
  c0.gamma = cycle_start.gamma;
  c0.grad = detail::flc_gradient(p_base, c0.s, c0.gamma, solver);
  br.points.push_back(detail::make_point(p_base, c0, 0.0, static_cast<double>(set.direction), solver));

  double step = set.initial_step;
  bool fold_seen = false;
  double fold_gamma = 0.0;
  const bool initial_down = br.points.front().tangent_gamma < 0.0;

  while (true) {
    if (static_cast<int>(br.points.size()) >= set.max_points) {
      br.end = BranchEnd::MaxPoints;
      break;
    }
    if (step < set.min_step) {
      if (br.points.size() == 1) throw Error(ErrorCode::StepUnderflow, "continuation could not take a first step");
      br.end = BranchEnd::StepUnderflow;
      break;
    }
    const BranchPoint& last = br.points.back();
    const double sp = last.cycle.s_fixed + step * last.tangent_s;
    const double gp = last.cycle.gamma + step * last.tangent_gamma;
    if (sp < s_floor) {
      br.end = BranchEnd::SectionFloor;
      break;
    }
    const auto c = detail::correct(p_base, sp, gp, last.tangent_s, last.tangent_gamma, solver,
                                   set.max_corrector_iterations);
    if (!c) {
      step *= 0.5;
      continue;
    }
    BranchPoint next = detail::make_point(p_base, *c, last.tangent_s, last.tangent_gamma, solver);
    // Reject steps that turn sharply: the corrector may have jumped branches.
    if (next.tangent_s * last.tangent_s + next.tangent_gamma * last.tangent_gamma < 0.8) {
      step *= 0.5;
      continue;
    }
    const bool crosses_fold = (next.tangent_gamma < 0.0) != (last.tangent_gamma < 0.0);
    if (crosses_fold && (std::abs(last.cycle.multiplier - 1.0) >= set.fold_multiplier_band ||
                         std::abs(next.cycle.multiplier - 1.0) >= set.fold_multiplier_band)) {
      if (step * 0.5 >= set.min_step) {
        step *= 0.5;
        continue;
      }
    }
    if (next.cycle.gamma < set.gamma_min || next.cycle.gamma > set.gamma_max) {
      br.end = BranchEnd::GammaLimit;
      break;
    }
    if (next.cycle.s_fixed < s_floor) {
      br.end = BranchEnd::SectionFloor;
      break;
    }
    const double ds = next.cycle.s_fixed - last.cycle.s_fixed;
    const double dg = next.cycle.gamma - last.cycle.gamma;
    br.arclength_steps.push_back(std::hypot(ds, dg));
    if (crosses_fold && !fold_seen) {
      fold_seen = true;
      br.fold_index = br.points.size() - 1;
      fold_gamma = 0.5 * (last.cycle.gamma + next.cycle.gamma);
    }
    br.points.push_back(next);
    if (fold_seen && set.fold_margin && std::abs(next.cycle.gamma - fold_gamma) > *set.fold_margin &&
        (next.tangent_gamma < 0.0) != initial_down) {
      br.end = BranchEnd::FoldMargin;
      break;
    }
    if (c->iterations <= set.fast_iterations && !crosses_fold) step = std::min(step * set.grow, set.max_step);
  }
  if (br.fold_index) br.fold = locate_fold(br, set.fold_refine_tol);
  return br;
}


/// Stable branch started at gamma_start and continued downward until it
/// folds back by `margin` in gamma; returns the located fold.
inline FoldPoint fold_by_continuation(const ModelParams& p_base, double gamma_start = 0.5,
                                      const CycleSolverConfig& solver = {}, ContinuationSettings set = {},
                                      double margin = 0.05) {
  const ModelParams p = p_base.with_gamma(gamma_start);
  // Outer-cycle seed from the averaged amplitude equation, solved directly so
  // this header does not depend on the averaging module.
  const double disc = 1.0 + 8.0 * p.b() * gamma_start / (p.a() * p.a());
  const double a_out = std::sqrt(p.a() / p.b() * (1.0 + std::sqrt(std::max(0.0, disc))));
  const LimitCycle start = find_cycle(p, p.omega() * a_out, solver);
  set.fold_margin = margin;
  set.direction = -1;
  const Branch br = continue_branch(p_base, start, set, solver);
  if (!br.fold) throw Error(ErrorCode::NoFoldInBranch, "continuation from gamma = " + std::to_string(gamma_start) +
                                                           " ended (" + to_string(br.end) + ") without a fold");
  return *br.fold;
}

}  // namespace nhse
