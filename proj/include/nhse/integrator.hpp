/**
 * @file integrator.hpp
 * @brief Adaptive DOP853 integration of the planar flow with a 7th-order
 * continuous extension and event location on the dense output.
 *
 * The engine is `integrate_observed`, which hands every accepted step (as a
 * DenseSegment) to a caller-supplied observer.  `integrate` builds a stored
 * Trajectory on top of it.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nhse/dop853_tableau.hpp"
#include "nhse/errors.hpp"
#include "nhse/model.hpp"

namespace nhse {

struct IntegratorConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  /// Largest accepted step; 0 selects one eighth of the harmonic period.
  double max_step = 0.0;
  /// Hard cap on the integration end point; 0 selects 10000 / omega.
  double max_x = 0.0;
  /// When false only the endpoints and event records are kept.
  bool store_dense = true;

  void validate() const {
    if (!(rel_tol > 0.0 && rel_tol <= 1e-3))
      throw Error(ErrorCode::InvalidParameter, "integrator.rel_tol must be in (0, 1e-3]");
    if (!(abs_tol > 0.0 && abs_tol <= 1e-3))
      throw Error(ErrorCode::InvalidParameter, "integrator.abs_tol must be in (0, 1e-3]");
    if (max_step < 0.0) throw Error(ErrorCode::InvalidParameter, "integrator.max_step must be >= 0");
    if (max_x < 0.0) throw Error(ErrorCode::InvalidParameter, "integrator.max_x must be >= 0");
  }

  double resolved_max_step(const ModelParams& p) const { return max_step > 0.0 ? max_step : p.period() / 8.0; }
  double resolved_max_x(const ModelParams& p) const { return max_x > 0.0 ? max_x : 10000.0 / p.omega(); }

  /// Same config with both tolerances scaled by `factor`.
  IntegratorConfig scaled_tolerances(double factor) const {
    IntegratorConfig c = *this;
    c.rel_tol *= factor;
    c.abs_tol *= factor;
    return c;
  }
};

enum class EventKind { SectionCrossing, TurningPoint, LyapunovBelow };
enum class Direction { Ascending, Descending, Any };

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::SectionCrossing: return "section";
    case EventKind::TurningPoint: return "turning";
    case EventKind::LyapunovBelow: return "lyapunov";
  }
  return "?";
}

/// Scalar event functions located on the dense output:
///  - SectionCrossing: psi, ascending through zero (so v > 0 there);
///  - TurningPoint: v;
///  - LyapunovBelow: V - threshold, descending.
/// `active_after` suppresses detection before that x (used to skip the
/// launch point of a return map).
struct EventSpec {
  EventKind kind = EventKind::TurningPoint;
  Direction direction = Direction::Any;
  bool terminal = false;
  double threshold = 0.0;
  double active_after = -std::numeric_limits<double>::infinity();

  static EventSpec section_crossing(bool terminal = false, double active_after = -INFINITY) {
    return {EventKind::SectionCrossing, Direction::Ascending, terminal, 0.0, active_after};
  }
  static EventSpec turning_point(bool terminal = false) {
    return {EventKind::TurningPoint, Direction::Any, terminal, 0.0, -INFINITY};
  }
  static EventSpec lyapunov_below(double threshold, bool terminal = true) {
    return {EventKind::LyapunovBelow, Direction::Descending, terminal, threshold, -INFINITY};
  }

  double value(const ModelParams& p, const PhaseState& s) const {
    switch (kind) {
      case EventKind::SectionCrossing: return s.psi;
      case EventKind::TurningPoint: return s.v;
      case EventKind::LyapunovBelow: return lyapunov_value(p, s) - threshold;
    }
    return 0.0;
  }

  bool triggers(double g0, double g1) const {
    const bool up = g0 < 0.0 && g1 >= 0.0;
    const bool down = g0 > 0.0 && g1 <= 0.0;
    switch (direction) {
      case Direction::Ascending: return up;
      case Direction::Descending: return down;
      case Direction::Any: return up || down;
    }
    return false;
  }
};

struct EventRecord {
  double x = 0.0;
  PhaseState state;
  EventKind kind = EventKind::TurningPoint;
  std::size_t spec_index = 0;
};

/// One accepted step [x0, x0 + h] with its DOP853 interpolant.
struct DenseSegment {
  double x0 = 0.0;
  double h = 0.0;
  PhaseState y0;
  std::array<PhaseState, dop853::kInterpolatorPower> coeffs{};

  double x1() const noexcept { return x0 + h; }

  PhaseState eval(double x) const noexcept {
    const double t = (x - x0) / h;
    double psi = 0.0;
    double v = 0.0;
    for (int i = dop853::kInterpolatorPower - 1; i >= 0; --i) {
      psi += coeffs[i].psi;
      v += coeffs[i].v;
      // Alternate t and (1 - t) factors, innermost first.
      const double f = ((dop853::kInterpolatorPower - 1 - i) % 2 == 0) ? t : 1.0 - t;
      psi *= f;
      v *= f;
    }
    return {y0.psi + psi, y0.v + v};
  }
};

struct RunSummary {
  double x_end = 0.0;
  PhaseState end;
  bool terminal_event = false;
  bool observer_stop = false;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

namespace detail {

inline double error_norm(const std::array<PhaseState, dop853::kStagesExtended>& k, double h, const PhaseState& y,
                         const PhaseState& y_new, const IntegratorConfig& cfg) {
  double e5p = 0.0, e5v = 0.0, e3p = 0.0, e3v = 0.0;
  for (int i = 0; i <= dop853::kStages; ++i) {
    e5p += dop853::e5[i] * k[i].psi;
    e5v += dop853::e5[i] * k[i].v;
    e3p += dop853::e3[i] * k[i].psi;
    e3v += dop853::e3[i] * k[i].v;
  }
  const double sp = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y.psi), std::abs(y_new.psi));
  const double sv = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y.v), std::abs(y_new.v));
  e5p /= sp;
  e5v /= sv;
  e3p /= sp;
  e3v /= sv;
  const double n5 = e5p * e5p + e5v * e5v;
  const double n3 = e3p * e3p + e3v * e3v;
  if (n5 == 0.0 && n3 == 0.0) return 0.0;
  return std::abs(h) * n5 / std::sqrt((n5 + 0.01 * n3) * 2.0);
}

inline double initial_step(const ModelParams& p, const PhaseState& y0, const PhaseState& f0,
                           const IntegratorConfig& cfg, double max_step) {
  const double sp = cfg.abs_tol + std::abs(y0.psi) * cfg.rel_tol;
  const double sv = cfg.abs_tol + std::abs(y0.v) * cfg.rel_tol;
  const double d0 = std::hypot(y0.psi / sp, y0.v / sv) / std::sqrt(2.0);
  const double d1 = std::hypot(f0.psi / sp, f0.v / sv) / std::sqrt(2.0);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, max_step);
  const PhaseState y1 = y0 + h0 * f0;
  const PhaseState f1 = flow_rhs(p, y1);
  const PhaseState df = f1 - f0;
  const double d2 = std::hypot(df.psi / sp, df.v / sv) / std::sqrt(2.0) / h0;
  const double h1 = (d1 <= 1e-15 && d2 <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                                 : std::pow(0.01 / std::max(d1, d2), 1.0 / 8.0);
  return std::min({100.0 * h0, h1, max_step});
}

/// Root of an event function on a dense segment, bracketed in [a, b].
/// Illinois false position with a bisection fallback.
inline double locate_root(const ModelParams& p, const EventSpec& ev, const DenseSegment& seg, double a, double b,
                          double ga, double gb) {
  for (int it = 0; it < 200; ++it) {
    const double tol = std::max(1e-12, 4.0 * std::numeric_limits<double>::epsilon() * std::abs(b));
    if (b - a <= tol) break;
    double m = (gb != ga) ? b - gb * (b - a) / (gb - ga) : 0.5 * (a + b);
    if (!(m > a && m < b) || it % 4 == 3) m = 0.5 * (a + b);
    const double gm = ev.value(p, seg.eval(m));
    if (gm == 0.0) return m;
    if ((gm < 0.0) == (ga < 0.0)) {
      a = m;
      ga = gm;
      gb *= 0.5;
    } else {
      b = m;
      gb = gm;
      ga *= 0.5;
    }
  }
  return b;
}

}  // namespace detail

/// Integrate from (x_begin, s0) towards x_end.  `observer(segment, x_stop,
/// new_events)` is called once per accepted step; `x_stop` is the end of the
/// valid part of the segment (earlier than segment.x1() when a terminal event
/// fired).  Returning false from the observer stops the run after that step.
template <class Observer>
RunSummary integrate_observed(const ModelParams& p, PhaseState s0, double x_begin, double x_end,
                              const IntegratorConfig& cfg, std::span<const EventSpec> events,
                              std::vector<EventRecord>& event_log, Observer&& observer) {
  cfg.validate();
  if (!s0.finite()) throw Error(ErrorCode::InvalidParameter, "initial state must be finite");
  if (!(x_end > x_begin)) throw Error(ErrorCode::InvalidParameter, "integration span must satisfy x0 < x1");
  const double max_x = cfg.resolved_max_x(p);
  if (x_end > max_x * (1.0 + 1e-12))
    throw Error(ErrorCode::MaxLengthExceeded,
                "span end " + std::to_string(x_end) + " exceeds max_x " + std::to_string(max_x));
  const double max_step = cfg.resolved_max_step(p);

  using namespace dop853;
  constexpr double kSafety = 0.9;
  constexpr double kBeta = 0.04;  // PI controller
  constexpr double kExpo = 1.0 / 8.0 - 0.2 * kBeta;
  constexpr double kMaxGrow = 6.0;
  constexpr double kMaxShrink = 1.0 / 3.0;

  RunSummary out;
  double x = x_begin;
  PhaseState y = s0;
  std::array<PhaseState, kStagesExtended> k{};
  k[0] = flow_rhs(p, y);
  double h = detail::initial_step(p, y, k[0], cfg, max_step);
  double err_old = 1e-4;
  bool rejected_last = false;

  std::vector<double> g_prev(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) g_prev[i] = events[i].value(p, y);

  std::vector<EventRecord> step_events;
  while (x < x_end) {
    const double eps_x = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x));
    if (h < eps_x)
      throw Error(ErrorCode::StepSizeUnderflow, "step size underflow at x = " + std::to_string(x));
    bool last = false;
    if (x + 1.01 * h >= x_end) {
      h = x_end - x;
      last = true;
    }

    // Stages 2..12 and the 8th-order solution.
    for (int s = 1; s < kStages; ++s) {
      PhaseState acc{};
      for (int j = 0; j < s; ++j) {
        if (a[s][j] != 0.0) acc = acc + a[s][j] * k[j];
      }
      k[s] = flow_rhs(p, y + h * acc);
    }
    PhaseState incr{};
    for (int j = 0; j < kStages; ++j) {
      if (b[j] != 0.0) incr = incr + b[j] * k[j];
    }
    const PhaseState y_new = y + h * incr;
    k[kStages] = flow_rhs(p, y_new);
    const double err = detail::error_norm(k, h, y, y_new, cfg);

    if (!(err <= 1.0) || !y_new.finite()) {
      ++out.rejected;
      const double fac = (std::isfinite(err) && y_new.finite())
                             ? std::min(1.0 / kMaxShrink, std::pow(err, kExpo) / kSafety)
                             : 1.0 / kMaxShrink;
      h /= fac;
      rejected_last = true;
      continue;
    }
    ++out.accepted;

    // Continuous extension: three extra stages and the interpolant rows.
    for (int s = kStages + 1; s < kStagesExtended; ++s) {
      PhaseState acc{};
      for (int j = 0; j < s; ++j) {
        if (a[s][j] != 0.0) acc = acc + a[s][j] * k[j];
      }
      k[s] = flow_rhs(p, y + h * acc);
    }
    DenseSegment seg;
    seg.x0 = x;
    seg.h = h;
    seg.y0 = y;
    const PhaseState dy = y_new - y;
    seg.coeffs[0] = dy;
    seg.coeffs[1] = h * k[0] - dy;
    seg.coeffs[2] = 2.0 * dy - h * (k[kStages] + k[0]);
    for (int r = 0; r < kInterpolatorPower - 3; ++r) {
      PhaseState acc{};
      for (int j = 0; j < kStagesExtended; ++j) {
        if (d[r][j] != 0.0) acc = acc + d[r][j] * k[j];
      }
      seg.coeffs[3 + r] = h * acc;
    }

    // Events inside (x, x + h].
    step_events.clear();
    const double x_new = last ? x_end : x + h;
    for (std::size_t i = 0; i < events.size(); ++i) {
      const EventSpec& ev = events[i];
      const double g1 = ev.value(p, y_new);
      if (ev.active_after >= x_new) {
        g_prev[i] = g1;
        continue;
      }
      double xa = x;
      double ga = g_prev[i];
      if (ev.active_after > x) {
        xa = ev.active_after;
        ga = ev.value(p, seg.eval(xa));
      }
      if (ev.triggers(ga, g1)) {
        const double xr = (g1 == 0.0) ? x_new : detail::locate_root(p, ev, seg, xa, x_new, ga, g1);
        step_events.push_back({xr, seg.eval(xr), ev.kind, i});
      }
      g_prev[i] = g1;
    }
    std::sort(step_events.begin(), step_events.end(),
              [](const EventRecord& l, const EventRecord& r) { return l.x < r.x; });
    double x_stop = x_new;
    PhaseState y_stop = y_new;
    for (std::size_t i = 0; i < step_events.size(); ++i) {
      if (events[step_events[i].spec_index].terminal) {
        x_stop = step_events[i].x;
        y_stop = step_events[i].state;
        step_events.resize(i + 1);
        out.terminal_event = true;
        break;
      }
    }
    event_log.insert(event_log.end(), step_events.begin(), step_events.end());

    const bool keep_going = observer(static_cast<const DenseSegment&>(seg), x_stop,
                                     std::span<const EventRecord>(step_events));
    x = x_stop;
    y = y_stop;
    if (out.terminal_event) break;
    if (!keep_going) {
      out.observer_stop = true;
      break;
    }
    if (last) break;

    // PI step-size update.
    const double fac11 = std::pow(err, kExpo);
    double fac = fac11 / std::pow(err_old, kBeta);
    fac = std::clamp(fac / kSafety, 1.0 / kMaxGrow, 1.0 / kMaxShrink);
    double h_new = h / fac;
    if (rejected_last) h_new = std::min(h_new, h);
    err_old = std::max(err, 1e-4);
    rejected_last = false;
    h = std::min(h_new, max_step);
    k[0] = k[kStages];
  }
  out.x_end = x;
  out.end = y;
  return out;
}

/// Stored solution of one integration run.
struct Trajectory {
  std::vector<double> xs;
  std::vector<PhaseState> states;
  std::vector<EventRecord> events;
  std::vector<DenseSegment> segments;
  double x_begin = 0.0;
  double x_end = 0.0;

  bool has_dense() const noexcept { return !segments.empty(); }
  const PhaseState& final_state() const { return states.back(); }

  std::vector<EventRecord> events_of(EventKind kind) const {
    std::vector<EventRecord> out;
    for (const auto& e : events)
      if (e.kind == kind) out.push_back(e);
    return out;
  }
};

inline Trajectory integrate(const ModelParams& p, PhaseState s0, std::pair<double, double> span,
                            const IntegratorConfig& cfg, std::span<const EventSpec> events = {}) {
  Trajectory t;
  t.x_begin = span.first;
  t.xs.push_back(span.first);
  t.states.push_back(s0);
  const bool dense = cfg.store_dense;
  const RunSummary run = integrate_observed(
      p, s0, span.first, span.second, cfg, events, t.events,
      [&](const DenseSegment& seg, double x_stop, std::span<const EventRecord>) {
        if (dense) {
          t.segments.push_back(seg);
          t.xs.push_back(x_stop);
          t.states.push_back(x_stop == seg.x1() ? seg.eval(seg.x1()) : seg.eval(x_stop));
        }
        return true;
      });
  if (dense) {
    t.states.back() = run.end;
  } else {
    t.xs.push_back(run.x_end);
    t.states.push_back(run.end);
  }
  t.x_end = run.x_end;
  return t;
}

inline Trajectory integrate(const ModelParams& p, PhaseState s0, std::pair<double, double> span,
                            const IntegratorConfig& cfg, std::initializer_list<EventSpec> events) {
  const std::vector<EventSpec> ev(events);
  return integrate(p, s0, span, cfg, std::span<const EventSpec>(ev));
}

/// Interpolated state at x in [x_begin, x_end].
inline PhaseState evaluate_dense(const Trajectory& t, double x) {
  if (!t.has_dense()) throw Error(ErrorCode::OutOfSpan, "trajectory has no dense output");
  if (x < t.x_begin || x > t.x_end)
    throw Error(ErrorCode::OutOfSpan, "x = " + std::to_string(x) + " outside [" + std::to_string(t.x_begin) +
                                          ", " + std::to_string(t.x_end) + "]");
  auto it = std::upper_bound(t.xs.begin() + 1, t.xs.end(), x);
  std::size_t idx = static_cast<std::size_t>(std::distance(t.xs.begin() + 1, it));
  if (idx >= t.segments.size()) idx = t.segments.size() - 1;
  if (x == t.xs[idx + 1]) return t.states[idx + 1];
  if (x == t.xs[idx]) return t.states[idx];
  return t.segments[idx].eval(x);
}

}  // namespace nhse
