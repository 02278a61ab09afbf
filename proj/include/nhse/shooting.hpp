/**
 * @file shooting.hpp
 * @brief Boundary-slope shooting from (psi, v) = (0, s) and skin / extended
 * classification by the inverse participation ratio and its fractal
 * dimension D2 = -ln(IPR) / ln(L).
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "nhse/averaging.hpp"
#include "nhse/integrator.hpp"
#include "nhse/quadrature.hpp"

namespace nhse {

enum class Outcome { Skin, Extended, Undecided };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Skin: return "skin";
    case Outcome::Extended: return "extended";
    case Outcome::Undecided: return "undecided";
  }
  return "?";
}

/// How a classification was reached.
enum class DecisionRule { LyapunovFloor, TrappingRegion, AmplitudeLock, FractalDimension, Exhausted, Trivial };

inline const char* to_string(DecisionRule r) {
  switch (r) {
    case DecisionRule::LyapunovFloor: return "lyapunov_floor";
    case DecisionRule::TrappingRegion: return "trapping_region";
    case DecisionRule::AmplitudeLock: return "amplitude_lock";
    case DecisionRule::FractalDimension: return "d2";
    case DecisionRule::Exhausted: return "exhausted";
    case DecisionRule::Trivial: return "trivial";
  }
  return "?";
}

struct ShotResult {
  double slope = 0.0;
  Outcome outcome = Outcome::Undecided;
  double d2 = 0.0;
  double ipr = 0.0;
  std::optional<double> asymptotic_amplitude;
  double transit_length = 0.0;
  DecisionRule rule = DecisionRule::Exhausted;
  /// D2 at each completed checkpoint L = base_length * 2^k.
  std::vector<double> d2_history;
};

struct ClassifierConfig {
  /// Initial L; 0 selects 100 harmonic periods.
  double base_length = 0.0;
  int max_doublings = 6;
  double d2_threshold = 0.5;
  /// Successive D2 estimates must differ by less than this to decide.
  double d2_convergence = 0.05;
  /// Skin as soon as V drops below this floor.
  double early_exit_V = 1e-16;
  /// Relative band around `outer_amplitude` for the extended early exit.
  double early_exit_band = 0.05;
  /// Turning-point amplitudes in the window must lie within +/- this of their mean.
  double stationarity_band = 0.02;
  int amplitude_window = 8;
  bool early_exit = true;
  /// Also accept Skin once V is inside the sublevel set where V' <= 0.
  bool trapping_exit = true;
  /// Predicted or continued stable-cycle amplitude, when known.
  std::optional<double> outer_amplitude;
  IntegratorConfig integrator;

  double resolved_base_length(const ModelParams& p) const {
    return base_length > 0.0 ? base_length : 100.0 * p.period();
  }

  void validate(const ModelParams& p) const {
    integrator.validate();
    if (!(d2_threshold > 0.0 && d2_threshold < 1.0))
      throw Error(ErrorCode::InvalidParameter, "classifier.d2_threshold must be in (0, 1)");
    if (resolved_base_length(p) < 10.0 * p.period() * (1.0 - 1e-12))
      throw Error(ErrorCode::InvalidParameter, "classifier.base_length must be at least 10 harmonic periods");
    if (max_doublings < 1) throw Error(ErrorCode::InvalidParameter, "classifier.max_doublings must be >= 1");
    if (amplitude_window < 4) throw Error(ErrorCode::InvalidParameter, "classifier.amplitude_window must be >= 4");
  }
};

/// Rolling window of turning-point amplitudes |psi| at v = 0.
class AmplitudeWindow {
 public:
  explicit AmplitudeWindow(std::size_t size) : size_(size) {}

  void push(double amplitude) {
    values_.push_back(amplitude);
    if (values_.size() > size_) values_.erase(values_.begin());
  }

  bool full() const noexcept { return values_.size() == size_; }
  const std::vector<double>& values() const noexcept { return values_; }

  double mean() const {
    return std::accumulate(values_.begin(), values_.end(), 0.0) / static_cast<double>(values_.size());
  }

  double spread() const {
    const auto [lo, hi] = std::minmax_element(values_.begin(), values_.end());
    return *hi - *lo;
  }

  bool stationary(double band) const {
    if (!full()) return false;
    const double m = mean();
    if (!(m > 0.0)) return false;
    return std::all_of(values_.begin(), values_.end(), [&](double a) { return std::abs(a - m) <= band * m; });
  }

  /// Ratio of the mean successive change in the late half of the window to
  /// the early half; < 1 means the amplitudes are settling.
  double settling_ratio() const {
    const std::size_t n = values_.size();
    const std::size_t half = (n - 1) / 2;
    double early = 0.0, late = 0.0;
    for (std::size_t i = 0; i < half; ++i) early += std::abs(values_[i + 1] - values_[i]);
    for (std::size_t i = n - 1 - half; i + 1 < n; ++i) late += std::abs(values_[i + 1] - values_[i]);
    const double floor = 1e-12 * mean() * static_cast<double>(half);
    if (late <= floor) return 0.0;
    if (early <= floor) return INFINITY;
    return late / early;
  }

  /// Stationary and settling: the orbit is locked onto an attracting cycle.
  bool locked(double band) const { return stationary(band) && settling_ratio() <= 1.0; }

  /// Stationary but departing: the orbit is shadowing a repelling cycle.
  bool shadowing(double band) const { return stationary(band) && settling_ratio() > 1.0; }

 private:
  std::size_t size_;
  std::vector<double> values_;
};

/// Trajectory from (0, s) over [0, L] with turning points and section
/// crossings recorded.
inline Trajectory shoot(const ModelParams& p, double s, double L, const IntegratorConfig& cfg) {
  if (!(L > 0.0)) throw Error(ErrorCode::InvalidParameter, "shooting length must be > 0");
  IntegratorConfig c = cfg;
  if (c.resolved_max_x(p) < L) c.max_x = L;
  const std::vector<EventSpec> events = {EventSpec::turning_point(), EventSpec::section_crossing()};
  return integrate(p, {0.0, s}, {0.0, L}, c, events);
}

namespace detail {

/// Integrals of psi^2 and psi^4 over [a, b] inside one dense segment.
inline std::pair<double, double> moment_integrals(const DenseSegment& seg, double a, double b) {
  if (!(b > a)) return {0.0, 0.0};
  const auto f2 = [&](double x) {
    const double psi = seg.eval(x).psi;
    return psi * psi;
  };
  const auto f4 = [&](double x) {
    const double psi = seg.eval(x).psi;
    const double p2 = psi * psi;
    return p2 * p2;
  };
  return {adaptive_lobatto(f2, a, b, 1e-10), adaptive_lobatto(f4, a, b, 1e-10)};
}

}  // namespace detail

/// IPR(L) = int_0^L psi^4 / (int_0^L psi^2)^2 on the dense output.
inline double ipr(const Trajectory& t, double L) {
  if (!t.has_dense()) throw Error(ErrorCode::OutOfSpan, "ipr needs a dense trajectory");
  if (L > t.x_end * (1.0 + 1e-12) || L <= t.x_begin)
    throw Error(ErrorCode::OutOfSpan, "ipr length outside the trajectory span");
  double i2 = 0.0, i4 = 0.0;
  for (const auto& seg : t.segments) {
    if (seg.x0 >= L) break;
    const auto [m2, m4] = detail::moment_integrals(seg, seg.x0, std::min(seg.x1(), L));
    i2 += m2;
    i4 += m4;
  }
  if (!(i2 > 0.0)) throw Error(ErrorCode::DegenerateTrajectory, "trajectory is identically zero on [0, L]");
  return i4 / (i2 * i2);
}

/// D2 = -ln(IPR) / ln(L).
inline double fractal_dimension(double ipr_value, double L) {
  if (!(ipr_value > 0.0)) throw Error(ErrorCode::InvalidParameter, "ipr must be > 0");
  if (!(L > 1.0)) throw Error(ErrorCode::InvalidParameter, "L must be > 1");
  return -std::log(ipr_value) / std::log(L);
}

struct AmplitudeEstimate {
  double mean = 0.0;
  double spread = 0.0;
  std::size_t samples = 0;
};

/// Mean |psi| over the last k turning points; empty when the trajectory has
/// decayed below `floor_V`.
inline std::optional<AmplitudeEstimate> asymptotic_amplitude(const ModelParams& p, const Trajectory& t,
                                                             std::size_t k = 8, double floor_V = 1e-16) {
  const auto turns = t.events_of(EventKind::TurningPoint);
  if (turns.size() < 4)
    throw Error(ErrorCode::InsufficientEvents,
                "need at least 4 turning points, have " + std::to_string(turns.size()));
  if (lyapunov_value(p, t.final_state()) < floor_V) return std::nullopt;
  AmplitudeWindow w(std::min(k, turns.size()));
  for (const auto& e : turns) w.push(std::abs(e.state.psi));
  return AmplitudeEstimate{w.mean(), w.spread(), w.values().size()};
}

/// Skin / extended decision for the shot launched with slope s.
///
/// Three rules run concurrently; the first to fire decides:
///  - early exits (when enabled): V below `early_exit_V` or inside the
///    trapping sublevel set gives Skin; a stationary, settling window of
///    turning amplitudes (within `early_exit_band` of `outer_amplitude` when
///    that is known) gives Extended;
///  - D2 convergence at L = base * 2^k: two successive estimates within
///    `d2_convergence` and on the same side of `d2_threshold`.  A D2 decision
///    is deferred while the turning amplitudes show the orbit shadowing a
///    repelling cycle.
/// Undecided is returned when every doubling is used up.
inline ShotResult classify(const ModelParams& p, double s, const ClassifierConfig& cfg) {
  cfg.validate(p);
  ShotResult res;
  res.slope = s;
  if (s == 0.0) {
    // The origin is invariant: the shot never leaves it.
    res.outcome = Outcome::Skin;
    res.rule = DecisionRule::Trivial;
    res.ipr = 1.0;
    res.d2 = 0.0;
    return res;
  }

  const double base = cfg.resolved_base_length(p);
  const double L_max = base * std::ldexp(1.0, cfg.max_doublings);
  IntegratorConfig icfg = cfg.integrator;
  if (icfg.resolved_max_x(p) < L_max) icfg.max_x = L_max;
  const double trap = cfg.trapping_exit ? 0.999 * trapping_level(p) : 0.0;

  double i2 = 0.0, i4 = 0.0;
  int next_checkpoint = 0;
  double checkpoint_x = base;
  AmplitudeWindow window(static_cast<std::size_t>(cfg.amplitude_window));
  bool decided = false;
  double x_now = 0.0;
  PhaseState y_now{0.0, s};

  auto decide = [&](Outcome o, DecisionRule rule, double x) {
    res.outcome = o;
    res.rule = rule;
    res.transit_length = x;
    decided = true;
  };

  auto extended_lock = [&]() {
    if (!window.locked(cfg.stationarity_band)) return false;
    if (cfg.outer_amplitude) {
      const double ref = *cfg.outer_amplitude;
      return std::abs(window.mean() - ref) <= cfg.early_exit_band * ref;
    }
    return true;
  };

  auto close_checkpoint = [&]() {
    const double ipr_k = (i2 > 0.0) ? i4 / (i2 * i2) : 1.0;
    const double d2_k = fractal_dimension(ipr_k, checkpoint_x);
    res.d2_history.push_back(d2_k);
    res.ipr = ipr_k;
    res.d2 = d2_k;
    const std::size_t n = res.d2_history.size();
    if (!decided && n >= 2) {
      const double prev = res.d2_history[n - 2];
      const bool same_side = (prev < cfg.d2_threshold) == (d2_k < cfg.d2_threshold);
      const bool converged = std::abs(d2_k - prev) < cfg.d2_convergence;
      if (same_side && converged && !window.shadowing(cfg.stationarity_band)) {
        decide(d2_k < cfg.d2_threshold ? Outcome::Skin : Outcome::Extended, DecisionRule::FractalDimension,
               checkpoint_x);
      }
    }
    ++next_checkpoint;
    checkpoint_x = base * std::ldexp(1.0, next_checkpoint);
  };

  const std::vector<EventSpec> events = {EventSpec::turning_point()};
  std::vector<EventRecord> log;
  integrate_observed(p, {0.0, s}, 0.0, L_max, icfg, events, log,
                     [&](const DenseSegment& seg, double x_stop, std::span<const EventRecord> evs) {
                       double a = seg.x0;
                       while (checkpoint_x <= x_stop && next_checkpoint <= cfg.max_doublings) {
                         const auto [m2, m4] = detail::moment_integrals(seg, a, checkpoint_x);
                         i2 += m2;
                         i4 += m4;
                         a = checkpoint_x;
                         close_checkpoint();
                       }
                       const auto [m2, m4] = detail::moment_integrals(seg, a, x_stop);
                       i2 += m2;
                       i4 += m4;

                       x_now = x_stop;
                       y_now = seg.eval(x_stop);
                       for (const auto& e : evs) {
                         window.push(std::abs(e.state.psi));
                         if (!decided && cfg.early_exit && extended_lock())
                           decide(Outcome::Extended, DecisionRule::AmplitudeLock, e.x);
                       }
                       if (!decided && cfg.early_exit) {
                         const double V = lyapunov_value(p, y_now);
                         if (V < cfg.early_exit_V) {
                           decide(Outcome::Skin, DecisionRule::LyapunovFloor, x_stop);
                         } else if (V < trap) {
                           decide(Outcome::Skin, DecisionRule::TrappingRegion, x_stop);
                         }
                       }
                       // Keep integrating to the first checkpoint so every
                       // result carries an IPR / D2 measurement.
                       return !(decided && next_checkpoint >= 1);
                     });

  if (res.d2_history.empty()) {
    // Only possible if the run ended before the base length (it should not).
    const double L = std::max(x_now, std::exp(1.0));
    res.ipr = (i2 > 0.0) ? i4 / (i2 * i2) : 1.0;
    res.d2 = fractal_dimension(res.ipr, L);
  }
  if (!decided) {
    res.outcome = Outcome::Undecided;
    res.rule = DecisionRule::Exhausted;
    res.transit_length = x_now;
  }
  if (res.outcome == Outcome::Extended && !window.values().empty()) res.asymptotic_amplitude = window.mean();
  return res;
}

}  // namespace nhse
