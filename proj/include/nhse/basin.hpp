/**
 * @file basin.hpp
 * @brief Separatrix slope s*(gamma) by bisection over shooting outcomes, and
 * the skin basin fraction p_skin = mu((-s*, s*)) under a slope measure.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nhse/averaging.hpp"
#include "nhse/parallel.hpp"
#include "nhse/poincare.hpp"
#include "nhse/quadrature.hpp"
#include "nhse/shooting.hpp"

namespace nhse {

struct CauchyDensity {
  double s0 = 4.0;
};

/// Piecewise-linear density on a sorted grid, zero outside it.
struct TabulatedDensity {
  std::vector<double> grid;
  std::vector<double> values;
};

class SlopeDensity {
 public:
  static SlopeDensity cauchy(double s0) {
    if (!(s0 > 0.0 && std::isfinite(s0))) throw Error(ErrorCode::InvalidParameter, "Cauchy scale s0 must be > 0");
    return SlopeDensity(CauchyDensity{s0});
  }

  /// Default measure for a model: Cauchy with s0 = sqrt(2E).
  static SlopeDensity natural(const ModelParams& p) { return cauchy(p.omega()); }

  /// Throws InvalidParameter unless the table is sorted, nonnegative and
  /// integrates to 1 within 1e-8; `normalize` rescales it first.
  static SlopeDensity tabulated(std::vector<double> grid, std::vector<double> values, bool normalize = false) {
    if (grid.size() < 2 || grid.size() != values.size())
      throw Error(ErrorCode::InvalidParameter, "tabulated density needs >= 2 matching grid/value entries");
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (!std::isfinite(grid[i]) || !std::isfinite(values[i]))
        throw Error(ErrorCode::InvalidParameter, "tabulated density has a non-finite entry");
      if (values[i] < 0.0) throw Error(ErrorCode::InvalidParameter, "tabulated density must be nonnegative");
      if (i > 0 && !(grid[i] > grid[i - 1]))
        throw Error(ErrorCode::InvalidParameter, "tabulated density grid must be strictly increasing");
    }
    SlopeDensity d(TabulatedDensity{std::move(grid), std::move(values)});
    const double total = d.table_mass(-INFINITY, INFINITY);
    if (normalize) {
      if (!(total > 0.0)) throw Error(ErrorCode::InvalidParameter, "tabulated density has zero mass");
      for (double& v : std::get<TabulatedDensity>(d.kind_).values) v /= total;
    } else if (std::abs(total - 1.0) > 1e-8) {
      throw Error(ErrorCode::InvalidParameter, "tabulated density integrates to " + std::to_string(total) + ", not 1");
    }
    return d;
  }

  bool is_cauchy() const { return std::holds_alternative<CauchyDensity>(kind_); }
  const CauchyDensity& as_cauchy() const { return std::get<CauchyDensity>(kind_); }
  const TabulatedDensity& as_tabulated() const { return std::get<TabulatedDensity>(kind_); }

  double pdf(double s) const {
    if (const auto* c = std::get_if<CauchyDensity>(&kind_)) return c->s0 / (M_PI * (c->s0 * c->s0 + s * s));
    const auto& t = std::get<TabulatedDensity>(kind_);
    if (s < t.grid.front() || s > t.grid.back()) return 0.0;
    const auto it = std::upper_bound(t.grid.begin(), t.grid.end(), s);
    const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - t.grid.begin()), t.grid.size() - 1);
    const double x0 = t.grid[i - 1], x1 = t.grid[i];
    const double w = (s - x0) / (x1 - x0);
    return (1.0 - w) * t.values[i - 1] + w * t.values[i];
  }

  /// Breakpoints of the density inside (lo, hi), for splitting quadrature.
  std::vector<double> breakpoints(double lo, double hi) const {
    std::vector<double> out;
    if (const auto* t = std::get_if<TabulatedDensity>(&kind_))
      for (double g : t->grid)
        if (g > lo && g < hi) out.push_back(g);
    return out;
  }

 private:
  explicit SlopeDensity(std::variant<CauchyDensity, TabulatedDensity> k) : kind_(std::move(k)) {}

  /// Exact trapezoid mass of the table over [lo, hi].
  double table_mass(double lo, double hi) const {
    const auto& t = std::get<TabulatedDensity>(kind_);
    double m = 0.0;
    for (std::size_t i = 1; i < t.grid.size(); ++i) {
      const double a = std::max(lo, t.grid[i - 1]);
      const double b = std::min(hi, t.grid[i]);
      if (b <= a) continue;
      m += 0.5 * (pdf(a) + pdf(b)) * (b - a);
    }
    return m;
  }

  std::variant<CauchyDensity, TabulatedDensity> kind_;
};

/// (2/pi) atan(s*/s0): Cauchy mass of (-s*, s*).
inline double p_skin_cauchy(double s_star, double s0) {
  if (!(s_star >= 0.0)) throw Error(ErrorCode::InvalidParameter, "s_star must be >= 0");
  if (!(s0 > 0.0)) throw Error(ErrorCode::InvalidParameter, "s0 must be > 0");
  return 2.0 / M_PI * std::atan(s_star / s0);
}

/// Mass of (-s*, s*) by adaptive quadrature split at the density breakpoints.
inline double p_skin_numeric(double s_star, const SlopeDensity& rho) {
  if (!(s_star >= 0.0)) throw Error(ErrorCode::InvalidParameter, "s_star must be >= 0");
  if (s_star == 0.0) return 0.0;
  std::vector<double> cuts{-s_star};
  for (double b : rho.breakpoints(-s_star, s_star)) cuts.push_back(b);
  cuts.push_back(s_star);
  double total = 0.0;
  auto f = [&](double s) { return rho.pdf(s); };
  for (std::size_t i = 1; i < cuts.size(); ++i) total += adaptive_lobatto(f, cuts[i - 1], cuts[i], 1e-13, 1.0);
  return std::clamp(total, 0.0, 1.0);
}

struct SeparatrixResult {
  double s_star = 0.0;
  double s_lo = 0.0;
  double s_hi = 0.0;
  double width = 0.0;
  int iterations = 0;
};

/// Raised when a bisection midpoint cannot be classified; carries the
/// bracket reached so far.
class UndecidedError : public Error {
 public:
  UndecidedError(double lo, double hi, double mid)
      : Error(ErrorCode::UndecidedAtMidpoint, "shot at s = " + std::to_string(mid) + " undecided; bracket [" +
                                                  std::to_string(lo) + ", " + std::to_string(hi) + "]"),
        lo_(lo),
        hi_(hi) {}
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }

 private:
  double lo_, hi_;
};

/// Bracket centred on the averaged inner-cycle estimate omega * A_in, scaled
/// by [0.5, 2].  Outside the coexistence window the centre falls back to
/// omega * sqrt(a/b).
inline std::pair<double, double> seeded_bracket(const ModelParams& p) {
  const auto th = branch_amplitudes(p);
  const double centre = p.omega() * th.a_in.value_or(std::sqrt(p.a() / p.b()));
  return {0.5 * centre, 2.0 * centre};
}

/// Bisection on the shooting outcome: Skin below s*, Extended above.
inline SeparatrixResult separatrix_threshold(const ModelParams& p, double s_lo, double s_hi, double tol_s,
                                             const ClassifierConfig& cfg) {
  if (!(s_lo >= 0.0 && s_hi > s_lo)) throw Error(ErrorCode::InvalidParameter, "bracket needs 0 <= s_lo < s_hi");
  if (!(tol_s > 0.0)) throw Error(ErrorCode::InvalidParameter, "tol_s must be > 0");
  const Outcome o_lo = classify(p, s_lo, cfg).outcome;
  const Outcome o_hi = classify(p, s_hi, cfg).outcome;
  if (o_lo != Outcome::Skin || o_hi != Outcome::Extended)
    throw Error(ErrorCode::BracketInvalid, "bracket [" + std::to_string(s_lo) + ", " + std::to_string(s_hi) +
                                               "] gives " + to_string(o_lo) + " / " + to_string(o_hi));
  SeparatrixResult r;
  double lo = s_lo, hi = s_hi;
  while (hi - lo >= tol_s) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const Outcome o = classify(p, mid, cfg).outcome;
    ++r.iterations;
    if (o == Outcome::Skin)
      lo = mid;
    else if (o == Outcome::Extended)
      hi = mid;
    else
      throw UndecidedError(lo, hi, mid);
  }
  r.s_lo = lo;
  r.s_hi = hi;
  r.width = hi - lo;
  r.s_star = 0.5 * (lo + hi);
  return r;
}

/// Seeded bracket, widened once to [0.25, 4] x centre if the first is invalid.
inline SeparatrixResult separatrix_threshold(const ModelParams& p, double tol_s, const ClassifierConfig& cfg) {
  const auto [lo, hi] = seeded_bracket(p);
  try {
    return separatrix_threshold(p, lo, hi, tol_s, cfg);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::BracketInvalid) throw;
  }
  return separatrix_threshold(p, 0.5 * lo, 2.0 * hi, tol_s, cfg);
}

inline double p_skin(double s_star, const SlopeDensity& rho) {
  return rho.is_cauchy() ? p_skin_cauchy(s_star, rho.as_cauchy().s0) : p_skin_numeric(s_star, rho);
}

struct BasinPoint {
  double gamma = 0.0;
  Regime regime = Regime::SkinOnly;
  std::optional<double> s_star;
  double p_skin = 1.0;
  double bisection_width = 0.0;
  /// "ok" or the error text of a failed point.
  std::string status = "ok";
};

struct JumpEstimate {
  double gamma = 0.0;
  double s_star = 0.0;
  double delta_p = 0.0;
};

struct BasinConfig {
  ClassifierConfig classifier;
  double tol_s = 1e-6;
  /// Numeric fold location; computed by continuation when absent.
  std::optional<double> fold_gamma;
  /// Offset above the fold used for the jump estimate.
  double jump_delta = 1e-3;
  int workers = 0;
  CycleSolverConfig solver;
};

/// Size of the p_skin discontinuity: 1 - p_skin(s*(gamma_c + delta)).
inline JumpEstimate jump_at_fold(const ModelParams& p_base, const SlopeDensity& rho, const BasinConfig& cfg) {
  const double gc = cfg.fold_gamma ? *cfg.fold_gamma : fold_by_continuation(p_base, 0.5, cfg.solver).gamma_c;
  const double g = gc + cfg.jump_delta;
  const auto sep = separatrix_threshold(p_base.with_gamma(g), cfg.tol_s, cfg.classifier);
  return {g, sep.s_star, 1.0 - p_skin(sep.s_star, rho)};
}

/// One basin point; regime from the numeric fold and the sign of gamma.
inline BasinPoint basin_point(const ModelParams& p_base, double gamma, double gamma_c, const SlopeDensity& rho,
                              const BasinConfig& cfg) {
  BasinPoint bp;
  bp.gamma = gamma;
  bp.regime = classify_regime(gamma, gamma_c);
  switch (bp.regime) {
    case Regime::SkinOnly: bp.p_skin = 1.0; return bp;
    case Regime::HopfPoint:
    case Regime::ExtendedOnly: bp.p_skin = 0.0; return bp;
    case Regime::FoldPoint:
    case Regime::Coexistence: break;
  }
  try {
    const auto sep = separatrix_threshold(p_base.with_gamma(gamma), cfg.tol_s, cfg.classifier);
    bp.s_star = sep.s_star;
    bp.bisection_width = sep.width;
    bp.p_skin = p_skin(sep.s_star, rho);
  } catch (const Error& e) {
    bp.status = e.what();
    bp.p_skin = std::nan("");
  }
  return bp;
}

struct BasinScan {
  double gamma_c = 0.0;
  std::vector<BasinPoint> points;
  std::optional<JumpEstimate> jump;
  std::string jump_status = "ok";
};

/// Basin fraction over a sorted gamma grid.  Point failures are recorded in
/// BasinPoint::status and do not stop the scan.
inline BasinScan basin_scan(const ModelParams& p_base, const std::vector<double>& gammas, const SlopeDensity& rho,
                            const BasinConfig& cfg, bool with_jump = true) {
  if (!std::is_sorted(gammas.begin(), gammas.end()))
    throw Error(ErrorCode::InvalidParameter, "basin gamma grid must be sorted");
  BasinScan out;
  out.gamma_c = cfg.fold_gamma ? *cfg.fold_gamma : fold_by_continuation(p_base, 0.5, cfg.solver).gamma_c;
  BasinConfig c = cfg;
  c.fold_gamma = out.gamma_c;
  const int workers = resolve_workers(cfg.workers);
  out.points = parallel_map<BasinPoint>(gammas.size(), workers, [&](std::size_t i) {
    return basin_point(p_base, gammas[i], out.gamma_c, rho, c);
  });
  if (with_jump) {
    try {
      out.jump = jump_at_fold(p_base, rho, c);
    } catch (const Error& e) {
      out.jump_status = e.what();
    }
  }
  return out;
}

}  // namespace nhse
