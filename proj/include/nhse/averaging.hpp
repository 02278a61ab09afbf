/**
 * @file averaging.hpp
 * @brief First-order averaged amplitude equation r' = h(r) and its
 * closed-form consequences (cycle branches, fold threshold, Hopf scaling).
 */
#pragma once

#include <cmath>
#include <optional>

#include "nhse/model.hpp"

namespace nhse {

enum class Regime { SkinOnly, FoldPoint, Coexistence, HopfPoint, ExtendedOnly };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::SkinOnly: return "skin_only";
    case Regime::FoldPoint: return "fold_point";
    case Regime::Coexistence: return "coexistence";
    case Regime::HopfPoint: return "hopf_point";
    case Regime::ExtendedOnly: return "extended_only";
  }
  return "?";
}

struct TheoryPrediction {
  double gamma = 0.0;
  double gamma_c_th = 0.0;
  std::optional<double> a_in;
  std::optional<double> a_out;
  Regime regime = Regime::SkinOnly;
};

/// h(r) = r (gamma + a r^2 / 4 - b r^4 / 8).
inline double avg_drift(const ModelParams& p, double r) {
  const double r2 = r * r;
  return r * (p.gamma() + 0.25 * p.a() * r2 - 0.125 * p.b() * r2 * r2);
}

/// h'(r) = gamma + 3 a r^2 / 4 - 5 b r^4 / 8.
inline double avg_drift_derivative(const ModelParams& p, double r) {
  const double r2 = r * r;
  return p.gamma() + 0.75 * p.a() * r2 - 0.625 * p.b() * r2 * r2;
}

/// gamma_c = -a^2 / (8b): the averaged fold.
inline double gamma_c_theory(const ModelParams& p) { return -p.a() * p.a() / (8.0 * p.b()); }

/// Regime from gamma alone; the two boundaries are tagged rather than
/// assigned to either neighbour.
inline Regime classify_regime(double gamma, double gamma_c) {
  if (gamma < gamma_c) return Regime::SkinOnly;
  if (gamma == gamma_c) return Regime::FoldPoint;
  if (gamma < 0.0) return Regime::Coexistence;
  if (gamma == 0.0) return Regime::HopfPoint;
  return Regime::ExtendedOnly;
}

/// A_{in,out} = sqrt((a/b)(1 -/+ sqrt(1 + 8 b gamma / a^2))).
inline TheoryPrediction branch_amplitudes(const ModelParams& p) {
  TheoryPrediction t;
  t.gamma = p.gamma();
  t.gamma_c_th = gamma_c_theory(p);
  t.regime = classify_regime(p.gamma(), t.gamma_c_th);
  const double ratio = p.a() / p.b();
  const double disc = 1.0 + 8.0 * p.b() * p.gamma() / (p.a() * p.a());
  if (t.regime == Regime::SkinOnly || disc < 0.0) return t;
  const double root = std::sqrt(std::max(disc, 0.0));
  t.a_out = std::sqrt(ratio * (1.0 + root));
  if (p.gamma() < 0.0) {
    // 1 - sqrt(1 + x) = -x / (1 + sqrt(1 + x)) avoids cancellation near gamma -> 0-.
    const double x = 8.0 * p.b() * p.gamma() / (p.a() * p.a());
    t.a_in = std::sqrt(ratio * (-x / (1.0 + root)));
  }
  if (t.regime == Regime::FoldPoint) t.a_in = t.a_out;
  return t;
}

/// Leading-order inner amplitude near the subcritical Hopf: sqrt(-4 gamma / a).
inline double hopf_amplitude_scaling(const ModelParams& p, double gamma) {
  return std::sqrt(std::max(0.0, -4.0 * gamma / p.a()));
}

/// (|gamma| + a r^2 + b r^4) / omega; averaging is trusted where this is << 1.
inline double slow_amplitude_validity(const ModelParams& p, double r) {
  const double r2 = r * r;
  return (std::abs(p.gamma()) + p.a() * r2 + p.b() * r2 * r2) / p.omega();
}

/// Right side of the exact radial equation
/// r' = 2 r (gamma + a r^2 cos^2 - b r^4 cos^4) sin^2 in the (psi, v/omega) plane.
inline double exact_radial_rate(const ModelParams& p, double r, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double rc2 = r * r * c * c;
  return 2.0 * r * (p.gamma() + p.a() * rc2 - p.b() * rc2 * rc2) * s * s;
}

}  // namespace nhse
