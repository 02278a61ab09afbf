/**
 * @file model.hpp
 * @brief Saturating nonreciprocal oscillator: parameters, planar flow and the
 * analytic auxiliaries (linearization, Lyapunov energy, Lienard primitive).
 *
 * The stationary wave equation psi'' - 2 F(psi^2) psi' + 2E psi = 0 is read as
 * a planar flow in x for the state (psi, v = psi').  F(z) = gamma + a z - b z^2.
 */
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <sstream>
#include <string>

#include "nhse/errors.hpp"

namespace nhse {

/// Physical parameter tuple.  a, b, E are strictly positive; gamma is free.
class ModelParams {
 public:
  /// Validating constructor.  Throws Error(InvalidParameter) naming the
  /// violated constraint.
  ModelParams(double gamma, double a, double b, double E)
      : gamma_(gamma), a_(a), b_(b), E_(E) {
    auto reject = [](const std::string& msg) { throw Error(ErrorCode::InvalidParameter, msg); };
    if (!std::isfinite(gamma)) reject("gamma must be finite");
    if (!(a > 0.0) || !std::isfinite(a)) reject("a must be > 0 (got " + num(a) + ")");
    if (!(b > 0.0) || !std::isfinite(b)) reject("b must be > 0 (got " + num(b) + ")");
    if (!(E > 0.0) || !std::isfinite(E)) reject("E must be > 0 (got " + num(E) + ")");
  }

  /// Parameters used for every figure: a = 1/2, b = 1/32, E = 8.
  static ModelParams reference(double gamma) { return ModelParams(gamma, 0.5, 1.0 / 32.0, 8.0); }

  /// Linear (Hatano-Nelson) and Hermitian limits with a = b = 0.  These are
  /// outside the saturating family and exist for the harmonic and linear
  /// consistency checks only.
  static ModelParams linear_limit(double gamma, double E) {
    ModelParams p(gamma, 1.0, 1.0, E);
    p.a_ = 0.0;
    p.b_ = 0.0;
    return p;
  }

  double gamma() const noexcept { return gamma_; }
  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  double E() const noexcept { return E_; }

  /// Natural (Hermitian) frequency sqrt(2E).
  double omega() const noexcept { return std::sqrt(2.0 * E_); }

  /// Harmonic period 2 pi / omega.
  double period() const noexcept { return 2.0 * M_PI / omega(); }

  ModelParams with_gamma(double gamma) const {
    ModelParams p = *this;
    if (!std::isfinite(gamma)) throw Error(ErrorCode::InvalidParameter, "gamma must be finite");
    p.gamma_ = gamma;
    return p;
  }

  bool operator==(const ModelParams&) const = default;

 private:
  static std::string num(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
  }

  double gamma_;
  double a_;
  double b_;
  double E_;
};

struct PhaseState {
  double psi = 0.0;
  double v = 0.0;

  bool finite() const noexcept { return std::isfinite(psi) && std::isfinite(v); }
  double norm() const noexcept { return std::hypot(psi, v); }

  friend PhaseState operator+(PhaseState l, PhaseState r) { return {l.psi + r.psi, l.v + r.v}; }
  friend PhaseState operator-(PhaseState l, PhaseState r) { return {l.psi - r.psi, l.v - r.v}; }
  friend PhaseState operator*(double k, PhaseState s) { return {k * s.psi, k * s.v}; }
  bool operator==(const PhaseState&) const = default;
};

using Matrix2 = std::array<std::array<double, 2>, 2>;

struct OriginSpectrum {
  std::complex<double> lambda_plus;
  std::complex<double> lambda_minus;
};

/// F(z) = gamma + a z - b z^2 with z = psi^2.
inline double nonreciprocity(const ModelParams& p, double z) {
  return p.gamma() + p.a() * z - p.b() * z * z;
}

/// d/dx (psi, v) = (v, 2 F(psi^2) v - 2 E psi).
inline PhaseState flow_rhs(const ModelParams& p, const PhaseState& s) {
  return {s.v, 2.0 * nonreciprocity(p, s.psi * s.psi) * s.v - 2.0 * p.E() * s.psi};
}

inline Matrix2 origin_jacobian(const ModelParams& p) {
  return {{{0.0, 1.0}, {-2.0 * p.E(), 2.0 * p.gamma()}}};
}

/// lambda = gamma +/- sqrt(gamma^2 - 2E), always returned as a complex pair.
inline OriginSpectrum origin_eigenvalues(const ModelParams& p) {
  const std::complex<double> disc(p.gamma() * p.gamma() - 2.0 * p.E(), 0.0);
  const std::complex<double> root = std::sqrt(disc);
  return {p.gamma() + root, p.gamma() - root};
}

/// V = v^2 / 2 + E psi^2.
inline double lyapunov_value(const ModelParams& p, const PhaseState& s) {
  return 0.5 * s.v * s.v + p.E() * s.psi * s.psi;
}

/// dV/dx along the flow: 2 F(psi^2) v^2.
inline double lyapunov_rate(const ModelParams& p, const PhaseState& s) {
  return 2.0 * nonreciprocity(p, s.psi * s.psi) * s.v * s.v;
}

/// F_L(psi) = -2 (gamma psi + a psi^3 / 3 - b psi^5 / 5), the primitive of the
/// Lienard damping f(psi) = -2 F(psi^2).
inline double lienard_primitive(const ModelParams& p, double psi) {
  const double p2 = psi * psi;
  return -2.0 * psi * (p.gamma() + p.a() * p2 / 3.0 - p.b() * p2 * p2 / 5.0);
}

/// Location of the maximum of F, z = a / (2b).
inline double nonreciprocity_peak(const ModelParams& p) { return p.a() / (2.0 * p.b()); }

/// Smallest positive root of F on z >= 0, or +inf when F < 0 on all of
/// [0, a/2b] (no sign change) and 0 when F(0) >= 0.
inline double first_positive_root(const ModelParams& p) {
  if (p.gamma() >= 0.0) return 0.0;
  if (p.a() == 0.0 && p.b() == 0.0) return INFINITY;
  const double disc = p.a() * p.a() + 4.0 * p.b() * p.gamma();
  if (disc < 0.0) return INFINITY;
  // Numerically stable smaller root of b z^2 - a z - gamma = 0.
  return -2.0 * p.gamma() / (p.a() + std::sqrt(disc));
}

/// Sublevel V <= trapping_level(p) contains only points with F(psi^2) <= 0,
/// so V is nonincreasing there and LaSalle forces convergence to the origin.
/// Zero when gamma >= 0 (no such region).
inline double trapping_level(const ModelParams& p) {
  return p.E() * first_positive_root(p);
}

}  // namespace nhse
