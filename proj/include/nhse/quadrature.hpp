/**
 * @file quadrature.hpp
 * @brief Adaptive Gauss-Lobatto quadrature with Kronrod extension
 * (Gander & Gautschi, "Adaptive quadrature - revisited", BIT 40, 2000).
 */
#pragma once

#include <cmath>
#include <limits>

#include "nhse/errors.hpp"

namespace nhse {

namespace detail {

template <class F>
double lobatto_step(const F& f, double a, double b, double fa, double fb, double is, int depth, int& budget) {
  constexpr double alpha = 0.816496580927726;  // sqrt(2/3)
  constexpr double beta = 0.447213595499958;   // 1/sqrt(5)
  const double h = 0.5 * (b - a);
  const double m = 0.5 * (a + b);
  const double mll = m - alpha * h;
  const double ml = m - beta * h;
  const double mr = m + beta * h;
  const double mrr = m + alpha * h;
  const double fmll = f(mll);
  const double fml = f(ml);
  const double fm = f(m);
  const double fmr = f(mr);
  const double fmrr = f(mrr);
  const double i2 = h / 6.0 * (fa + fb + 5.0 * (fml + fmr));
  const double i1 = h / 1470.0 * (77.0 * (fa + fb) + 432.0 * (fmll + fmrr) + 625.0 * (fml + fmr) + 672.0 * fm);
  if (--budget < 0) throw Error(ErrorCode::QuadratureFailure, "adaptive Lobatto evaluation budget exhausted");
  if (is + (i1 - i2) == is || mll <= a || b <= mrr || depth > 60) {
    return i1;
  }
  return lobatto_step(f, a, mll, fa, fmll, is, depth + 1, budget) +
         lobatto_step(f, mll, ml, fmll, fml, is, depth + 1, budget) +
         lobatto_step(f, ml, m, fml, fm, is, depth + 1, budget) +
         lobatto_step(f, m, mr, fm, fmr, is, depth + 1, budget) +
         lobatto_step(f, mr, mrr, fmr, fmrr, is, depth + 1, budget) +
         lobatto_step(f, mrr, b, fmrr, fb, is, depth + 1, budget);
}

}  // namespace detail

/// Integral of f over [a, b] to (roughly) relative tolerance `tol` measured
/// against a coarse estimate of the whole integral.  `scale_hint` guards
/// integrals whose true value is near zero: the termination test uses
/// max(|I_coarse|, scale_hint).
template <class F>
double adaptive_lobatto(const F& f, double a, double b, double tol = 1e-10, double scale_hint = 0.0) {
  if (a == b) return 0.0;
  if (a > b) return -adaptive_lobatto(f, b, a, tol, scale_hint);
  constexpr double alpha = 0.816496580927726;
  constexpr double beta = 0.447213595499958;
  constexpr double x1 = 0.942882415695480;
  constexpr double x2 = 0.641853342345781;
  constexpr double x3 = 0.236383199662150;
  const double m = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double xs[13] = {a,          m - x1 * h, m - alpha * h, m - x2 * h, m - beta * h, m - x3 * h, m,
                         m + x3 * h, m + beta * h, m + x2 * h, m + alpha * h, m + x1 * h, b};
  double y[13];
  for (int i = 0; i < 13; ++i) y[i] = f(xs[i]);
  const double i2 = h / 6.0 * (y[0] + y[12] + 5.0 * (y[4] + y[8]));
  const double i1 = h / 1470.0 * (77.0 * (y[0] + y[12]) + 432.0 * (y[2] + y[10]) + 625.0 * (y[4] + y[8]) +
                                  672.0 * y[6]);
  double is = h * (0.0158271919734802 * (y[0] + y[12]) + 0.0942738402188500 * (y[1] + y[11]) +
                   0.155071987336585 * (y[2] + y[10]) + 0.188821573960182 * (y[3] + y[9]) +
                   0.199773405226859 * (y[4] + y[8]) + 0.224926465333340 * (y[5] + y[7]) +
                   0.242611071901408 * y[6]);
  double s = is >= 0.0 ? 1.0 : -1.0;
  double erri1 = std::abs(i1 - is);
  double erri2 = std::abs(i2 - is);
  double r = (erri2 != 0.0) ? erri1 / erri2 : 1.0;
  double t = tol;
  if (r > 0.0 && r < 1.0) t /= r;
  double mag = std::max(std::abs(is), scale_hint);
  if (mag == 0.0) mag = b - a;
  is = s * mag * t / std::numeric_limits<double>::epsilon();
  int budget = 2'000'000;
  return detail::lobatto_step(f, a, b, y[0], y[12], is, 0, budget);
}

}  // namespace nhse
