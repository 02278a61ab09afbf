#include <gtest/gtest.h>

#include "nhse/quadrature.hpp"

using namespace nhse;

TEST(Quadrature, ElementaryTrigAverages) {
  auto avg = [](auto f) { return adaptive_lobatto(f, 0.0, 2.0 * M_PI, 1e-14) / (2.0 * M_PI); };
  EXPECT_NEAR(avg([](double t) { return std::sin(t) * std::sin(t); }), 0.5, 1e-12);
  EXPECT_NEAR(avg([](double t) { return std::pow(std::cos(t) * std::sin(t), 2); }), 1.0 / 8.0, 1e-12);
  EXPECT_NEAR(avg([](double t) { return std::pow(std::cos(t), 4) * std::pow(std::sin(t), 2); }), 1.0 / 16.0, 1e-12);
}

TEST(Quadrature, PolynomialsAndExponential) {
  EXPECT_NEAR(adaptive_lobatto([](double x) { return x * x * x; }, -1.0, 2.0), 15.0 / 4.0, 1e-12);
  EXPECT_NEAR(adaptive_lobatto([](double x) { return std::exp(x); }, 0.0, 3.0), std::exp(3.0) - 1.0, 1e-9);
  EXPECT_EQ(adaptive_lobatto([](double x) { return x; }, 1.0, 1.0), 0.0);
  EXPECT_NEAR(adaptive_lobatto([](double x) { return x; }, 2.0, 0.0), -2.0, 1e-14);
}

TEST(Quadrature, ZeroIntegralWithScaleHint) {
  const double v = adaptive_lobatto([](double x) { return std::sin(x); }, -3.0, 3.0, 1e-12, 1.0);
  EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Quadrature, KinkedIntegrand) {
  const double v = adaptive_lobatto([](double x) { return std::abs(x - 0.3); }, 0.0, 1.0, 1e-12);
  EXPECT_NEAR(v, 0.5 * 0.09 + 0.5 * 0.49, 1e-10);
}
