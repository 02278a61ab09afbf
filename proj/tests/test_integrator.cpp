#include <gtest/gtest.h>

#include <random>

#include "nhse/integrator.hpp"

using namespace nhse;

namespace {

// psi'' - 2 g psi' + 2E psi = 0, psi(0) = 0, psi'(0) = s.
PhaseState damped_linear(double g, double E, double s, double x) {
  const double W = std::sqrt(2.0 * E - g * g);
  const double e = std::exp(g * x);
  return {s / W * e * std::sin(W * x), s * e * (std::cos(W * x) + g / W * std::sin(W * x))};
}

}  // namespace

TEST(Integrator, HarmonicClosedForm) {
  const auto p = ModelParams::linear_limit(0.0, 8.0);
  const Trajectory t = integrate(p, {0.0, 3.0}, {0.0, 20.0}, IntegratorConfig{}, {});
  const PhaseState exact = damped_linear(0.0, 8.0, 3.0, 20.0);
  EXPECT_NEAR(t.final_state().psi, exact.psi, 1e-8);
  EXPECT_NEAR(t.final_state().v, exact.v, 1e-8);
}

TEST(Integrator, DampedLinearClosedForm) {
  for (double g : {-0.7, -0.2, 0.15}) {
    const auto p = ModelParams::linear_limit(g, 8.0);
    const Trajectory t = integrate(p, {0.0, 2.0}, {0.0, 10.0}, IntegratorConfig{}, {});
    const PhaseState exact = damped_linear(g, 8.0, 2.0, 10.0);
    const double scale = std::max(1.0, std::hypot(exact.psi, exact.v));
    EXPECT_NEAR(t.final_state().psi, exact.psi, 1e-8 * scale) << g;
    EXPECT_NEAR(t.final_state().v, exact.v, 1e-8 * scale) << g;
  }
}

TEST(Integrator, DenseOutputBetweenSteps) {
  const auto p = ModelParams::linear_limit(-0.3, 8.0);
  const Trajectory t = integrate(p, {0.0, 5.0}, {0.0, 6.0}, IntegratorConfig{}, {});
  ASSERT_TRUE(t.has_dense());
  for (std::size_t i = 0; i < t.segments.size(); ++i) {
    const auto& seg = t.segments[i];
    for (double f : {0.17, 0.5, 0.83}) {
      const double x = seg.x0 + f * seg.h;
      const PhaseState exact = damped_linear(-0.3, 8.0, 5.0, x);
      const PhaseState y = evaluate_dense(t, x);
      EXPECT_NEAR(y.psi, exact.psi, 1e-9);
      EXPECT_NEAR(y.v, exact.v, 1e-9);
    }
  }
}

TEST(Integrator, DenseOutputHitsStepEndpoints) {
  const auto p = ModelParams::reference(-0.5);
  const Trajectory t = integrate(p, {0.0, 9.0}, {0.0, 5.0}, IntegratorConfig{}, {});
  for (std::size_t i = 0; i < t.segments.size(); ++i) {
    const PhaseState y = t.segments[i].eval(t.segments[i].x1());
    EXPECT_NEAR(y.psi, t.states[i + 1].psi, 1e-12);
    EXPECT_NEAR(y.v, t.states[i + 1].v, 1e-12);
  }
}

TEST(Integrator, SectionCrossingsAtMultiplesOfPeriod) {
  const auto p = ModelParams::linear_limit(0.0, 8.0);
  const Trajectory t =
      integrate(p, {0.0, 1.0}, {0.0, 10.0 * p.period() + 0.1}, IntegratorConfig{}, {EventSpec::section_crossing()});
  const auto ev = t.events_of(EventKind::SectionCrossing);
  // The launch point has g = 0 and is not counted; crossings at k T.
  ASSERT_EQ(ev.size(), 10u);
  for (std::size_t k = 0; k < ev.size(); ++k) {
    EXPECT_NEAR(ev[k].x, (k + 1) * p.period(), 1e-10);
    EXPECT_GT(ev[k].state.v, 0.0);
  }
}

TEST(Integrator, TurningPointsAtQuarterPeriods) {
  const auto p = ModelParams::linear_limit(0.0, 8.0);
  const Trajectory t =
      integrate(p, {0.0, 4.0}, {0.0, 2.0 * p.period()}, IntegratorConfig{}, {EventSpec::turning_point()});
  const auto ev = t.events_of(EventKind::TurningPoint);
  ASSERT_EQ(ev.size(), 4u);
  for (std::size_t k = 0; k < ev.size(); ++k) {
    EXPECT_NEAR(ev[k].x, (2 * k + 1) * p.period() / 4.0, 1e-10);
    EXPECT_NEAR(std::abs(ev[k].state.psi), 1.0, 1e-10);
  }
}

TEST(Integrator, TerminalEventStopsRun) {
  const auto p = ModelParams::reference(-1.2);
  const Trajectory t = integrate(p, {0.0, 6.0}, {0.0, 200.0}, IntegratorConfig{}, {EventSpec::lyapunov_below(1e-6)});
  ASSERT_EQ(t.events.size(), 1u);
  EXPECT_DOUBLE_EQ(t.x_end, t.events[0].x);
  EXPECT_NEAR(lyapunov_value(p, t.final_state()), 1e-6, 1e-12);
  EXPECT_LT(t.x_end, 200.0);
}

TEST(Integrator, HermitianLimitConservesLyapunov) {
  const auto p = ModelParams::linear_limit(0.0, 8.0);
  IntegratorConfig cfg;
  cfg.store_dense = true;
  const PhaseState s0{0.0, 7.0};
  const Trajectory t = integrate(p, s0, {0.0, 100.0 * p.period()}, cfg, {});
  const double V0 = lyapunov_value(p, s0);
  for (const auto& s : t.states) EXPECT_NEAR(lyapunov_value(p, s) / V0, 1.0, 1e-8);
}

TEST(Integrator, LyapunovMonotoneAtStrongDamping) {
  const auto p = ModelParams::reference(-2.5);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  for (int n = 0; n < 10; ++n) {
    const Trajectory t = integrate(p, {u(rng), 4.0 * u(rng)}, {0.0, 10.0}, IntegratorConfig{}, {});
    for (std::size_t i = 1; i < t.states.size(); ++i)
      EXPECT_LE(lyapunov_value(p, t.states[i]), lyapunov_value(p, t.states[i - 1]) * (1.0 + 1e-12) + 1e-300);
  }
}

TEST(Integrator, TighterToleranceReducesError) {
  const auto p = ModelParams::linear_limit(-0.2, 8.0);
  const PhaseState exact = damped_linear(-0.2, 8.0, 2.0, 15.0);
  double prev = INFINITY;
  for (double tol : {1e-6, 1e-8, 1e-10}) {
    IntegratorConfig c;
    c.rel_tol = tol;
    c.abs_tol = tol * 1e-2;
    const PhaseState y = integrate(p, {0.0, 2.0}, {0.0, 15.0}, c, {}).final_state();
    const double err = std::hypot(y.psi - exact.psi, y.v - exact.v);
    EXPECT_LT(err, prev);
    prev = err;
  }
}

TEST(Integrator, Errors) {
  const auto p = ModelParams::reference(0.1);
  IntegratorConfig c;
  c.max_x = 10.0;
  EXPECT_THROW(integrate(p, {0.0, 1.0}, {0.0, 20.0}, c, {}), Error);
  const Trajectory t = integrate(p, {0.0, 1.0}, {0.0, 2.0}, IntegratorConfig{}, {});
  try {
    evaluate_dense(t, 3.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfSpan);
  }
  IntegratorConfig bad;
  bad.rel_tol = 0.0;
  EXPECT_THROW(bad.validate(), Error);
  bad.rel_tol = 1e-2;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Integrator, EventTriggerSemantics) {
  const EventSpec up = EventSpec::section_crossing();
  EXPECT_TRUE(up.triggers(-1.0, 0.0));
  EXPECT_TRUE(up.triggers(-1.0, 1.0));
  EXPECT_FALSE(up.triggers(0.0, 1.0));
  EXPECT_FALSE(up.triggers(1.0, -1.0));
  const EventSpec any = EventSpec::turning_point();
  EXPECT_TRUE(any.triggers(1.0, -1.0));
  EXPECT_TRUE(any.triggers(-1.0, 1.0));
}
