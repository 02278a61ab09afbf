#include <gtest/gtest.h>

#include "nhse/averaging.hpp"
#include "nhse/poincare.hpp"
#include "nhse/sweep.hpp"

using namespace nhse;

namespace {

PhaseState on_outer_cycle(double gamma) {
  const auto p = ModelParams::reference(gamma);
  return {0.0, find_cycle(p, p.omega() * *branch_amplitudes(p).a_out).s_fixed};
}

}  // namespace

TEST(Sweep, Validation) {
  const auto p = ModelParams::reference(0.0);
  const double L = 50.0 * p.period();
  EXPECT_THROW(quasi_static_sweep(p, 0.5, -1.5, 5, L, {0.0, 1.0}), Error);
  EXPECT_THROW(quasi_static_sweep(p, 0.5, -1.5, 20, 5.0 * p.period(), {0.0, 1.0}), Error);
  EXPECT_THROW(quasi_static_sweep(p, 0.5, 0.5, 20, L, {0.0, 1.0}), Error);
}

TEST(Sweep, RelaxStepLabels) {
  SweepConfig cfg;
  const auto pe = ModelParams::reference(-0.5);
  const SweepRecord ext = relax_step(pe, on_outer_cycle(-0.5), 50.0 * pe.period(), cfg);
  EXPECT_EQ(ext.label, BranchLabel::OnExtendedBranch);
  EXPECT_NEAR(ext.amplitude_estimate / *branch_amplitudes(pe).a_out, 1.0, 0.01);
  const SweepRecord skin = relax_step(pe, {0.0, 3.0}, 50.0 * pe.period(), cfg);
  EXPECT_EQ(skin.label, BranchLabel::OnSkinBranch);
  EXPECT_LT(skin.tail_V_end, skin.tail_V_start);
  // A tiny state at gamma > 0 grows: V increases over the tail.
  const auto pu = ModelParams::reference(0.05);
  const SweepRecord grow = relax_step(pu, {0.0, 1e-8}, 20.0 * pu.period(), cfg);
  EXPECT_EQ(grow.label, BranchLabel::OnExtendedBranch);
  EXPECT_GT(grow.tail_V_end, grow.tail_V_start);
}

TEST(Sweep, WindowConfinedSweepsNeverSwitch) {
  const auto p = ModelParams::reference(0.0);
  const double L = 50.0 * p.period();
  const auto from_ext = quasi_static_sweep(p, -0.15, -0.85, 20, L, on_outer_cycle(-0.15));
  EXPECT_FALSE(from_ext.switch_gamma);
  EXPECT_EQ(from_ext.label_changes, 0);
  for (const auto& r : from_ext.records) {
    EXPECT_EQ(r.label, BranchLabel::OnExtendedBranch);
    const double a_out = *branch_amplitudes(p.with_gamma(r.gamma)).a_out;
    EXPECT_NEAR(r.amplitude_estimate / a_out, 1.0, 0.10);
  }
  const auto from_skin = quasi_static_sweep(p, -0.15, -0.85, 20, L, {0.0, 1e-3 * p.omega()});
  EXPECT_FALSE(from_skin.switch_gamma);
  for (const auto& r : from_skin.records) EXPECT_EQ(r.label, BranchLabel::OnSkinBranch);
}

TEST(Sweep, DeterministicForFixedSeed) {
  const auto p = ModelParams::reference(0.0);
  const double L = 20.0 * p.period();
  const auto a = quasi_static_sweep(p, -0.2, 0.2, 10, L, {0.0, 0.1});
  const auto b = quasi_static_sweep(p, -0.2, 0.2, 10, L, {0.0, 0.1});
  ASSERT_EQ(a.records.size(), 11u);
  for (std::size_t i = 0; i < a.records.size(); ++i) EXPECT_EQ(a.records[i].end_state, b.records[i].end_state);
  EXPECT_EQ(a.direction, SweepDirection::Up);
}

TEST(Sweep, HysteresisLoop) {
  const auto p = ModelParams::reference(0.0);
  const double L = 50.0 * p.period();
  const auto down = quasi_static_sweep(p, 0.5, -1.5, 200, L, on_outer_cycle(0.5));
  const auto up = quasi_static_sweep(p, -1.5, 0.5, 200, L, {0.0, 1e-3 * p.omega()});
  ASSERT_TRUE(down.switch_gamma);
  ASSERT_TRUE(up.switch_gamma);
  EXPECT_EQ(down.label_changes, 1);
  EXPECT_EQ(up.label_changes, 1);
  EXPECT_LT(*down.switch_gamma, *up.switch_gamma);
  EXPECT_NEAR(*up.switch_gamma - *down.switch_gamma, 1.0, 0.2);
}
