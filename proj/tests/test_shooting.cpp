#include <gtest/gtest.h>

#include "nhse/shooting.hpp"

using namespace nhse;

TEST(AmplitudeWindow, StationaryAndSettling) {
  AmplitudeWindow w(8);
  for (int i = 0; i < 8; ++i) w.push(5.0 + 0.01 * std::exp(-i));
  EXPECT_TRUE(w.full());
  EXPECT_TRUE(w.stationary(0.02));
  EXPECT_LT(w.settling_ratio(), 1.0);
  EXPECT_TRUE(w.locked(0.02));
  EXPECT_FALSE(w.shadowing(0.02));
}

TEST(AmplitudeWindow, DepartingOrbitIsShadowing) {
  AmplitudeWindow w(8);
  for (int i = 0; i < 8; ++i) w.push(2.0 + 1e-5 * std::exp(i));
  EXPECT_TRUE(w.stationary(0.02));
  EXPECT_GT(w.settling_ratio(), 1.0);
  EXPECT_TRUE(w.shadowing(0.02));
  EXPECT_FALSE(w.locked(0.02));
}

TEST(AmplitudeWindow, KeepsLastValues) {
  AmplitudeWindow w(4);
  for (int i = 0; i < 10; ++i) w.push(i);
  EXPECT_EQ(w.values(), (std::vector<double>{6, 7, 8, 9}));
  EXPECT_DOUBLE_EQ(w.mean(), 7.5);
  EXPECT_DOUBLE_EQ(w.spread(), 3.0);
  EXPECT_FALSE(w.stationary(0.02));
}

TEST(Ipr, HarmonicOracle) {
  // psi = (s/omega) sin(omega x): over whole periods IPR = 3 / (2 L).
  const auto p = ModelParams::linear_limit(0.0, 8.0);
  const double L = 40.0 * p.period();
  const Trajectory t = shoot(p, 3.0, L, IntegratorConfig{});
  EXPECT_NEAR(ipr(t, L) * L, 1.5, 1e-8);
  EXPECT_NEAR(fractal_dimension(ipr(t, L), L), -std::log(1.5 / L) / std::log(L), 1e-9);
}

TEST(Ipr, ScaleInvariant) {
  const auto p = ModelParams::linear_limit(-0.1, 8.0);
  const Trajectory a = shoot(p, 1.0, 30.0, IntegratorConfig{});
  const Trajectory b = shoot(p, 7.0, 30.0, IntegratorConfig{});
  EXPECT_NEAR(ipr(a, 30.0), ipr(b, 30.0), 1e-9 * ipr(a, 30.0));
}

TEST(Ipr, Errors) {
  const auto p = ModelParams::reference(-0.5);
  const Trajectory zero = shoot(p, 0.0, 10.0, IntegratorConfig{});
  EXPECT_THROW(ipr(zero, 10.0), Error);
  const Trajectory t = shoot(p, 3.0, 10.0, IntegratorConfig{});
  EXPECT_THROW(ipr(t, 20.0), Error);
  EXPECT_THROW(fractal_dimension(0.0, 10.0), Error);
  EXPECT_THROW(fractal_dimension(0.1, 1.0), Error);
}

TEST(AsymptoticAmplitude, LimitCycleAndDecay) {
  const auto p = ModelParams::reference(0.2);
  const Trajectory t = shoot(p, 27.6446, 40.0, IntegratorConfig{});
  const auto est = asymptotic_amplitude(p, t);
  ASSERT_TRUE(est);
  EXPECT_NEAR(est->mean, 5.78349, 1e-3);
  const auto q = ModelParams::reference(-2.0);
  const Trajectory d = shoot(q, 3.0, 60.0, IntegratorConfig{});
  EXPECT_FALSE(asymptotic_amplitude(q, d));
  const Trajectory short_run = shoot(p, 3.0, 0.3, IntegratorConfig{});
  EXPECT_THROW(asymptotic_amplitude(p, short_run), Error);
}

struct Golden {
  double gamma;
  double s;
  Outcome expected;
};

class ClassifierGolden : public ::testing::TestWithParam<Golden> {};

TEST_P(ClassifierGolden, Outcome) {
  const Golden g = GetParam();
  const ShotResult r = classify(ModelParams::reference(g.gamma), g.s, ClassifierConfig{});
  EXPECT_EQ(r.outcome, g.expected) << "gamma " << g.gamma << " s " << g.s;
  EXPECT_GT(r.ipr, 0.0);
  EXPECT_FALSE(r.d2_history.empty());
  if (r.outcome == Outcome::Extended) {
    ASSERT_TRUE(r.asymptotic_amplitude);
    EXPECT_GT(*r.asymptotic_amplitude, 1.0);
  }
}

INSTANTIATE_TEST_SUITE_P(Shots, ClassifierGolden,
                         ::testing::Values(Golden{-1.2, 6.0, Outcome::Skin}, Golden{-0.5, 7.0, Outcome::Skin},
                                           Golden{-0.5, 10.0, Outcome::Extended},
                                           Golden{0.2, 2.0, Outcome::Extended},
                                           Golden{-0.5, 8.69755, Outcome::Skin},
                                           Golden{-0.5, 8.69756, Outcome::Extended}));

TEST(Classifier, ZeroSlopeIsTrivialSkin) {
  const ShotResult r = classify(ModelParams::reference(0.3), 0.0, ClassifierConfig{});
  EXPECT_EQ(r.outcome, Outcome::Skin);
  EXPECT_EQ(r.rule, DecisionRule::Trivial);
}

TEST(Classifier, FractalDimensionAloneSeparatesOutcomes) {
  ClassifierConfig c;
  c.early_exit = false;
  const ShotResult skin = classify(ModelParams::reference(-0.5), 7.0, c);
  const ShotResult ext = classify(ModelParams::reference(-0.5), 10.0, c);
  EXPECT_EQ(skin.rule, DecisionRule::FractalDimension);
  EXPECT_EQ(ext.rule, DecisionRule::FractalDimension);
  EXPECT_EQ(skin.outcome, Outcome::Skin);
  EXPECT_EQ(ext.outcome, Outcome::Extended);
  EXPECT_LT(skin.d2, 0.5);
  EXPECT_GT(ext.d2, 0.5);
}

TEST(Classifier, EarlyExitAgreesWithFractalDimension) {
  ClassifierConfig slow;
  slow.early_exit = false;
  for (double s : {1.0, 5.0, 8.0, 9.5, 15.0, 25.0}) {
    const auto p = ModelParams::reference(-0.5);
    EXPECT_EQ(classify(p, s, ClassifierConfig{}).outcome, classify(p, s, slow).outcome) << s;
  }
}

TEST(Classifier, NearSeparatrixTransitIsLong) {
  const auto p = ModelParams::reference(-0.5);
  const double far = classify(p, 7.0, ClassifierConfig{}).transit_length;
  EXPECT_GT(classify(p, 8.69755, ClassifierConfig{}).transit_length, 3.0 * far);
}

TEST(Classifier, ConfigValidation) {
  const auto p = ModelParams::reference(-0.5);
  ClassifierConfig c;
  c.d2_threshold = 1.5;
  EXPECT_THROW(classify(p, 1.0, c), Error);
  c = ClassifierConfig{};
  c.base_length = 1.0;
  EXPECT_THROW(classify(p, 1.0, c), Error);
}
