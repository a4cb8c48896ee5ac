#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "stscale/montecarlo.hpp"

using namespace stscale;

namespace {

LevySpec brownian(double drift = 0.0, double sigma = 1.0, double kill = 0.0) {
  LevySpec s;
  s.drift = drift;
  s.sigma = sigma;
  s.kill_rate = kill;
  return s;
}

MCConfig config(std::size_t paths, double dt, std::uint64_t seed = 11) {
  MCConfig c;
  c.n_paths = paths;
  c.dt = dt;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Compare, Examples) {
  MCEstimate e;
  e.mean = 0.5;
  e.std_error = 0.01;
  EXPECT_TRUE(compare(e, 0.51, 0.0).pass);
  EXPECT_NEAR(compare(e, 0.51, 0.0).z, 1.0, 1e-9);
  e.std_error = 0.001;
  EXPECT_FALSE(compare(e, 0.51, 0.0).pass);
  EXPECT_TRUE(compare(e, 0.51, 0.01).pass);
  e.std_error = 0.0;
  EXPECT_TRUE(compare(e, 0.5, 0.0).pass);
  EXPECT_EQ(compare(e, 0.5, 0.0).z, 0.0);
}

TEST(ExitFunctional, StartAtUpperBarrierExitsImmediately) {
  const auto e = simulate_exit_functional(ModelSpec::generic(brownian()), 0.0, 1.0, 0.0, 1.0, config(100, 1e-4));
  EXPECT_EQ(e.mean, 1.0);
  EXPECT_EQ(e.std_error, 0.0);
  EXPECT_EQ(e.n, 100u);
}

TEST(ExitFunctional, HeavyDiscountKillsScores) {
  const auto e = simulate_exit_functional(ModelSpec::generic(brownian()), 1000.0, 0.5, 0.0, 1.0, config(2000, 1e-4));
  EXPECT_LT(e.mean, 0.01);
}

TEST(ExitFunctional, GamblersRuinAtCoarseStep) {
  const auto e = simulate_exit_functional(ModelSpec::generic(brownian()), 0.0, 0.3, 0.0, 1.0, config(20000, 1e-3));
  EXPECT_TRUE(compare(e, 0.3, 0.01).pass) << e.mean << " +- " << e.std_error;
}

TEST(ExitFunctional, KillingActsAsDiscount) {
  const auto killed = simulate_exit_functional(ModelSpec::generic(brownian(0.0, 1.0, 0.5)), 0.0, 0.5, 0.0, 1.0,
                                               config(5000, 1e-3));
  const auto discounted = simulate_exit_functional(ModelSpec::generic(brownian()), 0.5, 0.5, 0.0, 1.0,
                                                   config(5000, 1e-3));
  EXPECT_EQ(killed.mean, discounted.mean);
}

TEST(ExitFunctional, SameResultForAnyWorkerCount) {
  const auto m = ModelSpec::pssmp(brownian(0.0, 1.0, 0.2), 2.0);
  MCConfig c = config(3000, 1e-3, 99);
  const auto ref = simulate_exit_functional(m, 0.3, 1.0, 0.5, 2.0, c);
  for (unsigned w : {2u, 3u, 8u}) {
    c.workers = w;
    const auto e = simulate_exit_functional(m, 0.3, 1.0, 0.5, 2.0, c);
    EXPECT_EQ(e.mean, ref.mean);
    EXPECT_EQ(e.std_error, ref.std_error);
    EXPECT_EQ(e.n, ref.n);
  }
}

TEST(ExitFunctional, SeedChangesStream) {
  const auto m = ModelSpec::generic(brownian());
  const auto a = simulate_exit_functional(m, 0.2, 0.5, 0.0, 1.0, config(500, 1e-3, 1));
  const auto b = simulate_exit_functional(m, 0.2, 0.5, 0.0, 1.0, config(500, 1e-3, 2));
  EXPECT_NE(a.mean, b.mean);
}

TEST(ExitFunctional, ConfigErrors) {
  const auto m = ModelSpec::generic(brownian());
  auto run = [&](MCConfig c) { return simulate_exit_functional(m, 0.0, 0.5, 0.0, 1.0, c); };
  MCConfig c = config(10, 1e-3);
  c.n_paths = 0;
  EXPECT_THROW(run(c), ConfigError);
  c = config(10, 0.0);
  EXPECT_THROW(run(c), ConfigError);
  c = config(10, 1e-3);
  c.max_steps = 0;
  EXPECT_THROW(run(c), ConfigError);
  c = config(10, 1e-3);
  c.workers = 0;
  EXPECT_THROW(run(c), ConfigError);
  LevySpec jumpy = brownian();
  jumpy.jump_rate = 200.0;
  EXPECT_THROW(simulate_exit_functional(ModelSpec::generic(jumpy), 0.0, 0.5, 0.0, 1.0, config(10, 1e-3)), ConfigError);
  EXPECT_NO_THROW(simulate_exit_functional(ModelSpec::generic(jumpy), 0.0, 0.5, 0.0, 1.0, config(10, 5e-4)));
}

TEST(ExitFunctional, DomainErrors) {
  const auto m = ModelSpec::generic(brownian());
  EXPECT_THROW(simulate_exit_functional(m, 0.0, 0.0, 0.0, 1.0, config(10, 1e-3)), DomainError);
  EXPECT_THROW(simulate_exit_functional(m, 0.0, 1.5, 0.0, 1.0, config(10, 1e-3)), DomainError);
  EXPECT_THROW(simulate_exit_functional(m, -1.0, 0.5, 0.0, 1.0, config(10, 1e-3)), DomainError);
  EXPECT_THROW(simulate_exit_functional(ModelSpec::pssmp(brownian(), 1.0), 0.0, 1.0, -1.0, 2.0, config(10, 1e-3)),
               DomainError);
}

TEST(ExitFunctional, StepCapTruncatesAndFlags) {
  MCConfig c = config(200, 1e-4);
  c.max_steps = 50;
  const auto e = simulate_exit_functional(ModelSpec::generic(brownian()), 0.0, 0.5, 0.0, 1.0, c);
  EXPECT_EQ(e.truncated_paths, 200u);
  EXPECT_EQ(e.n, 0u);
  EXPECT_TRUE(std::isnan(e.mean));
  EXPECT_TRUE(e.unreliable);

  c.max_steps = 2000;  // about a tenth of paths survive 0.2 time units
  const auto partial = simulate_exit_functional(ModelSpec::generic(brownian()), 0.0, 0.5, 0.0, 1.0, c);
  EXPECT_GT(partial.truncated_paths, 0u);
  EXPECT_EQ(partial.n + partial.truncated_paths, 200u);
  EXPECT_TRUE(partial.unreliable);
}

TEST(ExitFunctional, BranchingPathsTruncatedNearAbsorption) {
  // eps = 10 sigma sqrt(dt) = 1 puts the whole window inside (-eps, 0)
  const auto e =
      simulate_exit_functional(ModelSpec::csbp(brownian()), 0.5, -0.5, -0.9, -0.1, config(50, 1e-2));
  EXPECT_EQ(e.truncated_paths + e.n, 50u);
  EXPECT_GT(e.truncated_paths, 0u);
  EXPECT_TRUE(e.unreliable);
}

TEST(PathProperties, ScoreInUnitIntervalAndCreepingUpward) {
  const auto m = ModelSpec::pssmp(brownian(0.1, 1.0, 0.2), 2.0);
  const double lo = std::log(0.5), hi = std::log(2.0);
  const MCConfig c = config(1, 1e-3);
  const double step_sd = std::sqrt(c.dt);
  for (std::uint64_t i = 0; i < 2000; ++i) {
    const auto o = simulate_path(m, 0.3, 0.0, lo, hi, c, i);
    ASSERT_FALSE(o.truncated);
    EXPECT_GE(o.score, 0.0);
    EXPECT_LE(o.score, 1.0);
    if (o.upward) {
      EXPECT_GE(o.exit_x, hi);
      EXPECT_LE(o.exit_x - hi, 6.0 * step_sd);
    } else {
      EXPECT_EQ(o.score, 0.0);
      EXPECT_LE(o.exit_x, lo);
      EXPECT_GE(lo - o.exit_x, 0.0);
      EXPECT_LE(lo - o.exit_x, 6.0 * step_sd);
    }
  }
}

TEST(PathProperties, JumpsOvershootDownwardOnly) {
  LevySpec s = brownian(1.0);
  s.jump_rate = 5.0;
  s.jump_decay = 2.0;
  const auto m = ModelSpec::generic(s);
  const MCConfig c = config(1, 1e-3);
  const double step_sd = std::sqrt(c.dt);
  bool big_overshoot = false;
  for (std::uint64_t i = 0; i < 2000; ++i) {
    const auto o = simulate_path(m, 0.0, 0.5, 0.0, 1.0, c, i);
    if (o.upward)
      EXPECT_LE(o.exit_x - 1.0, 6.0 * step_sd);
    else
      big_overshoot |= -o.exit_x > 6.0 * step_sd;
  }
  EXPECT_TRUE(big_overshoot);
}

TEST(PathProperties, BridgeOffRecordsStepEndpoint) {
  MCConfig c = config(1, 1e-2);
  c.bridge_correction = false;
  const auto m = ModelSpec::generic(brownian());
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto o = simulate_path(m, 0.0, 0.5, 0.0, 1.0, c, i);
    EXPECT_TRUE(o.exit_x >= 1.0 || o.exit_x <= 0.0);
  }
}

TEST(OccupationFunctional, ZeroIntegrandGivesZero) {
  const auto e = simulate_occupation_functional(ModelSpec::generic(brownian()), 0.0, 0.5, 0.0, 1.0,
                                                [](double) { return 0.0; }, config(200, 1e-3));
  EXPECT_EQ(e.mean, 0.0);
  EXPECT_EQ(e.std_error, 0.0);
}

TEST(OccupationFunctional, BrownianExpectedExitTimeAtCoarseStep) {
  const auto e = simulate_occupation_functional(ModelSpec::generic(brownian()), 0.0, 0.5, 0.0, 1.0,
                                                [](double) { return 1.0; }, config(20000, 1e-3));
  EXPECT_TRUE(compare(e, 0.25, 0.01).pass) << e.mean << " +- " << e.std_error;
}

TEST(OccupationFunctional, TimeChangedClockWeightsOccupation) {
  // Y-time spent is int h_T(X) dt; with f = 1 and q = 0 it equals the clock at exit.
  const auto m = ModelSpec::pssmp(brownian(), 2.0);
  const MCConfig c = config(1, 1e-3);
  const std::function<double(double)> one = [](double) { return 1.0; };
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto o = simulate_path(m, 0.0, 0.0, std::log(0.5), std::log(2.0), c, i, &one);
    EXPECT_NEAR(o.occupation, o.clock, 1e-12 * o.clock);
  }
}

TEST(ExitFunctionalProperties, HalvingStepMovesTowardExactValue) {
  // Bridge-corrected Euler is exact in law for Brownian first passage, so the
  // remaining bias comes from discounting at the end of the crossing step.
  const auto m = ModelSpec::generic(brownian());
  const double exact = std::sinh(0.5) / std::sinh(1.0);
  std::vector<double> bias;
  for (double dt : {0.08, 0.04, 0.02}) {
    double sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed)
      sum += simulate_exit_functional(m, 0.5, 0.5, 0.0, 1.0, config(100000, dt, seed)).mean;
    bias.push_back(std::abs(sum / 10.0 - exact));
  }
  EXPECT_GT(bias[0], bias[1]);
  EXPECT_GT(bias[1], bias[2]);
}
