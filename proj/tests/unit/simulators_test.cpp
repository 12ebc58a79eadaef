#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ete/simulators.hpp"

using namespace ete;

namespace {

double rel_rms(const EnsembleSeries& a, const EnsembleSeries& b, std::size_t horizon) {
  double diff = 0.0, ref = 0.0;
  for (std::size_t r = 0; r < a.n_repetitions(); ++r) {
    for (std::size_t c = 0; c < horizon; ++c) {
      const double e = a.value(r, c) - b.value(r, c);
      diff += e * e;
      ref += a.value(r, c) * a.value(r, c);
    }
  }
  return std::sqrt(diff / ref);
}

LorenzParams small_lorenz() {
  LorenzParams p;
  p.n_repetitions = 3;
  p.n_samples = 400;
  p.burn_in_steps = 2000;
  p.seed = 11;
  return p;
}

}  // namespace

TEST(ARSchedules, InflectionIsHalfStrength) {
  const ARParams p = ARParams::scenario_defaults(ARScenario::unidirectional);
  EXPECT_EQ(p.gamma_xy(1000.0), 0.5 * p.beta_xy);
  const ARParams b = ARParams::scenario_defaults(ARScenario::bidirectional);
  EXPECT_EQ(b.gamma_yx(2000.0), 0.5 * b.beta_yx);
}

TEST(ARSchedules, Limits) {
  const ARParams p = ARParams::scenario_defaults(ARScenario::unidirectional);
  EXPECT_NEAR(p.gamma_xy(-1e5), 0.0, 1e-15);
  EXPECT_NEAR(p.gamma_xy(1e5), p.beta_xy, 1e-15);
}

TEST(ARSchedules, TwoStepPlateau) {
  const ARParams p = ARParams::scenario_defaults(ARScenario::two_step);
  EXPECT_LT(std::abs(p.gamma_xy(1500.0) - 0.5 * p.beta_xy), 1e-4 * std::abs(p.beta_xy));
  EXPECT_NEAR(p.gamma_xy(5000.0), p.beta_xy, 1e-12);
}

TEST(ARSchedules, TableRows) {
  const ARParams u = ARParams::scenario_defaults(ARScenario::unidirectional);
  EXPECT_EQ(u.alpha_x, 0.75);
  EXPECT_EQ(u.alpha_y, 0.35);
  EXPECT_EQ(u.beta_yx, 0.0);
  EXPECT_EQ(u.beta_xy, -0.35);
  EXPECT_EQ(u.delta_xy, 10u);
  const ARParams b = ARParams::scenario_defaults(ARScenario::bidirectional);
  EXPECT_EQ(b.alpha_x, 0.475);
  EXPECT_EQ(b.beta_yx, -0.4);
  EXPECT_EQ(b.delta_yx, 20u);
}

TEST(SimulateAR, GeometricRecursionWithoutNoise) {
  ARParams p;
  p.beta_xy = 0.0;
  p.noise_sd = 0.0;
  p.burn_in = 0;
  p.initial_x = 1.0;
  p.n_repetitions = 2;
  p.n_samples = 6;
  const auto [x, y] = simulate_ar_pair(p);
  const double expected[] = {1.0, 0.75, 0.5625, 0.421875};
  for (std::size_t r = 0; r < 2; ++r) {
    for (Sample t = 1; t <= 4; ++t) EXPECT_EQ(x.at(r, t), expected[t - 1]);
    for (Sample t = 1; t <= 6; ++t) EXPECT_EQ(y.at(r, t), 0.0);
  }
}

TEST(SimulateAR, SeededDeterminism) {
  ARParams p = ARParams::scenario_defaults(ARScenario::bidirectional);
  p.n_repetitions = 8;
  p.n_samples = 500;
  p.seed = 21;
  const auto a = simulate_ar_pair(p, Parallelism{1});
  const auto b = simulate_ar_pair(p, Parallelism{4});
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
  p.seed = 22;
  EXPECT_FALSE(simulate_ar_pair(p).first == a.first);
}

TEST(SimulateAR, UncoupledCrossCorrelationIsSmall) {
  ARParams p;
  p.beta_xy = 0.0;
  p.beta_yx = 0.0;
  p.n_repetitions = 40;
  p.n_samples = 1000;
  p.seed = 5;
  const auto [x, y] = simulate_ar_pair(p);
  const std::size_t reps = p.n_repetitions, n = p.n_samples;
  auto moments = [&](const EnsembleSeries& s) {
    double m = 0, v = 0;
    for (double a : s.values()) m += a;
    m /= static_cast<double>(reps * n);
    for (double a : s.values()) v += (a - m) * (a - m);
    return std::pair{m, std::sqrt(v / static_cast<double>(reps * n))};
  };
  const auto [mx, sx] = moments(x);
  const auto [my, sy] = moments(y);
  const double bound = 4.0 / std::sqrt(static_cast<double>(reps * n));
  for (int lag = -30; lag <= 30; ++lag) {
    double acc = 0;
    std::size_t cnt = 0;
    for (std::size_t r = 0; r < reps; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        const long c2 = static_cast<long>(c) + lag;
        if (c2 < 0 || c2 >= static_cast<long>(n)) continue;
        acc += (x.value(r, c) - mx) * (y.value(r, static_cast<std::size_t>(c2)) - my);
        ++cnt;
      }
    }
    EXPECT_LT(std::abs(acc / static_cast<double>(cnt) / (sx * sy)), bound) << lag;
  }
}

TEST(SimulateAR, UnstableCoefficients) {
  ARParams p;
  p.alpha_x = 1.0;
  try {
    simulate_ar_pair(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnstableParameters);
  }
  p.alpha_x = 0.9;
  p.alpha_y = 0.9;
  p.beta_xy = 5.0;
  p.beta_yx = 5.0;
  p.delta_yx = 1;
  p.delta_xy = 1;
  p.inflection_yx = 0.0;
  p.inflection_xy = 0.0;
  try {
    simulate_ar_pair(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnstableParameters);
  }
}

TEST(SimulateLorenz, SeededDeterminismAndShape) {
  const auto p = small_lorenz();
  const auto a = simulate_lorenz_pair(p, Parallelism{1});
  const auto b = simulate_lorenz_pair(p, Parallelism{3});
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
  EXPECT_EQ(a.first.n_repetitions(), 3u);
  EXPECT_EQ(a.first.n_samples(), 400u);
  EXPECT_FALSE(validate_ensemble(a.second).has_value());
}

TEST(SimulateLorenz, ZeroCouplingMatchesDisabledCoupling) {
  auto p = small_lorenz();
  p.gamma_xy = constant_coupling(0.0);
  auto q = small_lorenz();
  q.coupling_enabled = false;
  EXPECT_EQ(simulate_lorenz_pair(p).second, simulate_lorenz_pair(q).second);
}

TEST(SimulateLorenz, CouplingOnlyAffectsTarget) {
  auto p = small_lorenz();
  auto q = small_lorenz();
  q.coupling_enabled = false;
  const auto a = simulate_lorenz_pair(p);
  const auto b = simulate_lorenz_pair(q);
  EXPECT_EQ(a.first, b.first);
  // Coupling starts at sample 1000, beyond this run.
  EXPECT_EQ(a.second, b.second);
  p.gamma_xy = boxcar_coupling(0.3, 100, 400);
  EXPECT_FALSE(simulate_lorenz_pair(p).second == b.second);
}

TEST(SimulateLorenz, StepSizeConvergence) {
  // Compared from the initial condition; chaotic divergence dominates after
  // a few Lorenz time units.
  LorenzParams a;
  a.n_repetitions = 4;
  a.n_samples = 500;
  a.steps_per_sample = 1;
  a.burn_in_steps = 0;
  a.seed = 3;
  LorenzParams b = a;
  b.integration_dt = a.integration_dt / 2;
  b.steps_per_sample = 2;
  const auto [xa, ya] = simulate_lorenz_pair(a);
  const auto [xb, yb] = simulate_lorenz_pair(b);
  EXPECT_LT(rel_rms(xa, xb, 500), 0.01);
  EXPECT_LT(rel_rms(ya, yb, 500), 0.01);

  LorenzParams c = a;
  c.steps_per_sample = 10;
  c.n_samples = 50;
  LorenzParams d = c;
  d.integration_dt = c.integration_dt / 2;
  d.steps_per_sample = 20;
  EXPECT_LT(rel_rms(simulate_lorenz_pair(c).second, simulate_lorenz_pair(d).second, 50), 0.01);
}

TEST(SimulateLorenz, InvalidParameters) {
  auto p = small_lorenz();
  p.burn_in_steps = 15;
  EXPECT_THROW(simulate_lorenz_pair(p), Error);
  p = small_lorenz();
  p.delta_xy = 0;
  EXPECT_THROW(simulate_lorenz_pair(p), Error);
}
