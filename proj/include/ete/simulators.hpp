#pragma once

// Test systems with time-varying coupling: a pair of delay-coupled Lorenz
// oscillators and a pair of AR(1) processes with tanh-modulated coupling.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ete/ensemble.hpp"
#include "ete/error.hpp"
#include "ete/parallel.hpp"
#include "ete/rng.hpp"

namespace ete {

// Coupling strength as a function of the 1-based recorded sample index.
// Burn-in samples have indices <= 0.
using CouplingSchedule = std::function<double(Sample)>;

inline CouplingSchedule constant_coupling(double gamma) {
  return [gamma](Sample) { return gamma; };
}

// gamma on [first, last], zero elsewhere.
inline CouplingSchedule boxcar_coupling(double gamma, Sample first, Sample last) {
  return [=](Sample t) { return (t >= first && t <= last) ? gamma : 0.0; };
}

// ---------------------------------------------------------------------------
// Lorenz pair
// ---------------------------------------------------------------------------

// Two Lorenz systems X, Y; the V coordinate of Y is driven by
// gamma_xy(t) * V_X(t - delta)^2. Outputs are the V coordinates.
struct LorenzParams {
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;
  std::size_t delta_xy = 45;  // samples
  CouplingSchedule gamma_xy = boxcar_coupling(0.3, 1000, 2000);
  std::size_t n_repetitions = 150;
  std::size_t n_samples = 3000;
  double integration_dt = 0.01;
  std::size_t steps_per_sample = 10;  // one recorded sample per 0.1 time units
  std::size_t burn_in_steps = 10000;
  std::uint64_t seed = 0;
  bool coupling_enabled = true;  // false hard-zeroes the coupling term
};

namespace detail {

struct LorenzState {
  double u, v, w;
};

inline LorenzState lorenz_rhs(const LorenzState& s, double sigma, double rho, double beta, double forcing) {
  return {sigma * (s.v - s.u), s.u * (rho - s.w) - s.v + forcing, s.u * s.v - beta * s.w};
}

inline LorenzState axpy(const LorenzState& s, double h, const LorenzState& k) {
  return {s.u + h * k.u, s.v + h * k.v, s.w + h * k.w};
}

inline LorenzState random_lorenz_state(Rng& rng) {
  return {-15.0 + 30.0 * uniform01(rng), -20.0 + 40.0 * uniform01(rng), 5.0 + 35.0 * uniform01(rng)};
}

// One repetition; returns (V_X, V_Y) over n_samples recorded samples.
inline std::pair<std::vector<double>, std::vector<double>> simulate_lorenz_repetition(const LorenzParams& p,
                                                                                     std::size_t rep) {
  Rng rng = make_rng(p.seed, {stream::lorenz, rep});
  LorenzState x = random_lorenz_state(rng);
  LorenzState y = random_lorenz_state(rng);
  const double dt = p.integration_dt;
  const std::size_t delay_steps = p.delta_xy * p.steps_per_sample;
  const std::size_t total_steps = p.burn_in_steps + p.n_samples * p.steps_per_sample;

  // V_X at every integration grid point, needed at lag delay_steps (and the
  // half step after it, by linear interpolation).
  std::vector<double> vx_history;
  vx_history.reserve(total_steps + 1);
  vx_history.push_back(x.v);

  std::vector<double> out_x, out_y;
  out_x.reserve(p.n_samples);
  out_y.reserve(p.n_samples);

  auto delayed_vx = [&](std::size_t step, double frac) {
    // V_X at time (step + frac) * dt - delay; before the start it is the initial value.
    if (step < delay_steps) return vx_history.front();
    const std::size_t i = step - delay_steps;
    if (frac == 0.0) return vx_history[i];
    return (1.0 - frac) * vx_history[i] + frac * vx_history[i + 1];
  };

  for (std::size_t step = 0; step < total_steps; ++step) {
    // Recorded sample index this step belongs to (<= 0 during burn-in).
    const Sample sample =
        static_cast<Sample>(step / p.steps_per_sample) - static_cast<Sample>(p.burn_in_steps / p.steps_per_sample) + 1;
    const double gamma = p.coupling_enabled ? p.gamma_xy(sample) : 0.0;

    auto force = [&](double frac) {
      if (gamma == 0.0) return 0.0;
      const double d = delayed_vx(step, frac);
      return gamma * d * d;
    };
    const double f0 = force(0.0);
    const double fh = force(0.5);
    const double f1 = force(1.0);

    const LorenzState kx1 = lorenz_rhs(x, p.sigma, p.rho, p.beta, 0.0);
    const LorenzState kx2 = lorenz_rhs(axpy(x, 0.5 * dt, kx1), p.sigma, p.rho, p.beta, 0.0);
    const LorenzState kx3 = lorenz_rhs(axpy(x, 0.5 * dt, kx2), p.sigma, p.rho, p.beta, 0.0);
    const LorenzState kx4 = lorenz_rhs(axpy(x, dt, kx3), p.sigma, p.rho, p.beta, 0.0);

    const LorenzState ky1 = lorenz_rhs(y, p.sigma, p.rho, p.beta, f0);
    const LorenzState ky2 = lorenz_rhs(axpy(y, 0.5 * dt, ky1), p.sigma, p.rho, p.beta, fh);
    const LorenzState ky3 = lorenz_rhs(axpy(y, 0.5 * dt, ky2), p.sigma, p.rho, p.beta, fh);
    const LorenzState ky4 = lorenz_rhs(axpy(y, dt, ky3), p.sigma, p.rho, p.beta, f1);

    auto advance = [dt](LorenzState& s, const LorenzState& k1, const LorenzState& k2, const LorenzState& k3,
                        const LorenzState& k4) {
      s.u += dt / 6.0 * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u);
      s.v += dt / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
      s.w += dt / 6.0 * (k1.w + 2.0 * k2.w + 2.0 * k3.w + k4.w);
    };
    advance(x, kx1, kx2, kx3, kx4);
    advance(y, ky1, ky2, ky3, ky4);
    vx_history.push_back(x.v);

    if (!std::isfinite(x.u + x.v + x.w + y.u + y.v + y.w) || std::abs(y.v) > 1e8 || std::abs(x.v) > 1e8) {
      throw Error(ErrorCode::IntegrationDiverged,
                  "repetition " + std::to_string(rep) + " diverged at integration step " + std::to_string(step));
    }
    const std::size_t done = step + 1;
    if (done > p.burn_in_steps && (done - p.burn_in_steps) % p.steps_per_sample == 0) {
      out_x.push_back(x.v);
      out_y.push_back(y.v);
    }
  }
  return {std::move(out_x), std::move(out_y)};
}

}  // namespace detail

inline void check_lorenz_params(const LorenzParams& p) {
  if (p.delta_xy < 1) throw Error(ErrorCode::InvalidArgument, "coupling delay must be >= 1 sample");
  if (p.n_repetitions < 1 || p.n_samples < 1) throw Error(ErrorCode::InvalidArgument, "empty simulation");
  if (p.steps_per_sample < 1 || !(p.integration_dt > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "integration step must be positive");
  }
  if (p.burn_in_steps % p.steps_per_sample != 0) {
    throw Error(ErrorCode::InvalidArgument, "burn-in must be a whole number of samples");
  }
  if (!p.gamma_xy) throw Error(ErrorCode::InvalidArgument, "missing coupling schedule");
}

inline std::pair<EnsembleSeries, EnsembleSeries> simulate_lorenz_pair(const LorenzParams& params,
                                                                      Parallelism parallelism = Parallelism{}) {
  check_lorenz_params(params);
  const std::size_t reps = params.n_repetitions;
  const std::size_t n = params.n_samples;
  std::vector<double> xv(reps * n), yv(reps * n);
  parallel_for(reps, parallelism, [&](std::size_t r) {
    auto [vx, vy] = detail::simulate_lorenz_repetition(params, r);
    std::copy(vx.begin(), vx.end(), xv.begin() + static_cast<std::ptrdiff_t>(r * n));
    std::copy(vy.begin(), vy.end(), yv.begin() + static_cast<std::ptrdiff_t>(r * n));
  });
  const double rate = 1000.0;
  return {EnsembleSeries("X", reps, n, std::move(xv), rate), EnsembleSeries("Y", reps, n, std::move(yv), rate)};
}

// ---------------------------------------------------------------------------
// AR(1) pair
// ---------------------------------------------------------------------------

enum class ARScenario { unidirectional, two_step, bidirectional };

struct ARParams {
  double alpha_x = 0.75;
  double alpha_y = 0.35;
  double beta_yx = 0.0;
  double beta_xy = -0.35;
  std::size_t delta_yx = 20;
  std::size_t delta_xy = 10;
  ARScenario scenario = ARScenario::unidirectional;
  double slope = 0.05;
  double inflection_xy = 1000.0;
  double inflection_yx = 2000.0;
  double second_inflection_xy = 2000.0;  // two_step only
  std::size_t n_repetitions = 50;
  std::size_t n_samples = 3000;
  std::size_t burn_in = 500;
  double noise_sd = 1.0;
  double initial_x = 0.0;
  double initial_y = 0.0;
  std::uint64_t seed = 0;

  // Parameter rows of the three published coupling scenarios.
  static ARParams scenario_defaults(ARScenario s) {
    ARParams p;
    p.scenario = s;
    if (s == ARScenario::bidirectional) {
      p.alpha_x = 0.475;
      p.beta_yx = -0.4;
      p.delta_yx = 20;
    } else {
      p.delta_yx = 0;
    }
    return p;
  }

  double gamma_xy(double t) const {
    const double first = 0.5 * (1.0 + std::tanh(slope * (t - inflection_xy)));
    if (scenario == ARScenario::two_step) {
      const double second = 0.5 * (1.0 + std::tanh(slope * (t - second_inflection_xy)));
      return beta_xy * 0.5 * (first + second);
    }
    return beta_xy * first;
  }

  double gamma_yx(double t) const { return beta_yx * 0.5 * (1.0 + std::tanh(slope * (t - inflection_yx))); }
};

inline void check_ar_params(const ARParams& p) {
  if (!(std::abs(p.alpha_x) < 1.0) || !(std::abs(p.alpha_y) < 1.0)) {
    throw Error(ErrorCode::UnstableParameters, "AR coefficients must satisfy |alpha| < 1");
  }
  if (p.n_repetitions < 1 || p.n_samples < 1) throw Error(ErrorCode::InvalidArgument, "empty simulation");
  if (p.beta_xy != 0.0 && p.delta_xy < 1) throw Error(ErrorCode::InvalidArgument, "delta_xy must be >= 1");
  if (p.beta_yx != 0.0 && p.delta_yx < 1) throw Error(ErrorCode::InvalidArgument, "delta_yx must be >= 1");
}

inline std::pair<EnsembleSeries, EnsembleSeries> simulate_ar_pair(const ARParams& params,
                                                                  Parallelism parallelism = Parallelism{}) {
  check_ar_params(params);
  const std::size_t reps = params.n_repetitions;
  const std::size_t n = params.n_samples;
  const std::size_t total = params.burn_in + n;
  std::vector<double> xv(reps * n), yv(reps * n);
  parallel_for(reps, parallelism, [&](std::size_t r) {
    Rng rng = make_rng(params.seed, {stream::ar, r});
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> x(total, 0.0), y(total, 0.0);
    x[0] = params.initial_x;
    y[0] = params.initial_y;
    // Index i maps to recorded sample t = i - burn_in + 1.
    for (std::size_t i = 1; i < total; ++i) {
      const double t = static_cast<double>(i) - static_cast<double>(params.burn_in) + 1.0;
      const double ex = params.noise_sd * noise(rng);
      const double ey = params.noise_sd * noise(rng);
      const double y_lag = i >= params.delta_yx ? y[i - params.delta_yx] : 0.0;
      const double x_lag = i >= params.delta_xy ? x[i - params.delta_xy] : 0.0;
      x[i] = params.alpha_x * x[i - 1] + params.gamma_yx(t) * y_lag + ex;
      y[i] = params.alpha_y * y[i - 1] + params.gamma_xy(t) * x_lag + ey;
      if (!std::isfinite(x[i]) || !std::isfinite(y[i]) || std::abs(x[i]) > 1e6 || std::abs(y[i]) > 1e6) {
        throw Error(ErrorCode::UnstableParameters,
                    "repetition " + std::to_string(r) + " diverged at sample " + std::to_string(static_cast<long>(t)));
      }
    }
    std::copy(x.begin() + static_cast<std::ptrdiff_t>(params.burn_in), x.end(),
              xv.begin() + static_cast<std::ptrdiff_t>(r * n));
    std::copy(y.begin() + static_cast<std::ptrdiff_t>(params.burn_in), y.end(),
              yv.begin() + static_cast<std::ptrdiff_t>(r * n));
  });
  return {EnsembleSeries("X", reps, n, std::move(xv)), EnsembleSeries("Y", reps, n, std::move(yv))};
}

}  // namespace ete
