/* SPDX-License-Identifier: Apache-2.0 */
/* Copyright 2026 The beaconpark Authors */

/** One-dimensional bootstrap particle filter over beacon distance.
 *
 * The state is static (no motion model), so each step is: weight every
 * particle by a Gaussian gain on its distance to the measurement,
 * renormalize, and resample multinomially once the effective particle
 * count drops below beta * N.
 * @file */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "random.hpp"

namespace beaconpark {

/// How the reported spread is centred; see estimate().
enum class StdForm {
  Conventional, ///< about the weighted mean of the particles
  Literal,      ///< about the arithmetic mean of the weights
};

struct FilterConfig {
  std::size_t particle_count = 1000;
  double beta = 0.5;
  double measurement_noise = 1.2; ///< m
  double state_min = 0.0;         ///< m
  double state_max = 4.0;         ///< m
  std::uint64_t seed = 1;
  StdForm std_form = StdForm::Conventional;

  void validate() const {
    if (particle_count < 2) {
      throw std::invalid_argument("particle_count must be at least 2");
    }
    if (!(beta > 0.0 && beta <= 1.0)) {
      throw std::invalid_argument("beta must lie in (0, 1]");
    }
    if (!(measurement_noise > 0.0)) {
      throw std::invalid_argument("measurement_noise must be positive");
    }
    if (!(state_min < state_max)) {
      throw std::invalid_argument("state_min must be below state_max");
    }
  }
};

struct FilterState {
  std::vector<double> particles; ///< m
  std::vector<double> weights;
};

struct DistanceEstimate {
  double mean = 0.0;
  double std = 0.0;
  double effective_particles = 0.0;
};

inline double effective_particles(std::span<const double> weights) {
  double sum_sq = 0.0;
  for (double w : weights) {
    sum_sq += w * w;
  }
  return 1.0 / sum_sq;
}

/** Weighted mean and spread of the particle cloud.
 *
 * spread = sqrt( sum w (p - mu)^2 / ((N' - 1) / N' * sum w) ) where N' is
 * the number of non-zero weights. Conventional form uses the weighted mean
 * for mu; Literal uses the mean of the weights. */
inline DistanceEstimate estimate(const FilterState& state, StdForm form = StdForm::Conventional) {
  const auto& p = state.particles;
  const auto& w = state.weights;
  double w_sum = 0.0;
  double wp_sum = 0.0;
  std::size_t nonzero = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    w_sum += w[i];
    wp_sum += w[i] * p[i];
    nonzero += w[i] > 0.0 ? 1 : 0;
  }
  DistanceEstimate est;
  est.mean = wp_sum / w_sum;
  est.effective_particles = effective_particles(w);

  const double mu = form == StdForm::Conventional ? est.mean : w_sum / static_cast<double>(w.size());
  if (nonzero > 1) {
    double spread = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      spread += w[i] * (p[i] - mu) * (p[i] - mu);
    }
    const double n_prime = static_cast<double>(nonzero);
    est.std = std::sqrt(spread / ((n_prime - 1.0) / n_prime * w_sum));
  }
  return est;
}

/** Multinomial resampling by inverse-CDF lookup of sorted uniforms.
 *
 * Replaces the particle set with N draws from the categorical distribution
 * given by the weights and resets every weight to 1/N. */
inline void resample(FilterState& state, Rng& rng) {
  const std::size_t n = state.particles.size();
  std::vector<double> cumulative(n);
  std::partial_sum(state.weights.begin(), state.weights.end(), cumulative.begin());
  cumulative.back() = 1.0;

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> draws(n);
  for (auto& u : draws) {
    u = unit(rng);
  }
  std::sort(draws.begin(), draws.end());

  std::vector<double> next(n);
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (j + 1 < n && cumulative[j] <= draws[i]) {
      ++j;
    }
    next[i] = state.particles[j];
  }
  state.particles = std::move(next);
  std::fill(state.weights.begin(), state.weights.end(), 1.0 / static_cast<double>(n));
}

class ParticleFilter {
public:
  struct StepResult {
    double measurement = 0.0; ///< after clamping to the state range
    bool resampled = false;
    bool degenerate = false;  ///< every gain underflowed; state was reinitialized
  };

  explicit ParticleFilter(const FilterConfig& config) : config_(config), rng_(config.seed) {
    config_.validate();
    reinitialize();
  }

  const FilterConfig& config() const noexcept { return config_; }
  const FilterState& state() const noexcept { return state_; }

  /// Uniform particles on [state_min, state_max], equal weights.
  void reinitialize() {
    const std::size_t n = config_.particle_count;
    std::uniform_real_distribution<double> spread(config_.state_min, config_.state_max);
    state_.particles.resize(n);
    for (auto& p : state_.particles) {
      p = spread(rng_);
    }
    state_.weights.assign(n, 1.0 / static_cast<double>(n));
  }

  /// Weight update for one distance measurement, then conditional resample.
  StepResult update(double measurement_m) {
    if (!std::isfinite(measurement_m)) {
      throw std::invalid_argument("measurement must be finite");
    }
    StepResult result;
    result.measurement = std::clamp(measurement_m, config_.state_min, config_.state_max);

    const double two_var = 2.0 * config_.measurement_noise * config_.measurement_noise;
    double total = 0.0;
    for (std::size_t j = 0; j < state_.particles.size(); ++j) {
      const double diff = state_.particles[j] - result.measurement;
      state_.weights[j] *= std::exp(-(diff * diff) / two_var);
      total += state_.weights[j];
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
      reinitialize();
      result.degenerate = true;
      return result;
    }
    for (auto& w : state_.weights) {
      w /= total;
    }
    result.resampled = maybe_resample();
    return result;
  }

  bool maybe_resample() {
    const double n = static_cast<double>(state_.particles.size());
    if (effective_particles(state_.weights) < n * config_.beta) {
      resample(state_, rng_);
      return true;
    }
    return false;
  }

  DistanceEstimate estimate() const { return beaconpark::estimate(state_, config_.std_form); }

private:
  FilterConfig config_;
  Rng rng_;
  FilterState state_;
};

} // namespace beaconpark
