/* SPDX-License-Identifier: Apache-2.0 */
/* Copyright 2026 The beaconpark Authors */

/** Seeded synthetic RSSI capture standing in for a physical testbed, and
 * the three experiment drivers built on it (path loss calibration,
 * distance estimation, proximity identification).
 *
 * Every run is a pure function of its scenario: child seeds for grid
 * cells, repetitions and beacons are derived from the master seed with
 * child_seed(), so cells may be evaluated in any order.
 * @file */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "particle_filter.hpp"
#include "pathloss.hpp"
#include "proximity.hpp"
#include "random.hpp"

namespace beaconpark {

struct Scenario {
  PathLossModel model;
  double noise_sigma_db = 0.0;
  BeaconLayout layout;
  std::int64_t tx_interval_ms = 1000;
  double duration_s = 300.0;
  double drop_rate = 0.0;
  std::uint64_t seed = 1;

  void validate() const {
    model.validate();
    if (!(noise_sigma_db >= 0.0)) {
      throw std::invalid_argument("noise_sigma_db must be non-negative");
    }
    if (tx_interval_ms <= 0) {
      throw std::invalid_argument("tx_interval_ms must be positive");
    }
    if (!(duration_s > 0.0)) {
      throw std::invalid_argument("duration_s must be positive");
    }
    if (!(drop_rate >= 0.0 && drop_rate < 1.0)) {
      throw std::invalid_argument("drop_rate must lie in [0, 1)");
    }
  }

  std::size_t slot_count() const {
    return static_cast<std::size_t>(duration_s * 1000.0 / static_cast<double>(tx_interval_ms));
  }
};

enum class ExperimentKind { PathLoss, DistanceEstimation, ProximityIdentification };

struct GridCell {
  double x_m = 0.0;
  double y_m = 0.0;
};

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::DistanceEstimation;
  std::vector<double> distances;  ///< PathLoss / DistanceEstimation
  std::vector<GridCell> cells;    ///< ProximityIdentification
  std::size_t repetitions = 1;

  void validate() const {
    bool empty = kind == ExperimentKind::ProximityIdentification ? cells.empty() : distances.empty();
    if (empty) {
      throw std::invalid_argument("experiment grid is empty");
    }
    if (repetitions < 1) {
      throw std::invalid_argument("repetitions must be at least 1");
    }
  }
};

inline std::uint64_t spot_key(const SpotId& spot) {
  return (static_cast<std::uint64_t>(static_cast<unsigned char>(spot.lot())) << 40) ^ spot.number();
}

/** One advertisement per tx slot at the slot's timestamp, unless dropped.
 * RSSI is the model prediction plus N(0, sigma) shadowing. The stream seed
 * is derived from the scenario seed and the beacon id. */
inline std::vector<RssiSample> generate_stream(const Scenario& scenario, const SpotId& beacon,
                                               double true_distance_m) {
  scenario.validate();
  const double mean = predict_rssi(scenario.model, true_distance_m);
  Rng rng(child_seed(scenario.seed, spot_key(beacon)));
  std::normal_distribution<double> shadowing(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<RssiSample> out;
  const auto slots = scenario.slot_count();
  out.reserve(slots);
  for (std::size_t k = 0; k < slots; ++k) {
    const bool dropped = unit(rng) < scenario.drop_rate;
    const double noise = shadowing(rng) * scenario.noise_sigma_db;
    if (!dropped) {
      out.push_back({static_cast<std::int64_t>(k) * scenario.tx_interval_ms, beacon, mean + noise});
    }
  }
  return out;
}

/// Streams for every beacon of the scenario's layout at its true distance.
inline StreamSet generate_layout_streams(const Scenario& scenario) {
  StreamSet streams;
  for (const auto& b : scenario.layout.beacons) {
    streams[b.spot] = generate_stream(scenario, b.spot, scenario.layout.true_distance(b));
  }
  return streams;
}

/// Calibration capture: one stream per distance, pooled into a dataset.
inline CalibrationDataset simulate_calibration(const Scenario& scenario, const std::vector<double>& distances) {
  CalibrationDataset data;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    Scenario cell = scenario;
    cell.seed = child_seed(scenario.seed, i);
    CalibrationPoint point{distances[i], {}};
    for (const auto& s : generate_stream(cell, SpotId('A', 1), distances[i])) {
      point.samples.push_back(s.rssi);
    }
    data.points.push_back(std::move(point));
  }
  return data;
}

// ---------------------- Distance estimation ----------------------

struct DistanceRow {
  double distance_m = 0.0;
  double raw_error_m = 0.0;      ///< mean |whole-capture average distance - true|
  double filtered_error_m = 0.0; ///< mean |final filter mean - true|
  double mse = 0.0;              ///< of the final filter mean
  double std_m = 0.0;            ///< spread of the final filter mean over repetitions
};

struct DistanceResult {
  std::size_t particle_count = 0;
  std::vector<DistanceRow> rows;
  std::vector<double> raw_sample_errors;    ///< |single-sample distance - true|, every sample
  std::vector<double> filtered_step_errors; ///< |filter mean - true| after every update
};

inline DistanceResult run_distance_experiment(const Scenario& scenario, const std::vector<double>& distances,
                                              const FilterConfig& config, std::size_t repetitions = 1) {
  config.validate();
  if (repetitions < 1) {
    throw std::invalid_argument("repetitions must be at least 1");
  }
  DistanceResult result;
  result.particle_count = config.particle_count;
  for (std::size_t di = 0; di < distances.size(); ++di) {
    const double truth = distances[di];
    if (!(truth > 0.0 && truth <= config.state_max)) {
      throw std::invalid_argument("experiment distances must lie in (0, state_max]");
    }
    std::vector<double> finals;
    double raw_err_sum = 0.0;
    for (std::size_t rep = 0; rep < repetitions; ++rep) {
      const auto cell_seed = child_seed(scenario.seed, di * 1000003ULL + rep);
      Scenario cell = scenario;
      cell.seed = cell_seed;
      auto stream = generate_stream(cell, SpotId('A', 1), truth);
      if (stream.empty()) {
        throw std::runtime_error("every advertisement was dropped");
      }

      std::vector<double> rssis;
      rssis.reserve(stream.size());
      FilterConfig fc = config;
      fc.seed = child_seed(cell_seed, 0xF17E5ULL);
      ParticleFilter filter(fc);
      for (const auto& s : stream) {
        rssis.push_back(s.rssi);
        const double measured = estimate_distance(scenario.model, s.rssi);
        result.raw_sample_errors.push_back(std::abs(measured - truth));
        filter.update(measured);
        result.filtered_step_errors.push_back(std::abs(filter.estimate().mean - truth));
      }
      raw_err_sum += std::abs(estimate_distance(scenario.model, average_rssi(rssis)) - truth);
      finals.push_back(filter.estimate().mean);
    }

    const double reps = static_cast<double>(repetitions);
    DistanceRow row;
    row.distance_m = truth;
    row.raw_error_m = raw_err_sum / reps;
    const double final_mean = std::accumulate(finals.begin(), finals.end(), 0.0) / reps;
    for (double f : finals) {
      row.filtered_error_m += std::abs(f - truth) / reps;
      row.mse += (f - truth) * (f - truth) / reps;
      row.std_m += (f - final_mean) * (f - final_mean) / reps;
    }
    row.std_m = std::sqrt(row.std_m);
    result.rows.push_back(row);
  }
  return result;
}

/// Particle counts 200, 400, ..., 2000 over the same seed grid.
inline std::vector<std::size_t> particle_sweep_counts() {
  std::vector<std::size_t> counts;
  for (std::size_t n = 200; n <= 2000; n += 200) {
    counts.push_back(n);
  }
  return counts;
}

// ---------------------- Proximity identification ----------------------

struct ProximityCell {
  GridCell cell;
  PredictionTally raw;
  PredictionTally filtered;
};

inline void merge_into(PredictionTally& into, const PredictionTally& from) {
  into.truth = from.truth;
  for (const auto& [spot, count] : from.counts) {
    into.counts[spot] += count;
  }
  into.total += from.total;
}

/** Three-beacon row per cell (A at -X, B at 0, C at +X; listener Y in front
 * of B). Raw and filtered tallies are computed on the same streams. */
inline std::vector<ProximityCell> run_proximity_experiment(const Scenario& scenario,
                                                           const std::vector<GridCell>& cells,
                                                           const FilterConfig& config,
                                                           std::size_t repetitions = 1,
                                                           std::int64_t cadence_ms = 1000) {
  config.validate();
  std::vector<ProximityCell> out;
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const auto& cell = cells[ci];
    if (!(cell.x_m > 0.0) || !(cell.y_m >= 0.0)) {
      throw std::invalid_argument("proximity cells need X > 0 and Y >= 0");
    }
    ProximityCell result{cell, {}, {}};
    for (std::size_t rep = 0; rep < repetitions; ++rep) {
      Scenario run = scenario;
      run.seed = child_seed(scenario.seed, ci * 1000003ULL + rep);
      run.layout = BeaconLayout::three_spot_row(cell.x_m, cell.y_m);
      auto streams = generate_layout_streams(run);
      FilterConfig fc = config;
      fc.seed = child_seed(run.seed, 0xF17E5ULL);
      merge_into(result.raw, raw_baseline(run.layout, streams, run.model, cadence_ms));
      merge_into(result.filtered, run_identification(run.layout, streams, run.model, fc, cadence_ms));
    }
    out.push_back(std::move(result));
  }
  return out;
}

/** Shadowing sigma whose simulated raw-baseline accuracy at one grid cell
 * best matches @p target_accuracy (a fraction). Accuracy is averaged over
 * @p trials seeds per candidate sigma on the grid [lo, hi] in @p step. */
inline double fit_noise_sigma(const Scenario& scenario, GridCell cell, double target_accuracy,
                              std::size_t trials = 20, double lo = 0.0, double hi = 15.0,
                              double step = 0.05) {
  double best_sigma = lo;
  double best_gap = std::numeric_limits<double>::infinity();
  const auto steps = static_cast<std::size_t>(std::llround((hi - lo) / step));
  for (std::size_t k = 0; k <= steps; ++k) {
    const double sigma = lo + step * static_cast<double>(k);
    double acc = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      Scenario run = scenario;
      run.noise_sigma_db = sigma;
      run.seed = child_seed(scenario.seed, t);
      run.layout = BeaconLayout::three_spot_row(cell.x_m, cell.y_m);
      acc += raw_baseline(run.layout, generate_layout_streams(run), run.model).accuracy();
    }
    const double gap = std::abs(acc / static_cast<double>(trials) - target_accuracy);
    if (gap < best_gap) {
      best_gap = gap;
      best_sigma = sigma;
    }
  }
  return best_sigma;
}

} // namespace beaconpark
