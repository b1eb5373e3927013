/* SPDX-License-Identifier: Apache-2.0 */
/* Copyright 2026 The beaconpark Authors */

#include <gtest/gtest.h>

#include <beaconpark/simulator.hpp>

#include <cmath>
#include <numeric>

using namespace beaconpark;

namespace {

Scenario indoor(double sigma, std::uint64_t seed = 1) {
  Scenario s;
  s.model = PathLossModel::indoor();
  s.noise_sigma_db = sigma;
  s.layout = BeaconLayout::three_spot_row(1.0, 0.5);
  s.duration_s = 60.0;
  s.seed = seed;
  return s;
}

} // namespace

TEST(Simulator, NoiselessStreamEqualsPrediction) {
  auto s = indoor(0.0);
  auto stream = generate_stream(s, SpotId('A', 1), 2.0);
  ASSERT_EQ(stream.size(), 60u);
  for (std::size_t k = 0; k < stream.size(); ++k) {
    EXPECT_EQ(stream[k].timestamp_ms, static_cast<std::int64_t>(k) * 1000);
    EXPECT_DOUBLE_EQ(stream[k].rssi, predict_rssi(s.model, 2.0));
  }
}

TEST(Simulator, NoiseMomentsMatchSigma) {
  auto s = indoor(4.0);
  s.duration_s = 20000.0;
  auto stream = generate_stream(s, SpotId('B', 1), 1.5);
  const double mu = predict_rssi(s.model, 1.5);
  double sum = 0.0, sq = 0.0;
  for (const auto& r : stream) {
    sum += r.rssi - mu;
    sq += (r.rssi - mu) * (r.rssi - mu);
  }
  const double n = static_cast<double>(stream.size());
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  EXPECT_NEAR(mean, 0.0, 4.0 * 4.0 / std::sqrt(n));
  EXPECT_NEAR(sd, 4.0, 0.1);
}

TEST(Simulator, DropRateThinsTheStream) {
  auto s = indoor(1.0);
  s.duration_s = 10000.0;
  s.drop_rate = 0.25;
  auto stream = generate_stream(s, SpotId('A', 1), 1.0);
  EXPECT_NEAR(static_cast<double>(stream.size()) / 10000.0, 0.75, 0.02);
}

TEST(Simulator, DeterministicPerSeed) {
  auto a = generate_layout_streams(indoor(3.0, 42));
  auto b = generate_layout_streams(indoor(3.0, 42));
  auto c = generate_layout_streams(indoor(3.0, 43));
  ASSERT_EQ(a.size(), 3u);
  for (const auto& [spot, samples] : a) {
    ASSERT_EQ(samples.size(), b.at(spot).size());
    for (std::size_t k = 0; k < samples.size(); ++k) EXPECT_EQ(samples[k].rssi, b.at(spot)[k].rssi);
  }
  EXPECT_NE(a.at(SpotId('A', 1))[0].rssi, c.at(SpotId('A', 1))[0].rssi);
}

TEST(Simulator, BeaconsGetIndependentStreams) {
  auto streams = generate_layout_streams(indoor(3.0));
  const double offset = predict_rssi(PathLossModel::indoor(), std::hypot(1.0, 0.5));
  // A1 and C1 are at the same distance; their noise must still differ.
  EXPECT_NE(streams.at(SpotId('A', 1))[0].rssi - offset, streams.at(SpotId('C', 1))[0].rssi - offset);
}

TEST(Simulator, LayoutStreamsUseLayoutDistances) {
  auto s = indoor(0.0);
  auto streams = generate_layout_streams(s);
  for (const auto& b : s.layout.beacons) {
    EXPECT_NEAR(estimate_distance(s.model, streams.at(b.spot).front().rssi), s.layout.true_distance(b), 1e-9);
  }
}

TEST(Simulator, ScenarioValidation) {
  auto s = indoor(1.0);
  s.noise_sigma_db = -1.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = indoor(1.0);
  s.drop_rate = 1.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = indoor(1.0);
  s.tx_interval_ms = 0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(Simulator, CalibrationRoundTrip) {
  auto s = indoor(0.0);
  s.duration_s = 5.0;
  std::vector<double> distances;
  for (int i = 1; i <= 20; ++i) distances.push_back(0.2 * i);
  auto fit = fit_model(simulate_calibration(s, distances));
  EXPECT_NEAR(fit.model.n, 2.424, 1e-6);
  EXPECT_NEAR(fit.model.c, -65.24, 1e-6);
}

TEST(DistanceExperiment, NoiselessErrorsAreSmall) {
  auto s = indoor(0.0);
  auto r = run_distance_experiment(s, {0.5, 1.0, 2.0, 3.0}, FilterConfig{}, 2);
  ASSERT_EQ(r.rows.size(), 4u);
  for (const auto& row : r.rows) {
    EXPECT_LT(row.raw_error_m, 1e-9);
    EXPECT_LT(row.filtered_error_m, 0.05) << row.distance_m;
    EXPECT_GE(row.mse, row.filtered_error_m * row.filtered_error_m - 1e-12);
  }
  EXPECT_EQ(r.raw_sample_errors.size(), 4u * 2u * 60u);
  EXPECT_EQ(r.filtered_step_errors.size(), r.raw_sample_errors.size());
}

TEST(DistanceExperiment, RejectsOutOfRangeDistances) {
  EXPECT_THROW(run_distance_experiment(indoor(0.0), {5.0}, FilterConfig{}), std::invalid_argument);
  EXPECT_THROW(run_distance_experiment(indoor(0.0), {0.0}, FilterConfig{}), std::invalid_argument);
  EXPECT_THROW(run_distance_experiment(indoor(0.0), {1.0}, FilterConfig{}, 0), std::invalid_argument);
}

TEST(DistanceExperiment, SweepCounts) {
  auto counts = particle_sweep_counts();
  ASSERT_EQ(counts.size(), 10u);
  EXPECT_EQ(counts.front(), 200u);
  EXPECT_EQ(counts.back(), 2000u);
}

TEST(ProximityExperiment, NoiselessIsPerfect) {
  auto r = run_proximity_experiment(indoor(0.0), {{1.0, 0.5}, {2.0, 2.5}}, FilterConfig{});
  ASSERT_EQ(r.size(), 2u);
  for (const auto& cell : r) {
    EXPECT_DOUBLE_EQ(cell.raw.accuracy(), 1.0);
    EXPECT_GE(cell.filtered.accuracy(), 0.9);
    EXPECT_EQ(cell.raw.total, 60u);
  }
}

TEST(ProximityExperiment, RepetitionsMergeTallies) {
  auto r = run_proximity_experiment(indoor(2.0), {{1.0, 0.5}}, FilterConfig{}, 3);
  EXPECT_EQ(r[0].raw.total, 180u);
  EXPECT_EQ(r[0].filtered.total, 180u);
  EXPECT_EQ(r[0].raw.truth, SpotId('B', 1));
}

TEST(SimulatorProperty, AccuracyDoesNotImproveWithMoreNoise) {
  // Averaged over seeds, raw accuracy is non-increasing in sigma.
  double prev = 1.1;
  for (double sigma : {0.0, 2.0, 4.0, 6.0, 8.0}) {
    double acc = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      auto s = indoor(sigma, child_seed(5, seed));
      acc += raw_baseline(s.layout, generate_layout_streams(s), s.model).accuracy();
    }
    acc /= 10.0;
    EXPECT_LE(acc, prev + 0.02) << sigma;
    prev = acc;
  }
}

TEST(SimulatorProperty, SigmaFitIsMonotoneInTarget) {
  auto s = indoor(0.0);
  const double tight = fit_noise_sigma(s, {1.0, 0.5}, 0.95, 5, 0.0, 8.0, 0.5);
  const double loose = fit_noise_sigma(s, {1.0, 0.5}, 0.70, 5, 0.0, 8.0, 0.5);
  EXPECT_LT(tight, loose);
}
