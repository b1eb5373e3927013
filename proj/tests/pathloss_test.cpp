/* SPDX-License-Identifier: Apache-2.0 */
/* Copyright 2026 The beaconpark Authors */

#include <gtest/gtest.h>

#include <beaconpark/pathloss.hpp>
#include <beaconpark/random.hpp>

#include <cmath>
#include <random>

using namespace beaconpark;

namespace {

CalibrationDataset noiseless(const PathLossModel& model, double step, double hi) {
  CalibrationDataset data;
  for (int i = 1; i * step <= hi + 1e-9; ++i) {
    const double d = i * step;
    data.points.push_back({d, {predict_rssi(model, d)}});
  }
  return data;
}

} // namespace

TEST(PathLoss, PredictMatchesReferenceValue) {
  // Reference computed offline with numpy.
  EXPECT_NEAR(predict_rssi(PathLossModel::indoor(), 2.0), -72.5369670948949, 1e-12);
  EXPECT_DOUBLE_EQ(predict_rssi(PathLossModel::indoor(), 1.0), -65.24);
}

TEST(PathLoss, EstimateAtReferenceDistance) {
  EXPECT_NEAR(estimate_distance(PathLossModel::outdoor(), -88.78), 1.0, 1e-12);
  EXPECT_NEAR(estimate_distance({2.0, -60.0, 1.0}, -80.0), 10.0, 1e-12);
}

TEST(PathLoss, RejectsBadDomain) {
  EXPECT_THROW(predict_rssi(PathLossModel::indoor(), 0.0), DomainError);
  EXPECT_THROW(predict_rssi(PathLossModel::indoor(), -1.0), DomainError);
  EXPECT_THROW(average_rssi({}), DomainError);
  EXPECT_THROW((PathLossModel{0.0, -60.0, 1.0}).validate(), DomainError);
}

TEST(PathLoss, AverageRssi) {
  const std::vector<double> xs{-60.0, -70.0, -80.0};
  EXPECT_DOUBLE_EQ(average_rssi(xs), -70.0);
}

TEST(PathLoss, FallbackUsesAdvertisedPower) {
  auto m = fallback_model(-59);
  EXPECT_DOUBLE_EQ(m.c, -59.0);
  EXPECT_DOUBLE_EQ(m.n, 2.0);
}

TEST(PathLossProperty, InverseRoundTrip) {
  Rng rng(3);
  std::uniform_real_distribution<double> n(0.5, 6.0), c(-110.0, -30.0), d(0.05, 100.0);
  for (int i = 0; i < 5000; ++i) {
    PathLossModel model{n(rng), c(rng), 1.0};
    const double dist = d(rng);
    EXPECT_NEAR(estimate_distance(model, predict_rssi(model, dist)) / dist, 1.0, 1e-9);
  }
}

TEST(PathLossProperty, PredictIsMonotoneDecreasing) {
  const auto m = PathLossModel::indoor();
  double prev = predict_rssi(m, 0.01);
  for (double d = 0.02; d < 50.0; d *= 1.3) {
    const double now = predict_rssi(m, d);
    EXPECT_LT(now, prev);
    prev = now;
  }
}

TEST(Fit, TwoPointsGiveExactLineAndUnboundedIntervals) {
  CalibrationDataset data;
  data.points.push_back({1.0, {-65.0}});
  data.points.push_back({10.0, {-89.0}});
  auto fit = fit_model(data);
  EXPECT_NEAR(fit.model.n, 2.4, 1e-12);
  EXPECT_NEAR(fit.model.c, -65.0, 1e-12);
  EXPECT_TRUE(std::isinf(fit.n_ci95.low) && fit.n_ci95.low < 0);
  EXPECT_TRUE(std::isinf(fit.c_ci95.high) && fit.c_ci95.high > 0);
}

TEST(Fit, MatchesIndependentRegression) {
  // Expected values from scipy.stats.linregress and t.ppf(0.975, 2).
  CalibrationDataset data;
  const double d[] = {1, 2, 3, 4};
  const double y[] = {-65, -72, -77, -80};
  for (int i = 0; i < 4; ++i) data.points.push_back({d[i], {y[i] + 1.0, y[i] - 1.0}});
  auto fit = fit_model(data);
  EXPECT_NEAR(fit.model.n, 2.5094936481404906, 1e-10);
  EXPECT_NEAR(fit.model.c, -64.84092163958157, 1e-10);
  EXPECT_NEAR(fit.n_ci95.high - fit.model.n, 0.3145432470533315, 1e-9);
  EXPECT_NEAR(fit.model.c - fit.c_ci95.low, 1.2976004869640496, 1e-9);
  EXPECT_NEAR(fit.residual_std, 0.23375967036503487, 1e-10);
}

TEST(Fit, RecoversBothPublishedModels) {
  for (auto model : {PathLossModel::indoor(), PathLossModel::outdoor()}) {
    auto fit = fit_model(noiseless(model, 0.2, 4.0));
    EXPECT_NEAR(fit.model.n, model.n, 1e-6);
    EXPECT_NEAR(fit.model.c, model.c, 1e-6);
    EXPECT_NEAR(fit.residual_std, 0.0, 1e-9);
  }
}

TEST(Fit, RankDeficientInputs) {
  CalibrationDataset one;
  one.points.push_back({1.0, {-60.0}});
  EXPECT_THROW(fit_model(one), DomainError);
  CalibrationDataset same;
  same.points.push_back({2.0, {-60.0}});
  same.points.push_back({2.0, {-61.0}});
  try {
    fit_model(same);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("rank-deficient"), std::string::npos);
  }
}

TEST(FitProperty, IntervalCoverage) {
  const auto truth = PathLossModel::indoor();
  std::normal_distribution<double> noise(0.0, 2.0);
  int covered = 0;
  constexpr int trials = 200;
  for (int t = 0; t < trials; ++t) {
    Rng rng(child_seed(99, t));
    CalibrationDataset data;
    for (int i = 1; i <= 20; ++i) {
      CalibrationPoint p{0.2 * i, {}};
      for (int k = 0; k < 60; ++k) p.samples.push_back(predict_rssi(truth, p.distance_m) + noise(rng));
      data.points.push_back(std::move(p));
    }
    covered += fit_model(data).n_ci95.contains(truth.n) ? 1 : 0;
  }
  // Nominal 95%; binomial 3-sigma lower bound at 200 trials is about 0.90.
  EXPECT_GE(covered, 180);
}
