/* SPDX-License-Identifier: Apache-2.0 */
/* Copyright 2026 The beaconpark Authors */

/** Log-normal shadowing path-loss model: RSSI = C - 10 n log10(d / d0).
 * @file */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "spot_id.hpp"

namespace beaconpark {

/// Raised for inputs outside an operation's domain (empty sample sets,
/// non-positive distances, rank-deficient calibration data).
class DomainError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct RssiSample {
  std::int64_t timestamp_ms = 0;
  SpotId beacon{'A', 1};
  double rssi = 0.0; ///< dBm
};

struct PathLossModel {
  double n = 2.0;     ///< path-loss exponent
  double c = -60.0;   ///< RSSI at the reference distance, dBm
  double d0 = 1.0;    ///< reference distance, m

  static PathLossModel indoor() { return {2.424, -65.24, 1.0}; }
  static PathLossModel outdoor() { return {2.049, -88.78, 1.0}; }

  void validate() const {
    if (!(n > 0.0) || !std::isfinite(n) || !std::isfinite(c) || d0 != 1.0) {
      throw DomainError("path-loss model requires n > 0, finite C and d0 == 1");
    }
  }
};

inline double average_rssi(std::span<const double> samples) {
  if (samples.empty()) {
    throw DomainError("cannot average an empty RSSI sample set");
  }
  return std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
}

inline double predict_rssi(const PathLossModel& model, double distance_m) {
  if (!(distance_m > 0.0)) {
    throw DomainError("distance must be positive");
  }
  return -10.0 * model.n * std::log10(distance_m / model.d0) + model.c;
}

/// Exact inverse of predict_rssi. No range clamping happens here.
inline double estimate_distance(const PathLossModel& model, double rssi_dbm) {
  return model.d0 * std::pow(10.0, (model.c - rssi_dbm) / (10.0 * model.n));
}

/** Model built from a beacon's advertised calibration byte, for use only
 * when no fitted model exists for the environment. Free-space exponent. */
inline PathLossModel fallback_model(std::int8_t advertised_c_dbm) {
  return {2.0, static_cast<double>(advertised_c_dbm), 1.0};
}

struct CalibrationPoint {
  double distance_m = 0.0;
  std::vector<double> samples;
};

struct CalibrationDataset {
  std::vector<CalibrationPoint> points;

  bool equal_sample_counts() const {
    return std::all_of(points.begin(), points.end(), [&](const CalibrationPoint& p) {
      return p.samples.size() == points.front().samples.size();
    });
  }
};

struct Interval {
  double low = 0.0;
  double high = 0.0;

  bool contains(double v) const noexcept { return low <= v && v <= high; }
};

struct FitResult {
  PathLossModel model;
  Interval n_ci95;
  Interval c_ci95;
  double residual_std = 0.0; ///< RMS residual of the per-distance means, dB
};

/** Least-squares fit of (n, C) on per-distance mean RSSI against log10(d).
 *
 * The model is the line y = C - 10 n x with x = log10(d); confidence
 * intervals are two-sided Student-t intervals with (points - 2) degrees of
 * freedom. With exactly two points the intervals are unbounded. */
inline FitResult fit_model(const CalibrationDataset& data) {
  const auto m = data.points.size();
  if (m < 2) {
    throw DomainError("rank-deficient: calibration needs at least two distances");
  }
  std::vector<double> xs;
  std::vector<double> ys;
  xs.reserve(m);
  ys.reserve(m);
  for (const auto& p : data.points) {
    if (!(p.distance_m > 0.0)) {
      throw DomainError("calibration distances must be positive");
    }
    xs.push_back(std::log10(p.distance_m));
    ys.push_back(average_rssi(p.samples));
  }

  const double count = static_cast<double>(m);
  const double x_mean = std::accumulate(xs.begin(), xs.end(), 0.0) / count;
  const double y_mean = std::accumulate(ys.begin(), ys.end(), 0.0) / count;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (xs[i] - x_mean) * (xs[i] - x_mean);
    sxy += (xs[i] - x_mean) * (ys[i] - y_mean);
  }
  if (!(sxx > 1e-12)) {
    throw DomainError("rank-deficient: all calibration distances are equal");
  }

  const double slope = sxy / sxx;
  const double intercept = y_mean - slope * x_mean;

  double ssr = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = ys[i] - (intercept + slope * xs[i]);
    ssr += r * r;
  }

  FitResult result;
  result.model = PathLossModel{-slope / 10.0, intercept, 1.0};
  result.residual_std = std::sqrt(ssr / count);

  if (m == 2) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    result.n_ci95 = {-inf, inf};
    result.c_ci95 = {-inf, inf};
    return result;
  }

  const double dof = count - 2.0;
  const double s = std::sqrt(ssr / dof);
  const double se_slope = s / std::sqrt(sxx);
  const double se_intercept = s * std::sqrt(1.0 / count + x_mean * x_mean / sxx);
  const double t = boost::math::quantile(boost::math::students_t(dof), 0.975);

  const double n_half = t * se_slope / 10.0;
  const double c_half = t * se_intercept;
  result.n_ci95 = {result.model.n - n_half, result.model.n + n_half};
  result.c_ci95 = {result.model.c - c_half, result.model.c + c_half};
  return result;
}

} // namespace beaconpark
