/* SPDX-License-Identifier: Apache-2.0 */
/* Copyright 2026 The beaconpark Authors */

/** Nearest-beacon spot identification over synchronized prediction rounds.
 * @file */

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "particle_filter.hpp"
#include "pathloss.hpp"
#include "random.hpp"
#include "spot_id.hpp"

namespace beaconpark {

struct BeaconPlacement {
  SpotId spot;
  double position_m = 0.0; ///< along the row
};

struct BeaconLayout {
  std::vector<BeaconPlacement> beacons;
  double listener_x_m = 0.0; ///< along the row
  double listener_y_m = 0.0; ///< perpendicular to the row

  void validate() const {
    if (beacons.empty()) {
      throw std::invalid_argument("layout has no beacons");
    }
    for (std::size_t i = 1; i < beacons.size(); ++i) {
      if (!(beacons[i].position_m > beacons[i - 1].position_m)) {
        throw std::invalid_argument("beacon positions must be strictly increasing");
      }
    }
    if (!(listener_y_m >= 0.0)) {
      throw std::invalid_argument("listener offset y must be non-negative");
    }
  }

  double true_distance(const BeaconPlacement& b) const {
    return std::hypot(b.position_m - listener_x_m, listener_y_m);
  }

  /// Beacon nearest the listener; earlier (smaller) spot wins a tie.
  SpotId ground_truth() const {
    std::optional<SpotId> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& b : beacons) {
      double d = true_distance(b);
      if (d < best_d || (d == best_d && b.spot < *best)) {
        best = b.spot;
        best_d = d;
      }
    }
    return *best;
  }

  /// Three beacons A1, B1, C1 at -x, 0, +x with the listener y in front of B1.
  static BeaconLayout three_spot_row(double x_m, double y_m) {
    return BeaconLayout{{{SpotId('A', 1), -x_m}, {SpotId('B', 1), 0.0}, {SpotId('C', 1), x_m}}, 0.0, y_m};
  }
};

struct PredictionTally {
  SpotId truth{'A', 1};
  std::map<SpotId, std::uint64_t> counts;
  std::uint64_t total = 0;

  double accuracy() const {
    if (total == 0) {
      return 0.0;
    }
    auto it = counts.find(truth);
    return it == counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(total);
  }

  void record(const SpotId& predicted) {
    ++counts[predicted];
    ++total;
  }
};

/// Spot whose estimated distance is smallest; ties go to the smaller SpotId.
template <typename Estimate, typename Proj>
SpotId predict_spot(const std::map<SpotId, Estimate>& estimates, Proj distance_of) {
  if (estimates.empty()) {
    throw std::invalid_argument("no estimates to predict from");
  }
  auto best = estimates.begin();
  for (auto it = std::next(estimates.begin()); it != estimates.end(); ++it) {
    if (distance_of(it->second) < distance_of(best->second)) {
      best = it;
    }
  }
  return best->first;
}

inline SpotId predict_spot(const std::map<SpotId, DistanceEstimate>& estimates) {
  return predict_spot(estimates, [](const DistanceEstimate& e) { return e.mean; });
}

inline SpotId predict_spot(const std::map<SpotId, double>& distances) {
  return predict_spot(distances, [](double d) { return d; });
}

using StreamSet = std::map<SpotId, std::vector<RssiSample>>;

namespace detail {

/// Samples grouped per prediction round: rounds[r][spot] -> rssi values.
struct RoundBuckets {
  std::vector<std::map<SpotId, std::vector<double>>> rounds;
};

inline RoundBuckets bucket_rounds(const BeaconLayout& layout, const StreamSet& streams,
                                  std::int64_t cadence_ms) {
  if (cadence_ms <= 0) {
    throw std::invalid_argument("prediction cadence must be positive");
  }
  layout.validate();
  std::optional<std::int64_t> t0;
  std::int64_t t_end = 0;
  for (const auto& [spot, samples] : streams) {
    bool known = false;
    for (const auto& b : layout.beacons) {
      known = known || b.spot == spot;
    }
    if (!known) {
      throw std::invalid_argument("stream for beacon " + spot.str() + " is absent from the layout");
    }
    for (const auto& s : samples) {
      t0 = t0 ? std::min(*t0, s.timestamp_ms) : s.timestamp_ms;
      t_end = std::max(t_end, s.timestamp_ms);
    }
  }
  if (!t0) {
    throw std::invalid_argument("no samples in any stream");
  }
  RoundBuckets out;
  out.rounds.resize(static_cast<std::size_t>((t_end - *t0) / cadence_ms) + 1);
  for (const auto& [spot, samples] : streams) {
    for (const auto& s : samples) {
      out.rounds[static_cast<std::size_t>((s.timestamp_ms - *t0) / cadence_ms)][spot].push_back(s.rssi);
    }
  }
  return out;
}

} // namespace detail

/** Filtered identification: one particle filter per beacon, one tally
 * entry per round. A beacon with no sample in a round keeps its previous
 * filter state. Filter seeds are derived from config.seed and the beacon's
 * index in the layout. */
inline PredictionTally run_identification(const BeaconLayout& layout, const StreamSet& streams,
                                          const PathLossModel& model, const FilterConfig& config,
                                          std::int64_t cadence_ms = 1000) {
  auto buckets = detail::bucket_rounds(layout, streams, cadence_ms);
  std::map<SpotId, ParticleFilter> filters;
  for (std::size_t i = 0; i < layout.beacons.size(); ++i) {
    FilterConfig c = config;
    c.seed = child_seed(config.seed, i);
    filters.emplace(layout.beacons[i].spot, ParticleFilter(c));
  }

  PredictionTally tally;
  tally.truth = layout.ground_truth();
  for (const auto& b : layout.beacons) {
    tally.counts[b.spot] = 0;
  }
  for (const auto& round : buckets.rounds) {
    for (const auto& [spot, rssis] : round) {
      auto& filter = filters.at(spot);
      for (double rssi : rssis) {
        filter.update(estimate_distance(model, rssi));
      }
    }
    std::map<SpotId, DistanceEstimate> estimates;
    for (const auto& [spot, filter] : filters) {
      estimates.emplace(spot, filter.estimate());
    }
    tally.record(predict_spot(estimates));
  }
  return tally;
}

/** Unfiltered baseline: each round, a beacon's distance comes from the mean
 * RSSI of the samples it delivered since the previous round. Beacons that
 * have never delivered a sample are left out; rounds with no usable beacon
 * are not tallied. */
inline PredictionTally raw_baseline(const BeaconLayout& layout, const StreamSet& streams,
                                    const PathLossModel& model, std::int64_t cadence_ms = 1000) {
  auto buckets = detail::bucket_rounds(layout, streams, cadence_ms);
  PredictionTally tally;
  tally.truth = layout.ground_truth();
  for (const auto& b : layout.beacons) {
    tally.counts[b.spot] = 0;
  }
  std::map<SpotId, double> latest;
  for (const auto& round : buckets.rounds) {
    for (const auto& [spot, rssis] : round) {
      latest[spot] = estimate_distance(model, average_rssi(rssis));
    }
    if (!latest.empty()) {
      tally.record(predict_spot(latest));
    }
  }
  return tally;
}

} // namespace beaconpark
