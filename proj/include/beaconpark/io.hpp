/* SPDX-License-Identifier: Apache-2.0 */
/* Copyright 2026 The beaconpark Authors */

/** File formats: calibration CSV, fit-result JSON, scenario and lot JSON,
 * and the result CSVs written by the command-line tool.
 * @file */

#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "eddystone.hpp"
#include "parking.hpp"
#include "particle_filter.hpp"
#include "pathloss.hpp"
#include "simulator.hpp"

namespace beaconpark::io {

using Json = nlohmann::json;

/// Malformed or inconsistent input file.
class InputError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

inline std::string format_double(double v, int precision = 6) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

inline std::string fixed(double v, int decimals) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(decimals) << v;
  return os.str();
}

// ---------------------- Atomic writes ----------------------

/// Writes to a sibling temp file then renames over @p path.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot write " + tmp.string());
    }
    out << content;
    out.flush();
    if (!out) {
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InputError("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Json parse_json_file(const std::filesystem::path& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

// ---------------------- Calibration CSV ----------------------

/// `distance_m,rssi_dbm` rows; samples are grouped by distance, ascending.
inline CalibrationDataset read_calibration_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw InputError("calibration CSV is empty");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "distance_m,rssi_dbm") {
    throw InputError("calibration CSV header must be 'distance_m,rssi_dbm'");
  }
  std::map<double, std::vector<double>> grouped;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto comma = line.find(',');
    double d = 0.0;
    double rssi = 0.0;
    try {
      if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
        throw std::invalid_argument("field count");
      }
      std::size_t used = 0;
      d = std::stod(line.substr(0, comma), &used);
      if (used != comma) throw std::invalid_argument("distance");
      auto rest = line.substr(comma + 1);
      rssi = std::stod(rest, &used);
      if (used != rest.size()) throw std::invalid_argument("rssi");
    } catch (const std::exception&) {
      throw InputError("malformed calibration CSV row " + std::to_string(row));
    }
    if (!(d > 0.0) || !std::isfinite(rssi)) {
      throw InputError("calibration CSV row " + std::to_string(row) + " has a non-positive distance or non-finite RSSI");
    }
    grouped[d].push_back(rssi);
  }
  CalibrationDataset data;
  for (auto& [d, samples] : grouped) {
    data.points.push_back({d, std::move(samples)});
  }
  return data;
}

inline std::string calibration_csv(const CalibrationDataset& data) {
  std::string out = "distance_m,rssi_dbm\n";
  for (const auto& p : data.points) {
    for (double s : p.samples) {
      out += format_double(p.distance_m, 10) + "," + format_double(s, 12) + "\n";
    }
  }
  return out;
}

// ---------------------- Fit result JSON ----------------------

namespace detail {
inline Json bound(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }
inline double unbound(const Json& j, double if_null) { return j.is_null() ? if_null : j.get<double>(); }
} // namespace detail

inline Json to_json(const FitResult& fit) {
  return {{"n", fit.model.n},
          {"C", fit.model.c},
          {"d0", fit.model.d0},
          {"n_ci95", {detail::bound(fit.n_ci95.low), detail::bound(fit.n_ci95.high)}},
          {"C_ci95", {detail::bound(fit.c_ci95.low), detail::bound(fit.c_ci95.high)}},
          {"residual_std", fit.residual_std}};
}

inline FitResult fit_from_json(const Json& j) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  try {
    FitResult fit;
    fit.model = {j.at("n").get<double>(), j.at("C").get<double>(), j.value("d0", 1.0)};
    fit.model.validate();
    if (j.contains("n_ci95")) {
      fit.n_ci95 = {detail::unbound(j["n_ci95"].at(0), -inf), detail::unbound(j["n_ci95"].at(1), inf)};
    }
    if (j.contains("C_ci95")) {
      fit.c_ci95 = {detail::unbound(j["C_ci95"].at(0), -inf), detail::unbound(j["C_ci95"].at(1), inf)};
    }
    fit.residual_std = j.value("residual_std", 0.0);
    return fit;
  } catch (const Json::exception& e) {
    throw InputError(std::string("malformed fit result: ") + e.what());
  } catch (const DomainError& e) {
    throw InputError(std::string("invalid path-loss model: ") + e.what());
  }
}

// ---------------------- Scenario JSON ----------------------

struct DistanceSection {
  std::vector<double> distances;
  std::size_t repetitions = 1;
  std::optional<double> duration_s;
};

struct ProximitySection {
  std::vector<GridCell> cells;
  std::size_t repetitions = 1;
  std::optional<double> duration_s;
};

struct CalibrationSection {
  std::vector<double> distances;
  std::optional<double> duration_s;
};

struct ScenarioFile {
  std::string name;
  Scenario scenario;
  FilterConfig filter;
  std::optional<DistanceSection> distance;
  std::optional<ProximitySection> proximity;
  std::optional<CalibrationSection> calibration;
};

inline FilterConfig filter_from_json(const Json& j, FilterConfig base = {}) {
  base.particle_count = j.value("particle_count", base.particle_count);
  base.beta = j.value("beta", base.beta);
  base.measurement_noise = j.value("measurement_noise", base.measurement_noise);
  base.state_min = j.value("state_min", base.state_min);
  base.state_max = j.value("state_max", base.state_max);
  base.seed = j.value("seed", base.seed);
  const auto form = j.value("std_form", std::string("conventional"));
  if (form == "conventional") {
    base.std_form = StdForm::Conventional;
  } else if (form == "literal") {
    base.std_form = StdForm::Literal;
  } else {
    throw InputError("filter.std_form must be 'conventional' or 'literal'");
  }
  return base;
}

inline Json to_json(const FilterConfig& c) {
  return {{"particle_count", c.particle_count},
          {"beta", c.beta},
          {"measurement_noise", c.measurement_noise},
          {"state_min", c.state_min},
          {"state_max", c.state_max},
          {"seed", c.seed},
          {"std_form", c.std_form == StdForm::Conventional ? "conventional" : "literal"}};
}

inline BeaconLayout layout_from_json(const Json& j) {
  BeaconLayout layout;
  for (const auto& b : j.at("beacons")) {
    layout.beacons.push_back({SpotId::parse(b.at("spot").get<std::string>()), b.at("position_m").get<double>()});
  }
  layout.listener_x_m = j.at("listener").at("x_m").get<double>();
  layout.listener_y_m = j.at("listener").at("y_m").get<double>();
  layout.validate();
  return layout;
}

inline ScenarioFile scenario_from_json(const Json& j) {
  try {
    ScenarioFile f;
    f.name = j.value("name", std::string("scenario"));
    auto& s = f.scenario;
    s.model = {j.at("model").at("n").get<double>(), j.at("model").at("C").get<double>(),
               j.at("model").value("d0", 1.0)};
    s.noise_sigma_db = j.at("noise_sigma_db").get<double>();
    s.tx_interval_ms = j.value("tx_interval_ms", std::int64_t{1000});
    s.duration_s = j.value("duration_s", 300.0);
    s.drop_rate = j.value("drop_rate", 0.0);
    s.seed = j.value("seed", std::uint64_t{1});
    if (j.contains("layout")) {
      s.layout = layout_from_json(j["layout"]);
    }
    s.validate();
    if (j.contains("filter")) {
      f.filter = filter_from_json(j["filter"]);
    }
    f.filter.validate();
    if (j.contains("distance_experiment")) {
      const auto& d = j["distance_experiment"];
      DistanceSection sec;
      sec.distances = d.at("distances").get<std::vector<double>>();
      sec.repetitions = d.value("repetitions", std::size_t{1});
      if (d.contains("duration_s")) sec.duration_s = d["duration_s"].get<double>();
      if (sec.distances.empty() || sec.repetitions < 1) {
        throw InputError("distance_experiment needs distances and repetitions >= 1");
      }
      f.distance = std::move(sec);
    }
    if (j.contains("proximity_experiment")) {
      const auto& p = j["proximity_experiment"];
      ProximitySection sec;
      for (double x : p.at("x_m").get<std::vector<double>>()) {
        for (double y : p.at("y_m").get<std::vector<double>>()) {
          sec.cells.push_back({x, y});
        }
      }
      sec.repetitions = p.value("repetitions", std::size_t{1});
      if (p.contains("duration_s")) sec.duration_s = p["duration_s"].get<double>();
      if (sec.cells.empty() || sec.repetitions < 1) {
        throw InputError("proximity_experiment needs x_m, y_m and repetitions >= 1");
      }
      f.proximity = std::move(sec);
    }
    if (j.contains("calibration")) {
      const auto& c = j["calibration"];
      CalibrationSection sec;
      sec.distances = c.at("distances").get<std::vector<double>>();
      if (c.contains("duration_s")) sec.duration_s = c["duration_s"].get<double>();
      f.calibration = std::move(sec);
    }
    return f;
  } catch (const Json::exception& e) {
    throw InputError(std::string("malformed scenario: ") + e.what());
  } catch (const InputError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("invalid scenario: ") + e.what());
  }
}

// ---------------------- Lot JSON ----------------------

/** {"namespace": "<20 hex>", "spots": [{"id": "A1", "url": "...",
 *  "rate_cents_per_hour": 200, "namespace"?: hex, "instance"?: hex}]}
 * A spot without "instance" uses the lot-letter/number instance layout. */
inline parking::LotConfig lot_from_json(const Json& j) {
  try {
    parking::LotConfig lot;
    auto read_hex = [](const Json& v, std::size_t size, const char* what) {
      auto bytes = eddystone::from_hex(v.get<std::string>());
      if (bytes.size() != size) {
        throw InputError(std::string(what) + " must be " + std::to_string(size) + " bytes of hex");
      }
      return bytes;
    };
    std::optional<eddystone::Bytes> lot_ns;
    if (j.contains("namespace")) {
      lot_ns = read_hex(j["namespace"], 10, "namespace");
    }
    for (const auto& s : j.at("spots")) {
      parking::SpotConfig cfg{SpotId::parse(s.at("id").get<std::string>()), {}, s.at("url").get<std::string>(),
                              s.at("rate_cents_per_hour").get<std::int64_t>()};
      eddystone::Bytes ns;
      if (s.contains("namespace")) {
        ns = read_hex(s["namespace"], 10, "namespace");
      } else if (lot_ns) {
        ns = *lot_ns;
      } else {
        throw InputError("spot " + cfg.id.str() + " has no beacon namespace");
      }
      std::copy(ns.begin(), ns.end(), cfg.beacon.namespace_id.begin());
      if (s.contains("instance")) {
        auto inst = read_hex(s["instance"], 6, "instance");
        std::copy(inst.begin(), inst.end(), cfg.beacon.instance.begin());
      } else {
        cfg.beacon.instance = eddystone::instance_for_spot(cfg.id);
      }
      lot.spots.push_back(std::move(cfg));
    }
    lot.validate();
    return lot;
  } catch (const Json::exception& e) {
    throw InputError(std::string("malformed lot config: ") + e.what());
  } catch (const InputError&) {
    throw;
  } catch (const std::exception& e) {
    throw InputError(std::string("invalid lot config: ") + e.what());
  }
}

// ---------------------- Result CSVs ----------------------

inline std::string tally_csv_header() { return "X_m,Y_m,mode,count_A,count_B,count_C,accuracy_pct\n"; }

inline std::string tally_csv_row(const GridCell& cell, const char* mode, const PredictionTally& t) {
  std::string row = format_double(cell.x_m) + "," + format_double(cell.y_m) + "," + mode;
  for (char lot : {'A', 'B', 'C'}) {
    auto it = t.counts.find(SpotId(lot, 1));
    row += "," + std::to_string(it == t.counts.end() ? 0 : it->second);
  }
  return row + "," + fixed(100.0 * t.accuracy(), 1) + "\n";
}

inline std::string proximity_csv(const std::vector<ProximityCell>& cells) {
  std::string out = tally_csv_header();
  for (const auto& c : cells) {
    out += tally_csv_row(c.cell, "raw", c.raw);
    out += tally_csv_row(c.cell, "filtered", c.filtered);
  }
  return out;
}

inline std::string distance_table_header() { return "particles,distance_m,error_m,mse,std_m\n"; }

inline std::string distance_table_rows(const DistanceResult& r) {
  std::string out;
  for (const auto& row : r.rows) {
    out += std::to_string(r.particle_count) + "," + format_double(row.distance_m) + "," +
           fixed(row.filtered_error_m, 3) + "," + fixed(row.mse, 3) + "," + fixed(row.std_m, 3) + "\n";
  }
  return out;
}

/// Raw-vs-filtered companion table: `particles,distance_m,raw_error_m,filtered_error_m`.
inline std::string distance_comparison_rows(const DistanceResult& r) {
  std::string out;
  for (const auto& row : r.rows) {
    out += std::to_string(r.particle_count) + "," + format_double(row.distance_m) + "," +
           fixed(row.raw_error_m, 3) + "," + fixed(row.filtered_error_m, 3) + "\n";
  }
  return out;
}

/// `mode,error_m` samples for error CDF plots.
inline std::string error_cdf_csv(const DistanceResult& r) {
  std::string out = "mode,error_m\n";
  for (double e : r.raw_sample_errors) out += "raw," + fixed(e, 4) + "\n";
  for (double e : r.filtered_step_errors) out += "filtered," + fixed(e, 4) + "\n";
  return out;
}

inline std::string filter_trace_header() { return "step,measurement_m,mean_m,std_m,neff,resampled\n"; }

inline std::string filter_trace_row(std::size_t step, const ParticleFilter::StepResult& s, const DistanceEstimate& e) {
  return std::to_string(step) + "," + fixed(s.measurement, 4) + "," + fixed(e.mean, 4) + "," + fixed(e.std, 4) + "," +
         fixed(e.effective_particles, 2) + "," + (s.resampled ? "1" : "0") + "\n";
}

// ---------------------- Run manifest ----------------------

struct RunManifest {
  std::string command;
  std::optional<std::string> scenario_path;
  std::uint64_t seed = 0;
  std::string output_dir;
  std::map<std::string, std::string> versions;

  Json to_json() const {
    return {{"command", command},
            {"scenario_path", scenario_path ? Json(*scenario_path) : Json(nullptr)},
            {"seed", seed},
            {"output_dir", output_dir},
            {"versions", versions}};
  }
};

} // namespace beaconpark::io
