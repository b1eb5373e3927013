/* SPDX-License-Identifier: Apache-2.0 */
/* Copyright 2026 The beaconpark Authors */

// beaconpark command-line front end.
//
// Exit codes: 0 success, 1 runtime error, 2 input error.

#include <beaconpark/io.hpp>
#include <beaconpark/line_server.hpp>
#include <beaconpark/parking.hpp>
#include <beaconpark/simulator.hpp>

#include <CLI11.hpp>
#include <boost/version.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <pthread.h>
#include <sstream>
#include <string>
#include <thread>

namespace fs = std::filesystem;
using namespace beaconpark;
using Json = nlohmann::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
};

std::map<std::string, std::string> versions() {
  return {{"beaconpark", kToolVersion},
          {"compiler", __VERSION__},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"boost", std::to_string(BOOST_VERSION / 100000) + "." + std::to_string(BOOST_VERSION / 100 % 1000)},
          {"cli11", CLI11_VERSION}};
}

void write_manifest(const Globals& g, const std::string& command, const std::optional<std::string>& scenario,
                    std::uint64_t seed) {
  io::RunManifest m{command, scenario, seed, g.out_dir, versions()};
  io::atomic_write(fs::path(g.out_dir) / "manifest.json", m.to_json().dump(2) + "\n");
}

io::ScenarioFile load_scenario(const Globals& g, const std::string& path) {
  auto file = io::scenario_from_json(io::parse_json_file(path));
  if (g.seed) {
    file.scenario.seed = *g.seed;
  }
  return file;
}

std::string interval_text(const Interval& iv) {
  return "[" + io::format_double(iv.low, 8) + ", " + io::format_double(iv.high, 8) + "]";
}

// ---------------------------------------------------------------- calibrate

int cmd_calibrate(const Globals& g, const std::string& input, const std::string& out) {
  std::ifstream in(input);
  if (!in) {
    throw io::InputError("cannot open " + input);
  }
  auto data = io::read_calibration_csv(in);
  FitResult fit;
  try {
    fit = fit_model(data);
  } catch (const DomainError& e) {
    std::string msg = e.what();
    if (msg.rfind("rank-deficient", 0) == 0) {
      std::cout << "ERR " << msg << "\n";
      return 2;
    }
    throw io::InputError(msg);
  }
  write_manifest(g, "calibrate", std::nullopt, 0);
  io::atomic_write(out, io::to_json(fit).dump(2) + "\n");
  std::cout << "n = " << io::format_double(fit.model.n, 8) << " 95% CI " << interval_text(fit.n_ci95) << "\n"
            << "C = " << io::format_double(fit.model.c, 8) << " dBm 95% CI " << interval_text(fit.c_ci95) << "\n"
            << "residual_std = " << io::format_double(fit.residual_std, 6) << " dB\n";
  return 0;
}

// ---------------------------------------------------------------- distance

int cmd_distance(const Globals& g, const std::string& scenario_path, bool sweep) {
  auto file = load_scenario(g, scenario_path);
  if (!file.distance) {
    throw io::InputError("scenario has no distance_experiment section");
  }
  Scenario scenario = file.scenario;
  if (file.distance->duration_s) {
    scenario.duration_s = *file.distance->duration_s;
  }
  scenario.validate();
  write_manifest(g, sweep ? "distance --sweep" : "distance", scenario_path, scenario.seed);

  std::vector<std::size_t> counts = sweep ? particle_sweep_counts() : std::vector<std::size_t>{file.filter.particle_count};
  std::string table = io::distance_table_header();
  std::string comparison = "particles,distance_m,raw_error_m,filtered_error_m\n";
  std::optional<DistanceResult> at_config;
  for (auto n : counts) {
    FilterConfig fc = file.filter;
    fc.particle_count = n;
    auto result = run_distance_experiment(scenario, file.distance->distances, fc, file.distance->repetitions);
    table += io::distance_table_rows(result);
    comparison += io::distance_comparison_rows(result);
    if (n == file.filter.particle_count || !at_config) {
      at_config = std::move(result);
    }
  }
  const fs::path dir(g.out_dir);
  io::atomic_write(dir / "distance.csv", table);
  io::atomic_write(dir / "distance_comparison.csv", comparison);
  io::atomic_write(dir / "error_cdf.csv", io::error_cdf_csv(*at_config));
  std::cout << table;
  return 0;
}

// ---------------------------------------------------------------- proximity

int cmd_proximity(const Globals& g, const std::string& scenario_path) {
  auto file = load_scenario(g, scenario_path);
  if (!file.proximity) {
    throw io::InputError("scenario has no proximity_experiment section");
  }
  Scenario scenario = file.scenario;
  if (file.proximity->duration_s) {
    scenario.duration_s = *file.proximity->duration_s;
  }
  scenario.validate();
  write_manifest(g, "proximity", scenario_path, scenario.seed);
  auto cells = run_proximity_experiment(scenario, file.proximity->cells, file.filter, file.proximity->repetitions);
  const auto csv = io::proximity_csv(cells);
  io::atomic_write(fs::path(g.out_dir) / "proximity.csv", csv);
  std::cout << csv;
  return 0;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const Globals& g, const std::string& scenario_path) {
  auto file = load_scenario(g, scenario_path);
  if (!file.calibration && file.scenario.layout.beacons.empty()) {
    throw io::InputError("scenario needs a calibration section or a layout to simulate");
  }
  write_manifest(g, "simulate", scenario_path, file.scenario.seed);
  const fs::path dir(g.out_dir);
  if (file.calibration) {
    Scenario s = file.scenario;
    if (file.calibration->duration_s) {
      s.duration_s = *file.calibration->duration_s;
    }
    io::atomic_write(dir / "calibration.csv", io::calibration_csv(simulate_calibration(s, file.calibration->distances)));
    std::cout << "wrote " << (dir / "calibration.csv").string() << "\n";
  }
  if (!file.scenario.layout.beacons.empty()) {
    std::string csv = "timestamp_ms,spot,rssi_dbm\n";
    for (const auto& [spot, samples] : generate_layout_streams(file.scenario)) {
      for (const auto& s : samples) {
        csv += std::to_string(s.timestamp_ms) + "," + spot.str() + "," + io::format_double(s.rssi, 12) + "\n";
      }
    }
    io::atomic_write(dir / "streams.csv", csv);
    std::cout << "wrote " << (dir / "streams.csv").string() << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------- estimate

StreamSet read_streams(const std::string& path) {
  std::istringstream in(io::read_file(path));
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "timestamp_ms,spot,rssi_dbm") {
    throw io::InputError("stream CSV header must be 'timestamp_ms,spot,rssi_dbm'");
  }
  StreamSet streams;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      auto c1 = line.find(',');
      auto c2 = line.find(',', c1 + 1);
      if (c1 == std::string::npos || c2 == std::string::npos) throw std::invalid_argument("fields");
      RssiSample s{std::stoll(line.substr(0, c1)), SpotId::parse(line.substr(c1 + 1, c2 - c1 - 1)),
                   std::stod(line.substr(c2 + 1))};
      streams[s.beacon].push_back(s);
    } catch (const std::exception&) {
      throw io::InputError("malformed stream CSV row " + std::to_string(row));
    }
  }
  if (streams.empty()) {
    throw io::InputError("stream CSV has no samples");
  }
  return streams;
}

int cmd_estimate(const Globals& g, const std::string& model_path, const std::string& rssi_path,
                 const std::optional<std::string>& scenario_path, bool trace) {
  const auto fit = io::fit_from_json(io::parse_json_file(model_path));
  FilterConfig config;
  if (scenario_path) {
    config = load_scenario(g, *scenario_path).filter;
  }
  if (g.seed) {
    config.seed = *g.seed;
  }
  const auto streams = read_streams(rssi_path);
  write_manifest(g, "estimate", scenario_path, config.seed);

  std::string summary = "spot,samples,raw_m,mean_m,std_m\n";
  std::size_t index = 0;
  for (const auto& [spot, samples] : streams) {
    FilterConfig c = config;
    c.seed = child_seed(config.seed, index++);
    ParticleFilter filter(c);
    std::vector<double> rssis;
    std::string trace_csv = io::filter_trace_header();
    std::size_t step = 0;
    for (const auto& s : samples) {
      rssis.push_back(s.rssi);
      auto r = filter.update(estimate_distance(fit.model, s.rssi));
      trace_csv += io::filter_trace_row(++step, r, filter.estimate());
    }
    const auto e = filter.estimate();
    summary += spot.str() + "," + std::to_string(samples.size()) + "," +
               io::fixed(estimate_distance(fit.model, average_rssi(rssis)), 4) + "," + io::fixed(e.mean, 4) + "," +
               io::fixed(e.std, 4) + "\n";
    if (trace) {
      io::atomic_write(fs::path(g.out_dir) / ("filter_trace_" + spot.str() + ".csv"), trace_csv);
    }
  }
  io::atomic_write(fs::path(g.out_dir) / "estimates.csv", summary);
  std::cout << summary;
  return 0;
}

// ---------------------------------------------------------------- sigma

int cmd_sigma(const Globals& g, const std::string& scenario_path, double x, double y, double target_pct,
              std::size_t trials) {
  auto file = load_scenario(g, scenario_path);
  if (!(target_pct > 0.0 && target_pct <= 100.0)) {
    throw io::InputError("--target must be a percentage in (0, 100]");
  }
  if (!(x > 0.0 && y >= 0.0)) {
    throw io::InputError("--x must be positive and --y non-negative");
  }
  Scenario s = file.scenario;
  if (file.proximity && file.proximity->duration_s) {
    s.duration_s = *file.proximity->duration_s;
  }
  write_manifest(g, "sigma", scenario_path, s.seed);
  const double sigma = fit_noise_sigma(s, {x, y}, target_pct / 100.0, trials);
  const std::string out = "noise_sigma_db = " + io::format_double(sigma, 6) + "\n";
  io::atomic_write(fs::path(g.out_dir) / "sigma.txt", out);
  std::cout << out;
  return 0;
}

// ---------------------------------------------------------------- serve

int cmd_serve(const Globals& g, const std::string& lot_path, const std::string& bind, const std::string& clock_kind,
              const std::optional<std::string>& journal_opt, std::int64_t clock_start) {
  using namespace beaconpark::parking;
  const auto lot = io::lot_from_json(io::parse_json_file(lot_path));
  if (clock_kind != "system" && clock_kind != "simulated") {
    throw io::InputError("--clock must be 'system' or 'simulated'");
  }
  const fs::path journal_path = journal_opt ? fs::path(*journal_opt) : fs::path(g.out_dir) / "journal.jsonl";
  write_manifest(g, "serve", std::nullopt, g.seed.value_or(0));

  // Block termination signals before any thread exists; a watcher thread
  // collects them with sigwait and stops the server.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  StubPayment payment;
  auto journal = std::make_shared<std::ofstream>();
  ParkingService::JournalSink sink = [journal](const Json& ev) {
    *journal << ev.dump() << '\n';
    journal->flush();
    if (!*journal) {
      throw std::runtime_error("journal write failed");
    }
  };

  std::optional<ParkingService> service;
  if (fs::exists(journal_path)) {
    std::ifstream in(journal_path);
    try {
      service.emplace(ParkingService::replay(lot, payment, in, sink));
    } catch (const Json::exception& e) {
      throw io::InputError("corrupt journal " + journal_path.string() + ": " + e.what());
    }
  } else {
    if (journal_path.has_parent_path()) fs::create_directories(journal_path.parent_path());
    service.emplace(lot, payment, sink);
  }
  journal->open(journal_path, std::ios::app);
  if (!*journal) {
    throw std::runtime_error("cannot open journal " + journal_path.string());
  }

  std::unique_ptr<TimeSource> clock;
  if (clock_kind == "simulated") {
    Timestamp start{std::chrono::seconds(clock_start)};
    if (auto last = service->last_event_time(); last && *last > start) start = *last;
    clock = std::make_unique<SimulatedTime>(start);
  } else {
    clock = std::make_unique<SystemTime>();
  }

  CommandProcessor processor(*service, *clock);
  LineServer server(processor, bind);
  std::cout << "listening on port " << server.port() << std::endl;

  std::thread watcher([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  server.run();
  // run() also returns on accept failure; wake the watcher in that case.
  pthread_kill(watcher.native_handle(), SIGTERM);
  watcher.join();
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"beaconpark: beacon proximity and parking service tools"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Override the master seed");
  app.add_option("--out-dir", g.out_dir, "Directory for manifest and result files")->capture_default_str();

  std::string input, out, scenario, lot, bind = "127.0.0.1:7070", clock = "system", model, rssi;
  std::optional<std::string> journal, est_scenario;
  bool sweep = false, trace = false;
  double x = 1.0, y = 0.5, target = 77.8;
  std::size_t trials = 20;
  std::int64_t clock_start = 0;

  auto* calibrate = app.add_subcommand("calibrate", "Fit the path loss model from a calibration CSV");
  calibrate->add_option("--input", input, "CSV with header distance_m,rssi_dbm")->required();
  calibrate->add_option("--out", out, "FitResult JSON path")->required();

  auto* distance = app.add_subcommand("distance", "Distance estimation experiment");
  distance->add_option("--scenario", scenario, "Scenario JSON")->required();
  distance->add_flag("--sweep", sweep, "Sweep particle counts 200..2000");

  auto* proximity = app.add_subcommand("proximity", "Proximity identification grid");
  proximity->add_option("--scenario", scenario, "Scenario JSON")->required();

  auto* simulate = app.add_subcommand("simulate", "Write simulated calibration and beacon RSSI CSVs");
  simulate->add_option("--scenario", scenario, "Scenario JSON")->required();

  auto* estimate = app.add_subcommand("estimate", "Filter recorded RSSI streams into distance estimates");
  estimate->add_option("--model", model, "FitResult JSON from calibrate")->required();
  estimate->add_option("--rssi", rssi, "CSV with header timestamp_ms,spot,rssi_dbm")->required();
  estimate->add_option("--scenario", est_scenario, "Scenario JSON providing filter settings");
  estimate->add_flag("--trace", trace, "Write a per-step filter trace per spot");

  auto* sigma = app.add_subcommand("sigma", "Fit shadowing sigma to a raw accuracy target");
  sigma->add_option("--scenario", scenario, "Scenario JSON")->required();
  sigma->add_option("--x", x, "Beacon separation X (m)")->capture_default_str();
  sigma->add_option("--y", y, "Listener offset Y (m)")->capture_default_str();
  sigma->add_option("--target", target, "Target raw accuracy (percent)")->capture_default_str();
  sigma->add_option("--trials", trials, "Seeds per candidate sigma")->capture_default_str();

  auto* serve = app.add_subcommand("serve", "Serve the parking line protocol over TCP");
  serve->add_option("--lot", lot, "Lot config JSON")->required();
  serve->add_option("--bind", bind, "host:port")->capture_default_str();
  serve->add_option("--clock", clock, "system or simulated")->capture_default_str();
  serve->add_option("--journal", journal, "Journal path (default <out-dir>/journal.jsonl)");
  serve->add_option("--clock-start", clock_start, "Simulated clock start, seconds since epoch")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*calibrate) return cmd_calibrate(g, input, out);
    if (*distance) return cmd_distance(g, scenario, sweep);
    if (*proximity) return cmd_proximity(g, scenario);
    if (*simulate) return cmd_simulate(g, scenario);
    if (*estimate) return cmd_estimate(g, model, rssi, est_scenario, trace);
    if (*sigma) return cmd_sigma(g, scenario, x, y, target, trials);
    if (*serve) return cmd_serve(g, lot, bind, clock, journal, clock_start);
  } catch (const io::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
