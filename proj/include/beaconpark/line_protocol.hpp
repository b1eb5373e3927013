/* SPDX-License-Identifier: Apache-2.0 */
/* Copyright 2026 The beaconpark Authors */

/** Text command protocol for the parking service. One command per line;
 * every response is a single line starting with "OK" or "ERR <CODE>".
 *
 *   LIST                                  OK A1:available:200;A2:occupied:200
 *   STATUS <spot>                         OK <state> <rate>
 *   REGISTER <spot> <user> <plate> <card> [max_minutes]
 *                                         OK <session> | ERR TAKEN | ERR CARD
 *   UNREGISTER <spot>                     OK <cost> | ERR NOTREG | ERR CHARGE <cost>
 *   RESOLVE <hex-frame>                   OK <spot> <url> | ERR UNKNOWN
 *   SETTLE <spot>                         OK | ERR NOTILLEGAL
 *   TICK <seconds>                        OK <now>   (simulated clock only)
 * @file */

#pragma once

#include <charconv>
#include <chrono>
#include <cstdint>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "eddystone.hpp"
#include "parking.hpp"

namespace beaconpark::parking {

class TimeSource {
public:
  virtual ~TimeSource() = default;
  virtual Timestamp now() = 0;
  /// Returns false when the clock cannot be moved by commands.
  virtual bool advance(std::chrono::seconds) { return false; }
};

class SystemTime : public TimeSource {
public:
  Timestamp now() override {
    return std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
  }
};

class SimulatedTime : public TimeSource {
public:
  explicit SimulatedTime(Timestamp start = Timestamp{}) : now_(start) {}
  Timestamp now() override { return now_; }
  bool advance(std::chrono::seconds by) override {
    now_ += by;
    return true;
  }

private:
  Timestamp now_;
};

namespace detail {

inline std::vector<std::string_view> split_words(std::string_view line) {
  std::vector<std::string_view> words;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    std::size_t end = pos;
    while (end < line.size() && line[end] != ' ' && line[end] != '\t') ++end;
    if (end > pos) words.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  return words;
}

inline std::optional<std::int64_t> parse_int(std::string_view text) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    return std::nullopt;
  }
  return value;
}

inline std::string_view error_code(Errc code) {
  switch (code) {
  case Errc::NoSuchSpot: return "NOSPOT";
  case Errc::SpotTaken: return "TAKEN";
  case Errc::CardRefused: return "CARD";
  case Errc::NotRegistered: return "NOTREG";
  case Errc::NotIllegal: return "NOTILLEGAL";
  case Errc::UnknownBeacon: return "UNKNOWN";
  case Errc::BadConfig:
  case Errc::BadRequest: return "SYNTAX";
  }
  return "INTERNAL";
}

} // namespace detail

/** Serializes commands from any number of connections onto one service.
 * Overstay expiry runs before every command at the current clock time. */
class CommandProcessor {
public:
  CommandProcessor(ParkingService& service, TimeSource& clock) : service_(service), clock_(clock) {}

  std::string handle(std::string_view line) {
    std::lock_guard lock(mutex_);
    try {
      service_.expire_overstays(clock_.now());
      return dispatch(detail::split_words(line));
    } catch (const ParkingError& e) {
      return "ERR " + std::string(detail::error_code(e.code())) + " " + e.what();
    } catch (const eddystone::FrameError& e) {
      return std::string("ERR FRAME ") + e.what();
    } catch (const std::invalid_argument& e) {
      return std::string("ERR SYNTAX ") + e.what();
    } catch (const std::exception& e) {
      return std::string("ERR INTERNAL ") + e.what();
    }
  }

private:
  std::string dispatch(const std::vector<std::string_view>& w) {
    if (w.empty()) {
      return "ERR SYNTAX empty command";
    }
    const auto& cmd = w[0];
    const auto now = clock_.now();
    if (cmd == "LIST" && w.size() == 1) {
      std::string out = "OK ";
      bool first = true;
      for (const auto& v : service_.list_spots()) {
        if (!first) out += ';';
        first = false;
        out += v.id.str() + ':' + std::string(to_string(v.state)) + ':' + std::to_string(v.rate_cents_per_hour);
      }
      return out;
    }
    if (cmd == "STATUS" && w.size() == 2) {
      const auto& s = service_.spot(SpotId::parse(w[1]));
      return "OK " + std::string(to_string(s.state)) + " " + std::to_string(s.config.rate_cents_per_hour);
    }
    if (cmd == "REGISTER" && (w.size() == 5 || w.size() == 6)) {
      std::optional<std::int64_t> max_minutes;
      if (w.size() == 6) {
        max_minutes = detail::parse_int(w[5]);
        if (!max_minutes) return "ERR SYNTAX max_minutes must be an integer";
      }
      UserProfile user{std::string(w[2]), std::string(w[3]), std::string(w[4])};
      auto session = service_.register_spot(SpotId::parse(w[1]), user, now, max_minutes);
      return "OK " + std::to_string(session.id);
    }
    if (cmd == "UNREGISTER" && w.size() == 2) {
      auto result = service_.unregister(SpotId::parse(w[1]), now);
      const auto cost = std::to_string(*result.session.cost_cents);
      return result.charged ? "OK " + cost : "ERR CHARGE " + cost;
    }
    if (cmd == "RESOLVE" && w.size() == 2) {
      auto bytes = eddystone::from_hex(w[1]);
      auto [spot, url] = service_.resolve_beacon(eddystone::decode_frame(bytes));
      return "OK " + spot.str() + " " + url;
    }
    if (cmd == "SETTLE" && w.size() == 2) {
      service_.settle(SpotId::parse(w[1]), now);
      return "OK";
    }
    if (cmd == "TICK" && w.size() == 2) {
      auto secs = detail::parse_int(w[1]);
      if (!secs || *secs < 0) return "ERR SYNTAX TICK needs a non-negative number of seconds";
      if (!clock_.advance(std::chrono::seconds(*secs))) {
        return "ERR UNSUPPORTED clock is not simulated";
      }
      service_.expire_overstays(clock_.now());
      return "OK " + std::to_string(clock_.now().time_since_epoch().count());
    }
    return "ERR SYNTAX unknown command or wrong arity";
  }

  ParkingService& service_;
  TimeSource& clock_;
  std::mutex mutex_;
};

} // namespace beaconpark::parking
