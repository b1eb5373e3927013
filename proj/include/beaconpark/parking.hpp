/* SPDX-License-Identifier: Apache-2.0 */
/* Copyright 2026 The beaconpark Authors */

/** Parking lot registry: spot occupancy, timed sessions, billing and the
 * admin alerts raised by payment failures and overstays.
 *
 * Every state change is expressed as a journal event and applied through
 * the same path on the live service and on replay, so a journal replayed
 * onto a fresh lot reproduces the registry exactly.
 *
 * Transitions:
 *   Available -> Occupied            register
 *   Occupied  -> Available | Illegal unregister, overstay expiry
 *   Illegal   -> Available           settle
 * @file */

#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "eddystone.hpp"
#include "spot_id.hpp"

namespace beaconpark::parking {

using Timestamp = std::chrono::sys_seconds;

enum class SpotState { Available, Occupied, Illegal };

inline std::string_view to_string(SpotState s) {
  switch (s) {
  case SpotState::Available: return "available";
  case SpotState::Occupied: return "occupied";
  case SpotState::Illegal: return "illegal";
  }
  return "?";
}

enum class Errc { NoSuchSpot, SpotTaken, CardRefused, NotRegistered, NotIllegal, UnknownBeacon, BadConfig, BadRequest };

class ParkingError : public std::runtime_error {
public:
  ParkingError(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

struct UserProfile {
  std::string user_id;
  std::string vehicle_plate;
  std::string card_token;

  friend bool operator==(const UserProfile&, const UserProfile&) = default;
};

struct Session {
  std::uint64_t id = 0;
  std::string user_id;
  std::string vehicle_plate;
  Timestamp start{};
  std::optional<Timestamp> end;
  std::optional<std::int64_t> max_minutes;
  std::optional<std::int64_t> cost_cents;

  friend bool operator==(const Session&, const Session&) = default;
};

struct BeaconUid {
  std::array<std::uint8_t, 10> namespace_id{};
  std::array<std::uint8_t, 6> instance{};

  friend auto operator<=>(const BeaconUid&, const BeaconUid&) = default;
};

struct SpotConfig {
  SpotId id;
  BeaconUid beacon;
  std::string url;
  std::int64_t rate_cents_per_hour = 0;
};

struct LotConfig {
  std::vector<SpotConfig> spots;

  void validate() const {
    std::set<SpotId> ids;
    std::set<BeaconUid> beacons;
    std::set<std::string> urls;
    for (const auto& s : spots) {
      if (!ids.insert(s.id).second) {
        throw ParkingError(Errc::BadConfig, "duplicate spot " + s.id.str());
      }
      if (!beacons.insert(s.beacon).second) {
        throw ParkingError(Errc::BadConfig, "duplicate beacon uid on spot " + s.id.str());
      }
      if (s.url.empty() || !urls.insert(s.url).second) {
        throw ParkingError(Errc::BadConfig, "spot " + s.id.str() + " needs a unique, non-empty url");
      }
      if (s.rate_cents_per_hour < 0) {
        throw ParkingError(Errc::BadConfig, "negative rate on spot " + s.id.str());
      }
    }
  }
};

struct Spot {
  SpotConfig config;
  SpotState state = SpotState::Available;
  std::optional<Session> session; ///< present unless Available
};

struct SpotView {
  SpotId id;
  SpotState state;
  std::int64_t rate_cents_per_hour;
  std::optional<std::string> user_id;
};

enum class AlertKind { ChargeFailed, Overstay };

struct AdminAlert {
  AlertKind kind;
  SpotId spot;
  std::uint64_t session_id;
  Timestamp at;

  friend bool operator==(const AdminAlert&, const AdminAlert&) = default;
};

class PaymentGateway {
public:
  virtual ~PaymentGateway() = default;
  virtual bool validate_card(const std::string& token) = 0;
  virtual bool charge(const std::string& token, std::int64_t cents) = 0;
};

/// Deterministic stand-in: "DECLINE" fails validation and charges,
/// "NOFUNDS" validates but every charge fails, anything else succeeds.
class StubPayment : public PaymentGateway {
public:
  static constexpr std::string_view kDecline = "DECLINE";
  static constexpr std::string_view kNoFunds = "NOFUNDS";

  bool validate_card(const std::string& token) override { return token != kDecline; }

  bool charge(const std::string& token, std::int64_t cents) override {
    const bool ok = token != kDecline && token != kNoFunds;
    if (ok) {
      charges.emplace_back(token, cents);
    }
    return ok;
  }

  std::vector<std::pair<std::string, std::int64_t>> charges;
};

/// Elapsed time in whole minutes; a started minute counts in full.
inline std::int64_t billable_minutes(Timestamp start, Timestamp end) {
  const auto secs = (end - start).count();
  return secs <= 0 ? 0 : (secs + 59) / 60;
}

/// ceil(rate * minutes / 60) in cents.
inline std::int64_t session_cost(std::int64_t rate_cents_per_hour, std::int64_t minutes) {
  return (rate_cents_per_hour * minutes + 59) / 60;
}

struct CloseResult {
  Session session;
  bool charged = false;
};

class ParkingService {
public:
  using Json = nlohmann::json;
  using JournalSink = std::function<void(const Json&)>;

  ParkingService(const LotConfig& lot, PaymentGateway& payment, JournalSink journal = {})
      : payment_(payment), journal_(std::move(journal)) {
    lot.validate();
    for (const auto& cfg : lot.spots) {
      spots_.emplace(cfg.id, Spot{cfg, SpotState::Available, std::nullopt});
      by_beacon_.emplace(cfg.beacon, cfg.id);
      by_url_.emplace(cfg.url, cfg.id);
    }
  }

  /// Rebuilds a service by applying every journal line in order.
  static ParkingService replay(const LotConfig& lot, PaymentGateway& payment, std::istream& journal,
                               JournalSink sink = {}) {
    ParkingService service(lot, payment);
    std::string line;
    while (std::getline(journal, line)) {
      if (!line.empty()) {
        service.apply(Json::parse(line));
      }
    }
    service.journal_ = std::move(sink);
    return service;
  }

  std::vector<SpotView> list_spots() const {
    std::vector<SpotView> out;
    out.reserve(spots_.size());
    for (const auto& [id, spot] : spots_) {
      std::optional<std::string> user;
      if (spot.session) {
        user = spot.session->user_id;
      }
      out.push_back({id, spot.state, spot.config.rate_cents_per_hour, user});
    }
    return out;
  }

  const Spot& spot(const SpotId& id) const { return find(id); }

  std::size_t count(SpotState state) const {
    std::size_t n = 0;
    for (const auto& [id, spot] : spots_) {
      n += spot.state == state ? 1 : 0;
    }
    return n;
  }

  std::size_t size() const noexcept { return spots_.size(); }

  const std::map<std::string, UserProfile>& users() const noexcept { return users_; }
  const std::vector<AdminAlert>& alerts() const noexcept { return alerts_; }

  /// Latest timestamp carried by any applied event.
  std::optional<Timestamp> last_event_time() const noexcept { return last_event_; }

  Session register_spot(const SpotId& id, const UserProfile& user, Timestamp now,
                        std::optional<std::int64_t> max_minutes = std::nullopt) {
    const auto& s = find(id);
    if (s.state != SpotState::Available) {
      throw ParkingError(Errc::SpotTaken, "spot " + id.str() + " is already in use");
    }
    if (max_minutes && *max_minutes <= 0) {
      throw ParkingError(Errc::BadRequest, "maximum parking time must be positive");
    }
    if (!payment_.validate_card(user.card_token)) {
      throw ParkingError(Errc::CardRefused, "card refused");
    }
    Json ev = {{"ev", "register"},   {"spot", id.str()},
               {"session", next_session_}, {"user", user.user_id},
               {"plate", user.vehicle_plate}, {"card", user.card_token},
               {"start", now.time_since_epoch().count()}};
    ev["max"] = max_minutes ? Json(*max_minutes) : Json(nullptr);
    commit(ev);
    return *find(id).session;
  }

  CloseResult unregister(const SpotId& id, Timestamp now) {
    const auto& s = find(id);
    if (s.state != SpotState::Occupied) {
      throw ParkingError(Errc::NotRegistered, "spot " + id.str() + " has no active registration");
    }
    return close(id, std::max(now, s.session->start), "unregister");
  }

  /// Force-closes every session past its limit, billed up to the limit.
  std::vector<SpotId> expire_overstays(Timestamp now) {
    std::vector<SpotId> expired;
    for (const auto& [id, spot] : spots_) {
      if (spot.state == SpotState::Occupied && spot.session->max_minutes) {
        const auto limit = spot.session->start + std::chrono::minutes(*spot.session->max_minutes);
        if (now > limit) {
          expired.push_back(id);
        }
      }
    }
    for (const auto& id : expired) {
      const auto& session = *find(id).session;
      close(id, session.start + std::chrono::minutes(*session.max_minutes), "overstay");
    }
    return expired;
  }

  /// Admin action clearing an illegally parked spot once the fee is paid.
  void settle(const SpotId& id, Timestamp now) {
    if (find(id).state != SpotState::Illegal) {
      throw ParkingError(Errc::NotIllegal, "spot " + id.str() + " is not marked illegal");
    }
    commit({{"ev", "settle"}, {"spot", id.str()}, {"at", now.time_since_epoch().count()}});
  }

  /// Spot and registration url advertised by a UID or URL frame.
  std::pair<SpotId, std::string> resolve_beacon(const eddystone::BeaconFrame& frame) const {
    std::optional<SpotId> id;
    if (const auto* uid = std::get_if<eddystone::UidFrame>(&frame)) {
      auto it = by_beacon_.find(BeaconUid{uid->namespace_id, uid->instance});
      if (it != by_beacon_.end()) {
        id = it->second;
      }
    } else if (const auto* url = std::get_if<eddystone::UrlFrame>(&frame)) {
      try {
        auto it = by_url_.find(eddystone::decode_url(url->scheme_prefix, url->encoded_body));
        if (it != by_url_.end()) {
          id = it->second;
        }
      } catch (const eddystone::FrameError&) {
      }
    }
    if (!id) {
      throw ParkingError(Errc::UnknownBeacon, "unregistered beacon");
    }
    return {*id, find(*id).config.url};
  }

  /// Applies one journal event. Used by replay; live commands go through commit().
  void apply(const Json& ev) {
    const auto kind = ev.at("ev").get<std::string>();
    auto& s = find(SpotId::parse(ev.at("spot").get<std::string>()));
    for (const char* key : {"start", "end", "at"}) {
      if (ev.contains(key)) {
        const Timestamp t(std::chrono::seconds(ev[key].get<std::int64_t>()));
        last_event_ = last_event_ ? std::max(*last_event_, t) : t;
      }
    }
    if (kind == "register") {
      Session session;
      session.id = ev.at("session").get<std::uint64_t>();
      session.user_id = ev.at("user").get<std::string>();
      session.vehicle_plate = ev.at("plate").get<std::string>();
      session.start = Timestamp(std::chrono::seconds(ev.at("start").get<std::int64_t>()));
      if (!ev.at("max").is_null()) {
        session.max_minutes = ev.at("max").get<std::int64_t>();
      }
      users_[session.user_id] = {session.user_id, session.vehicle_plate, ev.at("card").get<std::string>()};
      s.state = SpotState::Occupied;
      s.session = std::move(session);
      next_session_ = std::max(next_session_, s.session->id + 1);
    } else if (kind == "close") {
      const auto end = Timestamp(std::chrono::seconds(ev.at("end").get<std::int64_t>()));
      s.session->end = end;
      s.session->cost_cents = ev.at("cost").get<std::int64_t>();
      const bool charged = ev.at("charged").get<bool>();
      if (ev.at("reason").get<std::string>() == "overstay") {
        alerts_.push_back({AlertKind::Overstay, s.config.id, s.session->id, end});
      }
      if (charged) {
        s.state = SpotState::Available;
        s.session.reset();
      } else {
        s.state = SpotState::Illegal;
        alerts_.push_back({AlertKind::ChargeFailed, s.config.id, s.session->id, end});
      }
    } else if (kind == "settle") {
      s.state = SpotState::Available;
      s.session.reset();
    } else {
      throw std::invalid_argument("unknown journal event '" + kind + "'");
    }
  }

  /// Registry state as JSON; equal snapshots mean equal registries.
  Json snapshot() const {
    Json spots = Json::array();
    for (const auto& [id, s] : spots_) {
      Json entry = {{"spot", id.str()}, {"state", to_string(s.state)}};
      if (s.session) {
        entry["session"] = {{"id", s.session->id},
                            {"user", s.session->user_id},
                            {"plate", s.session->vehicle_plate},
                            {"start", s.session->start.time_since_epoch().count()},
                            {"max", s.session->max_minutes ? Json(*s.session->max_minutes) : Json(nullptr)},
                            {"cost", s.session->cost_cents ? Json(*s.session->cost_cents) : Json(nullptr)}};
      }
      spots.push_back(std::move(entry));
    }
    Json alerts = Json::array();
    for (const auto& a : alerts_) {
      alerts.push_back({static_cast<int>(a.kind), a.spot.str(), a.session_id, a.at.time_since_epoch().count()});
    }
    return {{"spots", spots}, {"alerts", alerts}, {"next_session", next_session_}};
  }

private:
  Spot& find(const SpotId& id) {
    auto it = spots_.find(id);
    if (it == spots_.end()) {
      throw ParkingError(Errc::NoSuchSpot, "no spot " + id.str());
    }
    return it->second;
  }

  const Spot& find(const SpotId& id) const { return const_cast<ParkingService*>(this)->find(id); }

  CloseResult close(const SpotId& id, Timestamp end, const char* reason) {
    const auto& s = find(id);
    const auto cost = session_cost(s.config.rate_cents_per_hour, billable_minutes(s.session->start, end));
    const auto& token = users_.at(s.session->user_id).card_token;
    const bool charged = payment_.charge(token, cost);

    Session completed = *s.session;
    completed.end = end;
    completed.cost_cents = cost;
    commit({{"ev", "close"},
            {"spot", id.str()},
            {"end", end.time_since_epoch().count()},
            {"cost", cost},
            {"charged", charged},
            {"reason", reason}});
    return {completed, charged};
  }

  void commit(const Json& ev) {
    apply(ev);
    if (journal_) {
      journal_(ev);
    }
  }

  PaymentGateway& payment_;
  JournalSink journal_;
  std::map<SpotId, Spot> spots_;
  std::map<BeaconUid, SpotId> by_beacon_;
  std::map<std::string, SpotId> by_url_;
  std::map<std::string, UserProfile> users_;
  std::vector<AdminAlert> alerts_;
  std::uint64_t next_session_ = 1;
  std::optional<Timestamp> last_event_;
};

} // namespace beaconpark::parking
