/* SPDX-License-Identifier: Apache-2.0 */
/* Copyright 2026 The beaconpark Authors */

/** Parking spot identifiers ("A3", "B12").
 * @file */

#pragma once

#include <charconv>
#include <compare>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace beaconpark {

/** A parking spot: one uppercase lot letter followed by a positive number. */
class SpotId {
public:
  SpotId(char lot, std::uint64_t number) : lot_(lot), number_(number) {
    if (lot < 'A' || lot > 'Z') {
      throw std::invalid_argument("spot lot must be an uppercase letter");
    }
    if (number == 0) {
      throw std::invalid_argument("spot number must be positive");
    }
  }

  char lot() const noexcept { return lot_; }
  std::uint64_t number() const noexcept { return number_; }

  std::string str() const { return lot_ + std::to_string(number_); }

  /// Parses "A3"; rejects leading zeros, signs and anything trailing.
  static SpotId parse(std::string_view text) {
    if (text.size() < 2 || text[1] == '0') {
      throw std::invalid_argument("malformed spot id '" + std::string(text) + "'");
    }
    std::uint64_t number = 0;
    auto digits = text.substr(1);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), number);
    if (ec != std::errc{} || ptr != digits.data() + digits.size()) {
      throw std::invalid_argument("malformed spot id '" + std::string(text) + "'");
    }
    return SpotId(text[0], number);
  }

  friend auto operator<=>(const SpotId&, const SpotId&) = default;

private:
  char lot_;
  std::uint64_t number_;
};

} // namespace beaconpark

template <>
struct std::hash<beaconpark::SpotId> {
  std::size_t operator()(const beaconpark::SpotId& id) const noexcept {
    return std::hash<std::uint64_t>{}((id.number() << 8) ^ static_cast<unsigned char>(id.lot()));
  }
};
