/* SPDX-License-Identifier: Apache-2.0 */
/* Copyright 2026 The beaconpark Authors */

/** Eddystone UID/URL/TLM service-data codec and the spot-id convention
 * carried in UID instance ids.
 *
 * Layouts (big-endian multi-byte fields):
 * * UID: 0x00, tx@0m, namespace[10], instance[6]  (18 octets; a 20-octet
 *   form with two zero RFU octets is also accepted on decode)
 * * URL: 0x10, tx@0m, scheme, body[0..17]
 * * TLM: 0x20, version 0x00, battery mV[2], temperature 8.8[2],
 *   adv count[4], uptime 0.1s[4]  (14 octets)
 *
 * EID (0x30) is recognised only so it can be rejected distinctly.
 * @file */

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "spot_id.hpp"

namespace beaconpark::eddystone {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::uint8_t kFrameTypeUid = 0x00;
inline constexpr std::uint8_t kFrameTypeUrl = 0x10;
inline constexpr std::uint8_t kFrameTypeTlm = 0x20;
inline constexpr std::uint8_t kFrameTypeEid = 0x30;

inline constexpr std::size_t kUidFrameSize = 18;
inline constexpr std::size_t kUidFrameSizeWithRfu = 20;
inline constexpr std::size_t kTlmFrameSize = 14;
inline constexpr std::size_t kUrlHeaderSize = 3;
inline constexpr std::size_t kMaxUrlBody = 17;

enum class FrameErrc {
  Truncated,
  UnknownFrameType,
  UnsupportedEid,
  TrailingBytes,
  BadUrlScheme,
  BadTlmVersion,
  UrlTooLong,
  BadUrl,
  NotUidFrame,
  BadSpotInstance,
  BadHex,
};

class FrameError : public std::runtime_error {
public:
  FrameError(FrameErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  FrameErrc code() const noexcept { return code_; }

private:
  FrameErrc code_;
};

struct UidFrame {
  std::array<std::uint8_t, 10> namespace_id{};
  std::array<std::uint8_t, 6> instance{};
  std::int8_t tx_power_at_0m = 0;

  friend bool operator==(const UidFrame&, const UidFrame&) = default;
};

struct UrlFrame {
  std::uint8_t scheme_prefix = 0; ///< 0x00..0x03
  Bytes encoded_body;             ///< at most 17 octets
  std::int8_t tx_power_at_0m = 0;

  friend bool operator==(const UrlFrame&, const UrlFrame&) = default;
};

/// Signed 8.8 fixed point, as carried on the wire.
struct Fixed88 {
  std::int16_t raw = 0;

  double celsius() const noexcept { return raw / 256.0; }
  static Fixed88 from_celsius(double c) {
    double scaled = c * 256.0;
    if (!(scaled >= -32768.0 && scaled <= 32767.0)) {
      throw std::out_of_range("temperature outside 8.8 fixed-point range");
    }
    return Fixed88{static_cast<std::int16_t>(scaled)};
  }

  friend bool operator==(const Fixed88&, const Fixed88&) = default;
};

struct TlmFrame {
  std::uint16_t battery_mv = 0;
  Fixed88 temperature{};
  std::uint32_t adv_count = 0;
  std::uint32_t uptime_decis = 0;

  friend bool operator==(const TlmFrame&, const TlmFrame&) = default;
};

using BeaconFrame = std::variant<UidFrame, UrlFrame, TlmFrame>;

struct EncodedUrl {
  std::uint8_t scheme_prefix = 0;
  Bytes body;

  friend bool operator==(const EncodedUrl&, const EncodedUrl&) = default;
};

namespace detail {

inline constexpr std::array<std::string_view, 4> kSchemes = {
    "http://www.", "https://www.", "http://", "https://"};

inline constexpr std::array<std::string_view, 14> kExpansions = {
    ".com/", ".org/", ".edu/", ".net/", ".info/", ".biz/", ".gov/",
    ".com",  ".org",  ".edu",  ".net",  ".info",  ".biz",  ".gov"};

inline void put_be(Bytes& out, std::uint64_t value, int octets) {
  for (int shift = (octets - 1) * 8; shift >= 0; shift -= 8) {
    out.push_back(static_cast<std::uint8_t>(value >> shift));
  }
}

inline std::uint64_t get_be(std::span<const std::uint8_t> in, std::size_t at, int octets) {
  std::uint64_t value = 0;
  for (int i = 0; i < octets; ++i) {
    value = (value << 8) | in[at + i];
  }
  return value;
}

inline void require_size(std::span<const std::uint8_t> bytes, std::size_t need, const char* what) {
  if (bytes.size() < need) {
    throw FrameError(FrameErrc::Truncated, std::string("truncated ") + what + " frame");
  }
}

inline void require_exact(std::span<const std::uint8_t> bytes, std::size_t size, const char* what) {
  require_size(bytes, size, what);
  if (bytes.size() > size) {
    throw FrameError(FrameErrc::TrailingBytes, std::string("trailing bytes after ") + what + " frame");
  }
}

} // namespace detail

/** Compresses @p url into a scheme code and an expansion-coded body.
 *
 * The longest matching scheme is taken, then the body is scanned left to
 * right replacing the longest expansion at each position. */
inline EncodedUrl encode_url(std::string_view url) {
  std::optional<std::uint8_t> scheme;
  std::size_t scheme_len = 0;
  for (std::size_t i = 0; i < detail::kSchemes.size(); ++i) {
    auto s = detail::kSchemes[i];
    if (url.starts_with(s) && s.size() > scheme_len) {
      scheme = static_cast<std::uint8_t>(i);
      scheme_len = s.size();
    }
  }
  if (!scheme) {
    throw FrameError(FrameErrc::BadUrl, "unrecognized URL scheme in '" + std::string(url) + "'");
  }

  EncodedUrl out{*scheme, {}};
  auto rest = url.substr(scheme_len);
  std::size_t pos = 0;
  while (pos < rest.size()) {
    std::size_t best = detail::kExpansions.size();
    for (std::size_t code = 0; code < detail::kExpansions.size(); ++code) {
      auto e = detail::kExpansions[code];
      if (rest.substr(pos).starts_with(e) &&
          (best == detail::kExpansions.size() || e.size() > detail::kExpansions[best].size())) {
        best = code;
      }
    }
    if (best != detail::kExpansions.size()) {
      out.body.push_back(static_cast<std::uint8_t>(best));
      pos += detail::kExpansions[best].size();
      continue;
    }
    auto c = static_cast<unsigned char>(rest[pos]);
    if (c < 0x21 || c > 0x7E) {
      throw FrameError(FrameErrc::BadUrl, "URL character not encodable");
    }
    out.body.push_back(c);
    ++pos;
  }
  if (out.body.size() > kMaxUrlBody) {
    throw FrameError(FrameErrc::UrlTooLong, "encoded URL body exceeds 17 bytes");
  }
  return out;
}

inline std::string decode_url(std::uint8_t scheme_prefix, std::span<const std::uint8_t> body) {
  if (scheme_prefix >= detail::kSchemes.size()) {
    throw FrameError(FrameErrc::BadUrlScheme, "URL scheme code out of range");
  }
  std::string url(detail::kSchemes[scheme_prefix]);
  for (auto b : body) {
    if (b < detail::kExpansions.size()) {
      url += detail::kExpansions[b];
    } else if (b >= 0x21 && b <= 0x7E) {
      url += static_cast<char>(b);
    } else {
      throw FrameError(FrameErrc::BadUrl, "reserved URL body code");
    }
  }
  return url;
}

inline std::string decode_url(const EncodedUrl& encoded) {
  return decode_url(encoded.scheme_prefix, encoded.body);
}

inline Bytes encode_frame(const BeaconFrame& frame) {
  Bytes out;
  std::visit(
      [&out](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, UidFrame>) {
          out.reserve(kUidFrameSize);
          out.push_back(kFrameTypeUid);
          out.push_back(static_cast<std::uint8_t>(f.tx_power_at_0m));
          out.insert(out.end(), f.namespace_id.begin(), f.namespace_id.end());
          out.insert(out.end(), f.instance.begin(), f.instance.end());
        } else if constexpr (std::is_same_v<T, UrlFrame>) {
          if (f.scheme_prefix >= detail::kSchemes.size()) {
            throw FrameError(FrameErrc::BadUrlScheme, "URL scheme code out of range");
          }
          if (f.encoded_body.size() > kMaxUrlBody) {
            throw FrameError(FrameErrc::UrlTooLong, "encoded URL body exceeds 17 bytes");
          }
          out.push_back(kFrameTypeUrl);
          out.push_back(static_cast<std::uint8_t>(f.tx_power_at_0m));
          out.push_back(f.scheme_prefix);
          out.insert(out.end(), f.encoded_body.begin(), f.encoded_body.end());
        } else {
          out.reserve(kTlmFrameSize);
          out.push_back(kFrameTypeTlm);
          out.push_back(0x00);
          detail::put_be(out, f.battery_mv, 2);
          detail::put_be(out, static_cast<std::uint16_t>(f.temperature.raw), 2);
          detail::put_be(out, f.adv_count, 4);
          detail::put_be(out, f.uptime_decis, 4);
        }
      },
      frame);
  return out;
}

/// Strict decode: the byte span must hold exactly one frame.
inline BeaconFrame decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) {
    throw FrameError(FrameErrc::Truncated, "truncated: empty frame");
  }
  switch (bytes[0]) {
  case kFrameTypeUid: {
    detail::require_size(bytes, kUidFrameSize, "UID");
    if (bytes.size() == kUidFrameSizeWithRfu) {
      if (bytes[18] != 0 || bytes[19] != 0) {
        throw FrameError(FrameErrc::TrailingBytes, "trailing bytes after UID frame");
      }
    } else {
      detail::require_exact(bytes, kUidFrameSize, "UID");
    }
    UidFrame f;
    f.tx_power_at_0m = static_cast<std::int8_t>(bytes[1]);
    std::copy_n(bytes.begin() + 2, 10, f.namespace_id.begin());
    std::copy_n(bytes.begin() + 12, 6, f.instance.begin());
    return f;
  }
  case kFrameTypeUrl: {
    detail::require_size(bytes, kUrlHeaderSize, "URL");
    if (bytes.size() > kUrlHeaderSize + kMaxUrlBody) {
      throw FrameError(FrameErrc::TrailingBytes, "trailing bytes after URL frame");
    }
    if (bytes[2] >= detail::kSchemes.size()) {
      throw FrameError(FrameErrc::BadUrlScheme, "URL scheme code out of range");
    }
    UrlFrame f;
    f.tx_power_at_0m = static_cast<std::int8_t>(bytes[1]);
    f.scheme_prefix = bytes[2];
    f.encoded_body.assign(bytes.begin() + kUrlHeaderSize, bytes.end());
    return f;
  }
  case kFrameTypeTlm: {
    detail::require_exact(bytes, kTlmFrameSize, "TLM");
    if (bytes[1] != 0x00) {
      throw FrameError(FrameErrc::BadTlmVersion, "unsupported TLM version");
    }
    TlmFrame f;
    f.battery_mv = static_cast<std::uint16_t>(detail::get_be(bytes, 2, 2));
    f.temperature.raw = static_cast<std::int16_t>(detail::get_be(bytes, 4, 2));
    f.adv_count = static_cast<std::uint32_t>(detail::get_be(bytes, 6, 4));
    f.uptime_decis = static_cast<std::uint32_t>(detail::get_be(bytes, 10, 4));
    return f;
  }
  case kFrameTypeEid:
    throw FrameError(FrameErrc::UnsupportedEid, "unknown frame type: EID (0x30) is not supported");
  default:
    throw FrameError(FrameErrc::UnknownFrameType, "unknown frame type");
  }
}

// ---------------------- Spot id convention ----------------------

/// Instance id layout: ASCII lot letter, then a 40-bit big-endian spot number.
inline std::array<std::uint8_t, 6> instance_for_spot(const SpotId& spot) {
  if (spot.number() >= (std::uint64_t{1} << 40)) {
    throw FrameError(FrameErrc::BadSpotInstance, "spot number does not fit in 40 bits");
  }
  std::array<std::uint8_t, 6> inst{};
  inst[0] = static_cast<std::uint8_t>(spot.lot());
  for (int i = 0; i < 5; ++i) {
    inst[5 - i] = static_cast<std::uint8_t>(spot.number() >> (8 * i));
  }
  return inst;
}

inline SpotId spot_id_from_instance(const std::array<std::uint8_t, 6>& inst) {
  if (inst[0] < 'A' || inst[0] > 'Z') {
    throw FrameError(FrameErrc::BadSpotInstance, "instance byte 0 is not an uppercase lot letter");
  }
  std::uint64_t number = detail::get_be(inst, 1, 5);
  if (number == 0) {
    throw FrameError(FrameErrc::BadSpotInstance, "spot number is zero");
  }
  return SpotId(static_cast<char>(inst[0]), number);
}

inline SpotId spot_id_from_uid(const BeaconFrame& frame) {
  const auto* uid = std::get_if<UidFrame>(&frame);
  if (uid == nullptr) {
    throw FrameError(FrameErrc::NotUidFrame, "spot ids are carried only by UID frames");
  }
  return spot_id_from_instance(uid->instance);
}

// ---------------------- Hex and debug rendering ----------------------

inline std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out += kDigits[b >> 4];
    out += kDigits[b & 0x0F];
  }
  return out;
}

inline Bytes from_hex(std::string_view hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (hex.size() % 2 != 0) {
    throw FrameError(FrameErrc::BadHex, "odd-length hex string");
  }
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = nibble(hex[i]);
    int lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) {
      throw FrameError(FrameErrc::BadHex, "invalid hex digit");
    }
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

/// Single-token rendering used by the golden vectors, e.g.
/// `UID{ns=...,inst=...,tx=-65}`.
inline std::string debug_string(const BeaconFrame& frame) {
  return std::visit(
      [](const auto& f) -> std::string {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, UidFrame>) {
          return "UID{ns=" + to_hex(f.namespace_id) + ",inst=" + to_hex(f.instance) +
                 ",tx=" + std::to_string(f.tx_power_at_0m) + "}";
        } else if constexpr (std::is_same_v<T, UrlFrame>) {
          std::string url;
          try {
            url = decode_url(f.scheme_prefix, f.encoded_body);
          } catch (const FrameError&) {
            url = "?";
          }
          return "URL{scheme=" + std::to_string(f.scheme_prefix) + ",body=" + to_hex(f.encoded_body) +
                 ",url=" + url + ",tx=" + std::to_string(f.tx_power_at_0m) + "}";
        } else {
          return "TLM{batt=" + std::to_string(f.battery_mv) +
                 ",temp=" + std::to_string(f.temperature.raw) +
                 ",adv=" + std::to_string(f.adv_count) + ",uptime=" + std::to_string(f.uptime_decis) + "}";
        }
      },
      frame);
}

} // namespace beaconpark::eddystone
