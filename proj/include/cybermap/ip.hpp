#pragma once

// IPv4 addresses and aligned CIDR prefixes with their text forms.

#include <charconv>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cybermap {

struct IpV4Addr {
  uint32_t value = 0;

  friend constexpr bool operator==(IpV4Addr, IpV4Addr) = default;
  friend constexpr auto operator<=>(IpV4Addr, IpV4Addr) = default;
};

struct PortNumber {
  uint16_t value = 0;

  friend constexpr bool operator==(PortNumber, PortNumber) = default;
};

class Cidr {
public:
  constexpr Cidr() = default;

  /// Throws std::invalid_argument unless base has no bits set below the prefix.
  constexpr Cidr(IpV4Addr base, int len) : base_(base), len_(len) {
    if (len < 0 || len > 32) {
      throw std::invalid_argument("prefix length " + std::to_string(len) +
                                  " outside [0, 32]");
    }
    if ((base.value & ~netmask(len)) != 0) {
      throw std::invalid_argument("prefix base has host bits set");
    }
  }

  /// The prefix of length `len` that contains `ip`.
  static constexpr Cidr containing(IpV4Addr ip, int len) {
    return Cidr(IpV4Addr{ip.value & netmask(len)}, len);
  }

  constexpr IpV4Addr base() const noexcept { return base_; }
  constexpr int len() const noexcept { return len_; }
  constexpr uint64_t size() const noexcept { return uint64_t{1} << (32 - len_); }
  constexpr IpV4Addr last() const noexcept {
    return IpV4Addr{static_cast<uint32_t>(base_.value + (size() - 1))};
  }
  constexpr bool contains(IpV4Addr ip) const noexcept {
    return (ip.value & netmask(len_)) == base_.value;
  }
  constexpr bool contains(const Cidr& other) const noexcept {
    return other.len_ >= len_ && contains(other.base_);
  }

  static constexpr uint32_t netmask(int len) noexcept {
    return len == 0 ? 0u : ~uint32_t{0} << (32 - len);
  }

  friend constexpr bool operator==(const Cidr&, const Cidr&) = default;
  friend constexpr auto operator<=>(const Cidr&, const Cidr&) = default;

private:
  IpV4Addr base_{};
  int len_ = 0;
};

namespace detail {

inline std::optional<uint32_t> parse_uint(std::string_view s, uint32_t max) {
  if (s.empty() || s.size() > 10) return std::nullopt;
  uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || v > max) {
    return std::nullopt;
  }
  return static_cast<uint32_t>(v);
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

} // namespace detail

inline std::optional<IpV4Addr> try_parse_ip(std::string_view text) {
  text = detail::trim(text);
  uint32_t value = 0;
  for (int octet = 0; octet < 4; ++octet) {
    const auto dot = text.find('.');
    const bool last = octet == 3;
    if (last != (dot == std::string_view::npos)) return std::nullopt;
    const auto part = last ? text : text.substr(0, dot);
    // Leading zeros are rejected to avoid octal ambiguity.
    if (part.size() > 1 && part.front() == '0') return std::nullopt;
    const auto v = detail::parse_uint(part, 255);
    if (!v) return std::nullopt;
    value = (value << 8) | *v;
    if (!last) text.remove_prefix(dot + 1);
  }
  return IpV4Addr{value};
}

inline IpV4Addr parse_ip(std::string_view text) {
  if (auto ip = try_parse_ip(text)) return *ip;
  throw std::invalid_argument("malformed IPv4 address '" + std::string(text) + "'");
}

inline std::string to_string(IpV4Addr ip) {
  std::string out;
  for (int shift = 24; shift >= 0; shift -= 8) {
    out += std::to_string((ip.value >> shift) & 0xff);
    if (shift) out += '.';
  }
  return out;
}

/// Parses `a.b.c.d/len`. Misaligned bases are rejected, not masked.
inline std::optional<Cidr> try_parse_cidr(std::string_view text) {
  text = detail::trim(text);
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return std::nullopt;
  const auto ip = try_parse_ip(text.substr(0, slash));
  const auto len = detail::parse_uint(text.substr(slash + 1), 32);
  if (!ip || !len) return std::nullopt;
  if ((ip->value & ~Cidr::netmask(static_cast<int>(*len))) != 0) return std::nullopt;
  return Cidr(*ip, static_cast<int>(*len));
}

inline Cidr parse_cidr(std::string_view text) {
  if (auto c = try_parse_cidr(text)) return *c;
  throw std::invalid_argument("malformed or misaligned CIDR '" + std::string(text) + "'");
}

inline std::string to_string(const Cidr& c) {
  return to_string(c.base()) + "/" + std::to_string(c.len());
}

} // namespace cybermap
