#pragma once

// Cyberspace coordinates: IPv4 addresses, IP-port pairs and AS numbers placed
// on Hilbert grids, plus the "1:/2n" scale notation.

#include "cybermap/hilbert.hpp"
#include "cybermap/ip.hpp"

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cybermap {

/// One grid square at a given order. Bijective with a /(2*order) prefix.
struct Cell {
  Order order{kMinOrder};
  uint32_t x = 0;
  uint32_t y = 0;

  GridPoint point() const noexcept { return {x, y}; }

  friend bool operator==(const Cell&, const Cell&) = default;
};

struct Asn {
  uint32_t value = 0;

  friend constexpr bool operator==(Asn, Asn) = default;
  friend constexpr auto operator<=>(Asn, Asn) = default;
};

struct IpPortCoord {
  Cell cell;
  PortNumber port;

  friend bool operator==(const IpPortCoord&, const IpPortCoord&) = default;
};

/// Thrown for AS numbers that do not fit the 16-bit AS grid.
class AsnOutOfRange : public std::out_of_range {
public:
  explicit AsnOutOfRange(Asn asn)
      : std::out_of_range("ASN " + std::to_string(asn.value) +
                          " exceeds the 16-bit AS grid"),
        asn_(asn) {}
  Asn asn() const noexcept { return asn_; }

private:
  Asn asn_;
};

inline constexpr Order kAsGridOrder{8};

inline uint64_t ip_to_index(IpV4Addr ip, Order order) noexcept {
  return uint64_t{ip.value} >> (32 - 2 * order.value());
}

inline Cell ip_to_cell(IpV4Addr ip, Order order) {
  const auto p = index_to_point(order, ip_to_index(ip, order));
  return Cell{order, p.x, p.y};
}

inline void check_cell(const Cell& cell) {
  detail::check_point(cell.order, cell.point());
}

inline Cidr cell_to_prefix(const Cell& cell) {
  const uint64_t index = point_to_index(cell.order, cell.point());
  const int len = 2 * cell.order.value();
  return Cidr(IpV4Addr{static_cast<uint32_t>(index << (32 - len))}, len);
}

/// The (at most two) squares covering exactly the addresses of `cidr`.
/// Odd-length prefixes split into their two even-length halves.
inline std::vector<Rect> prefix_to_region(const Cidr& cidr, Order order) {
  const int cell_len = 2 * order.value();
  if (cidr.len() > cell_len) {
    throw std::invalid_argument("prefix /" + std::to_string(cidr.len()) +
                                " is finer than the /" + std::to_string(cell_len) +
                                " cell resolution");
  }
  auto square = [&](const Cidr& even) {
    const int level = order.value() - even.len() / 2;
    const uint64_t block = ip_to_index(even.base(), order) >> (2 * level);
    return block_rect(order, block, level);
  };
  if (cidr.len() % 2 == 0) return {square(cidr)};
  const int half = cidr.len() + 1;
  const Cidr lo(cidr.base(), half);
  const Cidr hi(IpV4Addr{cidr.base().value | (uint32_t{1} << (32 - half))}, half);
  return {square(lo), square(hi)};
}

inline Cell asn_to_cell(Asn asn) {
  if (asn.value >= (uint32_t{1} << 16)) throw AsnOutOfRange(asn);
  const auto p = index_to_point(kAsGridOrder, asn.value);
  return Cell{kAsGridOrder, p.x, p.y};
}

inline Asn cell_to_asn(const Cell& cell) {
  if (cell.order != kAsGridOrder) {
    throw std::invalid_argument("AS cells live on the order-8 grid");
  }
  return Asn{static_cast<uint32_t>(point_to_index(kAsGridOrder, cell.point()))};
}

inline IpPortCoord ipport_coord(IpV4Addr ip, PortNumber port, Order order) {
  return IpPortCoord{ip_to_cell(ip, order), port};
}

/// The four order+1 cells refining `cell`, in curve order. Empty at order 16.
inline std::vector<Cell> child_cells(const Cell& cell) {
  if (cell.order.value() == kMaxOrder) return {};
  const Order child_order{cell.order.value() + 1};
  const uint64_t first = point_to_index(cell.order, cell.point()) << 2;
  std::vector<Cell> children;
  for (uint64_t i = 0; i < 4; ++i) {
    const auto p = index_to_point(child_order, first + i);
    children.push_back(Cell{child_order, p.x, p.y});
  }
  return children;
}

inline std::string scale_notation(Order order) {
  return "1:/" + std::to_string(2 * order.value());
}

/// Parses "1:/2n" back into order n. Odd prefix lengths are rejected because
/// they do not describe a square cell.
inline Order parse_scale(std::string_view text) {
  constexpr std::string_view prefix = "1:/";
  if (text.substr(0, prefix.size()) != prefix) {
    throw std::invalid_argument("scale must look like 1:/<len>, got '" +
                                std::string(text) + "'");
  }
  const auto len = detail::parse_uint(text.substr(prefix.size()), 32);
  if (!len || *len == 0) {
    throw std::invalid_argument("scale prefix length must be in [2, 32], got '" +
                                std::string(text) + "'");
  }
  if (*len % 2 != 0) {
    throw std::invalid_argument("scale /" + std::to_string(*len) +
                                " is odd and has no square cell");
  }
  return Order(static_cast<int>(*len / 2));
}

} // namespace cybermap
