#pragma once

// Hilbert and Morton (z-order) mappings between curve indices and 2-D lattice
// points.
//
// Orientation: index 0 sits at (0,0), the first step goes to (0,1), and the
// last index 4^n-1 sits at (2^n-1, 0). The y axis points up; screen flipping
// is left to the renderer.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cybermap {

inline constexpr int kMinOrder = 1;
inline constexpr int kMaxOrder = 16;

/// Curve order (recursion depth). A curve of order n covers a 2^n x 2^n grid.
class Order {
public:
  constexpr explicit Order(int n) : n_(n) {
    if (n < kMinOrder || n > kMaxOrder) {
      throw std::out_of_range("curve order " + std::to_string(n) +
                              " outside [1, 16]");
    }
  }

  constexpr int value() const noexcept { return n_; }
  constexpr uint32_t side() const noexcept { return uint32_t{1} << n_; }
  constexpr uint64_t cell_count() const noexcept { return uint64_t{1} << (2 * n_); }

  friend constexpr bool operator==(Order, Order) = default;
  friend constexpr auto operator<=>(Order, Order) = default;

private:
  int n_;
};

struct GridPoint {
  uint32_t x = 0;
  uint32_t y = 0;

  friend constexpr bool operator==(const GridPoint&, const GridPoint&) = default;
};

/// Inclusive integer rectangle on the grid.
struct Rect {
  uint32_t x0 = 0;
  uint32_t y0 = 0;
  uint32_t x1 = 0;
  uint32_t y1 = 0;

  constexpr uint32_t width() const noexcept { return x1 - x0 + 1; }
  constexpr uint32_t height() const noexcept { return y1 - y0 + 1; }
  constexpr uint64_t area() const noexcept { return uint64_t{width()} * height(); }
  constexpr bool contains(GridPoint p) const noexcept {
    return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
  }
  constexpr bool valid_for(Order order) const noexcept {
    return x0 <= x1 && y0 <= y1 && x1 < order.side() && y1 < order.side();
  }

  static constexpr Rect full(Order order) noexcept {
    return Rect{0, 0, order.side() - 1, order.side() - 1};
  }

  friend constexpr bool operator==(const Rect&, const Rect&) = default;
};

namespace detail {

inline void check_index(Order order, uint64_t index) {
  if (index >= order.cell_count()) {
    throw std::out_of_range("curve index " + std::to_string(index) +
                            " out of range for order " +
                            std::to_string(order.value()));
  }
}

inline void check_point(Order order, GridPoint p) {
  if (p.x >= order.side() || p.y >= order.side()) {
    throw std::out_of_range("grid point (" + std::to_string(p.x) + "," +
                            std::to_string(p.y) + ") out of range for order " +
                            std::to_string(order.value()));
  }
}

// Reflect/transpose a quadrant of side s.
constexpr void rotate(uint32_t s, uint32_t& x, uint32_t& y, uint32_t rx,
                      uint32_t ry) noexcept {
  if (ry == 0) {
    if (rx == 1) {
      x = s - 1 - x;
      y = s - 1 - y;
    }
    uint32_t t = x;
    x = y;
    y = t;
  }
}

} // namespace detail

inline GridPoint index_to_point(Order order, uint64_t index) {
  detail::check_index(order, index);
  uint32_t x = 0;
  uint32_t y = 0;
  uint64_t t = index;
  for (uint32_t s = 1; s < order.side(); s <<= 1) {
    const auto rx = static_cast<uint32_t>(1 & (t >> 1));
    const auto ry = static_cast<uint32_t>(1 & (t ^ rx));
    detail::rotate(s, x, y, rx, ry);
    x += s * rx;
    y += s * ry;
    t >>= 2;
  }
  return {x, y};
}

inline uint64_t point_to_index(Order order, GridPoint p) {
  detail::check_point(order, p);
  uint32_t x = p.x;
  uint32_t y = p.y;
  uint64_t index = 0;
  for (uint32_t s = order.side() >> 1; s > 0; s >>= 1) {
    const uint32_t rx = (x & s) > 0 ? 1 : 0;
    const uint32_t ry = (y & s) > 0 ? 1 : 0;
    index += uint64_t{s} * s * ((3 * rx) ^ ry);
    detail::rotate(order.side(), x, y, rx, ry);
  }
  return index;
}

/// Runs the recursive midpoint construction and calls `emit(GridPoint)` for
/// every visited cell, in curve order. Each emitted midpoint lies in the unit
/// square; it is scaled by 2^n and floored onto the lattice.
///
/// Coordinates are dyadic rationals with at most 2n+1 fractional bits, so
/// doubles represent them exactly for every supported order.
template <class Emit>
void trace_curve(Order order, Emit&& emit) {
  const double scale = static_cast<double>(order.side());
  auto recurse = [&](auto& self, double x, double y, double xi, double xj,
                     double yi, double yj, int n) -> void {
    if (n <= 0) {
      const double px = x + (xi + yi) / 2;
      const double py = y + (xj + yj) / 2;
      emit(GridPoint{static_cast<uint32_t>(px * scale),
                     static_cast<uint32_t>(py * scale)});
      return;
    }
    self(self, x, y, yi / 2, yj / 2, xi / 2, xj / 2, n - 1);
    self(self, x + xi / 2, y + xj / 2, xi / 2, xj / 2, yi / 2, yj / 2, n - 1);
    self(self, x + (xi + yi) / 2, y + (xj + yj) / 2, xi / 2, xj / 2, yi / 2,
         yj / 2, n - 1);
    self(self, x + xi / 2 + yi, y + xj / 2 + yj, -yi / 2, -yj / 2, -xi / 2,
         -xj / 2, n - 1);
  };
  recurse(recurse, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, order.value());
}

/// All 4^n curve points in visiting order. Use trace_curve for large orders.
inline std::vector<GridPoint> curve_polyline(Order order) {
  std::vector<GridPoint> points;
  points.reserve(order.cell_count());
  trace_curve(order, [&](GridPoint p) { points.push_back(p); });
  return points;
}

/// The 2^level x 2^level square holding indices [block*4^level, (block+1)*4^level).
inline Rect block_rect(Order order, uint64_t block, int level) {
  if (level < 0 || level > order.value()) {
    throw std::out_of_range("block level " + std::to_string(level) +
                            " outside [0, " + std::to_string(order.value()) + "]");
  }
  const uint64_t blocks = uint64_t{1} << (2 * (order.value() - level));
  if (block >= blocks) {
    throw std::out_of_range("block " + std::to_string(block) +
                            " out of range at level " + std::to_string(level));
  }
  const GridPoint first = index_to_point(order, block << (2 * level));
  const uint32_t side = uint32_t{1} << level;
  const uint32_t mask = ~(side - 1);
  const uint32_t x0 = first.x & mask;
  const uint32_t y0 = first.y & mask;
  return Rect{x0, y0, x0 + side - 1, y0 + side - 1};
}

// Morton baseline, used only for clustering comparisons. Even index bits
// carry x, odd bits carry y.

inline GridPoint morton_index_to_point(Order order, uint64_t index) {
  detail::check_index(order, index);
  uint32_t x = 0;
  uint32_t y = 0;
  for (int bit = 0; bit < order.value(); ++bit) {
    x |= static_cast<uint32_t>((index >> (2 * bit)) & 1) << bit;
    y |= static_cast<uint32_t>((index >> (2 * bit + 1)) & 1) << bit;
  }
  return {x, y};
}

inline uint64_t morton_point_to_index(Order order, GridPoint p) {
  detail::check_point(order, p);
  uint64_t index = 0;
  for (int bit = 0; bit < order.value(); ++bit) {
    index |= uint64_t{(p.x >> bit) & 1} << (2 * bit);
    index |= uint64_t{(p.y >> bit) & 1} << (2 * bit + 1);
  }
  return index;
}

} // namespace cybermap
