#pragma once

// Dense per-cell matrices over a window of a Hilbert grid.

#include "cybermap/hilbert.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cybermap {

/// Upper bound on cells in one materialized grid (4096 x 4096).
inline constexpr uint64_t kMaxGridCells = uint64_t{1} << 24;

struct CategoryCell {
  uint32_t id = 0; // 0 = no stored prefix
  bool mixed = false;

  friend constexpr bool operator==(const CategoryCell&, const CategoryCell&) = default;
};

struct UpDown {
  uint64_t up = 0;
  uint64_t down = 0;

  constexpr uint64_t total() const noexcept { return up + down; }
  constexpr UpDown& operator+=(const UpDown& o) noexcept {
    up += o.up;
    down += o.down;
    return *this;
  }
  friend constexpr bool operator==(const UpDown&, const UpDown&) = default;
};

inline bool is_zero(const CategoryCell& c) noexcept { return c.id == 0; }
inline bool is_zero(uint64_t v) noexcept { return v == 0; }
inline bool is_zero(const UpDown& v) noexcept { return v.up == 0 && v.down == 0; }

template <class T>
struct Grid {
  Order order{kMinOrder};
  Rect window{};
  std::vector<T> values;           // row-major over the window, row 0 = window.y0
  std::vector<std::string> labels; // class names, category grids only

  Grid() = default;
  Grid(Order o, Rect w) : order(o), window(w) {
    if (!w.valid_for(o)) throw std::out_of_range("grid window outside the order's grid");
    if (w.area() > kMaxGridCells) {
      throw std::length_error("grid window of " + std::to_string(w.area()) +
                              " cells exceeds the materialization limit");
    }
    values.assign(static_cast<std::size_t>(w.area()), T{});
  }
  explicit Grid(Order o) : Grid(o, Rect::full(o)) {}

  uint32_t width() const noexcept { return window.width(); }
  uint32_t height() const noexcept { return window.height(); }

  T& at(uint32_t x, uint32_t y) { return values[offset(x, y)]; }
  const T& at(uint32_t x, uint32_t y) const { return values[offset(x, y)]; }

  std::size_t offset(uint32_t x, uint32_t y) const noexcept {
    return static_cast<std::size_t>(y - window.y0) * window.width() + (x - window.x0);
  }

  std::size_t nonzero_count() const {
    std::size_t n = 0;
    for (const auto& v : values) n += is_zero(v) ? 0 : 1;
    return n;
  }

  /// Copy of the sub-window `w`, which must lie inside this grid's window.
  Grid crop(const Rect& w) const {
    if (w.x0 < window.x0 || w.y0 < window.y0 || w.x1 > window.x1 || w.y1 > window.y1) {
      throw std::out_of_range("crop window outside grid window");
    }
    Grid out(order, w);
    out.labels = labels;
    for (uint32_t y = w.y0; y <= w.y1; ++y) {
      for (uint32_t x = w.x0; x <= w.x1; ++x) out.at(x, y) = at(x, y);
    }
    return out;
  }

  friend bool operator==(const Grid&, const Grid&) = default;
};

using CategoryGrid = Grid<CategoryCell>;
using ScalarGrid = Grid<uint64_t>;
using UpDownGrid = Grid<UpDown>;
using GridLayer = std::variant<CategoryGrid, ScalarGrid, UpDownGrid>;

inline std::string_view layer_kind(const GridLayer& layer) {
  switch (layer.index()) {
    case 0: return "category";
    case 1: return "scalar";
    default: return "updown";
  }
}

// JSON envelope: {order, kind, window:[x0,y0,x1,y1], labels?, values:[[run, value], ...]}
// with run-length encoded values in row-major window order.

namespace detail {

inline nlohmann::json cell_json(const CategoryCell& c) { return {c.id, c.mixed ? 1 : 0}; }
inline nlohmann::json cell_json(uint64_t v) { return v; }
inline nlohmann::json cell_json(const UpDown& v) { return {v.up, v.down}; }

inline void cell_from_json(const nlohmann::json& j, CategoryCell& c) {
  c.id = j.at(0).get<uint32_t>();
  c.mixed = j.at(1).get<int>() != 0;
}
inline void cell_from_json(const nlohmann::json& j, uint64_t& v) { v = j.get<uint64_t>(); }
inline void cell_from_json(const nlohmann::json& j, UpDown& v) {
  v.up = j.at(0).get<uint64_t>();
  v.down = j.at(1).get<uint64_t>();
}

template <class T>
nlohmann::json grid_json(const Grid<T>& g, std::string_view kind) {
  nlohmann::json runs = nlohmann::json::array();
  std::size_t i = 0;
  while (i < g.values.size()) {
    std::size_t j = i + 1;
    while (j < g.values.size() && g.values[j] == g.values[i]) ++j;
    runs.push_back({j - i, cell_json(g.values[i])});
    i = j;
  }
  nlohmann::json out = {{"order", g.order.value()},
                        {"kind", kind},
                        {"window", {g.window.x0, g.window.y0, g.window.x1, g.window.y1}}};
  if (kind == "category") out["labels"] = g.labels;
  out["values"] = std::move(runs);
  return out;
}

template <class T>
Grid<T> grid_from_json(const nlohmann::json& j) {
  const auto& w = j.at("window");
  Grid<T> g(Order(j.at("order").get<int>()),
            Rect{w.at(0).get<uint32_t>(), w.at(1).get<uint32_t>(), w.at(2).get<uint32_t>(),
                 w.at(3).get<uint32_t>()});
  if (j.contains("labels")) g.labels = j.at("labels").get<std::vector<std::string>>();
  std::size_t pos = 0;
  for (const auto& run : j.at("values")) {
    const auto n = run.at(0).get<std::size_t>();
    if (pos + n > g.values.size()) throw std::invalid_argument("run-length overflow");
    T v{};
    cell_from_json(run.at(1), v);
    std::fill_n(g.values.begin() + static_cast<std::ptrdiff_t>(pos), n, v);
    pos += n;
  }
  if (pos != g.values.size()) throw std::invalid_argument("run-length underflow");
  return g;
}

} // namespace detail

inline nlohmann::json to_json(const GridLayer& layer) {
  return std::visit([&](const auto& g) { return detail::grid_json(g, layer_kind(layer)); },
                    layer);
}

inline GridLayer layer_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "category") return detail::grid_from_json<CategoryCell>(j);
  if (kind == "scalar") return detail::grid_from_json<uint64_t>(j);
  if (kind == "updown") return detail::grid_from_json<UpDown>(j);
  throw std::invalid_argument("unknown layer kind '" + kind + "'");
}

} // namespace cybermap
