#pragma once

// Deterministic rasterization of grids, AS maps, IP-port histograms and curve
// figures.
//
// Grid y points up; this is the only place it is flipped to screen rows
// (screen origin top-left).

#include "cybermap/aggregate.hpp"
#include "cybermap/coords.hpp"
#include "cybermap/grid.hpp"
#include "cybermap/hilbert.hpp"
#include "cybermap/image.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

namespace cybermap {

inline constexpr uint32_t kDefaultMaxSide = 8192;

class Palette {
public:
  enum class Kind { categorical, sequential, diverging };

  explicit Palette(Kind kind, Rgb background = {0, 0, 0})
      : kind_(kind), background_(background) {}

  static Palette categorical() { return Palette(Kind::categorical); }
  static Palette sequential() { return Palette(Kind::sequential); }
  static Palette diverging() { return Palette(Kind::diverging); }

  Kind kind() const noexcept { return kind_; }
  Rgb background() const noexcept { return background_; }

  /// Class 0 is the background; other ids cycle through a fixed table, with
  /// a brightness shift per cycle.
  Rgb category(uint32_t id) const {
    static constexpr std::array<Rgb, 16> table{{
        {230, 25, 75},   {60, 180, 75},   {255, 225, 25}, {67, 99, 216},
        {245, 130, 49},  {145, 30, 180},  {66, 212, 244}, {240, 50, 230},
        {191, 239, 69},  {250, 190, 212}, {70, 153, 144}, {220, 190, 255},
        {154, 99, 36},   {255, 250, 200}, {128, 0, 0},    {170, 255, 195},
    }};
    if (id == 0) return background_;
    const Rgb base = table[(id - 1) % table.size()];
    const uint32_t cycle = (id - 1) / static_cast<uint32_t>(table.size());
    const auto shade = [&](uint8_t c) {
      return static_cast<uint8_t>(std::max<int>(32, c - static_cast<int>((cycle * 37) % 160)));
    };
    return cycle == 0 ? base : Rgb{shade(base.r), shade(base.g), shade(base.b)};
  }

  /// t in [0, 1] on a dark-purple to pale-yellow ramp. Never the background.
  Rgb ramp(double t) const {
    static constexpr std::array<Rgb, 5> stops{{
        {50, 20, 110}, {140, 30, 130}, {220, 60, 80}, {250, 150, 40}, {255, 250, 180}}};
    t = std::clamp(t, 0.0, 1.0) * (stops.size() - 1);
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), stops.size() - 2);
    const double f = t - static_cast<double>(i);
    auto mix = [&](uint8_t a, uint8_t b) {
      return static_cast<uint8_t>(std::lround(a + (b - a) * f));
    };
    const Rgb c{mix(stops[i].r, stops[i + 1].r), mix(stops[i].g, stops[i + 1].g),
                mix(stops[i].b, stops[i + 1].b)};
    return c == background_ ? Rgb{static_cast<uint8_t>(c.r ^ 1), c.g, c.b} : c;
  }

  /// Upload shows blue, download red; brightness follows the log-scaled total.
  Rgb updown(const UpDown& v, uint64_t max_total) const {
    if (v.total() == 0) return background_;
    const double m = 0.25 + 0.75 * log_fraction(v.total(), max_total);
    const double down = static_cast<double>(v.down) / static_cast<double>(v.total());
    const auto r = static_cast<uint8_t>(std::lround(255 * m * down));
    const auto b = static_cast<uint8_t>(std::lround(255 * m * (1 - down)));
    const Rgb c{r, static_cast<uint8_t>(std::lround(40 * m * std::min(down, 1 - down))), b};
    return c == background_ ? Rgb{static_cast<uint8_t>(c.r | 1), c.g, c.b} : c;
  }

  /// log2(1 + v) / log2(1 + max), in [0, 1].
  static double log_fraction(uint64_t v, uint64_t max) {
    if (max == 0) return 0.0;
    return std::log2(1.0 + static_cast<double>(v)) / std::log2(1.0 + static_cast<double>(max));
  }

private:
  Kind kind_;
  Rgb background_;
};

namespace detail {

inline void check_side(uint64_t side, uint32_t max_side, const char* what) {
  if (side == 0 || side > max_side) {
    throw std::length_error(std::string(what) + " side of " + std::to_string(side) +
                            " px exceeds the limit of " + std::to_string(max_side));
  }
}

template <class T>
T max_of(const std::vector<T>& values) {
  return values.empty() ? T{} : *std::max_element(values.begin(), values.end());
}

inline uint64_t max_total(const std::vector<UpDown>& values) {
  uint64_t m = 0;
  for (const auto& v : values) m = std::max(m, v.total());
  return m;
}

// Runs `rows(begin, end)` over [0, height) split across threads. Each row is
// written by exactly one worker, so the result is schedule-independent.
template <class Rows>
void for_rows(uint32_t height, unsigned threads, Rows rows) {
  threads = std::max(1u, std::min(threads, height));
  if (threads == 1) {
    rows(0u, height);
    return;
  }
  std::vector<std::thread> workers;
  const uint32_t chunk = (height + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const uint32_t lo = std::min(height, t * chunk);
    const uint32_t hi = std::min(height, lo + chunk);
    workers.emplace_back([=] { rows(lo, hi); });
  }
  for (auto& w : workers) w.join();
}

inline void draw_line(Image& img, int x0, int y0, int x1, int y1, Rgb color) {
  const int dx = std::abs(x1 - x0);
  const int dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1;
  const int sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    img.set(static_cast<uint32_t>(x0), static_cast<uint32_t>(y0), color);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

} // namespace detail

struct RenderOptions {
  uint32_t cell_px = 1;
  uint32_t max_side = kDefaultMaxSide;
  unsigned threads = 1;
};

/// One cell_px x cell_px block per cell of the grid window. Scalar values are
/// log-scaled against the window maximum; zero cells stay background.
template <class T>
Image render_grid(const Grid<T>& grid, const Palette& palette, const RenderOptions& opt = {}) {
  if (opt.cell_px == 0) throw std::invalid_argument("cell_px must be at least 1");
  const uint64_t w = uint64_t{grid.width()} * opt.cell_px;
  const uint64_t h = uint64_t{grid.height()} * opt.cell_px;
  detail::check_side(w, opt.max_side, "image width");
  detail::check_side(h, opt.max_side, "image height");
  Image img(static_cast<uint32_t>(w), static_cast<uint32_t>(h), palette.background());

  auto color = [&]() {
    if constexpr (std::is_same_v<T, CategoryCell>) {
      return [&](const CategoryCell& c) { return palette.category(c.id); };
    } else if constexpr (std::is_same_v<T, UpDown>) {
      const uint64_t max = detail::max_total(grid.values);
      return [&, max](const UpDown& v) { return palette.updown(v, max); };
    } else {
      const uint64_t max = detail::max_of(grid.values);
      return [&, max](uint64_t v) {
        return v == 0 ? palette.background() : palette.ramp(Palette::log_fraction(v, max));
      };
    }
  }();

  detail::for_rows(grid.height(), opt.threads, [&](uint32_t lo, uint32_t hi) {
    for (uint32_t row = lo; row < hi; ++row) {
      const uint32_t gy = grid.window.y1 - row;
      for (uint32_t gx = grid.window.x0; gx <= grid.window.x1; ++gx) {
        const auto& v = grid.at(gx, gy);
        if (is_zero(v)) continue;
        img.fill_rect((gx - grid.window.x0) * opt.cell_px, row * opt.cell_px, opt.cell_px,
                      opt.cell_px, color(v));
      }
    }
  });
  return img;
}

/// Palette matching the layer kind: categorical, sequential or diverging.
inline Palette default_palette(const GridLayer& layer) {
  switch (layer.index()) {
    case 0: return Palette::categorical();
    case 1: return Palette::sequential();
    default: return Palette::diverging();
  }
}

inline Image render_layer(const GridLayer& layer, const Palette& palette,
                          const RenderOptions& opt = {}) {
  return std::visit([&](const auto& g) { return render_grid(g, palette, opt); }, layer);
}

/// Legend sidecar: class colors for category grids, value breakpoints for
/// scalar and up/down grids.
inline nlohmann::json legend_json(const GridLayer& layer, const Palette& palette) {
  auto hex = [](Rgb c) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
    return std::string(buf);
  };
  nlohmann::json out = {{"kind", layer_kind(layer)}, {"background", hex(palette.background())}};
  nlohmann::json entries = nlohmann::json::array();
  if (const auto* g = std::get_if<CategoryGrid>(&layer)) {
    for (uint32_t id = 1; id < g->labels.size(); ++id) {
      entries.push_back({{"id", id}, {"label", g->labels[id]}, {"color", hex(palette.category(id))}});
    }
  } else {
    const uint64_t max = std::holds_alternative<ScalarGrid>(layer)
                             ? detail::max_of(std::get<ScalarGrid>(layer).values)
                             : detail::max_total(std::get<UpDownGrid>(layer).values);
    out["scale"] = "log2(1+v)/log2(1+max)";
    out["max"] = max;
    for (int step = 0; step <= 4; ++step) {
      const double t = step / 4.0;
      const double value = std::exp2(t * std::log2(1.0 + static_cast<double>(max))) - 1.0;
      nlohmann::json e = {{"t", t}, {"value", value}};
      if (std::holds_alternative<ScalarGrid>(layer)) {
        e["color"] = hex(palette.ramp(t));
      } else {
        const auto v = static_cast<uint64_t>(std::llround(value));
        e["upload_color"] = hex(palette.updown({v, 0}, max));
        e["download_color"] = hex(palette.updown({0, v}, max));
      }
      entries.push_back(std::move(e));
    }
  }
  out["entries"] = std::move(entries);
  return out;
}

struct AsMapOptions {
  uint32_t cell_px = 2;
  Rgb link_color{200, 200, 200};
  Rgb highlight_color{0, 255, 0};
};

struct AsMapImage {
  Image image;
  std::size_t skipped_links = 0;   // endpoint beyond the 16-bit grid
  std::size_t skipped_heights = 0; // ASN beyond the 16-bit grid
};

/// The 256 x 256 AS grid colored by log address count, with links as straight
/// segments between cell centers and an optional highlighted AS outlined.
inline AsMapImage render_as_map(const AsHeightMap& heights, std::span<const AsLink> links,
                                std::optional<Asn> highlight, const AsMapOptions& opt = {},
                                const Palette& palette = Palette::sequential()) {
  if (opt.cell_px == 0) throw std::invalid_argument("cell_px must be at least 1");
  AsMapImage out;
  const ScalarGrid grid = as_height_grid(heights, Rect::full(kAsGridOrder), &out.skipped_heights);
  out.image = render_grid(grid, palette, RenderOptions{opt.cell_px, kDefaultMaxSide, 1});

  const uint32_t side = kAsGridOrder.side();
  auto center = [&](Asn asn) {
    const Cell c = asn_to_cell(asn);
    return std::pair<int, int>{static_cast<int>(c.x * opt.cell_px + opt.cell_px / 2),
                               static_cast<int>((side - 1 - c.y) * opt.cell_px + opt.cell_px / 2)};
  };
  for (const auto& link : links) {
    if (link.a.value >= (1u << 16) || link.b.value >= (1u << 16)) {
      ++out.skipped_links;
      continue;
    }
    const auto [x0, y0] = center(link.a);
    const auto [x1, y1] = center(link.b);
    detail::draw_line(out.image, x0, y0, x1, y1, opt.link_color);
  }
  if (highlight && highlight->value < (1u << 16)) {
    const Cell c = asn_to_cell(*highlight);
    const int px = static_cast<int>(c.x * opt.cell_px);
    const int py = static_cast<int>((side - 1 - c.y) * opt.cell_px);
    const int lo_x = std::max(0, px - 1), lo_y = std::max(0, py - 1);
    const int max_px = static_cast<int>(out.image.width()) - 1;
    const int hi_x = std::min(max_px, px + static_cast<int>(opt.cell_px));
    const int hi_y = std::min(max_px, py + static_cast<int>(opt.cell_px));
    detail::draw_line(out.image, lo_x, lo_y, hi_x, lo_y, opt.highlight_color);
    detail::draw_line(out.image, hi_x, lo_y, hi_x, hi_y, opt.highlight_color);
    detail::draw_line(out.image, hi_x, hi_y, lo_x, hi_y, opt.highlight_color);
    detail::draw_line(out.image, lo_x, hi_y, lo_x, lo_y, opt.highlight_color);
  }
  return out;
}

/// x = address offset within the block, y = port bucket with low ports at the
/// bottom. Colors mix upload (blue) and download (red).
inline Image render_ipport(const PortHistogram& hist, const Palette& palette = Palette::diverging(),
                           const RenderOptions& opt = {}) {
  if (opt.cell_px == 0) throw std::invalid_argument("cell_px must be at least 1");
  const uint64_t w = uint64_t{hist.rows()} * opt.cell_px;
  const uint64_t h = uint64_t{hist.buckets()} * opt.cell_px;
  detail::check_side(w, opt.max_side, "histogram width");
  detail::check_side(h, opt.max_side, "histogram height");
  Image img(static_cast<uint32_t>(w), static_cast<uint32_t>(h), palette.background());
  const uint64_t max = detail::max_total(hist.values);
  for (uint32_t offset = 0; offset < hist.rows(); ++offset) {
    for (uint32_t bucket = 0; bucket < hist.buckets(); ++bucket) {
      const auto& v = hist.at(offset, bucket);
      if (v.total() == 0) continue;
      img.fill_rect(offset * opt.cell_px, (hist.buckets() - 1 - bucket) * opt.cell_px,
                    opt.cell_px, opt.cell_px, palette.updown(v, max));
    }
  }
  return img;
}

struct CurveOptions {
  uint32_t cell_px = 32;
  Rgb background{255, 255, 255};
  Rgb line{0, 0, 0};
};

/// The curve polyline through cell centers, 4^order - 1 segments.
inline Image render_curve(Order order, const CurveOptions& opt = {}) {
  if (order.value() > 8) throw std::out_of_range("curve figures are limited to order 8");
  if (opt.cell_px == 0) throw std::invalid_argument("cell_px must be at least 1");
  const uint32_t side = order.side();
  detail::check_side(uint64_t{side} * opt.cell_px, kDefaultMaxSide, "curve image");
  Image img(side * opt.cell_px, side * opt.cell_px, opt.background);
  std::optional<std::pair<int, int>> prev;
  trace_curve(order, [&](GridPoint p) {
    const int x = static_cast<int>(p.x * opt.cell_px + opt.cell_px / 2);
    const int y = static_cast<int>((side - 1 - p.y) * opt.cell_px + opt.cell_px / 2);
    if (prev) detail::draw_line(img, prev->first, prev->second, x, y, opt.line);
    prev = {x, y};
  });
  return img;
}

} // namespace cybermap
