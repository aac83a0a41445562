#pragma once

// Reductions from ingested records to renderable grids, AS heights, IP-port
// histograms and time frames.
//
// Every reduction is a sum over records, so partial results built over any
// partition of the input merge to the same grid.

#include "cybermap/coords.hpp"
#include "cybermap/grid.hpp"
#include "cybermap/ingest.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

namespace cybermap {

/// Which attribute the allocation map colors by.
enum class ClassKey { color_class, category, designation, asn };

namespace detail {

inline std::string class_label(const PrefixAttrs& a, ClassKey key) {
  switch (key) {
    case ClassKey::category:
      return a.category == Category::unallocated ? "" : std::string(to_string(a.category));
    case ClassKey::designation: return a.designation;
    case ClassKey::asn: return a.asn ? as_label(*a.asn) : "";
    case ClassKey::color_class: break;
  }
  return a.color_class;
}

// Splits `items` into at most `threads` contiguous chunks, reduces each with
// `partial(span) -> Acc` and folds them left to right with `merge`.
template <class Acc, class Item, class Partial, class Merge>
Acc parallel_reduce(std::span<const Item> items, unsigned threads, Partial partial,
                    Merge merge) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(items.size())));
  if (threads <= 1) return partial(items);
  std::vector<Acc> parts(threads);
  std::vector<std::thread> workers;
  const std::size_t chunk = (items.size() + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t lo = std::min(items.size(), t * chunk);
    const std::size_t hi = std::min(items.size(), lo + chunk);
    workers.emplace_back([&, t, lo, hi] { parts[t] = partial(items.subspan(lo, hi - lo)); });
  }
  for (auto& w : workers) w.join();
  Acc acc = std::move(parts[0]);
  for (unsigned t = 1; t < threads; ++t) merge(acc, parts[t]);
  return acc;
}

template <class T>
void add_into(Grid<T>& acc, const Grid<T>& part) {
  for (std::size_t i = 0; i < acc.values.size(); ++i) acc.values[i] += part.values[i];
}

} // namespace detail

/// Class labels in first-appearance order over the store (address order).
/// Index 0 is the empty label for addresses with no stored prefix.
inline std::vector<std::string> class_labels(const PrefixStore& store, ClassKey key) {
  if (key == ClassKey::category) {
    return {"", "allocated", "reserved", "legacy", "available"};
  }
  std::vector<std::string> labels{""};
  std::unordered_map<std::string, uint32_t> seen{{"", 0}};
  store.for_each([&](const Cidr&, const PrefixAttrs& a) {
    auto label = detail::class_label(a, key);
    if (seen.emplace(label, static_cast<uint32_t>(labels.size())).second) {
      labels.push_back(std::move(label));
    }
  });
  return labels;
}

/// Colors each cell by the class holding the most addresses of its prefix;
/// ties go to the lower class id. `mixed` marks cells spanning several classes.
inline CategoryGrid rasterize_allocations(const PrefixStore& store, Order order,
                                          const Rect& window,
                                          ClassKey key = ClassKey::color_class) {
  CategoryGrid grid(order, window);
  grid.labels = class_labels(store, key);
  std::unordered_map<std::string, uint32_t> ids;
  for (uint32_t i = 0; i < grid.labels.size(); ++i) ids.emplace(grid.labels[i], i);

  std::vector<std::pair<uint32_t, uint64_t>> tally;
  for (uint32_t y = window.y0; y <= window.y1; ++y) {
    for (uint32_t x = window.x0; x <= window.x1; ++x) {
      tally.clear();
      store.segments(cell_to_prefix(Cell{order, x, y}),
                     [&](const PrefixAttrs* attrs, uint64_t count) {
                       const uint32_t id =
                           attrs ? ids.at(detail::class_label(*attrs, key)) : 0;
                       auto it = std::find_if(tally.begin(), tally.end(),
                                              [&](const auto& t) { return t.first == id; });
                       if (it == tally.end()) tally.emplace_back(id, count);
                       else it->second += count;
                     });
      auto best = tally.front();
      for (const auto& t : tally) {
        if (t.second > best.second || (t.second == best.second && t.first < best.first)) {
          best = t;
        }
      }
      grid.at(x, y) = CategoryCell{best.first, tally.size() > 1};
    }
  }
  return grid;
}

inline CategoryGrid rasterize_allocations(const PrefixStore& store, Order order,
                                          ClassKey key = ClassKey::color_class) {
  return rasterize_allocations(store, order, Rect::full(order), key);
}

/// Upload and download bytes per cell of each flow's chosen endpoint.
inline UpDownGrid rasterize_flows(std::span<const FlowRecord> flows, Order order,
                                  Endpoint endpoint, const Rect& window,
                                  unsigned threads = 1) {
  auto partial = [&](std::span<const FlowRecord> part) {
    UpDownGrid grid(order, window);
    for (const auto& f : part) {
      const Cell c = ip_to_cell(f.ip(endpoint), order);
      if (!window.contains(c.point())) continue;
      auto& v = grid.at(c.x, c.y);
      (f.direction == Direction::upload ? v.up : v.down) += f.bytes;
    }
    return grid;
  };
  if (flows.empty()) return UpDownGrid(order, window);
  return detail::parallel_reduce<UpDownGrid>(flows, threads, partial,
                                             detail::add_into<UpDown>);
}

inline UpDownGrid rasterize_flows(std::span<const FlowRecord> flows, Order order,
                                  Endpoint endpoint) {
  return rasterize_flows(flows, order, endpoint, Rect::full(order));
}

/// Event counts per source-IP cell.
inline ScalarGrid rasterize_events(std::span<const EventRecord> events, Order order,
                                   const Rect& window, unsigned threads = 1) {
  auto partial = [&](std::span<const EventRecord> part) {
    ScalarGrid grid(order, window);
    for (const auto& e : part) {
      const Cell c = ip_to_cell(e.src_ip, order);
      if (window.contains(c.point())) ++grid.at(c.x, c.y);
    }
    return grid;
  };
  if (events.empty()) return ScalarGrid(order, window);
  return detail::parallel_reduce<ScalarGrid>(events, threads, partial,
                                             detail::add_into<uint64_t>);
}

inline ScalarGrid rasterize_events(std::span<const EventRecord> events, Order order) {
  return rasterize_events(events, order, Rect::full(order));
}

/// ASN -> number of announced addresses (the AS map's height axis).
using AsHeightMap = std::map<Asn, uint64_t>;

/// Addresses per origin AS. Overlapping announcements of one AS count each
/// address once; overlaps across different ASes count for both.
inline AsHeightMap as_ip_counts(std::span<const PrefixAsRecord> records) {
  std::map<Asn, std::vector<std::pair<uint64_t, uint64_t>>> spans;
  for (const auto& r : records) {
    const uint64_t lo = r.prefix.base().value;
    spans[r.asn].emplace_back(lo, lo + r.prefix.size());
  }
  AsHeightMap heights;
  for (auto& [asn, list] : spans) {
    std::sort(list.begin(), list.end());
    uint64_t total = 0;
    uint64_t covered_to = 0;
    for (const auto& [lo, hi] : list) {
      const uint64_t start = std::max(lo, covered_to);
      if (hi > start) total += hi - start;
      covered_to = std::max(covered_to, hi);
    }
    heights[asn] = total;
  }
  return heights;
}

/// Heights placed on the order-8 AS grid. ASNs beyond 16 bits are left out
/// and counted in `skipped`.
inline ScalarGrid as_height_grid(const AsHeightMap& heights, const Rect& window,
                                 std::size_t* skipped = nullptr) {
  ScalarGrid grid(kAsGridOrder, window);
  std::size_t dropped = 0;
  for (const auto& [asn, count] : heights) {
    if (asn.value >= (uint32_t{1} << 16)) {
      ++dropped;
      continue;
    }
    const Cell c = asn_to_cell(asn);
    if (window.contains(c.point())) grid.at(c.x, c.y) = count;
  }
  if (skipped) *skipped = dropped;
  return grid;
}

struct PortHistogram {
  Cidr block;
  uint32_t bucket_size = 256;
  std::vector<UpDown> values; // [ip offset * buckets() + port bucket]

  uint32_t rows() const noexcept { return static_cast<uint32_t>(block.size()); }
  uint32_t buckets() const noexcept { return 65536 / bucket_size; }
  UpDown& at(uint32_t offset, uint32_t bucket) { return values[std::size_t{offset} * buckets() + bucket]; }
  const UpDown& at(uint32_t offset, uint32_t bucket) const {
    return values[std::size_t{offset} * buckets() + bucket];
  }
};

/// Bytes per (address within `block`, port bucket) for the chosen endpoint.
inline PortHistogram ipport_histogram(std::span<const FlowRecord> flows, const Cidr& block,
                                      uint32_t bucket_size, Endpoint endpoint) {
  if (bucket_size == 0 || bucket_size > 65536 || (65536 % bucket_size) != 0) {
    throw std::invalid_argument("port bucket size " + std::to_string(bucket_size) +
                                " does not divide 65536");
  }
  if (block.len() < 16) {
    throw std::invalid_argument("IP-port block must be /16 or longer");
  }
  PortHistogram hist{block, bucket_size, {}};
  hist.values.assign(std::size_t{hist.rows()} * hist.buckets(), UpDown{});
  for (const auto& f : flows) {
    const IpV4Addr ip = f.ip(endpoint);
    if (!block.contains(ip)) continue;
    auto& v = hist.at(ip.value - block.base().value, f.port(endpoint).value / bucket_size);
    (f.direction == Direction::upload ? v.up : v.down) += f.bytes;
  }
  return hist;
}

struct Frame {
  int64_t start = 0;
  int64_t end = 0; // exclusive
  ScalarGrid layer;
};

/// Buckets events into contiguous [start, start + interval) frames beginning
/// at the earliest timestamp; frame i counts events per source-IP cell.
inline std::vector<Frame> make_frames(std::span<const EventRecord> events, int64_t interval,
                                      Order order) {
  if (interval <= 0) throw std::invalid_argument("frame interval must be positive");
  if (events.empty()) return {};
  const auto [lo, hi] = std::minmax_element(
      events.begin(), events.end(),
      [](const EventRecord& a, const EventRecord& b) { return a.timestamp < b.timestamp; });
  const int64_t first = lo->timestamp;
  const int64_t count = (hi->timestamp - first) / interval + 1;
  std::vector<Frame> frames;
  frames.reserve(static_cast<std::size_t>(count));
  for (int64_t i = 0; i < count; ++i) {
    frames.push_back(Frame{first + i * interval, first + (i + 1) * interval, ScalarGrid(order)});
  }
  for (const auto& e : events) {
    auto& frame = frames[static_cast<std::size_t>((e.timestamp - first) / interval)];
    const Cell c = ip_to_cell(e.src_ip, order);
    ++frame.layer.at(c.x, c.y);
  }
  return frames;
}

inline nlohmann::json frames_json(const std::vector<Frame>& frames) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& f : frames) {
    out.push_back({{"start", f.start}, {"end", f.end}, {"layer", to_json(GridLayer(f.layer))}});
  }
  return out;
}

} // namespace cybermap
