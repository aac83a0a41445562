#pragma once

// On-disk data directory, immutable snapshots of ingested data, and the layer
// catalog that both the CLI and the HTTP service render from.
//
// Directory layout (all UTF-8 text, one record per line):
//   prefixes.tsv   prefix store dump, `prefix<TAB>attrs-json`
//   pfx2as.tsv     canonical prefix-to-AS records
//   flows.csv      canonical flow records
//   events.csv     canonical event records
//   aslinks.txt    AS links `a|b|rel`

#include "cybermap/aggregate.hpp"
#include "cybermap/coords.hpp"
#include "cybermap/grid.hpp"
#include "cybermap/ingest.hpp"
#include "cybermap/render.hpp"

#include <sys/stat.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace cybermap {

enum class DataKind { iana, pfx2as, flows, events, links };

inline std::optional<DataKind> parse_data_kind(std::string_view s) {
  if (s == "iana") return DataKind::iana;
  if (s == "pfx2as") return DataKind::pfx2as;
  if (s == "flows") return DataKind::flows;
  if (s == "events") return DataKind::events;
  if (s == "links") return DataKind::links;
  return std::nullopt;
}

struct DataDir {
  std::filesystem::path root;

  std::filesystem::path prefixes() const { return root / "prefixes.tsv"; }
  std::filesystem::path pfx2as() const { return root / "pfx2as.tsv"; }
  std::filesystem::path flows() const { return root / "flows.csv"; }
  std::filesystem::path events() const { return root / "events.csv"; }
  std::filesystem::path links() const { return root / "aslinks.txt"; }
};

struct IngestReport {
  std::size_t records = 0;
  std::vector<LineError> errors;
};

namespace detail {

template <class Record>
void append_lines(const std::filesystem::path& path, const std::vector<Record>& records,
                  std::string_view header = {}) {
  const bool fresh = !std::filesystem::exists(path);
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for appending");
  if (fresh && !header.empty()) out << header << '\n';
  for (const auto& r : records) out << to_line(r) << '\n';
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  return in;
}

template <class Record, class Parse>
std::vector<Record> load_records(const std::filesystem::path& path, Parse parse) {
  if (!std::filesystem::exists(path)) return {};
  auto in = open_input(path);
  auto parsed = parse(in);
  if (!parsed.errors.empty()) {
    throw std::runtime_error("corrupt data file '" + path.string() + "' line " +
                             std::to_string(parsed.errors.front().line) + ": " +
                             parsed.errors.front().message);
  }
  return std::move(parsed.records);
}

inline void write_atomically(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw std::runtime_error("failed writing '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline int64_t mtime(const std::filesystem::path& path) {
  struct stat st {};
  return ::stat(path.c_str(), &st) == 0 ? static_cast<int64_t>(st.st_mtime) : 0;
}

} // namespace detail

/// Parses `in` as `kind` and appends the valid records to the data directory.
/// Registry and routing records are also merged into the prefix store.
/// `local` (optional) overrides flow direction by address locality.
inline IngestReport ingest(const DataDir& dir, DataKind kind, std::istream& in,
                           const std::vector<Cidr>& local = {}) {
  std::filesystem::create_directories(dir.root);
  auto merge_store = [&](const auto& records) {
    PrefixStore store;
    if (std::filesystem::exists(dir.prefixes())) {
      auto f = detail::open_input(dir.prefixes());
      if (auto errors = store.load(f); !errors.empty()) {
        throw std::runtime_error("corrupt prefix store line " +
                                 std::to_string(errors.front().line));
      }
    }
    for (const auto& r : records) store.add(r);
    std::ostringstream dump;
    store.dump(dump);
    detail::write_atomically(dir.prefixes(), dump.str());
  };
  auto report = [](auto&& parsed) {
    return IngestReport{parsed.records.size(), std::move(parsed.errors)};
  };
  switch (kind) {
    case DataKind::iana: {
      auto parsed = parse_iana_csv(in);
      merge_store(parsed.records);
      return report(parsed);
    }
    case DataKind::pfx2as: {
      auto parsed = parse_pfx2as(in);
      detail::append_lines(dir.pfx2as(), parsed.records);
      merge_store(parsed.records);
      return report(parsed);
    }
    case DataKind::flows: {
      auto parsed = parse_flows_csv(in);
      if (!local.empty()) {
        for (auto& f : parsed.records) infer_direction(f, local);
      }
      detail::append_lines(dir.flows(), parsed.records, kFlowsHeader);
      return report(parsed);
    }
    case DataKind::events: {
      auto parsed = parse_events_csv(in);
      detail::append_lines(dir.events(), parsed.records, kEventsHeader);
      return report(parsed);
    }
    case DataKind::links: {
      auto parsed = parse_as_links(in);
      detail::append_lines(dir.links(), parsed.records);
      return report(parsed);
    }
  }
  throw std::logic_error("unhandled data kind");
}

enum class LayerName { allocation, traffic, events, as_heights };

inline std::optional<LayerName> parse_layer_name(std::string_view s) {
  if (s == "allocation") return LayerName::allocation;
  if (s == "traffic") return LayerName::traffic;
  if (s == "events") return LayerName::events;
  if (s == "as_heights") return LayerName::as_heights;
  return std::nullopt;
}

inline std::string_view to_string(LayerName n) {
  switch (n) {
    case LayerName::allocation: return "allocation";
    case LayerName::traffic: return "traffic";
    case LayerName::events: return "events";
    case LayerName::as_heights: return "as_heights";
  }
  return "";
}

/// Parameters of one rendered layer window.
struct TileSpec {
  LayerName layer = LayerName::allocation;
  Order order{10};
  std::optional<Rect> rect; // full grid when empty
  uint32_t cell_px = 1;
  Endpoint endpoint = Endpoint::dst;       // traffic only
  ClassKey key = ClassKey::color_class;    // allocation only

  Rect window() const { return rect.value_or(Rect::full(order)); }
};

/// Thrown for tile requests that are well-formed but not satisfiable.
class BadTile : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Immutable view of one ingest state.
class Snapshot {
public:
  PrefixStore store;
  std::vector<PrefixAsRecord> routes;
  std::vector<FlowRecord> flows;
  std::vector<EventRecord> events;
  std::vector<AsLink> links;
  AsHeightMap heights;
  std::map<std::string, int64_t> built; // source file -> mtime

  static std::shared_ptr<const Snapshot> load(const DataDir& dir) {
    auto snap = std::make_shared<Snapshot>();
    if (std::filesystem::exists(dir.prefixes())) {
      auto in = detail::open_input(dir.prefixes());
      if (auto errors = snap->store.load(in); !errors.empty()) {
        throw std::runtime_error("corrupt prefix store line " +
                                 std::to_string(errors.front().line));
      }
    }
    snap->routes = detail::load_records<PrefixAsRecord>(
        dir.pfx2as(), [](std::istream& s) { return parse_pfx2as(s); });
    snap->flows = detail::load_records<FlowRecord>(
        dir.flows(), [](std::istream& s) { return parse_flows_csv(s); });
    snap->events = detail::load_records<EventRecord>(
        dir.events(), [](std::istream& s) { return parse_events_csv(s); });
    snap->links = detail::load_records<AsLink>(
        dir.links(), [](std::istream& s) { return parse_as_links(s); });
    snap->heights = as_ip_counts(snap->routes);
    for (const auto& p : {dir.prefixes(), dir.pfx2as(), dir.flows(), dir.events(), dir.links()}) {
      if (std::filesystem::exists(p)) snap->built[p.filename().string()] = detail::mtime(p);
    }
    return snap;
  }

  /// Aggregates the requested window from records. Used by the CLI directly
  /// and by the service for orders above its cache.
  GridLayer build(const TileSpec& spec) const {
    const Rect window = spec.window();
    if (!window.valid_for(spec.order)) throw BadTile("rect outside the order's grid");
    if (window.area() > kMaxGridCells) throw BadTile("rect has too many cells");
    switch (spec.layer) {
      case LayerName::allocation: return rasterize_allocations(store, spec.order, window, spec.key);
      case LayerName::traffic: return rasterize_flows(flows, spec.order, spec.endpoint, window);
      case LayerName::events: return rasterize_events(events, spec.order, window);
      case LayerName::as_heights:
        if (spec.order != kAsGridOrder) throw BadTile("as_heights exists only at order 8");
        return as_height_grid(heights, window);
    }
    throw std::logic_error("unhandled layer");
  }

  /// Like build, but full grids at orders <= cache_order are kept and cropped.
  GridLayer build_cached(const TileSpec& spec, int cache_order) const {
    if (spec.order.value() > cache_order) return build(spec);
    const Rect window = spec.window();
    if (!window.valid_for(spec.order)) throw BadTile("rect outside the order's grid");
    TileSpec full = spec;
    full.rect.reset();
    const auto key = std::tuple{static_cast<int>(spec.layer), spec.order.value(),
                                static_cast<int>(spec.endpoint), static_cast<int>(spec.key)};
    std::shared_ptr<const GridLayer> layer;
    {
      std::lock_guard lock(cache_mutex_);
      auto it = cache_.find(key);
      if (it != cache_.end()) layer = it->second;
    }
    if (!layer) {
      layer = std::make_shared<const GridLayer>(build(full));
      std::lock_guard lock(cache_mutex_);
      cache_.emplace(key, layer);
    }
    if (window == Rect::full(spec.order)) return *layer;
    return std::visit([&](const auto& g) { return GridLayer(g.crop(window)); }, *layer);
  }

  nlohmann::json catalog() const {
    auto entry = [&](LayerName name, std::string_view kind,
                     std::vector<std::string> sources, int min_order, int max_order) {
      nlohmann::json built_at = nlohmann::json::object();
      for (const auto& s : sources) {
        if (auto it = built.find(s); it != built.end()) built_at[s] = it->second;
      }
      return nlohmann::json{{"name", to_string(name)},
                            {"kind", kind},
                            {"sources", sources},
                            {"orders", {min_order, max_order}},
                            {"built", built_at}};
    };
    return {{"layers",
             {entry(LayerName::allocation, "category", {"prefixes.tsv"}, kMinOrder, kMaxOrder),
              entry(LayerName::traffic, "updown", {"flows.csv"}, kMinOrder, kMaxOrder),
              entry(LayerName::events, "scalar", {"events.csv"}, kMinOrder, kMaxOrder),
              entry(LayerName::as_heights, "scalar", {"pfx2as.tsv"}, 8, 8)}}};
  }

private:
  mutable std::mutex cache_mutex_;
  mutable std::map<std::tuple<int, int, int, int>, std::shared_ptr<const GridLayer>> cache_;
};

/// Renders a tile to PNG bytes. The CLI and the HTTP service both end here.
inline std::string render_tile_png(const GridLayer& layer, uint32_t cell_px) {
  return encode_png(render_layer(layer, default_palette(layer), RenderOptions{cell_px}));
}

} // namespace cybermap
