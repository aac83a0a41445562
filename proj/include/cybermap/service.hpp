#pragma once

// Read-only map API over an atomically swappable data snapshot.
//
//   GET /api/v1/layers
//   GET /api/v1/tile?layer=&order=|scale=&x0=&y0=&x1=&y1=&cell_px=&endpoint=&key=
//   GET /api/v1/resolve?ip=
//   GET /api/v1/cell?order=&x=&y=
//   GET /api/v1/as/{asn}
//   GET /api/v1/frames?layer=events&interval=&order=
//
// Errors are JSON bodies {error, detail}.

#include "cybermap/aggregate.hpp"
#include "cybermap/coords.hpp"
#include "cybermap/dataset.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

namespace cybermap {

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

using Params = std::map<std::string, std::string>;

namespace detail {

inline Response json_response(const nlohmann::json& j, int status = 200) {
  return Response{status, "application/json", j.dump()};
}

inline Response error_response(int status, std::string_view error, std::string_view detail) {
  return json_response({{"error", error}, {"detail", detail}}, status);
}

struct HttpError {
  int status;
  std::string error;
  std::string detail;
};

inline const std::string* param(const Params& p, const std::string& name) {
  auto it = p.find(name);
  return it == p.end() ? nullptr : &it->second;
}

inline uint32_t uint_param(const Params& p, const std::string& name,
                           std::optional<uint32_t> fallback = std::nullopt) {
  const auto* v = param(p, name);
  if (!v) {
    if (fallback) return *fallback;
    throw HttpError{400, "bad_request", "missing parameter '" + name + "'"};
  }
  const auto parsed = parse_uint(*v, 0xffffffffu);
  if (!parsed) throw HttpError{400, "bad_request", "parameter '" + name + "' is not an unsigned integer"};
  return *parsed;
}

inline Order order_param(const Params& p, std::optional<int> fallback = std::nullopt) {
  try {
    if (const auto* scale = param(p, "scale")) return parse_scale(*scale);
    if (!param(p, "order") && fallback) return Order(*fallback);
    return Order(static_cast<int>(uint_param(p, "order")));
  } catch (const std::logic_error& e) {
    throw HttpError{400, "bad_request", e.what()};
  }
}

inline nlohmann::json cell_json(const Cell& c) {
  return {{"order", c.order.value()}, {"x", c.x}, {"y", c.y}};
}

inline nlohmann::json attrs_json(const PrefixAttrs* attrs) {
  return attrs ? nlohmann::json(*attrs) : nlohmann::json(nullptr);
}

} // namespace detail

class Service {
public:
  /// Full grids up to this order are cached per snapshot.
  static constexpr int kCacheOrder = 10;

  explicit Service(std::shared_ptr<const Snapshot> snapshot) : snapshot_(std::move(snapshot)) {}

  std::shared_ptr<const Snapshot> snapshot() const {
    std::lock_guard lock(mutex_);
    return snapshot_;
  }

  /// Replaces the served data. Requests in flight finish on the old snapshot.
  void swap(std::shared_ptr<const Snapshot> next) {
    std::lock_guard lock(mutex_);
    snapshot_ = std::move(next);
  }

  Response layers() const { return detail::json_response(snapshot()->catalog()); }

  Response tile(const Params& p) const {
    return guarded([&] {
      const auto* name = detail::param(p, "layer");
      if (!name) throw detail::HttpError{400, "bad_request", "missing parameter 'layer'"};
      const auto layer = parse_layer_name(*name);
      if (!layer) throw detail::HttpError{404, "not_found", "unknown layer '" + *name + "'"};
      const TileSpec spec = tile_spec(*layer, p);
      try {
        const auto grid = snapshot()->build_cached(spec, kCacheOrder);
        return Response{200, "image/png", render_tile_png(grid, spec.cell_px)};
      } catch (const std::logic_error& e) {
        throw detail::HttpError{400, "bad_request", e.what()};
      }
    });
  }

  /// Parses tile query parameters. Shared with callers that need the spec
  /// without rendering.
  static TileSpec tile_spec(LayerName layer, const Params& p) {
    TileSpec spec;
    spec.layer = layer;
    spec.order = detail::order_param(p, layer == LayerName::as_heights ? 8 : 10);
    const bool any_rect = detail::param(p, "x0") || detail::param(p, "y0") ||
                          detail::param(p, "x1") || detail::param(p, "y1");
    if (any_rect) {
      spec.rect = Rect{detail::uint_param(p, "x0"), detail::uint_param(p, "y0"),
                       detail::uint_param(p, "x1"), detail::uint_param(p, "y1")};
      if (!spec.rect->valid_for(spec.order)) {
        throw detail::HttpError{400, "bad_request", "rect outside the order's grid"};
      }
    }
    spec.cell_px = detail::uint_param(p, "cell_px", 1);
    if (spec.cell_px == 0 || spec.cell_px > 64) {
      throw detail::HttpError{400, "bad_request", "cell_px must be in [1, 64]"};
    }
    if (const auto* e = detail::param(p, "endpoint")) {
      if (*e == "src") spec.endpoint = Endpoint::src;
      else if (*e == "dst") spec.endpoint = Endpoint::dst;
      else throw detail::HttpError{400, "bad_request", "endpoint must be src or dst"};
    }
    if (const auto* k = detail::param(p, "key")) {
      if (*k == "color") spec.key = ClassKey::color_class;
      else if (*k == "category") spec.key = ClassKey::category;
      else if (*k == "designation") spec.key = ClassKey::designation;
      else if (*k == "asn") spec.key = ClassKey::asn;
      else throw detail::HttpError{400, "bad_request", "unknown class key '" + *k + "'"};
    }
    return spec;
  }

  Response resolve(const Params& p) const {
    return guarded([&] {
      const auto* text = detail::param(p, "ip");
      if (!text) throw detail::HttpError{400, "bad_request", "missing parameter 'ip'"};
      const auto ip = try_parse_ip(*text);
      if (!ip) throw detail::HttpError{400, "bad_request", "malformed IPv4 address '" + *text + "'"};
      const auto snap = snapshot();
      nlohmann::json cells = nlohmann::json::array();
      for (int n = kMinOrder; n <= kMaxOrder; ++n) {
        cells.push_back(detail::cell_json(ip_to_cell(*ip, Order(n))));
      }
      const auto match = snap->store.match(*ip);
      nlohmann::json out = {{"ip", to_string(*ip)}, {"cells", cells}};
      out["prefix"] = match ? nlohmann::json(to_string(match->prefix)) : nlohmann::json(nullptr);
      out["attrs"] = detail::attrs_json(match ? match->attrs : nullptr);
      out["asn"] = match && match->attrs->asn ? nlohmann::json(match->attrs->asn->value)
                                             : nlohmann::json(nullptr);
      return detail::json_response(out);
    });
  }

  /// The cell's prefix, the attributes of the most specific stored prefix
  /// covering the whole cell, and its four refinements.
  Response cell(const Params& p) const {
    return guarded([&] {
      const Order order = detail::order_param(p);
      const Cell c{order, detail::uint_param(p, "x"), detail::uint_param(p, "y")};
      if (c.x >= order.side() || c.y >= order.side()) {
        throw detail::HttpError{400, "bad_request", "cell outside the order's grid"};
      }
      const Cidr cidr = cell_to_prefix(c);
      const auto match = snapshot()->store.match(cidr.base(), cidr.len());
      nlohmann::json children = nlohmann::json::array();
      for (const auto& child : child_cells(c)) {
        auto j = detail::cell_json(child);
        j["cidr"] = to_string(cell_to_prefix(child));
        children.push_back(std::move(j));
      }
      auto out = detail::cell_json(c);
      out["cidr"] = to_string(cidr);
      out["scale"] = scale_notation(order);
      out["prefix"] = match ? nlohmann::json(to_string(match->prefix)) : nlohmann::json(nullptr);
      out["attrs"] = detail::attrs_json(match ? match->attrs : nullptr);
      out["children"] = std::move(children);
      return detail::json_response(out);
    });
  }

  Response as(std::string_view asn_text) const {
    return guarded([&] {
      const auto value = detail::parse_uint(asn_text, 0xffffffffu);
      if (!value) throw detail::HttpError{400, "bad_request", "malformed ASN"};
      const Asn asn{*value};
      const auto snap = snapshot();
      nlohmann::json prefixes = nlohmann::json::array();
      for (const auto& r : snap->routes) {
        if (r.asn == asn) prefixes.push_back(to_string(r.prefix));
      }
      nlohmann::json links = nlohmann::json::array();
      for (const auto& l : snap->links) {
        if (l.a == asn || l.b == asn) {
          const bool provider = l.relationship == Relationship::provider_customer && l.a == asn;
          const bool customer = l.relationship == Relationship::provider_customer && l.b == asn;
          links.push_back({{"peer", (l.a == asn ? l.b : l.a).value},
                           {"relationship", provider   ? "customer"
                                            : customer ? "provider"
                                                       : std::string(to_string(l.relationship))}});
        }
      }
      const auto h = snap->heights.find(asn);
      if (prefixes.empty() && links.empty() && h == snap->heights.end()) {
        throw detail::HttpError{404, "not_found", "no data for AS" + std::to_string(asn.value)};
      }
      nlohmann::json out = {{"asn", asn.value},
                            {"height", h == snap->heights.end() ? 0 : h->second},
                            {"prefixes", prefixes},
                            {"links", links}};
      out["cell"] = asn.value < (1u << 16) ? detail::cell_json(asn_to_cell(asn))
                                           : nlohmann::json(nullptr);
      return detail::json_response(out);
    });
  }

  Response frames(const Params& p) const {
    return guarded([&] {
      const auto* layer = detail::param(p, "layer");
      if (layer && *layer != "events") {
        throw detail::HttpError{404, "not_found", "frames exist only for the events layer"};
      }
      const uint32_t interval = detail::uint_param(p, "interval");
      if (interval == 0) throw detail::HttpError{400, "bad_request", "interval must be positive"};
      const Order order = detail::order_param(p, 8);
      if (order.cell_count() > kMaxGridCells) {
        throw detail::HttpError{400, "bad_request", "frame order too fine"};
      }
      return detail::json_response(frames_json(make_frames(snapshot()->events, interval, order)));
    });
  }

  static Response not_found(std::string_view path) {
    return detail::error_response(404, "not_found", "no route for " + std::string(path));
  }

private:
  template <class Fn>
  static Response guarded(Fn&& fn) {
    try {
      return fn();
    } catch (const detail::HttpError& e) {
      return detail::error_response(e.status, e.error, e.detail);
    } catch (const std::exception& e) {
      return detail::error_response(500, "internal", e.what());
    }
  }

  mutable std::mutex mutex_;
  std::shared_ptr<const Snapshot> snapshot_;
};

} // namespace cybermap
