#pragma once

// Command-line frontend. Exit codes: 0 success, 1 data errors, 2 usage errors.

#include "cybermap/aggregate.hpp"
#include "cybermap/coords.hpp"
#include "cybermap/dataset.hpp"
#include "cybermap/http.hpp"
#include "cybermap/render.hpp"
#include "cybermap/service.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace cybermap::cli {

inline constexpr int kOk = 0;
inline constexpr int kDataError = 1;
inline constexpr int kUsageError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline Rect parse_rect(const std::string& text) {
  std::vector<std::string> parts;
  csv::split(text, parts);
  if (parts.size() != 4) throw UsageError("--rect expects x0,y0,x1,y1");
  uint32_t v[4];
  for (int i = 0; i < 4; ++i) {
    const auto n = cybermap::detail::parse_uint(parts[i], 0xffffffffu);
    if (!n) throw UsageError("--rect component '" + parts[i] + "' is not an integer");
    v[i] = *n;
  }
  return Rect{v[0], v[1], v[2], v[3]};
}

inline Order order_from(const std::string& scale, int order) {
  try {
    if (!scale.empty()) return parse_scale(scale);
    return Order(order);
  } catch (const std::logic_error& e) {
    throw UsageError(e.what());
  }
}

} // namespace detail

/// Runs one CLI invocation. `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"cybermap: Hilbert-curve maps of IPv4, port and AS number space"};
  app.require_subcommand(1);
  std::string data_dir;
  app.add_option("--data-dir", data_dir, "Data directory")->envname("CYBERMAP_DATA_DIR");

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "Parse a data file into the data directory");
  std::string kind_text, input;
  std::vector<std::string> local_prefixes;
  ingest_cmd->add_option("--kind", kind_text, "iana | pfx2as | flows | events | links")
      ->required()
      ->check(CLI::IsMember({"iana", "pfx2as", "flows", "events", "links"}));
  ingest_cmd->add_option("--local-prefix", local_prefixes,
                         "Infer flow direction from these local prefixes");
  ingest_cmd->add_option("file", input, "Input file, '-' for stdin")->required();

  // render
  auto* render_cmd = app.add_subcommand("render", "Render a map image");
  render_cmd->require_subcommand(1);
  std::string output, legend, scale = "", rect_text, endpoint_text = "dst", key_text = "color",
                               layer_text = "allocation", block_text;
  int order = 10, curve_order = 3;
  uint32_t cell_px = 1, bucket = 256;
  std::optional<uint32_t> highlight;

  auto* render_ip = render_cmd->add_subcommand("ip", "IPv4 map layer");
  render_ip->add_option("--scale", scale, "Scale as 1:/2n");
  render_ip->add_option("--order", order, "Curve order (alternative to --scale)");
  render_ip->add_option("--layer", layer_text, "allocation | traffic | events | as_heights")
      ->check(CLI::IsMember({"allocation", "traffic", "events", "as_heights"}));
  render_ip->add_option("--rect", rect_text, "Window x0,y0,x1,y1 (inclusive)");
  render_ip->add_option("--cell-px", cell_px, "Pixels per cell side");
  render_ip->add_option("--endpoint", endpoint_text, "Traffic endpoint: src | dst")
      ->check(CLI::IsMember({"src", "dst"}));
  render_ip->add_option("--key", key_text, "Allocation classes: color | category | designation | asn")
      ->check(CLI::IsMember({"color", "category", "designation", "asn"}));
  render_ip->add_option("--legend", legend, "Write a JSON legend sidecar");
  render_ip->add_option("-o,--output", output, "Output .png or .ppm")->required();

  auto* render_as = render_cmd->add_subcommand("as", "AS map with topology links");
  uint32_t as_cell_px = 2;
  render_as->add_option("--cell-px", as_cell_px, "Pixels per AS cell side");
  render_as->add_option("--highlight", highlight, "ASN to outline");
  render_as->add_option("-o,--output", output, "Output .png or .ppm")->required();

  auto* render_ipport_cmd = render_cmd->add_subcommand("ipport", "IP x port traffic histogram");
  render_ipport_cmd->add_option("--block", block_text, "IP block, /16 or longer")->required();
  render_ipport_cmd->add_option("--bucket", bucket, "Port bucket size (divides 65536)");
  render_ipport_cmd->add_option("--endpoint", endpoint_text, "src | dst")
      ->check(CLI::IsMember({"src", "dst"}));
  render_ipport_cmd->add_option("--cell-px", cell_px, "Pixels per cell side");
  render_ipport_cmd->add_option("-o,--output", output, "Output .png or .ppm")->required();

  auto* render_curve_cmd = render_cmd->add_subcommand("curve", "Hilbert curve figure");
  uint32_t curve_px = 32;
  render_curve_cmd->add_option("--order", curve_order, "Curve order, 1..8")->required();
  render_curve_cmd->add_option("--cell-px", curve_px, "Pixels per cell side");
  render_curve_cmd->add_option("-o,--output", output, "Output .png or .ppm")->required();

  // query
  auto* query_cmd = app.add_subcommand("query", "Resolve addresses and cells");
  query_cmd->require_subcommand(1);
  bool as_json = false;
  std::string ip_text;
  int q_order = 0;
  uint32_t q_x = 0, q_y = 0;
  auto* query_ip = query_cmd->add_subcommand("ip", "Cells and attributes of an address");
  query_ip->add_option("addr", ip_text, "Dotted-quad address")->required();
  auto* query_cell = query_cmd->add_subcommand("cell", "Prefix and attributes of a cell");
  query_cell->add_option("order", q_order, "Curve order")->required();
  query_cell->add_option("x", q_x, "Column")->required();
  query_cell->add_option("y", q_y, "Row")->required();
  query_cell->add_flag("--json", as_json, "Print the full JSON record");

  // frames
  auto* frames_cmd = app.add_subcommand("frames", "Bucket events into fixed-interval frames");
  int64_t interval = 60;
  int frame_order = 8;
  std::string png_dir;
  frames_cmd->add_option("--interval", interval, "Frame width in seconds")->required();
  frames_cmd->add_option("--order", frame_order, "Curve order of frame layers");
  frames_cmd->add_option("-o,--output", output, "Output JSON")->required();
  frames_cmd->add_option("--png-dir", png_dir, "Also write numbered PNG stills here");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP map service");
  std::string listen = "127.0.0.1:8080", viewer_dir;
  serve_cmd->add_option("--listen", listen, "host:port");
  serve_cmd->add_option("--viewer-dir", viewer_dir, "Static viewer assets");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\n" << app.help();
    return kUsageError;
  }

  auto snapshot = [&] { return Snapshot::load(DataDir{data_dir}); };
  auto write_image = [&](const Image& img) { write_file(output, encode_for_path(img, output)); };

  try {
    if (*ingest_cmd) {
      if (data_dir.empty()) throw UsageError("ingest needs --data-dir or CYBERMAP_DATA_DIR");
      std::vector<Cidr> local;
      for (const auto& p : local_prefixes) {
        const auto c = try_parse_cidr(p);
        if (!c) throw UsageError("bad --local-prefix '" + p + "'");
        local.push_back(*c);
      }
      IngestReport report;
      const auto kind = *parse_data_kind(kind_text);
      if (input == "-") {
        report = ingest(DataDir{data_dir}, kind, std::cin, local);
      } else {
        std::ifstream in(input, std::ios::binary);
        if (!in) {
          err << "cannot read '" << input << "'\n";
          return kDataError;
        }
        report = ingest(DataDir{data_dir}, kind, in, local);
      }
      out << "ingested " << report.records << " records, " << report.errors.size() << " errors\n";
      for (const auto& e : report.errors) {
        err << input << ":" << e.line << ": " << e.message << "\n";
      }
      return report.errors.empty() ? kOk : kDataError;
    }

    if (*render_ip) {
      TileSpec spec;
      spec.layer = *parse_layer_name(layer_text);
      spec.order = detail::order_from(scale, spec.layer == LayerName::as_heights && scale.empty() &&
                                                     !render_ip->count("--order")
                                                 ? 8
                                                 : order);
      if (!rect_text.empty()) spec.rect = detail::parse_rect(rect_text);
      if (spec.rect && !spec.rect->valid_for(spec.order)) {
        throw UsageError("--rect outside the order's grid");
      }
      if (cell_px == 0) throw UsageError("--cell-px must be at least 1");
      spec.cell_px = cell_px;
      spec.endpoint = endpoint_text == "src" ? Endpoint::src : Endpoint::dst;
      spec.key = key_text == "category"      ? ClassKey::category
                 : key_text == "designation" ? ClassKey::designation
                 : key_text == "asn"         ? ClassKey::asn
                                             : ClassKey::color_class;
      GridLayer layer;
      try {
        layer = snapshot()->build(spec);
      } catch (const BadTile& e) {
        throw UsageError(e.what());
      }
      const auto palette = default_palette(layer);
      const auto img = render_layer(layer, palette, RenderOptions{spec.cell_px});
      write_image(img);
      if (!legend.empty()) write_file(legend, legend_json(layer, palette).dump(2) + "\n");
      return kOk;
    }

    if (*render_as) {
      const auto snap = snapshot();
      std::optional<Asn> hl;
      if (highlight) hl = Asn{*highlight};
      const auto result = render_as_map(snap->heights, snap->links, hl, AsMapOptions{as_cell_px});
      write_image(result.image);
      if (result.skipped_links || result.skipped_heights) {
        err << "warning: skipped " << result.skipped_links << " links and "
            << result.skipped_heights << " ASNs beyond the 16-bit grid\n";
      }
      return kOk;
    }

    if (*render_ipport_cmd) {
      const auto block = try_parse_cidr(block_text);
      if (!block) throw UsageError("bad --block '" + block_text + "'");
      PortHistogram hist;
      try {
        hist = ipport_histogram(snapshot()->flows, *block, bucket,
                                endpoint_text == "src" ? Endpoint::src : Endpoint::dst);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      write_image(render_ipport(hist, Palette::diverging(), RenderOptions{cell_px}));
      return kOk;
    }

    if (*render_curve_cmd) {
      if (curve_order < 1 || curve_order > 8) throw UsageError("--order must be in [1, 8]");
      if (curve_px == 0) throw UsageError("--cell-px must be at least 1");
      CurveOptions opt;
      opt.cell_px = curve_px;
      write_image(render_curve(Order(curve_order), opt));
      return kOk;
    }

    if (*query_ip) {
      const Service service(snapshot());
      const auto r = service.resolve({{"ip", ip_text}});
      if (r.status != 200) {
        err << r.body << "\n";
        return kUsageError;
      }
      out << nlohmann::json::parse(r.body).dump(2) << "\n";
      return kOk;
    }

    if (*query_cell) {
      const Service service(snapshot());
      const auto r = service.cell({{"order", std::to_string(q_order)},
                                   {"x", std::to_string(q_x)},
                                   {"y", std::to_string(q_y)}});
      if (r.status != 200) {
        err << r.body << "\n";
        return kUsageError;
      }
      const auto j = nlohmann::json::parse(r.body);
      if (as_json) {
        out << j.dump(2) << "\n";
      } else {
        out << j.at("cidr").get<std::string>() << "\n";
        if (!j.at("attrs").is_null()) {
          const auto& a = j.at("attrs");
          out << "covered by " << j.at("prefix").get<std::string>() << "\t"
              << a.value("designation", "") << "\t"
              << (a.at("asn").is_null() ? std::string("-") : "AS" + a.at("asn").dump()) << "\n";
        }
      }
      return kOk;
    }

    if (*frames_cmd) {
      if (interval <= 0) throw UsageError("--interval must be positive");
      if (frame_order < 1 || frame_order > 12) throw UsageError("--order must be in [1, 12]");
      const auto frames = make_frames(snapshot()->events, interval, Order(frame_order));
      write_file(output, frames_json(frames).dump() + "\n");
      if (!png_dir.empty()) {
        std::filesystem::create_directories(png_dir);
        for (std::size_t i = 0; i < frames.size(); ++i) {
          char name[32];
          std::snprintf(name, sizeof name, "frame_%05zu.png", i);
          write_file((std::filesystem::path(png_dir) / name).string(),
                     render_tile_png(frames[i].layer, 1));
        }
      }
      out << frames.size() << " frames\n";
      return kOk;
    }

    if (*serve_cmd) {
      const auto colon = listen.rfind(':');
      const auto port = colon == std::string::npos
                            ? std::nullopt
                            : cybermap::detail::parse_uint(listen.substr(colon + 1), 65535);
      if (!port) throw UsageError("--listen expects host:port");
      Service service(snapshot());
      httplib::Server server;
      bind_routes(server, service, viewer_dir);
      err << "listening on " << listen << "\n";
      if (!server.listen(listen.substr(0, colon), static_cast<int>(*port))) {
        err << "cannot listen on " << listen << "\n";
        return kDataError;
      }
      return kOk;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsageError;
}

} // namespace cybermap::cli
