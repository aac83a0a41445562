#pragma once

// Binds a Service to a cpp-httplib server.

#include "cybermap/service.hpp"

#include <httplib.h>

#include <filesystem>
#include <string>

namespace cybermap {

inline Params to_params(const httplib::Request& req) {
  Params out;
  for (const auto& [k, v] : req.params) out.emplace(k, v); // first value wins
  return out;
}

inline void send(httplib::Response& res, const Response& r) {
  res.status = r.status;
  res.set_content(r.body, r.content_type);
}

/// Registers the /api/v1 routes. When `viewer_dir` names an existing
/// directory its files are served at "/".
inline void bind_routes(httplib::Server& server, const Service& service,
                        const std::filesystem::path& viewer_dir = {}) {
  server.Get("/api/v1/layers", [&](const httplib::Request&, httplib::Response& res) {
    send(res, service.layers());
  });
  server.Get("/api/v1/tile", [&](const httplib::Request& req, httplib::Response& res) {
    send(res, service.tile(to_params(req)));
  });
  server.Get("/api/v1/resolve", [&](const httplib::Request& req, httplib::Response& res) {
    send(res, service.resolve(to_params(req)));
  });
  server.Get("/api/v1/cell", [&](const httplib::Request& req, httplib::Response& res) {
    send(res, service.cell(to_params(req)));
  });
  server.Get(R"(/api/v1/as/([^/]+))", [&](const httplib::Request& req, httplib::Response& res) {
    send(res, service.as(req.matches[1].str()));
  });
  server.Get("/api/v1/frames", [&](const httplib::Request& req, httplib::Response& res) {
    send(res, service.frames(to_params(req)));
  });
  if (!viewer_dir.empty() && std::filesystem::is_directory(viewer_dir)) {
    server.set_mount_point("/", viewer_dir.string());
  }
  server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (res.body.empty() && res.status == 404) send(res, Service::not_found(req.path));
  });
}

} // namespace cybermap
