#include "cybermap/http.hpp"
#include "cybermap/service.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <thread>

using namespace cybermap;
namespace fs = std::filesystem;

namespace {

fs::path fixture_data_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / ("cybermap_service_" + std::to_string(::getpid()));
    fs::remove_all(d);
    const DataDir data{d};
    const std::pair<DataKind, const char*> files[] = {
        {DataKind::iana, "iana.csv"},     {DataKind::pfx2as, "pfx2as.tsv"},
        {DataKind::flows, "flows.csv"},   {DataKind::events, "events.csv"},
        {DataKind::links, "aslinks.txt"},
    };
    for (const auto& [kind, name] : files) {
      std::ifstream in(std::string(CYBERMAP_FIXTURES) + "/" + name);
      const auto report = ingest(data, kind, in);
      EXPECT_TRUE(report.errors.empty()) << name;
    }
    return d;
  }();
  return dir;
}

class ServiceTest : public ::testing::Test {
protected:
  static void SetUpTestSuite() {
    service_ = new Service(Snapshot::load(DataDir{fixture_data_dir()}));
  }
  static void TearDownTestSuite() {
    delete service_;
    fs::remove_all(fixture_data_dir());
  }
  static nlohmann::json json_of(const Response& r) { return nlohmann::json::parse(r.body); }

  static inline Service* service_ = nullptr;
};

} // namespace

TEST_F(ServiceTest, Layers) {
  const auto r = service_->layers();
  EXPECT_EQ(r.status, 200);
  const auto j = json_of(r);
  ASSERT_EQ(j.at("layers").size(), 4u);
  std::set<std::string> names;
  for (const auto& l : j.at("layers")) names.insert(l.at("name").get<std::string>());
  EXPECT_EQ(names, (std::set<std::string>{"allocation", "traffic", "events", "as_heights"}));
  EXPECT_TRUE(j.at("layers")[0].at("built").contains("prefixes.tsv"));
}

TEST_F(ServiceTest, TileWholeMap) {
  const auto r = service_->tile({{"layer", "allocation"}, {"scale", "1:/20"}});
  ASSERT_EQ(r.status, 200) << r.body;
  EXPECT_EQ(r.content_type, "image/png");
  EXPECT_EQ(r.body.substr(1, 3), "PNG");
  EXPECT_EQ(static_cast<unsigned char>(r.body[18]), 4u);  // width 1024
  EXPECT_EQ(static_cast<unsigned char>(r.body[19]), 0u);
}

TEST_F(ServiceTest, TileDrillDownMatchesDirectBuild) {
  // The fixture AS's 59.0.0.0/8 at the /28 scale.
  const Order order = parse_scale("1:/28");
  const auto regions = prefix_to_region(parse_cidr("59.0.0.0/8"), order);
  ASSERT_EQ(regions.size(), 1u);
  const Rect r{regions[0].x0, regions[0].y0, regions[0].x0 + 255, regions[0].y0 + 255};
  const Params p{{"layer", "allocation"}, {"order", "14"},        {"x0", std::to_string(r.x0)},
                 {"y0", std::to_string(r.y0)}, {"x1", std::to_string(r.x1)},
                 {"y1", std::to_string(r.y1)}};
  const auto res = service_->tile(p);
  ASSERT_EQ(res.status, 200) << res.body;
  const auto snap = service_->snapshot();
  TileSpec spec;
  spec.order = order;
  spec.rect = r;
  const auto grid = snap->build(spec);
  EXPECT_EQ(std::get<CategoryGrid>(grid).nonzero_count(), 256u * 256u);
  EXPECT_EQ(res.body, render_tile_png(grid, 1));
}

TEST_F(ServiceTest, CachedAndUncachedAgree) {
  const auto snap = service_->snapshot();
  for (auto layer : {LayerName::allocation, LayerName::traffic, LayerName::events}) {
    TileSpec spec;
    spec.layer = layer;
    spec.order = Order(9);
    spec.rect = Rect{10, 20, 300, 400};
    EXPECT_EQ(snap->build_cached(spec, 10), snap->build(spec));
    EXPECT_EQ(snap->build_cached(spec, 10), snap->build(spec));
  }
}

TEST_F(ServiceTest, TileErrors) {
  const auto unknown = service_->tile({{"layer", "nope"}, {"order", "4"}});
  EXPECT_EQ(unknown.status, 404);
  EXPECT_EQ(json_of(unknown).at("error"), "not_found");
  EXPECT_TRUE(json_of(unknown).contains("detail"));
  EXPECT_EQ(service_->tile({{"layer", "allocation"}, {"order", "17"}}).status, 400);
  EXPECT_EQ(service_->tile({{"layer", "allocation"}, {"order", "4"}, {"x0", "0"}, {"y0", "0"},
                            {"x1", "16"}, {"y1", "3"}}).status, 400);
  EXPECT_EQ(service_->tile({{"layer", "allocation"}, {"order", "4"}, {"x0", "0"}}).status, 400);
  EXPECT_EQ(service_->tile({{"layer", "allocation"}, {"order", "14"}}).status, 400);
  EXPECT_EQ(service_->tile({{"layer", "as_heights"}, {"order", "9"}}).status, 400);
  EXPECT_EQ(service_->tile({{"layer", "traffic"}, {"scale", "1:/21"}}).status, 400);
  EXPECT_EQ(service_->tile({{"layer", "traffic"}, {"order", "4"}, {"endpoint", "x"}}).status, 400);
  EXPECT_EQ(service_->tile({{"layer", "allocation"}, {"order", "4"}, {"cell_px", "0"}}).status, 400);
}

TEST_F(ServiceTest, Resolve) {
  const auto zero = json_of(service_->resolve({{"ip", "0.0.0.0"}}));
  ASSERT_EQ(zero.at("cells").size(), 16u);
  for (const auto& c : zero.at("cells")) {
    EXPECT_EQ(c.at("x"), 0);
    EXPECT_EQ(c.at("y"), 0);
  }
  const auto one = json_of(service_->resolve({{"ip", "1.0.0.77"}}));
  EXPECT_EQ(one.at("prefix"), "1.0.0.0/24");
  EXPECT_EQ(one.at("asn"), 13335);
  EXPECT_EQ(one.at("attrs").at("color_class"), "AS13335");
  EXPECT_EQ(service_->resolve({{"ip", "256.1.1.1"}}).status, 400);
  EXPECT_EQ(service_->resolve({}).status, 400);
}

TEST_F(ServiceTest, Cell) {
  const auto origin = json_of(service_->cell({{"order", "10"}, {"x", "0"}, {"y", "0"}}));
  EXPECT_EQ(origin.at("cidr"), "0.0.0.0/20");
  EXPECT_EQ(origin.at("scale"), "1:/20");
  EXPECT_EQ(origin.at("children").size(), 4u);
  for (int n = 1; n < 16; ++n) {
    const auto j = json_of(service_->cell({{"order", std::to_string(n)}, {"x", "1"}, {"y", "1"}}));
    EXPECT_EQ(j.at("children").size(), 4u);
  }
  const auto leaf = json_of(service_->cell({{"order", "16"}, {"x", "65535"}, {"y", "0"}}));
  EXPECT_EQ(leaf.at("cidr"), "255.255.255.255/32");
  EXPECT_TRUE(leaf.at("children").empty());
  EXPECT_EQ(service_->cell({{"order", "10"}, {"x", "1024"}, {"y", "0"}}).status, 400);
  EXPECT_EQ(service_->cell({{"order", "0"}, {"x", "0"}, {"y", "0"}}).status, 400);
}

TEST_F(ServiceTest, As) {
  const auto j = json_of(service_->as("4538"));
  EXPECT_EQ(j.at("height"), 33554432u);
  EXPECT_EQ(j.at("prefixes").size(), 6u);
  EXPECT_EQ(j.at("cell").at("x"), 76);
  EXPECT_EQ(j.at("cell").at("y"), 24);
  EXPECT_FALSE(j.at("links").empty());
  const auto wide = json_of(service_->as("4200000001"));
  EXPECT_TRUE(wide.at("cell").is_null());
  EXPECT_EQ(service_->as("64999").status, 404);
  EXPECT_EQ(service_->as("abc").status, 400);
}

TEST_F(ServiceTest, Frames) {
  const auto r = service_->frames({{"layer", "events"}, {"interval", "60"}});
  ASSERT_EQ(r.status, 200);
  const auto j = json_of(r);
  ASSERT_EQ(j.size(), 10u);
  EXPECT_EQ(j[0].at("end"), j[1].at("start"));
  EXPECT_EQ(service_->frames({{"layer", "traffic"}, {"interval", "60"}}).status, 404);
  EXPECT_EQ(service_->frames({{"interval", "0"}}).status, 400);
  EXPECT_EQ(service_->frames({}).status, 400);
}

TEST_F(ServiceTest, IdenticalRequestsIdenticalBodies) {
  const Params p{{"layer", "traffic"}, {"order", "12"}, {"x0", "0"}, {"y0", "0"}, {"x1", "511"}, {"y1", "511"}};
  EXPECT_EQ(service_->tile(p).body, service_->tile(p).body);
}

TEST_F(ServiceTest, SnapshotSwap) {
  Service s(service_->snapshot());
  s.swap(std::make_shared<const Snapshot>());
  EXPECT_EQ(json_of(s.resolve({{"ip", "1.0.0.77"}})).at("prefix"), nullptr);
  EXPECT_EQ(json_of(service_->resolve({{"ip", "1.0.0.77"}})).at("prefix"), "1.0.0.0/24");
}

TEST_F(ServiceTest, HttpRoundTrip) {
  httplib::Server server;
  bind_routes(server, *service_);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto tile = client.Get("/api/v1/tile?layer=events&order=8&x0=0&y0=0&x1=127&y1=63&cell_px=2");
  ASSERT_TRUE(tile);
  EXPECT_EQ(tile->status, 200);
  EXPECT_EQ(tile->get_header_value("Content-Type"), "image/png");
  EXPECT_EQ(tile->body, service_->tile({{"layer", "events"}, {"order", "8"}, {"x0", "0"}, {"y0", "0"},
                                        {"x1", "127"}, {"y1", "63"}, {"cell_px", "2"}}).body);

  auto cell = client.Get("/api/v1/cell?order=10&x=0&y=0");
  ASSERT_TRUE(cell);
  EXPECT_EQ(nlohmann::json::parse(cell->body).at("cidr"), "0.0.0.0/20");
  auto bad = client.Get("/api/v1/resolve?ip=256.1.1.1");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  auto as = client.Get("/api/v1/as/4538");
  ASSERT_TRUE(as);
  EXPECT_EQ(nlohmann::json::parse(as->body).at("height"), 33554432u);
  auto missing = client.Get("/api/v1/nothing");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  EXPECT_EQ(nlohmann::json::parse(missing->body).at("error"), "not_found");

  server.stop();
  worker.join();
}
