#include "cybermap/ingest.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

using namespace cybermap;

namespace {

template <class Parse>
auto parse_text(Parse parse, const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

auto iana(const std::string& body) {
  return parse_text([](std::istream& s) { return parse_iana_csv(s); },
                    "Prefix,Designation,Date,Status\n" + body);
}
auto pfx2as(const std::string& t) {
  return parse_text([](std::istream& s) { return parse_pfx2as(s); }, t);
}
auto flows(const std::string& t) {
  return parse_text([](std::istream& s) { return parse_flows_csv(s); }, t);
}
auto events(const std::string& t) {
  return parse_text([](std::istream& s) { return parse_events_csv(s); }, t);
}
auto links(const std::string& t) {
  return parse_text([](std::istream& s) { return parse_as_links(s); }, t);
}

} // namespace

TEST(ParseIana, NormalizesRegistryPrefixes) {
  const auto r = iana("001/8,APNIC,1983-09,ALLOCATED\n224/8,Multicast,,RESERVED\n000/8,IANA,,reserved\n");
  ASSERT_TRUE(r.errors.empty());
  ASSERT_EQ(r.records.size(), 3u);
  EXPECT_EQ(r.records[0].prefix, parse_cidr("1.0.0.0/8"));
  EXPECT_EQ(r.records[0].category, Category::allocated);
  EXPECT_EQ(r.records[0].date, "1983-09");
  EXPECT_EQ(r.records[1].category, Category::reserved);
  EXPECT_EQ(r.records[1].date, "");
  EXPECT_EQ(r.records[2].prefix, parse_cidr("0.0.0.0/8"));
}

TEST(ParseIana, BadLinesDoNotAbortBatch) {
  const auto r = iana("001/8,APNIC,1983-09,ALLOCATED\n300/8,Nope,,ALLOCATED\n002/8,RIPE,2009-09,SOLD\n"
                      "003/8,ARIN,1994-05,LEGACY\n");
  ASSERT_EQ(r.records.size(), 2u);
  ASSERT_EQ(r.errors.size(), 2u);
  EXPECT_EQ(r.errors[0].line, 3u);
  EXPECT_EQ(r.errors[1].line, 4u);
  EXPECT_EQ(r.records[1].category, Category::legacy);
}

TEST(ParseIana, RealRegistryColumnsAndQuotes) {
  std::ifstream in(CYBERMAP_FIXTURES "/iana.csv");
  const auto r = parse_iana_csv(in);
  EXPECT_TRUE(r.errors.empty());
  EXPECT_EQ(r.records.size(), 18u);
  EXPECT_EQ(r.records[6].prefix, parse_cidr("10.0.0.0/8"));
  EXPECT_EQ(r.records[6].designation, "IANA - Private Use");
}

TEST(ParsePfx2as, Lines) {
  const auto r = pfx2as("1.0.0.0\t24\t13335\n9.9.9.0\t24\t19281,19282\n1.0.0.0\t33\t1\n"
                        "8.8.8.0\t24\t15169_36040\n1.0.0.1\t24\t5\n");
  ASSERT_EQ(r.records.size(), 3u);
  EXPECT_EQ(r.records[0], (PrefixAsRecord{parse_cidr("1.0.0.0/24"), Asn{13335}, false}));
  EXPECT_EQ(r.records[1].asn, Asn{19281});
  EXPECT_TRUE(r.records[1].multi_origin);
  EXPECT_TRUE(r.records[2].multi_origin);
  ASSERT_EQ(r.errors.size(), 2u);
  EXPECT_EQ(r.errors[0].line, 3u);
  EXPECT_EQ(r.errors[1].line, 5u);
}

TEST(ParseFlows, Lines) {
  const auto r = flows(
      "ts,src_ip,src_port,dst_ip,dst_port,proto,bytes,direction\n"
      "1714000000,10.0.0.5,51000,93.184.216.34,443,tcp,12000,down\n"
      "1714000001,10.0.0.5,51000,93.184.216.34,53,UDP,0,up\n"
      "1714000002,10.0.0.5,51000,93.184.216.34,53,udp,10,sideways\n"
      "1714000003,10.0.0.5,70000,93.184.216.34,53,udp,10,up\r\n");
  ASSERT_EQ(r.records.size(), 2u);
  EXPECT_EQ(r.records[0].direction, Direction::download);
  EXPECT_EQ(r.records[0].bytes, 12000u);
  EXPECT_EQ(r.records[0].dst_port.value, 443);
  EXPECT_EQ(r.records[1].protocol, Protocol::udp);
  EXPECT_EQ(r.records[1].bytes, 0u);
  EXPECT_EQ(r.records[1].direction, Direction::upload);
  ASSERT_EQ(r.errors.size(), 2u);
  EXPECT_EQ(r.lines, 4u);
}

TEST(ParseFlows, InferDirectionFromLocalPrefix) {
  auto r = flows("1,10.0.0.5,51000,93.184.216.34,443,tcp,5,down\n2,93.184.216.34,443,10.0.0.5,51000,tcp,5,up\n");
  const std::vector<Cidr> local{parse_cidr("10.0.0.0/8")};
  for (auto& f : r.records) infer_direction(f, local);
  EXPECT_EQ(r.records[0].direction, Direction::upload);
  EXPECT_EQ(r.records[1].direction, Direction::download);
}

TEST(ParseEvents, Lines) {
  const auto one = events("1714000060,198.51.100.7,10.0.0.1,ddos\n");
  ASSERT_EQ(one.records.size(), 1u);
  EXPECT_EQ(one.records[0].kind, "ddos");
  EXPECT_EQ(one.records[0].timestamp, 1714000060);
  const auto empty = events("");
  EXPECT_TRUE(empty.records.empty());
  EXPECT_TRUE(empty.errors.empty());
  const auto bad = events("ts,src_ip,dst_ip,kind\n1,198.51.100.300,10.0.0.1,ddos\n2,1.1.1.1,2.2.2.2,scan\n");
  EXPECT_EQ(bad.records.size(), 1u);
  ASSERT_EQ(bad.errors.size(), 1u);
  EXPECT_EQ(bad.errors[0].line, 2u);
}

TEST(ParseLinks, RelationshipsAndComments) {
  const auto r = links("# header\n1|2|-1\n3|4|0\n5|6\n7|7|0\nx|1|0\n");
  ASSERT_EQ(r.records.size(), 3u);
  EXPECT_EQ(r.records[0].relationship, Relationship::provider_customer);
  EXPECT_EQ(r.records[1].relationship, Relationship::peer);
  EXPECT_EQ(r.records[2].relationship, Relationship::unknown);
  EXPECT_EQ(r.errors.size(), 2u);
  EXPECT_EQ(r.skipped, 1u);
}

TEST(Parsers, TotalOnArbitraryBytes) {
  std::mt19937 rng(99);
  const std::string alphabet = "0123456789./,\t|_-: abcxyzUPdown\r\n\"#\xff";
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    const int n = static_cast<int>(rng() % 400);
    for (int i = 0; i < n; ++i) text += alphabet[rng() % alphabet.size()];
    auto check = [&](auto result) {
      EXPECT_EQ(result.records.size() + result.errors.size() + result.skipped, result.lines);
    };
    check(parse_text([](std::istream& s) { return parse_iana_csv(s); }, text));
    check(pfx2as(text));
    check(flows(text));
    check(events(text));
    check(links(text));
  }
}

TEST(Parsers, ReparseOfSerializedRecordsIsIdentity) {
  auto roundtrip = [](const auto& records, auto parse, std::string header) {
    std::string text = header.empty() ? "" : header + "\n";
    for (const auto& r : records) text += to_line(r) + "\n";
    std::istringstream in(text);
    const auto again = parse(in);
    EXPECT_TRUE(again.errors.empty());
    EXPECT_EQ(again.records, records);
  };
  for (const char* name : {"/iana.csv", "/pfx2as.tsv", "/flows.csv", "/events.csv", "/aslinks.txt"}) {
    std::ifstream in(std::string(CYBERMAP_FIXTURES) + name);
    const std::string n = name;
    if (n == "/iana.csv") {
      roundtrip(parse_iana_csv(in).records, [](std::istream& s) { return parse_iana_csv(s); },
                std::string(kIanaHeader));
    } else if (n == "/pfx2as.tsv") {
      roundtrip(parse_pfx2as(in).records, [](std::istream& s) { return parse_pfx2as(s); }, "");
    } else if (n == "/flows.csv") {
      roundtrip(parse_flows_csv(in).records, [](std::istream& s) { return parse_flows_csv(s); },
                std::string(kFlowsHeader));
    } else if (n == "/events.csv") {
      roundtrip(parse_events_csv(in).records, [](std::istream& s) { return parse_events_csv(s); },
                std::string(kEventsHeader));
    } else {
      roundtrip(parse_as_links(in).records, [](std::istream& s) { return parse_as_links(s); }, "");
    }
  }
}

TEST(PrefixStore, InsertAndLookup) {
  PrefixStore store;
  EXPECT_EQ(store.lookup(parse_ip("1.2.3.4")), nullptr);

  PrefixAttrs root;
  root.designation = "root";
  store.insert(parse_cidr("0.0.0.0/0"), root);
  ASSERT_NE(store.lookup(parse_ip("200.1.2.3")), nullptr);
  EXPECT_EQ(store.lookup(parse_ip("200.1.2.3"))->designation, "root");

  PrefixAttrs a8, a24, a24b;
  a8.designation = "eight";
  a24.designation = "A";
  a24b.designation = "B";
  store.insert(parse_cidr("1.0.0.0/8"), a8);
  store.insert(parse_cidr("1.0.0.0/24"), a24);
  EXPECT_EQ(store.lookup(parse_ip("1.0.0.77"))->designation, "A");
  EXPECT_EQ(store.lookup(parse_ip("1.0.1.1"))->designation, "eight");
  store.insert(parse_cidr("1.0.0.0/24"), a24b);
  EXPECT_EQ(store.lookup(parse_ip("1.0.0.77"))->designation, "B");
  EXPECT_EQ(store.size(), 3u);

  const auto m = store.match(parse_ip("1.0.0.77"));
  ASSERT_TRUE(m);
  EXPECT_EQ(m->prefix, parse_cidr("1.0.0.0/24"));
  EXPECT_EQ(store.match(parse_ip("1.0.0.77"), 20)->prefix, parse_cidr("1.0.0.0/8"));
}

TEST(PrefixStore, LookupOutsideReturnsNone) {
  PrefixStore store;
  PrefixAttrs a;
  a.designation = "A";
  store.insert(parse_cidr("1.0.0.0/24"), a);
  EXPECT_EQ(store.lookup(parse_ip("1.0.1.1")), nullptr);
  EXPECT_NE(store.lookup(parse_ip("1.0.0.77")), nullptr);
  PrefixAttrs host;
  store.insert(parse_cidr("9.9.9.9/32"), host);
  EXPECT_NE(store.lookup(parse_ip("9.9.9.9")), nullptr);
  EXPECT_EQ(store.lookup(parse_ip("9.9.9.8")), nullptr);
}

TEST(PrefixStore, MatchesLinearScanOracle) {
  std::mt19937 rng(1234);
  for (int round = 0; round < 3; ++round) {
    PrefixTrie<int> trie;
    std::vector<oracle::Prefix> prefixes;
    const int count = 1000;
    for (int i = 0; i < count; ++i) {
      // Bias towards overlapping prefixes inside a few hot /8s.
      uint32_t addr = static_cast<uint32_t>(rng());
      if (rng() % 2) addr = (addr & 0x00ffffffu) | ((rng() % 4) << 24);
      const int len = static_cast<int>(rng() % 33);
      const Cidr c = Cidr::containing(IpV4Addr{addr}, len);
      trie.insert(c, i);
      prefixes.push_back({c.base().value, len, i});
    }
    for (int q = 0; q < 100000; ++q) {
      uint32_t ip = static_cast<uint32_t>(rng());
      if (q % 2) ip = (ip & 0x00ffffffu) | ((rng() % 4) << 24);
      const auto want = oracle::lpm_scan(prefixes, ip);
      const int* got = trie.lookup(IpV4Addr{ip});
      ASSERT_EQ(got != nullptr, want.has_value());
      if (got) {
        ASSERT_EQ(*got, *want);
      }
    }
  }
}

TEST(PrefixStore, SegmentsPartitionBlock) {
  PrefixTrie<int> trie;
  trie.insert(parse_cidr("10.0.0.0/8"), 1);
  trie.insert(parse_cidr("10.1.0.0/16"), 2);
  trie.insert(parse_cidr("10.1.2.0/24"), 3);
  std::map<int, uint64_t> counts;
  uint64_t total = 0;
  trie.segments(parse_cidr("10.0.0.0/12"), [&](const int* v, uint64_t n) {
    counts[v ? *v : 0] += n;
    total += n;
  });
  EXPECT_EQ(total, uint64_t{1} << 20);
  EXPECT_EQ(counts[3], 256u);
  EXPECT_EQ(counts[2], 65536u - 256u);
  EXPECT_EQ(counts[1], (uint64_t{1} << 20) - 65536u);
  counts.clear();
  trie.segments(parse_cidr("11.0.0.0/8"), [&](const int* v, uint64_t n) { counts[v ? *v : 0] += n; });
  EXPECT_EQ(counts[0], uint64_t{1} << 24);
}

TEST(PrefixStore, DumpAndReload) {
  PrefixStore store;
  std::ifstream iana_in(CYBERMAP_FIXTURES "/iana.csv");
  for (const auto& r : parse_iana_csv(iana_in).records) store.add(r);
  std::ifstream pfx_in(CYBERMAP_FIXTURES "/pfx2as.tsv");
  for (const auto& r : parse_pfx2as(pfx_in).records) store.add(r);

  const auto* cernet = store.find_exact(parse_cidr("59.0.0.0/8"));
  ASSERT_NE(cernet, nullptr);
  EXPECT_EQ(cernet->designation, "APNIC"); // registry data kept
  EXPECT_EQ(cernet->asn, Asn{4538});
  EXPECT_EQ(cernet->color_class, "AS4538");

  std::stringstream dump;
  store.dump(dump);
  PrefixStore again;
  EXPECT_TRUE(again.load(dump).empty());
  EXPECT_EQ(again.size(), store.size());
  std::stringstream dump2;
  again.dump(dump2);
  EXPECT_EQ(dump.str(), dump2.str());
  std::string first;
  std::istringstream lines(dump.str());
  std::getline(lines, first);
  EXPECT_EQ(first.substr(0, first.find('\t')), "0.0.0.0/8");
}
