#pragma once

// Parsers for the input data families and the prefix attribute store.
//
// Every parser accumulates per-line errors instead of failing fast, so one
// dirty line never drops the rest of a batch. For each parse,
// records + errors + skipped == number of non-header lines.

#include "cybermap/coords.hpp"
#include "cybermap/csv.hpp"
#include "cybermap/ip.hpp"
#include "cybermap/prefix_trie.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace cybermap {

enum class Category { unallocated, allocated, reserved, legacy, available };

inline std::string_view to_string(Category c) {
  switch (c) {
    case Category::allocated: return "allocated";
    case Category::reserved: return "reserved";
    case Category::legacy: return "legacy";
    case Category::available: return "available";
    case Category::unallocated: break;
  }
  return "unallocated";
}

inline std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline std::optional<Category> parse_category(std::string_view text) {
  const auto s = lowercase(detail::trim(text));
  for (auto c : {Category::unallocated, Category::allocated, Category::reserved,
                 Category::legacy, Category::available}) {
    if (s == to_string(c)) return c;
  }
  return std::nullopt;
}

enum class Protocol { tcp, udp, other };
enum class Direction { upload, download };
enum class Endpoint { src, dst };
enum class Relationship { peer, provider_customer, unknown };

inline std::string_view to_string(Protocol p) {
  return p == Protocol::tcp ? "tcp" : p == Protocol::udp ? "udp" : "other";
}
inline std::string_view to_string(Relationship r) {
  return r == Relationship::peer                ? "peer"
         : r == Relationship::provider_customer ? "provider_customer"
                                                : "unknown";
}

struct AllocationRecord {
  Cidr prefix;
  std::string designation;
  Category category = Category::unallocated;
  std::string date;

  friend bool operator==(const AllocationRecord&, const AllocationRecord&) = default;
};

struct PrefixAsRecord {
  Cidr prefix;
  Asn asn;
  bool multi_origin = false;

  friend bool operator==(const PrefixAsRecord&, const PrefixAsRecord&) = default;
};

struct FlowRecord {
  int64_t timestamp = 0;
  IpV4Addr src_ip;
  IpV4Addr dst_ip;
  PortNumber src_port;
  PortNumber dst_port;
  Protocol protocol = Protocol::tcp;
  uint64_t bytes = 0;
  Direction direction = Direction::download;

  IpV4Addr ip(Endpoint e) const noexcept { return e == Endpoint::src ? src_ip : dst_ip; }
  PortNumber port(Endpoint e) const noexcept {
    return e == Endpoint::src ? src_port : dst_port;
  }

  friend bool operator==(const FlowRecord&, const FlowRecord&) = default;
};

struct EventRecord {
  int64_t timestamp = 0;
  IpV4Addr src_ip;
  IpV4Addr dst_ip;
  std::string kind;

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

struct AsLink {
  Asn a;
  Asn b;
  Relationship relationship = Relationship::unknown;

  friend bool operator==(const AsLink&, const AsLink&) = default;
};

struct LineError {
  std::size_t line = 0; // 1-based
  std::string message;
};

template <class Record>
struct ParseResult {
  std::vector<Record> records;
  std::vector<LineError> errors;
  std::size_t skipped = 0; // comment lines, for formats that allow them
  std::size_t lines = 0;   // non-header lines seen
};

namespace detail {

inline std::optional<int64_t> parse_timestamp(std::string_view s) {
  s = trim(s);
  int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || v < 0) {
    return std::nullopt;
  }
  return v;
}

inline std::optional<uint64_t> parse_u64(std::string_view s) {
  s = trim(s);
  uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline bool is_blank(std::string_view s) { return trim(s).empty(); }

// Drives a line-oriented parse. `parse_line` returns either a record or an
// error message; `is_header` inspects the first line only.
template <class Record, class IsHeader, class ParseLine, class IsComment>
ParseResult<Record> parse_lines(std::istream& in, IsHeader is_header,
                                ParseLine parse_line, IsComment is_comment) {
  if (!in.good() && !in.eof()) throw std::runtime_error("unreadable input stream");
  ParseResult<Record> result;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (number == 1 && !line.empty() && static_cast<unsigned char>(line[0]) == 0xEF &&
        line.rfind("\xEF\xBB\xBF", 0) == 0) {
      line.erase(0, 3);
    }
    if (number == 1 && is_header(line)) continue;
    ++result.lines;
    if (is_comment(line)) {
      ++result.skipped;
      continue;
    }
    if (is_blank(line)) {
      result.errors.push_back({number, "empty line"});
      continue;
    }
    std::string error;
    if (auto rec = parse_line(line, error)) {
      result.records.push_back(std::move(*rec));
    } else {
      result.errors.push_back({number, std::move(error)});
    }
  }
  if (in.bad()) throw std::runtime_error("error while reading input stream");
  return result;
}

inline bool never(std::string_view) { return false; }

// First field not a number means the line is a header.
inline bool looks_like_header(std::string_view line) {
  const auto comma = line.find(',');
  const auto first = trim(line.substr(0, comma));
  return !first.empty() && !std::isdigit(static_cast<unsigned char>(first[0]));
}

inline bool valid_date(std::string_view d) {
  auto digits = [&](std::size_t pos, std::size_t n) {
    if (d.size() < pos + n) return false;
    for (std::size_t i = pos; i < pos + n; ++i) {
      if (!std::isdigit(static_cast<unsigned char>(d[i]))) return false;
    }
    return true;
  };
  if (d.empty()) return true;
  if (!digits(0, 4)) return false;
  if (d.size() == 4) return true;
  if (d[4] != '-' || !digits(5, 2)) return false;
  if (d.size() == 7) return true;
  return d.size() == 10 && d[7] == '-' && digits(8, 2);
}

// IANA registry prefixes come as "001/8"; dotted CIDRs are accepted too.
inline std::optional<Cidr> parse_registry_prefix(std::string_view text) {
  text = trim(text);
  if (text.find('.') != std::string_view::npos) return try_parse_cidr(text);
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return std::nullopt;
  const auto octet = parse_uint(text.substr(0, slash), 255);
  const auto len = parse_uint(text.substr(slash + 1), 8);
  if (!octet || !len) return std::nullopt;
  const uint32_t base = *octet << 24;
  if ((base & ~Cidr::netmask(static_cast<int>(*len))) != 0) return std::nullopt;
  return Cidr(IpV4Addr{base}, static_cast<int>(*len));
}

} // namespace detail

/// Registry allocation CSV. The header decides column positions: columns named
/// Prefix, Designation, Date and Status*; otherwise the first four columns.
inline ParseResult<AllocationRecord> parse_iana_csv(std::istream& in) {
  struct Columns {
    std::size_t prefix = 0, designation = 1, date = 2, status = 3;
  } cols;
  std::vector<std::string> fields;
  auto header = [&](std::string_view line) {
    csv::split(line, fields);
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const auto name = lowercase(detail::trim(fields[i]));
      if (name == "prefix") cols.prefix = i;
      else if (name == "designation") cols.designation = i;
      else if (name == "date") cols.date = i;
      else if (name.rfind("status", 0) == 0) cols.status = i;
    }
    return true;
  };
  auto parse = [&](std::string_view line, std::string& error) -> std::optional<AllocationRecord> {
    if (!csv::split(line, fields)) {
      error = "unterminated quote";
      return std::nullopt;
    }
    const std::size_t needed =
        std::max({cols.prefix, cols.designation, cols.date, cols.status}) + 1;
    if (fields.size() < needed) {
      error = "expected at least " + std::to_string(needed) + " fields";
      return std::nullopt;
    }
    const auto prefix = detail::parse_registry_prefix(fields[cols.prefix]);
    if (!prefix) {
      error = "bad prefix '" + fields[cols.prefix] + "'";
      return std::nullopt;
    }
    const auto category = parse_category(fields[cols.status]);
    if (!category) {
      error = "unknown status '" + fields[cols.status] + "'";
      return std::nullopt;
    }
    const auto date = detail::trim(fields[cols.date]);
    if (!detail::valid_date(date)) {
      error = "bad date '" + fields[cols.date] + "'";
      return std::nullopt;
    }
    return AllocationRecord{*prefix, std::string(detail::trim(fields[cols.designation])),
                            *category, std::string(date)};
  };
  return detail::parse_lines<AllocationRecord>(in, header, parse, detail::never);
}

/// Tab-separated `<base>\t<len>\t<asn>`. Multi-origin ASN fields such as
/// `a_b` or `a,b` keep the first ASN and set the multi_origin flag.
inline ParseResult<PrefixAsRecord> parse_pfx2as(std::istream& in) {
  auto parse = [](std::string_view line, std::string& error) -> std::optional<PrefixAsRecord> {
    std::vector<std::string_view> f;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const auto tab = line.find('\t', pos);
      f.push_back(line.substr(pos, tab == std::string_view::npos ? line.npos : tab - pos));
      if (tab == std::string_view::npos) break;
      pos = tab + 1;
    }
    if (f.size() != 3) {
      error = "expected 3 tab-separated fields";
      return std::nullopt;
    }
    const auto base = try_parse_ip(f[0]);
    const auto len = detail::parse_uint(detail::trim(f[1]), 32);
    if (!base || !len) {
      error = "bad prefix '" + std::string(f[0]) + "/" + std::string(f[1]) + "'";
      return std::nullopt;
    }
    if ((base->value & ~Cidr::netmask(static_cast<int>(*len))) != 0) {
      error = "misaligned prefix";
      return std::nullopt;
    }
    const auto origins = detail::trim(f[2]);
    const auto cut = origins.find_first_of("_,");
    const auto asn = detail::parse_uint(origins.substr(0, cut), 0xffffffffu);
    if (!asn) {
      error = "bad ASN '" + std::string(origins) + "'";
      return std::nullopt;
    }
    return PrefixAsRecord{Cidr(*base, static_cast<int>(*len)), Asn{*asn},
                          cut != std::string_view::npos};
  };
  return detail::parse_lines<PrefixAsRecord>(in, detail::never, parse, detail::never);
}

/// CSV `ts,src_ip,src_port,dst_ip,dst_port,proto,bytes,direction`; header optional.
inline ParseResult<FlowRecord> parse_flows_csv(std::istream& in) {
  std::vector<std::string> f;
  auto parse = [&](std::string_view line, std::string& error) -> std::optional<FlowRecord> {
    csv::split(line, f);
    if (f.size() != 8) {
      error = "expected 8 fields";
      return std::nullopt;
    }
    FlowRecord r;
    const auto ts = detail::parse_timestamp(f[0]);
    const auto src = try_parse_ip(f[1]);
    const auto sport = detail::parse_uint(detail::trim(f[2]), 65535);
    const auto dst = try_parse_ip(f[3]);
    const auto dport = detail::parse_uint(detail::trim(f[4]), 65535);
    const auto bytes = detail::parse_u64(f[6]);
    if (!ts) error = "bad timestamp";
    else if (!src) error = "bad source IP";
    else if (!sport) error = "bad source port";
    else if (!dst) error = "bad destination IP";
    else if (!dport) error = "bad destination port";
    else if (!bytes) error = "bad byte count";
    if (!error.empty()) return std::nullopt;
    const auto proto = lowercase(detail::trim(f[5]));
    if (proto.empty()) {
      error = "empty protocol";
      return std::nullopt;
    }
    r.protocol = proto == "tcp" || proto == "6"    ? Protocol::tcp
                 : proto == "udp" || proto == "17" ? Protocol::udp
                                                   : Protocol::other;
    const auto dir = lowercase(detail::trim(f[7]));
    if (dir == "up") r.direction = Direction::upload;
    else if (dir == "down") r.direction = Direction::download;
    else {
      error = "direction must be up or down, got '" + f[7] + "'";
      return std::nullopt;
    }
    r.timestamp = *ts;
    r.src_ip = *src;
    r.src_port = PortNumber{static_cast<uint16_t>(*sport)};
    r.dst_ip = *dst;
    r.dst_port = PortNumber{static_cast<uint16_t>(*dport)};
    r.bytes = *bytes;
    return r;
  };
  return detail::parse_lines<FlowRecord>(in, detail::looks_like_header, parse, detail::never);
}

/// CSV `ts,src_ip,dst_ip,kind`; header optional.
inline ParseResult<EventRecord> parse_events_csv(std::istream& in) {
  std::vector<std::string> f;
  auto parse = [&](std::string_view line, std::string& error) -> std::optional<EventRecord> {
    csv::split(line, f);
    if (f.size() != 4) {
      error = "expected 4 fields";
      return std::nullopt;
    }
    const auto ts = detail::parse_timestamp(f[0]);
    const auto src = try_parse_ip(f[1]);
    const auto dst = try_parse_ip(f[2]);
    const auto kind = detail::trim(f[3]);
    if (!ts) error = "bad timestamp";
    else if (!src) error = "bad source IP";
    else if (!dst) error = "bad destination IP";
    else if (kind.empty()) error = "empty event kind";
    if (!error.empty()) return std::nullopt;
    return EventRecord{*ts, *src, *dst, std::string(kind)};
  };
  return detail::parse_lines<EventRecord>(in, detail::looks_like_header, parse, detail::never);
}

/// AS relationship lines `a|b|rel`: rel -1 is provider-customer, 0 is peer,
/// anything else (or missing) is unknown. Lines starting with '#' are comments.
inline ParseResult<AsLink> parse_as_links(std::istream& in) {
  auto parse = [](std::string_view line, std::string& error) -> std::optional<AsLink> {
    std::vector<std::string> f;
    csv::split(line, f, '|');
    if (f.size() < 2) {
      error = "expected a|b[|rel]";
      return std::nullopt;
    }
    const auto a = detail::parse_uint(detail::trim(f[0]), 0xffffffffu);
    const auto b = detail::parse_uint(detail::trim(f[1]), 0xffffffffu);
    if (!a || !b) {
      error = "bad ASN";
      return std::nullopt;
    }
    if (*a == *b) {
      error = "self link";
      return std::nullopt;
    }
    Relationship rel = Relationship::unknown;
    if (f.size() >= 3) {
      const auto r = detail::trim(f[2]);
      if (r == "-1") rel = Relationship::provider_customer;
      else if (r == "0") rel = Relationship::peer;
    }
    return AsLink{Asn{*a}, Asn{*b}, rel};
  };
  auto comment = [](std::string_view line) { return !line.empty() && line.front() == '#'; };
  return detail::parse_lines<AsLink>(in, detail::never, parse, comment);
}

// Canonical text forms. Each parser reads its own serializer's output back
// into identical records.

inline std::string to_line(const AllocationRecord& r) {
  return to_string(r.prefix) + "," + csv::quote(r.designation) + "," + r.date + "," +
         std::string(to_string(r.category));
}

inline std::string to_line(const PrefixAsRecord& r) {
  std::string out = to_string(r.prefix.base()) + "\t" + std::to_string(r.prefix.len()) +
                    "\t" + std::to_string(r.asn.value);
  // The dropped origins are not kept; a duplicate marks the record multi-origin.
  if (r.multi_origin) out += "_" + std::to_string(r.asn.value);
  return out;
}

inline std::string to_line(const FlowRecord& r) {
  return std::to_string(r.timestamp) + "," + to_string(r.src_ip) + "," +
         std::to_string(r.src_port.value) + "," + to_string(r.dst_ip) + "," +
         std::to_string(r.dst_port.value) + "," + std::string(to_string(r.protocol)) +
         "," + std::to_string(r.bytes) + "," +
         (r.direction == Direction::upload ? "up" : "down");
}

inline std::string to_line(const EventRecord& r) {
  return std::to_string(r.timestamp) + "," + to_string(r.src_ip) + "," +
         to_string(r.dst_ip) + "," + csv::quote(r.kind);
}

inline std::string to_line(const AsLink& r) {
  const char* rel = r.relationship == Relationship::peer                ? "0"
                    : r.relationship == Relationship::provider_customer ? "-1"
                                                                        : "?";
  return std::to_string(r.a.value) + "|" + std::to_string(r.b.value) + "|" + rel;
}

inline constexpr std::string_view kIanaHeader = "Prefix,Designation,Date,Status";
inline constexpr std::string_view kFlowsHeader =
    "ts,src_ip,src_port,dst_ip,dst_port,proto,bytes,direction";
inline constexpr std::string_view kEventsHeader = "ts,src_ip,dst_ip,kind";

/// Reassigns flow direction from address locality: traffic towards a local
/// address is a download, traffic from one is an upload. Flows touching no
/// local address keep their recorded direction.
inline void infer_direction(FlowRecord& flow, const std::vector<Cidr>& local) {
  auto is_local = [&](IpV4Addr ip) {
    return std::any_of(local.begin(), local.end(), [&](const Cidr& c) { return c.contains(ip); });
  };
  if (is_local(flow.dst_ip)) flow.direction = Direction::download;
  else if (is_local(flow.src_ip)) flow.direction = Direction::upload;
}

// ---------------------------------------------------------------------------
// Prefix attribute store

struct PrefixAttrs {
  std::optional<Asn> asn;
  std::string designation;
  Category category = Category::unallocated;
  std::string color_class; // label the allocation map colors by
  bool multi_origin = false;

  friend bool operator==(const PrefixAttrs&, const PrefixAttrs&) = default;
};

inline std::string as_label(Asn asn) { return "AS" + std::to_string(asn.value); }

inline void to_json(nlohmann::json& j, const PrefixAttrs& a) {
  j = nlohmann::json::object();
  j["asn"] = a.asn ? nlohmann::json(a.asn->value) : nlohmann::json(nullptr);
  j["designation"] = a.designation;
  j["category"] = std::string(to_string(a.category));
  j["color_class"] = a.color_class;
  j["multi_origin"] = a.multi_origin;
}

inline void from_json(const nlohmann::json& j, PrefixAttrs& a) {
  a = PrefixAttrs{};
  if (j.contains("asn") && !j.at("asn").is_null()) a.asn = Asn{j.at("asn").get<uint32_t>()};
  a.designation = j.value("designation", "");
  const auto cat = parse_category(j.value("category", "unallocated"));
  if (!cat) throw std::invalid_argument("unknown category in store dump");
  a.category = *cat;
  a.color_class = j.value("color_class", "");
  a.multi_origin = j.value("multi_origin", false);
}

class PrefixStore {
public:
  /// Exact-prefix replacement on duplicates.
  void insert(const Cidr& prefix, PrefixAttrs attrs) { trie_.insert(prefix, std::move(attrs)); }

  /// Longest-prefix-match attributes, or nullptr.
  const PrefixAttrs* lookup(IpV4Addr ip) const { return trie_.lookup(ip); }
  const PrefixAttrs* find_exact(const Cidr& prefix) const { return trie_.find_exact(prefix); }

  struct Match {
    Cidr prefix;
    const PrefixAttrs* attrs = nullptr;
  };

  /// Longest stored prefix of length <= max_len containing `ip`.
  std::optional<Match> match(IpV4Addr ip, int max_len = 32) const {
    const auto m = trie_.match(ip, max_len);
    if (!m.value) return std::nullopt;
    return Match{Cidr::containing(ip, m.len), m.value};
  }

  template <class Visit>
  void segments(const Cidr& block, Visit&& visit) const {
    trie_.segments(block, std::forward<Visit>(visit));
  }
  template <class Visit>
  void for_each(Visit&& visit) const {
    trie_.for_each(std::forward<Visit>(visit));
  }

  std::size_t size() const noexcept { return trie_.size(); }
  bool empty() const noexcept { return trie_.empty(); }

  void add(const AllocationRecord& r) {
    PrefixAttrs attrs = existing(r.prefix);
    attrs.designation = r.designation;
    attrs.category = r.category;
    if (!attrs.asn) attrs.color_class = r.designation;
    insert(r.prefix, std::move(attrs));
  }

  /// Routing data layers onto registry data: the AS label takes over the
  /// color class, designation and category are kept.
  void add(const PrefixAsRecord& r) {
    PrefixAttrs attrs = existing(r.prefix);
    attrs.asn = r.asn;
    attrs.multi_origin = r.multi_origin;
    attrs.color_class = as_label(r.asn);
    if (attrs.category == Category::unallocated) attrs.category = Category::allocated;
    insert(r.prefix, std::move(attrs));
  }

  /// One `prefix<TAB>attrs-json` line per stored prefix, in address order.
  void dump(std::ostream& out) const {
    for_each([&](const Cidr& prefix, const PrefixAttrs& attrs) {
      out << to_string(prefix) << '\t' << nlohmann::json(attrs).dump() << '\n';
    });
  }

  static ParseResult<std::pair<Cidr, PrefixAttrs>> parse_dump(std::istream& in) {
    auto parse = [](std::string_view line,
                    std::string& error) -> std::optional<std::pair<Cidr, PrefixAttrs>> {
      const auto tab = line.find('\t');
      if (tab == std::string_view::npos) {
        error = "expected prefix<TAB>json";
        return std::nullopt;
      }
      const auto prefix = try_parse_cidr(line.substr(0, tab));
      if (!prefix) {
        error = "bad prefix";
        return std::nullopt;
      }
      try {
        return std::pair{*prefix,
                         nlohmann::json::parse(line.substr(tab + 1)).get<PrefixAttrs>()};
      } catch (const std::exception& e) {
        error = std::string("bad attributes: ") + e.what();
        return std::nullopt;
      }
    };
    return detail::parse_lines<std::pair<Cidr, PrefixAttrs>>(in, detail::never, parse,
                                                            detail::never);
  }

  /// Loads a dump, returning per-line errors.
  std::vector<LineError> load(std::istream& in) {
    auto parsed = parse_dump(in);
    for (auto& [prefix, attrs] : parsed.records) insert(prefix, std::move(attrs));
    return std::move(parsed.errors);
  }

private:
  PrefixAttrs existing(const Cidr& prefix) const {
    const auto* found = find_exact(prefix);
    return found ? *found : PrefixAttrs{};
  }

  PrefixTrie<PrefixAttrs> trie_;
};

} // namespace cybermap
