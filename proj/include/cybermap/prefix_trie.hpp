#pragma once

// Binary prefix trie with longest-prefix-match lookup.

#include "cybermap/ip.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace cybermap {

template <class Value>
class PrefixTrie {
public:
  PrefixTrie() { nodes_.emplace_back(); }

  /// Stores `value` at exactly `prefix`, replacing any previous value there.
  void insert(const Cidr& prefix, Value value) {
    uint32_t node = 0;
    for (int depth = 0; depth < prefix.len(); ++depth) {
      const int bit = bit_at(prefix.base().value, depth);
      if (nodes_[node].child[bit] == kNone) {
        nodes_[node].child[bit] = static_cast<uint32_t>(nodes_.size());
        nodes_.emplace_back();
      }
      node = nodes_[node].child[bit];
    }
    if (!nodes_[node].value) ++size_;
    nodes_[node].value = std::move(value);
  }

  bool erase(const Cidr& prefix) {
    const uint32_t node = find_node(prefix);
    if (node == kNone || !nodes_[node].value) return false;
    nodes_[node].value.reset();
    --size_;
    return true;
  }

  const Value* find_exact(const Cidr& prefix) const {
    const uint32_t node = find_node(prefix);
    return node == kNone || !nodes_[node].value ? nullptr : &*nodes_[node].value;
  }

  /// Value of the longest stored prefix containing `ip`, or nullptr.
  const Value* lookup(IpV4Addr ip) const {
    return match(ip, 32).value;
  }

  struct Match {
    const Value* value = nullptr;
    int len = -1;
  };

  /// Longest stored prefix of length <= max_len containing `ip`.
  Match match(IpV4Addr ip, int max_len) const {
    Match best;
    uint32_t node = 0;
    for (int depth = 0;; ++depth) {
      if (nodes_[node].value) best = {&*nodes_[node].value, depth};
      if (depth == max_len) break;
      node = nodes_[node].child[bit_at(ip.value, depth)];
      if (node == kNone) break;
    }
    return best;
  }

  /// Partitions `block` into maximal runs sharing one longest-prefix match and
  /// calls `visit(const Value* or nullptr, uint64_t address_count)` for each,
  /// in address order.
  template <class Visit>
  void segments(const Cidr& block, Visit&& visit) const {
    const Match outer = match(block.base(), block.len());
    const uint32_t node = find_node(block);
    if (node == kNone) {
      visit(outer.value, block.size());
      return;
    }
    walk(node, block.len(), outer.value, visit);
  }

  /// Visits every stored (prefix, value) in address order, shorter prefixes first.
  template <class Visit>
  void for_each(Visit&& visit) const {
    walk_stored(0, 0, 0, visit);
  }

  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }

private:
  static constexpr uint32_t kNone = 0xffffffffu;

  struct Node {
    std::array<uint32_t, 2> child{kNone, kNone};
    std::optional<Value> value;
  };

  static int bit_at(uint32_t addr, int depth) noexcept {
    return static_cast<int>((addr >> (31 - depth)) & 1);
  }

  uint32_t find_node(const Cidr& prefix) const {
    uint32_t node = 0;
    for (int depth = 0; depth < prefix.len(); ++depth) {
      node = nodes_[node].child[bit_at(prefix.base().value, depth)];
      if (node == kNone) return kNone;
    }
    return node;
  }

  template <class Visit>
  void walk(uint32_t node, int depth, const Value* inherited, Visit& visit) const {
    const Node& n = nodes_[node];
    const Value* own = n.value ? &*n.value : inherited;
    if (depth == 32) {
      visit(own, uint64_t{1});
      return;
    }
    for (int bit = 0; bit < 2; ++bit) {
      if (n.child[bit] == kNone) {
        visit(own, uint64_t{1} << (31 - depth));
      } else {
        walk(n.child[bit], depth + 1, own, visit);
      }
    }
  }

  template <class Visit>
  void walk_stored(uint32_t node, int depth, uint32_t base, Visit& visit) const {
    const Node& n = nodes_[node];
    if (n.value) visit(Cidr(IpV4Addr{base}, depth), *n.value);
    for (int bit = 0; bit < 2; ++bit) {
      if (n.child[bit] != kNone) {
        const uint32_t next = depth < 32 && bit ? base | (uint32_t{1} << (31 - depth)) : base;
        walk_stored(n.child[bit], depth + 1, next, visit);
      }
    }
  }

  std::vector<Node> nodes_;
  std::size_t size_ = 0;
};

} // namespace cybermap
