#pragma once

// Topology of a transmission network as an undirected multigraph with a fixed
// branch orientation, plus the connectivity primitives the rest of the
// library is built on.
//
// Buses are 0-based inside the library. build_topology() accepts the 1-based
// numbering used by case files and the CLI.

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ncswitch/error.hpp"

namespace ncswitch {

/// Set of buses packed into a 64-bit word. Catalog-based machinery is
/// exponential in the bus count anyway, so 64 buses is a hard ceiling.
class BusSet {
 public:
  static constexpr int kMaxBuses = 64;

  constexpr BusSet() = default;
  constexpr explicit BusSet(std::uint64_t bits) : bits_(bits) {}

  static BusSet full(int bus_count) {
    return BusSet(bus_count >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bus_count) - 1);
  }
  static BusSet single(int bus) { return BusSet(std::uint64_t{1} << bus); }
  static BusSet of(std::initializer_list<int> buses) {
    BusSet s;
    for (int b : buses) s.insert(b);
    return s;
  }

  constexpr std::uint64_t bits() const { return bits_; }
  bool contains(int bus) const { return (bits_ >> bus) & 1U; }
  void insert(int bus) { bits_ |= std::uint64_t{1} << bus; }
  void erase(int bus) { bits_ &= ~(std::uint64_t{1} << bus); }
  int size() const { return std::popcount(bits_); }
  bool empty() const { return bits_ == 0; }
  int lowest() const { return std::countr_zero(bits_); }

  BusSet operator|(BusSet o) const { return BusSet(bits_ | o.bits_); }
  BusSet operator&(BusSet o) const { return BusSet(bits_ & o.bits_); }
  BusSet minus(BusSet o) const { return BusSet(bits_ & ~o.bits_); }
  BusSet complement_in(int bus_count) const { return full(bus_count).minus(*this); }

  friend bool operator==(BusSet a, BusSet b) { return a.bits_ == b.bits_; }
  friend bool operator!=(BusSet a, BusSet b) { return a.bits_ != b.bits_; }

  std::vector<int> members() const {
    std::vector<int> out;
    for (std::uint64_t w = bits_; w != 0; w &= w - 1) out.push_back(std::countr_zero(w));
    return out;
  }

  /// Sum of `weights` over the members.
  template <typename Vec>
  auto sum(const Vec& weights) const {
    typename Vec::value_type total{};
    for (std::uint64_t w = bits_; w != 0; w &= w - 1) total += weights[std::countr_zero(w)];
    return total;
  }

 private:
  std::uint64_t bits_ = 0;
};

/// Size first, then lexicographic on the sorted member lists.
inline bool size_lex_less(BusSet a, BusSet b) {
  if (a.size() != b.size()) return a.size() < b.size();
  std::uint64_t x = a.bits(), y = b.bits();
  while (x != 0 && y != 0) {
    int lx = std::countr_zero(x), ly = std::countr_zero(y);
    if (lx != ly) return lx < ly;
    x &= x - 1;
    y &= y - 1;
  }
  return false;
}

/// "{1,3,4}" with 1-based bus numbers.
inline std::string format_bus_set(BusSet s) {
  std::string out = "{";
  bool first = true;
  for (int b : s.members()) {
    if (!first) out += ",";
    out += std::to_string(b + 1);
    first = false;
  }
  return out + "}";
}

struct Branch {
  int from = 0;
  int to = 0;
};

class Topology {
 public:
  Topology() = default;

  int bus_count() const { return bus_count_; }
  int branch_count() const { return static_cast<int>(branches_.size()); }
  const std::vector<Branch>& branches() const { return branches_; }
  const Branch& branch(int e) const { return branches_[static_cast<std::size_t>(e)]; }

  /// Buses adjacent to `bus` through any branch (parallel branches collapse).
  BusSet neighbors(int bus) const { return neighbors_[static_cast<std::size_t>(bus)]; }

 private:
  friend Topology build_topology(int bus_count, const std::vector<std::pair<int, int>>& branch_list);

  int bus_count_ = 0;
  std::vector<Branch> branches_;
  std::vector<BusSet> neighbors_;
};

/// Branch on/off statuses in branch order; 1 = present.
class EdgeMask {
 public:
  EdgeMask() = default;
  explicit EdgeMask(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (auto& b : bits_) b = b ? 1 : 0;
  }
  static EdgeMask all_on(int branch_count) {
    return EdgeMask(std::vector<std::uint8_t>(static_cast<std::size_t>(branch_count), 1));
  }
  /// Parses "1101" (character i is branch i).
  static EdgeMask parse(std::string_view text) {
    std::vector<std::uint8_t> bits;
    for (char ch : text) {
      if (ch != '0' && ch != '1') fail(ErrorCode::InvalidArgument, "mask must contain only 0/1: " + std::string(text));
      bits.push_back(ch == '1');
    }
    return EdgeMask(std::move(bits));
  }
  /// Bit i of `word` is branch i.
  static EdgeMask from_word(std::uint64_t word, int branch_count) {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(branch_count));
    for (int e = 0; e < branch_count; ++e) bits[static_cast<std::size_t>(e)] = (word >> e) & 1U;
    return EdgeMask(std::move(bits));
  }

  int size() const { return static_cast<int>(bits_.size()); }
  bool on(int e) const { return bits_[static_cast<std::size_t>(e)] != 0; }
  void set(int e, bool value) { bits_[static_cast<std::size_t>(e)] = value ? 1 : 0; }
  int count_on() const { return static_cast<int>(std::count(bits_.begin(), bits_.end(), 1)); }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  std::string str() const {
    std::string s;
    for (auto b : bits_) s.push_back(b ? '1' : '0');
    return s;
  }

  friend bool operator==(const EdgeMask&, const EdgeMask&) = default;

  /// Elementwise product (post-contingency topology z ⊙ o_b).
  EdgeMask operator&(const EdgeMask& o) const {
    EdgeMask out(bits_);
    for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] & o.bits_[i];
    return out;
  }
  EdgeMask operator|(const EdgeMask& o) const {
    EdgeMask out(bits_);
    for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] | o.bits_[i];
    return out;
  }

 private:
  std::vector<std::uint8_t> bits_;
};

struct ComponentPartition {
  std::vector<int> component_of;  ///< bus -> index into components
  std::vector<BusSet> components;  ///< ordered by smallest member bus
  int main_index = 0;

  int count() const { return static_cast<int>(components.size()); }
  BusSet main() const { return components[static_cast<std::size_t>(main_index)]; }
  /// Buses outside the main component.
  BusSet stranded(int bus_count) const { return main().complement_in(bus_count); }
};

struct SubgraphCatalog {
  int bus_count = 0;
  std::vector<BusSet> subsets;  ///< subsets[0] is the full bus set
  std::unordered_map<std::uint64_t, int> index_of;

  int size() const { return static_cast<int>(subsets.size()); }
  /// Row of J for `s`, or -1 when `s` does not induce a connected subgraph.
  int find(BusSet s) const {
    auto it = index_of.find(s.bits());
    return it == index_of.end() ? -1 : it->second;
  }
};

class DisjointSets {
 public:
  explicit DisjointSets(int n) : parent_(static_cast<std::size_t>(n)), rank_(static_cast<std::size_t>(n), 0) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  int find(int x) {
    while (parent_[static_cast<std::size_t>(x)] != x) {
      auto& p = parent_[static_cast<std::size_t>(x)];
      p = parent_[static_cast<std::size_t>(p)];
      x = p;
    }
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[static_cast<std::size_t>(a)] < rank_[static_cast<std::size_t>(b)]) std::swap(a, b);
    parent_[static_cast<std::size_t>(b)] = a;
    if (rank_[static_cast<std::size_t>(a)] == rank_[static_cast<std::size_t>(b)]) ++rank_[static_cast<std::size_t>(a)];
    return true;
  }

 private:
  std::vector<int> parent_;
  std::vector<int> rank_;
};

namespace detail {

inline ComponentPartition partition_from_sets(DisjointSets& dsu, int bus_count) {
  ComponentPartition part;
  part.component_of.assign(static_cast<std::size_t>(bus_count), -1);
  std::vector<int> root_to_comp(static_cast<std::size_t>(bus_count), -1);
  for (int v = 0; v < bus_count; ++v) {
    int r = dsu.find(v);
    auto& slot = root_to_comp[static_cast<std::size_t>(r)];
    if (slot < 0) {
      slot = part.count();
      part.components.emplace_back();
    }
    part.component_of[static_cast<std::size_t>(v)] = slot;
    part.components[static_cast<std::size_t>(slot)].insert(v);
  }
  // Components are discovered in order of their smallest bus, so the first
  // of several equally large components is the one holding the smallest bus.
  for (int k = 1; k < part.count(); ++k) {
    if (part.components[static_cast<std::size_t>(k)].size() > part.main().size()) part.main_index = k;
  }
  return part;
}

}  // namespace detail

inline Topology build_topology(int bus_count, const std::vector<std::pair<int, int>>& branch_list) {
  if (bus_count <= 0) fail(ErrorCode::IndexOutOfRange, "bus count must be positive");
  Topology t;
  t.bus_count_ = bus_count;
  t.neighbors_.assign(static_cast<std::size_t>(bus_count), BusSet{});
  for (std::size_t e = 0; e < branch_list.size(); ++e) {
    auto [from, to] = branch_list[e];
    if (from < 1 || from > bus_count || to < 1 || to > bus_count) {
      fail(ErrorCode::IndexOutOfRange, "branch " + std::to_string(e + 1) + " references bus outside [1, " +
                                           std::to_string(bus_count) + "]");
    }
    if (from == to) fail(ErrorCode::SelfLoop, "branch " + std::to_string(e + 1) + " joins bus " + std::to_string(from) + " to itself");
    t.branches_.push_back(Branch{from - 1, to - 1});
    if (bus_count <= BusSet::kMaxBuses) {
      t.neighbors_[static_cast<std::size_t>(from - 1)].insert(to - 1);
      t.neighbors_[static_cast<std::size_t>(to - 1)].insert(from - 1);
    }
  }
  DisjointSets dsu(bus_count);
  int merged = 0;
  for (const auto& br : t.branches_) merged += dsu.unite(br.from, br.to) ? 1 : 0;
  if (merged != bus_count - 1) fail(ErrorCode::FullGraphDisconnected, "network with all branches present is not connected");
  return t;
}

inline ComponentPartition connected_components(const Topology& topology, const EdgeMask& mask) {
  if (mask.size() != topology.branch_count()) {
    fail(ErrorCode::LengthMismatch, "mask has " + std::to_string(mask.size()) + " entries, topology has " +
                                        std::to_string(topology.branch_count()) + " branches");
  }
  DisjointSets dsu(topology.bus_count());
  for (int e = 0; e < topology.branch_count(); ++e) {
    if (mask.on(e)) dsu.unite(topology.branch(e).from, topology.branch(e).to);
  }
  return detail::partition_from_sets(dsu, topology.bus_count());
}

inline bool is_connected(const Topology& topology, const EdgeMask& mask) {
  return connected_components(topology, mask).count() == 1;
}

/// Whether the subgraph induced by `s` in the full topology is connected.
inline bool induces_connected(const Topology& topology, BusSet s) {
  if (s.empty()) return false;
  BusSet seen = BusSet::single(s.lowest());
  BusSet frontier = seen;
  while (!frontier.empty()) {
    BusSet next;
    for (int v : frontier.members()) next = next | (topology.neighbors(v) & s);
    frontier = next.minus(seen);
    seen = seen | frontier;
  }
  return seen == s;
}

namespace detail {

// Exclusive-neighbourhood extension: each connected set is produced once, from
// its smallest bus.
inline void extend_connected(const Topology& t, BusSet current, BusSet closed_nbhd, BusSet extension, int root,
                             std::vector<BusSet>& out, std::size_t cap) {
  if (out.size() >= cap) fail(ErrorCode::CatalogTooLarge, "connected subgraph count exceeds cap " + std::to_string(cap));
  out.push_back(current);
  while (!extension.empty()) {
    int w = extension.lowest();
    extension.erase(w);
    BusSet exclusive = t.neighbors(w).minus(closed_nbhd);
    BusSet higher(exclusive.bits() & ~((std::uint64_t{2} << root) - 1));
    BusSet next_ext = extension | higher;
    extend_connected(t, current | BusSet::single(w), closed_nbhd | t.neighbors(w) | BusSet::single(w), next_ext, root,
                     out, cap);
  }
}

}  // namespace detail

inline SubgraphCatalog enumerate_connected_induced_subgraphs(const Topology& topology, std::size_t cap = 1'000'000) {
  const int n = topology.bus_count();
  if (n > BusSet::kMaxBuses) fail(ErrorCode::CatalogTooLarge, "catalogs support at most 64 buses");
  std::vector<BusSet> found;
  for (int v = 0; v < n; ++v) {
    BusSet higher_nbrs(topology.neighbors(v).bits() & ~((std::uint64_t{2} << v) - 1));
    detail::extend_connected(topology, BusSet::single(v), topology.neighbors(v) | BusSet::single(v), higher_nbrs, v,
                             found, cap);
  }
  const BusSet all = BusSet::full(n);
  std::sort(found.begin(), found.end(), [&](BusSet a, BusSet b) {
    if ((a == all) != (b == all)) return a == all;
    return size_lex_less(a, b);
  });
  SubgraphCatalog cat;
  cat.bus_count = n;
  cat.subsets = std::move(found);
  cat.index_of.reserve(cat.subsets.size() * 2);
  for (int i = 0; i < cat.size(); ++i) cat.index_of.emplace(cat.subsets[static_cast<std::size_t>(i)].bits(), i);
  return cat;
}

/// Oriented incidence matrix, row-major n_n x n_b: +1 at the from-bus, -1 at the to-bus.
struct IncidenceMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> data;
  int operator()(int bus, int branch) const { return data[static_cast<std::size_t>(bus * cols + branch)]; }
};

inline IncidenceMatrix incidence_matrix(const Topology& topology) {
  IncidenceMatrix m{topology.bus_count(), topology.branch_count(), {}};
  m.data.assign(static_cast<std::size_t>(m.rows * m.cols), 0);
  for (int e = 0; e < m.cols; ++e) {
    m.data[static_cast<std::size_t>(topology.branch(e).from * m.cols + e)] = 1;
    m.data[static_cast<std::size_t>(topology.branch(e).to * m.cols + e)] = -1;
  }
  return m;
}

}  // namespace ncswitch
