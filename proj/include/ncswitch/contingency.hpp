#pragma once

// Inevitable disconnections: the catalog W(lambda) of minimal branch cuts of
// size <= lambda together with the buses each one strands, the derived row
// sets E_w and J_w, and N-k contingency enumeration.

#include <cstdint>
#include <string>
#include <vector>

#include "ncswitch/error.hpp"
#include "ncswitch/netgraph.hpp"

namespace ncswitch {

struct WPair {
  std::vector<int> branches;  ///< L_i, sorted branch indices
  BusSet stranded;            ///< N_i, buses outside the main component
  int component_count = 0;    ///< components of the full graph minus L_i
};

struct WCatalog {
  int lambda = 0;
  std::vector<WPair> pairs;
  int n_u = 0;  ///< max component count over the pairs; 0 when empty

  int n_w() const { return static_cast<int>(pairs.size()); }
};

/// E_w and J_w kept as node-set rows; J_w rows reference the subgraph catalog.
struct WMatrices {
  std::vector<BusSet> e_w;       ///< row i indicates N_i
  std::vector<int> j_w_rows;     ///< catalog indices of the rows kept in J_w
  std::vector<BusSet> j_w;       ///< the same rows as node sets
  int n_d() const { return static_cast<int>(j_w.size()); }
};

struct ContingencyVector {
  std::vector<std::uint8_t> o_g;  ///< 1 = generator in service
  std::vector<std::uint8_t> o_b;  ///< 1 = branch in service

  int generator_failures() const {
    int k = 0;
    for (auto v : o_g) k += v ? 0 : 1;
    return k;
  }
  int branch_failures() const {
    int k = 0;
    for (auto v : o_b) k += v ? 0 : 1;
    return k;
  }
  int failures() const { return generator_failures() + branch_failures(); }
  EdgeMask branch_mask() const { return EdgeMask(o_b); }

  /// "g2,b5" style label with 1-based indices; "none" for the intact system.
  std::string label() const {
    std::string out;
    for (std::size_t g = 0; g < o_g.size(); ++g) {
      if (!o_g[g]) out += (out.empty() ? "" : ",") + std::string("g") + std::to_string(g + 1);
    }
    for (std::size_t e = 0; e < o_b.size(); ++e) {
      if (!o_b[e]) out += (out.empty() ? "" : ",") + std::string("b") + std::to_string(e + 1);
    }
    return out.empty() ? "none" : out;
  }

  friend bool operator==(const ContingencyVector&, const ContingencyVector&) = default;
};

namespace detail {

template <typename Fn>
void for_each_combination(int n, int k, Fn&& fn) {
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  if (k > n) return;
  while (true) {
    fn(idx);
    int i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

inline EdgeMask without(int branch_count, const std::vector<int>& removed) {
  EdgeMask m = EdgeMask::all_on(branch_count);
  for (int e : removed) m.set(e, false);
  return m;
}

}  // namespace detail

inline WCatalog enumerate_w_lambda(const Topology& topology, int lambda, int lambda_cap = 3) {
  if (lambda < 1) fail(ErrorCode::InvalidArgument, "lambda must be at least 1");
  if (lambda > lambda_cap) fail(ErrorCode::LambdaTooLarge, "lambda " + std::to_string(lambda) + " exceeds cap " + std::to_string(lambda_cap));
  const int nb = topology.branch_count();
  const int nn = topology.bus_count();
  WCatalog cat;
  cat.lambda = lambda;
  for (int k = 1; k <= lambda && k <= nb; ++k) {
    detail::for_each_combination(nb, k, [&](const std::vector<int>& cut) {
      ComponentPartition part = connected_components(topology, detail::without(nb, cut));
      if (part.count() < 2) return;
      const BusSet stranded = part.stranded(nn);
      // Minimality: no proper nonempty L' with L \ L' stranding the same buses.
      bool minimal = true;
      const int proper = (1 << k) - 1;
      for (int keep = 1; keep < proper && minimal; ++keep) {
        std::vector<int> sub;
        for (int i = 0; i < k; ++i) {
          if (!((keep >> i) & 1)) sub.push_back(cut[static_cast<std::size_t>(i)]);
        }
        ComponentPartition p2 = connected_components(topology, detail::without(nb, sub));
        if (p2.count() >= 2 && p2.stranded(nn) == stranded) minimal = false;
      }
      if (!minimal) return;
      cat.pairs.push_back(WPair{cut, stranded, part.count()});
      cat.n_u = std::max(cat.n_u, part.count());
    });
  }
  return cat;
}

inline WMatrices build_w_matrices(const WCatalog& wcat, const SubgraphCatalog& catalog) {
  WMatrices out;
  const int nn = catalog.bus_count;
  std::vector<std::uint8_t> drop(static_cast<std::size_t>(catalog.size()), 0);
  if (catalog.size() > 0) drop[0] = 1;
  for (const auto& pair : wcat.pairs) {
    out.e_w.push_back(pair.stranded);
    int row = catalog.find(pair.stranded);
    if (row >= 0) drop[static_cast<std::size_t>(row)] = 1;
    int comp_row = catalog.find(pair.stranded.complement_in(nn));
    if (comp_row >= 0) drop[static_cast<std::size_t>(comp_row)] = 1;
  }
  for (int i = 0; i < catalog.size(); ++i) {
    if (!drop[static_cast<std::size_t>(i)]) {
      out.j_w_rows.push_back(i);
      out.j_w.push_back(catalog.subsets[static_cast<std::size_t>(i)]);
    }
  }
  return out;
}

/// Ground truth for the W-disconnected class: the topology is disconnected
/// and the buses outside its main component are exactly some N_i.
inline bool is_w_disconnected(const Topology& topology, const EdgeMask& mask, const WCatalog& wcat) {
  ComponentPartition part = connected_components(topology, mask);
  if (part.count() < 2) return false;
  const BusSet stranded = part.stranded(topology.bus_count());
  for (const auto& pair : wcat.pairs) {
    if (pair.stranded == stranded) return true;
  }
  return false;
}

/// Every outage pattern with at most `eta` failed generators plus branches,
/// ordered by failure count and then lexicographically (generators first).
inline std::vector<ContingencyVector> enumerate_contingencies(const Topology& topology, int generator_count, int eta,
                                                              std::size_t cap = 100'000) {
  if (eta < 1) fail(ErrorCode::InvalidArgument, "eta must be at least 1");
  const int ng = generator_count;
  const int nb = topology.branch_count();
  const int total = ng + nb;
  // Count first so the guard fires before any allocation.
  double count = 0.0;
  double binom = 1.0;
  for (int k = 0; k <= eta && k <= total; ++k) {
    if (k > 0) binom = binom * (total - k + 1) / k;
    count += binom;
  }
  if (count > static_cast<double>(cap)) {
    fail(ErrorCode::ExplosionGuard, "contingency count " + std::to_string(static_cast<long long>(count)) + " exceeds cap " +
                                        std::to_string(cap));
  }
  std::vector<ContingencyVector> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k <= eta && k <= total; ++k) {
    detail::for_each_combination(total, k, [&](const std::vector<int>& failed) {
      ContingencyVector o{std::vector<std::uint8_t>(static_cast<std::size_t>(ng), 1),
                          std::vector<std::uint8_t>(static_cast<std::size_t>(nb), 1)};
      for (int f : failed) {
        if (f < ng) o.o_g[static_cast<std::size_t>(f)] = 0;
        else o.o_b[static_cast<std::size_t>(f - ng)] = 0;
      }
      out.push_back(std::move(o));
    });
  }
  return out;
}

/// Keeps the lambda-branch contingencies (at most `lambda` failed branches).
inline std::vector<ContingencyVector> filter_lambda_branch(const std::vector<ContingencyVector>& all, int lambda) {
  std::vector<ContingencyVector> out;
  for (const auto& o : all) {
    if (o.branch_failures() <= lambda) out.push_back(o);
  }
  return out;
}

}  // namespace ncswitch
