#pragma once

// Uniquely balanced and W(lambda)-uniquely balanced injection vectors c.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ncswitch/contingency.hpp"
#include "ncswitch/error.hpp"
#include "ncswitch/mp/solve.hpp"
#include "ncswitch/netgraph.hpp"

namespace ncswitch {

struct BalanceFlags {
  bool uniquely_balanced = false;
  bool w_uniquely_balanced = false;
  double e_w_norm = 0.0;          ///< ||E_w c||_inf
  double j_w_min_abs = 0.0;       ///< ||J_w c||_-inf, +inf when J_w is empty
  double b_second_min_abs = 0.0;  ///< second smallest |b_i| over all of b
};

struct BalancedVector {
  std::vector<double> c;
  std::vector<double> b;  ///< b = J c in catalog order
  double r = 0.0;
  double b_second_min_abs = 0.0;
  bool uniquely_balanced = false;
  bool w_uniquely_balanced = false;

  /// Lower and upper ends of the W-disconnected band of the classifier.
  double lower_threshold() const { return 2.0 * b_second_min_abs; }
  double upper_threshold(int n_u) const { return n_u * r; }
};

inline constexpr double kBalanceTol = 1e-9;

inline std::vector<double> subset_sums(const std::vector<double>& c, const std::vector<BusSet>& rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (BusSet s : rows) out.push_back(s.sum(c));
  return out;
}

/// Direct evaluation of every clause of the W(lambda)-unique balance definition.
inline BalanceFlags verify_w_balance(const std::vector<double>& c, double r, const SubgraphCatalog& catalog, const WMatrices& w,
                                     int n_u) {
  if (static_cast<int>(c.size()) != catalog.bus_count) {
    fail(ErrorCode::DimensionMismatch, "c has length " + std::to_string(c.size()) + ", expected " + std::to_string(catalog.bus_count));
  }
  BalanceFlags f;
  std::vector<double> b = subset_sums(c, catalog.subsets);
  bool unique = !b.empty() && std::abs(b[0]) <= kBalanceTol;
  for (std::size_t i = 1; i < b.size() && unique; ++i) unique = std::abs(b[i]) > kBalanceTol;
  f.uniquely_balanced = unique;

  std::vector<double> mags;
  for (double v : b) mags.push_back(std::abs(v));
  std::sort(mags.begin(), mags.end());
  f.b_second_min_abs = mags.size() >= 2 ? mags[1] : 0.0;

  for (BusSet s : w.e_w) f.e_w_norm = std::max(f.e_w_norm, std::abs(s.sum(c)));
  f.j_w_min_abs = mp::kInf;
  for (BusSet s : w.j_w) f.j_w_min_abs = std::min(f.j_w_min_abs, std::abs(s.sum(c)));
  const double scale = 1.0 + std::abs(r);
  f.w_uniquely_balanced = unique && f.e_w_norm <= r + kBalanceTol * scale && f.j_w_min_abs >= n_u * r - kBalanceTol * scale * (1 + n_u);
  return f;
}

inline BalancedVector make_balanced(std::vector<double> c, double r, const SubgraphCatalog& catalog, const WMatrices& w, int n_u) {
  BalanceFlags f = verify_w_balance(c, r, catalog, w, n_u);
  BalancedVector out;
  out.b = subset_sums(c, catalog.subsets);
  out.c = std::move(c);
  out.r = r;
  out.b_second_min_abs = f.b_second_min_abs;
  out.uniquely_balanced = f.uniquely_balanced;
  out.w_uniquely_balanced = f.w_uniquely_balanced;
  return out;
}

/// c = (n_n - 1, -1, ..., -1). Every connected proper subset containing bus 1
/// sums to n_n - k, every other one to -k.
inline std::vector<double> trivial_balanced_c(int bus_count) {
  std::vector<double> c(static_cast<std::size_t>(bus_count), -1.0);
  if (bus_count > 0) c[0] = bus_count - 1.0;
  return c;
}

/// Without W data the radius is 0 and only unique balance is meaningful.
inline BalancedVector trivial_uniquely_balanced(const Topology& topology, const SubgraphCatalog& catalog) {
  return make_balanced(trivial_balanced_c(topology.bus_count()), 0.0, catalog, WMatrices{}, 0);
}

/// The W flag uses the smallest admissible radius r = ||E_w c||_inf.
inline BalancedVector trivial_uniquely_balanced(const Topology& topology, const SubgraphCatalog& catalog, const WMatrices& w, int n_u) {
  std::vector<double> c = trivial_balanced_c(topology.bus_count());
  double r = 0.0;
  for (BusSet s : w.e_w) r = std::max(r, std::abs(s.sum(c)));
  return make_balanced(std::move(c), r, catalog, w, n_u);
}

struct SynthesisOptions {
  double eps = 1.0;
  double c_bound = 0.0;    ///< 0 selects 10 * n_n
  double big_m = 0.0;      ///< 0 selects (n_n + 1) * c_bound
  int initial_rows = 32;   ///< smallest catalog rows in the first model
  int rows_per_round = 16;
  int max_rounds = 200;
  long long node_limit = 200'000;
  int seed_moves = 200'000;  ///< local-search budget for the MIP start; 0 disables it
  std::uint32_t seed = 1;
};

struct SynthesisReport {
  int rounds = 0;
  int rows_in_model = 0;  ///< catalog rows carrying a sign binary in the final model
  long long nodes = 0;
  bool rounded_to_integers = false;
};

namespace detail {

/// Smallest radius that keeps E_w c inside the ball; the J_w clause is then checked by the caller.
inline double tight_radius(const std::vector<double>& c, const WMatrices& w) {
  double r = 0.0;
  for (BusSet s : w.e_w) r = std::max(r, std::abs(s.sum(c)));
  return r;
}

/// Tries integer representatives of c: plain rounding, then small integer scalings.
inline std::optional<std::vector<double>> integral_representative(const std::vector<double>& c, const SubgraphCatalog& catalog,
                                                                   const WMatrices& w, int n_u) {
  for (int k = 1; k <= 12; ++k) {
    std::vector<double> cand(c.size());
    bool close = true;
    for (std::size_t i = 0; i < c.size(); ++i) {
      cand[i] = std::round(c[i] * k);
      close = close && std::abs(cand[i] - c[i] * k) <= 1e-6 * k;
    }
    if (!close && k > 1) continue;
    if (std::accumulate(cand.begin(), cand.end(), 0.0) != 0.0) continue;
    if (verify_w_balance(cand, tight_radius(cand, w), catalog, w, n_u).w_uniquely_balanced) return cand;
  }
  return std::nullopt;
}

/// Seeded local search for an integer c whose subset sums already clear the
/// margins of the synthesis MILP. Moves shift a few units between two buses so the total
/// stays zero. Returns an empty vector when the move budget runs out.
inline std::vector<double> sign_pattern_seed(int nn, const SubgraphCatalog& catalog, const WMatrices& w, int n_u, double eps,
                                             double c_bound, int max_moves, std::uint32_t seed = 1) {
  if (nn < 2) return {};
  std::vector<char> in_jw(static_cast<std::size_t>(catalog.size()), 0);
  for (int row : w.j_w_rows) in_jw[static_cast<std::size_t>(row)] = 1;
  std::vector<std::vector<int>> members;
  for (int i = 1; i < catalog.size(); ++i) members.push_back(catalog.subsets[static_cast<std::size_t>(i)].members());
  auto penalty = [&](const std::vector<double>& c) {
    const double r = tight_radius(c, w);
    double p = 0.0;
    for (std::size_t k = 0; k < members.size(); ++k) {
      double b = 0.0;
      for (int v : members[k]) b += c[static_cast<std::size_t>(v)];
      double need = eps;
      if (in_jw[k + 1]) need = std::max(need, n_u * r);
      p += std::max(0.0, need - std::abs(b));
    }
    return p;
  };
  const int bound = static_cast<int>(std::floor(c_bound));
  const int step_max = std::max(1, bound / 8);
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> bus(0, nn - 1), step(1, step_max);
  std::vector<double> c(static_cast<std::size_t>(nn), 0.0);
  auto shift = [&](std::vector<double>& x) {
    const int u = bus(rng);
    int v = bus(rng);
    if (v == u) v = (v + 1) % nn;
    const int d = step(rng);
    if (x[static_cast<std::size_t>(u)] + d > bound || x[static_cast<std::size_t>(v)] - d < -bound) return false;
    x[static_cast<std::size_t>(u)] += d;
    x[static_cast<std::size_t>(v)] -= d;
    return true;
  };
  for (int k = 0; k < 4 * nn; ++k) shift(c);
  double p = penalty(c);
  for (int move = 0; move < max_moves && p > 0.0; ++move) {
    std::vector<double> cand = c;
    if (!shift(cand)) continue;
    const double q = penalty(cand);
    if (q <= p) {
      c = std::move(cand);
      p = q;
    }
  }
  if (p > 0.0) return {};
  return c;
}

}  // namespace detail

/// Synthesis MILP: min r over c, b = Jc, sign binaries beta for every proper
/// connected subset and gamma for every J_w row. Sign rows are added lazily:
/// each round solves the model over the rows gathered so far and appends the
/// catalog rows the incumbent violates, until the incumbent satisfies all of
/// them. Any feasible point is accepted.
inline BalancedVector synthesize_w_balanced(const Topology& topology, const SubgraphCatalog& catalog, const WMatrices& w, int n_u,
                                            const SynthesisOptions& options = {}, SynthesisReport* report = nullptr) {
  const int nn = topology.bus_count();
  if (catalog.bus_count != nn) fail(ErrorCode::DimensionMismatch, "catalog built for a different bus count");
  if (!(options.eps > 0.0)) fail(ErrorCode::InvalidArgument, "eps must be positive");
  const double c_bound = options.c_bound > 0.0 ? options.c_bound : 10.0 * nn;
  const double big_m = options.big_m > 0.0 ? options.big_m : (nn + 1) * c_bound;
  const double eps = options.eps;

  std::vector<char> in_jw(static_cast<std::size_t>(catalog.size()), 0);
  for (int row : w.j_w_rows) in_jw[static_cast<std::size_t>(row)] = 1;

  // Active catalog rows (index >= 1).
  std::vector<int> active;
  const int first = std::max(1, options.initial_rows);
  for (int i = 1; i < catalog.size() && static_cast<int>(active.size()) < first; ++i) active.push_back(i);
  std::vector<char> is_active(static_cast<std::size_t>(catalog.size()), 0);
  for (int i : active) is_active[static_cast<std::size_t>(i)] = 1;

  const std::vector<double> warm =
      options.seed_moves > 0 ? detail::sign_pattern_seed(nn, catalog, w, n_u, eps, c_bound, options.seed_moves, options.seed) : std::vector<double>{};

  SynthesisReport rep;
  for (int round = 0; round < options.max_rounds; ++round) {
    rep.rounds = round + 1;
    mp::Model m;
    std::vector<mp::VarId> c;
    for (int v = 0; v < nn; ++v) c.push_back(m.add_var(-c_bound, c_bound, mp::VarKind::Continuous, "c" + std::to_string(v + 1)));
    mp::VarId r = m.add_var(0.0, mp::kInf, mp::VarKind::Continuous, "r");
    auto sum_expr = [&](BusSet s) {
      mp::LinExpr e;
      for (int v : s.members()) e.add(c[static_cast<std::size_t>(v)], 1.0);
      return e;
    };
    // b_1 = 0 on the full vertex set.
    m.add_eq(sum_expr(catalog.subsets[0]), 0.0, "b1");
    for (std::size_t i = 0; i < w.e_w.size(); ++i) {
      m.add_le(sum_expr(w.e_w[i]), mp::LinExpr(r), "ew_hi" + std::to_string(i));
      m.add_ge(sum_expr(w.e_w[i]), -1.0 * mp::LinExpr(r), "ew_lo" + std::to_string(i));
    }
    std::vector<std::pair<mp::VarId, int>> sign_vars;
    for (int i : active) {
      BusSet s = catalog.subsets[static_cast<std::size_t>(i)];
      mp::LinExpr b = sum_expr(s);
      mp::VarId beta = m.add_binary("beta" + std::to_string(i));
      sign_vars.emplace_back(beta, i);
      m.add_ge(b, eps - big_m * mp::LinExpr(beta));
      m.add_le(b, -eps + big_m * (1.0 - mp::LinExpr(beta)));
      if (in_jw[static_cast<std::size_t>(i)]) {
        mp::VarId gamma = m.add_binary("gamma" + std::to_string(i));
        sign_vars.emplace_back(gamma, i);
        m.add_ge(b, n_u * mp::LinExpr(r) - big_m * mp::LinExpr(gamma));
        m.add_le(b, -n_u * mp::LinExpr(r) + big_m * (1.0 - mp::LinExpr(gamma)));
      }
    }
    m.set_objective(mp::LinExpr(r));

    std::vector<double> start;
    if (!warm.empty()) {
      start.assign(static_cast<std::size_t>(m.var_count()), 0.0);
      for (int v = 0; v < nn; ++v) start[static_cast<std::size_t>(c[static_cast<std::size_t>(v)].index)] = warm[static_cast<std::size_t>(v)];
      start[static_cast<std::size_t>(r.index)] = detail::tight_radius(warm, w);
      for (auto [var, row] : sign_vars) start[static_cast<std::size_t>(var.index)] = catalog.subsets[static_cast<std::size_t>(row)].sum(warm) < 0.0 ? 1.0 : 0.0;
    }

    mp::MilpOptions mo;
    mo.stop_at_first_incumbent = true;
    mo.depth_first = true;
    mo.node_limit = options.node_limit;
    mo.start = std::move(start);
    mp::SolveResult res = mp::solve_milp(m, mo);
    rep.nodes += res.stats.nodes;
    rep.rows_in_model = static_cast<int>(active.size());
    if (res.status == mp::SolveStatus::Infeasible) {
      if (report) *report = rep;
      fail(ErrorCode::Infeasible, "no W(lambda)-uniquely balanced vector exists within the bounds of the synthesis MILP");
    }
    if (res.x.empty()) {
      if (report) *report = rep;
      fail(ErrorCode::SolverFailure, std::string("synthesis MILP stopped with status ") + mp::to_string(res.status));
    }
    std::vector<double> cv(static_cast<std::size_t>(nn));
    for (int v = 0; v < nn; ++v) cv[static_cast<std::size_t>(v)] = res.value(c[static_cast<std::size_t>(v)]);
    const double rv = res.value(r);

    // Rows of the full catalog that the incumbent violates, most violated first.
    std::vector<std::pair<double, int>> violated;
    for (int i = 1; i < catalog.size(); ++i) {
      if (is_active[static_cast<std::size_t>(i)]) continue;
      const double bi = catalog.subsets[static_cast<std::size_t>(i)].sum(cv);
      double need = eps;
      if (in_jw[static_cast<std::size_t>(i)]) need = std::max(need, n_u * rv);
      const double short_by = need - std::abs(bi);
      if (short_by > 1e-7) violated.emplace_back(-short_by, i);
    }
    if (violated.empty()) {
      if (report) *report = rep;
      if (auto integral = detail::integral_representative(cv, catalog, w, n_u)) {
        rep.rounded_to_integers = true;
        if (report) *report = rep;
        const double rr = detail::tight_radius(*integral, w);
        return make_balanced(std::move(*integral), rr, catalog, w, n_u);
      }
      BalancedVector out = make_balanced(cv, std::max(rv, detail::tight_radius(cv, w)), catalog, w, n_u);
      if (!out.w_uniquely_balanced) fail(ErrorCode::VerificationFailed, "synthesis MILP solution fails the balance definition; check eps and M");
      return out;
    }
    std::sort(violated.begin(), violated.end());
    for (int k = 0; k < static_cast<int>(violated.size()) && k < options.rows_per_round; ++k) {
      const int i = violated[static_cast<std::size_t>(k)].second;
      active.push_back(i);
      is_active[static_cast<std::size_t>(i)] = 1;
    }
    std::sort(active.begin(), active.end());
  }
  if (report) *report = rep;
  fail(ErrorCode::SolverFailure, "row generation for the synthesis MILP did not converge");
}

}  // namespace ncswitch
