#pragma once

// Network-connectedness certificates: the big-M region C(phi, c, d), the
// mask-parameterized classification LP, its closed-form optimum and the
// band classifier.

#include <cmath>
#include <string>
#include <vector>

#include "ncswitch/balance.hpp"
#include "ncswitch/error.hpp"
#include "ncswitch/mp/solve.hpp"
#include "ncswitch/netgraph.hpp"

namespace ncswitch {

enum class ConnectivityClass { Connected, WDisconnected, OtherDisconnected };

inline const char* to_string(ConnectivityClass k) {
  switch (k) {
    case ConnectivityClass::Connected: return "Connected";
    case ConnectivityClass::WDisconnected: return "WDisconnected";
    case ConnectivityClass::OtherDisconnected: return "OtherDisconnected";
  }
  return "Unknown";
}

/// M = 2 n_n ||c||_1.
inline double default_region_big_m(const std::vector<double>& c) {
  double l1 = 0.0;
  for (double v : c) l1 += std::abs(v);
  return 2.0 * static_cast<double>(c.size()) * l1;
}

struct RegionBlock {
  std::vector<mp::VarId> theta;  ///< per bus, in units of `scale`
  std::vector<mp::VarId> rho;    ///< per branch, in units of `scale`
  double big_m = 0.0;
  double scale = 1.0;

  std::vector<double> theta_values(const std::vector<double>& x) const { return values(theta, x); }
  std::vector<double> rho_values(const std::vector<double>& x) const { return values(rho, x); }

 private:
  std::vector<double> values(const std::vector<mp::VarId>& vars, const std::vector<double>& x) const {
    std::vector<double> out;
    for (auto v : vars) out.push_back(scale * x[static_cast<std::size_t>(v.index)]);
    return out;
  }
};

/// Adds the three constraint groups of C(phi, c, d) for the branch statuses
/// `u` to `model` and returns the auxiliary potentials and flows. Potentials
/// and flows are measured in units of M and every row is divided by M, which
/// keeps the coefficients near one.
inline RegionBlock region_constraints(mp::Model& model, const Topology& topology, const std::vector<mp::LinExpr>& u,
                                      const mp::LinExpr& phi, const std::vector<double>& c, const std::vector<mp::LinExpr>& d,
                                      double big_m, const std::string& prefix = "C") {
  const int nn = topology.bus_count(), nb = topology.branch_count();
  if (static_cast<int>(u.size()) != nb || static_cast<int>(c.size()) != nn || static_cast<int>(d.size()) != nn) {
    fail(ErrorCode::DimensionMismatch, "region dimensions do not match the topology");
  }
  RegionBlock blk;
  blk.big_m = big_m;
  blk.scale = big_m;
  for (int v = 0; v < nn; ++v) blk.theta.push_back(model.add_free(prefix + ".theta" + std::to_string(v + 1)));
  for (int e = 0; e < nb; ++e) blk.rho.push_back(model.add_free(prefix + ".rho" + std::to_string(e + 1)));
  const double inv = 1.0 / big_m;
  std::vector<mp::LinExpr> outflow(static_cast<std::size_t>(nn));
  for (int e = 0; e < nb; ++e) {
    const Branch& br = topology.branch(e);
    const auto ue = u[static_cast<std::size_t>(e)];
    const mp::VarId rho = blk.rho[static_cast<std::size_t>(e)];
    mp::LinExpr drop = mp::LinExpr(blk.theta[static_cast<std::size_t>(br.from)]) - mp::LinExpr(blk.theta[static_cast<std::size_t>(br.to)]) -
                       mp::LinExpr(rho);
    const std::string tag = prefix + ".e" + std::to_string(e + 1);
    model.add_ge(drop, ue - 1.0 - phi, tag + ".g1lo");
    model.add_le(drop, 1.0 - ue + phi, tag + ".g1hi");
    model.add_ge(mp::LinExpr(rho), -1.0 * (ue + phi), tag + ".g2lo");
    model.add_le(mp::LinExpr(rho), ue + phi, tag + ".g2hi");
    outflow[static_cast<std::size_t>(br.from)].add(rho, 1.0);
    outflow[static_cast<std::size_t>(br.to)].add(rho, -1.0);
  }
  for (int v = 0; v < nn; ++v) {
    mp::LinExpr bal = outflow[static_cast<std::size_t>(v)] - inv * (c[static_cast<std::size_t>(v)] + d[static_cast<std::size_t>(v)]);
    const std::string tag = prefix + ".n" + std::to_string(v + 1);
    model.add_ge(bal, -1.0 * phi, tag + ".g3lo");
    model.add_le(bal, phi, tag + ".g3hi");
  }
  return blk;
}

/// Convenience overload for constant branch statuses.
inline std::vector<mp::LinExpr> constant_statuses(const EdgeMask& mask) {
  std::vector<mp::LinExpr> u;
  for (int e = 0; e < mask.size(); ++e) u.emplace_back(mask.on(e) ? 1.0 : 0.0);
  return u;
}

/// Closed-form optimum of the classification LP: sum over the components of
/// the masked graph of |sum of c over the component|.
inline double oracle_objective(const Topology& topology, const EdgeMask& mask, const std::vector<double>& c) {
  ComponentPartition part = connected_components(topology, mask);
  if (part.count() == 1) return 0.0;
  double total = 0.0;
  for (BusSet comp : part.components) total += std::abs(comp.sum(c));
  return total;
}

struct Thresholds {
  double lower = 0.0;  ///< 2 ||b||_-2inf
  double upper = 0.0;  ///< n_u r
};

inline Thresholds thresholds_of(const BalancedVector& bal, int n_u) { return {bal.lower_threshold(), bal.upper_threshold(n_u)}; }

inline constexpr double kClassifyTol = 1e-6;

inline ConnectivityClass classify(double objective, const Thresholds& t) {
  if (objective <= kClassifyTol) return ConnectivityClass::Connected;
  if (objective <= t.upper + kClassifyTol) return ConnectivityClass::WDisconnected;
  return ConnectivityClass::OtherDisconnected;
}

inline ConnectivityClass classify(double objective, const BalancedVector& bal, int n_u) { return classify(objective, thresholds_of(bal, n_u)); }

struct ClassificationResult {
  double objective = 0.0;
  std::vector<double> d_plus, d_minus;
  ConnectivityClass klass = ConnectivityClass::Connected;
  Thresholds thresholds;
  bool forbidden_band = false;  ///< objective strictly inside (0, 2 ||b||_-2inf)
  double dual_objective = 0.0;
  mp::SolveStats stats;
};

namespace detail {

/// Re-centres potentials per component of `mask` (smallest potential 0) and
/// checks that no deactivated row is within 1e-4 M of binding.
inline bool region_big_m_valid(const Topology& topology, const EdgeMask& mask, std::vector<double> theta, const std::vector<double>& rho,
                               double big_m) {
  ComponentPartition part = connected_components(topology, mask);
  for (BusSet comp : part.components) {
    double lo = mp::kInf;
    for (int v : comp.members()) lo = std::min(lo, theta[static_cast<std::size_t>(v)]);
    for (int v : comp.members()) theta[static_cast<std::size_t>(v)] -= lo;
  }
  const double limit = big_m * (1.0 - 1e-4);
  for (int e = 0; e < topology.branch_count(); ++e) {
    const Branch& br = topology.branch(e);
    if (mask.on(e)) {
      if (std::abs(rho[static_cast<std::size_t>(e)]) > limit) return false;
    } else {
      const double drop = theta[static_cast<std::size_t>(br.from)] - theta[static_cast<std::size_t>(br.to)] - rho[static_cast<std::size_t>(e)];
      if (std::abs(drop) > limit) return false;
    }
  }
  return true;
}

}  // namespace detail

/// min 1'(d+ + d-) s.t. mask in C(0, c, d+ - d-), d+, d- >= 0.
inline ClassificationResult solve_classification_lp(const Topology& topology, const EdgeMask& mask, const BalancedVector& bal, int n_u,
                                                    double big_m = 0.0) {
  if (!bal.w_uniquely_balanced) fail(ErrorCode::InvalidArgument, "classification needs a W(lambda)-uniquely balanced c");
  if (mask.size() != topology.branch_count()) fail(ErrorCode::LengthMismatch, "mask length differs from branch count");
  const int nn = topology.bus_count();
  if (big_m <= 0.0) big_m = default_region_big_m(bal.c);

  mp::Model m;
  std::vector<mp::VarId> dp, dm;
  std::vector<mp::LinExpr> d;
  mp::LinExpr obj;
  for (int v = 0; v < nn; ++v) {
    dp.push_back(m.add_var(0.0, mp::kInf, mp::VarKind::Continuous, "dp" + std::to_string(v + 1)));
    dm.push_back(m.add_var(0.0, mp::kInf, mp::VarKind::Continuous, "dm" + std::to_string(v + 1)));
    d.push_back(mp::LinExpr(dp.back()) - mp::LinExpr(dm.back()));
    obj += mp::LinExpr(dp.back()) + mp::LinExpr(dm.back());
  }
  RegionBlock blk = region_constraints(m, topology, constant_statuses(mask), mp::LinExpr(0.0), bal.c, d, big_m);
  m.set_objective(obj);
  mp::SolveResult res = mp::solve_lp(m);
  if (res.status == mp::SolveStatus::NumericalFailure) fail(ErrorCode::NumericalFailure, "classification LP failed its certificate check");
  if (res.status != mp::SolveStatus::Optimal) {
    fail(ErrorCode::SolverFailure, std::string("classification LP ended with status ") + mp::to_string(res.status));
  }

  ClassificationResult out;
  out.objective = res.objective;
  out.stats = res.stats;
  for (int v = 0; v < nn; ++v) {
    out.d_plus.push_back(res.value(dp[static_cast<std::size_t>(v)]));
    out.d_minus.push_back(res.value(dm[static_cast<std::size_t>(v)]));
  }
  out.dual_objective = mp::lp_certificate(m, res.x, res.row_duals).dual_objective;
  if (!detail::region_big_m_valid(topology, mask, blk.theta_values(res.x), blk.rho_values(res.x), big_m)) {
    fail(ErrorCode::BigMTooSmall, "a deactivated region row is binding within 1e-4 M");
  }
  out.thresholds = thresholds_of(bal, n_u);
  out.klass = classify(out.objective, out.thresholds);
  out.forbidden_band = out.objective > kClassifyTol && out.objective < out.thresholds.lower - kClassifyTol;
  return out;
}

/// The classification LP in the compact form min h'y s.t. A y <= w(u), with
/// y = (d+, d-, theta, rho) and w affine in the branch statuses u.
struct CompactLp {
  struct Row {
    std::vector<std::pair<int, double>> a;    ///< (y index, coefficient)
    double w0 = 0.0;                          ///< constant part of w
    std::vector<std::pair<int, double>> w_u;  ///< (branch, coefficient) part of w
  };
  int bus_count = 0;
  int branch_count = 0;
  std::vector<double> h;
  std::vector<Row> rows;

  int y_count() const { return static_cast<int>(h.size()); }
  int d_plus(int v) const { return v; }
  int d_minus(int v) const { return bus_count + v; }
  int theta(int v) const { return 2 * bus_count + v; }
  int rho(int e) const { return 3 * bus_count + e; }

  double rhs(int i, const EdgeMask& u) const {
    const Row& r = rows[static_cast<std::size_t>(i)];
    double w = r.w0;
    for (auto [e, coef] : r.w_u) w += coef * (u.on(e) ? 1.0 : 0.0);
    return w;
  }
};

/// Row order per group: G1 (upper, lower) per branch, G2 (upper, lower) per
/// branch, G3 (upper, lower) per bus, then -d+ <= 0 and -d- <= 0 per bus.
inline CompactLp compact_classification_lp(const Topology& topology, const std::vector<double>& c, double big_m) {
  CompactLp lp;
  const int nn = topology.bus_count(), nb = topology.branch_count();
  lp.bus_count = nn;
  lp.branch_count = nb;
  lp.h.assign(static_cast<std::size_t>(3 * nn + nb), 0.0);
  for (int v = 0; v < 2 * nn; ++v) lp.h[static_cast<std::size_t>(v)] = 1.0;
  const double M = big_m;
  for (int e = 0; e < nb; ++e) {
    const Branch& br = topology.branch(e);
    CompactLp::Row hi{{{lp.theta(br.from), 1.0}, {lp.theta(br.to), -1.0}, {lp.rho(e), -1.0}}, M, {{e, -M}}};
    CompactLp::Row lo{{{lp.theta(br.from), -1.0}, {lp.theta(br.to), 1.0}, {lp.rho(e), 1.0}}, M, {{e, -M}}};
    lp.rows.push_back(std::move(hi));
    lp.rows.push_back(std::move(lo));
  }
  for (int e = 0; e < nb; ++e) {
    lp.rows.push_back(CompactLp::Row{{{lp.rho(e), 1.0}}, 0.0, {{e, M}}});
    lp.rows.push_back(CompactLp::Row{{{lp.rho(e), -1.0}}, 0.0, {{e, M}}});
  }
  for (int v = 0; v < nn; ++v) {
    CompactLp::Row hi, lo;
    for (int e = 0; e < nb; ++e) {
      const Branch& br = topology.branch(e);
      const double s = br.from == v ? 1.0 : br.to == v ? -1.0 : 0.0;
      if (s == 0.0) continue;
      hi.a.emplace_back(lp.rho(e), s);
      lo.a.emplace_back(lp.rho(e), -s);
    }
    hi.a.emplace_back(lp.d_plus(v), -1.0);
    hi.a.emplace_back(lp.d_minus(v), 1.0);
    lo.a.emplace_back(lp.d_plus(v), 1.0);
    lo.a.emplace_back(lp.d_minus(v), -1.0);
    hi.w0 = c[static_cast<std::size_t>(v)];
    lo.w0 = -c[static_cast<std::size_t>(v)];
    lp.rows.push_back(std::move(hi));
    lp.rows.push_back(std::move(lo));
  }
  for (int v = 0; v < nn; ++v) lp.rows.push_back(CompactLp::Row{{{lp.d_plus(v), -1.0}}, 0.0, {}});
  for (int v = 0; v < nn; ++v) lp.rows.push_back(CompactLp::Row{{{lp.d_minus(v), -1.0}}, 0.0, {}});
  return lp;
}

}  // namespace ncswitch
