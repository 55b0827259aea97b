#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ncswitch/balance.hpp"
#include "ncswitch/connectedness.hpp"
#include "ncswitch/contingency.hpp"
#include "ncswitch/mp/linear_model.hpp"
#include "ncswitch/scots/case.hpp"

namespace ncswitch {

// ---- connectedness data shared by every scenario ---------------------------

/// Everything the NC constraints need about one topology and lambda.
struct NcBundle {
  int lambda = 1;
  SubgraphCatalog catalog;
  WCatalog w;
  WMatrices wm;
  BalancedVector bal;
  int n_u = 0;
  Thresholds thresholds;
  double region_m = 0.0;     ///< big-M of C(phi, c, d)
  double kkt_m = 0.0;        ///< complementarity big-M
  double indicator_m = 0.0;  ///< big-M of the criteria rows
  std::vector<char> must_stay_on;  ///< branches in some L_i

  ClassificationResult classify(const Topology& topology, const EdgeMask& mask) const {
    return solve_classification_lp(topology, mask, bal, n_u, region_m);
  }
};

inline NcBundle make_nc_bundle(const Topology& topology, int lambda, BalancedVector bal) {
  NcBundle b;
  b.lambda = lambda;
  b.catalog = enumerate_connected_induced_subgraphs(topology);
  b.w = enumerate_w_lambda(topology, lambda);
  b.wm = build_w_matrices(b.w, b.catalog);
  b.n_u = b.w.n_u;
  if (static_cast<int>(bal.c.size()) != topology.bus_count()) fail(ErrorCode::DimensionMismatch, "balanced vector length differs from bus count");
  b.bal = make_balanced(bal.c, bal.r, b.catalog, b.wm, b.n_u);
  if (!b.bal.w_uniquely_balanced) fail(ErrorCode::VerificationFailed, "supplied c is not W(lambda)-uniquely balanced");
  b.thresholds = thresholds_of(b.bal, b.n_u);
  b.region_m = default_region_big_m(b.bal.c);
  b.kkt_m = 4.0 * b.region_m;
  double l1 = 0.0;
  for (double v : b.bal.c) l1 += std::abs(v);
  b.indicator_m = l1 + std::max(b.thresholds.lower, b.thresholds.upper) + 1.0;
  b.must_stay_on.assign(static_cast<std::size_t>(topology.branch_count()), 0);
  for (const auto& p : b.w.pairs) {
    for (int e : p.branches) b.must_stay_on[static_cast<std::size_t>(e)] = 1;
  }
  return b;
}

inline NcBundle make_nc_bundle(const Topology& topology, int lambda, const SynthesisOptions& options = {}) {
  SubgraphCatalog catalog = enumerate_connected_induced_subgraphs(topology);
  WCatalog w = enumerate_w_lambda(topology, lambda);
  WMatrices wm = build_w_matrices(w, catalog);
  return make_nc_bundle(topology, lambda, synthesize_w_balanced(topology, catalog, wm, w.n_u, options));
}

// ---- scenarios ---------------------------------------------------------------

enum class ScenarioMode { Stochastic, Robust };
enum class NcMode { FullCriteria, FirstStageOnly };

inline const char* to_string(ScenarioMode m) { return m == ScenarioMode::Stochastic ? "stochastic" : "robust"; }
inline const char* to_string(NcMode m) { return m == NcMode::FullCriteria ? "full" : "first-stage-only"; }

struct Scenario {
  ContingencyVector o;
  double probability = 0.0;
};

struct ScenarioSet {
  ScenarioMode mode = ScenarioMode::Stochastic;
  std::vector<Scenario> scenarios;
};

/// Every contingency with at most eta failed components. Stochastic weights
/// treat components as independent with the case's outage probability and are
/// normalized over the enumerated set.
inline ScenarioSet make_scenario_set(const ScotsCase& cs, ScenarioMode mode, int eta, std::size_t cap = 100'000) {
  ScenarioSet set;
  set.mode = mode;
  const double q = cs.outage_probability;
  double total = 0.0;
  for (auto& o : enumerate_contingencies(cs.topology, cs.generator_count(), eta, cap)) {
    const int failed = o.failures();
    const int working = cs.generator_count() + cs.branch_count() - failed;
    const double w = std::pow(q, failed) * std::pow(1.0 - q, working);
    total += w;
    set.scenarios.push_back({std::move(o), w});
  }
  for (auto& s : set.scenarios) s.probability = mode == ScenarioMode::Stochastic ? s.probability / total : 1.0 / static_cast<double>(set.scenarios.size());
  return set;
}

// ---- indicator and criteria rows ----------------------------------------------

inline int failed_branches(const std::vector<std::uint8_t>& o_b) {
  int f = 0;
  for (auto v : o_b) f += v ? 0 : 1;
  return f;
}

/// The value the indicator rows force on phi1: 1 for at most lambda failed branches, 0 for
/// lambda+1..eta, none beyond eta.
inline std::optional<int> lambda_branch_indicator(const std::vector<std::uint8_t>& o_b, int lambda, int eta) {
  const int f = failed_branches(o_b);
  if (f <= lambda) return 1;
  if (f <= eta) return 0;
  return std::nullopt;
}

/// Indicator rows: 1 - phi1 (lambda + 1) <= f - lambda <= (1 - phi1)(eta - lambda).
inline mp::VarId lambda_branch_indicator_block(mp::Model& m, const std::vector<std::uint8_t>& o_b, int lambda, int eta,
                                               const std::string& prefix = "s") {
  const double f = failed_branches(o_b);
  mp::VarId phi1 = m.add_binary(prefix + ".phi1", 2);
  m.add_le(1.0 - (lambda + 1.0) * mp::LinExpr(phi1), mp::LinExpr(f - lambda), prefix + ".ind12lo");
  m.add_le(mp::LinExpr(f - lambda), (eta - lambda) * (1.0 - mp::LinExpr(phi1)), prefix + ".ind12hi");
  return phi1;
}

/// Criterion 1 row: objective <= n_u r + (1 - phi1) M.
inline void criterion1_block(mp::Model& m, const mp::LinExpr& objective, const mp::LinExpr& phi1, int n_u, double r, double big_m,
                             const std::string& prefix = "s") {
  m.add_le(objective, n_u * r + big_m * (1.0 - phi1), prefix + ".crit1");
}

struct Criterion2Block {
  mp::LinExpr phi2, phi3;
  std::optional<RegionBlock> first;   ///< z_bar in C(obj / lower, c, 0)
  std::optional<RegionBlock> second;  ///< z_bar + 1 - o_b in C(phi2 + phi3, c, 0)
};

inline constexpr double kIndicatorMargin = 0.5;

/// phi2/phi3 indicator rows with half-unit margins, and the two Criterion 2
/// region memberships. A constant objective turns phi2 and
/// phi3 into constants; memberships whose constant phi is at least 1 are void
/// and are not emitted.
inline Criterion2Block criterion2_block(mp::Model& m, const Topology& topology, const mp::LinExpr& objective, const NcBundle& nc,
                                        const std::vector<mp::LinExpr>& z_bar, const std::vector<std::uint8_t>& o_b,
                                        const std::string& prefix = "s") {
  const double lower = nc.thresholds.lower, upper = nc.thresholds.upper;
  if (!(lower > 0.0)) fail(ErrorCode::InvalidArgument, "criterion 2 needs a positive lower threshold");
  for (double v : nc.bal.c) {
    if (v != std::round(v)) fail(ErrorCode::InvalidArgument, "criterion 2 margins need an integral c");
  }
  const double M = nc.indicator_m;
  Criterion2Block blk;
  if (objective.is_constant()) {
    const double obj = objective.constant();
    blk.phi2 = mp::LinExpr(lower - kIndicatorMargin - obj > 0.0 ? 1.0 : 0.0);
    blk.phi3 = mp::LinExpr(obj - upper - kIndicatorMargin > 0.0 ? 1.0 : 0.0);
  } else {
    mp::VarId phi2 = m.add_binary(prefix + ".phi2", 2), phi3 = m.add_binary(prefix + ".phi3", 2);
    mp::LinExpr gap2 = (lower - kIndicatorMargin) - objective;
    mp::LinExpr gap3 = objective - (upper + kIndicatorMargin);
    m.add_ge(M * mp::LinExpr(phi2), gap2, prefix + ".ind14a");
    m.add_ge(gap2, M * (mp::LinExpr(phi2) - 1.0), prefix + ".ind14b");
    m.add_ge(M * mp::LinExpr(phi3), gap3, prefix + ".ind14c");
    m.add_ge(gap3, M * (mp::LinExpr(phi3) - 1.0), prefix + ".ind14d");
    blk.phi2 = mp::LinExpr(phi2);
    blk.phi3 = mp::LinExpr(phi3);
  }
  const int nn = topology.bus_count(), nb = topology.branch_count();
  const std::vector<mp::LinExpr> zero_d(static_cast<std::size_t>(nn), mp::LinExpr(0.0));
  const mp::LinExpr phi_first = objective * (1.0 / lower);
  if (!(phi_first.is_constant() && phi_first.constant() >= 1.0)) {
    blk.first = region_constraints(m, topology, z_bar, phi_first, nc.bal.c, zero_d, nc.region_m, prefix + ".C1");
  }
  const mp::LinExpr phi_second = blk.phi2 + blk.phi3;
  if (!(phi_second.is_constant() && phi_second.constant() >= 1.0)) {
    std::vector<mp::LinExpr> restored;
    for (int e = 0; e < nb; ++e) restored.push_back(z_bar[static_cast<std::size_t>(e)] + (1.0 - o_b[static_cast<std::size_t>(e)]));
    blk.second = region_constraints(m, topology, restored, phi_second, nc.bal.c, zero_d, nc.region_m, prefix + ".C2");
  }
  return blk;
}

// ---- KKT embedding of the classification LP --------------------------------------

struct KktBlock {
  CompactLp lp;
  std::vector<mp::VarId> y, lambda, xi;
  mp::LinExpr objective;  ///< h'y = 1'(d+ + d-)
  double big_m = 0.0;
};

/// KKT conditions of min h'y s.t. A y <= w(z_tilde): primal rows, stationarity
/// h + A'lambda = 0 (A'lambda = h after flipping the rows to >= form), and
/// big-M complementarity pairs. The strong-duality row h'y + w'lambda <= 0 is
/// added as a valid cut; products of a binary status and a multiplier are
/// written with McCormick rows, exact because lambda <= M.
inline KktBlock kkt_block(mp::Model& m, const Topology& topology, const std::vector<mp::LinExpr>& z_tilde, const NcBundle& nc,
                          const std::string& prefix = "s") {
  KktBlock k;
  k.lp = compact_classification_lp(topology, nc.bal.c, nc.region_m);
  k.big_m = nc.kkt_m;
  const int ny = k.lp.y_count(), nr = static_cast<int>(k.lp.rows.size());
  for (int j = 0; j < ny; ++j) k.y.push_back(m.add_free(prefix + ".y" + std::to_string(j)));
  for (int i = 0; i < nr; ++i) k.lambda.push_back(m.add_var(0.0, mp::kInf, mp::VarKind::Continuous, prefix + ".lam" + std::to_string(i)));
  for (int i = 0; i < nr; ++i) k.xi.push_back(m.add_binary(prefix + ".xi" + std::to_string(i), 0));

  bool exact_cut = true;
  std::vector<mp::LinExpr> zn;
  for (const auto& z : z_tilde) {
    zn.push_back(z.normalized());
    const auto& t = zn.back().terms();
    if (t.size() > 1 || (t.size() == 1 && !(m.var(t[0].var).kind == mp::VarKind::Integer && m.var(t[0].var).lb >= 0.0 && m.var(t[0].var).ub <= 1.0))) {
      exact_cut = false;
    }
  }
  std::vector<mp::LinExpr> stationarity(static_cast<std::size_t>(ny));
  for (int j = 0; j < ny; ++j) stationarity[static_cast<std::size_t>(j)] = mp::LinExpr(k.lp.h[static_cast<std::size_t>(j)]);
  mp::LinExpr duality;
  for (int i = 0; i < nr; ++i) {
    const auto& row = k.lp.rows[static_cast<std::size_t>(i)];
    mp::LinExpr ay, w(row.w0);
    for (auto [j, a] : row.a) {
      ay.add(k.y[static_cast<std::size_t>(j)], a);
      stationarity[static_cast<std::size_t>(j)].add(k.lambda[static_cast<std::size_t>(i)], a);
    }
    for (auto [e, coef] : row.w_u) w += coef * z_tilde[static_cast<std::size_t>(e)];
    const std::string tag = prefix + ".kkt" + std::to_string(i);
    m.add_le(ay, w, tag + ".primal");
    m.add_le(w - ay, k.big_m * (1.0 - mp::LinExpr(k.xi[static_cast<std::size_t>(i)])), tag + ".slack");
    m.add_le(mp::LinExpr(k.lambda[static_cast<std::size_t>(i)]), k.big_m * mp::LinExpr(k.xi[static_cast<std::size_t>(i)]), tag + ".mult");
    if (exact_cut) {
      const mp::VarId lam = k.lambda[static_cast<std::size_t>(i)];
      duality.add(lam, row.w0);
      for (auto [e, coef] : row.w_u) {
        const mp::LinExpr& z = zn[static_cast<std::size_t>(e)];
        duality.add(lam, coef * z.constant());
        if (z.is_constant()) continue;
        const mp::VarId v = z.terms()[0].var;
        mp::VarId mu = m.add_var(0.0, k.big_m, mp::VarKind::Continuous, tag + ".mu" + std::to_string(e));
        m.add_le(mp::LinExpr(mu), k.big_m * mp::LinExpr(v), tag + ".mu" + std::to_string(e) + "a");
        m.add_le(mp::LinExpr(mu), mp::LinExpr(lam), tag + ".mu" + std::to_string(e) + "b");
        m.add_ge(mp::LinExpr(mu), mp::LinExpr(lam) - k.big_m * (1.0 - mp::LinExpr(v)), tag + ".mu" + std::to_string(e) + "c");
        duality.add(mu, coef * z.terms()[0].coef);
      }
    }
  }
  for (int j = 0; j < ny; ++j) m.add_eq(stationarity[static_cast<std::size_t>(j)], mp::LinExpr(0.0), prefix + ".stat" + std::to_string(j));
  for (int j = 0; j < ny; ++j) k.objective.add(k.y[static_cast<std::size_t>(j)], k.lp.h[static_cast<std::size_t>(j)]);
  if (exact_cut) m.add_le(k.objective + duality, mp::LinExpr(0.0), prefix + ".sd");
  return k;
}

// ---- DC network -----------------------------------------------------------------

struct DcBlock {
  std::vector<mp::VarId> theta;  ///< rad
  std::vector<mp::VarId> flow;   ///< MW, from -> to
};

/// Switched DC flow: |f| <= cap s, |f - base B (theta_i - theta_j)| <= M (1 - s)
/// and E f = injection at every bus.
inline DcBlock dc_network_block(mp::Model& m, const ScotsCase& cs, const std::vector<mp::LinExpr>& status,
                                const std::vector<mp::LinExpr>& injection, const std::string& prefix) {
  const int nn = cs.bus_count(), nb = cs.branch_count();
  DcBlock dc;
  const double tmax = cs.theta_max();
  for (int v = 0; v < nn; ++v) dc.theta.push_back(m.add_var(-tmax, tmax, mp::VarKind::Continuous, prefix + ".va" + std::to_string(v + 1)));
  std::vector<mp::LinExpr> outflow(static_cast<std::size_t>(nn));
  for (int e = 0; e < nb; ++e) {
    const Branch& br = cs.topology.branch(e);
    const BranchData& bd = cs.branches[static_cast<std::size_t>(e)];
    const mp::LinExpr& s = status[static_cast<std::size_t>(e)];
    const std::string tag = prefix + ".f" + std::to_string(e + 1);
    mp::VarId f = m.add_free(tag);
    dc.flow.push_back(f);
    if (s.is_constant()) {
      const double cap = bd.capacity * s.constant();
      m.set_bounds(f, -cap, cap);
    } else {
      m.add_le(mp::LinExpr(f), bd.capacity * s, tag + ".caphi");
      m.add_ge(mp::LinExpr(f), -bd.capacity * s, tag + ".caplo");
    }
    const double k = cs.base_mva * bd.susceptance;
    mp::LinExpr law = mp::LinExpr(f) - k * mp::LinExpr(dc.theta[static_cast<std::size_t>(br.from)]) + k * mp::LinExpr(dc.theta[static_cast<std::size_t>(br.to)]);
    const bool closed = s.is_constant() && s.constant() >= 1.0;
    const bool open = s.is_constant() && s.constant() <= 0.0;
    if (closed) {
      m.add_eq(law, mp::LinExpr(0.0), tag + ".law");
    } else if (!open) {
      const double M = cs.flow_big_m(e);
      m.add_le(law, M * (1.0 - s), tag + ".lawhi");
      m.add_ge(law, -M * (1.0 - s), tag + ".lawlo");
    }
    outflow[static_cast<std::size_t>(br.from)].add(f, 1.0);
    outflow[static_cast<std::size_t>(br.to)].add(f, -1.0);
  }
  for (int v = 0; v < nn; ++v) m.add_eq(outflow[static_cast<std::size_t>(v)], injection[static_cast<std::size_t>(v)], prefix + ".bal" + std::to_string(v + 1));
  return dc;
}

// ---- first stage ------------------------------------------------------------------

struct FirstStageBlock {
  std::vector<mp::VarId> p;
  std::vector<mp::LinExpr> z;
  std::vector<mp::VarId> z_vars;  ///< empty when z is fixed
  DcBlock dc;
  RegionBlock region;
  mp::LinExpr cost;
};

/// Normal-state dispatch with z in C(0, c, 0) and the branches of every L_i
/// kept on. `fixed_z` pins the statuses to data.
inline FirstStageBlock first_stage_block(mp::Model& m, const ScotsCase& cs, const NcBundle& nc, const EdgeMask* fixed_z = nullptr) {
  const int nn = cs.bus_count(), nb = cs.branch_count();
  FirstStageBlock fs;
  for (int g = 0; g < cs.generator_count(); ++g) {
    const auto& gen = cs.generators[static_cast<std::size_t>(g)];
    fs.p.push_back(m.add_var(gen.pmin, gen.pmax, mp::VarKind::Continuous, "pg" + std::to_string(g + 1)));
    fs.cost.add(fs.p.back(), gen.cost);
  }
  if (fixed_z) {
    if (fixed_z->size() != nb) fail(ErrorCode::LengthMismatch, "first-stage mask length differs from branch count");
    fs.z = constant_statuses(*fixed_z);
  } else {
    mp::LinExpr off;
    for (int e = 0; e < nb; ++e) {
      mp::VarId z = m.add_binary("z" + std::to_string(e + 1), 3);
      if (nc.must_stay_on[static_cast<std::size_t>(e)]) m.set_bounds(z, 1.0, 1.0);
      fs.z_vars.push_back(z);
      fs.z.emplace_back(z);
      off += 1.0 - mp::LinExpr(z);
    }
    if (cs.first_stage_switch_limit >= 0) m.add_le(off, mp::LinExpr(cs.first_stage_switch_limit), "zlimit");
  }
  std::vector<mp::LinExpr> inj(static_cast<std::size_t>(nn));
  for (int v = 0; v < nn; ++v) inj[static_cast<std::size_t>(v)] = mp::LinExpr(-cs.load[static_cast<std::size_t>(v)]);
  for (int g = 0; g < cs.generator_count(); ++g) inj[static_cast<std::size_t>(cs.generators[static_cast<std::size_t>(g)].bus)].add(fs.p[static_cast<std::size_t>(g)], 1.0);
  fs.dc = dc_network_block(m, cs, fs.z, inj, "n");
  const std::vector<mp::LinExpr> zero_d(static_cast<std::size_t>(nn), mp::LinExpr(0.0));
  fs.region = region_constraints(m, cs.topology, fs.z, mp::LinExpr(0.0), nc.bal.c, zero_d, nc.region_m, "C0");
  return fs;
}

// ---- second stage -------------------------------------------------------------------

enum class Embedding { Kkt, Sequential };

struct SecondStageBlock {
  std::vector<mp::VarId> p_up, p_dn, shed, z_plus, z_minus;
  std::vector<mp::LinExpr> output;  ///< post-contingency generator output
  std::vector<mp::LinExpr> z_tilde, z_bar;
  DcBlock dc;
  mp::LinExpr cost;
  mp::LinExpr nc_objective, phi1;
  Criterion2Block crit2;
  std::optional<KktBlock> kkt;
};

/// One scenario of the single-level second stage: DC corrective control with
/// regulation, shedding and switching, plus the indicator, criteria and KKT rows under
/// FullCriteria. With Embedding::Sequential the classification objective is
/// the constant `sequential_objective` and every phi is data.
inline SecondStageBlock build_second_stage(mp::Model& m, const ScotsCase& cs, const NcBundle& nc, const std::vector<mp::LinExpr>& z,
                                           const std::vector<mp::LinExpr>& p, const ContingencyVector& o, NcMode mode,
                                           Embedding embedding, double sequential_objective = 0.0, const std::string& prefix = "s") {
  const int nn = cs.bus_count(), nb = cs.branch_count(), ng = cs.generator_count();
  if (static_cast<int>(o.o_b.size()) != nb || static_cast<int>(o.o_g.size()) != ng) fail(ErrorCode::DimensionMismatch, "contingency does not match the case");
  SecondStageBlock ss;
  const double reg = cs.effective_reg_cost(), voll = cs.effective_voll();
  std::vector<mp::LinExpr> inj(static_cast<std::size_t>(nn));
  for (int v = 0; v < nn; ++v) {
    const double load = cs.load[static_cast<std::size_t>(v)];
    ss.shed.push_back(m.add_var(0.0, load, mp::VarKind::Continuous, prefix + ".shed" + std::to_string(v + 1)));
    inj[static_cast<std::size_t>(v)] = mp::LinExpr(ss.shed.back()) - load;
    ss.cost.add(ss.shed.back(), voll);
  }
  for (int g = 0; g < ng; ++g) {
    const auto& gen = cs.generators[static_cast<std::size_t>(g)];
    const bool up = o.o_g[static_cast<std::size_t>(g)] != 0;
    const std::string tag = prefix + ".g" + std::to_string(g + 1);
    ss.p_up.push_back(m.add_var(0.0, up ? gen.reg_up : 0.0, mp::VarKind::Continuous, tag + ".up"));
    ss.p_dn.push_back(m.add_var(0.0, up ? gen.reg_dn : 0.0, mp::VarKind::Continuous, tag + ".dn"));
    ss.cost.add(ss.p_up.back(), reg);
    ss.cost.add(ss.p_dn.back(), reg);
    if (up) {
      mp::LinExpr q = p[static_cast<std::size_t>(g)] + mp::LinExpr(ss.p_up.back()) - mp::LinExpr(ss.p_dn.back());
      m.add_le(q, mp::LinExpr(gen.pmax), tag + ".qmax");
      m.add_ge(q, mp::LinExpr(0.0), tag + ".qmin");
      inj[static_cast<std::size_t>(gen.bus)] += q;
      ss.output.push_back(q);
    } else {
      ss.output.emplace_back(0.0);
    }
  }
  mp::LinExpr actions;
  for (int e = 0; e < nb; ++e) {
    const double oe = o.o_b[static_cast<std::size_t>(e)] ? 1.0 : 0.0;
    const mp::LinExpr zt = z[static_cast<std::size_t>(e)] * oe;
    ss.z_tilde.push_back(zt);
    const std::string tag = prefix + ".e" + std::to_string(e + 1);
    mp::VarId plus = m.add_binary(tag + ".on", 1), minus = m.add_binary(tag + ".off", 1);
    if (zt.is_constant()) {
      m.set_bounds(plus, 0.0, oe - zt.constant());
      m.set_bounds(minus, 0.0, zt.constant());
    } else {
      m.set_bounds(plus, 0.0, oe);
      m.set_bounds(minus, 0.0, oe);
      m.add_le(mp::LinExpr(plus) + zt, mp::LinExpr(oe), tag + ".onlim");
      m.add_le(mp::LinExpr(minus) - zt, mp::LinExpr(0.0), tag + ".offlim");
    }
    ss.z_plus.push_back(plus);
    ss.z_minus.push_back(minus);
    ss.z_bar.push_back(zt + mp::LinExpr(plus) - mp::LinExpr(minus));
    actions += mp::LinExpr(plus) + mp::LinExpr(minus);
  }
  m.add_le(actions, mp::LinExpr(cs.switch_budget), prefix + ".budget");
  ss.cost += cs.switch_cost * actions;
  ss.dc = dc_network_block(m, cs, ss.z_bar, inj, prefix);

  if (mode == NcMode::FullCriteria) {
    const auto forced = lambda_branch_indicator(o.o_b, nc.lambda, cs.eta);
    if (!forced) fail(ErrorCode::InvalidArgument, "scenario " + o.label() + " exceeds eta");
    if (embedding == Embedding::Kkt) {
      ss.kkt = kkt_block(m, cs.topology, ss.z_tilde, nc, prefix);
      ss.nc_objective = ss.kkt->objective;
      ss.phi1 = mp::LinExpr(lambda_branch_indicator_block(m, o.o_b, nc.lambda, cs.eta, prefix));
    } else {
      ss.nc_objective = mp::LinExpr(sequential_objective);
      ss.phi1 = mp::LinExpr(static_cast<double>(*forced));
    }
    if (!(ss.phi1.is_constant() && ss.phi1.constant() == 0.0)) {
      criterion1_block(m, ss.nc_objective, ss.phi1, nc.n_u, nc.bal.r, nc.indicator_m, prefix);
    }
    ss.crit2 = criterion2_block(m, cs.topology, ss.nc_objective, nc, ss.z_bar, o.o_b, prefix);
  }
  return ss;
}

}  // namespace ncswitch
