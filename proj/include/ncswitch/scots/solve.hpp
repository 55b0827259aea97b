#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <string>
#include <vector>

#include "ncswitch/mp/solve.hpp"
#include "ncswitch/parallel.hpp"
#include "ncswitch/scots/blocks.hpp"

namespace ncswitch {

struct ScenarioOutcome {
  ContingencyVector o;
  double probability = 0.0;
  bool feasible = true;
  double cost = 0.0;
  double shed = 0.0;
  double nc_objective = 0.0;  ///< 1'(d+ + d-) of z_tilde
  ConnectivityClass klass = ConnectivityClass::Connected;
  int phi1 = -1, phi2 = -1, phi3 = -1;  ///< -1 when the criteria are not modeled
  std::vector<int> switched_on, switched_off;
  std::vector<double> output;       ///< per generator, MW
  std::vector<double> shed_by_bus;  ///< MW
  EdgeMask z_bar;
  long long nodes = 0;

  int actions() const { return static_cast<int>(switched_on.size() + switched_off.size()); }
};

struct ScotsSolution {
  ScenarioMode mode = ScenarioMode::Stochastic;
  NcMode nc = NcMode::FullCriteria;
  std::string method;
  bool proven_optimal = false;
  EdgeMask z;
  std::vector<double> p;
  double objective = 0.0;
  double first_stage_cost = 0.0;
  double recourse_cost = 0.0;  ///< expectation or worst case
  std::vector<ScenarioOutcome> scenarios;
  long long candidates = 0;  ///< first-stage masks enumerated
  long long evaluated = 0;   ///< masks that reached the recourse solve
  long long milp_nodes = 0;
};

enum class Strategy { Auto, Extensive, Decomposition };

struct TwoStageOptions {
  Strategy strategy = Strategy::Auto;
  mp::MilpOptions milp;
  int max_outer = 10;
  int max_benders = 200;
  double tolerance = 1e-6;
  std::size_t candidate_cap = 1U << 16;
  int extensive_row_cap = 600;  ///< Auto picks the extensive form below this row estimate
  int threads = 0;              ///< 0 selects thread_budget()
};

namespace detail {

inline EdgeMask mask_of(const std::vector<double>& x, const std::vector<mp::LinExpr>& exprs) {
  std::vector<std::uint8_t> bits;
  for (const auto& e : exprs) bits.push_back(e.evaluate(x) > 0.5 ? 1 : 0);
  return EdgeMask(std::move(bits));
}

inline EdgeMask restored_mask(const EdgeMask& z_bar, const std::vector<std::uint8_t>& o_b) {
  EdgeMask out = z_bar;
  for (int e = 0; e < out.size(); ++e) {
    if (!o_b[static_cast<std::size_t>(e)]) out.set(e, true);
  }
  return out;
}

inline void audit_region(const Topology& topology, const EdgeMask& mask, const RegionBlock& blk, const std::vector<double>& x,
                         const std::string& where) {
  if (!region_big_m_valid(topology, mask, blk.theta_values(x), blk.rho_values(x), blk.big_m)) fail(ErrorCode::BigMTooSmall, "region rows of " + where + " bind at M");
}

/// Largest multiplier and optimal value of the compact classification LP at
/// a fixed status vector.
inline std::pair<double, double> compact_lp_check(const CompactLp& lp, const EdgeMask& mask) {
  mp::Model m;
  std::vector<mp::VarId> y;
  for (int j = 0; j < lp.y_count(); ++j) y.push_back(m.add_free());
  for (int i = 0; i < static_cast<int>(lp.rows.size()); ++i) {
    mp::LinExpr ay;
    for (auto [j, a] : lp.rows[static_cast<std::size_t>(i)].a) ay.add(y[static_cast<std::size_t>(j)], a);
    m.add_le(ay, mp::LinExpr(lp.rhs(i, mask)));
  }
  mp::LinExpr obj;
  for (int j = 0; j < lp.y_count(); ++j) obj.add(y[static_cast<std::size_t>(j)], lp.h[static_cast<std::size_t>(j)]);
  m.set_objective(obj);
  mp::SolveResult res = mp::solve_lp(m);
  if (res.status != mp::SolveStatus::Optimal) fail(ErrorCode::SolverFailure, std::string("classification LP ended with status ") + mp::to_string(res.status));
  double worst = 0.0;
  for (double d : res.row_duals) worst = std::max(worst, std::abs(d));
  return {worst, res.objective};
}

/// Post-solve checks of one scenario block. The KKT part re-solves the inner
/// LP at the realized z_tilde: its value must match the embedded objective and
/// its multipliers must stay clear of M. Active Criterion 2 memberships are checked
/// on the solution's own potentials.
inline void audit_second_stage(const Topology& topology, const NcBundle& nc, const SecondStageBlock& ss, const std::vector<uint8_t>& o_b,
                               const std::vector<double>& x, const std::string& where) {
  if (ss.kkt) {
    const KktBlock& k = *ss.kkt;
    const EdgeMask zt = mask_of(x, ss.z_tilde);
    const double inner = nc.classify(topology, zt).objective;
    const auto [worst, value] = compact_lp_check(k.lp, zt);
    if (worst > k.big_m * (1.0 - 1e-4)) fail(ErrorCode::BigMTooSmall, "inner multipliers of " + where + " reach the complementarity M");
    const double embedded = k.objective.evaluate(x);
    if (std::abs(embedded - inner) > 1e-6 * (1.0 + inner) || std::abs(value - inner) > 1e-6 * (1.0 + inner)) {
      fail(ErrorCode::BigMTooSmall, "embedded classification of " + where + " differs from the inner LP");
    }
  }
  const EdgeMask zb = mask_of(x, ss.z_bar);
  if (ss.crit2.first && ss.nc_objective.evaluate(x) <= kClassifyTol) audit_region(topology, zb, *ss.crit2.first, x, where + " (15a)");
  if (ss.crit2.second && (ss.crit2.phi2 + ss.crit2.phi3).evaluate(x) < 0.5) {
    audit_region(topology, restored_mask(zb, o_b), *ss.crit2.second, x, where + " (15b)");
  }
}

inline ScenarioOutcome read_outcome(const ScotsCase& cs, const NcBundle& nc, const SecondStageBlock& ss, const std::vector<double>& x,
                                    const Scenario& sc, NcMode mode) {
  ScenarioOutcome out;
  out.o = sc.o;
  out.probability = sc.probability;
  out.cost = ss.cost.evaluate(x);
  for (int v = 0; v < cs.bus_count(); ++v) {
    const double s = x[static_cast<std::size_t>(ss.shed[static_cast<std::size_t>(v)].index)];
    out.shed_by_bus.push_back(s);
    out.shed += s;
  }
  for (const auto& q : ss.output) out.output.push_back(q.evaluate(x));
  for (int e = 0; e < cs.branch_count(); ++e) {
    if (x[static_cast<std::size_t>(ss.z_plus[static_cast<std::size_t>(e)].index)] > 0.5) out.switched_on.push_back(e);
    if (x[static_cast<std::size_t>(ss.z_minus[static_cast<std::size_t>(e)].index)] > 0.5) out.switched_off.push_back(e);
  }
  out.z_bar = mask_of(x, ss.z_bar);
  if (mode == NcMode::FullCriteria) {
    out.nc_objective = ss.nc_objective.evaluate(x);
    out.klass = classify(out.nc_objective, nc.thresholds);
    out.phi1 = static_cast<int>(std::lround(ss.phi1.evaluate(x)));
    out.phi2 = static_cast<int>(std::lround(ss.crit2.phi2.evaluate(x)));
    out.phi3 = static_cast<int>(std::lround(ss.crit2.phi3.evaluate(x)));
  }
  return out;
}

inline std::vector<mp::LinExpr> constants(const std::vector<double>& v) {
  std::vector<mp::LinExpr> out;
  for (double x : v) out.emplace_back(x);
  return out;
}

}  // namespace detail

/// One scenario with z and p_g fixed. Sequential: solve the classification LP on z_tilde,
/// fix the phis, then the corrective MILP. Kkt: the single-level KKT model.
inline ScenarioOutcome solve_second_stage(const ScotsCase& cs, const NcBundle& nc, const EdgeMask& z, const std::vector<double>& p,
                                          const Scenario& sc, NcMode mode, Embedding embedding, const mp::MilpOptions& milp = {}) {
  if (static_cast<int>(p.size()) != cs.generator_count()) fail(ErrorCode::DimensionMismatch, "dispatch length differs from generator count");
  const EdgeMask zt = z & EdgeMask(sc.o.o_b);
  double objective = 0.0;
  ScenarioOutcome infeasible;
  infeasible.o = sc.o;
  infeasible.probability = sc.probability;
  infeasible.feasible = false;
  if (mode == NcMode::FullCriteria && embedding == Embedding::Sequential) {
    ClassificationResult cls = nc.classify(cs.topology, zt);
    objective = std::max(0.0, std::round(cls.objective * 1e6) / 1e6);
    const auto phi1 = lambda_branch_indicator(sc.o.o_b, nc.lambda, cs.eta);
    if (!phi1) fail(ErrorCode::InvalidArgument, "scenario " + sc.o.label() + " exceeds eta");
    if (*phi1 == 1 && objective > nc.thresholds.upper + kClassifyTol) {
      infeasible.nc_objective = objective;
      infeasible.klass = cls.klass;
      return infeasible;
    }
  }
  const auto zc = constant_statuses(z);
  const auto pc = detail::constants(p);
  mp::Model m;
  SecondStageBlock ss = build_second_stage(m, cs, nc, zc, pc, sc.o, mode, embedding, objective);
  m.set_objective(ss.cost);
  mp::MilpOptions mo = milp;
  // Doing nothing is always admissible: z_bar = z_tilde meets Criterion 2.
  if (mo.start.empty()) mo.start.assign(static_cast<std::size_t>(m.var_count()), 0.0);
  mp::SolveResult res;
  if (mode == NcMode::FullCriteria && embedding == Embedding::Sequential) {
    // The recourse without connectedness rows is a relaxation. When its
    // actions also satisfy Criterion 2 they are optimal here.
    mp::Model r;
    SecondStageBlock rs = build_second_stage(r, cs, nc, zc, pc, sc.o, NcMode::FirstStageOnly, embedding);
    r.set_objective(rs.cost);
    mp::MilpOptions ro = milp;
    ro.start.assign(static_cast<std::size_t>(r.var_count()), 0.0);
    const mp::SolveResult relaxed = mp::solve(r, ro);
    if (relaxed.status == mp::SolveStatus::Infeasible) return infeasible;
    if (relaxed.status == mp::SolveStatus::Optimal) {
      mp::Model fixed = m;
      for (std::size_t e = 0; e < ss.z_plus.size(); ++e) {
        const double on = std::round(relaxed.value(rs.z_plus[e])), off = std::round(relaxed.value(rs.z_minus[e]));
        fixed.set_bounds(ss.z_plus[e], on, on);
        fixed.set_bounds(ss.z_minus[e], off, off);
      }
      res = mp::solve(fixed, mo);
      if (res.status == mp::SolveStatus::Optimal && res.objective <= relaxed.objective + mo.absolute_gap * (1.0 + std::abs(relaxed.objective))) {
        res.stats.nodes += relaxed.stats.nodes;
      } else {
        mo.known_bound = relaxed.objective;
        res = mp::solve(m, mo);
        res.stats.nodes += relaxed.stats.nodes;
      }
    } else {
      res = mp::solve(m, mo);
    }
  } else {
    res = mp::solve(m, mo);
  }
  if (res.status == mp::SolveStatus::Infeasible && ss.kkt && detail::compact_lp_check(ss.kkt->lp, zt).first > ss.kkt->big_m * (1.0 - 1e-4)) {
    fail(ErrorCode::BigMTooSmall, "inner multipliers of scenario " + sc.o.label() + " exceed the complementarity M");
  }
  if (res.status == mp::SolveStatus::Infeasible) return infeasible;
  if (res.x.empty() || res.status == mp::SolveStatus::Unbounded || res.status == mp::SolveStatus::NumericalFailure) {
    fail(ErrorCode::SolverFailure, std::string("second stage stopped with status ") + mp::to_string(res.status));
  }
  detail::audit_second_stage(cs.topology, nc, ss, sc.o.o_b, res.x, "scenario " + sc.o.label());
  ScenarioOutcome out = detail::read_outcome(cs, nc, ss, res.x, sc, mode);
  out.nodes = res.stats.nodes;
  return out;
}

namespace detail {

inline double aggregate(ScenarioMode mode, const std::vector<ScenarioOutcome>& outs) {
  double v = 0.0;
  for (const auto& o : outs) v = mode == ScenarioMode::Stochastic ? v + o.probability * o.cost : std::max(v, o.cost);
  return v;
}

struct RecourseLp {
  double value = 0.0;
  std::vector<double> gradient;  ///< d value / d p_g
};

/// Scenario recourse with the corrective actions of `fixed` held constant,
/// as an LP in the continuous second-stage variables with p_g pinned by bounds.
inline std::optional<RecourseLp> recourse_lp(const ScotsCase& cs, const NcBundle& nc, const EdgeMask& z, const std::vector<double>& p,
                                             const ScenarioOutcome& fixed) {
  mp::Model m;
  std::vector<mp::VarId> pv;
  std::vector<mp::LinExpr> pe;
  for (int g = 0; g < cs.generator_count(); ++g) {
    pv.push_back(m.add_var(p[static_cast<std::size_t>(g)], p[static_cast<std::size_t>(g)]));
    pe.emplace_back(pv.back());
  }
  SecondStageBlock ss = build_second_stage(m, cs, nc, constant_statuses(z), pe, fixed.o, NcMode::FirstStageOnly, Embedding::Sequential);
  for (int e = 0; e < cs.branch_count(); ++e) {
    const double on = std::count(fixed.switched_on.begin(), fixed.switched_on.end(), e) ? 1.0 : 0.0;
    const double off = std::count(fixed.switched_off.begin(), fixed.switched_off.end(), e) ? 1.0 : 0.0;
    m.set_bounds(ss.z_plus[static_cast<std::size_t>(e)], on, on);
    m.set_bounds(ss.z_minus[static_cast<std::size_t>(e)], off, off);
    m.set_kind(ss.z_plus[static_cast<std::size_t>(e)], mp::VarKind::Continuous);
    m.set_kind(ss.z_minus[static_cast<std::size_t>(e)], mp::VarKind::Continuous);
  }
  m.set_objective(ss.cost);
  mp::SolveResult res = mp::solve_lp(m);
  if (res.status == mp::SolveStatus::Infeasible) return std::nullopt;
  if (res.status != mp::SolveStatus::Optimal) fail(ErrorCode::SolverFailure, std::string("recourse LP stopped with status ") + mp::to_string(res.status));
  RecourseLp out;
  out.value = res.objective;
  for (auto v : pv) out.gradient.push_back(res.reduced_costs[static_cast<std::size_t>(v.index)]);
  return out;
}

struct Candidate {
  EdgeMask z;
  int off = 0;
  bool first_stage_feasible = false;
  double first_stage_cost = 0.0;
  std::vector<double> p;
};

inline std::optional<std::pair<double, std::vector<double>>> first_stage_opf(const ScotsCase& cs, const NcBundle& nc, const EdgeMask& z) {
  mp::Model m;
  FirstStageBlock fs = first_stage_block(m, cs, nc, &z);
  m.set_objective(fs.cost);
  mp::SolveResult res = mp::solve_lp(m);
  if (res.status != mp::SolveStatus::Optimal) return std::nullopt;
  std::vector<double> p;
  for (auto v : fs.p) p.push_back(res.value(v));
  return std::make_pair(res.objective, p);
}

/// First-stage masks: every branch outside the L_i may be off, up to the
/// case's first-stage switch limit; disconnected masks are dropped.
inline std::vector<Candidate> enumerate_candidates(const ScotsCase& cs, const NcBundle& nc, std::size_t cap) {
  const int nb = cs.branch_count();
  std::vector<int> free;
  for (int e = 0; e < nb; ++e) {
    if (!nc.must_stay_on[static_cast<std::size_t>(e)]) free.push_back(e);
  }
  const int limit = cs.first_stage_switch_limit < 0 ? static_cast<int>(free.size()) : std::min<int>(cs.first_stage_switch_limit, static_cast<int>(free.size()));
  std::vector<Candidate> out;
  for (int k = 0; k <= limit; ++k) {
    for_each_combination(static_cast<int>(free.size()), k, [&](const std::vector<int>& pick) {
      if (out.size() >= cap) fail(ErrorCode::ExplosionGuard, "first-stage mask enumeration exceeds the cap; set first_stage_switch_limit");
      EdgeMask z = EdgeMask::all_on(nb);
      for (int i : pick) z.set(free[static_cast<std::size_t>(i)], false);
      if (!is_connected(cs.topology, z)) return;
      out.push_back({std::move(z), k, false, 0.0, {}});
    });
  }
  return out;
}

}  // namespace detail

/// Extensive form: one MILP with the first stage and a KKT-embedded block
/// per scenario (FullCriteria) or the plain corrective blocks (FirstStageOnly).
inline ScotsSolution solve_extensive(const ScotsCase& cs, const NcBundle& nc, const ScenarioSet& set, NcMode mode,
                                     const TwoStageOptions& options = {}) {
  mp::Model m;
  FirstStageBlock fs = first_stage_block(m, cs, nc);
  std::vector<mp::LinExpr> p;
  for (auto v : fs.p) p.emplace_back(v);
  std::vector<SecondStageBlock> blocks;
  for (std::size_t s = 0; s < set.scenarios.size(); ++s) {
    blocks.push_back(build_second_stage(m, cs, nc, fs.z, p, set.scenarios[s].o, mode, Embedding::Kkt, 0.0, "s" + std::to_string(s + 1)));
  }
  mp::LinExpr obj = fs.cost;
  if (set.mode == ScenarioMode::Stochastic) {
    for (std::size_t s = 0; s < blocks.size(); ++s) obj += set.scenarios[s].probability * blocks[s].cost;
  } else if (!blocks.empty()) {
    mp::VarId t = m.add_var(0.0, mp::kInf, mp::VarKind::Continuous, "worst");
    for (std::size_t s = 0; s < blocks.size(); ++s) m.add_ge(mp::LinExpr(t), blocks[s].cost, "worst" + std::to_string(s + 1));
    obj += mp::LinExpr(t);
  }
  m.set_objective(obj);
  mp::SolveResult res = mp::solve_milp(m, options.milp);
  if (res.status == mp::SolveStatus::Infeasible) fail(ErrorCode::Infeasible, "extensive form is infeasible");
  if (res.x.empty()) fail(ErrorCode::SolverFailure, std::string("extensive form stopped with status ") + mp::to_string(res.status));

  ScotsSolution sol;
  sol.mode = set.mode;
  sol.nc = mode;
  sol.method = "extensive";
  sol.proven_optimal = res.status == mp::SolveStatus::Optimal;
  sol.z = detail::mask_of(res.x, fs.z);
  for (auto v : fs.p) sol.p.push_back(res.value(v));
  sol.first_stage_cost = fs.cost.evaluate(res.x);
  sol.candidates = 1;
  sol.evaluated = 1;
  sol.milp_nodes = res.stats.nodes;
  detail::audit_region(cs.topology, sol.z, fs.region, res.x, "first stage");
  for (std::size_t s = 0; s < blocks.size(); ++s) {
    detail::audit_second_stage(cs.topology, nc, blocks[s], set.scenarios[s].o.o_b, res.x, "scenario " + set.scenarios[s].o.label());
    sol.scenarios.push_back(detail::read_outcome(cs, nc, blocks[s], res.x, set.scenarios[s], mode));
  }
  sol.recourse_cost = detail::aggregate(set.mode, sol.scenarios);
  sol.objective = sol.first_stage_cost + sol.recourse_cost;
  return sol;
}

namespace detail {

struct CandidateResult {
  bool feasible = false;
  double objective = mp::kInf;
  std::vector<double> p;
  std::vector<ScenarioOutcome> outcomes;
  long long nodes = 0;
};

/// Fixed first-stage mask: alternate corrective-action selection (scenario
/// MILPs at the current dispatch) with Benders on p_g for the chosen actions.
inline CandidateResult evaluate_candidate(const ScotsCase& cs, const NcBundle& nc, const ScenarioSet& set, NcMode mode,
                                          const Candidate& cand, const TwoStageOptions& options, int threads) {
  CandidateResult best;
  const int ns = static_cast<int>(set.scenarios.size());
  const int ng = cs.generator_count();
  auto recourse_milps = [&](const std::vector<double>& p) {
    std::vector<ScenarioOutcome> outs(static_cast<std::size_t>(ns));
    parallel_for(
        ns, [&](int s) { outs[static_cast<std::size_t>(s)] = solve_second_stage(cs, nc, cand.z, p, set.scenarios[static_cast<std::size_t>(s)], mode, Embedding::Sequential, options.milp); },
        threads);
    return outs;
  };
  auto total = [&](const std::vector<double>& p, const std::vector<ScenarioOutcome>& outs) {
    double f = 0.0;
    for (int g = 0; g < ng; ++g) f += cs.generators[static_cast<std::size_t>(g)].cost * p[static_cast<std::size_t>(g)];
    return f + aggregate(set.mode, outs);
  };
  auto all_feasible = [](const std::vector<ScenarioOutcome>& outs) {
    return std::all_of(outs.begin(), outs.end(), [](const ScenarioOutcome& o) { return o.feasible; });
  };

  std::vector<double> p = cand.p;
  std::vector<ScenarioOutcome> outs = recourse_milps(p);
  for (const auto& o : outs) best.nodes += o.nodes;
  if (!all_feasible(outs)) return best;
  best.feasible = true;
  best.p = p;
  best.objective = total(p, outs);
  best.outcomes = outs;
  if (ns == 0) return best;

  for (int outer = 0; outer < options.max_outer; ++outer) {
    // Benders over p_g with the actions of `outs` fixed.
    std::vector<std::pair<std::vector<double>, double>> cuts;  // (coefficients on p, constant), one per row
    std::vector<double> p_hat = p, p_best = p;
    double ub = mp::kInf;
    for (int it = 0; it < options.max_benders; ++it) {
      std::vector<std::optional<RecourseLp>> lp(static_cast<std::size_t>(ns));
      parallel_for(ns, [&](int s) { lp[static_cast<std::size_t>(s)] = recourse_lp(cs, nc, cand.z, p_hat, outs[static_cast<std::size_t>(s)]); }, threads);
      if (std::any_of(lp.begin(), lp.end(), [](const auto& r) { return !r.has_value(); })) break;
      double f = 0.0, rec = 0.0;
      for (int g = 0; g < ng; ++g) f += cs.generators[static_cast<std::size_t>(g)].cost * p_hat[static_cast<std::size_t>(g)];
      for (int s = 0; s < ns; ++s) {
        const double v = lp[static_cast<std::size_t>(s)]->value;
        rec = set.mode == ScenarioMode::Stochastic ? rec + set.scenarios[static_cast<std::size_t>(s)].probability * v : std::max(rec, v);
      }
      if (f + rec < ub) {
        ub = f + rec;
        p_best = p_hat;
      }
      auto cut_of = [&](int s, double weight, std::vector<double>& coef, double& constant) {
        const RecourseLp& r = *lp[static_cast<std::size_t>(s)];
        constant += weight * r.value;
        for (int g = 0; g < ng; ++g) {
          coef[static_cast<std::size_t>(g)] += weight * r.gradient[static_cast<std::size_t>(g)];
          constant -= weight * r.gradient[static_cast<std::size_t>(g)] * p_hat[static_cast<std::size_t>(g)];
        }
      };
      if (set.mode == ScenarioMode::Stochastic) {
        std::vector<double> coef(static_cast<std::size_t>(ng), 0.0);
        double constant = 0.0;
        for (int s = 0; s < ns; ++s) cut_of(s, set.scenarios[static_cast<std::size_t>(s)].probability, coef, constant);
        cuts.emplace_back(std::move(coef), constant);
      } else {
        std::vector<int> order(static_cast<std::size_t>(ns));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return lp[static_cast<std::size_t>(a)]->value > lp[static_cast<std::size_t>(b)]->value; });
        for (int k = 0; k < std::min(ns, 8); ++k) {
          std::vector<double> coef(static_cast<std::size_t>(ng), 0.0);
          double constant = 0.0;
          cut_of(order[static_cast<std::size_t>(k)], 1.0, coef, constant);
          cuts.emplace_back(std::move(coef), constant);
        }
      }
      mp::Model master;
      FirstStageBlock fs = first_stage_block(master, cs, nc, &cand.z);
      mp::VarId eta = master.add_var(0.0, mp::kInf, mp::VarKind::Continuous, "recourse");
      for (const auto& [coef, constant] : cuts) {
        mp::LinExpr rhs(constant);
        for (int g = 0; g < ng; ++g) rhs.add(fs.p[static_cast<std::size_t>(g)], coef[static_cast<std::size_t>(g)]);
        master.add_ge(mp::LinExpr(eta), rhs);
      }
      master.set_objective(fs.cost + mp::LinExpr(eta));
      mp::SolveResult mr = mp::solve_lp(master);
      if (mr.status != mp::SolveStatus::Optimal) fail(ErrorCode::SolverFailure, std::string("Benders master stopped with status ") + mp::to_string(mr.status));
      const double lb = mr.objective;
      for (int g = 0; g < ng; ++g) p_hat[static_cast<std::size_t>(g)] = mr.value(fs.p[static_cast<std::size_t>(g)]);
      if (ub - lb <= options.tolerance * (1.0 + std::abs(ub))) break;
    }
    bool moved = false;
    for (int g = 0; g < ng; ++g) {
      moved = moved || std::abs(p_best[static_cast<std::size_t>(g)] - p[static_cast<std::size_t>(g)]) > 1e-9 * (1.0 + std::abs(p[static_cast<std::size_t>(g)]));
    }
    if (!moved) break;  // same dispatch, same action choice
    std::vector<ScenarioOutcome> next = recourse_milps(p_best);
    for (const auto& o : next) best.nodes += o.nodes;
    if (!all_feasible(next)) break;
    const double value = total(p_best, next);
    const bool improved = value < best.objective - options.tolerance * (1.0 + std::abs(best.objective));
    if (value <= best.objective) {
      best.objective = value;
      best.p = p_best;
      best.outcomes = next;
    }
    if (!improved) break;
    p = p_best;
    outs = std::move(next);
  }
  return best;
}

}  // namespace detail

/// Decomposition: enumerate first-stage masks in order of their normal-state
/// cost, prune by that bound, and evaluate each survivor with
/// detail::evaluate_candidate.
inline ScotsSolution solve_decomposed(const ScotsCase& cs, const NcBundle& nc, const ScenarioSet& set, NcMode mode,
                                      const TwoStageOptions& options = {}) {
  const int threads = options.threads > 0 ? options.threads : thread_budget();
  std::vector<detail::Candidate> cands = detail::enumerate_candidates(cs, nc, options.candidate_cap);
  parallel_for(
      static_cast<int>(cands.size()),
      [&](int i) {
        auto& c = cands[static_cast<std::size_t>(i)];
        if (auto r = detail::first_stage_opf(cs, nc, c.z)) {
          c.first_stage_feasible = true;
          c.first_stage_cost = r->first;
          c.p = std::move(r->second);
        }
      },
      threads);
  std::stable_sort(cands.begin(), cands.end(), [](const detail::Candidate& a, const detail::Candidate& b) {
    if (a.first_stage_feasible != b.first_stage_feasible) return a.first_stage_feasible;
    return a.first_stage_cost < b.first_stage_cost;
  });

  ScotsSolution sol;
  sol.mode = set.mode;
  sol.nc = mode;
  sol.method = "decomposition";
  sol.candidates = static_cast<long long>(cands.size());
  double incumbent = mp::kInf;
  detail::CandidateResult best;
  const detail::Candidate* best_cand = nullptr;
  std::map<std::string, double> class_cache;
  for (const auto& c : cands) {
    if (!c.first_stage_feasible) break;
    if (c.first_stage_cost >= incumbent - options.tolerance * (1.0 + std::abs(incumbent))) break;
    if (mode == NcMode::FullCriteria) {
      // Criterion 1 depends on z alone: screen lambda-branch scenarios first.
      std::vector<EdgeMask> masks;
      for (const auto& s : set.scenarios) {
        if (s.o.branch_failures() <= nc.lambda) masks.push_back(c.z & EdgeMask(s.o.o_b));
      }
      std::vector<double> obj(masks.size());
      parallel_for(static_cast<int>(masks.size()), [&](int i) { obj[static_cast<std::size_t>(i)] = nc.classify(cs.topology, masks[static_cast<std::size_t>(i)]).objective; }, threads);
      if (std::any_of(obj.begin(), obj.end(), [&](double v) { return v > nc.thresholds.upper + kClassifyTol; })) continue;
    }
    ++sol.evaluated;
    detail::CandidateResult r = detail::evaluate_candidate(cs, nc, set, mode, c, options, threads);
    sol.milp_nodes += r.nodes;
    if (r.feasible && r.objective < incumbent) {
      incumbent = r.objective;
      best = std::move(r);
      best_cand = &c;
    }
  }
  if (!best_cand) fail(ErrorCode::Infeasible, "no first-stage mask admits a feasible recourse in every scenario");
  sol.z = best_cand->z;
  sol.p = best.p;
  for (int g = 0; g < cs.generator_count(); ++g) sol.first_stage_cost += cs.generators[static_cast<std::size_t>(g)].cost * sol.p[static_cast<std::size_t>(g)];
  sol.scenarios = std::move(best.outcomes);
  sol.recourse_cost = detail::aggregate(set.mode, sol.scenarios);
  sol.objective = sol.first_stage_cost + sol.recourse_cost;
  sol.proven_optimal = set.scenarios.empty();
  return sol;
}

/// Rough row count of the extensive form, used by Strategy::Auto.
inline long long extensive_row_estimate(const ScotsCase& cs, std::size_t scenarios, NcMode mode) {
  const long long nn = cs.bus_count(), nb = cs.branch_count();
  const long long per = 5 * nb + nn + 2 * cs.generator_count() + (mode == NcMode::FullCriteria ? 12 * (nn + nb) + 16 * nb + 8 * nn : 0);
  return 9 * nb + 3 * nn + static_cast<long long>(scenarios) * per;
}

/// The two-stage problem restricted to a finite scenario set.
inline ScotsSolution solve_two_stage(const ScotsCase& cs, const NcBundle& nc, const ScenarioSet& set, NcMode mode,
                                     const TwoStageOptions& options = {}) {
  validate_case(cs);
  Strategy s = options.strategy;
  if (s == Strategy::Auto) {
    s = extensive_row_estimate(cs, set.scenarios.size(), mode) <= options.extensive_row_cap ? Strategy::Extensive : Strategy::Decomposition;
  }
  return s == Strategy::Extensive ? solve_extensive(cs, nc, set, mode, options) : solve_decomposed(cs, nc, set, mode, options);
}

// ---- statistics and audits -----------------------------------------------------------

struct NcStatistics {
  double r_tilde = 0.0;
  double r_bar = 0.0;
  long long lambda_branch_count = 0;  ///< denominator of r_tilde
  long long contingency_count = 0;    ///< denominator of r_bar
  long long r_tilde_hits = 0;
  long long r_bar_hits = 0;
  bool r_tilde_applicable() const { return lambda_branch_count > 0; }
  bool r_bar_applicable() const { return contingency_count > 0; }
};

struct CriteriaAudit {
  long long checked = 0;
  long long criterion1_violations = 0;
  long long criterion2_violations = 0;
  bool passed() const { return criterion1_violations == 0 && criterion2_violations == 0; }
};

namespace detail {

struct SweepItem {
  ContingencyVector o;
  ConnectivityClass klass = ConnectivityClass::Connected;
  ScenarioOutcome outcome;
};

/// Classifies z_tilde and finds the recourse of every contingency with at
/// most eta failures, reusing the solution's own scenario outcomes.
inline std::vector<SweepItem> sweep(const ScotsCase& cs, const NcBundle& nc, const ScotsSolution& sol, int eta, int threads) {
  std::vector<SweepItem> items;
  for (auto& o : enumerate_contingencies(cs.topology, cs.generator_count(), eta)) items.push_back({std::move(o), {}, {}});
  parallel_for(
      static_cast<int>(items.size()),
      [&](int i) {
        SweepItem& it = items[static_cast<std::size_t>(i)];
        it.klass = nc.classify(cs.topology, sol.z & EdgeMask(it.o.o_b)).klass;
        auto found = std::find_if(sol.scenarios.begin(), sol.scenarios.end(), [&](const ScenarioOutcome& s) { return s.o == it.o; });
        if (found != sol.scenarios.end()) {
          it.outcome = *found;
        } else {
          NcMode mode = sol.nc;
          if (mode == NcMode::FullCriteria && !lambda_branch_indicator(it.o.o_b, nc.lambda, cs.eta)) mode = NcMode::FirstStageOnly;
          it.outcome = solve_second_stage(cs, nc, sol.z, sol.p, Scenario{it.o, 0.0}, mode, Embedding::Sequential);
        }
      },
      threads);
  return items;
}

}  // namespace detail

/// r_tilde: share of lambda-branch contingencies whose z_tilde is disconnected
/// but not W(lambda)-disconnected. r_bar: share of all contingencies where
/// z_tilde is connected or W(lambda)-disconnected, corrective switching
/// happened, and z_bar falls short of what Criterion 2 requires.
inline NcStatistics evaluate_statistics(const ScotsCase& cs, const NcBundle& nc, const ScotsSolution& sol, int eta, int threads = 0) {
  NcStatistics st;
  for (const auto& it : detail::sweep(cs, nc, sol, eta, threads > 0 ? threads : thread_budget())) {
    ++st.contingency_count;
    if (it.o.branch_failures() <= nc.lambda) {
      ++st.lambda_branch_count;
      if (it.klass == ConnectivityClass::OtherDisconnected) ++st.r_tilde_hits;
    }
    if (it.klass == ConnectivityClass::OtherDisconnected || !it.outcome.feasible || it.outcome.actions() == 0) continue;
    const bool worse = it.klass == ConnectivityClass::Connected ? !is_connected(cs.topology, it.outcome.z_bar)
                                                               : !is_connected(cs.topology, detail::restored_mask(it.outcome.z_bar, it.o.o_b));
    if (worse) ++st.r_bar_hits;
  }
  if (st.lambda_branch_count > 0) st.r_tilde = static_cast<double>(st.r_tilde_hits) / static_cast<double>(st.lambda_branch_count);
  if (st.contingency_count > 0) st.r_bar = static_cast<double>(st.r_bar_hits) / static_cast<double>(st.contingency_count);
  return st;
}

/// Exhaustive Criterion 1/2 check of a solution over every contingency with
/// at most eta failures.
inline CriteriaAudit audit_criteria(const ScotsCase& cs, const NcBundle& nc, const ScotsSolution& sol, int eta, int threads = 0) {
  CriteriaAudit a;
  for (const auto& it : detail::sweep(cs, nc, sol, eta, threads > 0 ? threads : thread_budget())) {
    ++a.checked;
    if (it.o.branch_failures() <= nc.lambda && it.klass == ConnectivityClass::OtherDisconnected) ++a.criterion1_violations;
    if (!it.outcome.feasible) continue;
    if (it.klass == ConnectivityClass::Connected && !is_connected(cs.topology, it.outcome.z_bar)) ++a.criterion2_violations;
    if (it.klass == ConnectivityClass::WDisconnected && !is_connected(cs.topology, detail::restored_mask(it.outcome.z_bar, it.o.o_b))) {
      ++a.criterion2_violations;
    }
  }
  return a;
}

}  // namespace ncswitch
