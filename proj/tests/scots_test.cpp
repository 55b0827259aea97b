#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "ncswitch/scots/solve.hpp"

using namespace ncswitch;

namespace {

ScotsCase g4_case(int eta = 1) {
  ScotsCase cs;
  cs.name = "g4";
  cs.topology = build_topology(4, {{1, 2}, {2, 3}, {3, 4}, {1, 3}});
  cs.load = {0.0, 100.0, 0.0, 25.0};
  cs.generators = {{0, 0.0, 200.0, 10.0, 200.0, 200.0}, {1, 0.0, 200.0, 50.0, 200.0, 200.0}};
  cs.branches = {{10.0, 150.0}, {10.0, 30.0}, {10.0, 50.0}, {10.0, 20.0}};
  cs.eta = eta;
  cs.lambda = 1;
  return cs;
}

NcBundle hand_bundle(const Topology& t) {
  BalancedVector b;
  b.c = {4.0, -8.0, 3.0, 1.0};
  b.r = 1.0;
  return make_nc_bundle(t, 1, b);
}

bool lp_feasible(const mp::Model& m) {
  mp::Model copy = m;
  copy.set_objective(mp::LinExpr(0.0));
  return mp::solve(copy).status == mp::SolveStatus::Optimal;
}

/// The scenarios of `set` with the given labels, probabilities renormalized.
ScenarioSet subset(const ScenarioSet& set, const std::vector<std::string>& labels) {
  ScenarioSet out;
  out.mode = set.mode;
  double total = 0.0;
  for (const auto& sc : set.scenarios) {
    if (std::find(labels.begin(), labels.end(), sc.o.label()) == labels.end()) continue;
    out.scenarios.push_back(sc);
    total += sc.probability;
  }
  for (auto& sc : out.scenarios) sc.probability /= total;
  return out;
}

ContingencyVector branch_outage(int ng, const EdgeMask& o_b) { return {std::vector<std::uint8_t>(static_cast<std::size_t>(ng), 1), o_b.bits()}; }

}  // namespace

TEST(Indicator, TruthTable) {
  const int nb = 6, lambda = 1, eta = 3;
  for (int f = 0; f <= nb; ++f) {
    std::vector<std::uint8_t> o_b(static_cast<std::size_t>(nb), 1);
    for (int e = 0; e < f; ++e) o_b[static_cast<std::size_t>(e)] = 0;
    const auto expected = lambda_branch_indicator(o_b, lambda, eta);
    EXPECT_EQ(expected.has_value(), f <= eta);
    if (expected) {
      EXPECT_EQ(*expected, f <= lambda ? 1 : 0);
    }
    for (int phi = 0; phi <= 1; ++phi) {
      mp::Model m;
      mp::VarId v = lambda_branch_indicator_block(m, o_b, lambda, eta);
      m.set_bounds(v, phi, phi);
      EXPECT_EQ(lp_feasible(m), expected && *expected == phi) << "f=" << f << " phi=" << phi;
    }
  }
}

TEST(Criterion1, RowBindsOnlyForLambdaBranch) {
  for (double obj : {0.0, 2.0, 2.5, 7.0}) {
    for (int phi = 0; phi <= 1; ++phi) {
      mp::Model m;
      criterion1_block(m, mp::LinExpr(obj), mp::LinExpr(static_cast<double>(phi)), 2, 1.0, 100.0);
      EXPECT_EQ(lp_feasible(m), phi == 0 || obj <= 2.0) << obj << " " << phi;
    }
  }
}

// Criterion 2 on G4 against graph connectivity, for every post-contingency
// mask and every post-control mask reachable from it.
TEST(Criterion2, MatchesConnectivityOracle) {
  const Topology t = build_topology(4, {{1, 2}, {2, 3}, {3, 4}, {1, 3}});
  const NcBundle nc = hand_bundle(t);
  const WCatalog w = enumerate_w_lambda(t, 1);
  for (std::uint64_t ow = 0; ow < 16; ++ow) {
    const EdgeMask o_b = EdgeMask::from_word(ow, 4);
    const ClassificationResult cls = nc.classify(t, o_b);
    const bool connected = is_connected(t, o_b);
    const bool wdisc = !connected && is_w_disconnected(t, o_b, w);
    EXPECT_EQ(cls.klass, connected ? ConnectivityClass::Connected : wdisc ? ConnectivityClass::WDisconnected : ConnectivityClass::OtherDisconnected);
    for (std::uint64_t zw = 0; zw < 16; ++zw) {
      const EdgeMask z_bar = EdgeMask::from_word(zw, 4);
      if ((z_bar & o_b) != z_bar) continue;
      mp::Model m;
      criterion2_block(m, t, mp::LinExpr(std::round(cls.objective * 1e6) / 1e6), nc, constant_statuses(z_bar), o_b.bits());
      bool expected = true;
      if (connected) expected = is_connected(t, z_bar);
      if (wdisc) expected = is_connected(t, detail::restored_mask(z_bar, o_b.bits()));
      EXPECT_EQ(lp_feasible(m), expected) << "o_b=" << o_b.str() << " z_bar=" << z_bar.str();
    }
  }
}

TEST(Kkt, EmbeddedObjectiveEqualsClassification) {
  const Topology t = build_topology(4, {{1, 2}, {2, 3}, {3, 4}, {1, 3}});
  for (const NcBundle& nc : {hand_bundle(t), make_nc_bundle(t, 1)}) {
    for (std::uint64_t zw = 0; zw < 16; ++zw) {
      const EdgeMask zt = EdgeMask::from_word(zw, 4);
      const double expected = oracle_objective(t, zt, nc.bal.c);
      // Constant statuses, then binaries fixed by bounds (the McCormick path).
      for (int variant = 0; variant < 2; ++variant) {
        mp::Model m;
        std::vector<mp::LinExpr> z = constant_statuses(zt);
        if (variant == 1) {
          for (int e = 0; e < 4; ++e) {
            mp::VarId v = m.add_binary("z" + std::to_string(e));
            m.set_bounds(v, zt.on(e), zt.on(e));
            z[static_cast<std::size_t>(e)] = mp::LinExpr(v);
          }
        }
        KktBlock k = kkt_block(m, t, z, nc);
        m.set_objective(mp::LinExpr(0.0));
        mp::SolveResult res = mp::solve(m);
        ASSERT_EQ(res.status, mp::SolveStatus::Optimal) << zt.str();
        EXPECT_NEAR(k.objective.evaluate(res.x), expected, 1e-6) << zt.str() << " variant " << variant;
        EXPECT_NEAR(nc.classify(t, zt).objective, expected, 1e-6);
      }
    }
  }
}

TEST(Kkt, SmallComplementarityMIsReported) {
  const ScotsCase cs = g4_case();
  NcBundle nc = hand_bundle(cs.topology);
  nc.kkt_m = 0.1;
  const auto fs = detail::first_stage_opf(cs, nc, EdgeMask::all_on(4));
  ASSERT_TRUE(fs.has_value());
  const Scenario sc{branch_outage(2, EdgeMask::parse("1111")), 1.0};
  try {
    solve_second_stage(cs, nc, EdgeMask::all_on(4), fs->second, sc, NcMode::FullCriteria, Embedding::Kkt);
    FAIL() << "expected BigMTooSmall";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BigMTooSmall);
  }
}

TEST(SecondStage, KktAndSequentialAgree) {
  const ScotsCase cs = g4_case(2);
  const NcBundle nc = hand_bundle(cs.topology);
  const ScenarioSet set = make_scenario_set(cs, ScenarioMode::Stochastic, 2);
  for (const char* zs : {"1111", "1110", "0111"}) {
    const EdgeMask z = EdgeMask::parse(zs);
    const auto fs = detail::first_stage_opf(cs, nc, z);
    ASSERT_TRUE(fs.has_value());
    for (const auto& sc : set.scenarios) {
      const ScenarioOutcome a = solve_second_stage(cs, nc, z, fs->second, sc, NcMode::FullCriteria, Embedding::Kkt);
      const ScenarioOutcome b = solve_second_stage(cs, nc, z, fs->second, sc, NcMode::FullCriteria, Embedding::Sequential);
      ASSERT_EQ(a.feasible, b.feasible) << zs << " " << sc.o.label();
      if (a.feasible) {
        EXPECT_NEAR(a.cost, b.cost, 1e-6 * (1.0 + b.cost)) << zs << " " << sc.o.label();
        EXPECT_EQ(a.klass, b.klass);
      }
    }
  }
}

TEST(SecondStage, FullNeverCheaperThanFirstStageOnly) {
  const ScotsCase cs = g4_case(2);
  const NcBundle nc = make_nc_bundle(cs.topology, 1);
  const ScenarioSet set = make_scenario_set(cs, ScenarioMode::Stochastic, 2);
  const auto fs = detail::first_stage_opf(cs, nc, EdgeMask::all_on(4));
  ASSERT_TRUE(fs.has_value());
  for (const auto& sc : set.scenarios) {
    const ScenarioOutcome full = solve_second_stage(cs, nc, EdgeMask::all_on(4), fs->second, sc, NcMode::FullCriteria, Embedding::Sequential);
    const ScenarioOutcome base = solve_second_stage(cs, nc, EdgeMask::all_on(4), fs->second, sc, NcMode::FirstStageOnly, Embedding::Sequential);
    ASSERT_TRUE(base.feasible);
    if (full.feasible) {
      EXPECT_GE(full.cost, base.cost - 1e-6) << sc.o.label();
    }
  }
}

// Every island of the post-control network balances its own load.
TEST(SecondStage, IslandPowerBalance) {
  const ScotsCase cs = g4_case(2);
  const NcBundle nc = make_nc_bundle(cs.topology, 1);
  const ScenarioSet set = make_scenario_set(cs, ScenarioMode::Stochastic, 2);
  const EdgeMask z = EdgeMask::parse("1110");
  const auto fs = detail::first_stage_opf(cs, nc, z);
  ASSERT_TRUE(fs.has_value());
  for (NcMode mode : {NcMode::FirstStageOnly, NcMode::FullCriteria}) {
    for (const auto& sc : set.scenarios) {
      const ScenarioOutcome out = solve_second_stage(cs, nc, z, fs->second, sc, mode, Embedding::Sequential);
      if (!out.feasible) continue;
      const ComponentPartition parts = connected_components(cs.topology, out.z_bar);
      std::vector<double> net(static_cast<std::size_t>(parts.count()), 0.0);
      for (int v = 0; v < cs.bus_count(); ++v) {
        net[static_cast<std::size_t>(parts.component_of[static_cast<std::size_t>(v)])] +=
            out.shed_by_bus[static_cast<std::size_t>(v)] - cs.load[static_cast<std::size_t>(v)];
      }
      for (int g = 0; g < cs.generator_count(); ++g) {
        const double p = out.output[static_cast<std::size_t>(g)];
        if (!sc.o.o_g[static_cast<std::size_t>(g)]) {
          EXPECT_NEAR(p, 0.0, 1e-6);
        }
        net[static_cast<std::size_t>(parts.component_of[static_cast<std::size_t>(cs.generators[static_cast<std::size_t>(g)].bus)])] += p;
      }
      for (double v : net) EXPECT_NEAR(v, 0.0, 1e-6) << sc.o.label();
    }
  }
}

TEST(TwoStage, G4FullKeepsEveryBranch) {
  const ScotsCase cs = g4_case();
  const NcBundle nc = make_nc_bundle(cs.topology, 1);
  for (ScenarioMode mode : {ScenarioMode::Stochastic, ScenarioMode::Robust}) {
    const ScenarioSet set = make_scenario_set(cs, mode, 1);
    const ScotsSolution full = solve_two_stage(cs, nc, set, NcMode::FullCriteria);
    EXPECT_EQ(full.z.str(), "1111");
    const CriteriaAudit audit = audit_criteria(cs, nc, full, 1);
    EXPECT_TRUE(audit.passed());
    const NcStatistics st = evaluate_statistics(cs, nc, full, 1);
    EXPECT_EQ(st.r_tilde, 0.0);
    EXPECT_EQ(st.r_bar, 0.0);

    const ScotsSolution base = solve_two_stage(cs, nc, set, NcMode::FirstStageOnly);
    EXPECT_EQ(base.z.str(), "1110");
    EXPECT_LE(base.objective, full.objective + 1e-6);
    // z = 1110 strands bus 1 under b1 and splits {1,2}/{3,4} under b2; b3
    // isolates bus 4 behind the W pair. Two of seven lambda-branch cases.
    const NcStatistics bst = evaluate_statistics(cs, nc, base, 1);
    EXPECT_EQ(bst.r_tilde_hits, 2);
    EXPECT_NEAR(bst.r_tilde, 2.0 / 7.0, 1e-12);
  }
}

// Among normal-state connected masks only z = 1111 passes Criterion 1.
TEST(TwoStage, G4CriterionOneByEnumeration) {
  const ScotsCase cs = g4_case();
  const NcBundle nc = make_nc_bundle(cs.topology, 1);
  const WCatalog w = enumerate_w_lambda(cs.topology, 1);
  const auto contingencies = filter_lambda_branch(enumerate_contingencies(cs.topology, 2, 1), 1);
  int passing = 0;
  std::string which;
  for (std::uint64_t zw = 0; zw < 16; ++zw) {
    const EdgeMask z = EdgeMask::from_word(zw, 4);
    if (!is_connected(cs.topology, z)) continue;
    bool ok = true;
    for (const auto& o : contingencies) {
      const EdgeMask zt = z & o.branch_mask();
      ok = ok && (is_connected(cs.topology, zt) || is_w_disconnected(cs.topology, zt, w));
      const ConnectivityClass k = nc.classify(cs.topology, zt).klass;
      EXPECT_EQ(k == ConnectivityClass::OtherDisconnected, !(is_connected(cs.topology, zt) || is_w_disconnected(cs.topology, zt, w)));
    }
    if (ok) {
      ++passing;
      which = z.str();
    }
  }
  EXPECT_EQ(passing, 1);
  EXPECT_EQ(which, "1111");
}

TEST(TwoStage, ExtensiveMatchesDecomposition) {
  const ScotsCase cs = g4_case();
  const NcBundle nc = make_nc_bundle(cs.topology, 1);
  for (ScenarioMode smode : {ScenarioMode::Stochastic, ScenarioMode::Robust}) {
    for (NcMode mode : {NcMode::FirstStageOnly, NcMode::FullCriteria}) {
      // The extensive form grows quickly; three scenarios keep it small.
      const ScenarioSet set = subset(make_scenario_set(cs, smode, 1), {"none", "b1", "b3"});
      TwoStageOptions ext, dec;
      ext.strategy = Strategy::Extensive;
      dec.strategy = Strategy::Decomposition;
      const ScotsSolution a = solve_two_stage(cs, nc, set, mode, ext);
      const ScotsSolution b = solve_two_stage(cs, nc, set, mode, dec);
      EXPECT_TRUE(a.proven_optimal);
      EXPECT_NEAR(a.objective, b.objective, 1e-6 * (1.0 + std::abs(a.objective))) << to_string(smode) << " " << to_string(mode);
      EXPECT_EQ(a.z, b.z);
    }
  }
}

TEST(TwoStage, EmptyScenarioSetIsTheFirstStage) {
  const ScotsCase cs = g4_case();
  const NcBundle nc = make_nc_bundle(cs.topology, 1);
  ScenarioSet set;
  const ScotsSolution sol = solve_two_stage(cs, nc, set, NcMode::FullCriteria);
  EXPECT_TRUE(sol.scenarios.empty());
  EXPECT_EQ(sol.recourse_cost, 0.0);
  double best = mp::kInf;
  for (std::uint64_t zw = 0; zw < 16; ++zw) {
    if (auto r = detail::first_stage_opf(cs, nc, EdgeMask::from_word(zw, 4))) best = std::min(best, r->first);
  }
  EXPECT_NEAR(sol.objective, best, 1e-6 * (1.0 + best));
}

TEST(Scenarios, ProbabilitiesAndCounts) {
  const ScotsCase cs = g4_case(2);
  const ScenarioSet st = make_scenario_set(cs, ScenarioMode::Stochastic, 2);
  // 6 elements: 1 + 6 + 15 cases with at most two failures.
  ASSERT_EQ(st.scenarios.size(), 22U);
  double total = 0.0;
  for (const auto& s : st.scenarios) total += s.probability;
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_GT(st.scenarios.front().probability, st.scenarios.back().probability);
}
