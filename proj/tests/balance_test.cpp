#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "ncswitch/balance.hpp"

using namespace ncswitch;

namespace {

Topology g4() { return build_topology(4, {{1, 2}, {2, 3}, {3, 4}, {1, 3}}); }
Topology triangle() { return build_topology(3, {{1, 2}, {2, 3}, {1, 3}}); }

struct Fixture {
  Topology t;
  SubgraphCatalog cat;
  WCatalog w;
  WMatrices m;
};

Fixture setup(Topology t, int lambda) {
  Fixture s{t, enumerate_connected_induced_subgraphs(t), enumerate_w_lambda(t, lambda), {}};
  s.m = build_w_matrices(s.w, s.cat);
  return s;
}

Topology random_connected(std::mt19937& rng, int n, int extra) {
  std::vector<std::pair<int, int>> br;
  for (int v = 2; v <= n; ++v) br.emplace_back(std::uniform_int_distribution<int>(1, v - 1)(rng), v);
  for (int k = 0; k < extra; ++k) {
    int a = std::uniform_int_distribution<int>(1, n)(rng), b = std::uniform_int_distribution<int>(1, n)(rng);
    if (a != b) br.emplace_back(a, b);
  }
  return build_topology(n, br);
}

}  // namespace

TEST(TrivialBalance, FourBus) {
  Fixture s = setup(g4(), 1);
  BalancedVector bv = trivial_uniquely_balanced(s.t, s.cat);
  EXPECT_EQ(bv.c, (std::vector<double>{3, -1, -1, -1}));
  EXPECT_TRUE(bv.uniquely_balanced);
  for (std::size_t i = 1; i < bv.b.size(); ++i) EXPECT_NE(bv.b[i], 0.0);
}

TEST(TrivialBalance, FourBusIsNotWBalanced) {
  Fixture s = setup(g4(), 1);
  BalancedVector bv = trivial_uniquely_balanced(s.t, s.cat, s.m, s.w.n_u);
  EXPECT_TRUE(bv.uniquely_balanced);
  EXPECT_FALSE(bv.w_uniquely_balanced);
  // J_w sums in row order {1},{2},{3},{1,2},{1,3},{2,3},{3,4},{1,3,4},{2,3,4}.
  EXPECT_EQ(subset_sums(bv.c, s.m.j_w), (std::vector<double>{3, -1, -1, 2, 2, -2, -2, 1, -3}));
  for (double r : {0.5, 1.0, 2.0}) EXPECT_FALSE(verify_w_balance(bv.c, r, s.cat, s.m, s.w.n_u).w_uniquely_balanced);
}

TEST(TrivialBalance, TwoBus) {
  Topology t = build_topology(2, {{1, 2}});
  EXPECT_EQ(trivial_uniquely_balanced(t, enumerate_connected_induced_subgraphs(t)).c, (std::vector<double>{1, -1}));
}

TEST(VerifyBalance, FourBusCertificate) {
  Fixture s = setup(g4(), 1);
  BalanceFlags f = verify_w_balance({4, -8, 3, 1}, 1.0, s.cat, s.m, s.w.n_u);
  EXPECT_TRUE(f.uniquely_balanced);
  EXPECT_TRUE(f.w_uniquely_balanced);
  EXPECT_EQ(f.e_w_norm, 1.0);
  EXPECT_EQ(f.j_w_min_abs, 3.0);
  EXPECT_EQ(f.b_second_min_abs, 1.0);
}

TEST(VerifyBalance, NonzeroTotalFails) {
  Fixture s = setup(g4(), 1);
  EXPECT_FALSE(verify_w_balance({4, -8, 3, 2}, 10.0, s.cat, s.m, s.w.n_u).uniquely_balanced);
}

TEST(VerifyBalance, DimensionMismatch) {
  Fixture s = setup(g4(), 1);
  try {
    verify_w_balance({1, -1}, 1.0, s.cat, s.m, s.w.n_u);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(Synthesize, FourBusLambdaOne) {
  Fixture s = setup(g4(), 1);
  BalancedVector bv = synthesize_w_balanced(s.t, s.cat, s.m, s.w.n_u);
  EXPECT_TRUE(bv.w_uniquely_balanced);
  EXPECT_TRUE(verify_w_balance(bv.c, bv.r, s.cat, s.m, s.w.n_u).w_uniquely_balanced);
  EXPECT_DOUBLE_EQ(std::accumulate(bv.c.begin(), bv.c.end(), 0.0), 0.0);
}

TEST(Synthesize, TriangleReducesToUniqueBalance) {
  Fixture s = setup(triangle(), 1);
  BalancedVector bv = synthesize_w_balanced(s.t, s.cat, s.m, s.w.n_u);
  EXPECT_TRUE(bv.uniquely_balanced);
  EXPECT_TRUE(bv.w_uniquely_balanced);
  EXPECT_EQ(bv.r, 0.0);
  EXPECT_TRUE(verify_w_balance({2, -1, -1}, 0.0, s.cat, s.m, 0).w_uniquely_balanced);
}

TEST(Synthesize, SubsetSumsClearEpsilon) {
  Fixture s = setup(build_topology(5, {{1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 1}, {2, 4}}), 1);
  BalancedVector bv = synthesize_w_balanced(s.t, s.cat, s.m, s.w.n_u);
  for (std::size_t i = 1; i < bv.b.size(); ++i) EXPECT_GE(std::abs(bv.b[i]), 1.0 - 1e-9);
}

TEST(Synthesize, RowGenerationMatchesFullModel) {
  // Start from three catalog rows so several rounds are needed.
  Fixture s = setup(build_topology(6, {{1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 1}, {1, 4}}), 1);
  SynthesisOptions opt;
  opt.initial_rows = 3;
  opt.rows_per_round = 4;
  opt.seed_moves = 0;
  SynthesisReport rep;
  BalancedVector bv = synthesize_w_balanced(s.t, s.cat, s.m, s.w.n_u, opt, &rep);
  EXPECT_TRUE(bv.w_uniquely_balanced);
  EXPECT_GT(rep.rounds, 1);
}

TEST(Synthesize, SeedClearsMarginsOnFiveBusGraph) {
  Fixture s = setup(build_topology(5, {{1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 1}, {2, 4}}), 1);
  std::vector<double> c = detail::sign_pattern_seed(5, s.cat, s.m, s.w.n_u, 1.0, 50.0, 20000);
  ASSERT_EQ(c.size(), 5u);
  EXPECT_TRUE(verify_w_balance(c, detail::tight_radius(c, s.m), s.cat, s.m, s.w.n_u).w_uniquely_balanced);
}

TEST(Synthesize, SameResultWithoutSeed) {
  Fixture s = setup(build_topology(6, {{1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 1}, {1, 4}}), 1);
  SynthesisOptions opt;
  opt.seed_moves = 0;
  BalancedVector bv = synthesize_w_balanced(s.t, s.cat, s.m, s.w.n_u, opt);
  EXPECT_TRUE(verify_w_balance(bv.c, bv.r, s.cat, s.m, s.w.n_u).w_uniquely_balanced);
}

// Round trip plus the sweep property: with a uniquely balanced c every
// component of any disconnected mask has a nonzero c-sum.
TEST(Synthesize, RoundTripOnRandomGraphs) {
  std::mt19937 rng(41);
  for (int trial = 0; trial < 12; ++trial) {
    Fixture s = setup(random_connected(rng, 3 + trial % 5, 1 + trial % 3), 1 + trial % 2);
    BalancedVector bv;
    try {
      bv = synthesize_w_balanced(s.t, s.cat, s.m, s.w.n_u);
    } catch (const Error& e) {
      ASSERT_EQ(e.code(), ErrorCode::Infeasible) << "trial " << trial;
      continue;
    }
    ASSERT_TRUE(verify_w_balance(bv.c, bv.r, s.cat, s.m, s.w.n_u).w_uniquely_balanced) << "trial " << trial;
    const int nb = s.t.branch_count();
    for (std::uint64_t w = 0; w < (std::uint64_t{1} << std::min(nb, 10)); ++w) {
      ComponentPartition p = connected_components(s.t, EdgeMask::from_word(w, nb));
      if (p.count() < 2) continue;
      for (BusSet comp : p.components) EXPECT_NE(comp.sum(bv.c), 0.0);
    }
  }
}

// Four-bus W(2): the two-bus rows {1,3},{2,3} and bus 3 must clear 2r while the
// stranded sets {1},{2},{4},{3,4} stay within r. c_1 + c_3 = -(c_2 + c_4) so
// |c_2 + c_4| >= 2r, yet |c_2|, |c_4| <= r forces equality; the same for
// {2,3} gives |c_1 + c_4| >= 2r. Then c_1 = c_2 = c_4 = +-r with one sign, so
// c_3 = -3r and {3,4} sums to -+2r, outside the r ball unless r = 0.
TEST(Synthesize, FourBusLambdaTwoIsInfeasible) {
  Fixture s = setup(g4(), 2);
  try {
    synthesize_w_balanced(s.t, s.cat, s.m, s.w.n_u);
    FAIL() << "expected Infeasible";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Infeasible);
  }
}
