#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "ncswitch/mp/solve.hpp"

using namespace ncswitch::mp;

TEST(SolveLp, SingleBoundRow) {
  Model m;
  VarId x = m.add_var(-kInf, kInf);
  RowId r = m.add_ge(x, 1.0);
  m.set_objective(x);
  SolveResult res = solve_lp(m);
  ASSERT_EQ(res.status, SolveStatus::Optimal);
  EXPECT_NEAR(res.objective, 1.0, 1e-9);
  EXPECT_NEAR(res.value(x), 1.0, 1e-9);
  EXPECT_NEAR(res.dual(r), 1.0, 1e-9);
}

TEST(SolveLp, SplitDeviationReachesComponentSum) {
  Model m;
  VarId dp = m.add_var(0.0, kInf);
  VarId dm = m.add_var(0.0, kInf);
  RowId r = m.add_eq(LinExpr(dp) - LinExpr(dm), 5.0);
  m.set_objective(LinExpr(dp) + LinExpr(dm));
  SolveResult res = solve_lp(m);
  ASSERT_EQ(res.status, SolveStatus::Optimal);
  EXPECT_NEAR(res.objective, 5.0, 1e-9);
  EXPECT_NEAR(res.dual(r), 1.0, 1e-9);
}

TEST(SolveLp, ContradictoryRowsAreInfeasible) {
  Model m;
  VarId x = m.add_var(-kInf, kInf);
  m.add_le(x, -1.0);
  m.add_ge(x, 0.0);
  m.set_objective(LinExpr(0.0));
  EXPECT_EQ(solve_lp(m).status, SolveStatus::Infeasible);
}

TEST(SolveLp, UnboundedRay) {
  Model m;
  VarId x = m.add_var(0.0, kInf);
  VarId y = m.add_var(0.0, kInf);
  m.add_le(LinExpr(x) - LinExpr(y), 1.0);
  m.set_objective(-1.0 * LinExpr(y));
  EXPECT_EQ(solve_lp(m).status, SolveStatus::Unbounded);
}

TEST(SolveLp, MaximizeReportsModelSense) {
  Model m;
  VarId x = m.add_var(0.0, kInf);
  VarId y = m.add_var(0.0, kInf);
  RowId r1 = m.add_le(LinExpr(x) + LinExpr(y), 4.0);
  m.add_le(LinExpr(x) + 3.0 * LinExpr(y), 6.0);
  m.add_le(x, 3.5);
  m.set_objective(3.0 * LinExpr(x) + 2.0 * LinExpr(y), ObjSense::Maximize);
  SolveResult res = solve_lp(m);
  ASSERT_EQ(res.status, SolveStatus::Optimal);
  EXPECT_NEAR(res.objective, 11.5, 1e-9);  // x = 3.5, y = 0.5
  EXPECT_NEAR(res.dual(r1), 2.0, 1e-9);
  EXPECT_NEAR(multiplier(m, res, r1), 2.0, 1e-9);
}

TEST(SolveLp, DegenerateVertexTerminates) {
  // Several constraints meet at the optimum.
  Model m;
  VarId x = m.add_var(0.0, kInf);
  VarId y = m.add_var(0.0, kInf);
  m.add_le(LinExpr(x) + LinExpr(y), 2.0);
  m.add_le(LinExpr(x) - LinExpr(y), 0.0);
  m.add_le(2.0 * LinExpr(x) + LinExpr(y), 3.0);
  m.add_le(LinExpr(x) + 2.0 * LinExpr(y), 3.0);
  m.set_objective(-1.0 * LinExpr(x) - LinExpr(y));
  SolveResult res = solve_lp(m);
  ASSERT_EQ(res.status, SolveStatus::Optimal);
  EXPECT_NEAR(res.objective, -2.0, 1e-9);
}

// Random feasible bounded LPs: the certificate must close and the primal/dual
// objectives must agree.
TEST(SolveLp, StrongDualityOnRandomInstances) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> coef(-5.0, 5.0);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 3 + trial % 6, rows = 2 + trial % 7;
    Model m;
    std::vector<VarId> v;
    std::vector<double> x0;
    for (int j = 0; j < n; ++j) {
      double lb = (trial % 3 == 0) ? -kInf : -3.0;
      v.push_back(m.add_var(lb, 4.0));
      x0.push_back(std::uniform_real_distribution<double>(-2.0, 3.0)(rng));
    }
    for (int i = 0; i < rows; ++i) {
      LinExpr e;
      double act = 0.0;
      for (int j = 0; j < n; ++j) {
        double a = std::round(coef(rng));
        e.add(v[static_cast<std::size_t>(j)], a);
        act += a * x0[static_cast<std::size_t>(j)];
      }
      int kind = static_cast<int>(rng() % 3);
      if (kind == 0) m.add_row(e, RowSense::Less, act + 1.0);
      else if (kind == 1) m.add_row(e, RowSense::Greater, act - 1.0);
      else m.add_row(e, RowSense::Equal, act);
    }
    LinExpr obj;
    for (int j = 0; j < n; ++j) obj.add(v[static_cast<std::size_t>(j)], coef(rng));
    m.set_objective(obj);
    SolveResult res = solve_lp(m);
    if (res.status == SolveStatus::Unbounded) continue;
    ASSERT_EQ(res.status, SolveStatus::Optimal) << "trial " << trial;
    Certificate cert = lp_certificate(m, res.x, res.row_duals);
    EXPECT_LE(cert.primal_residual, 1e-7);
    EXPECT_LE(cert.dual_residual, 1e-7);
    EXPECT_NEAR(cert.dual_objective, res.objective, 1e-6 * (1.0 + std::abs(res.objective)));
  }
}

TEST(SolveLp, RefactorIntervalDoesNotChangeOptimum) {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> coef(-4, 4);
  Model m;
  std::vector<VarId> v;
  for (int j = 0; j < 25; ++j) v.push_back(m.add_var(0.0, 10.0));
  for (int i = 0; i < 20; ++i) {
    LinExpr e;
    for (int j = 0; j < 25; ++j) e.add(v[static_cast<std::size_t>(j)], coef(rng));
    m.add_row(e, RowSense::Less, 5.0 + i);
  }
  LinExpr obj;
  for (int j = 0; j < 25; ++j) obj.add(v[static_cast<std::size_t>(j)], coef(rng));
  m.set_objective(obj);
  LpOptions a, b;
  a.simplex.refactor_interval = 3;
  b.simplex.refactor_interval = 1000;
  SolveResult ra = solve_lp(m, a), rb = solve_lp(m, b);
  ASSERT_EQ(ra.status, SolveStatus::Optimal);
  ASSERT_EQ(rb.status, SolveStatus::Optimal);
  EXPECT_NEAR(ra.objective, rb.objective, 1e-7);
}

TEST(SolveMilp, PairOfBinaries) {
  Model m;
  VarId a = m.add_binary(), b = m.add_binary();
  m.add_le(LinExpr(a) + LinExpr(b), 1.0);
  m.set_objective(-1.0 * LinExpr(a) - LinExpr(b));
  SolveResult res = solve_milp(m);
  ASSERT_EQ(res.status, SolveStatus::Optimal);
  EXPECT_NEAR(-res.objective, 1.0, 1e-9);
}

TEST(SolveMilp, Knapsack) {
  Model m;
  VarId a = m.add_binary(), b = m.add_binary();
  m.add_le(2.0 * LinExpr(a) + 2.0 * LinExpr(b), 3.0);
  m.set_objective(3.0 * LinExpr(a) + 2.0 * LinExpr(b), ObjSense::Maximize);
  SolveResult res = solve_milp(m);
  ASSERT_EQ(res.status, SolveStatus::Optimal);
  EXPECT_NEAR(res.objective, 3.0, 1e-9);
  EXPECT_NEAR(res.value(a), 1.0, 1e-9);
  EXPECT_NEAR(res.value(b), 0.0, 1e-9);
}

TEST(SolveMilp, InfeasibleIntegerHull) {
  Model m;
  VarId a = m.add_binary(), b = m.add_binary();
  m.add_eq(2.0 * LinExpr(a) + 2.0 * LinExpr(b), 1.0);
  m.set_objective(LinExpr(a));
  EXPECT_EQ(solve_milp(m).status, SolveStatus::Infeasible);
}

// Lambda-branch indicator written out by hand:
// 1 - phi (lambda + 1) <= f - lambda <= (1 - phi)(eta - lambda).
TEST(SolveMilp, LambdaBranchIndicatorTruthTable) {
  const int nb = 4, lambda = 1, eta = 2;
  for (int mask = 0; mask < (1 << nb); ++mask) {
    int failures = nb - __builtin_popcount(static_cast<unsigned>(mask));
    for (int fixed = 0; fixed <= 1; ++fixed) {
      Model m;
      VarId phi = m.add_binary();
      m.set_bounds(phi, fixed, fixed);
      const double f = failures - lambda;
      m.add_le(1.0 - (lambda + 1.0) * LinExpr(phi), f);
      m.add_ge((eta - lambda) * (1.0 - LinExpr(phi)), f);
      m.set_objective(LinExpr(0.0));
      bool feasible = solve_milp(m).status == SolveStatus::Optimal;
      bool expected = fixed == 1 ? failures <= lambda : (failures >= lambda + 1 && failures <= eta);
      EXPECT_EQ(feasible, expected) << "mask " << mask << " phi " << fixed;
    }
  }
}

namespace {

// Random pure-binary programs against exhaustive enumeration.
void check_against_enumeration(unsigned seed, int n, int rows) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> coef(-6, 6);
  std::vector<std::vector<int>> a(static_cast<std::size_t>(rows), std::vector<int>(static_cast<std::size_t>(n)));
  std::vector<int> rhs(static_cast<std::size_t>(rows)), c(static_cast<std::size_t>(n));
  for (auto& row : a)
    for (auto& v : row) v = coef(rng);
  for (auto& r : rhs) r = std::uniform_int_distribution<int>(-2, 8)(rng);
  for (auto& v : c) v = coef(rng);

  Model m;
  std::vector<VarId> x;
  for (int j = 0; j < n; ++j) x.push_back(m.add_binary());
  for (int i = 0; i < rows; ++i) {
    LinExpr e;
    for (int j = 0; j < n; ++j) e.add(x[static_cast<std::size_t>(j)], a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
    m.add_row(e, RowSense::Less, rhs[static_cast<std::size_t>(i)]);
  }
  LinExpr obj;
  for (int j = 0; j < n; ++j) obj.add(x[static_cast<std::size_t>(j)], c[static_cast<std::size_t>(j)]);
  m.set_objective(obj);

  bool any = false;
  long best = 0;
  for (int mask = 0; mask < (1 << n); ++mask) {
    bool ok = true;
    for (int i = 0; i < rows && ok; ++i) {
      long act = 0;
      for (int j = 0; j < n; ++j)
        if ((mask >> j) & 1) act += a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      ok = act <= rhs[static_cast<std::size_t>(i)];
    }
    if (!ok) continue;
    long val = 0;
    for (int j = 0; j < n; ++j)
      if ((mask >> j) & 1) val += c[static_cast<std::size_t>(j)];
    if (!any || val < best) best = val;
    any = true;
  }
  SolveResult res = solve_milp(m);
  if (!any) {
    EXPECT_EQ(res.status, SolveStatus::Infeasible) << "seed " << seed;
    return;
  }
  ASSERT_EQ(res.status, SolveStatus::Optimal) << "seed " << seed;
  EXPECT_NEAR(res.objective, static_cast<double>(best), 1e-6) << "seed " << seed;
  EXPECT_LE(primal_violation(m, res.x), 1e-7);
}

}  // namespace

TEST(SolveMilp, MatchesEnumerationOnRandomBinaryPrograms) {
  for (unsigned seed = 1; seed <= 40; ++seed) check_against_enumeration(seed, 4 + static_cast<int>(seed % 13), 2 + static_cast<int>(seed % 5));
}

TEST(SolveMilp, MixedIntegerWithContinuousPart) {
  // min -x - 2y, x continuous, y integer in [0, 3], x + y <= 3.5, x - y >= -0.5
  Model m;
  VarId x = m.add_var(0.0, kInf);
  VarId y = m.add_var(0.0, 3.0, VarKind::Integer);
  m.add_le(LinExpr(x) + LinExpr(y), 3.5);
  m.add_ge(LinExpr(x) - LinExpr(y), -0.5);
  m.set_objective(-1.0 * LinExpr(x) - 2.0 * LinExpr(y));
  SolveResult res = solve_milp(m);
  ASSERT_EQ(res.status, SolveStatus::Optimal);
  // y = 2 gives x = 1.5, value -5.5; y = 1 gives x = 2.5, value -4.5.
  EXPECT_NEAR(res.objective, -5.5, 1e-9);
  EXPECT_NEAR(res.value(y), 2.0, 1e-9);
}

TEST(SolveMilp, RepeatedSolvesAreBitIdentical) {
  Model m;
  std::vector<VarId> x;
  std::mt19937 rng(3);
  for (int j = 0; j < 12; ++j) x.push_back(m.add_binary());
  for (int i = 0; i < 5; ++i) {
    LinExpr e;
    for (auto v : x) e.add(v, std::uniform_int_distribution<int>(1, 9)(rng));
    m.add_row(e, RowSense::Less, 20.0 + i);
  }
  LinExpr obj;
  for (auto v : x) obj.add(v, -std::uniform_int_distribution<int>(1, 9)(rng));
  m.set_objective(obj);
  SolveResult a = solve_milp(m), b = solve_milp(m);
  ASSERT_EQ(a.status, b.status);
  EXPECT_EQ(a.objective, b.objective);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.stats.nodes, b.stats.nodes);
}

TEST(SolveMilp, FirstIncumbentModeReturnsFeasiblePoint) {
  Model m;
  std::vector<VarId> x;
  for (int j = 0; j < 6; ++j) x.push_back(m.add_binary());
  LinExpr sum;
  for (auto v : x) sum += LinExpr(v);
  m.add_eq(sum, 3.0);
  m.set_objective(LinExpr(0.0));
  MilpOptions opt;
  opt.stop_at_first_incumbent = true;
  SolveResult res = solve_milp(m, opt);
  ASSERT_EQ(res.status, SolveStatus::Optimal);
  EXPECT_LE(primal_violation(m, res.x), 1e-9);
}

TEST(SolveMilp, StartDoesNotChangeOptimum) {
  Model m;
  VarId a = m.add_binary(), b = m.add_binary();
  m.add_le(2.0 * LinExpr(a) + 2.0 * LinExpr(b), 3.0);
  m.set_objective(3.0 * LinExpr(a) + 2.0 * LinExpr(b), ObjSense::Maximize);
  for (std::vector<double> start : {std::vector<double>{0, 1}, std::vector<double>{1, 1}, std::vector<double>{0, 0}}) {
    MilpOptions opt;
    opt.start = start;
    SolveResult res = solve_milp(m, opt);
    ASSERT_EQ(res.status, SolveStatus::Optimal);
    EXPECT_NEAR(res.objective, 3.0, 1e-9);
  }
}

TEST(SolveMilp, FeasibleStartEndsFirstIncumbentSearch) {
  Model m;
  VarId a = m.add_binary(), b = m.add_binary();
  m.add_le(2.0 * LinExpr(a) + 2.0 * LinExpr(b), 3.0);
  m.set_objective(3.0 * LinExpr(a) + 2.0 * LinExpr(b), ObjSense::Maximize);
  MilpOptions opt;
  opt.stop_at_first_incumbent = true;
  opt.start = {0, 1};
  SolveResult res = solve_milp(m, opt);
  ASSERT_EQ(res.status, SolveStatus::Optimal);
  EXPECT_EQ(res.stats.nodes, 1);
  EXPECT_NEAR(res.value(b), 1.0, 1e-9);
  opt.start = {1};
  EXPECT_THROW(solve_milp(m, opt), ncswitch::Error);
}

TEST(WriteInstance, ListsObjectiveRowsAndBounds) {
  Model m;
  VarId x = m.add_var(0.0, 2.0, VarKind::Integer, "x");
  m.add_row(LinExpr(x) * 3.0, RowSense::Less, 4.0, "cap");
  m.set_objective(LinExpr(x));
  std::ostringstream os;
  write_instance(os, m);
  EXPECT_EQ(os.str(), "minimize\nobj: 0 + 1 x\ncap: 3 x <= 4\nbounds: x 0 2 int\n");
}
