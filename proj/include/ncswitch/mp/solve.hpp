#pragma once

// LP and MILP entry points on top of DenseSimplex, plus the certificate
// checks applied to every optimal LP and a plain-text instance dump.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include "ncswitch/error.hpp"
#include "ncswitch/mp/dense_simplex.hpp"
#include "ncswitch/mp/linear_model.hpp"

namespace ncswitch::mp {

struct LpOptions {
  SimplexOptions simplex;
  double residual_tol = 1e-7;
  double gap_tol = 1e-6;
};

struct MilpOptions {
  SimplexOptions simplex;
  double integrality_tol = 1e-6;
  double absolute_gap = 1e-6;
  long long node_limit = 2'000'000;
  bool stop_at_first_incumbent = false;  ///< feasibility mode: the first integer point is reported as Optimal
  bool depth_first = false;
  double cutoff = kInf;  ///< prune nodes whose bound is not below this (model sense minimize)
  /// Valid bound on the optimum (model sense minimize); the search ends once
  /// the incumbent is within absolute_gap of it.
  double known_bound = -kInf;
  /// MIP start: one value per model variable. Its integer entries are fixed
  /// for a first LP; a feasible result becomes the incumbent.
  std::vector<double> start;
};

struct Certificate {
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double duality_gap = 0.0;
  double dual_objective = 0.0;
};

/// Residuals of a primal/dual pair in the sensitivity convention of SolveResult.
inline Certificate lp_certificate(const Model& model, const std::vector<double>& x, const std::vector<double>& y) {
  const double s = model.sense() == ObjSense::Maximize ? -1.0 : 1.0;
  const int n = model.var_count();
  Certificate cert;
  std::vector<double> d(static_cast<std::size_t>(n), 0.0);
  for (const auto& t : model.objective().terms()) d[static_cast<std::size_t>(t.var.index)] += s * t.coef;
  double primal = s * model.objective().constant();
  for (int j = 0; j < n; ++j) primal += d[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
  double dual = s * model.objective().constant();

  auto at_bound = [](double v, double b) { return std::isfinite(b) && std::abs(v - b) <= 1e-7 * (1.0 + std::abs(b)); };
  auto sign_violation = [&](double dj, double v, double lb, double ub, double& used) {
    const bool lo = at_bound(v, lb), hi = at_bound(v, ub);
    used = lo ? lb : hi ? ub : v;
    if (lo && hi) return 0.0;
    if (lo) return std::max(0.0, -dj);
    if (hi) return std::max(0.0, dj);
    return std::abs(dj);
  };

  for (int i = 0; i < model.row_count(); ++i) {
    const auto& row = model.rows()[static_cast<std::size_t>(i)];
    const double yi = s * y[static_cast<std::size_t>(i)];
    double act = 0.0, scale = std::abs(row.rhs);
    for (const auto& t : row.terms) {
      const double v = t.coef * x[static_cast<std::size_t>(t.var.index)];
      act += v;
      scale = std::max(scale, std::abs(v));
      d[static_cast<std::size_t>(t.var.index)] -= t.coef * yi;
    }
    double viol = 0.0;
    if (row.sense != RowSense::Greater) viol = std::max(viol, act - row.rhs);
    if (row.sense != RowSense::Less) viol = std::max(viol, row.rhs - act);
    cert.primal_residual = std::max(cert.primal_residual, viol / (1.0 + scale));
    const double lb = row.sense == RowSense::Less ? -kInf : row.rhs;
    const double ub = row.sense == RowSense::Greater ? kInf : row.rhs;
    double used = 0.0;
    cert.dual_residual = std::max(cert.dual_residual, sign_violation(yi, act, lb, ub, used) / (1.0 + std::abs(yi)));
    dual += yi * used;
  }
  for (int j = 0; j < n; ++j) {
    const auto& v = model.vars()[static_cast<std::size_t>(j)];
    const double xj = x[static_cast<std::size_t>(j)];
    cert.primal_residual = std::max({cert.primal_residual, (v.lb - xj) / (1.0 + std::abs(v.lb)), (xj - v.ub) / (1.0 + std::abs(v.ub))});
    double used = 0.0;
    cert.dual_residual = std::max(cert.dual_residual, sign_violation(d[static_cast<std::size_t>(j)], xj, v.lb, v.ub, used));
    dual += d[static_cast<std::size_t>(j)] * used;
  }
  cert.dual_objective = s * dual;
  cert.duality_gap = std::abs(primal - dual);
  return cert;
}

/// Nonnegative multiplier of an inequality row; equality rows return the signed dual.
inline double multiplier(const Model& model, const SolveResult& result, RowId row) {
  const double s = model.sense() == ObjSense::Maximize ? -1.0 : 1.0;
  const double y = s * result.dual(row);
  switch (model.rows()[static_cast<std::size_t>(row.index)].sense) {
    case RowSense::Less: return -y;
    case RowSense::Greater: return y;
    case RowSense::Equal: return y;
  }
  return y;
}

/// Process-wide count of optimal LPs whose primal/dual certificate was checked
/// by solve_lp, and of those that passed.
struct CertificateTally {
  std::atomic<long long> checked{0};
  std::atomic<long long> passed{0};
};

inline CertificateTally& certificate_tally() {
  static CertificateTally tally;
  return tally;
}

inline SolveResult solve_lp(const Model& model, const LpOptions& options = {}) {
  if (model.has_integers()) fail(ErrorCode::InvalidArgument, "solve_lp called on a model with integer variables");
  DenseSimplex simplex(model, options.simplex);
  SolveResult res;
  res.status = simplex.solve();
  res.stats.iterations = simplex.iterations();
  res.stats.refactorizations = simplex.refactorizations();
  if (res.status != SolveStatus::Optimal) return res;
  res.x = simplex.primal();
  res.row_duals = simplex.row_duals();
  res.reduced_costs = simplex.reduced_costs();
  res.objective = simplex.objective();
  res.best_bound = res.objective;
  Certificate cert = lp_certificate(model, res.x, res.row_duals);
  res.stats.primal_residual = cert.primal_residual;
  res.stats.dual_residual = cert.dual_residual;
  res.stats.duality_gap = cert.duality_gap;
  certificate_tally().checked.fetch_add(1, std::memory_order_relaxed);
  if (cert.primal_residual > options.residual_tol || cert.dual_residual > options.residual_tol ||
      cert.duality_gap > options.gap_tol * (1.0 + std::abs(res.objective))) {
    res.status = SolveStatus::NumericalFailure;
  } else {
    certificate_tally().passed.fetch_add(1, std::memory_order_relaxed);
  }
  return res;
}

namespace detail {

struct BbNode {
  double bound = 0.0;  ///< parent LP value, minimize sense
  int depth = 0;
  long long id = 0;
  std::vector<double> lb, ub;  ///< bounds of the integer variables
};

struct BbOrder {
  bool depth_first = false;
  // priority_queue pops the "largest"; we want smallest bound, then deepest, then oldest id.
  bool operator()(const BbNode& a, const BbNode& b) const {
    if (depth_first) {
      if (a.depth != b.depth) return a.depth < b.depth;
      return a.id < b.id;
    }
    if (a.bound != b.bound) return a.bound > b.bound;
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.id > b.id;
  }
};

}  // namespace detail

/// LP-based branch and bound. Nodes re-optimize with the dual simplex from
/// the basis left by the previous node.
inline SolveResult solve_milp(const Model& model, const MilpOptions& options = {}) {
  const double s = model.sense() == ObjSense::Maximize ? -1.0 : 1.0;
  std::vector<int> ints;
  for (int j = 0; j < model.var_count(); ++j) {
    const auto& v = model.vars()[static_cast<std::size_t>(j)];
    if (v.kind != VarKind::Integer) continue;
    if (!std::isfinite(v.lb) || !std::isfinite(v.ub)) fail(ErrorCode::InvalidArgument, "integer variable '" + v.name + "' is unbounded");
    ints.push_back(j);
  }

  DenseSimplex simplex(model, options.simplex);
  SolveResult res;
  res.status = SolveStatus::Infeasible;
  double incumbent = options.cutoff;
  bool have_incumbent = false;
  bool limited = false;
  bool numerical = false;

  detail::BbNode root;
  root.bound = -kInf;
  for (int j : ints) {
    root.lb.push_back(std::ceil(model.vars()[static_cast<std::size_t>(j)].lb - options.integrality_tol));
    root.ub.push_back(std::floor(model.vars()[static_cast<std::size_t>(j)].ub + options.integrality_tol));
  }
  std::priority_queue<detail::BbNode, std::vector<detail::BbNode>, detail::BbOrder> open(detail::BbOrder{options.depth_first});
  const std::vector<double> root_lb = root.lb, root_ub = root.ub;
  open.push(std::move(root));
  long long next_id = 1;
  long long nodes = 0;
  bool first = true;
  double open_bound_at_stop = kInf;

  if (!options.start.empty()) {
    if (static_cast<int>(options.start.size()) != model.var_count()) fail(ErrorCode::DimensionMismatch, "MIP start length differs from the variable count");
    bool inside = true;
    for (std::size_t k = 0; k < ints.size(); ++k) {
      const double v = std::round(options.start[static_cast<std::size_t>(ints[k])]);
      inside = inside && v >= root_lb[k] && v <= root_ub[k];
      simplex.set_bounds(ints[k], v, v);
    }
    if (inside && simplex.solve() == SolveStatus::Optimal) {
      const double value = s * simplex.objective();
      if (value < incumbent) {
        incumbent = value;
        have_incumbent = true;
        res.x = simplex.primal();
        for (int j : ints) res.x[static_cast<std::size_t>(j)] = std::round(res.x[static_cast<std::size_t>(j)]);
        res.objective = s * value;
      }
    }
    first = false;
    ++nodes;
    if (have_incumbent && options.stop_at_first_incumbent) open = decltype(open)(detail::BbOrder{options.depth_first});
  }

  while (!open.empty()) {
    if (have_incumbent && incumbent <= options.known_bound + options.absolute_gap) break;
    if (nodes >= options.node_limit) {
      limited = true;
      break;
    }
    detail::BbNode node = open.top();
    open.pop();
    if (have_incumbent && node.bound >= incumbent - options.absolute_gap) continue;
    if (!have_incumbent && node.bound >= incumbent) continue;
    ++nodes;

    bool infeasible_bounds = false;
    for (std::size_t k = 0; k < ints.size(); ++k) {
      if (node.lb[k] > node.ub[k]) infeasible_bounds = true;
      simplex.set_bounds(ints[k], node.lb[k], node.ub[k]);
    }
    if (infeasible_bounds) continue;
    SolveStatus st = first ? simplex.solve() : simplex.reoptimize();
    first = false;
    if (st == SolveStatus::Unbounded || st == SolveStatus::NumericalFailure) {
      simplex.restart();
      st = simplex.solve();
    }
    if (st == SolveStatus::Infeasible) continue;
    if (st == SolveStatus::Unbounded) {
      res.status = SolveStatus::Unbounded;
      return res;
    }
    if (st != SolveStatus::Optimal) {
      numerical = true;
      continue;
    }
    const double value = s * simplex.objective();
    if (have_incumbent && value >= incumbent - options.absolute_gap) continue;
    if (!have_incumbent && value >= incumbent) continue;

    std::vector<double> x = simplex.primal();
    int branch = -1;
    int best_priority = 0;
    double best_frac = -1.0;
    for (std::size_t k = 0; k < ints.size(); ++k) {
      const int j = ints[k];
      const double v = x[static_cast<std::size_t>(j)];
      const double frac = std::abs(v - std::round(v));
      if (frac <= options.integrality_tol) continue;
      const int pr = model.vars()[static_cast<std::size_t>(j)].priority;
      const double closeness = std::min(frac, 1.0 - frac);
      if (branch < 0 || pr > best_priority || (pr == best_priority && closeness > best_frac + 1e-12)) {
        branch = static_cast<int>(k);
        best_priority = pr;
        best_frac = closeness;
      }
    }
    if (branch < 0) {
      for (int j : ints) x[static_cast<std::size_t>(j)] = std::round(x[static_cast<std::size_t>(j)]);
      incumbent = value;
      have_incumbent = true;
      res.x = std::move(x);
      res.objective = s * value;
      if (options.stop_at_first_incumbent) {
        limited = !open.empty();
        break;
      }
      continue;
    }

    const double v = x[static_cast<std::size_t>(ints[static_cast<std::size_t>(branch)])];
    detail::BbNode down{value, node.depth + 1, 0, node.lb, node.ub};
    detail::BbNode up{value, node.depth + 1, 0, std::move(node.lb), std::move(node.ub)};
    down.ub[static_cast<std::size_t>(branch)] = std::floor(v);
    up.lb[static_cast<std::size_t>(branch)] = std::ceil(v);
    // The child on the rounding side gets the smaller id and is explored first on ties.
    if (v - std::floor(v) >= 0.5) {
      up.id = next_id++;
      down.id = next_id++;
    } else {
      down.id = next_id++;
      up.id = next_id++;
    }
    open.push(std::move(down));
    open.push(std::move(up));
  }
  if (limited) {
    open_bound_at_stop = incumbent;
    while (!open.empty()) {
      open_bound_at_stop = std::min(open_bound_at_stop, open.top().bound);
      open.pop();
    }
  }

  res.stats.iterations = simplex.iterations();
  res.stats.refactorizations = simplex.refactorizations();
  res.stats.nodes = nodes;
  if (have_incumbent) {
    const bool proven = options.stop_at_first_incumbent ? !numerical : !(limited || numerical);
    res.status = proven ? SolveStatus::Optimal : SolveStatus::IterationLimit;
    res.best_bound = limited ? s * open_bound_at_stop : res.objective;
    res.stats.primal_residual = primal_violation(model, res.x);
  } else if (limited) {
    res.status = SolveStatus::IterationLimit;
  } else if (numerical) {
    res.status = SolveStatus::NumericalFailure;
  } else {
    res.status = SolveStatus::Infeasible;
  }
  return res;
}

/// Dispatches on integrality.
inline SolveResult solve(const Model& model, const MilpOptions& options = {}) {
  if (model.has_integers()) return solve_milp(model, options);
  LpOptions lp;
  lp.simplex = options.simplex;
  return solve_lp(model, lp);
}

/// Plain-text dump:
///   minimize|maximize
///   obj: <const> [+ <coef> <var>]...
///   <row>: [<coef> <var>]... <= | = | >= <rhs>
///   bounds: <var> <lb> <ub> [int]
inline void write_instance(std::ostream& os, const Model& model) {
  auto name = [&](int j) {
    const auto& nm = model.vars()[static_cast<std::size_t>(j)].name;
    return nm.empty() ? "x" + std::to_string(j) : nm;
  };
  std::ostringstream buf;
  buf.precision(17);
  buf << (model.sense() == ObjSense::Minimize ? "minimize" : "maximize") << "\n";
  buf << "obj: " << model.objective().constant();
  for (const auto& t : model.objective().terms()) buf << " + " << t.coef << " " << name(t.var.index);
  buf << "\n";
  for (int i = 0; i < model.row_count(); ++i) {
    const auto& row = model.rows()[static_cast<std::size_t>(i)];
    buf << (row.name.empty() ? "r" + std::to_string(i) : row.name) << ":";
    for (const auto& t : row.terms) buf << " " << t.coef << " " << name(t.var.index);
    buf << (row.sense == RowSense::Less ? " <= " : row.sense == RowSense::Equal ? " = " : " >= ") << row.rhs << "\n";
  }
  for (int j = 0; j < model.var_count(); ++j) {
    const auto& v = model.vars()[static_cast<std::size_t>(j)];
    buf << "bounds: " << name(j) << " " << v.lb << " " << v.ub << (v.kind == VarKind::Integer ? " int" : "") << "\n";
  }
  os << buf.str();
}

}  // namespace ncswitch::mp
