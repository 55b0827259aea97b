#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ncswitch/error.hpp"
#include "ncswitch/netgraph.hpp"

namespace ncswitch {

struct Generator {
  int bus = 0;  ///< 0-based
  double pmin = 0.0;
  double pmax = 0.0;
  double cost = 0.0;     ///< per MW
  double reg_up = 0.0;   ///< R+, MW
  double reg_dn = 0.0;   ///< R-, MW
};

struct BranchData {
  double susceptance = 1.0;  ///< p.u.
  double capacity = 0.0;     ///< MW
};

/// DC network data for two-stage switching. Branch i of `topology` is
/// described by `branches[i]`.
struct ScotsCase {
  std::string name;
  Topology topology;
  std::vector<double> load;  ///< MW per bus
  std::vector<Generator> generators;
  std::vector<BranchData> branches;
  int eta = 2;
  int lambda = 1;
  int switch_budget = 1;  ///< K: corrective actions per scenario
  int first_stage_switch_limit = -1;  ///< max first-stage switch-offs; -1 for none
  double voll = 0.0;          ///< 0 selects 1000 x the largest marginal cost
  double switch_cost = 1.0;
  double reg_cost = 0.0;      ///< 0 selects 0.1 x the largest marginal cost
  double outage_probability = 0.01;
  double base_mva = 100.0;

  int bus_count() const { return topology.bus_count(); }
  int branch_count() const { return topology.branch_count(); }
  int generator_count() const { return static_cast<int>(generators.size()); }

  double max_marginal_cost() const {
    double m = 0.0;
    for (const auto& g : generators) m = std::max(m, g.cost);
    return m > 0.0 ? m : 1.0;
  }
  double effective_voll() const { return voll > 0.0 ? voll : 1000.0 * max_marginal_cost(); }
  double effective_reg_cost() const { return reg_cost > 0.0 ? reg_cost : 0.1 * max_marginal_cost(); }
  double total_load() const {
    double s = 0.0;
    for (double l : load) s += l;
    return s;
  }

  /// Angle bound: no simple path can hold a larger potential spread.
  double theta_max() const {
    double t = 0.0;
    for (const auto& b : branches) t += b.capacity / (base_mva * b.susceptance);
    return std::max(t, 1e-6);
  }
  /// Big-M of the switched flow law for branch e.
  double flow_big_m(int e) const {
    const auto& b = branches[static_cast<std::size_t>(e)];
    return b.capacity + 2.0 * base_mva * b.susceptance * theta_max();
  }
};

inline void validate_case(const ScotsCase& c) {
  const int nn = c.bus_count(), nb = c.branch_count();
  if (static_cast<int>(c.load.size()) != nn) fail(ErrorCode::SchemaError, "load vector length differs from bus count");
  if (static_cast<int>(c.branches.size()) != nb) fail(ErrorCode::SchemaError, "branch data length differs from branch count");
  for (double l : c.load) {
    if (!(l >= 0.0) || !std::isfinite(l)) fail(ErrorCode::SchemaError, "loads must be finite and nonnegative");
  }
  for (const auto& g : c.generators) {
    if (g.bus < 0 || g.bus >= nn) fail(ErrorCode::SchemaError, "generator references a missing bus");
    if (!(g.pmin >= 0.0) || !(g.pmin <= g.pmax) || !std::isfinite(g.pmax)) fail(ErrorCode::SchemaError, "generator needs 0 <= pmin <= pmax");
    if (!(g.reg_up >= 0.0) || !(g.reg_dn >= 0.0)) fail(ErrorCode::SchemaError, "regulation limits must be nonnegative");
    if (!(g.cost >= 0.0)) fail(ErrorCode::SchemaError, "generator cost must be nonnegative");
  }
  for (const auto& b : c.branches) {
    if (!(b.capacity > 0.0) || !std::isfinite(b.capacity)) fail(ErrorCode::SchemaError, "branch capacities must be positive");
    if (!(b.susceptance > 0.0) || !std::isfinite(b.susceptance)) fail(ErrorCode::SchemaError, "branch susceptances must be positive");
  }
  if (c.eta < 1) fail(ErrorCode::SchemaError, "eta must be at least 1");
  if (c.lambda < 1) fail(ErrorCode::SchemaError, "lambda must be at least 1");
  if (c.switch_budget < 0) fail(ErrorCode::SchemaError, "switch budget must be nonnegative");
  if (!(c.outage_probability > 0.0 && c.outage_probability < 1.0)) fail(ErrorCode::SchemaError, "outage probability must lie in (0, 1)");
  if (!(c.base_mva > 0.0)) fail(ErrorCode::SchemaError, "base MVA must be positive");
  if (c.voll < 0.0 || c.switch_cost < 0.0 || c.reg_cost < 0.0) fail(ErrorCode::SchemaError, "penalties must be nonnegative");
}

}  // namespace ncswitch
