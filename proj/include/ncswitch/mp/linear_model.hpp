#pragma once

// Building blocks for linear and mixed-integer programs: variables, affine
// expressions, rows, and the result record every solver returns.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "ncswitch/error.hpp"

namespace ncswitch::mp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct VarId {
  int index = -1;
  friend bool operator==(VarId, VarId) = default;
  friend auto operator<=>(VarId, VarId) = default;
};

struct RowId {
  int index = -1;
};

struct Term {
  VarId var;
  double coef = 0.0;
};

/// constant + sum coef * var. Duplicate variables are merged lazily.
class LinExpr {
 public:
  LinExpr() = default;
  LinExpr(double constant) : constant_(constant) {}  // NOLINT(google-explicit-constructor)
  LinExpr(VarId v, double coef = 1.0) { terms_.push_back({v, coef}); }  // NOLINT(google-explicit-constructor)

  double constant() const { return constant_; }
  const std::vector<Term>& terms() const { return terms_; }
  bool is_constant() const { return terms_.empty(); }

  LinExpr& add(VarId v, double coef) {
    if (coef != 0.0) terms_.push_back({v, coef});
    return *this;
  }
  LinExpr& operator+=(const LinExpr& o) {
    constant_ += o.constant_;
    terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
    return *this;
  }
  LinExpr& operator-=(const LinExpr& o) {
    constant_ -= o.constant_;
    for (const auto& t : o.terms_) terms_.push_back({t.var, -t.coef});
    return *this;
  }
  LinExpr& operator*=(double s) {
    constant_ *= s;
    for (auto& t : terms_) t.coef *= s;
    if (s == 0.0) terms_.clear();
    return *this;
  }

  friend LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
  friend LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
  friend LinExpr operator-(LinExpr a) { return a *= -1.0; }
  friend LinExpr operator*(LinExpr a, double s) { return a *= s; }
  friend LinExpr operator*(double s, LinExpr a) { return a *= s; }

  /// Sorted by variable with duplicates summed and zeros removed.
  LinExpr normalized() const {
    LinExpr out(constant_);
    out.terms_ = terms_;
    std::sort(out.terms_.begin(), out.terms_.end(), [](const Term& a, const Term& b) { return a.var < b.var; });
    std::size_t w = 0;
    for (std::size_t r = 0; r < out.terms_.size(); ++r) {
      if (w > 0 && out.terms_[w - 1].var == out.terms_[r].var) {
        out.terms_[w - 1].coef += out.terms_[r].coef;
      } else {
        out.terms_[w++] = out.terms_[r];
      }
    }
    out.terms_.resize(w);
    std::erase_if(out.terms_, [](const Term& t) { return t.coef == 0.0; });
    return out;
  }

  template <typename Values>
  double evaluate(const Values& x) const {
    double v = constant_;
    for (const auto& t : terms_) v += t.coef * x[static_cast<std::size_t>(t.var.index)];
    return v;
  }

 private:
  double constant_ = 0.0;
  std::vector<Term> terms_;
};

enum class VarKind { Continuous, Integer };
enum class RowSense { Less, Equal, Greater };
enum class ObjSense { Minimize, Maximize };

struct Variable {
  double lb = 0.0;
  double ub = kInf;
  VarKind kind = VarKind::Continuous;
  int priority = 0;  ///< higher branches first
  std::string name;
};

struct Row {
  std::vector<Term> terms;  ///< normalized
  RowSense sense = RowSense::Less;
  double rhs = 0.0;
  std::string name;
};

class Model {
 public:
  VarId add_var(double lb, double ub, VarKind kind = VarKind::Continuous, std::string name = {}, int priority = 0) {
    if (lb > ub) fail(ErrorCode::InvalidArgument, "variable '" + name + "' has lb > ub");
    vars_.push_back(Variable{lb, ub, kind, priority, std::move(name)});
    return VarId{static_cast<int>(vars_.size()) - 1};
  }
  VarId add_binary(std::string name = {}, int priority = 0) {
    return add_var(0.0, 1.0, VarKind::Integer, std::move(name), priority);
  }
  VarId add_free(std::string name = {}) { return add_var(-kInf, kInf, VarKind::Continuous, std::move(name)); }

  /// expr (sense) rhs; the constant of expr is moved to the right-hand side.
  RowId add_row(const LinExpr& expr, RowSense sense, double rhs, std::string name = {}) {
    LinExpr e = expr.normalized();
    for (const auto& t : e.terms()) {
      if (t.var.index < 0 || t.var.index >= var_count()) fail(ErrorCode::IndexOutOfRange, "row '" + name + "' uses unknown variable");
    }
    rows_.push_back(Row{e.terms(), sense, rhs - e.constant(), std::move(name)});
    return RowId{static_cast<int>(rows_.size()) - 1};
  }
  RowId add_le(const LinExpr& lhs, const LinExpr& rhs, std::string name = {}) {
    return add_row(lhs - rhs, RowSense::Less, 0.0, std::move(name));
  }
  RowId add_ge(const LinExpr& lhs, const LinExpr& rhs, std::string name = {}) {
    return add_row(lhs - rhs, RowSense::Greater, 0.0, std::move(name));
  }
  RowId add_eq(const LinExpr& lhs, const LinExpr& rhs, std::string name = {}) {
    return add_row(lhs - rhs, RowSense::Equal, 0.0, std::move(name));
  }

  void set_objective(const LinExpr& obj, ObjSense sense = ObjSense::Minimize) {
    objective_ = obj.normalized();
    sense_ = sense;
  }

  void set_bounds(VarId v, double lb, double ub) {
    auto& var = vars_[static_cast<std::size_t>(v.index)];
    var.lb = lb;
    var.ub = ub;
  }
  void set_kind(VarId v, VarKind kind) { vars_[static_cast<std::size_t>(v.index)].kind = kind; }
  void set_priority(VarId v, int priority) { vars_[static_cast<std::size_t>(v.index)].priority = priority; }

  int var_count() const { return static_cast<int>(vars_.size()); }
  int row_count() const { return static_cast<int>(rows_.size()); }
  const std::vector<Variable>& vars() const { return vars_; }
  const Variable& var(VarId v) const { return vars_[static_cast<std::size_t>(v.index)]; }
  const std::vector<Row>& rows() const { return rows_; }
  const LinExpr& objective() const { return objective_; }
  ObjSense sense() const { return sense_; }

  bool has_integers() const {
    return std::any_of(vars_.begin(), vars_.end(), [](const Variable& v) { return v.kind == VarKind::Integer; });
  }
  int integer_count() const {
    return static_cast<int>(std::count_if(vars_.begin(), vars_.end(), [](const Variable& v) { return v.kind == VarKind::Integer; }));
  }
  std::size_t nonzero_count() const {
    std::size_t nz = 0;
    for (const auto& r : rows_) nz += r.terms.size();
    return nz;
  }

 private:
  std::vector<Variable> vars_;
  std::vector<Row> rows_;
  LinExpr objective_;
  ObjSense sense_ = ObjSense::Minimize;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterationLimit, NumericalFailure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Unbounded: return "Unbounded";
    case SolveStatus::IterationLimit: return "IterationLimit";
    case SolveStatus::NumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

struct SolveStats {
  long long iterations = 0;
  long long nodes = 0;
  long long refactorizations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double duality_gap = 0.0;
};

/// Row duals follow the sensitivity convention: dual[i] = d objective / d rhs[i]
/// in the model's own objective sense. multiplier() converts a row to the
/// nonnegative Lagrange multiplier of its inequality.
struct SolveResult {
  SolveStatus status = SolveStatus::NumericalFailure;
  double objective = 0.0;
  double best_bound = 0.0;  ///< MILP: proven bound; LP: equals objective
  std::vector<double> x;
  std::vector<double> row_duals;       ///< LPs only
  std::vector<double> reduced_costs;  ///< LPs only
  SolveStats stats;

  bool optimal() const { return status == SolveStatus::Optimal; }
  double value(VarId v) const { return x[static_cast<std::size_t>(v.index)]; }
  double value(const LinExpr& e) const { return e.evaluate(x); }
  double dual(RowId r) const { return row_duals[static_cast<std::size_t>(r.index)]; }
};

/// Largest violation of rows and bounds at point x.
inline double primal_violation(const Model& model, const std::vector<double>& x) {
  double worst = 0.0;
  for (int j = 0; j < model.var_count(); ++j) {
    const auto& v = model.vars()[static_cast<std::size_t>(j)];
    double xj = x[static_cast<std::size_t>(j)];
    worst = std::max({worst, v.lb - xj, xj - v.ub});
  }
  for (const auto& row : model.rows()) {
    double act = 0.0;
    for (const auto& t : row.terms) act += t.coef * x[static_cast<std::size_t>(t.var.index)];
    double viol = 0.0;
    if (row.sense != RowSense::Greater) viol = std::max(viol, act - row.rhs);
    if (row.sense != RowSense::Less) viol = std::max(viol, row.rhs - act);
    worst = std::max(worst, viol);
  }
  return worst;
}

}  // namespace ncswitch::mp
