#pragma once

// Dense-tableau bounded-variable simplex.
//
// Every row i gets a logical column s_i = a_i x whose bounds encode the row
// sense, so the working system is [A | -I] (x, s) = 0 with all restrictions
// expressed as variable bounds. The tableau T = B^-1 [A | -I] is kept in full
// and rebuilt from the original columns every `refactor_interval` pivots.
// The primal method (composite phase 1, then phase 2) solves from scratch;
// the dual method re-optimizes after bound changes, which is how the
// branch-and-bound driver moves between nodes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ncswitch/mp/linear_model.hpp"

namespace ncswitch::mp {

struct SimplexOptions {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-9;
  int refactor_interval = 50;
  long long iteration_limit = 2'000'000;
  int stall_limit = 60;  ///< non-improving pivots before Bland's rule kicks in
};

class DenseSimplex {
 public:
  DenseSimplex(const Model& model, SimplexOptions options = {}) : opt_(options) { load(model); }

  /// Primal simplex from the current basis.
  SolveStatus solve() {
    for (int j = 0; j < cols_; ++j) {
      if (!is_basic(j)) x_[static_cast<std::size_t>(j)] = clamp_nonbasic(j, x_[static_cast<std::size_t>(j)]);
    }
    recompute_basics();
    recompute_reduced_costs();
    return primal_loop();
  }

  /// Dual simplex from the current (dual feasible) basis after bounds moved.
  /// Falls back to the primal method when the basis is not dual feasible.
  SolveStatus reoptimize() {
    if (!place_nonbasics_dual_feasible()) return solve();
    recompute_basics();
    SolveStatus st = dual_loop();
    if (st == SolveStatus::Optimal) return primal_loop();  // cleans residual dual infeasibility
    if (st == SolveStatus::NumericalFailure || st == SolveStatus::IterationLimit) {
      reset_to_slack_basis();
      return solve();
    }
    return st;
  }

  /// Drops the current basis in favour of the all-logical one.
  void restart() { reset_to_slack_basis(); }

  void set_bounds(int j, double lb, double ub) {
    lb_[static_cast<std::size_t>(j)] = lb;
    ub_[static_cast<std::size_t>(j)] = ub;
  }
  double lower(int j) const { return lb_[static_cast<std::size_t>(j)]; }
  double upper(int j) const { return ub_[static_cast<std::size_t>(j)]; }

  int structural_count() const { return n_; }
  int row_count() const { return m_; }

  /// Objective in the model's own sense.
  double objective() const {
    double z = offset_;
    for (int j = 0; j < n_; ++j) z += cost_[static_cast<std::size_t>(j)] * x_[static_cast<std::size_t>(j)];
    return maximize_ ? -z : z;
  }
  std::vector<double> primal() const { return {x_.begin(), x_.begin() + n_}; }
  std::vector<double> row_duals() const {
    std::vector<double> y(static_cast<std::size_t>(m_));
    for (int i = 0; i < m_; ++i) y[static_cast<std::size_t>(i)] = (maximize_ ? -1.0 : 1.0) * d_[static_cast<std::size_t>(n_ + i)];
    return y;
  }
  std::vector<double> reduced_costs() const {
    std::vector<double> r(static_cast<std::size_t>(n_));
    for (int j = 0; j < n_; ++j) r[static_cast<std::size_t>(j)] = (maximize_ ? -1.0 : 1.0) * d_[static_cast<std::size_t>(j)];
    return r;
  }

  long long iterations() const { return iterations_; }
  long long refactorizations() const { return refactors_; }
  void set_iteration_limit(long long limit) { opt_.iteration_limit = limit; }

 private:
  // ---- setup -------------------------------------------------------------

  void load(const Model& model) {
    m_ = model.row_count();
    n_ = model.var_count();
    cols_ = n_ + m_;
    maximize_ = model.sense() == ObjSense::Maximize;
    const double s = maximize_ ? -1.0 : 1.0;

    col_start_.assign(static_cast<std::size_t>(n_) + 1, 0);
    for (const auto& row : model.rows()) {
      for (const auto& t : row.terms) ++col_start_[static_cast<std::size_t>(t.var.index) + 1];
    }
    for (int j = 0; j < n_; ++j) col_start_[static_cast<std::size_t>(j) + 1] += col_start_[static_cast<std::size_t>(j)];
    col_row_.resize(static_cast<std::size_t>(col_start_.back()));
    col_val_.resize(static_cast<std::size_t>(col_start_.back()));
    std::vector<int> fill(col_start_.begin(), col_start_.end() - 1);
    for (int i = 0; i < m_; ++i) {
      for (const auto& t : model.rows()[static_cast<std::size_t>(i)].terms) {
        auto pos = static_cast<std::size_t>(fill[static_cast<std::size_t>(t.var.index)]++);
        col_row_[pos] = i;
        col_val_[pos] = t.coef;
      }
    }

    lb_.assign(static_cast<std::size_t>(cols_), 0.0);
    ub_.assign(static_cast<std::size_t>(cols_), 0.0);
    cost_.assign(static_cast<std::size_t>(cols_), 0.0);
    for (int j = 0; j < n_; ++j) {
      lb_[static_cast<std::size_t>(j)] = model.vars()[static_cast<std::size_t>(j)].lb;
      ub_[static_cast<std::size_t>(j)] = model.vars()[static_cast<std::size_t>(j)].ub;
    }
    for (const auto& t : model.objective().terms()) cost_[static_cast<std::size_t>(t.var.index)] += s * t.coef;
    offset_ = s * model.objective().constant();
    cost_scale_ = 0.0;
    for (double c : cost_) cost_scale_ = std::max(cost_scale_, std::abs(c));
    frozen_.assign(static_cast<std::size_t>(cols_), 0);
    for (int i = 0; i < m_; ++i) {
      const auto& row = model.rows()[static_cast<std::size_t>(i)];
      auto k = static_cast<std::size_t>(n_ + i);
      lb_[k] = row.sense == RowSense::Less ? -kInf : row.rhs;
      ub_[k] = row.sense == RowSense::Greater ? kInf : row.rhs;
    }
    reset_to_slack_basis();
  }

  void reset_to_slack_basis() {
    basis_.assign(static_cast<std::size_t>(m_), 0);
    where_.assign(static_cast<std::size_t>(cols_), -1);
    for (int i = 0; i < m_; ++i) {
      basis_[static_cast<std::size_t>(i)] = n_ + i;
      where_[static_cast<std::size_t>(n_ + i)] = i;
    }
    x_.assign(static_cast<std::size_t>(cols_), 0.0);
    for (int j = 0; j < n_; ++j) x_[static_cast<std::size_t>(j)] = default_nonbasic_value(j);
    rebuild_tableau();
    recompute_basics();
    recompute_reduced_costs();
  }

  double default_nonbasic_value(int j) const {
    double l = lb_[static_cast<std::size_t>(j)], u = ub_[static_cast<std::size_t>(j)];
    if (std::isfinite(l)) return l;
    if (std::isfinite(u)) return u;
    return 0.0;
  }

  double& T(int i, int j) { return tab_[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(j)]; }
  double T(int i, int j) const {
    return tab_[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(j)];
  }
  double* row_ptr(int i) { return tab_.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(cols_); }

  bool is_basic(int j) const { return where_[static_cast<std::size_t>(j)] >= 0; }

  // ---- factorization -------------------------------------------------------

  /// T = B^-1 [A | -I] by Gauss-Jordan over the current basis columns.
  void rebuild_tableau() {
    ++refactors_;
    pivots_since_refactor_ = 0;
    tab_.assign(static_cast<std::size_t>(m_) * static_cast<std::size_t>(cols_), 0.0);
    for (int j = 0; j < n_; ++j) {
      for (int p = col_start_[static_cast<std::size_t>(j)]; p < col_start_[static_cast<std::size_t>(j) + 1]; ++p) {
        T(col_row_[static_cast<std::size_t>(p)], j) = col_val_[static_cast<std::size_t>(p)];
      }
    }
    for (int i = 0; i < m_; ++i) T(i, n_ + i) = -1.0;

    std::vector<int> basic_cols;
    basic_cols.reserve(static_cast<std::size_t>(m_));
    for (int i = 0; i < m_; ++i) basic_cols.push_back(basis_[static_cast<std::size_t>(i)]);
    std::fill(where_.begin(), where_.end(), -1);
    std::vector<char> assigned(static_cast<std::size_t>(m_), 0);
    std::vector<int> new_basis(static_cast<std::size_t>(m_), -1);

    // Logical basics pivot on their own row without elimination.
    for (int j : basic_cols) {
      if (j < n_) continue;
      int i = j - n_;
      double* r = row_ptr(i);
      for (int k = 0; k < cols_; ++k) r[k] = -r[k];
      assigned[static_cast<std::size_t>(i)] = 1;
      new_basis[static_cast<std::size_t>(i)] = j;
    }
    std::vector<int> deferred;
    for (int j : basic_cols) {
      if (j >= n_) continue;
      int best = -1;
      double best_abs = 0.0;
      for (int i = 0; i < m_; ++i) {
        if (assigned[static_cast<std::size_t>(i)]) continue;
        double a = std::abs(T(i, j));
        if (a > best_abs) {
          best_abs = a;
          best = i;
        }
      }
      if (best < 0 || best_abs < 1e-10) {
        deferred.push_back(j);  // dependent column; replaced by a logical below
        continue;
      }
      eliminate(best, j);
      assigned[static_cast<std::size_t>(best)] = 1;
      new_basis[static_cast<std::size_t>(best)] = j;
    }
    // Singular basis repair: leftover rows take their own logical.
    for (int i = 0; i < m_; ++i) {
      if (new_basis[static_cast<std::size_t>(i)] >= 0) continue;
      int j = n_ + i;
      double piv = T(i, j);
      if (std::abs(piv) < 1e-10) {
        // The logical column was mixed by earlier eliminations; pick any usable column in the row.
        int alt = -1;
        double alt_abs = 0.0;
        for (int k = 0; k < cols_; ++k) {
          if (std::find(new_basis.begin(), new_basis.end(), k) != new_basis.end()) continue;
          if (std::abs(T(i, k)) > alt_abs) {
            alt_abs = std::abs(T(i, k));
            alt = k;
          }
        }
        j = alt;
      }
      eliminate(i, j);
      new_basis[static_cast<std::size_t>(i)] = j;
      singular_repair_ = true;
    }
    for (int j : deferred) x_[static_cast<std::size_t>(j)] = clamp_nonbasic(j, x_[static_cast<std::size_t>(j)]);
    basis_ = std::move(new_basis);
    for (int i = 0; i < m_; ++i) where_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] = i;
  }

  double clamp_nonbasic(int j, double v) const {
    double l = lb_[static_cast<std::size_t>(j)], u = ub_[static_cast<std::size_t>(j)];
    if (std::isfinite(l) && v <= l) return l;
    if (std::isfinite(u) && v >= u) return u;
    if (std::isfinite(l)) return l;
    if (std::isfinite(u)) return u;
    return 0.0;
  }

  /// Pivot element (r, q): scale row r, clear column q elsewhere, update d.
  void eliminate(int r, int q) {
    double* pr = row_ptr(r);
    const double inv = 1.0 / pr[q];
    nz_.clear();
    for (int k = 0; k < cols_; ++k) {
      if (pr[k] != 0.0) {
        pr[k] *= inv;
        if (std::abs(pr[k]) < 1e-14) pr[k] = 0.0;
        else nz_.push_back(k);
      }
    }
    pr[q] = 1.0;
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* pi = row_ptr(i);
      const double f = pi[q];
      if (f == 0.0) continue;
      for (int k : nz_) pi[k] -= f * pr[k];
      pi[q] = 0.0;
    }
  }

  void pivot(int r, int q) {
    eliminate(r, q);
    const double f = d_[static_cast<std::size_t>(q)];
    if (f != 0.0) {
      const double* pr = row_ptr(r);
      for (int k : nz_) d_[static_cast<std::size_t>(k)] -= f * pr[k];
    }
    d_[static_cast<std::size_t>(q)] = 0.0;
    int leaving = basis_[static_cast<std::size_t>(r)];
    where_[static_cast<std::size_t>(leaving)] = -1;
    basis_[static_cast<std::size_t>(r)] = q;
    where_[static_cast<std::size_t>(q)] = r;
    ++iterations_;
    if (++pivots_since_refactor_ >= opt_.refactor_interval) {
      rebuild_tableau();
      recompute_basics();
      recompute_reduced_costs();
    }
  }

  void recompute_basics() {
    for (int i = 0; i < m_; ++i) {
      const double* pi = row_ptr(i);
      double v = 0.0;
      for (int j = 0; j < cols_; ++j) {
        if (pi[j] != 0.0 && !is_basic(j)) v -= pi[j] * x_[static_cast<std::size_t>(j)];
      }
      x_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] = v;
    }
  }

  void recompute_reduced_costs() {
    d_ = cost_;
    for (int i = 0; i < m_; ++i) {
      const double cb = cost_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])];
      if (cb == 0.0) continue;
      const double* pi = row_ptr(i);
      for (int j = 0; j < cols_; ++j) d_[static_cast<std::size_t>(j)] -= cb * pi[j];
    }
    for (int i = 0; i < m_; ++i) d_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] = 0.0;
  }

  // ---- tolerances ----------------------------------------------------------

  double ftol(double bound) const { return std::isfinite(bound) ? opt_.feasibility_tol * (1.0 + std::abs(bound)) : 0.0; }

  /// >0 below lb, <0 above ub, 0 inside (within tolerance).
  int infeasibility_sign(int j) const {
    double v = x_[static_cast<std::size_t>(j)];
    double l = lb_[static_cast<std::size_t>(j)], u = ub_[static_cast<std::size_t>(j)];
    if (v < l - ftol(l)) return 1;
    if (v > u + ftol(u)) return -1;
    return 0;
  }

  bool can_increase(int j) const {
    return x_[static_cast<std::size_t>(j)] < ub_[static_cast<std::size_t>(j)] - ftol(ub_[static_cast<std::size_t>(j)]);
  }
  bool can_decrease(int j) const {
    return x_[static_cast<std::size_t>(j)] > lb_[static_cast<std::size_t>(j)] + ftol(lb_[static_cast<std::size_t>(j)]);
  }

  // ---- primal simplex ------------------------------------------------------

  /// Entering column and direction for reduced costs `dj`; -1 when none.
  int price(const std::vector<double>& dj, bool bland, int& dir) const {
    int best = -1;
    double best_score = 0.0;
    for (int j = 0; j < cols_; ++j) {
      if (is_basic(j) || frozen_[static_cast<std::size_t>(j)]) continue;
      double dv = dj[static_cast<std::size_t>(j)];
      double score = 0.0;
      int dr = 0;
      if (dv < -opt_.optimality_tol && can_increase(j)) {
        score = -dv;
        dr = 1;
      } else if (dv > opt_.optimality_tol && can_decrease(j)) {
        score = dv;
        dr = -1;
      }
      if (dr == 0) continue;
      if (bland) {
        dir = dr;
        return j;
      }
      if (score > best_score) {
        best_score = score;
        best = j;
        dir = dr;
      }
    }
    return best;
  }

  SolveStatus primal_loop() {
    const long long start = iterations_;
    const long long budget = std::max<long long>(50LL * (m_ + cols_), 10000);
    int stall = 0;
    double last_measure = kInf;
    std::vector<double> d1(static_cast<std::size_t>(cols_));
    int cleanups = 0;
    frozen_.assign(static_cast<std::size_t>(cols_), 0);
    while (true) {
      if (iterations_ - start >= opt_.iteration_limit) return SolveStatus::IterationLimit;
      if (iterations_ - start > budget) return SolveStatus::NumericalFailure;

      // Phase selection and phase-1 costs.
      bool phase1 = false;
      double measure = 0.0;
      std::vector<std::pair<int, int>> infeasible;  // (row, sign)
      for (int i = 0; i < m_; ++i) {
        int j = basis_[static_cast<std::size_t>(i)];
        int sgn = infeasibility_sign(j);
        if (sgn != 0) {
          infeasible.emplace_back(i, sgn);
          double v = x_[static_cast<std::size_t>(j)];
          measure += sgn > 0 ? lb_[static_cast<std::size_t>(j)] - v : v - ub_[static_cast<std::size_t>(j)];
        }
      }
      const std::vector<double>* dj = &d_;
      if (!infeasible.empty()) {
        phase1 = true;
        std::fill(d1.begin(), d1.end(), 0.0);
        for (auto [i, sgn] : infeasible) {
          // phase-1 cost of a basic variable: -1 below lb, +1 above ub
          const double w = sgn > 0 ? -1.0 : 1.0;
          const double* pi = row_ptr(i);
          for (int j = 0; j < cols_; ++j) {
            if (pi[j] != 0.0) d1[static_cast<std::size_t>(j)] -= w * pi[j];
          }
        }
        for (int i = 0; i < m_; ++i) d1[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] = 0.0;
        dj = &d1;
      } else {
        measure = objective_internal();
      }

      if (measure < last_measure - 1e-12 * (1.0 + std::abs(last_measure))) {
        stall = 0;
        last_measure = measure;
      } else {
        ++stall;
      }
      const bool bland = stall > opt_.stall_limit;

      int dir = 0;
      int q = price(*dj, bland, dir);
      if (q < 0) {
        if (phase1) {
          if (pivots_since_refactor_ > 0 && cleanups++ < 3) {
            refresh();
            continue;
          }
          return SolveStatus::Infeasible;
        }
        if (pivots_since_refactor_ > 0 && cleanups++ < 3) {
          refresh();
          last_measure = kInf;
          continue;
        }
        return SolveStatus::Optimal;
      }

      // Ratio test.
      const double range = ub_[static_cast<std::size_t>(q)] - lb_[static_cast<std::size_t>(q)];
      int r = -1;
      double step = kInf;
      bool leave_at_upper = false;
      if (phase1 || bland) {
        double best_piv = 0.0;
        for (int i = 0; i < m_; ++i) {
          double a = T(i, q);
          if (std::abs(a) <= opt_.pivot_tol) continue;
          const int j = basis_[static_cast<std::size_t>(i)];
          const double rate = -a * dir;
          const double v = x_[static_cast<std::size_t>(j)];
          const int sgn = phase1 ? infeasibility_sign(j) : 0;
          double t = kInf;
          bool upper = false;
          if (sgn == 0) {
            if (rate < 0 && std::isfinite(lb_[static_cast<std::size_t>(j)])) t = std::max(0.0, v - lb_[static_cast<std::size_t>(j)]) / -rate;
            if (rate > 0 && std::isfinite(ub_[static_cast<std::size_t>(j)])) {
              t = std::max(0.0, ub_[static_cast<std::size_t>(j)] - v) / rate;
              upper = true;
            }
          } else if (sgn > 0 && rate > 0) {
            t = (lb_[static_cast<std::size_t>(j)] - v) / rate;
          } else if (sgn < 0 && rate < 0) {
            t = (v - ub_[static_cast<std::size_t>(j)]) / -rate;
            upper = true;
          }
          if (!std::isfinite(t)) continue;
          bool better = t < step - 1e-12;
          if (!better && t <= step + 1e-12) {
            better = bland ? (r < 0 || j < basis_[static_cast<std::size_t>(r)]) : std::abs(a) > best_piv;
          }
          if (better) {
            step = t;
            r = i;
            best_piv = std::abs(a);
            leave_at_upper = upper;
          }
        }
      } else {
        // Harris two-pass ratio test.
        double tmax = kInf;
        double exact = kInf;
        int exact_row = -1;
        bool exact_upper = false;
        for (int i = 0; i < m_; ++i) {
          double a = T(i, q);
          if (std::abs(a) <= opt_.pivot_tol) continue;
          const int j = basis_[static_cast<std::size_t>(i)];
          const double rate = -a * dir;
          const double v = x_[static_cast<std::size_t>(j)];
          if (rate < 0 && std::isfinite(lb_[static_cast<std::size_t>(j)])) {
            tmax = std::min(tmax, (v - lb_[static_cast<std::size_t>(j)] + ftol(lb_[static_cast<std::size_t>(j)])) / -rate);
            const double t = std::max(0.0, v - lb_[static_cast<std::size_t>(j)]) / -rate;
            if (t < exact) {
              exact = t;
              exact_row = i;
              exact_upper = false;
            }
          } else if (rate > 0 && std::isfinite(ub_[static_cast<std::size_t>(j)])) {
            tmax = std::min(tmax, (ub_[static_cast<std::size_t>(j)] - v + ftol(ub_[static_cast<std::size_t>(j)])) / rate);
            const double t = std::max(0.0, ub_[static_cast<std::size_t>(j)] - v) / rate;
            if (t < exact) {
              exact = t;
              exact_row = i;
              exact_upper = true;
            }
          }
        }
        double best_piv = 0.0;
        for (int i = 0; i < m_ && std::isfinite(tmax); ++i) {
          double a = T(i, q);
          if (std::abs(a) <= opt_.pivot_tol) continue;
          const int j = basis_[static_cast<std::size_t>(i)];
          const double rate = -a * dir;
          const double v = x_[static_cast<std::size_t>(j)];
          double t = kInf;
          bool upper = false;
          if (rate < 0 && std::isfinite(lb_[static_cast<std::size_t>(j)])) {
            t = std::max(0.0, v - lb_[static_cast<std::size_t>(j)]) / -rate;
          } else if (rate > 0 && std::isfinite(ub_[static_cast<std::size_t>(j)])) {
            t = std::max(0.0, ub_[static_cast<std::size_t>(j)] - v) / rate;
            upper = true;
          }
          if (t <= tmax && std::abs(a) > best_piv) {
            best_piv = std::abs(a);
            r = i;
            step = t;
            leave_at_upper = upper;
          }
        }
        // A bound flip must not push any basic variable past its bound; the
        // exact blocking row leaves instead.
        if (r >= 0 && exact < range && range <= step) {
          r = exact_row;
          step = exact;
          leave_at_upper = exact_upper;
        }
      }

      if (std::isfinite(range) && range <= step) {
        // Bound flip of the entering variable, no basis change.
        const double t = range;
        x_[static_cast<std::size_t>(q)] = dir > 0 ? ub_[static_cast<std::size_t>(q)] : lb_[static_cast<std::size_t>(q)];
        for (int i = 0; i < m_; ++i) {
          double a = T(i, q);
          if (a != 0.0) x_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] -= a * dir * t;
        }
        ++iterations_;
        continue;
      }
      if (r < 0) {
        if (pivots_since_refactor_ > 0 && cleanups++ < 6) {
          refresh();
          last_measure = kInf;
          continue;
        }
        if (!phase1 && std::abs(d_[static_cast<std::size_t>(q)]) <= 1e-7 * (1.0 + cost_scale_)) {
          // Noise in the reduced cost of a column with no usable pivot.
          frozen_[static_cast<std::size_t>(q)] = 1;
          continue;
        }
        if (phase1) return SolveStatus::NumericalFailure;
        return SolveStatus::Unbounded;
      }

      x_[static_cast<std::size_t>(q)] += dir * step;
      for (int i = 0; i < m_; ++i) {
        double a = T(i, q);
        if (a != 0.0) x_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] -= a * dir * step;
      }
      const int leaving = basis_[static_cast<std::size_t>(r)];
      x_[static_cast<std::size_t>(leaving)] =
          leave_at_upper ? ub_[static_cast<std::size_t>(leaving)] : lb_[static_cast<std::size_t>(leaving)];
      pivot(r, q);
    }
  }

  double objective_internal() const {
    double z = 0.0;
    for (int j = 0; j < cols_; ++j) z += cost_[static_cast<std::size_t>(j)] * x_[static_cast<std::size_t>(j)];
    return z;
  }

  /// Fresh factorization and recomputed values.
  void refresh() {
    rebuild_tableau();
    recompute_basics();
    recompute_reduced_costs();
  }

  // ---- dual simplex --------------------------------------------------------

  /// Puts each nonbasic variable on the bound its reduced cost asks for.
  bool place_nonbasics_dual_feasible() {
    for (int j = 0; j < cols_; ++j) {
      if (is_basic(j)) continue;
      const double dv = d_[static_cast<std::size_t>(j)];
      const double l = lb_[static_cast<std::size_t>(j)], u = ub_[static_cast<std::size_t>(j)];
      if (dv > opt_.optimality_tol) {
        if (!std::isfinite(l)) return false;
        x_[static_cast<std::size_t>(j)] = l;
      } else if (dv < -opt_.optimality_tol) {
        if (!std::isfinite(u)) return false;
        x_[static_cast<std::size_t>(j)] = u;
      } else {
        x_[static_cast<std::size_t>(j)] = clamp_nonbasic(j, x_[static_cast<std::size_t>(j)]);
      }
    }
    return true;
  }

  SolveStatus dual_loop() {
    const long long start = iterations_;
    const long long budget = std::max<long long>(50LL * (m_ + cols_), 10000);
    int stall = 0;
    int cleanups = 0;
    // A ray on a stale tableau is rechecked after refactoring.
    bool lost_dual = false;
    auto recheck = [&] {
      if (pivots_since_refactor_ == 0 || cleanups++ >= 3) return false;
      refresh();
      if (!place_nonbasics_dual_feasible()) {
        lost_dual = true;
        return false;
      }
      recompute_basics();
      return true;
    };
    while (true) {
      if (iterations_ - start >= opt_.iteration_limit) return SolveStatus::IterationLimit;
      if (iterations_ - start > budget) return SolveStatus::NumericalFailure;

      // Bland's rule after a run of degenerate steps: smallest infeasible
      // basic index leaves, smallest eligible index among exact ties enters.
      const bool bland = stall > opt_.stall_limit;
      int r = -1;
      double worst = 0.0;
      for (int i = 0; i < m_; ++i) {
        const int j = basis_[static_cast<std::size_t>(i)];
        const double v = x_[static_cast<std::size_t>(j)];
        const double l = lb_[static_cast<std::size_t>(j)], u = ub_[static_cast<std::size_t>(j)];
        double viol = 0.0;
        if (v < l - ftol(l)) viol = l - v;
        else if (v > u + ftol(u)) viol = v - u;
        if (viol <= 0.0) continue;
        if (bland ? (r < 0 || j < basis_[static_cast<std::size_t>(r)]) : viol > worst) {
          worst = viol;
          r = i;
        }
      }
      if (r < 0) {
        if (pivots_since_refactor_ > 0) {
          refresh();
          if (!place_nonbasics_dual_feasible()) return SolveStatus::NumericalFailure;
          recompute_basics();
          bool still = false;
          for (int i = 0; i < m_ && !still; ++i) still = infeasibility_sign(basis_[static_cast<std::size_t>(i)]) != 0;
          if (still) continue;
        }
        return SolveStatus::Optimal;
      }

      const int leaving = basis_[static_cast<std::size_t>(r)];
      const double v = x_[static_cast<std::size_t>(leaving)];
      const bool to_lower = v < lb_[static_cast<std::size_t>(leaving)];
      const double target = to_lower ? lb_[static_cast<std::size_t>(leaving)] : ub_[static_cast<std::size_t>(leaving)];
      const double delta = to_lower ? 1.0 : -1.0;

      // Harris two-pass dual ratio test.
      double tmax = kInf;
      const double* pr = row_ptr(r);
      auto eligible = [&](int j, double& ratio_tol, double& ratio) -> bool {
        const double a = pr[j];
        if (std::abs(a) <= opt_.pivot_tol || is_basic(j)) return false;
        const double l = lb_[static_cast<std::size_t>(j)], u = ub_[static_cast<std::size_t>(j)];
        if (l == u) return false;
        const double dv = d_[static_cast<std::size_t>(j)];
        const bool inc = a * delta < 0;  // x_j must increase
        if (inc && !(x_[static_cast<std::size_t>(j)] < u)) return false;
        if (!inc && !(x_[static_cast<std::size_t>(j)] > l)) return false;
        const double dd = inc ? dv : -dv;  // nonnegative when dual feasible
        ratio = std::max(0.0, dd) / std::abs(a);
        ratio_tol = (std::max(0.0, dd) + opt_.optimality_tol) / std::abs(a);
        return true;
      };
      for (int j = 0; j < cols_; ++j) {
        double rt = 0.0, ra = 0.0;
        if (eligible(j, rt, ra)) tmax = std::min(tmax, rt);
      }
      if (!std::isfinite(tmax)) {
        if (recheck()) continue;
        return lost_dual ? SolveStatus::NumericalFailure : SolveStatus::Infeasible;
      }
      int q = -1;
      double best_piv = 0.0;
      if (bland) {
        double tmin = kInf;
        for (int j = 0; j < cols_; ++j) {
          double rt = 0.0, ra = 0.0;
          if (eligible(j, rt, ra) && ra < tmin) tmin = ra;
        }
        for (int j = 0; j < cols_ && q < 0; ++j) {
          double rt = 0.0, ra = 0.0;
          if (eligible(j, rt, ra) && ra <= tmin) q = j;
        }
      } else {
        for (int j = 0; j < cols_; ++j) {
          double rt = 0.0, ra = 0.0;
          if (!eligible(j, rt, ra)) continue;
          if (ra <= tmax && std::abs(pr[j]) > best_piv) {
            best_piv = std::abs(pr[j]);
            q = j;
          }
        }
      }
      if (q < 0) {
        if (recheck()) continue;
        return lost_dual ? SolveStatus::NumericalFailure : SolveStatus::Infeasible;
      }
      {
        double rt = 0.0, ra = 0.0;
        eligible(q, rt, ra);
        stall = ra > opt_.optimality_tol ? 0 : stall + 1;
      }

      const double step = -(target - v) / pr[q];
      x_[static_cast<std::size_t>(q)] += step;
      for (int i = 0; i < m_; ++i) {
        const double a = T(i, q);
        if (a != 0.0) x_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] -= a * step;
      }
      x_[static_cast<std::size_t>(leaving)] = target;
      pivot(r, q);
    }
  }

  SimplexOptions opt_;
  int m_ = 0, n_ = 0, cols_ = 0;
  bool maximize_ = false;
  double offset_ = 0.0;
  double cost_scale_ = 0.0;
  std::vector<char> frozen_;
  std::vector<int> col_start_, col_row_;
  std::vector<double> col_val_;
  std::vector<double> lb_, ub_, cost_, x_, d_;
  std::vector<double> tab_;
  std::vector<int> basis_, where_;
  std::vector<int> nz_;
  long long iterations_ = 0;
  long long refactors_ = 0;
  int pivots_since_refactor_ = 0;
  bool singular_repair_ = false;
};

}  // namespace ncswitch::mp
