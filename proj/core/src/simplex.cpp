// Copyright 2026 The evsl Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "evsl/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace evsl {

namespace {
constexpr double kDrop = 1e-14;    // magnitudes below this are treated as zero
constexpr long kStallLimit = 4000; // iterations without progress before Bland
}  // namespace

// ---------------------------------------------------------------------------
// Sparse LU of the basis: left-looking Gilbert-Peierls with partial pivoting.
// L is unit lower triangular (diagonal implicit), stored by factor position
// with original row indices; U is stored by factor position with factor-
// position row indices and the diagonal kept separately.
// ---------------------------------------------------------------------------

struct SimplexSolver::Lu {
  int m = 0;
  std::vector<int> lptr, lrow;
  std::vector<double> lval;
  std::vector<int> uptr, urow;
  std::vector<double> uval;
  std::vector<double> udiag;
  std::vector<int> p;     // factor position -> original row
  std::vector<int> pinv;  // original row -> factor position (-1 = unpivoted)
  std::vector<int> q;     // factor position -> basis position

  // Workspaces for the factorization.
  std::vector<double> xw;
  std::vector<int> xmark, nodemark, nstack, estack, topo, touch;
  int stamp = 0;

  void reset(int rows) {
    m = rows;
    lptr.assign(1, 0);
    lrow.clear();
    lval.clear();
    uptr.assign(1, 0);
    urow.clear();
    uval.clear();
    udiag.assign(m, 0.0);
    p.assign(m, -1);
    pinv.assign(m, -1);
    q.assign(m, -1);
    xw.assign(m, 0.0);
    xmark.assign(m, -1);
    nodemark.assign(m, -1);
    nstack.assign(m, 0);
    estack.assign(m, 0);
    topo.clear();
    touch.clear();
    stamp = 0;
  }

  // Depth-first search over already-pivoted nodes reachable from `start`,
  // appending finished nodes to `topo` (postorder).
  void dfs(int start) {
    int head = 0;
    nstack[0] = start;
    nodemark[start] = stamp;
    estack[0] = lptr[start];
    while (head >= 0) {
      const int t = nstack[head];
      bool descended = false;
      for (int e = estack[head]; e < lptr[t + 1]; ++e) {
        const int s = pinv[lrow[e]];
        if (s >= 0 && nodemark[s] != stamp) {
          estack[head] = e + 1;
          nodemark[s] = stamp;
          ++head;
          nstack[head] = s;
          estack[head] = lptr[s];
          descended = true;
          break;
        }
      }
      if (!descended) {
        topo.push_back(t);
        --head;
      }
    }
  }

  // Factorizes the basis whose column at basis position `order[k]` is fetched
  // by get_col. Returns the basis positions whose columns could not be
  // pivoted (empty on success).
  template <typename ColFn>
  std::vector<int> factorize(const std::vector<int>& order, ColFn&& get_col,
                             double pivot_tol) {
    reset(static_cast<int>(order.size()));
    std::vector<int> skipped;
    std::vector<int> cidx;
    std::vector<double> cval;
    int placed = 0;
    for (int k = 0; k < m; ++k) {
      ++stamp;
      topo.clear();
      touch.clear();
      cidx.clear();
      cval.clear();
      get_col(order[k], &cidx, &cval);
      // Scatter the column and collect the reach of pivoted rows.
      for (std::size_t e = 0; e < cidx.size(); ++e) {
        const int r = cidx[e];
        xw[r] = cval[e];
        xmark[r] = stamp;
        touch.push_back(r);
        const int t = pinv[r];
        if (t >= 0 && nodemark[t] != stamp) dfs(t);
      }
      // Sparse lower triangular solve in topological order.
      for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        const int t = *it;
        const int rt = p[t];
        if (xmark[rt] != stamp) continue;
        const double zt = xw[rt];
        if (zt == 0.0) continue;
        for (int e = lptr[t]; e < lptr[t + 1]; ++e) {
          const int r = lrow[e];
          if (xmark[r] != stamp) {
            xmark[r] = stamp;
            xw[r] = 0.0;
            touch.push_back(r);
          }
          xw[r] -= lval[e] * zt;
        }
      }
      // Partial pivoting: largest magnitude among unpivoted rows.
      int rpiv = -1;
      double best = 0.0;
      for (const int r : touch) {
        if (pinv[r] >= 0) continue;
        const double a = std::abs(xw[r]);
        if (a > best) {
          best = a;
          rpiv = r;
        }
      }
      if (rpiv < 0 || best < pivot_tol) {
        skipped.push_back(order[k]);
        continue;
      }
      const int kk = placed++;
      p[kk] = rpiv;
      pinv[rpiv] = kk;
      q[kk] = order[k];
      udiag[kk] = xw[rpiv];
      for (const int r : touch) {
        const double v = xw[r];
        if (r == rpiv || std::abs(v) <= kDrop) continue;
        const int t = pinv[r];
        if (t >= 0 && t != kk) {
          urow.push_back(t);
          uval.push_back(v);
        } else if (t < 0) {
          lrow.push_back(r);
          lval.push_back(v / udiag[kk]);
        }
      }
      uptr.push_back(static_cast<int>(urow.size()));
      lptr.push_back(static_cast<int>(lrow.size()));
    }
    if (!skipped.empty()) {
      // Compact factor positions so solves can still run after repair: the
      // caller refactorizes anyway, so just report the failures.
      return skipped;
    }
    return skipped;
  }

  // Solves B x = b. Input in original-row space, output in basis-position
  // space (component j multiplies the column at basis position j).
  void fsolve(std::vector<double>* x, std::vector<double>* tmp) const {
    std::vector<double>& z = *x;
    for (int t = 0; t < m; ++t) {
      const double zt = z[p[t]];
      if (zt == 0.0) continue;
      for (int e = lptr[t]; e < lptr[t + 1]; ++e) z[lrow[e]] -= lval[e] * zt;
    }
    std::vector<double>& out = *tmp;
    for (int t = m - 1; t >= 0; --t) {
      const double v = z[p[t]] / udiag[t];
      out[q[t]] = v;
      if (v == 0.0) continue;
      for (int e = uptr[t]; e < uptr[t + 1]; ++e) z[p[urow[e]]] -= uval[e] * v;
    }
    x->swap(*tmp);
  }

  // Solves B^T y = c. Input in basis-position space, output in original-row
  // space.
  void btsolve(std::vector<double>* y, std::vector<double>* tmp) const {
    std::vector<double>& w = *tmp;
    for (int t = 0; t < m; ++t) w[t] = (*y)[q[t]];
    for (int t = 0; t < m; ++t) {
      double s = w[t];
      for (int e = uptr[t]; e < uptr[t + 1]; ++e) s -= uval[e] * w[urow[e]];
      w[t] = s / udiag[t];
    }
    for (int t = m - 1; t >= 0; --t) {
      double s = w[t];
      for (int e = lptr[t]; e < lptr[t + 1]; ++e)
        s -= lval[e] * w[pinv[lrow[e]]];
      w[t] = s;
    }
    for (int t = 0; t < m; ++t) (*y)[p[t]] = w[t];
  }
};

// ---------------------------------------------------------------------------
// Model compilation.
// ---------------------------------------------------------------------------

SimplexSolver::SimplexSolver(const MilpModel& model, LpOptions opts)
    : model_(&model), opts_(opts) {
  const int n = model.num_variables();
  m_ = model.num_constraints();
  model2act_.assign(n, -1);
  obj_fixed_ = model.objective_offset();
  for (int j = 0; j < n; ++j) {
    const Variable& v = model.variable(j);
    if (v.lb > v.ub)
      throw std::invalid_argument("empty domain on variable " + v.name);
    if (v.lb == v.ub) {
      obj_fixed_ += v.obj * v.lb;
      continue;
    }
    model2act_[j] = static_cast<int>(act2model_.size());
    act2model_.push_back(j);
  }
  n_act_ = static_cast<int>(act2model_.size());

  rhs_.assign(m_, 0.0);
  std::vector<int> count(n_act_, 0);
  for (int i = 0; i < m_; ++i) {
    const LinearConstraint& c = model.constraint(i);
    rhs_[i] = c.rhs;
    for (const LinearTerm& t : c.terms) {
      const int a = model2act_[t.var];
      if (a < 0)
        rhs_[i] -= t.coef * model.variable(t.var).lb;
      else if (t.coef != 0.0)
        ++count[a];
    }
  }
  acol_ptr_.assign(n_act_ + 1, 0);
  for (int a = 0; a < n_act_; ++a) acol_ptr_[a + 1] = acol_ptr_[a] + count[a];
  acol_idx_.assign(acol_ptr_[n_act_], 0);
  acol_val_.assign(acol_ptr_[n_act_], 0.0);
  std::vector<int> cursor(acol_ptr_.begin(), acol_ptr_.end() - 1);
  for (int i = 0; i < m_; ++i) {
    for (const LinearTerm& t : model.constraint(i).terms) {
      const int a = model2act_[t.var];
      if (a < 0 || t.coef == 0.0) continue;
      acol_idx_[cursor[a]] = i;
      acol_val_[cursor[a]] = t.coef;
      ++cursor[a];
    }
  }

  const int nc = ncols();
  lb_.assign(nc, 0.0);
  ub_.assign(nc, 0.0);
  cost_.assign(nc, 0.0);
  for (int a = 0; a < n_act_; ++a) {
    const Variable& v = model.variable(act2model_[a]);
    lb_[a] = v.lb;
    ub_[a] = v.ub;
    cost_[a] = v.obj;
  }
  for (int i = 0; i < m_; ++i) {
    const int col = n_act_ + i;
    switch (model.constraint(i).sense) {
      case RowSense::kLe:
        lb_[col] = 0.0;
        ub_[col] = kInfinity;
        break;
      case RowSense::kGe:
        lb_[col] = -kInfinity;
        ub_[col] = 0.0;
        break;
      case RowSense::kEq:
        lb_[col] = 0.0;
        ub_[col] = 0.0;
        break;
    }
  }
  lb0_ = lb_;
  ub0_ = ub_;

  basic_.assign(m_, -1);
  status_.assign(nc, ColStatus::kAtLower);
  xval_.assign(nc, 0.0);
  dual_.assign(m_, 0.0);
  redcost_.assign(nc, 0.0);
  cb_.assign(m_, 0.0);
  w_.assign(m_, 0.0);
  rho_.assign(m_, 0.0);
  rhs_work_.assign(m_, 0.0);
  work2_.assign(m_, 0.0);
  cost1_.assign(nc, 0.0);
  x_model_.assign(n, 0.0);
  lu_ = std::make_unique<Lu>();
}

SimplexSolver::~SimplexSolver() = default;

void SimplexSolver::set_bounds(int model_var, double lb, double ub) {
  const int a = model2act_.at(model_var);
  if (a < 0) {
    const Variable& v = model_->variable(model_var);
    if (lb <= v.lb && ub >= v.ub) return;  // no-op on a folded variable
    throw std::logic_error("cannot tighten a variable fixed at build time: " +
                           v.name);
  }
  if (lb > ub) throw std::invalid_argument("set_bounds: lb > ub");
  lb_[a] = lb;
  ub_[a] = ub;
}

void SimplexSolver::reset_bounds() {
  lb_ = lb0_;
  ub_ = ub0_;
}

// ---------------------------------------------------------------------------
// Column access helpers.
// ---------------------------------------------------------------------------

double SimplexSolver::col_dot(int col, const std::vector<double>& y) const {
  if (col >= n_act_) return y[col - n_act_];
  double s = 0.0;
  for (int e = acol_ptr_[col]; e < acol_ptr_[col + 1]; ++e)
    s += acol_val_[e] * y[acol_idx_[e]];
  return s;
}

void SimplexSolver::col_scatter(int col, double mult,
                                std::vector<double>* out) const {
  if (col >= n_act_) {
    (*out)[col - n_act_] += mult;
    return;
  }
  for (int e = acol_ptr_[col]; e < acol_ptr_[col + 1]; ++e)
    (*out)[acol_idx_[e]] += mult * acol_val_[e];
}

double SimplexSolver::nonbasic_value(int col) const {
  switch (status_[col]) {
    case ColStatus::kAtLower:
      return lb_[col];
    case ColStatus::kAtUpper:
      return ub_[col];
    case ColStatus::kFree:
      return 0.0;
    case ColStatus::kBasic:
      break;
  }
  return xval_[col];
}

void SimplexSolver::align_nonbasic_values() {
  for (int col = 0; col < ncols(); ++col) {
    if (status_[col] == ColStatus::kBasic) continue;
    // Bound changes may have invalidated the stored side.
    if (status_[col] == ColStatus::kAtLower && lb_[col] == -kInfinity)
      status_[col] = ub_[col] < kInfinity ? ColStatus::kAtUpper
                                          : ColStatus::kFree;
    else if (status_[col] == ColStatus::kAtUpper && ub_[col] == kInfinity)
      status_[col] = lb_[col] > -kInfinity ? ColStatus::kAtLower
                                           : ColStatus::kFree;
    else if (status_[col] == ColStatus::kFree && lb_[col] > -kInfinity)
      status_[col] = ColStatus::kAtLower;
    else if (status_[col] == ColStatus::kFree && ub_[col] < kInfinity)
      status_[col] = ColStatus::kAtUpper;
    xval_[col] = nonbasic_value(col);
  }
}

// ---------------------------------------------------------------------------
// Factorization and solves.
// ---------------------------------------------------------------------------

bool SimplexSolver::factorize() {
  std::vector<int> order(m_);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const int ca = basic_[a];
    const int cb = basic_[b];
    const int na = ca >= n_act_ ? 1 : acol_ptr_[ca + 1] - acol_ptr_[ca];
    const int nb = cb >= n_act_ ? 1 : acol_ptr_[cb + 1] - acol_ptr_[cb];
    return na < nb;
  });
  auto get_col = [&](int pos, std::vector<int>* idx, std::vector<double>* val) {
    const int col = basic_[pos];
    if (col >= n_act_) {
      idx->push_back(col - n_act_);
      val->push_back(1.0);
      return;
    }
    for (int e = acol_ptr_[col]; e < acol_ptr_[col + 1]; ++e) {
      idx->push_back(acol_idx_[e]);
      val->push_back(acol_val_[e]);
    }
  };
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::vector<int> skipped = lu_->factorize(order, get_col, opts_.pivot_tol);
    if (skipped.empty()) {
      etas_.clear();
      pivots_since_refactor_ = 0;
      return true;
    }
    // Repair a numerically singular basis: kick each unfactorable column out
    // in favor of the logical of a still-unpivoted row.
    std::vector<bool> in_basis(ncols(), false);
    for (int pos = 0; pos < m_; ++pos) in_basis[basic_[pos]] = true;
    std::vector<int> spare_rows;
    for (int r = 0; r < m_; ++r)
      if (lu_->pinv[r] < 0 && !in_basis[n_act_ + r]) spare_rows.push_back(r);
    if (spare_rows.size() < skipped.size()) return false;
    std::size_t next = 0;
    for (const int pos : skipped) {
      const int col = basic_[pos];
      const int r = spare_rows[next++];
      status_[col] = lb_[col] > -kInfinity ? ColStatus::kAtLower
                     : ub_[col] < kInfinity ? ColStatus::kAtUpper
                                            : ColStatus::kFree;
      xval_[col] = nonbasic_value(col);
      basic_[pos] = n_act_ + r;
      status_[n_act_ + r] = ColStatus::kBasic;
    }
  }
  return false;
}

bool SimplexSolver::factorize_and_recompute() {
  if (!factorize()) return false;
  compute_basic_values();
  return true;
}

void SimplexSolver::ftran(std::vector<double>* x) const {
  lu_->fsolve(x, &work2_);
  for (const Eta& eta : etas_) {
    std::vector<double>& v = *x;
    const double t = v[eta.pos] / eta.pivot;
    if (t != 0.0) {
      for (std::size_t k = 0; k < eta.idx.size(); ++k)
        v[eta.idx[k]] -= eta.val[k] * t;
    }
    v[eta.pos] = t;
  }
}

void SimplexSolver::btran(std::vector<double>* y) const {
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    std::vector<double>& v = *y;
    double s = v[it->pos];
    for (std::size_t k = 0; k < it->idx.size(); ++k)
      s -= it->val[k] * v[it->idx[k]];
    v[it->pos] = s / it->pivot;
  }
  lu_->btsolve(y, &work2_);
}

void SimplexSolver::compute_basic_values() {
  rhs_work_ = rhs_;
  for (int col = 0; col < ncols(); ++col) {
    if (status_[col] == ColStatus::kBasic) continue;
    const double v = xval_[col];
    if (v != 0.0) col_scatter(col, -v, &rhs_work_);
  }
  ftran(&rhs_work_);
  for (int j = 0; j < m_; ++j) xval_[basic_[j]] = rhs_work_[j];
}

void SimplexSolver::compute_reduced_costs(const std::vector<double>& cost) {
  for (int j = 0; j < m_; ++j) cb_[j] = cost[basic_[j]];
  dual_ = cb_;
  btran(&dual_);
  for (int col = 0; col < ncols(); ++col) {
    redcost_[col] = status_[col] == ColStatus::kBasic
                        ? 0.0
                        : cost[col] - col_dot(col, dual_);
  }
}

double SimplexSolver::max_primal_violation(int* pos) const {
  double worst = 0.0;
  if (pos) *pos = -1;
  for (int j = 0; j < m_; ++j) {
    const int col = basic_[j];
    const double x = xval_[col];
    const double v = std::max(lb_[col] - x, x - ub_[col]);
    if (v > worst) {
      worst = v;
      if (pos) *pos = j;
    }
  }
  return worst;
}

double SimplexSolver::total_primal_violation() const {
  double s = 0.0;
  for (int j = 0; j < m_; ++j) {
    const int col = basic_[j];
    const double x = xval_[col];
    s += std::max(0.0, lb_[col] - x) + std::max(0.0, x - ub_[col]);
  }
  return s;
}

void SimplexSolver::build_phase1_cost(std::vector<double>* cost) const {
  std::fill(cost->begin(), cost->end(), 0.0);
  for (int j = 0; j < m_; ++j) {
    const int col = basic_[j];
    const double x = xval_[col];
    if (x < lb_[col] - opts_.feas_tol)
      (*cost)[col] = -1.0;
    else if (x > ub_[col] + opts_.feas_tol)
      (*cost)[col] = 1.0;
  }
}

// ---------------------------------------------------------------------------
// Pivoting.
// ---------------------------------------------------------------------------

void SimplexSolver::apply_pivot(int entering, int leave_pos, double theta,
                                int dir, double leave_val,
                                ColStatus leave_status) {
  if (theta != 0.0) {
    for (int j = 0; j < m_; ++j) {
      const double wj = w_[j];
      if (wj != 0.0) xval_[basic_[j]] -= dir * theta * wj;
    }
    xval_[entering] += dir * theta;
  }
  const int leave_col = basic_[leave_pos];
  xval_[leave_col] = leave_val;
  status_[leave_col] = leave_status;
  basic_[leave_pos] = entering;
  status_[entering] = ColStatus::kBasic;

  Eta eta;
  eta.pos = leave_pos;
  eta.pivot = w_[leave_pos];
  for (int j = 0; j < m_; ++j) {
    if (j == leave_pos || std::abs(w_[j]) <= kDrop) continue;
    eta.idx.push_back(j);
    eta.val.push_back(w_[j]);
  }
  etas_.push_back(std::move(eta));
  ++pivots_since_refactor_;
}

int SimplexSolver::pick_entering(const std::vector<double>& cost) const {
  (void)cost;
  int best = -1;
  double best_score = opts_.dual_tol;
  for (int col = 0; col < ncols(); ++col) {
    if (status_[col] == ColStatus::kBasic || lb_[col] == ub_[col]) continue;
    const double d = redcost_[col];
    double score = 0.0;
    switch (status_[col]) {
      case ColStatus::kAtLower:
        score = -d;
        break;
      case ColStatus::kAtUpper:
        score = d;
        break;
      case ColStatus::kFree:
        score = std::abs(d);
        break;
      case ColStatus::kBasic:
        break;
    }
    if (score > best_score) {
      if (bland_now_) return col;  // lowest eligible index
      best_score = score;
      best = col;
    } else if (bland_now_ && score > opts_.dual_tol) {
      return col;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Primal simplex (shared by phase 1 and phase 2).
// ---------------------------------------------------------------------------

LpStatus SimplexSolver::primal_loop(bool phase1, long* iters) {
  long stall = 0;
  double best_metric = std::numeric_limits<double>::infinity();
  for (;;) {
    if (*iters >= opts_.iter_limit) return LpStatus::kIterLimit;
    if (pivots_since_refactor_ >= opts_.refactor_interval ||
        static_cast<int>(etas_.size()) >= opts_.refactor_interval) {
      if (!factorize_and_recompute()) return LpStatus::kNumericalBreakdown;
    }

    const std::vector<double>* cost = &cost_;
    double metric;
    if (phase1) {
      metric = total_primal_violation();
      if (max_primal_violation(nullptr) <= opts_.feas_tol)
        return LpStatus::kOptimal;
      build_phase1_cost(&cost1_);
      cost = &cost1_;
    } else {
      metric = 0.0;
      for (int col = 0; col < ncols(); ++col) metric += cost_[col] * xval_[col];
    }
    if (metric < best_metric - 1e-10) {
      best_metric = metric;
      stall = 0;
    } else if (++stall > kStallLimit) {
      bland_now_ = true;
    }

    compute_reduced_costs(*cost);
    const int q = pick_entering(*cost);
    if (q < 0) return LpStatus::kOptimal;

    const int dir = (status_[q] == ColStatus::kAtLower ||
                     (status_[q] == ColStatus::kFree && redcost_[q] < 0.0))
                        ? 1
                        : -1;
    std::fill(w_.begin(), w_.end(), 0.0);
    col_scatter(q, 1.0, &w_);
    ftran(&w_);

    // Ratio test. Infeasible basics (phase 1) block when they reach the bound
    // they violate; feasible basics block at their finite bounds.
    const double span = ub_[q] - lb_[q];  // bound-flip step
    double relaxed_min = span;
    const double ftol = opts_.feas_tol;
    // Pass 1: relaxed minimum ratio (Harris).
    for (int j = 0; j < m_; ++j) {
      const double wj = w_[j];
      if (std::abs(wj) <= opts_.pivot_tol) continue;
      const int col = basic_[j];
      const double delta = -dir * wj;
      const double x = xval_[col];
      double bound;
      if (x < lb_[col] - ftol) {
        if (delta <= 0.0) continue;
        bound = lb_[col];
      } else if (x > ub_[col] + ftol) {
        if (delta >= 0.0) continue;
        bound = ub_[col];
      } else if (delta > 0.0) {
        if (ub_[col] >= kInfinity) continue;
        bound = ub_[col];
      } else {
        if (lb_[col] <= -kInfinity) continue;
        bound = lb_[col];
      }
      const double ratio = (bound - x) / delta;
      const double relaxed = ratio + ftol / std::abs(delta);
      relaxed_min = std::min(relaxed_min, relaxed);
    }
    // Pass 2: among blockers within the relaxed minimum pick the largest
    // pivot (Bland: the lowest column index at the exact minimum).
    int leave_pos = -1;
    double theta = relaxed_min;
    double leave_bound = 0.0;
    double best_piv = 0.0;
    double exact_min = std::numeric_limits<double>::infinity();
    for (int j = 0; j < m_; ++j) {
      const double wj = w_[j];
      if (std::abs(wj) <= opts_.pivot_tol) continue;
      const int col = basic_[j];
      const double delta = -dir * wj;
      const double x = xval_[col];
      double bound;
      if (x < lb_[col] - ftol) {
        if (delta <= 0.0) continue;
        bound = lb_[col];
      } else if (x > ub_[col] + ftol) {
        if (delta >= 0.0) continue;
        bound = ub_[col];
      } else if (delta > 0.0) {
        if (ub_[col] >= kInfinity) continue;
        bound = ub_[col];
      } else {
        if (lb_[col] <= -kInfinity) continue;
        bound = lb_[col];
      }
      const double ratio = (bound - x) / delta;
      if (bland_now_) {
        if (ratio < exact_min - 1e-12 ||
            (ratio <= exact_min + 1e-12 &&
             (leave_pos < 0 || col < basic_[leave_pos]))) {
          exact_min = std::min(exact_min, ratio);
          leave_pos = j;
          theta = ratio;
          leave_bound = bound;
        }
      } else if (ratio <= relaxed_min && std::abs(wj) > best_piv) {
        best_piv = std::abs(wj);
        leave_pos = j;
        theta = ratio;
        leave_bound = bound;
      }
    }

    if (leave_pos < 0) {
      if (span < kInfinity) {
        // Bound flip: the entering variable runs to its opposite bound.
        for (int j = 0; j < m_; ++j) {
          const double wj = w_[j];
          if (wj != 0.0) xval_[basic_[j]] -= dir * span * wj;
        }
        status_[q] = dir > 0 ? ColStatus::kAtUpper : ColStatus::kAtLower;
        xval_[q] = dir > 0 ? ub_[q] : lb_[q];
        ++*iters;
        ++total_iters_;
        continue;
      }
      // Never declare a ray off accumulated eta updates: the transformed
      // column may have decayed to noise. Refresh the factors and re-derive.
      if (!etas_.empty()) {
        if (!factorize_and_recompute()) return LpStatus::kNumericalBreakdown;
        continue;
      }
      return phase1 ? LpStatus::kNumericalBreakdown : LpStatus::kUnbounded;
    }
    if (span < theta) {
      // The bound flip binds before any basic blocks.
      for (int j = 0; j < m_; ++j) {
        const double wj = w_[j];
        if (wj != 0.0) xval_[basic_[j]] -= dir * span * wj;
      }
      status_[q] = dir > 0 ? ColStatus::kAtUpper : ColStatus::kAtLower;
      xval_[q] = dir > 0 ? ub_[q] : lb_[q];
      ++*iters;
      ++total_iters_;
      continue;
    }
    theta = std::max(theta, 0.0);
    if (std::abs(w_[leave_pos]) < opts_.pivot_tol)
      return LpStatus::kNumericalBreakdown;
    const int leave_col = basic_[leave_pos];
    const ColStatus leave_status = leave_bound == lb_[leave_col]
                                       ? ColStatus::kAtLower
                                       : ColStatus::kAtUpper;
    apply_pivot(q, leave_pos, theta, dir, leave_bound, leave_status);
    ++*iters;
    ++total_iters_;
  }
}

LpStatus SimplexSolver::primal_pair(long* iters) {
  if (max_primal_violation(nullptr) > opts_.feas_tol) {
    const LpStatus st = primal_loop(true, iters);
    if (st != LpStatus::kOptimal) return st;
    if (max_primal_violation(nullptr) > opts_.feas_tol)
      return LpStatus::kInfeasible;
  }
  return primal_loop(false, iters);
}

// ---------------------------------------------------------------------------
// Dual simplex.
// ---------------------------------------------------------------------------

bool SimplexSolver::dual_feasible_now() const {
  const double tol = 1e-7;
  for (int col = 0; col < ncols(); ++col) {
    if (status_[col] == ColStatus::kBasic || lb_[col] == ub_[col]) continue;
    const double d = redcost_[col];
    switch (status_[col]) {
      case ColStatus::kAtLower:
        if (d < -tol) return false;
        break;
      case ColStatus::kAtUpper:
        if (d > tol) return false;
        break;
      case ColStatus::kFree:
        if (std::abs(d) > tol) return false;
        break;
      case ColStatus::kBasic:
        break;
    }
  }
  return true;
}

LpStatus SimplexSolver::dual_loop(long* iters) {
  long stall = 0;
  double best_viol = std::numeric_limits<double>::infinity();
  for (;;) {
    if (*iters >= opts_.iter_limit) return LpStatus::kIterLimit;
    if (pivots_since_refactor_ >= opts_.refactor_interval ||
        static_cast<int>(etas_.size()) >= opts_.refactor_interval) {
      if (!factorize_and_recompute()) return LpStatus::kNumericalBreakdown;
    }
    int r_pos = -1;
    const double viol = max_primal_violation(&r_pos);
    if (viol <= opts_.feas_tol) return LpStatus::kOptimal;
    if (viol < best_viol - 1e-10) {
      best_viol = viol;
      stall = 0;
    } else if (++stall > kStallLimit) {
      return LpStatus::kIterLimit;  // caller falls back to the primal
    }

    compute_reduced_costs(cost_);
    const int leave_col = basic_[r_pos];
    const bool below = xval_[leave_col] < lb_[leave_col];
    const double sigma = below ? -1.0 : 1.0;
    const double target = below ? lb_[leave_col] : ub_[leave_col];

    std::fill(rho_.begin(), rho_.end(), 0.0);
    rho_[r_pos] = 1.0;
    btran(&rho_);

    // Dual ratio test with a Harris-style relaxed first pass.
    double relaxed_min = std::numeric_limits<double>::infinity();
    bool any = false;
    for (int col = 0; col < ncols(); ++col) {
      if (status_[col] == ColStatus::kBasic || lb_[col] == ub_[col]) continue;
      const double alpha = col_dot(col, rho_);
      if (std::abs(alpha) <= opts_.pivot_tol) continue;
      const bool ok = status_[col] == ColStatus::kFree ||
                      (status_[col] == ColStatus::kAtLower
                           ? sigma * alpha > 0.0
                           : sigma * alpha < 0.0);
      if (!ok) continue;
      any = true;
      const double relaxed =
          (std::abs(redcost_[col]) + opts_.dual_tol) / std::abs(alpha);
      relaxed_min = std::min(relaxed_min, relaxed);
    }
    if (!any) {
      // Same caution as the primal ray test: an infeasibility verdict is
      // only trusted when derived from a fresh factorization.
      if (!etas_.empty()) {
        if (!factorize_and_recompute()) return LpStatus::kNumericalBreakdown;
        continue;
      }
      return LpStatus::kInfeasible;
    }

    int q = -1;
    double alpha_q = 0.0;
    double best_piv = 0.0;
    for (int col = 0; col < ncols(); ++col) {
      if (status_[col] == ColStatus::kBasic || lb_[col] == ub_[col]) continue;
      const double alpha = col_dot(col, rho_);
      if (std::abs(alpha) <= opts_.pivot_tol) continue;
      const bool ok = status_[col] == ColStatus::kFree ||
                      (status_[col] == ColStatus::kAtLower
                           ? sigma * alpha > 0.0
                           : sigma * alpha < 0.0);
      if (!ok) continue;
      const double ratio = std::abs(redcost_[col]) / std::abs(alpha);
      if (ratio <= relaxed_min && std::abs(alpha) > best_piv) {
        best_piv = std::abs(alpha);
        q = col;
        alpha_q = alpha;
      }
    }
    if (q < 0) return LpStatus::kNumericalBreakdown;

    std::fill(w_.begin(), w_.end(), 0.0);
    col_scatter(q, 1.0, &w_);
    ftran(&w_);
    const double piv = w_[r_pos];
    if (std::abs(piv) < opts_.pivot_tol ||
        std::abs(piv - alpha_q) > 1e-5 * (1.0 + std::abs(alpha_q))) {
      // The transformed column disagrees with the row: refresh and retry once.
      if (!factorize_and_recompute()) return LpStatus::kNumericalBreakdown;
      continue;
    }

    const double delta_r = target - xval_[leave_col];
    int dir;
    if (status_[q] == ColStatus::kAtLower)
      dir = 1;
    else if (status_[q] == ColStatus::kAtUpper)
      dir = -1;
    else
      dir = (delta_r > 0.0) == (piv < 0.0) ? 1 : -1;
    const double rate = -dir * piv;
    double theta = delta_r / rate;
    theta = std::max(theta, 0.0);

    apply_pivot(q, r_pos, theta, dir, target,
                below ? ColStatus::kAtLower : ColStatus::kAtUpper);
    ++*iters;
    ++total_iters_;
  }
}

// ---------------------------------------------------------------------------
// Drivers.
// ---------------------------------------------------------------------------

bool SimplexSolver::place_nonbasic_dual_feasible() {
  for (int col = 0; col < ncols(); ++col) {
    if (status_[col] == ColStatus::kBasic) continue;
    const double c = cost_[col];
    const bool has_lb = lb_[col] > -kInfinity;
    const bool has_ub = ub_[col] < kInfinity;
    if (c > opts_.dual_tol) {
      if (!has_lb) return false;
      status_[col] = ColStatus::kAtLower;
    } else if (c < -opts_.dual_tol) {
      if (!has_ub) return false;
      status_[col] = ColStatus::kAtUpper;
    } else {
      status_[col] = has_lb   ? ColStatus::kAtLower
                     : has_ub ? ColStatus::kAtUpper
                              : ColStatus::kFree;
    }
  }
  return true;
}

LpResult SimplexSolver::solve_attempt(bool force_bland) {
  bland_now_ = force_bland || opts_.bland;
  etas_.clear();
  pivots_since_refactor_ = 0;
  for (int col = 0; col < ncols(); ++col) {
    const bool has_lb = lb_[col] > -kInfinity;
    const bool has_ub = ub_[col] < kInfinity;
    status_[col] = has_lb   ? ColStatus::kAtLower
                   : has_ub ? ColStatus::kAtUpper
                            : ColStatus::kFree;
  }
  for (int i = 0; i < m_; ++i) basic_[i] = n_act_ + i;
  const bool dual_ok = place_nonbasic_dual_feasible();
  for (int i = 0; i < m_; ++i) status_[n_act_ + i] = ColStatus::kBasic;
  if (!factorize()) return LpResult{LpStatus::kNumericalBreakdown, 0.0, 0};
  align_nonbasic_values();
  compute_basic_values();
  basis_valid_ = true;

  long iters = 0;
  LpStatus st;
  if (dual_ok) {
    st = dual_loop(&iters);
    if (st != LpStatus::kOptimal && st != LpStatus::kInfeasible)
      st = primal_pair(&iters);
  } else {
    st = primal_pair(&iters);
  }
  return finish(st, iters);
}

LpResult SimplexSolver::solve() {
  LpResult res = solve_attempt(false);
  // Unbounded joins the retry list because the quick pass may misread a ray
  // through a tiny pivot; Bland's rule with fresh factors settles it.
  if ((res.status == LpStatus::kNumericalBreakdown ||
       res.status == LpStatus::kIterLimit ||
       res.status == LpStatus::kUnbounded) &&
      !opts_.bland) {
    const long spent = res.iterations;
    res = solve_attempt(true);
    res.iterations += spent;
  }
  return res;
}

LpResult SimplexSolver::resolve() {
  if (!basis_valid_) return solve();
  bland_now_ = opts_.bland;
  align_nonbasic_values();
  compute_basic_values();
  long iters = 0;
  compute_reduced_costs(cost_);
  LpStatus st;
  const bool dual_ok = dual_feasible_now();
  if (dual_ok) {
    st = dual_loop(&iters);
    if (st != LpStatus::kOptimal && st != LpStatus::kInfeasible)
      st = primal_pair(&iters);
  } else {
    st = primal_pair(&iters);
  }
  if (std::getenv("EVSL_LP_TRACE"))
    std::fprintf(stderr, "[lp] resolve dual_ok=%d st=%d iters=%ld\n",
                 int(dual_ok), int(st), iters);
  if (st == LpStatus::kNumericalBreakdown || st == LpStatus::kIterLimit ||
      st == LpStatus::kUnbounded) {
    LpResult res = solve_attempt(true);
    res.iterations += iters;
    return res;
  }
  return finish(st, iters);
}

LpResult SimplexSolver::finish(LpStatus st, long iters) {
  for (std::size_t j = 0; j < x_model_.size(); ++j) {
    const int a = model2act_[j];
    x_model_[j] = a < 0 ? model_->variable(static_cast<int>(j)).lb : xval_[a];
  }
  objective_ = model_->objective_value(x_model_);
  return LpResult{st, objective_, iters};
}

BasisSnapshot SimplexSolver::snapshot() const {
  return BasisSnapshot{status_};
}

void SimplexSolver::restore(const BasisSnapshot& snap) {
  if (snap.status.size() != status_.size())
    throw std::logic_error("basis snapshot does not match this model");
  status_ = snap.status;
  int pos = 0;
  for (int col = 0; col < ncols(); ++col) {
    if (status_[col] != ColStatus::kBasic) continue;
    if (pos >= m_) throw std::logic_error("basis snapshot has too many basics");
    basic_[pos++] = col;
  }
  if (pos != m_) throw std::logic_error("basis snapshot has too few basics");
  if (!factorize()) {
    // Fall back to a fresh solve on restore failure.
    basis_valid_ = false;
    return;
  }
  align_nonbasic_values();
  compute_basic_values();
  basis_valid_ = true;
}

LpSolution solve_lp(const MilpModel& model, LpOptions opts) {
  SimplexSolver solver(model, opts);
  const LpResult res = solver.solve();
  LpSolution out;
  out.status = res.status;
  out.objective = res.objective;
  out.iterations = res.iterations;
  out.x = solver.solution();
  return out;
}

}  // namespace evsl
