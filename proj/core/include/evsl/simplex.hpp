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

#ifndef EVSL_SIMPLEX_HPP_
#define EVSL_SIMPLEX_HPP_

#include <cstdint>
#include <memory>
#include <vector>

#include "evsl/milp.hpp"

namespace evsl {

enum class LpStatus : std::uint8_t {
  kOptimal,
  kInfeasible,
  kUnbounded,
  kIterLimit,
  kNumericalBreakdown,
};

struct LpOptions {
  double feas_tol = 1e-7;   // absolute primal feasibility tolerance
  double dual_tol = 1e-9;   // reduced-cost tolerance
  double pivot_tol = 1e-9;  // smallest acceptable pivot magnitude
  int refactor_interval = 100;
  long iter_limit = 500000;
  bool bland = false;  // Bland's rule (anti-cycling); slower but safe
};

struct LpResult {
  LpStatus status = LpStatus::kNumericalBreakdown;
  double objective = 0.0;
  long iterations = 0;
};

// Per-column basis status. Logical (slack) columns are included, so a
// snapshot of these statuses fully determines a basis.
enum class ColStatus : std::int8_t {
  kAtLower = 0,
  kAtUpper = 1,
  kBasic = 2,
  kFree = 3,  // nonbasic free variable pinned at zero
};

struct BasisSnapshot {
  std::vector<ColStatus> status;  // size = structural + logical columns
};

// Bounded-variable revised simplex over the LP relaxation of a MilpModel.
//
// The model is compiled once: variables fixed by their *model* bounds
// (lb == ub) are folded into the row constants and never enter the tableau;
// every row gets a logical column whose bounds encode the row sense.
// Iterations run on a sparse LU factorization of the basis with product-form
// eta updates and periodic refactorization.
//
// solve() starts from the all-logical basis, using the dual simplex when the
// cost vector permits and a primal phase-1/phase-2 pair otherwise. resolve()
// reoptimizes after bound changes from the current basis, preferring the dual
// simplex — the cheap path for branch-and-bound children.
class SimplexSolver {
 public:
  explicit SimplexSolver(const MilpModel& model, LpOptions opts = LpOptions());
  ~SimplexSolver();

  SimplexSolver(const SimplexSolver&) = delete;
  SimplexSolver& operator=(const SimplexSolver&) = delete;

  // Branching interface: overrides the bounds of a model variable. Variables
  // folded out at build time cannot be re-bounded.
  void set_bounds(int model_var, double lb, double ub);
  void reset_bounds();

  LpResult solve();
  LpResult resolve();

  // Model-space solution (fixed variables reported at their bound).
  const std::vector<double>& solution() const { return x_model_; }
  double objective() const { return objective_; }

  BasisSnapshot snapshot() const;
  void restore(const BasisSnapshot& snap);

  const LpOptions& options() const { return opts_; }
  long total_iterations() const { return total_iters_; }
  int num_rows() const { return m_; }
  int num_active_columns() const { return n_act_; }

 private:
  struct Lu;
  struct Eta {
    int pos = 0;
    double pivot = 0.0;
    std::vector<int> idx;
    std::vector<double> val;
  };

  int ncols() const { return n_act_ + m_; }

  double col_dot(int col, const std::vector<double>& y) const;
  void col_scatter(int col, double mult, std::vector<double>* out) const;
  double nonbasic_value(int col) const;
  void align_nonbasic_values();

  bool factorize();
  bool factorize_and_recompute();
  void ftran(std::vector<double>* x) const;
  void btran(std::vector<double>* y) const;
  void compute_basic_values();
  void compute_reduced_costs(const std::vector<double>& cost);
  double max_primal_violation(int* pos) const;
  double total_primal_violation() const;
  void build_phase1_cost(std::vector<double>* cost) const;

  void apply_pivot(int entering, int leave_pos, double theta, int dir,
                   double leave_val, ColStatus leave_status);
  int pick_entering(const std::vector<double>& cost) const;
  LpStatus primal_loop(bool phase1, long* iters);
  LpStatus primal_pair(long* iters);
  LpStatus dual_loop(long* iters);
  bool dual_feasible_now() const;
  bool place_nonbasic_dual_feasible();
  LpResult solve_attempt(bool force_bland);
  LpResult finish(LpStatus st, long iters);

  const MilpModel* model_;
  LpOptions opts_;

  int m_ = 0;      // rows
  int n_act_ = 0;  // structural columns kept in the tableau

  // Compiled structural matrix (CSC over active columns).
  std::vector<int> acol_ptr_, acol_idx_;
  std::vector<double> acol_val_;
  std::vector<int> act2model_, model2act_;
  std::vector<double> rhs_;                 // rhs minus folded columns
  std::vector<double> cost_;                // per column (structural, logical)
  std::vector<double> lb_, ub_, lb0_, ub0_; // current and pristine bounds
  double obj_fixed_ = 0.0;

  // Basis state.
  std::vector<int> basic_;         // row position -> column
  std::vector<ColStatus> status_;  // column -> status
  std::vector<double> xval_;       // column -> current value
  std::vector<double> dual_;       // row duals (workspace)
  std::vector<double> redcost_;    // reduced costs (workspace)

  std::unique_ptr<Lu> lu_;
  std::vector<Eta> etas_;
  int pivots_since_refactor_ = 0;

  // Workspaces.
  std::vector<double> cb_, w_, rho_, rhs_work_, cost1_;
  mutable std::vector<double> work2_;

  std::vector<double> x_model_;
  double objective_ = 0.0;
  long total_iters_ = 0;
  bool basis_valid_ = false;
  bool bland_now_ = false;
};

// Solves the LP relaxation of `model` from scratch.
struct LpSolution {
  LpStatus status = LpStatus::kNumericalBreakdown;
  double objective = 0.0;
  std::vector<double> x;
  long iterations = 0;
};

LpSolution solve_lp(const MilpModel& model, LpOptions opts = LpOptions());

}  // namespace evsl

#endif  // EVSL_SIMPLEX_HPP_
