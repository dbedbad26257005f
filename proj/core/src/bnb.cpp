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

#include "evsl/bnb.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <queue>
#include <stdexcept>
#include <thread>
#include <utility>

#include "evsl/lp_format.hpp"
#include "json.hpp"

namespace evsl {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal:
      return "optimal";
    case SolveStatus::kInfeasible:
      return "infeasible";
    case SolveStatus::kUnbounded:
      return "unbounded";
    case SolveStatus::kGapLimit:
      return "gap_limit";
    case SolveStatus::kTimeLimit:
      return "time_limit";
  }
  return "unknown";
}

std::string SolveReport::to_json() const {
  nlohmann::json j;
  j["status"] = to_string(status);
  j["objective"] = has_solution && std::isfinite(objective)
                       ? nlohmann::json(objective)
                       : nlohmann::json(nullptr);
  j["best_bound"] = std::isfinite(best_bound) ? nlohmann::json(best_bound)
                                              : nlohmann::json(nullptr);
  j["gap"] = std::isfinite(gap) ? nlohmann::json(gap) : nlohmann::json(nullptr);
  j["nodes"] = nodes;
  j["lp_iterations"] = lp_iterations;
  j["time"] = time_s;
  return j.dump(2);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct BoundChange {
  int var;
  double lb, ub;
};

struct SosWindow {
  int set;
  int lo, hi;  // allowed member index range, 0-based inclusive
};

void set_window(std::vector<SosWindow>* ws, int set, int lo, int hi) {
  for (SosWindow& w : *ws) {
    if (w.set == set) {
      w.lo = lo;
      w.hi = hi;
      return;
    }
  }
  ws->push_back({set, lo, hi});
}

std::pair<int, int> get_window(const std::vector<SosWindow>& ws, int set,
                               int size) {
  for (const SosWindow& w : ws)
    if (w.set == set) return {w.lo, w.hi};
  return {0, size - 1};
}

struct NodeData {
  double bound = -kInf;  // parent LP objective: a lower bound for the subtree
  long id = 0;
  int depth = 0;
  std::vector<BoundChange> changes;  // full path from the root
  std::vector<SosWindow> windows;    // narrowest window per branched set
  BasisSnapshot basis;               // parent basis for warm starting
  // Branching decision that created this node, for pseudocost learning:
  // the first LP solved here reveals the decision's bound degradation.
  int branch_var = -1;
  bool branch_up = false;
  double branch_frac = 0.0;  // fractional part of the variable at the parent
};

struct QueueEntry {
  double bound;
  long id;
  std::shared_ptr<NodeData> node;
  // Invert the ordering: the smallest bound (ties: oldest node) pops first.
  bool operator<(const QueueEntry& o) const {
    if (bound != o.bound) return bound > o.bound;
    return id > o.id;
  }
};

struct Shared {
  std::chrono::steady_clock::time_point t0;

  std::mutex mu;
  std::condition_variable cv;
  std::priority_queue<QueueEntry> queue;
  std::vector<double> worker_bound;  // +inf while a worker is idle
  int idle = 0;
  bool stop = false;
  bool hit_time_limit = false;
  bool hit_node_limit = false;
  double stop_lb = kInf;  // global lower bound captured when stop triggered
  std::string error;

  bool has_incumbent = false;
  double incumbent_obj = kInf;
  std::vector<double> incumbent_x;

  long next_id = 1;
  long nodes = 0;
  long lp_iterations = 0;

  // Pseudocosts: mean objective degradation per unit of rounding, learned
  // from the first LP of every branched child. Indexed by variable.
  std::vector<double> pc_up_sum, pc_dn_sum;
  std::vector<long> pc_up_cnt, pc_dn_cnt;
  double pc_all_sum = 0.0;
  long pc_all_cnt = 0;

  void record_gain_locked(int var, bool up, double frac, double delta) {
    if (!(delta >= 0.0)) return;  // also drops NaN
    const double step = up ? 1.0 - frac : frac;
    if (step < 1e-9) return;
    const double unit = delta / step;
    if (up) {
      pc_up_sum[var] += unit;
      ++pc_up_cnt[var];
    } else {
      pc_dn_sum[var] += unit;
      ++pc_dn_cnt[var];
    }
    pc_all_sum += unit;
    ++pc_all_cnt;
  }

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
  // Nodes at or above this objective cannot usefully improve the incumbent.
  double cutoff_locked() const {
    if (!has_incumbent) return kInf;
    return incumbent_obj - std::max(1e-6, 1e-9 * std::abs(incumbent_obj));
  }
  double global_lower_bound_locked() const {
    double lb = queue.empty() ? kInf : queue.top().bound;
    for (const double b : worker_bound) lb = std::min(lb, b);
    return lb;
  }
  double rel_gap_locked() const {
    if (!has_incumbent) return kInf;
    const double lb = std::min(global_lower_bound_locked(), incumbent_obj);
    return (incumbent_obj - lb) / std::max(1.0, std::abs(incumbent_obj));
  }
  void trigger_stop_locked(bool time_limit, bool node_limit) {
    if (stop) return;
    stop = true;
    hit_time_limit = time_limit;
    hit_node_limit = node_limit;
    stop_lb = global_lower_bound_locked();
    cv.notify_all();
  }
};

class Search {
 public:
  Search(const MilpModel& model, const MilpSolveOptions& opts)
      : model_(model), opts_(opts) {
    for (int j = 0; j < model.num_variables(); ++j) {
      if (model.variable(j).kind != VarKind::kContinuous)
        int_vars_.push_back(j);
    }
    const std::size_t n = model.num_variables();
    sh_.pc_up_sum.assign(n, 0.0);
    sh_.pc_dn_sum.assign(n, 0.0);
    sh_.pc_up_cnt.assign(n, 0);
    sh_.pc_dn_cnt.assign(n, 0);
  }

  SolveReport run();

 private:
  void worker(int wid);
  void process_chain(SimplexSolver& solver, const NodeData& node, int wid);
  void install_warm_start(const LpResult& root);
  int pick_fractional(const std::vector<double>& x, bool* plunge_up);
  int pick_violated_sos(const std::vector<double>& x,
                        const std::vector<SosWindow>& windows) const;
  void fix_outside_window(SimplexSolver& solver, int set, int lo,
                          int hi) const;

  const MilpModel& model_;
  const MilpSolveOptions& opts_;
  std::vector<int> int_vars_;
  Shared sh_;
};

void Search::fix_outside_window(SimplexSolver& solver, int set, int lo,
                                int hi) const {
  const Sos2Set& s = model_.sos2(set);
  for (int k = 0; k < static_cast<int>(s.vars.size()); ++k) {
    if (k < lo || k > hi) solver.set_bounds(s.vars[k], 0.0, 0.0);
  }
}

// Pseudocost scoring with a most-fractional fallback while a variable has no
// history. The plunge child follows the direction with the smaller estimated
// degradation — the side more likely to keep the incumbent hunt alive.
int Search::pick_fractional(const std::vector<double>& x, bool* plunge_up) {
  int best = -1;
  double best_score = -1.0;
  bool best_up = false;
  std::lock_guard<std::mutex> lk(sh_.mu);
  const double fallback =
      sh_.pc_all_cnt > 0 ? sh_.pc_all_sum / sh_.pc_all_cnt : 1.0;
  for (const int j : int_vars_) {
    const double f = x[j] - std::floor(x[j]);
    const double frac = std::min(f, 1.0 - f);
    if (frac <= opts_.int_tol) continue;
    const double up_rate =
        sh_.pc_up_cnt[j] > 0 ? sh_.pc_up_sum[j] / sh_.pc_up_cnt[j] : fallback;
    const double dn_rate =
        sh_.pc_dn_cnt[j] > 0 ? sh_.pc_dn_sum[j] / sh_.pc_dn_cnt[j] : fallback;
    const double up_est = up_rate * (1.0 - f);
    const double dn_est = dn_rate * f;
    // Product rule, with the fractionality as a small tiebreaker so the
    // search prefers genuinely undecided variables among equals.
    const double score = std::max(up_est, 1e-8) * std::max(dn_est, 1e-8) *
                         (1.0 + 0.01 * frac);
    if (score > best_score) {
      best_score = score;
      best = j;
      best_up = up_est <= dn_est;
    }
  }
  if (plunge_up) *plunge_up = best_up;
  return best;
}

// Turns opts_.warm_start into a starting incumbent. The integer entries are
// rounded and pinned, and the LP re-optimizes the continuous remainder — so
// a structurally sound seed is both verified and polished before the search
// trusts it as a cutoff. Anything that fails to verify is dropped.
void Search::install_warm_start(const LpResult& root) {
  (void)root;
  const int n = model_.num_variables();
  const char* why = nullptr;
  std::vector<double> x;
  double obj = kInf;
  if (static_cast<int>(opts_.warm_start.size()) != n) {
    why = "wrong length";
  } else {
    SimplexSolver probe(model_, opts_.lp);
    for (const int j : int_vars_) {
      const Variable& v = model_.variable(j);
      const double r =
          std::clamp(std::round(opts_.warm_start[j]), v.lb, v.ub);
      probe.set_bounds(j, r, r);
    }
    const LpResult lp = probe.solve();
    if (lp.status != LpStatus::kOptimal) {
      why = "not feasible with its integer assignment";
    } else {
      x = probe.solution();
      for (const int j : int_vars_) x[j] = std::round(x[j]);
      for (int s = 0; s < model_.num_sos2() && !why; ++s) {
        const Sos2Set& set = model_.sos2(s);
        int first = -1, last = -1, count = 0;
        for (int k = 0; k < static_cast<int>(set.vars.size()); ++k) {
          if (std::abs(x[set.vars[k]]) > opts_.int_tol) {
            if (first < 0) first = k;
            last = k;
            ++count;
          }
        }
        if (count > 2 || (count == 2 && last - first > 1))
          why = "violates an SOS2 set";
      }
      obj = lp.objective;
    }
  }
  if (why) {
    if (opts_.log) std::fprintf(stderr, "[bnb] warm start dropped: %s\n", why);
    return;
  }
  sh_.has_incumbent = true;
  sh_.incumbent_obj = obj;
  sh_.incumbent_x = std::move(x);
  if (opts_.log)
    std::fprintf(stderr, "[bnb] warm start accepted, objective %.10g\n", obj);
}

int Search::pick_violated_sos(const std::vector<double>& x,
                              const std::vector<SosWindow>& windows) const {
  for (int s = 0; s < model_.num_sos2(); ++s) {
    const Sos2Set& set = model_.sos2(s);
    const int n = static_cast<int>(set.vars.size());
    const auto [lo, hi] = get_window(windows, s, n);
    if (hi - lo <= 1) continue;  // two adjacent members always satisfy SOS2
    int first = -1, last = -1, count = 0;
    for (int k = 0; k < n; ++k) {
      if (std::abs(x[set.vars[k]]) > opts_.int_tol) {
        if (first < 0) first = k;
        last = k;
        ++count;
      }
    }
    if (count > 2 || (count == 2 && last - first > 1)) return s;
  }
  return -1;
}

void Search::process_chain(SimplexSolver& solver, const NodeData& node,
                           int wid) {
  solver.reset_bounds();
  for (const BoundChange& c : node.changes) solver.set_bounds(c.var, c.lb, c.ub);
  for (const SosWindow& w : node.windows)
    fix_outside_window(solver, w.set, w.lo, w.hi);

  LpResult lp;
  if (node.basis.status.empty()) {
    lp = solver.solve();
  } else {
    solver.restore(node.basis);
    lp = solver.resolve();
  }

  std::vector<BoundChange> changes = node.changes;
  std::vector<SosWindow> windows = node.windows;
  int depth = node.depth;

  // Branching decision awaiting pseudocost attribution: the node's own for
  // the first LP, then each plunge step's for the next.
  int pend_var = node.branch_var;
  bool pend_up = node.branch_up;
  double pend_frac = node.branch_frac;
  double pend_parent_bound = node.bound;

  // Effective bounds of branchable variables along this chain.
  std::vector<double> eff_lb(model_.num_variables());
  std::vector<double> eff_ub(model_.num_variables());
  for (int j = 0; j < model_.num_variables(); ++j) {
    eff_lb[j] = model_.variable(j).lb;
    eff_ub[j] = model_.variable(j).ub;
  }
  for (const BoundChange& c : changes) {
    eff_lb[c.var] = c.lb;
    eff_ub[c.var] = c.ub;
  }

  for (;;) {
    {
      std::lock_guard<std::mutex> lk(sh_.mu);
      ++sh_.nodes;
      sh_.lp_iterations += lp.iterations;
      if (opts_.log && sh_.nodes % 1000 == 0) {
        std::fprintf(stderr,
                     "[bnb] nodes=%ld open=%zu incumbent=%.8g bound=%.8g\n",
                     sh_.nodes, sh_.queue.size(),
                     sh_.has_incumbent ? sh_.incumbent_obj : kInf,
                     std::min(sh_.global_lower_bound_locked(),
                              sh_.has_incumbent ? sh_.incumbent_obj : kInf));
      }
      if (sh_.nodes >= opts_.node_limit)
        sh_.trigger_stop_locked(false, true);
      if (opts_.time_limit_s < kInf && sh_.elapsed() > opts_.time_limit_s)
        sh_.trigger_stop_locked(true, false);
      if (sh_.stop) return;
    }

    if (lp.status == LpStatus::kInfeasible) return;
    if (lp.status != LpStatus::kOptimal) {
      // One scratch retry; a persistent failure aborts the whole solve,
      // because pruning on an unproven bound would be unsound.
      lp = solver.solve();
      if (lp.status == LpStatus::kInfeasible) return;
      if (lp.status != LpStatus::kOptimal) {
        if (const char* dump = std::getenv("EVSL_DUMP_FAIL")) {
          MilpModel snap = model_;
          for (const BoundChange& c : changes) {
            snap.mutable_variable(c.var).lb = c.lb;
            snap.mutable_variable(c.var).ub = c.ub;
          }
          write_lp_file(snap, dump);
        }
        std::lock_guard<std::mutex> lk(sh_.mu);
        sh_.error = "node LP failed with status " +
                    std::to_string(static_cast<int>(lp.status));
        sh_.stop = true;
        sh_.cv.notify_all();
        return;
      }
    }

    const double bound = lp.objective;
    {
      std::lock_guard<std::mutex> lk(sh_.mu);
      sh_.worker_bound[wid] = bound;
      if (pend_var >= 0) {
        sh_.record_gain_locked(pend_var, pend_up, pend_frac,
                               bound - pend_parent_bound);
        pend_var = -1;
      }
      if (bound >= sh_.cutoff_locked()) return;
    }

    const std::vector<double>& x = solver.solution();
    bool plunge_up = false;
    const int frac_var = pick_fractional(x, &plunge_up);
    const int viol_sos = frac_var >= 0 ? -1 : pick_violated_sos(x, windows);

    if (frac_var < 0 && viol_sos < 0) {
      // Integer and SOS feasible: candidate incumbent.
      std::lock_guard<std::mutex> lk(sh_.mu);
      if (bound < sh_.incumbent_obj) {
        sh_.incumbent_obj = bound;
        sh_.has_incumbent = true;
        sh_.incumbent_x = x;
        for (const int j : int_vars_)
          sh_.incumbent_x[j] = std::round(sh_.incumbent_x[j]);
        if (opts_.log)
          std::fprintf(stderr, "[bnb] incumbent %.10g at node %ld\n",
                       sh_.incumbent_obj, sh_.nodes);
        if (sh_.rel_gap_locked() <= opts_.rel_gap)
          sh_.trigger_stop_locked(false, false);
      }
      return;
    }

    // Branch: the sibling joins the queue with the parent basis, the plunge
    // child reuses the warm solver state directly.
    auto sibling = std::make_shared<NodeData>();
    sibling->bound = bound;
    sibling->depth = depth + 1;
    sibling->changes = changes;
    sibling->windows = windows;
    sibling->basis = solver.snapshot();

    if (frac_var >= 0) {
      const double xv = x[frac_var];
      const double fl = std::floor(xv);
      const double child_lb = plunge_up ? fl + 1.0 : eff_lb[frac_var];
      const double child_ub = plunge_up ? eff_ub[frac_var] : fl;
      const double sib_lb = plunge_up ? eff_lb[frac_var] : fl + 1.0;
      const double sib_ub = plunge_up ? fl : eff_ub[frac_var];
      sibling->changes.push_back({frac_var, sib_lb, sib_ub});
      sibling->branch_var = frac_var;
      sibling->branch_up = !plunge_up;
      sibling->branch_frac = xv - fl;
      changes.push_back({frac_var, child_lb, child_ub});
      eff_lb[frac_var] = child_lb;
      eff_ub[frac_var] = child_ub;
      solver.set_bounds(frac_var, child_lb, child_ub);
      pend_var = frac_var;
      pend_up = plunge_up;
      pend_frac = xv - fl;
      pend_parent_bound = bound;
    } else {
      const Sos2Set& set = model_.sos2(viol_sos);
      const int n = static_cast<int>(set.vars.size());
      const auto [lo, hi] = get_window(windows, viol_sos, n);
      double mass = 0.0, center = 0.0;
      for (int k = 0; k < n; ++k) {
        const double v = std::max(0.0, x[set.vars[k]]);
        mass += v;
        center += (k + 1) * v;
      }
      int r = static_cast<int>(std::ceil(center / std::max(mass, 1e-300))) - 1;
      r = std::clamp(r, lo + 1, hi - 1);
      // Left keeps [lo, r], right keeps [r, hi]. The weighted center lies in
      // the left window, so plunge left.
      set_window(&sibling->windows, viol_sos, r, hi);
      set_window(&windows, viol_sos, lo, r);
      fix_outside_window(solver, viol_sos, lo, r);
    }
    ++depth;

    {
      std::lock_guard<std::mutex> lk(sh_.mu);
      if (sibling->bound < sh_.cutoff_locked()) {
        sibling->id = sh_.next_id++;
        sh_.queue.push(QueueEntry{sibling->bound, sibling->id, sibling});
        sh_.cv.notify_one();
      }
    }

    lp = solver.resolve();
  }
}

void Search::worker(int wid) {
  SimplexSolver solver(model_, opts_.lp);
  for (;;) {
    std::shared_ptr<NodeData> node;
    {
      std::unique_lock<std::mutex> lk(sh_.mu);
      sh_.worker_bound[wid] = kInf;
      if (sh_.has_incumbent && sh_.rel_gap_locked() <= opts_.rel_gap)
        sh_.trigger_stop_locked(false, false);
      for (;;) {
        if (sh_.stop) return;
        if (!sh_.queue.empty()) {
          QueueEntry e = sh_.queue.top();
          sh_.queue.pop();
          if (e.bound >= sh_.cutoff_locked()) continue;  // pruned in queue
          node = e.node;
          sh_.worker_bound[wid] = e.bound;
          break;
        }
        ++sh_.idle;
        if (sh_.idle == static_cast<int>(sh_.worker_bound.size())) {
          // Tree exhausted: every worker is idle and the queue is empty.
          sh_.trigger_stop_locked(false, false);
          --sh_.idle;
          return;
        }
        sh_.cv.wait(lk);
        --sh_.idle;
      }
    }
    process_chain(solver, *node, wid);
  }
}

SolveReport Search::run() {
  sh_.t0 = std::chrono::steady_clock::now();
  const int nthreads = std::max(1, opts_.threads);
  sh_.worker_bound.assign(nthreads, kInf);

  SolveReport rep;

  // Root relaxation: resolves infeasible/unbounded up front and seeds the
  // queue with a warm basis.
  SimplexSolver root_solver(model_, opts_.lp);
  const LpResult root = root_solver.solve();
  rep.lp_iterations = root.iterations;
  if (root.status == LpStatus::kInfeasible ||
      root.status == LpStatus::kUnbounded) {
    rep.status = root.status == LpStatus::kInfeasible
                     ? SolveStatus::kInfeasible
                     : SolveStatus::kUnbounded;
    rep.nodes = 1;
    rep.time_s = sh_.elapsed();
    return rep;
  }
  if (root.status != LpStatus::kOptimal)
    throw std::runtime_error("root LP did not solve");

  if (!opts_.warm_start.empty()) install_warm_start(root);

  auto root_node = std::make_shared<NodeData>();
  root_node->bound = root.objective;
  root_node->basis = root_solver.snapshot();
  sh_.queue.push(QueueEntry{root_node->bound, 0, root_node});

  if (nthreads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int t = 0; t < nthreads; ++t)
      pool.emplace_back([this, t] { worker(t); });
    for (std::thread& t : pool) t.join();
  }

  if (!sh_.error.empty())
    throw std::runtime_error("solve failed: " + sh_.error);

  rep.nodes = sh_.nodes;
  rep.lp_iterations += sh_.lp_iterations;
  rep.time_s = sh_.elapsed();
  rep.has_solution = sh_.has_incumbent;
  if (sh_.has_incumbent) {
    rep.objective = sh_.incumbent_obj;
    rep.solution = sh_.incumbent_x;
  }

  if (sh_.hit_time_limit)
    rep.status = SolveStatus::kTimeLimit;
  else if (sh_.hit_node_limit)
    rep.status = SolveStatus::kGapLimit;
  else
    rep.status = sh_.has_incumbent ? SolveStatus::kOptimal
                                   : SolveStatus::kInfeasible;

  double lb = sh_.stop_lb;
  if (sh_.has_incumbent) lb = std::min(lb, sh_.incumbent_obj);
  rep.best_bound = lb;
  rep.gap = sh_.has_incumbent
                ? std::max(0.0, (rep.objective - lb) /
                                    std::max(1.0, std::abs(rep.objective)))
                : kInf;
  return rep;
}

}  // namespace

SolveReport solve_milp(const MilpModel& model, const MilpSolveOptions& opts) {
  model.validate();
  Search search(model, opts);
  return search.run();
}

}  // namespace evsl
