// Copyright 2026 The evsl Authors
//
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

// The shipped campaign instance: cislunar propellant resupply for a series
// of crewed lunar-surface missions. Builds the full event-driven network --
// nodes {ES, LEO, GTO, TLI, EML1, EML2, LLO}, cargo tug round trips of four
// event layers each followed by crew missions of two layers each -- wires in
// the trajectory surrogates and concurrency families, and exposes solve /
// plan-extraction / plan-audit / sweep entry points on top of the MILP
// encoder and solver.

#ifndef EVSL_CISLUNAR_HPP_
#define EVSL_CISLUNAR_HPP_

#include <limits>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "evsl/bnb.hpp"
#include "evsl/encode.hpp"
#include "evsl/milp.hpp"
#include "evsl/network.hpp"
#include "evsl/trajmodels.hpp"

namespace evsl {

struct CislunarError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A plan references an arc, holdover, or commodity the campaign model does
// not contain.
struct UnmappableArcError : CislunarError {
  using CislunarError::CislunarError;
};

// Campaign-level knobs. Durations are campaign totals in days: the cargo
// bound caps the summed lengths of the cargo event layers, the crew bound
// caps the summed in-space flight time of the crew vehicle across all
// missions. Each tug use opens four cargo layers (outbound transfer, final
// delivery, return transfer, return to parking orbit) and each crewed
// mission two layers (outbound, return), so feasibility of direct missions
// needs t_crew_days >= 7 * missions.
struct CampaignConfig {
  double t_cargo_days = 0.0;
  double t_crew_days = 21.0;
  int missions = 3;  // crewed round trips
  int tug_uses = 3;  // cargo tug round trips
  // Tug units available for cargo arcs ("tug1".."tug12"); empty = full fleet.
  std::vector<std::string> enabled_tugs;

  // Solver knobs forwarded to solve_milp().
  double rel_gap = 1e-6;
  double time_limit_s = std::numeric_limits<double>::infinity();
  int threads = 1;
  bool log = false;

  // Parses {"t_cargo_days":..,"t_crew_days":..,"missions":..,"tug_uses":..,
  // "enabled_tugs":[..],"rel_gap":..,"time_limit_s":..,"threads":..,
  // "log":..}; every key optional, unknown keys rejected. Throws
  // CislunarError on malformed input or invalid values.
  static CampaignConfig from_json_string(const std::string& text);
  static CampaignConfig from_json_file(const std::string& path);
};

// Commodity flow over one transport arc. Amounts are in native units
// (vehicle counts for discrete commodities, kilograms for continuous ones).
// `inflow` may be left empty in hand-written plans; audits then derive the
// arrival flows from the arc's mass transformation.
struct FlowRecord {
  std::string origin;
  std::string dest;
  std::string vehicle;  // empty for launch arcs
  int event = 0;
  std::map<std::string, double> outflow;
  std::map<std::string, double> inflow;
  double tof_days = 0.0;  // informational; audits recompute it
};

// Inventory parked at a node between consecutive events.
struct HoldoverRecord {
  std::string node;
  int from_event = 0;
  std::map<std::string, double> amount;
};

// A campaign solution in transportable form: which arcs carry what, what
// waits where, how long each cargo layer takes, and the total launch cost.
struct FlowPlan {
  double objective_kg = 0.0;
  std::map<int, double> layer_durations_days;  // cargo layers only
  std::vector<FlowRecord> arcs;
  std::vector<HoldoverRecord> holdovers;

  std::string to_json_string(int indent = 2) const;
  static FlowPlan from_json_string(const std::string& text);
  static FlowPlan from_json_file(const std::string& path);

  // Wide-format table: one row per arc/holdover, one column per commodity
  // that appears anywhere in the plan, departures only, trailing
  // time-of-flight column.
  std::string to_csv() const;
};

// Replay result of a plan against a campaign model. Violations are maxima
// over the corresponding row family; a clean replay has every maximum at
// the numerical noise floor (well under 1 kg).
struct PlanAudit {
  double objective_kg = 0.0;  // recomputed from flows and launch costs
  double t_cargo_days = 0.0;  // recomputed summed cargo layer durations
  double t_crew_days = 0.0;   // recomputed summed crew flight time
  double max_balance_violation_kg = 0.0;
  double max_transform_violation_kg = 0.0;
  double max_policy_violation_kg = 0.0;  // capacity / sizing / tank rows
  double max_time_violation_days = 0.0;
  double max_bound_violation = 0.0;
  double max_integrality_violation = 0.0;
  std::string worst_row;  // name of the single worst-violated row
  double worst_violation = 0.0;

  bool within(double tol) const {
    return max_balance_violation_kg <= tol &&
           max_transform_violation_kg <= tol &&
           max_policy_violation_kg <= tol && max_time_violation_days <= tol &&
           max_bound_violation <= tol && max_integrality_violation <= tol;
  }
};

// An assembled campaign: the event network plus its MILP encoding and the
// variable maps needed to turn solver vectors back into plans. Move-only.
class Campaign {
 public:
  // Expands the tug fleet, lays out 4*tug_uses cargo layers followed by
  // 2*missions crew layers, registers every trajectory surrogate from the
  // registry tables, emits the model, and appends fleet symmetry-breaking
  // rows (identical idle units are interchangeable, so within each family
  // lower-numbered enabled units must fly at least as much as higher ones).
  // Throws CislunarError on invalid configuration.
  static Campaign build(const CampaignConfig& config,
                        const ModelRegistry& registry);

  const CampaignConfig& config() const { return config_; }
  const EventNetwork& network() const { return *network_; }
  const MilpModel& model() const { return model_; }

  // Solves the campaign model. When the options carry no warm start, the
  // carry-along reference architecture (see reference_seed) is offered as
  // one, giving the search an immediate incumbent on feasible configs.
  SolveReport solve() const;  // options taken from the config
  SolveReport solve(const MilpSolveOptions& options) const;

  // Structural seed for warm starts: every mission flies Earth -> LEO ->
  // TLI -> LLO and directly home, carrying all of its propellant; tugs stay
  // on the ground. Only the vehicle activations are encoded (integer
  // entries); the solver re-derives the propellant loads. The vector is in
  // model variable order and may be infeasible for tight crew-time budgets,
  // in which case the solver drops it.
  std::vector<double> reference_seed() const;

  // Vehicle movements of a known plan as a warm-start vector, e.g. to carry
  // an incumbent across related configurations. Only the discrete entries
  // are meaningful; propellant loads are left at zero for the solver to
  // re-derive. Throws UnmappableArcError when the plan references an arc,
  // holdover, or commodity this campaign does not have.
  std::vector<double> seed_from_plan(const FlowPlan& plan) const;

  // Nonzero flows of an incumbent solution as a FlowPlan. The report must
  // carry a solution for this campaign's model.
  FlowPlan extract_plan(const SolveReport& report) const;

  // Replays a plan through the model: maps flows onto variables (throwing
  // UnmappableArcError for unknown arcs/commodities), derives arrival
  // flows, total masses, and layer durations where the plan leaves them
  // implicit, then measures every constraint family.
  PlanAudit validate_plan(const FlowPlan& plan) const;

 private:
  Campaign() = default;

  double arc_tof_days(int arc, const std::vector<double>& x) const;

  CampaignConfig config_;
  std::unique_ptr<EventNetwork> network_;
  std::unique_ptr<ModelBuilder> builder_;
  MilpModel model_;
  // (origin, dest, vehicle, event) -> index into network_->transport_arcs().
  std::map<std::tuple<std::string, std::string, std::string, int>, int>
      arc_lookup_;
  std::map<std::string, int> row_by_name_;
  std::map<int, AffineTof> tof_by_arc_;  // arcs with a traversal-time model
};

// One grid point of a cost-vs-time sweep.
struct ParetoPoint {
  double t_cargo_days = 0.0;
  double t_crew_days = 0.0;
  SolveStatus status = SolveStatus::kInfeasible;
  bool has_solution = false;
  double objective_kg = 0.0;
  double best_bound_kg = 0.0;
  double gap = 0.0;
  double time_s = 0.0;
  long nodes = 0;
  std::string error;  // nonempty when the point failed outright
  FlowPlan plan;      // populated when has_solution
};

// Solves one campaign per (t_cargo_days, t_crew_days) grid point. Points
// are independent; `workers` > 1 solves them on that many threads. Failures
// are recorded per point and never abort the sweep. Results are sorted by
// (t_crew_days, t_cargo_days) regardless of completion order.
std::vector<ParetoPoint> pareto_sweep(
    const CampaignConfig& base, const ModelRegistry& registry,
    const std::vector<std::pair<double, double>>& grid, int workers = 1);

// The shipped sweep grid: cargo bounds {0,120,240,360,480} days crossed
// with crew bounds {21,30,40,50} days.
std::vector<std::pair<double, double>> default_pareto_grid();

// "t_cargo_days,t_crew_days,status,objective_kg,savings_pct" rows, one per
// point. Savings are relative to the largest solved objective in the sweep
// (the most constrained corner), so the baseline row reads 0.0.
std::string pareto_csv(const std::vector<ParetoPoint>& points);

}  // namespace evsl

#endif  // EVSL_CISLUNAR_HPP_
