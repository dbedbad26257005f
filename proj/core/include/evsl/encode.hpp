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
//
// MILP encoding of an event-driven logistics network.
//
// ModelBuilder turns an EventNetwork plus per-arc trajectory surrogates,
// concurrency policies, and campaign time bounds into a solver-neutral
// MilpModel:
//
//   x+/x-  commodity flow out of the origin / into the destination, one pair
//          per allowed commodity per transport arc and per holdover arc
//   y+/y-  total departing / arriving mass (kg) per transport arc
//   tau    duration of each cargo event layer (days)
//   lam    SOS2 convex-combination weights for piecewise-linear surrogates
//
// Provenance is carried in variable names: "xp.LEO.EML1.tug3.e4.fHIGH" is
// the outflow of fHIGH on the arc LEO->EML1 bound to tug3 in event layer 4,
// "hp.LEO.e3.fHIGH" the matching holdover out of layer 3, "yp..."/"ym..."
// the arc's total masses, and "tau.e4" a layer duration.

#ifndef EVSL_ENCODE_HPP_
#define EVSL_ENCODE_HPP_

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "evsl/milp.hpp"
#include "evsl/network.hpp"

namespace evsl {

struct EncodeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// A transport arc names a surrogate that the library does not provide.
struct MissingSurrogateError : EncodeError {
  using EncodeError::EncodeError;
};
// A concurrency policy references a commodity, node, or vehicle that does
// not exist in the network.
struct UnknownPolicyTargetError : EncodeError {
  using EncodeError::EncodeError;
};
// A vehicle-bound arc reaches time-constraint emission with neither an
// affine time-of-flight model nor an attached piecewise-linear one.
struct MissingTofModelError : EncodeError {
  using EncodeError::EncodeError;
};
// Piecewise-linear breakpoints are too few, not strictly increasing, or
// inconsistent with their value list.
struct BadBreakpointsError : EncodeError {
  using EncodeError::EncodeError;
};

// One impulsive burn (or one leg of a multi-burn transfer) on an arc. In
// mass space the stage maps the departing totals to
//
//   m_fuel(after) = m_fuel + (p1 - 1) * sum_c m_c + p0_kg * x_vehicle
//
// with every other commodity conserved; `drop_after` lists commodities
// jettisoned once the burn completes (their arrival flow is forced to 0).
// For a Tsiolkovsky burn p1 = exp(-dv/(g0*Isp)) and p0_kg = 0; fitted
// low-thrust models carry a nonzero intercept that only applies when the
// vehicle actually flies, hence the binary activation through `vehicle`.
struct BurnStage {
  std::string fuel;
  double p1 = 1.0;
  double p0_kg = 0.0;
  std::string vehicle;  // required when p0_kg != 0
  std::vector<std::string> drop_after;
};

// Mass transformation as a serial chain of burn stages. An empty chain is
// the identity transfer. Multi-stage chains compose left to right in the
// order the physical processes happen on the arc.
struct AffineSurrogate {
  std::vector<BurnStage> stages;
};

// Piecewise-linear final-vs-initial total mass, sampled at strictly
// increasing breakpoints of departing mass. All commodities except `fuel`
// are conserved across the arc; the fuel arrival flow is left free and is
// pinned through the arriving-total-mass definition, so the propellant
// spend is implied by the curve.
struct PwlSurrogate {
  std::string fuel;
  std::vector<double> initial_mass_kg;
  std::vector<double> final_mass_kg;
};

// Arc traversal time as an affine function of departing mass,
//   dt_days = q1_days_per_kg * y+ + q0_days * x_vehicle,
// where the intercept is activated by the arc's bound vehicle. Impulsive
// transfers use q1 = 0 (fixed trip time).
struct AffineTof {
  double q1_days_per_kg = 0.0;
  double q0_days = 0.0;
};

// Keyed store of trajectory surrogates. Transport arcs reference entries by
// their `surrogate` string; an empty string means an identity transfer and
// never hits the library.
class SurrogateLibrary {
 public:
  void add_mass(const std::string& key, AffineSurrogate model);
  void add_mass(const std::string& key, PwlSurrogate model);
  void add_tof(const std::string& key, AffineTof model);

  bool has_mass(const std::string& key) const;
  bool has_tof(const std::string& key) const;
  const std::variant<AffineSurrogate, PwlSurrogate>* find_mass(
      const std::string& key) const;
  const AffineTof* find_tof(const std::string& key) const;

 private:
  std::map<std::string, std::variant<AffineSurrogate, PwlSurrogate>> mass_;
  std::map<std::string, AffineTof> tof_;
};

// Matches transport arcs by any combination of endpoint, bound vehicle, and
// layer tag; unset fields are wildcards. vehicle = "" (set but empty)
// matches launch arcs specifically.
struct ArcSelector {
  std::optional<std::string> origin;
  std::optional<std::string> dest;
  std::optional<std::string> vehicle;
  std::optional<LayerTag> tag;
};

enum class ArcScope {
  kAllArcs,        // every transport and holdover arc
  kTransportArcs,  // transport arcs including launches
  kVehicleArcs,    // transport arcs with a bound vehicle
  kHoldoverArcs,
  kSelectedArcs,  // transport arcs matching any of `selectors`
};

// One concurrency family: a linear row over departing flows,
//   sum_c coef_c * x+_c  (sense)  rhs,
// stamped onto every arc in scope. With require_all_terms the row is only
// emitted where every named commodity may flow (vehicle/fuel capacity
// pairing); otherwise terms for commodities absent from an arc are dropped
// and the row is skipped when nothing binding remains.
struct CommodityRow {
  std::string name;
  std::vector<std::pair<std::string, double>> terms;
  RowSense sense = RowSense::kLe;
  double rhs = 0.0;
  ArcScope scope = ArcScope::kVehicleArcs;
  std::vector<ArcSelector> selectors;  // used when scope == kSelectedArcs
  bool require_all_terms = false;
};

// Forbids a commodity on the matched transport arcs by fixing both of its
// flow variables to zero (cheaper than emitting rows).
struct ZeroRestriction {
  std::string commodity;
  std::vector<ArcSelector> selectors;
};

struct ConcurrencyPolicy {
  std::vector<CommodityRow> rows;
  std::vector<ZeroRestriction> restrictions;
};

// Builds the MILP in stages. add_flow_variables() must run first; the emit
// steps may then run in any order, each at most once, except that PWL
// time-of-flight attachments must precede emit_time_constraints(). The
// network must outlive the builder.
class ModelBuilder {
 public:
  explicit ModelBuilder(const EventNetwork& net);

  // Creates x+/x- for every (arc, allowed commodity), y+/y- plus their
  // defining rows for every transport arc, and a tau duration variable for
  // every cargo-tagged layer. Vehicle departures on transport arcs take the
  // commodity's declared integrality; all other flows are continuous.
  void add_flow_variables();

  // One <= row per (node, event, commodity) with any incident flow:
  //   outflows + holdover-out - inflows - holdover-in(e-1) <= d.
  // Unserved strictly negative demand with no incident arcs is rejected.
  void emit_mass_balance();

  // Equality rows tying arrivals to departures through each arc's mass
  // surrogate: identity rows for conserved commodities, the fuel row of the
  // serial burn-stage product for affine arcs, and the SOS2
  // convex-combination triplet for piecewise-linear arcs. Holdover arcs are
  // identity transfers.
  void emit_transformation(const SurrogateLibrary& lib);

  void emit_concurrency(const ConcurrencyPolicy& policy);

  // Replaces the affine traversal-time term of one transport arc with a
  // piecewise-linear one: adds SOS2 weights, a duration variable, and the
  // convex-combination rows. Call before emit_time_constraints().
  void attach_pwl_tof(const std::string& arc_label,
                      const std::vector<double>& initial_mass_kg,
                      const std::vector<double>& tof_days);

  // Cargo: per layer and per vehicle, the summed traversal time of that
  // vehicle's arcs must fit within the layer duration tau_e, and the layer
  // durations must fit within t_cargo_days. Crew: the summed traversal time
  // over all crew-layer arcs must fit within t_crew_days. A non-finite
  // bound drops the corresponding budget row but keeps the structure.
  void emit_time_constraints(const SurrogateLibrary& lib, double t_cargo_days,
                             double t_crew_days);

  // Minimizes transport cost: each arc's per-unit cost lands on its x+
  // variables. `holdover_cost_per_unit` optionally prices storage (by
  // commodity name, applied to every holdover arc that may carry it).
  void emit_objective(
      const std::map<std::string, double>& holdover_cost_per_unit = {});

  const MilpModel& model() const { return model_; }
  // Validates and moves the model out; the builder is spent afterwards.
  MilpModel take_model();

  // Variable lookups; -1 when the variable does not exist. Arc indices
  // follow EventNetwork::transport_arcs()/holdover_arcs() order.
  int xplus(int arc, int commodity) const;
  int xminus(int arc, int commodity) const;
  int yplus(int arc) const;
  int yminus(int arc) const;
  int hold_xplus(int holdover, int commodity) const;
  int hold_xminus(int holdover, int commodity) const;
  int tau(int event) const;
  int arc_index(const std::string& label) const;  // TransportArc::label()
  int holdover_index(const std::string& node, int from_event) const;

  // Naming token of a transport arc as it appears in generated variable and
  // row names: "<origin>.<dest>.<vehicle|launch>.e<event>". The
  // transformation row defining x-(c) on the arc is "xf.<token>.<c>".
  std::string arc_token(int arc) const;

 private:
  struct ArcVars {
    std::vector<int> xp, xm;  // schema-indexed, -1 where not allowed
    int yp = -1, ym = -1;
    int dt = -1;  // piecewise-linear traversal time, -1 = affine
  };
  struct HoldVars {
    std::vector<int> xp, xm;
  };

  std::string arc_token(const TransportArc& a) const;
  void require_variables(const char* op) const;
  void require_once(bool& flag, const char* op);

  const EventNetwork& net_;
  MilpModel model_;
  std::vector<ArcVars> avars_;
  std::vector<HoldVars> hvars_;
  std::map<int, int> tau_;  // cargo event -> variable id
  std::map<std::string, int> arc_by_label_;
  std::map<std::pair<std::string, int>, int> hold_by_key_;
  bool vars_added_ = false;
  bool balance_done_ = false;
  bool transform_done_ = false;
  bool concurrency_done_ = false;
  bool time_done_ = false;
  bool objective_done_ = false;
};

}  // namespace evsl

#endif  // EVSL_ENCODE_HPP_
