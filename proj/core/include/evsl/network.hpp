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
// Event-driven logistics network: a static node graph duplicated into a
// sequence of event layers, transport arcs bound to vehicle units within a
// layer (multigraph), holdover arcs that carry commodities between
// consecutive layers, and per-(node, event) supply/demand vectors. Purely
// structural — the MILP encoding lives in encode.hpp.

#ifndef EVSL_NETWORK_HPP_
#define EVSL_NETWORK_HPP_

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace evsl {

struct NetworkError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnknownNodeError : NetworkError {
  using NetworkError::NetworkError;
};
struct UnknownVehicleError : NetworkError {
  using NetworkError::NetworkError;
};
struct UnknownCommodityError : NetworkError {
  using NetworkError::NetworkError;
};
// A layer's transport arcs form a directed cycle, which would let the
// optimizer manufacture mass by looping flow inside one event.
struct CyclicLayerError : NetworkError {
  CyclicLayerError(int event, const std::string& what)
      : NetworkError(what), event(event) {}
  int event;
};

enum class CommodityKind { kBinary, kInteger, kContinuous };

struct Commodity {
  std::string name;
  CommodityKind kind = CommodityKind::kContinuous;
  // Diagonal entry of the unit-to-mass conversion: kg per unit for discrete
  // commodities, exactly 1 for continuous commodities (already in kg).
  double unit_mass_kg = 1.0;
};

// Ordered, index-stable commodity list.
class CommoditySchema {
 public:
  int add(const std::string& name, CommodityKind kind, double unit_mass_kg);
  int index(const std::string& name) const;  // -1 if absent
  int require(const std::string& name) const;  // throws UnknownCommodityError
  const Commodity& at(int k) const { return entries_.at(k); }
  int size() const { return static_cast<int>(entries_.size()); }
  const std::vector<Commodity>& entries() const { return entries_; }

 private:
  std::vector<Commodity> entries_;
  std::map<std::string, int> by_name_;
};

enum class LayerTag { kCargoForward, kCargoReturn, kCrewForward, kCrewReturn };

std::string to_string(LayerTag tag);
LayerTag layer_tag_from_string(const std::string& s);

// A directed transfer within one event layer. In the multigraph, several
// arcs may share (origin, dest, event), each bound to a distinct vehicle
// unit; launch arcs (external propulsion) leave `vehicle` empty.
struct TransportArc {
  std::string origin;
  std::string dest;
  std::string vehicle;    // commodity name of the bound vehicle, or empty
  int event = 0;          // 1-based layer ordinal
  std::string surrogate;  // trajectory-model arc label, empty = identity
  std::vector<int> allowed_commodities;  // schema indices, sorted
  std::map<int, double> cost_per_unit;   // objective cost by schema index

  std::string label() const;  // "LEO->EML1:tug3@E4" style, for messages
};

// Storage at a node between consecutive events (from_event -> from_event+1).
struct HoldoverArc {
  std::string node;
  int from_event = 0;
  std::vector<int> allowed_commodities;  // schema indices, sorted
};

struct EventLayer {
  int event = 0;  // 1-based
  LayerTag tag = LayerTag::kCargoForward;
  std::vector<int> arcs;  // indices into transport_arcs()
};

// Supply (positive) and demand (negative) per commodity at (node, event).
// Entries are accumulated by name and resolved against the schema when a
// network is built.
class DemandTable {
 public:
  void add(const std::string& node, int event, const std::string& commodity,
           double amount);
  const std::map<std::pair<std::string, int>, std::map<std::string, double>>&
  entries() const {
    return entries_;
  }
  bool empty() const { return entries_.empty(); }

 private:
  std::map<std::pair<std::string, int>, std::map<std::string, double>>
      entries_;
};

// Input to build_event_network: one layer's tag and transport arcs (the
// builder assigns the event ordinal from the layer's position, 1-based).
struct ArcSpec {
  std::string origin;
  std::string dest;
  std::string vehicle;    // empty for externally propelled (launch) arcs
  std::string surrogate;  // empty for identity transfers
  std::vector<std::string> allowed;        // commodity names
  std::map<std::string, double> cost;      // per-commodity objective cost
};

struct LayerSpec {
  LayerTag tag = LayerTag::kCargoForward;
  std::vector<ArcSpec> arcs;
};

class EventNetwork {
 public:
  const CommoditySchema& schema() const { return schema_; }
  const std::vector<std::string>& nodes() const { return nodes_; }
  int node_index(const std::string& name) const;  // -1 if absent
  const std::vector<EventLayer>& layers() const { return layers_; }
  int num_events() const { return static_cast<int>(layers_.size()); }
  const std::vector<TransportArc>& transport_arcs() const { return tarcs_; }
  const std::vector<HoldoverArc>& holdover_arcs() const { return harcs_; }

  // Demand/supply vector (schema order) at (node, event); nullptr if all
  // zero there.
  const std::vector<double>* demand(const std::string& node, int event) const;
  const std::map<std::pair<std::string, int>, std::vector<double>>& demands()
      const {
    return demands_;
  }

  // Serialization; round-trip stable (to_json(from_json(j)) == j for any
  // j produced by to_json). Uses the vendored nlohmann/json through an
  // opaque string API so the header stays light.
  std::string to_json_string(int indent = 2) const;
  static EventNetwork from_json_string(const std::string& text);

 private:
  friend EventNetwork build_event_network(const std::vector<std::string>&,
                                          const std::vector<LayerSpec>&,
                                          CommoditySchema, const DemandTable&);
  CommoditySchema schema_;
  std::vector<std::string> nodes_;
  std::vector<EventLayer> layers_;
  std::vector<TransportArc> tarcs_;
  std::vector<HoldoverArc> harcs_;
  std::map<std::pair<std::string, int>, std::vector<double>> demands_;
};

// Expands the static network over the given layers: validates node/vehicle
// references and per-layer acyclicity (CyclicLayerError), resolves demand
// entries, and generates one holdover arc per (node, consecutive layer
// pair). A holdover's allowed set is the reachability closure: commodities
// that can actually be present at that node and event given supplies,
// transport arcs, and earlier holdovers.
EventNetwork build_event_network(const std::vector<std::string>& static_nodes,
                                 const std::vector<LayerSpec>& layers,
                                 CommoditySchema schema,
                                 const DemandTable& demands = {});

// Structural checks beyond what construction enforces.
enum class ViolationKind { kDuplicateArc, kVehicleNotAllowedInLayer };

struct MultigraphReport {
  struct Violation {
    ViolationKind kind;
    std::string detail;
  };
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

// Confirms no two transport arcs share (origin, dest, event, vehicle) for a
// nonempty vehicle, and — when `vehicle_layers` lists a vehicle — that the
// vehicle only appears in layers whose tag is in its allowed set.
MultigraphReport validate_multigraph(
    const EventNetwork& net,
    const std::map<std::string, std::set<LayerTag>>& vehicle_layers = {});

}  // namespace evsl

#endif  // EVSL_NETWORK_HPP_
