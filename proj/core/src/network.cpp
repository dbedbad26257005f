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

#include "evsl/network.hpp"

#include <algorithm>
#include <deque>

#include "nlohmann/json.hpp"

namespace evsl {

using nlohmann::json;

int CommoditySchema::add(const std::string& name, CommodityKind kind,
                         double unit_mass_kg) {
  if (by_name_.count(name))
    throw UnknownCommodityError("duplicate commodity name: " + name);
  if (kind == CommodityKind::kContinuous) {
    if (unit_mass_kg != 1.0)
      throw UnknownCommodityError(
          "continuous commodity '" + name +
          "' must have unit mass 1 (it is already denominated in kg)");
  } else if (!(unit_mass_kg > 0.0)) {
    throw UnknownCommodityError("discrete commodity '" + name +
                                "' needs positive unit mass");
  }
  entries_.push_back({name, kind, unit_mass_kg});
  const int idx = static_cast<int>(entries_.size()) - 1;
  by_name_.emplace(name, idx);
  return idx;
}

int CommoditySchema::index(const std::string& name) const {
  const auto it = by_name_.find(name);
  return it == by_name_.end() ? -1 : it->second;
}

int CommoditySchema::require(const std::string& name) const {
  const int k = index(name);
  if (k < 0) throw UnknownCommodityError("unknown commodity: " + name);
  return k;
}

std::string to_string(LayerTag tag) {
  switch (tag) {
    case LayerTag::kCargoForward: return "cargo_forward";
    case LayerTag::kCargoReturn: return "cargo_return";
    case LayerTag::kCrewForward: return "crew_forward";
    case LayerTag::kCrewReturn: return "crew_return";
  }
  return "?";
}

LayerTag layer_tag_from_string(const std::string& s) {
  if (s == "cargo_forward") return LayerTag::kCargoForward;
  if (s == "cargo_return") return LayerTag::kCargoReturn;
  if (s == "crew_forward") return LayerTag::kCrewForward;
  if (s == "crew_return") return LayerTag::kCrewReturn;
  throw NetworkError("unknown layer tag: " + s);
}

std::string TransportArc::label() const {
  std::string s = origin + "->" + dest;
  if (!vehicle.empty()) s += ":" + vehicle;
  s += "@E" + std::to_string(event);
  return s;
}

void DemandTable::add(const std::string& node, int event,
                      const std::string& commodity, double amount) {
  entries_[{node, event}][commodity] += amount;
}

int EventNetwork::node_index(const std::string& name) const {
  const auto it = std::find(nodes_.begin(), nodes_.end(), name);
  return it == nodes_.end() ? -1 : static_cast<int>(it - nodes_.begin());
}

const std::vector<double>* EventNetwork::demand(const std::string& node,
                                                int event) const {
  const auto it = demands_.find({node, event});
  return it == demands_.end() ? nullptr : &it->second;
}

namespace {

// Kahn's algorithm over the layer's origin->dest relation; throws if a
// directed cycle survives.
void check_acyclic(int event, const std::vector<std::string>& nodes,
                   const std::vector<std::pair<int, int>>& edges) {
  const int n = static_cast<int>(nodes.size());
  std::vector<std::vector<int>> adj(n);
  std::vector<int> indeg(n, 0);
  for (const auto& [u, v] : edges) {
    adj[u].push_back(v);
    ++indeg[v];
  }
  std::deque<int> q;
  for (int i = 0; i < n; ++i)
    if (indeg[i] == 0) q.push_back(i);
  int seen = 0;
  while (!q.empty()) {
    const int u = q.front();
    q.pop_front();
    ++seen;
    for (const int v : adj[u])
      if (--indeg[v] == 0) q.push_back(v);
  }
  if (seen != n) {
    std::string in_cycle;
    for (int i = 0; i < n; ++i)
      if (indeg[i] > 0) in_cycle += (in_cycle.empty() ? "" : ", ") + nodes[i];
    throw CyclicLayerError(
        event, "layer " + std::to_string(event) +
                   ": transport arcs form a directed cycle through {" +
                   in_cycle + "}");
  }
}

}  // namespace

EventNetwork build_event_network(const std::vector<std::string>& static_nodes,
                                 const std::vector<LayerSpec>& layers,
                                 CommoditySchema schema,
                                 const DemandTable& demands) {
  if (layers.empty()) throw NetworkError("no event layers given");
  EventNetwork net;
  net.schema_ = std::move(schema);
  net.nodes_ = static_nodes;
  {
    std::set<std::string> uniq(static_nodes.begin(), static_nodes.end());
    if (uniq.size() != static_nodes.size())
      throw NetworkError("duplicate node ids in the static network");
  }
  const int num_events = static_cast<int>(layers.size());
  const int num_k = net.schema_.size();

  const auto node_idx = [&net](const std::string& name) {
    const int i = net.node_index(name);
    if (i < 0) throw UnknownNodeError("unknown node: " + name);
    return i;
  };

  for (int e = 1; e <= num_events; ++e) {
    const LayerSpec& spec = layers[e - 1];
    EventLayer layer;
    layer.event = e;
    layer.tag = spec.tag;
    std::vector<std::pair<int, int>> edges;
    for (const ArcSpec& a : spec.arcs) {
      TransportArc arc;
      arc.origin = a.origin;
      arc.dest = a.dest;
      arc.vehicle = a.vehicle;
      arc.event = e;
      arc.surrogate = a.surrogate;
      const int u = node_idx(a.origin);
      const int v = node_idx(a.dest);
      edges.emplace_back(u, v);
      if (!a.vehicle.empty()) {
        const int kv = net.schema_.index(a.vehicle);
        if (kv < 0)
          throw UnknownVehicleError("arc " + arc.label() +
                                    ": vehicle is not a commodity");
        if (net.schema_.at(kv).kind == CommodityKind::kContinuous)
          throw UnknownVehicleError("arc " + arc.label() +
                                    ": vehicle must be a discrete commodity");
      }
      for (const std::string& name : a.allowed)
        arc.allowed_commodities.push_back(net.schema_.require(name));
      std::sort(arc.allowed_commodities.begin(),
                arc.allowed_commodities.end());
      arc.allowed_commodities.erase(std::unique(arc.allowed_commodities.begin(),
                                                arc.allowed_commodities.end()),
                                    arc.allowed_commodities.end());
      for (const auto& [name, cost] : a.cost)
        arc.cost_per_unit.emplace(net.schema_.require(name), cost);
      layer.arcs.push_back(static_cast<int>(net.tarcs_.size()));
      net.tarcs_.push_back(std::move(arc));
    }
    check_acyclic(e, net.nodes_, edges);
    net.layers_.push_back(std::move(layer));
  }

  for (const auto& [key, amounts] : demands.entries()) {
    const auto& [node, event] = key;
    node_idx(node);
    if (event < 1 || event > num_events)
      throw NetworkError("demand at " + node + " references event " +
                         std::to_string(event) + " outside 1.." +
                         std::to_string(num_events));
    std::vector<double> d(num_k, 0.0);
    for (const auto& [commodity, amount] : amounts)
      d[net.schema_.require(commodity)] = amount;
    net.demands_.emplace(std::make_pair(node, event), std::move(d));
  }

  // Holdover arcs with reachability-closed allowed sets: a commodity is
  // allowed to wait at (node, e) only if supplies, transport arcs, or an
  // earlier holdover can actually put it there. Within a layer, presence
  // propagates along transport arcs in topological order (layers are
  // acyclic, so a bounded number of sweeps settles).
  const int num_nodes = static_cast<int>(net.nodes_.size());
  std::vector<std::vector<char>> avail(
      num_nodes, std::vector<char>(num_k, 0));  // state entering each layer
  for (int e = 1; e <= num_events; ++e) {
    for (int i = 0; i < num_nodes; ++i) {
      if (const auto* d = net.demand(net.nodes_[i], e)) {
        for (int k = 0; k < num_k; ++k)
          if ((*d)[k] > 0.0) avail[i][k] = 1;
      }
    }
    bool changed = true;
    while (changed) {
      changed = false;
      for (const int ai : net.layers_[e - 1].arcs) {
        const TransportArc& arc = net.tarcs_[ai];
        const int u = net.node_index(arc.origin);
        const int v = net.node_index(arc.dest);
        for (const int k : arc.allowed_commodities) {
          if (avail[u][k] && !avail[v][k]) {
            avail[v][k] = 1;
            changed = true;
          }
        }
      }
    }
    if (e == num_events) break;
    for (int i = 0; i < num_nodes; ++i) {
      HoldoverArc h;
      h.node = net.nodes_[i];
      h.from_event = e;
      for (int k = 0; k < num_k; ++k)
        if (avail[i][k]) h.allowed_commodities.push_back(k);
      net.harcs_.push_back(std::move(h));
    }
  }

  return net;
}

MultigraphReport validate_multigraph(
    const EventNetwork& net,
    const std::map<std::string, std::set<LayerTag>>& vehicle_layers) {
  MultigraphReport report;
  std::set<std::tuple<std::string, std::string, int, std::string>> seen;
  for (const TransportArc& arc : net.transport_arcs()) {
    if (!arc.vehicle.empty()) {
      if (!seen.insert({arc.origin, arc.dest, arc.event, arc.vehicle}).second)
        report.violations.push_back({ViolationKind::kDuplicateArc,
                                     "duplicate arc " + arc.label()});
      const auto it = vehicle_layers.find(arc.vehicle);
      if (it != vehicle_layers.end()) {
        const LayerTag tag = net.layers()[arc.event - 1].tag;
        if (!it->second.count(tag))
          report.violations.push_back(
              {ViolationKind::kVehicleNotAllowedInLayer,
               arc.vehicle + " not allowed in " + to_string(tag) + " layer (" +
                   arc.label() + ")"});
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// JSON round trip.
// ---------------------------------------------------------------------------

namespace {

json names_of(const CommoditySchema& schema, const std::vector<int>& ks) {
  json arr = json::array();
  for (const int k : ks) arr.push_back(schema.at(k).name);
  return arr;
}

std::string kind_to_string(CommodityKind k) {
  switch (k) {
    case CommodityKind::kBinary: return "binary";
    case CommodityKind::kInteger: return "integer";
    case CommodityKind::kContinuous: return "continuous";
  }
  return "?";
}

CommodityKind kind_from_string(const std::string& s) {
  if (s == "binary") return CommodityKind::kBinary;
  if (s == "integer") return CommodityKind::kInteger;
  if (s == "continuous") return CommodityKind::kContinuous;
  throw NetworkError("unknown commodity kind: " + s);
}

}  // namespace

std::string EventNetwork::to_json_string(int indent) const {
  json j;
  j["schema"] = json::array();
  for (const Commodity& c : schema_.entries())
    j["schema"].push_back({{"name", c.name},
                           {"kind", kind_to_string(c.kind)},
                           {"unit_mass_kg", c.unit_mass_kg}});
  j["nodes"] = nodes_;
  j["layers"] = json::array();
  for (const EventLayer& l : layers_)
    j["layers"].push_back(
        {{"event", l.event}, {"tag", to_string(l.tag)}, {"arcs", l.arcs}});
  j["transport_arcs"] = json::array();
  for (const TransportArc& a : tarcs_) {
    json ja = {{"origin", a.origin},       {"dest", a.dest},
               {"vehicle", a.vehicle},     {"event", a.event},
               {"surrogate", a.surrogate},
               {"allowed", names_of(schema_, a.allowed_commodities)}};
    if (!a.cost_per_unit.empty()) {
      json costs = json::object();
      for (const auto& [k, c] : a.cost_per_unit) costs[schema_.at(k).name] = c;
      ja["cost"] = costs;
    }
    j["transport_arcs"].push_back(std::move(ja));
  }
  j["holdover_arcs"] = json::array();
  for (const HoldoverArc& h : harcs_)
    j["holdover_arcs"].push_back(
        {{"node", h.node},
         {"from_event", h.from_event},
         {"allowed", names_of(schema_, h.allowed_commodities)}});
  j["demands"] = json::array();
  for (const auto& [key, d] : demands_) {
    json amounts = json::object();
    for (int k = 0; k < schema_.size(); ++k)
      if (d[k] != 0.0) amounts[schema_.at(k).name] = d[k];
    j["demands"].push_back(
        {{"node", key.first}, {"event", key.second}, {"amounts", amounts}});
  }
  return j.dump(indent) + "\n";
}

EventNetwork EventNetwork::from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw NetworkError(std::string("network json: ") + e.what());
  }
  EventNetwork net;
  try {
    for (const json& jc : j.at("schema"))
      net.schema_.add(jc.at("name").get<std::string>(),
                      kind_from_string(jc.at("kind").get<std::string>()),
                      jc.at("unit_mass_kg").get<double>());
    net.nodes_ = j.at("nodes").get<std::vector<std::string>>();
    for (const json& jl : j.at("layers")) {
      EventLayer l;
      l.event = jl.at("event").get<int>();
      l.tag = layer_tag_from_string(jl.at("tag").get<std::string>());
      l.arcs = jl.at("arcs").get<std::vector<int>>();
      net.layers_.push_back(std::move(l));
    }
    for (const json& ja : j.at("transport_arcs")) {
      TransportArc a;
      a.origin = ja.at("origin").get<std::string>();
      a.dest = ja.at("dest").get<std::string>();
      a.vehicle = ja.at("vehicle").get<std::string>();
      a.event = ja.at("event").get<int>();
      a.surrogate = ja.at("surrogate").get<std::string>();
      for (const json& name : ja.at("allowed"))
        a.allowed_commodities.push_back(
            net.schema_.require(name.get<std::string>()));
      if (ja.contains("cost"))
        for (const auto& [name, c] : ja.at("cost").items())
          a.cost_per_unit.emplace(net.schema_.require(name), c.get<double>());
      net.tarcs_.push_back(std::move(a));
    }
    for (const json& jh : j.at("holdover_arcs")) {
      HoldoverArc h;
      h.node = jh.at("node").get<std::string>();
      h.from_event = jh.at("from_event").get<int>();
      for (const json& name : jh.at("allowed"))
        h.allowed_commodities.push_back(
            net.schema_.require(name.get<std::string>()));
      net.harcs_.push_back(std::move(h));
    }
    for (const json& jd : j.at("demands")) {
      std::vector<double> d(net.schema_.size(), 0.0);
      for (const auto& [name, v] : jd.at("amounts").items())
        d[net.schema_.require(name)] = v.get<double>();
      net.demands_.emplace(
          std::make_pair(jd.at("node").get<std::string>(),
                         jd.at("event").get<int>()),
          std::move(d));
    }
  } catch (const json::exception& e) {
    throw NetworkError(std::string("network json: ") + e.what());
  }
  return net;
}

}  // namespace evsl
