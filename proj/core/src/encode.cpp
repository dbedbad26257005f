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

#include "evsl/encode.hpp"

#include <cmath>
#include <cstddef>
#include <set>

namespace evsl {

namespace {

bool is_cargo(LayerTag tag) {
  return tag == LayerTag::kCargoForward || tag == LayerTag::kCargoReturn;
}

std::string event_tag(int e) { return ".e" + std::to_string(e); }

void check_breakpoints(const std::string& what, const std::vector<double>& d,
                       std::size_t num_values) {
  if (d.size() < 2) {
    throw BadBreakpointsError(what + ": need at least two breakpoints");
  }
  if (num_values != d.size()) {
    throw BadBreakpointsError(what +
                              ": breakpoint and value counts differ");
  }
  for (std::size_t i = 1; i < d.size(); ++i) {
    if (!(d[i] > d[i - 1])) {
      throw BadBreakpointsError(
          what + ": breakpoints must be strictly increasing");
    }
  }
}

// Composite mass-space transformation over one arc: arriving masses are
// B * (departing masses) + sum_v act[v] * x_vehicle(v). Burn stages and
// jettisons are folded in serially, so the stored matrix is always the
// product of everything applied so far.
struct MassMap {
  explicit MassMap(int k) : k(k), B(static_cast<std::size_t>(k) * k, 0.0) {
    for (int i = 0; i < k; ++i) B[static_cast<std::size_t>(i) * k + i] = 1.0;
  }

  double& at(int r, int c) { return B[static_cast<std::size_t>(r) * k + c]; }
  double at(int r, int c) const {
    return B[static_cast<std::size_t>(r) * k + c];
  }

  // Left-multiplies by a burn: fuel row absorbs (p1 - 1) of every
  // commodity's mass, plus an intercept activated by the vehicle count.
  void apply_burn(int fuel, double p1, double p0_kg, int vehicle) {
    for (int c = 0; c < k; ++c) {
      double colsum = 0.0;
      for (int r = 0; r < k; ++r) colsum += at(r, c);
      at(fuel, c) += (p1 - 1.0) * colsum;
    }
    for (auto& [veh, vec] : act) {
      double sum = 0.0;
      for (double a : vec) sum += a;
      vec[fuel] += (p1 - 1.0) * sum;
    }
    if (p0_kg != 0.0) {
      auto [it, inserted] = act.try_emplace(vehicle, k, 0.0);
      (void)inserted;
      it->second[fuel] += p0_kg;
    }
  }

  // Left-multiplies by a jettison: the commodity's arriving row is zeroed.
  void apply_drop(int commodity) {
    for (int c = 0; c < k; ++c) at(commodity, c) = 0.0;
    for (auto& [veh, vec] : act) vec[commodity] = 0.0;
  }

  bool identity_row(int r) const {
    for (int c = 0; c < k; ++c) {
      if (at(r, c) != (r == c ? 1.0 : 0.0)) return false;
    }
    for (const auto& [veh, vec] : act) {
      if (vec[r] != 0.0) return false;
    }
    return true;
  }

  int k;
  std::vector<double> B;            // row-major
  std::map<int, std::vector<double>> act;  // vehicle index -> intercepts, kg
};

bool selector_matches(const ArcSelector& s, const TransportArc& a,
                      LayerTag tag) {
  if (s.origin && *s.origin != a.origin) return false;
  if (s.dest && *s.dest != a.dest) return false;
  if (s.vehicle && *s.vehicle != a.vehicle) return false;
  if (s.tag && *s.tag != tag) return false;
  return true;
}

bool any_selector_matches(const std::vector<ArcSelector>& sels,
                          const TransportArc& a, LayerTag tag) {
  for (const ArcSelector& s : sels) {
    if (selector_matches(s, a, tag)) return true;
  }
  return false;
}

}  // namespace

void SurrogateLibrary::add_mass(const std::string& key, AffineSurrogate m) {
  for (const BurnStage& st : m.stages) {
    if (st.fuel.empty()) {
      throw EncodeError("surrogate '" + key +
                        "': burn stage has no fuel commodity");
    }
    if (!(st.p1 > 0.0)) {
      throw EncodeError("surrogate '" + key +
                        "': mass-ratio slope must be positive");
    }
    if (st.p0_kg != 0.0 && st.vehicle.empty()) {
      throw EncodeError("surrogate '" + key +
                        "': intercept requires an activating vehicle");
    }
  }
  if (!mass_.emplace(key, std::move(m)).second) {
    throw EncodeError("duplicate mass surrogate '" + key + "'");
  }
}

void SurrogateLibrary::add_mass(const std::string& key, PwlSurrogate m) {
  if (m.fuel.empty()) {
    throw EncodeError("surrogate '" + key + "': no fuel commodity");
  }
  check_breakpoints("surrogate '" + key + "'", m.initial_mass_kg,
                    m.final_mass_kg.size());
  if (!mass_.emplace(key, std::move(m)).second) {
    throw EncodeError("duplicate mass surrogate '" + key + "'");
  }
}

void SurrogateLibrary::add_tof(const std::string& key, AffineTof model) {
  if (!tof_.emplace(key, model).second) {
    throw EncodeError("duplicate time-of-flight model '" + key + "'");
  }
}

bool SurrogateLibrary::has_mass(const std::string& key) const {
  return mass_.count(key) != 0;
}

bool SurrogateLibrary::has_tof(const std::string& key) const {
  return tof_.count(key) != 0;
}

const std::variant<AffineSurrogate, PwlSurrogate>* SurrogateLibrary::find_mass(
    const std::string& key) const {
  auto it = mass_.find(key);
  return it == mass_.end() ? nullptr : &it->second;
}

const AffineTof* SurrogateLibrary::find_tof(const std::string& key) const {
  auto it = tof_.find(key);
  return it == tof_.end() ? nullptr : &it->second;
}

ModelBuilder::ModelBuilder(const EventNetwork& net) : net_(net) {}

std::string ModelBuilder::arc_token(const TransportArc& a) const {
  const std::string veh = a.vehicle.empty() ? "launch" : a.vehicle;
  return a.origin + "." + a.dest + "." + veh + event_tag(a.event);
}

void ModelBuilder::require_variables(const char* op) const {
  if (!vars_added_) {
    throw EncodeError(std::string(op) + " requires add_flow_variables() first");
  }
}

void ModelBuilder::require_once(bool& flag, const char* op) {
  if (flag) throw EncodeError(std::string(op) + " may only run once");
  flag = true;
}

void ModelBuilder::add_flow_variables() {
  require_once(vars_added_, "add_flow_variables");
  const CommoditySchema& schema = net_.schema();
  const int k = schema.size();

  avars_.resize(net_.transport_arcs().size());
  for (std::size_t a = 0; a < net_.transport_arcs().size(); ++a) {
    const TransportArc& arc = net_.transport_arcs()[a];
    if (!arc_by_label_.emplace(arc.label(), static_cast<int>(a)).second) {
      throw EncodeError("duplicate transport arc " + arc.label());
    }
    const std::string tok = arc_token(arc);
    ArcVars& v = avars_[a];
    v.xp.assign(k, -1);
    v.xm.assign(k, -1);
    std::vector<LinearTerm> def_plus, def_minus;
    for (int c : arc.allowed_commodities) {
      const Commodity& com = schema.at(c);
      VarKind kind = VarKind::kContinuous;
      double ub = kInfinity;
      if (com.kind == CommodityKind::kBinary) {
        kind = VarKind::kBinary;
        ub = 1.0;
      } else if (com.kind == CommodityKind::kInteger) {
        kind = VarKind::kInteger;
      }
      v.xp[c] =
          model_.add_variable("xp." + tok + "." + com.name, 0.0, ub, 0.0, kind);
      v.xm[c] = model_.add_variable("xm." + tok + "." + com.name, 0.0,
                                    kInfinity, 0.0, VarKind::kContinuous);
      def_plus.push_back({v.xp[c], com.unit_mass_kg});
      def_minus.push_back({v.xm[c], com.unit_mass_kg});
    }
    v.yp = model_.add_variable("yp." + tok, 0.0, kInfinity, 0.0,
                               VarKind::kContinuous);
    v.ym = model_.add_variable("ym." + tok, 0.0, kInfinity, 0.0,
                               VarKind::kContinuous);
    def_plus.push_back({v.yp, -1.0});
    def_minus.push_back({v.ym, -1.0});
    model_.add_constraint("tot.p." + tok, def_plus, RowSense::kEq, 0.0);
    model_.add_constraint("tot.m." + tok, def_minus, RowSense::kEq, 0.0);
  }

  hvars_.resize(net_.holdover_arcs().size());
  for (std::size_t h = 0; h < net_.holdover_arcs().size(); ++h) {
    const HoldoverArc& arc = net_.holdover_arcs()[h];
    hold_by_key_[{arc.node, arc.from_event}] = static_cast<int>(h);
    const std::string tok = arc.node + event_tag(arc.from_event);
    HoldVars& v = hvars_[h];
    v.xp.assign(k, -1);
    v.xm.assign(k, -1);
    for (int c : arc.allowed_commodities) {
      const std::string& name = schema.at(c).name;
      v.xp[c] = model_.add_variable("hp." + tok + "." + name, 0.0, kInfinity,
                                    0.0, VarKind::kContinuous);
      v.xm[c] = model_.add_variable("hm." + tok + "." + name, 0.0, kInfinity,
                                    0.0, VarKind::kContinuous);
    }
  }

  for (const EventLayer& layer : net_.layers()) {
    if (is_cargo(layer.tag)) {
      tau_[layer.event] =
          model_.add_variable("tau" + event_tag(layer.event), 0.0, kInfinity,
                              0.0, VarKind::kContinuous);
    }
  }
}

void ModelBuilder::emit_mass_balance() {
  require_variables("emit_mass_balance");
  require_once(balance_done_, "emit_mass_balance");
  const CommoditySchema& schema = net_.schema();
  const int k = schema.size();

  for (const EventLayer& layer : net_.layers()) {
    std::map<std::string, std::vector<int>> outs, ins;
    for (int ai : layer.arcs) {
      const TransportArc& arc = net_.transport_arcs()[ai];
      outs[arc.origin].push_back(ai);
      ins[arc.dest].push_back(ai);
    }
    for (const std::string& node : net_.nodes()) {
      const std::vector<double>* d = net_.demand(node, layer.event);
      const int hold_out = holdover_index(node, layer.event);
      const int hold_in = holdover_index(node, layer.event - 1);
      const auto out_it = outs.find(node);
      const auto in_it = ins.find(node);
      for (int c = 0; c < k; ++c) {
        std::vector<LinearTerm> terms;
        if (out_it != outs.end()) {
          for (int ai : out_it->second) {
            if (avars_[ai].xp[c] != -1) terms.push_back({avars_[ai].xp[c], 1.0});
          }
        }
        if (in_it != ins.end()) {
          for (int ai : in_it->second) {
            if (avars_[ai].xm[c] != -1)
              terms.push_back({avars_[ai].xm[c], -1.0});
          }
        }
        if (hold_out != -1 && hvars_[hold_out].xp[c] != -1) {
          terms.push_back({hvars_[hold_out].xp[c], 1.0});
        }
        if (hold_in != -1 && hvars_[hold_in].xm[c] != -1) {
          terms.push_back({hvars_[hold_in].xm[c], -1.0});
        }
        const double rhs = d != nullptr ? (*d)[c] : 0.0;
        if (terms.empty()) {
          if (rhs < 0.0) {
            throw EncodeError("demand for " + schema.at(c).name + " at " +
                              node + " in event " +
                              std::to_string(layer.event) +
                              " has no incident arcs");
          }
          continue;
        }
        model_.add_constraint("bal." + node + event_tag(layer.event) + "." +
                                  schema.at(c).name,
                              terms, RowSense::kLe, rhs);
      }
    }
  }
}

void ModelBuilder::emit_transformation(const SurrogateLibrary& lib) {
  require_variables("emit_transformation");
  require_once(transform_done_, "emit_transformation");
  const CommoditySchema& schema = net_.schema();
  const int k = schema.size();

  for (std::size_t a = 0; a < net_.transport_arcs().size(); ++a) {
    const TransportArc& arc = net_.transport_arcs()[a];
    const ArcVars& v = avars_[a];
    const std::string tok = arc_token(arc);

    const std::variant<AffineSurrogate, PwlSurrogate>* model = nullptr;
    if (!arc.surrogate.empty()) {
      model = lib.find_mass(arc.surrogate);
      if (model == nullptr) {
        throw MissingSurrogateError("no mass surrogate '" + arc.surrogate +
                                    "' for arc " + arc.label());
      }
    }

    if (model != nullptr && std::holds_alternative<PwlSurrogate>(*model)) {
      const PwlSurrogate& pwl = std::get<PwlSurrogate>(*model);
      const int fuel = schema.require(pwl.fuel);
      if (v.xp[fuel] == -1 || v.xm[fuel] == -1) {
        throw EncodeError("surrogate fuel '" + pwl.fuel +
                          "' may not flow on arc " + arc.label());
      }
      const std::size_t n = pwl.initial_mass_kg.size();
      std::vector<int> lam(n);
      std::vector<LinearTerm> conv, dom, rng;
      for (std::size_t i = 0; i < n; ++i) {
        lam[i] = model_.add_variable("lam." + tok + "." + std::to_string(i + 1),
                                     0.0, 1.0, 0.0, VarKind::kContinuous);
        conv.push_back({lam[i], 1.0});
        if (pwl.initial_mass_kg[i] != 0.0) {
          dom.push_back({lam[i], pwl.initial_mass_kg[i]});
        }
        if (pwl.final_mass_kg[i] != 0.0) {
          rng.push_back({lam[i], pwl.final_mass_kg[i]});
        }
      }
      dom.push_back({v.yp, -1.0});
      rng.push_back({v.ym, -1.0});
      model_.add_constraint("pwl.c." + tok, conv, RowSense::kEq, 1.0);
      model_.add_constraint("pwl.d." + tok, dom, RowSense::kEq, 0.0);
      model_.add_constraint("pwl.r." + tok, rng, RowSense::kEq, 0.0);
      model_.add_sos2("sos.m." + tok, lam, pwl.initial_mass_kg);
      // Everything except the fuel is conserved; the fuel arrival is pinned
      // through the arriving-total-mass definition.
      for (int c : arc.allowed_commodities) {
        if (c == fuel) continue;
        model_.add_constraint("xf." + tok + "." + schema.at(c).name,
                              {{v.xp[c], 1.0}, {v.xm[c], -1.0}}, RowSense::kEq,
                              0.0);
      }
      continue;
    }

    MassMap map(k);
    if (model != nullptr) {
      for (const BurnStage& st : std::get<AffineSurrogate>(*model).stages) {
        const int fuel = schema.require(st.fuel);
        const int veh = st.vehicle.empty() ? -1 : schema.require(st.vehicle);
        map.apply_burn(fuel, st.p1, st.p0_kg, veh);
        for (const std::string& dropped : st.drop_after) {
          map.apply_drop(schema.require(dropped));
        }
      }
    }

    for (int r = 0; r < k; ++r) {
      if (map.identity_row(r)) {
        if (v.xp[r] == -1 && v.xm[r] == -1) continue;
        if (v.xp[r] == -1) {
          // Nothing can depart, so nothing arrives.
          model_.mutable_variable(v.xm[r]).ub = 0.0;
          continue;
        }
        if (v.xm[r] == -1) {
          model_.mutable_variable(v.xp[r]).ub = 0.0;
          continue;
        }
        model_.add_constraint("xf." + tok + "." + schema.at(r).name,
                              {{v.xp[r], 1.0}, {v.xm[r], -1.0}}, RowSense::kEq,
                              0.0);
        continue;
      }
      std::vector<LinearTerm> terms;
      for (int c = 0; c < k; ++c) {
        const double coef = map.at(r, c) * schema.at(c).unit_mass_kg;
        if (coef == 0.0 || v.xp[c] == -1) continue;
        terms.push_back({v.xp[c], coef});
      }
      for (const auto& [veh, vec] : map.act) {
        if (vec[r] == 0.0 || v.xp[veh] == -1) continue;
        terms.push_back({v.xp[veh], vec[r]});
      }
      if (terms.empty()) {
        // The transformed row has no achievable source; the arrival flow,
        // if it exists at all, is forced empty.
        if (v.xm[r] != -1) model_.mutable_variable(v.xm[r]).ub = 0.0;
        continue;
      }
      if (v.xm[r] != -1) {
        terms.push_back({v.xm[r], -schema.at(r).unit_mass_kg});
      }
      model_.add_constraint("xf." + tok + "." + schema.at(r).name, terms,
                            RowSense::kEq, 0.0);
    }
  }

  for (std::size_t h = 0; h < net_.holdover_arcs().size(); ++h) {
    const HoldoverArc& arc = net_.holdover_arcs()[h];
    const HoldVars& v = hvars_[h];
    const std::string tok = arc.node + event_tag(arc.from_event);
    for (int c : arc.allowed_commodities) {
      model_.add_constraint("xfh." + tok + "." + schema.at(c).name,
                            {{v.xp[c], 1.0}, {v.xm[c], -1.0}}, RowSense::kEq,
                            0.0);
    }
  }
}

void ModelBuilder::emit_concurrency(const ConcurrencyPolicy& policy) {
  require_variables("emit_concurrency");
  require_once(concurrency_done_, "emit_concurrency");
  const CommoditySchema& schema = net_.schema();

  auto check_selector = [&](const ArcSelector& s, const std::string& where) {
    if (s.origin && net_.node_index(*s.origin) == -1) {
      throw UnknownPolicyTargetError(where + ": unknown node '" + *s.origin +
                                     "'");
    }
    if (s.dest && net_.node_index(*s.dest) == -1) {
      throw UnknownPolicyTargetError(where + ": unknown node '" + *s.dest +
                                     "'");
    }
    if (s.vehicle && !s.vehicle->empty() &&
        schema.index(*s.vehicle) == -1) {
      throw UnknownPolicyTargetError(where + ": unknown vehicle '" +
                                     *s.vehicle + "'");
    }
  };

  for (const CommodityRow& row : policy.rows) {
    const std::string where = "concurrency row '" + row.name + "'";
    std::vector<std::pair<int, double>> terms;
    for (const auto& [name, coef] : row.terms) {
      const int c = schema.index(name);
      if (c == -1) {
        throw UnknownPolicyTargetError(where + ": unknown commodity '" + name +
                                       "'");
      }
      terms.emplace_back(c, coef);
    }
    for (const ArcSelector& s : row.selectors) check_selector(s, where);

    // Maps the policy terms onto one arc's departing flows. Returns false
    // when the row should be skipped there: a required commodity is absent,
    // or nothing that could violate the row remains.
    auto build = [&](const std::vector<int>& xp,
                     std::vector<LinearTerm>* out) {
      out->clear();
      bool binding = false;
      for (const auto& [c, coef] : terms) {
        if (xp[c] == -1) {
          if (row.require_all_terms) return false;
          continue;
        }
        out->push_back({xp[c], coef});
        if (coef > 0.0) binding = true;
      }
      if (out->empty()) return false;
      if (!row.require_all_terms && row.sense == RowSense::kLe &&
          row.rhs >= 0.0 && !binding) {
        return false;
      }
      return true;
    };

    std::vector<LinearTerm> built;
    if (row.scope != ArcScope::kHoldoverArcs) {
      for (std::size_t a = 0; a < net_.transport_arcs().size(); ++a) {
        const TransportArc& arc = net_.transport_arcs()[a];
        const LayerTag tag = net_.layers()[arc.event - 1].tag;
        bool in_scope = false;
        switch (row.scope) {
          case ArcScope::kAllArcs:
          case ArcScope::kTransportArcs:
            in_scope = true;
            break;
          case ArcScope::kVehicleArcs:
            in_scope = !arc.vehicle.empty();
            break;
          case ArcScope::kSelectedArcs:
            in_scope = any_selector_matches(row.selectors, arc, tag);
            break;
          case ArcScope::kHoldoverArcs:
            break;
        }
        if (!in_scope || !build(avars_[a].xp, &built)) continue;
        model_.add_constraint(row.name + "." + arc_token(arc), built,
                              row.sense, row.rhs);
      }
    }
    if (row.scope == ArcScope::kAllArcs ||
        row.scope == ArcScope::kHoldoverArcs) {
      for (std::size_t h = 0; h < net_.holdover_arcs().size(); ++h) {
        const HoldoverArc& arc = net_.holdover_arcs()[h];
        if (!build(hvars_[h].xp, &built)) continue;
        model_.add_constraint(
            row.name + ".h." + arc.node + event_tag(arc.from_event), built,
            row.sense, row.rhs);
      }
    }
  }

  for (const ZeroRestriction& zr : policy.restrictions) {
    const std::string where = "restriction on '" + zr.commodity + "'";
    const int c = schema.index(zr.commodity);
    if (c == -1) {
      throw UnknownPolicyTargetError(where + ": unknown commodity");
    }
    for (const ArcSelector& s : zr.selectors) check_selector(s, where);
    for (std::size_t a = 0; a < net_.transport_arcs().size(); ++a) {
      const TransportArc& arc = net_.transport_arcs()[a];
      const LayerTag tag = net_.layers()[arc.event - 1].tag;
      if (!zr.selectors.empty() &&
          !any_selector_matches(zr.selectors, arc, tag)) {
        continue;
      }
      if (avars_[a].xp[c] != -1) model_.mutable_variable(avars_[a].xp[c]).ub = 0.0;
      if (avars_[a].xm[c] != -1) model_.mutable_variable(avars_[a].xm[c]).ub = 0.0;
    }
  }
}

void ModelBuilder::attach_pwl_tof(const std::string& arc_label,
                                  const std::vector<double>& initial_mass_kg,
                                  const std::vector<double>& tof_days) {
  require_variables("attach_pwl_tof");
  if (time_done_) {
    throw EncodeError("attach_pwl_tof must precede emit_time_constraints");
  }
  const int a = arc_index(arc_label);
  if (a == -1) throw EncodeError("unknown transport arc '" + arc_label + "'");
  if (avars_[a].dt != -1) {
    throw EncodeError("arc " + arc_label + " already has a time model");
  }
  check_breakpoints("arc " + arc_label, initial_mass_kg, tof_days.size());
  for (double t : tof_days) {
    if (t < 0.0) {
      throw BadBreakpointsError("arc " + arc_label +
                                ": traversal times must be nonnegative");
    }
  }

  const std::string tok = arc_token(net_.transport_arcs()[a]);
  const std::size_t n = initial_mass_kg.size();
  std::vector<int> lam(n);
  std::vector<LinearTerm> conv, dom, rng;
  for (std::size_t i = 0; i < n; ++i) {
    lam[i] = model_.add_variable("lamt." + tok + "." + std::to_string(i + 1),
                                 0.0, 1.0, 0.0, VarKind::kContinuous);
    conv.push_back({lam[i], 1.0});
    if (initial_mass_kg[i] != 0.0) dom.push_back({lam[i], initial_mass_kg[i]});
    if (tof_days[i] != 0.0) rng.push_back({lam[i], tof_days[i]});
  }
  const int dt = model_.add_variable("dtv." + tok, 0.0, kInfinity, 0.0,
                                     VarKind::kContinuous);
  dom.push_back({avars_[a].yp, -1.0});
  rng.push_back({dt, -1.0});
  model_.add_constraint("tofp.c." + tok, conv, RowSense::kEq, 1.0);
  model_.add_constraint("tofp.d." + tok, dom, RowSense::kEq, 0.0);
  model_.add_constraint("tofp.r." + tok, rng, RowSense::kEq, 0.0);
  model_.add_sos2("sos.t." + tok, lam, initial_mass_kg);
  avars_[a].dt = dt;
}

void ModelBuilder::emit_time_constraints(const SurrogateLibrary& lib,
                                         double t_cargo_days,
                                         double t_crew_days) {
  require_variables("emit_time_constraints");
  require_once(time_done_, "emit_time_constraints");
  const CommoditySchema& schema = net_.schema();

  auto append_time_terms = [&](int ai, std::vector<LinearTerm>* terms) {
    const TransportArc& arc = net_.transport_arcs()[ai];
    const ArcVars& v = avars_[ai];
    if (v.dt != -1) {
      terms->push_back({v.dt, 1.0});
      return;
    }
    const AffineTof* tof = lib.find_tof(arc.surrogate);
    if (tof == nullptr) {
      throw MissingTofModelError("no time-of-flight model for arc " +
                                 arc.label());
    }
    if (tof->q1_days_per_kg != 0.0) {
      terms->push_back({v.yp, tof->q1_days_per_kg});
    }
    if (tof->q0_days != 0.0) {
      const int veh = schema.require(arc.vehicle);
      if (v.xp[veh] == -1) {
        throw EncodeError("vehicle '" + arc.vehicle +
                          "' may not flow on its own arc " + arc.label());
      }
      terms->push_back({v.xp[veh], tof->q0_days});
    }
  };

  std::vector<LinearTerm> cargo_total;
  std::vector<LinearTerm> crew_terms;
  for (const EventLayer& layer : net_.layers()) {
    if (is_cargo(layer.tag)) {
      const int tau_var = tau_.at(layer.event);
      std::map<std::string, std::vector<int>> by_vehicle;
      for (int ai : layer.arcs) {
        const TransportArc& arc = net_.transport_arcs()[ai];
        if (!arc.vehicle.empty()) by_vehicle[arc.vehicle].push_back(ai);
      }
      for (const auto& [veh, arcs] : by_vehicle) {
        std::vector<LinearTerm> terms;
        for (int ai : arcs) append_time_terms(ai, &terms);
        if (terms.empty()) continue;
        terms.push_back({tau_var, -1.0});
        model_.add_constraint("tof" + event_tag(layer.event) + "." + veh,
                              terms, RowSense::kLe, 0.0);
      }
      cargo_total.push_back({tau_var, 1.0});
    } else {
      for (int ai : layer.arcs) {
        if (!net_.transport_arcs()[ai].vehicle.empty()) {
          append_time_terms(ai, &crew_terms);
        }
      }
    }
  }
  if (!cargo_total.empty() && std::isfinite(t_cargo_days)) {
    model_.add_constraint("tof.cargo", cargo_total, RowSense::kLe,
                          t_cargo_days);
  }
  if (!crew_terms.empty() && std::isfinite(t_crew_days)) {
    model_.add_constraint("tof.crew", crew_terms, RowSense::kLe, t_crew_days);
  }
}

void ModelBuilder::emit_objective(
    const std::map<std::string, double>& holdover_cost_per_unit) {
  require_variables("emit_objective");
  require_once(objective_done_, "emit_objective");
  for (std::size_t a = 0; a < net_.transport_arcs().size(); ++a) {
    for (const auto& [c, cost] : net_.transport_arcs()[a].cost_per_unit) {
      if (cost != 0.0 && avars_[a].xp[c] != -1) {
        model_.mutable_variable(avars_[a].xp[c]).obj += cost;
      }
    }
  }
  for (const auto& [name, cost] : holdover_cost_per_unit) {
    const int c = net_.schema().require(name);
    if (cost == 0.0) continue;
    for (const HoldVars& v : hvars_) {
      if (v.xp[c] != -1) model_.mutable_variable(v.xp[c]).obj += cost;
    }
  }
}

MilpModel ModelBuilder::take_model() {
  model_.validate();
  return std::move(model_);
}

int ModelBuilder::xplus(int arc, int commodity) const {
  return avars_.at(arc).xp.at(commodity);
}
int ModelBuilder::xminus(int arc, int commodity) const {
  return avars_.at(arc).xm.at(commodity);
}
int ModelBuilder::yplus(int arc) const { return avars_.at(arc).yp; }
int ModelBuilder::yminus(int arc) const { return avars_.at(arc).ym; }
int ModelBuilder::hold_xplus(int holdover, int commodity) const {
  return hvars_.at(holdover).xp.at(commodity);
}
int ModelBuilder::hold_xminus(int holdover, int commodity) const {
  return hvars_.at(holdover).xm.at(commodity);
}
int ModelBuilder::tau(int event) const {
  auto it = tau_.find(event);
  return it == tau_.end() ? -1 : it->second;
}
int ModelBuilder::arc_index(const std::string& label) const {
  auto it = arc_by_label_.find(label);
  return it == arc_by_label_.end() ? -1 : it->second;
}
int ModelBuilder::holdover_index(const std::string& node,
                                 int from_event) const {
  auto it = hold_by_key_.find({node, from_event});
  return it == hold_by_key_.end() ? -1 : it->second;
}

std::string ModelBuilder::arc_token(int arc) const {
  return arc_token(net_.transport_arcs().at(arc));
}

}  // namespace evsl
