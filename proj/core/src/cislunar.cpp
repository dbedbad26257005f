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

#include "evsl/cislunar.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "nlohmann/json.hpp"

namespace evsl {
namespace {

using nlohmann::json;

// Static nodes. ES is the launch site, LEO and GTO the chemical- and
// electric-tug parking orbits, TLI a translunar-injection waypoint, EML1
// and EML2 halo-orbit way stations, LLO the destination orbit.
const std::vector<std::string> kNodes = {"ES",   "LEO",  "GTO", "TLI",
                                         "EML1", "EML2", "LLO"};

constexpr const char* kCsm = "CSM";
constexpr const char* kLm = "LM";
constexpr const char* kStrUs = "strUS";
constexpr const char* kFUs = "fUS";
constexpr const char* kFCsm = "fCSM";
constexpr const char* kFLm = "fLM";
constexpr const char* kTank = "strDtank";
constexpr const char* kFHigh = "fHIGH";
constexpr const char* kFLow = "fLOW";

// Lander propellant drawn at LLO by each mission's descent/ascent
// operations; fixed per mission, independent of routing.
constexpr double kFlmPerMissionKg = 33140.0 / 3.0;

// Launch price per kilogram delivered to each parking orbit; these are the
// only objective coefficients in the campaign.
constexpr double kLeoLaunchCostPerKg = 1.0;
constexpr double kGtoLaunchCostPerKg = 1.74;

// Plentiful Earth-surface stock of every producible commodity, per layer.
constexpr double kEarthSupplyKg = 1e7;

constexpr double kAmountTol = 1e-6;  // plan extraction cutoff, native units

const std::vector<std::string> kNonVehicleCommodities = {
    kStrUs, kFUs, kFCsm, kFLm, kTank, kFHigh, kFLow};

// Fixed column order for plan CSVs, mirroring the commodity declaration
// order of the campaign schema.
const std::vector<std::string> kCsvCommodityOrder = {
    kCsm,  kLm,   kStrUs, kFCsm, kFLm,   kFUs,   kTank,
    kFHigh, kFLow, "tug1", "tug2", "tug3", "tug4", "tug5",
    "tug6", "tug7", "tug8", "tug9", "tug10", "tug11", "tug12"};

struct TugUnit {
  std::string name;  // "tug1".."tug12"
  const VehicleSpec* spec = nullptr;
  bool electric = false;
  int sep_type = 0;  // 1..3 for electric units, 0 otherwise
  const char* fuel() const { return electric ? kFLow : kFHigh; }
};

// One unit per fleet slot, numbered in table order: chemical families
// first, then electric, so "tug1".."tug7" burn fHIGH and "tug8".."tug12"
// burn fLOW.
std::vector<TugUnit> expand_fleet(const ModelRegistry& registry) {
  std::vector<TugUnit> units;
  int ordinal = 1;
  for (const VehicleSpec& spec : registry.tugs()) {
    for (int u = 0; u < spec.units; ++u) {
      TugUnit t;
      t.name = "tug" + std::to_string(ordinal++);
      t.spec = &spec;
      t.electric = spec.propulsion == Propulsion::kElectric;
      if (t.electric) t.sep_type = spec.name.back() - '0';
      units.push_back(t);
    }
  }
  return units;
}

// The trajectory tables label the halo nodes L1/L2.
std::string table_label(const std::string& node) {
  if (node == "EML1") return "L1";
  if (node == "EML2") return "L2";
  return node;
}

std::string route(const std::string& origin, const std::string& dest) {
  return table_label(origin) + " to " + table_label(dest);
}

std::string cp_key(const std::string& o, const std::string& d) {
  return "cp." + o + "." + d;
}
std::string sep_key(const std::string& unit, const std::string& o,
                    const std::string& d) {
  return "sep." + unit + "." + o + "." + d;
}
std::string crew_key(const std::string& o, const std::string& d) {
  return "crew." + o + "." + d;
}

void add_cp_surrogate(SurrogateLibrary& lib, const ModelRegistry& reg,
                      const std::string& o, const std::string& d) {
  const std::string key = cp_key(o, d);
  if (lib.has_mass(key)) return;
  const HighThrustModel& m = reg.cp(route(o, d));
  lib.add_mass(key, AffineSurrogate{{BurnStage{kFHigh, m.mass_ratio()}}});
  lib.add_tof(key, AffineTof{0.0, m.tof_days});
}

// Electric transfers are fitted per tug type; intercepts are in tonnes and
// time slopes in days per tonne, converted here to the model's kg basis.
// The intercept terms activate through the unit itself, so each unit gets
// its own key.
void add_sep_surrogate(SurrogateLibrary& lib, const ModelRegistry& reg,
                       const TugUnit& t, const std::string& o,
                       const std::string& d) {
  const std::string key = sep_key(t.name, o, d);
  if (lib.has_mass(key)) return;
  const AffineLowThrustModel& m = reg.sep(route(o, d), t.sep_type);
  lib.add_mass(key,
               AffineSurrogate{{BurnStage{kFLow, m.p1, m.p0 * 1000.0, t.name}}});
  lib.add_tof(key, AffineTof{m.q1 / 1000.0, m.q0});
}

BurnStage crew_stage(const ModelRegistry& reg, const CrewArc& leg) {
  const bool upper_stage = leg.impulse_by == "US";
  const CrewVehicleSpec& v = reg.crew_vehicle(leg.impulse_by);
  BurnStage s;
  s.fuel = upper_stage ? kFUs : kFCsm;
  s.p1 = rocket_mass_ratio(leg.dv_kms, v.isp_s);
  // The upper stage is jettisoned as soon as its burn completes.
  if (upper_stage) s.drop_after = {kStrUs};
  return s;
}

// A crew transfer is one arc in the network even when it chains several
// impulses (injection by the upper stage, then capture by the crew craft);
// the legs compose serially and their trip times add.
void add_crew_surrogate(SurrogateLibrary& lib, const ModelRegistry& reg,
                        const std::string& o, const std::string& d,
                        const std::vector<std::string>& legs) {
  const std::string key = crew_key(o, d);
  if (lib.has_mass(key)) return;
  AffineSurrogate mass;
  double tof = 0.0;
  for (const std::string& label : legs) {
    const CrewArc& leg = reg.crew(label);
    mass.stages.push_back(crew_stage(reg, leg));
    tof += leg.tof_days;
  }
  lib.add_mass(key, mass);
  lib.add_tof(key, AffineTof{0.0, tof});
}

void check_config(const CampaignConfig& cfg) {
  if (!(cfg.t_cargo_days >= 0.0))
    throw CislunarError("config: t_cargo_days must be >= 0");
  if (!(cfg.t_crew_days >= 0.0))
    throw CislunarError("config: t_crew_days must be >= 0");
  if (cfg.missions < 0) throw CislunarError("config: missions must be >= 0");
  if (cfg.tug_uses < 0) throw CislunarError("config: tug_uses must be >= 0");
  if (cfg.missions + cfg.tug_uses < 1)
    throw CislunarError("config: campaign needs at least one layer block");
  if (!(cfg.rel_gap >= 0.0))
    throw CislunarError("config: rel_gap must be >= 0");
  if (!(cfg.time_limit_s > 0.0))
    throw CislunarError("config: time_limit_s must be > 0");
  if (cfg.threads < 1) throw CislunarError("config: threads must be >= 1");
}

double row_violation(const LinearConstraint& row,
                     const std::vector<double>& x) {
  double lhs = 0.0;
  for (const LinearTerm& t : row.terms) lhs += t.coef * x[t.var];
  switch (row.sense) {
    case RowSense::kLe:
      return std::max(0.0, lhs - row.rhs);
    case RowSense::kGe:
      return std::max(0.0, row.rhs - lhs);
    case RowSense::kEq:
      return std::abs(lhs - row.rhs);
  }
  return 0.0;
}

bool starts_with(const std::string& s, const char* prefix) {
  return s.rfind(prefix, 0) == 0;
}

// Trimmed fixed-point rendering: integers stay integers, fractions keep up
// to three decimals. Keeps CSV output byte-stable across platforms.
std::string format_amount(double v) {
  const double r = std::round(v);
  if (std::abs(v - r) < 1e-9) {
    std::ostringstream os;
    os << static_cast<long long>(r);
    return os.str();
  }
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(3);
  os << v;
  std::string s = os.str();
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

json amounts_to_json(const std::map<std::string, double>& m) {
  json j = json::object();
  for (const auto& [name, amount] : m) j[name] = amount;
  return j;
}

std::map<std::string, double> amounts_from_json(const json& j,
                                                const char* where) {
  if (!j.is_object())
    throw CislunarError(std::string("plan: ") + where + " must be an object");
  std::map<std::string, double> m;
  for (const auto& [name, amount] : j.items()) {
    if (!amount.is_number())
      throw CislunarError(std::string("plan: ") + where + "." + name +
                          " must be a number");
    m[name] = amount.get<double>();
  }
  return m;
}

}  // namespace

CampaignConfig CampaignConfig::from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw CislunarError(std::string("config: ") + e.what());
  }
  if (!j.is_object())
    throw CislunarError("config: top level must be a JSON object");

  static const std::set<std::string> known = {
      "t_cargo_days", "t_crew_days",  "missions", "tug_uses", "enabled_tugs",
      "rel_gap",      "time_limit_s", "threads",  "log"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!known.count(key))
      throw CislunarError("config: unknown key '" + key + "'");
  }

  CampaignConfig cfg;
  auto number = [&](const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number())
      throw CislunarError(std::string("config: ") + key +
                          " must be a number");
    return j[key].get<double>();
  };
  auto integer = [&](const char* key, int fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer())
      throw CislunarError(std::string("config: ") + key +
                          " must be an integer");
    return j[key].get<int>();
  };
  cfg.t_cargo_days = number("t_cargo_days", cfg.t_cargo_days);
  cfg.t_crew_days = number("t_crew_days", cfg.t_crew_days);
  cfg.missions = integer("missions", cfg.missions);
  cfg.tug_uses = integer("tug_uses", cfg.tug_uses);
  cfg.rel_gap = number("rel_gap", cfg.rel_gap);
  cfg.time_limit_s = number("time_limit_s", cfg.time_limit_s);
  cfg.threads = integer("threads", cfg.threads);
  if (j.contains("log")) {
    if (!j["log"].is_boolean())
      throw CislunarError("config: log must be a boolean");
    cfg.log = j["log"].get<bool>();
  }
  if (j.contains("enabled_tugs")) {
    if (!j["enabled_tugs"].is_array())
      throw CislunarError("config: enabled_tugs must be an array");
    for (const auto& name : j["enabled_tugs"]) {
      if (!name.is_string())
        throw CislunarError("config: enabled_tugs entries must be strings");
      cfg.enabled_tugs.push_back(name.get<std::string>());
    }
  }
  check_config(cfg);
  return cfg;
}

CampaignConfig CampaignConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CislunarError("config: cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_string(buf.str());
}

Campaign Campaign::build(const CampaignConfig& config,
                         const ModelRegistry& registry) {
  check_config(config);

  // --- Fleet ----------------------------------------------------------
  const std::vector<TugUnit> all_units = expand_fleet(registry);
  std::vector<TugUnit> fleet;
  if (config.enabled_tugs.empty()) {
    fleet = all_units;
  } else {
    std::set<std::string> seen;
    for (const std::string& name : config.enabled_tugs) {
      if (!seen.insert(name).second)
        throw CislunarError("config: duplicate enabled tug '" + name + "'");
      auto it = std::find_if(all_units.begin(), all_units.end(),
                             [&](const TugUnit& t) { return t.name == name; });
      if (it == all_units.end())
        throw CislunarError("config: unknown tug unit '" + name + "'");
      fleet.push_back(*it);
    }
    // Keep fleet in ordinal order regardless of how the config listed it.
    std::sort(fleet.begin(), fleet.end(),
              [](const TugUnit& a, const TugUnit& b) {
                return std::stoi(a.name.substr(3)) <
                       std::stoi(b.name.substr(3));
              });
  }
  const bool any_electric =
      std::any_of(fleet.begin(), fleet.end(),
                  [](const TugUnit& t) { return t.electric; });

  // --- Commodities ------------------------------------------------------
  CommoditySchema schema;
  const CrewVehicleSpec& csm = registry.crew_vehicle("CSM");
  const CrewVehicleSpec& lm = registry.crew_vehicle("LM");
  const CrewVehicleSpec& us = registry.crew_vehicle("US");
  schema.add(kCsm, CommodityKind::kBinary, csm.dry_t * 1000.0);
  schema.add(kLm, CommodityKind::kBinary, lm.dry_t * 1000.0);
  schema.add(kStrUs, CommodityKind::kContinuous, 1.0);
  schema.add(kFCsm, CommodityKind::kContinuous, 1.0);
  schema.add(kFLm, CommodityKind::kContinuous, 1.0);
  schema.add(kFUs, CommodityKind::kContinuous, 1.0);
  schema.add(kTank, CommodityKind::kContinuous, 1.0);
  schema.add(kFHigh, CommodityKind::kContinuous, 1.0);
  schema.add(kFLow, CommodityKind::kContinuous, 1.0);
  for (const TugUnit& t : all_units)
    schema.add(t.name, CommodityKind::kBinary, t.spec->dry_t * 1000.0);

  auto unit_mass = [&schema](const std::string& name) {
    return schema.at(schema.require(name)).unit_mass_kg;
  };

  // --- Trajectory surrogates -------------------------------------------
  SurrogateLibrary lib;
  for (const std::string& halo : {std::string("EML1"), std::string("EML2")}) {
    add_cp_surrogate(lib, registry, "LEO", halo);
    add_cp_surrogate(lib, registry, halo, "LLO");
    add_cp_surrogate(lib, registry, "LLO", halo);
    add_cp_surrogate(lib, registry, halo, "LEO");
    for (const TugUnit& t : fleet) {
      if (!t.electric) continue;
      add_sep_surrogate(lib, registry, t, "GTO", halo);
      add_sep_surrogate(lib, registry, t, halo, "LLO");
      add_sep_surrogate(lib, registry, t, "LLO", halo);
      add_sep_surrogate(lib, registry, t, halo, "GTO");
    }
  }
  add_crew_surrogate(lib, registry, "LEO", "TLI", {"LEO to TLI"});
  add_crew_surrogate(lib, registry, "TLI", "LLO", {"TLI to LLO"});
  add_crew_surrogate(lib, registry, "LEO", "EML1",
                     {"LEO to TL1I", "TL1I to L1"});
  add_crew_surrogate(lib, registry, "EML1", "LLO", {"L1 to LLO"});
  add_crew_surrogate(lib, registry, "LEO", "EML2",
                     {"LEO to TL2I", "TL2I to L2"});
  add_crew_surrogate(lib, registry, "EML2", "LLO", {"L2 to LLO"});
  add_crew_surrogate(lib, registry, "LLO", "ES", {"LLO to ES"});
  add_crew_surrogate(lib, registry, "LLO", "EML1", {"LLO to L1"});
  add_crew_surrogate(lib, registry, "EML1", "ES", {"L1 to ES"});
  add_crew_surrogate(lib, registry, "LLO", "EML2", {"LLO to L2"});
  add_crew_surrogate(lib, registry, "EML2", "ES", {"L2 to ES"});

  // --- Layers -----------------------------------------------------------
  const std::vector<std::string> payloads = {kTank, kFLm, kFCsm};
  auto with_payloads = [&payloads](std::vector<std::string> names) {
    names.insert(names.end(), payloads.begin(), payloads.end());
    return names;
  };
  auto launch_cost = [&](const std::vector<std::string>& allowed,
                         double rate) {
    std::map<std::string, double> cost;
    for (const std::string& name : allowed)
      cost[name] = rate * unit_mass(name);
    return cost;
  };

  std::vector<LayerSpec> layers;
  for (int use = 0; use < config.tug_uses; ++use) {
    // Outbound transfer: launches plus parking-orbit departures.
    LayerSpec f1{LayerTag::kCargoForward, {}};
    {
      std::vector<std::string> allowed{kFHigh};
      for (const TugUnit& t : fleet)
        if (!t.electric) allowed.push_back(t.name);
      allowed = with_payloads(std::move(allowed));
      f1.arcs.push_back({"ES", "LEO", "", "", allowed,
                         launch_cost(allowed, kLeoLaunchCostPerKg)});
    }
    if (any_electric) {
      std::vector<std::string> allowed{kFLow};
      for (const TugUnit& t : fleet)
        if (t.electric) allowed.push_back(t.name);
      allowed = with_payloads(std::move(allowed));
      f1.arcs.push_back({"ES", "GTO", "", "", allowed,
                         launch_cost(allowed, kGtoLaunchCostPerKg)});
    }
    for (const TugUnit& t : fleet) {
      const std::string from = t.electric ? "GTO" : "LEO";
      for (const char* halo : {"EML1", "EML2"}) {
        const std::string key = t.electric ? sep_key(t.name, from, halo)
                                           : cp_key(from, halo);
        f1.arcs.push_back({from, halo, t.name, key,
                           with_payloads({t.name, t.fuel()}), {}});
      }
    }
    layers.push_back(std::move(f1));

    // Final delivery into LLO.
    LayerSpec f2{LayerTag::kCargoForward, {}};
    for (const TugUnit& t : fleet) {
      for (const char* halo : {"EML1", "EML2"}) {
        const std::string key = t.electric ? sep_key(t.name, halo, "LLO")
                                           : cp_key(halo, "LLO");
        f2.arcs.push_back({halo, "LLO", t.name, key,
                           with_payloads({t.name, t.fuel()}), {}});
      }
    }
    layers.push_back(std::move(f2));

    // Return transfer to a halo; tugs ride home empty of payload.
    LayerSpec r1{LayerTag::kCargoReturn, {}};
    for (const TugUnit& t : fleet) {
      for (const char* halo : {"EML1", "EML2"}) {
        const std::string key = t.electric ? sep_key(t.name, "LLO", halo)
                                           : cp_key("LLO", halo);
        r1.arcs.push_back({"LLO", halo, t.name, key, {t.name, t.fuel()}, {}});
      }
    }
    layers.push_back(std::move(r1));

    // Return to the parking orbit for relaunch-free reuse.
    LayerSpec r2{LayerTag::kCargoReturn, {}};
    for (const TugUnit& t : fleet) {
      const std::string back = t.electric ? "GTO" : "LEO";
      for (const char* halo : {"EML1", "EML2"}) {
        const std::string key = t.electric ? sep_key(t.name, halo, back)
                                           : cp_key(halo, back);
        r2.arcs.push_back({halo, back, t.name, key, {t.name, t.fuel()}, {}});
      }
    }
    layers.push_back(std::move(r2));
  }

  const std::vector<std::string> kCrewStack = {kCsm, kLm, kFCsm, kFLm};
  const std::vector<std::string> kCrewStackUs = {kCsm, kLm,  kFCsm,
                                                 kFLm, kStrUs, kFUs};
  const std::vector<std::string> kCrewReturn = {kCsm, kFCsm};
  for (int m = 0; m < config.missions; ++m) {
    LayerSpec fwd{LayerTag::kCrewForward, {}};
    fwd.arcs.push_back({"ES", "LEO", "", "", kCrewStackUs,
                        launch_cost(kCrewStackUs, kLeoLaunchCostPerKg)});
    fwd.arcs.push_back(
        {"LEO", "TLI", kCsm, crew_key("LEO", "TLI"), kCrewStackUs, {}});
    fwd.arcs.push_back(
        {"TLI", "LLO", kCsm, crew_key("TLI", "LLO"), kCrewStack, {}});
    for (const char* halo : {"EML1", "EML2"}) {
      fwd.arcs.push_back(
          {"LEO", halo, kCsm, crew_key("LEO", halo), kCrewStackUs, {}});
      fwd.arcs.push_back(
          {halo, "LLO", kCsm, crew_key(halo, "LLO"), kCrewStack, {}});
    }
    layers.push_back(std::move(fwd));

    LayerSpec ret{LayerTag::kCrewReturn, {}};
    ret.arcs.push_back(
        {"LLO", "ES", kCsm, crew_key("LLO", "ES"), kCrewReturn, {}});
    for (const char* halo : {"EML1", "EML2"}) {
      ret.arcs.push_back(
          {"LLO", halo, kCsm, crew_key("LLO", halo), kCrewReturn, {}});
      ret.arcs.push_back(
          {halo, "ES", kCsm, crew_key(halo, "ES"), kCrewReturn, {}});
    }
    layers.push_back(std::move(ret));
  }

  // --- Demands ----------------------------------------------------------
  DemandTable demands;
  const int num_events = 4 * config.tug_uses + 2 * config.missions;
  for (const TugUnit& t : fleet) demands.add("ES", 1, t.name, 1.0);
  for (int e = 1; e <= num_events; ++e)
    for (const std::string& c : kNonVehicleCommodities)
      demands.add("ES", e, c, kEarthSupplyKg);
  for (int m = 0; m < config.missions; ++m) {
    const int fwd = 4 * config.tug_uses + 2 * m + 1;
    demands.add("ES", fwd, kCsm, 1.0);
    demands.add("ES", fwd, kLm, 1.0);
    demands.add("LLO", fwd, kLm, -1.0);
    demands.add("LLO", fwd, kFLm, -kFlmPerMissionKg);
    demands.add("ES", fwd + 1, kCsm, -1.0);  // the crew craft must come home
  }

  Campaign campaign;
  campaign.config_ = config;
  campaign.network_ = std::make_unique<EventNetwork>(
      build_event_network(kNodes, layers, std::move(schema), demands));

  {
    std::map<std::string, std::set<LayerTag>> vehicle_layers;
    for (const TugUnit& t : fleet)
      vehicle_layers[t.name] = {LayerTag::kCargoForward,
                                LayerTag::kCargoReturn};
    vehicle_layers[kCsm] = {LayerTag::kCrewForward, LayerTag::kCrewReturn};
    MultigraphReport report =
        validate_multigraph(*campaign.network_, vehicle_layers);
    if (!report.ok())
      throw CislunarError("campaign network: " +
                          report.violations.front().detail);
  }

  // --- Concurrency families ---------------------------------------------
  ConcurrencyPolicy policy;
  for (const TugUnit& t : fleet) {
    CommodityRow cap;
    cap.name = "cap." + t.name;
    cap.terms = {{t.fuel(), 1.0}, {t.name, -t.spec->capacity_t * 1000.0}};
    cap.scope = ArcScope::kVehicleArcs;
    cap.require_all_terms = true;
    policy.rows.push_back(std::move(cap));
  }
  for (const CrewVehicleSpec* v : {&csm, &lm}) {
    CommodityRow cap;
    cap.name = "cap." + v->name;
    cap.terms = {{v->name == "CSM" ? kFCsm : kFLm, 1.0},
                 {v->name, -v->capacity_t * 1000.0}};
    cap.scope = ArcScope::kVehicleArcs;
    cap.require_all_terms = true;
    policy.rows.push_back(std::move(cap));
  }
  {
    // The launcher upper stage has no fixed dry mass: its structure is
    // sized in proportion to the injection propellant it must hold.
    const double eps_hat_us = us.fuel_eps / (1.0 - us.fuel_eps);
    CommodityRow size_us;
    size_us.name = "size.US";
    size_us.terms = {{kFUs, eps_hat_us}, {kStrUs, -1.0}};
    size_us.scope = ArcScope::kSelectedArcs;
    for (const char* dest : {"TLI", "EML1", "EML2"}) {
      ArcSelector sel;
      sel.origin = "LEO";
      sel.dest = dest;
      sel.vehicle = kCsm;
      size_us.selectors.push_back(std::move(sel));
    }
    size_us.require_all_terms = true;
    policy.rows.push_back(std::move(size_us));
  }
  {
    // Crew propellant moving or parking beyond what the crew craft hold
    // internally must ride in droptanks sized by the structural fraction.
    const double eps_hat = csm.fuel_eps / (1.0 - csm.fuel_eps);
    CommodityRow tank;
    tank.name = "tank";
    tank.terms = {{kFLm, eps_hat},
                  {kFCsm, eps_hat},
                  {kLm, -eps_hat * lm.capacity_t * 1000.0},
                  {kCsm, -eps_hat * csm.capacity_t * 1000.0},
                  {kTank, -1.0}};
    tank.scope = ArcScope::kAllArcs;
    tank.require_all_terms = false;
    policy.rows.push_back(std::move(tank));
  }

  // --- Encode -----------------------------------------------------------
  campaign.builder_ = std::make_unique<ModelBuilder>(*campaign.network_);
  ModelBuilder& b = *campaign.builder_;
  b.add_flow_variables();
  b.emit_mass_balance();
  b.emit_transformation(lib);
  b.emit_concurrency(policy);
  b.emit_time_constraints(lib, config.t_cargo_days, config.t_crew_days);
  b.emit_objective();
  campaign.model_ = b.take_model();

  // Identical idle units are interchangeable; insisting that lower-numbered
  // units of a family fly at least as often as higher-numbered ones removes
  // the permutation symmetry from the search tree.
  {
    const CommoditySchema& sch = campaign.network_->schema();
    const int num_arcs =
        static_cast<int>(campaign.network_->transport_arcs().size());
    auto activations = [&](const TugUnit& t, double sign,
                           std::vector<LinearTerm>& terms) {
      const int k = sch.require(t.name);
      for (int a = 0; a < num_arcs; ++a) {
        const int v = b.xplus(a, k);
        if (v >= 0) terms.push_back({v, sign});
      }
    };
    for (size_t i = 0; i + 1 < fleet.size(); ++i) {
      if (fleet[i].spec->name != fleet[i + 1].spec->name) continue;
      std::vector<LinearTerm> terms;
      activations(fleet[i], 1.0, terms);
      activations(fleet[i + 1], -1.0, terms);
      campaign.model_.add_constraint(
          "sym." + fleet[i].name + "." + fleet[i + 1].name, terms,
          RowSense::kGe, 0.0);
    }
  }

  // --- Lookup tables for plan replay -------------------------------------
  const auto& arcs = campaign.network_->transport_arcs();
  for (int a = 0; a < static_cast<int>(arcs.size()); ++a) {
    campaign.arc_lookup_[{arcs[a].origin, arcs[a].dest, arcs[a].vehicle,
                          arcs[a].event}] = a;
    if (arcs[a].surrogate.empty()) continue;
    if (const AffineTof* tof = lib.find_tof(arcs[a].surrogate))
      campaign.tof_by_arc_[a] = *tof;
  }
  for (int i = 0; i < campaign.model_.num_constraints(); ++i)
    campaign.row_by_name_[campaign.model_.constraint(i).name] = i;

  return campaign;
}

SolveReport Campaign::solve() const {
  MilpSolveOptions options;
  options.rel_gap = config_.rel_gap;
  options.time_limit_s = config_.time_limit_s;
  options.threads = config_.threads;
  options.log = config_.log;
  return solve(options);
}

SolveReport Campaign::solve(const MilpSolveOptions& options) const {
  if (!options.warm_start.empty()) return solve_milp(model_, options);
  MilpSolveOptions seeded = options;
  seeded.warm_start = reference_seed();
  return solve_milp(model_, seeded);
}

std::vector<double> Campaign::reference_seed() const {
  std::vector<double> x(model_.num_variables(), 0.0);
  const CommoditySchema& schema = network_->schema();
  const int csm = schema.require(kCsm);
  const int lm = schema.require(kLm);
  auto pin = [&](const std::string& o, const std::string& d, int event,
                 int commodity) {
    auto it = arc_lookup_.find(
        {o, d, o == "ES" ? std::string() : std::string(kCsm), event});
    if (it == arc_lookup_.end()) return;
    const int vp = builder_->xplus(it->second, commodity);
    const int vm = builder_->xminus(it->second, commodity);
    if (vp >= 0) x[vp] = 1.0;
    if (vm >= 0) x[vm] = 1.0;
  };
  for (int m = 0; m < config_.missions; ++m) {
    const int fwd = 4 * config_.tug_uses + 2 * m + 1;
    for (const int k : {csm, lm}) {
      pin("ES", "LEO", fwd, k);
      pin("LEO", "TLI", fwd, k);
      pin("TLI", "LLO", fwd, k);
    }
    // The crew craft waits in lunar orbit while surface operations run.
    const int h = builder_->holdover_index("LLO", fwd);
    if (h >= 0) {
      const int hp = builder_->hold_xplus(h, csm);
      const int hm = builder_->hold_xminus(h, csm);
      if (hp >= 0) x[hp] = 1.0;
      if (hm >= 0) x[hm] = 1.0;
    }
    pin("LLO", "ES", fwd + 1, csm);
  }
  return x;
}

std::vector<double> Campaign::seed_from_plan(const FlowPlan& plan) const {
  const CommoditySchema& schema = network_->schema();
  std::vector<double> x(model_.num_variables(), 0.0);
  auto discrete = [&](const std::string& name) {
    const int k = schema.index(name);
    if (k < 0)
      throw UnmappableArcError("seed: unknown commodity '" + name + "'");
    return schema.at(k).kind == CommodityKind::kContinuous ? -1 : k;
  };
  for (const FlowRecord& r : plan.arcs) {
    auto it = arc_lookup_.find({r.origin, r.dest, r.vehicle, r.event});
    if (it == arc_lookup_.end())
      throw UnmappableArcError("seed: no arc " + r.origin + "->" + r.dest +
                               "@E" + std::to_string(r.event));
    for (const auto& [name, amount] : r.outflow) {
      const int k = discrete(name);
      if (k < 0) continue;
      // Vehicles survive their own transfers, so the departure count pins
      // the arrival count too; propellant stays free for the solver.
      const int vp = builder_->xplus(it->second, k);
      const int vm = builder_->xminus(it->second, k);
      if (vp < 0 || vm < 0)
        throw UnmappableArcError("seed: '" + name + "' not allowed on " +
                                 r.origin + "->" + r.dest);
      x[vp] = amount;
      x[vm] = amount;
    }
  }
  for (const HoldoverRecord& h : plan.holdovers) {
    const int idx = builder_->holdover_index(h.node, h.from_event);
    if (idx < 0)
      throw UnmappableArcError("seed: no holdover at " + h.node + "@E" +
                               std::to_string(h.from_event));
    for (const auto& [name, amount] : h.amount) {
      const int k = discrete(name);
      if (k < 0) continue;
      const int vp = builder_->hold_xplus(idx, k);
      const int vm = builder_->hold_xminus(idx, k);
      if (vp < 0 || vm < 0)
        throw UnmappableArcError("seed: '" + name + "' cannot be stored at " +
                                 h.node);
      x[vp] = amount;
      x[vm] = amount;
    }
  }
  return x;
}

double Campaign::arc_tof_days(int arc, const std::vector<double>& x) const {
  auto it = tof_by_arc_.find(arc);
  if (it == tof_by_arc_.end()) return 0.0;
  const TransportArc& a = network_->transport_arcs()[arc];
  double tof = 0.0;
  if (it->second.q1_days_per_kg != 0.0)
    tof += it->second.q1_days_per_kg * x[builder_->yplus(arc)];
  if (it->second.q0_days != 0.0) {
    const int veh = network_->schema().require(a.vehicle);
    tof += it->second.q0_days * x[builder_->xplus(arc, veh)];
  }
  return tof;
}

FlowPlan Campaign::extract_plan(const SolveReport& report) const {
  if (!report.has_solution ||
      static_cast<int>(report.solution.size()) != model_.num_variables())
    throw CislunarError("extract_plan: report carries no usable solution");
  const std::vector<double>& x = report.solution;
  const CommoditySchema& schema = network_->schema();

  FlowPlan plan;
  plan.objective_kg = model_.objective_value(x);
  const auto& arcs = network_->transport_arcs();
  for (int a = 0; a < static_cast<int>(arcs.size()); ++a) {
    FlowRecord rec;
    rec.origin = arcs[a].origin;
    rec.dest = arcs[a].dest;
    rec.vehicle = arcs[a].vehicle;
    rec.event = arcs[a].event;
    for (int k : arcs[a].allowed_commodities) {
      const int vp = builder_->xplus(a, k);
      const int vm = builder_->xminus(a, k);
      if (vp >= 0 && x[vp] > kAmountTol) rec.outflow[schema.at(k).name] = x[vp];
      if (vm >= 0 && x[vm] > kAmountTol) rec.inflow[schema.at(k).name] = x[vm];
    }
    if (rec.outflow.empty() && rec.inflow.empty()) continue;
    rec.tof_days = arc_tof_days(a, x);
    plan.arcs.push_back(std::move(rec));
  }
  const auto& holds = network_->holdover_arcs();
  for (int h = 0; h < static_cast<int>(holds.size()); ++h) {
    HoldoverRecord rec;
    rec.node = holds[h].node;
    rec.from_event = holds[h].from_event;
    for (int k : holds[h].allowed_commodities) {
      const int vp = builder_->hold_xplus(h, k);
      if (vp >= 0 && x[vp] > kAmountTol) rec.amount[schema.at(k).name] = x[vp];
    }
    if (!rec.amount.empty()) plan.holdovers.push_back(std::move(rec));
  }
  for (const EventLayer& layer : network_->layers()) {
    if (layer.tag != LayerTag::kCargoForward &&
        layer.tag != LayerTag::kCargoReturn)
      continue;
    double duration = 0.0;
    for (int a : layer.arcs)
      duration = std::max(duration, arc_tof_days(a, x));
    plan.layer_durations_days[layer.event] = duration;
  }
  return plan;
}

PlanAudit Campaign::validate_plan(const FlowPlan& plan) const {
  if (model_.num_sos2() > 0)
    throw CislunarError(
        "validate_plan: piecewise-linear arcs are not replayable");
  const CommoditySchema& schema = network_->schema();
  std::vector<double> x(model_.num_variables(), 0.0);

  auto arc_of = [&](const FlowRecord& r) {
    auto it = arc_lookup_.find({r.origin, r.dest, r.vehicle, r.event});
    if (it == arc_lookup_.end())
      throw UnmappableArcError("plan: no arc " + r.origin + "->" + r.dest +
                               (r.vehicle.empty() ? "" : ":" + r.vehicle) +
                               "@E" + std::to_string(r.event));
    return it->second;
  };
  auto commodity_of = [&](const std::string& name, const std::string& where) {
    const int k = schema.index(name);
    if (k < 0)
      throw UnmappableArcError("plan: unknown commodity '" + name + "' on " +
                               where);
    return k;
  };

  for (const FlowRecord& r : plan.arcs) {
    const int a = arc_of(r);
    const std::string where = r.origin + "->" + r.dest;
    for (const auto& [name, amount] : r.outflow) {
      const int v = builder_->xplus(a, commodity_of(name, where));
      if (v < 0)
        throw UnmappableArcError("plan: commodity '" + name +
                                 "' not allowed on " + where);
      x[v] = amount;
    }
    for (const auto& [name, amount] : r.inflow) {
      const int v = builder_->xminus(a, commodity_of(name, where));
      if (v < 0)
        throw UnmappableArcError("plan: commodity '" + name +
                                 "' not allowed on " + where);
      x[v] = amount;
    }
  }
  for (const HoldoverRecord& h : plan.holdovers) {
    const int idx = builder_->holdover_index(h.node, h.from_event);
    if (idx < 0)
      throw UnmappableArcError("plan: no holdover at " + h.node + "@E" +
                               std::to_string(h.from_event));
    for (const auto& [name, amount] : h.amount) {
      const int k = commodity_of(name, h.node + " holdover");
      const int vp = builder_->hold_xplus(idx, k);
      const int vm = builder_->hold_xminus(idx, k);
      if (vp < 0 || vm < 0)
        throw UnmappableArcError("plan: commodity '" + name +
                                 "' cannot be stored at " + h.node);
      x[vp] = amount;
      x[vm] = amount;
    }
  }

  // Hand-written plans list departures only; arrivals follow from each
  // arc's transformation row. A deficit (more propellant burned than
  // carried) clamps at zero and surfaces as a transformation residual.
  for (const FlowRecord& r : plan.arcs) {
    if (!r.inflow.empty()) continue;
    const int a = arc_of(r);
    const std::string token = builder_->arc_token(a);
    for (int k : network_->transport_arcs()[a].allowed_commodities) {
      const int vm = builder_->xminus(a, k);
      if (vm < 0) continue;
      auto row_it = row_by_name_.find("xf." + token + "." + schema.at(k).name);
      if (row_it == row_by_name_.end()) continue;  // arrival pinned at zero
      const LinearConstraint& row = model_.constraint(row_it->second);
      double self = 0.0, rest = 0.0;
      for (const LinearTerm& t : row.terms) {
        if (t.var == vm)
          self = t.coef;
        else
          rest += t.coef * x[t.var];
      }
      if (self != 0.0) x[vm] = std::max(0.0, (row.rhs - rest) / self);
    }
  }

  // Total-mass and duration variables are definitional; fill them in.
  const auto& arcs = network_->transport_arcs();
  for (int a = 0; a < static_cast<int>(arcs.size()); ++a) {
    double yp = 0.0, ym = 0.0;
    for (int k : arcs[a].allowed_commodities) {
      const double m = schema.at(k).unit_mass_kg;
      const int vp = builder_->xplus(a, k);
      const int vm = builder_->xminus(a, k);
      if (vp >= 0) yp += m * x[vp];
      if (vm >= 0) ym += m * x[vm];
    }
    x[builder_->yplus(a)] = yp;
    x[builder_->yminus(a)] = ym;
  }

  PlanAudit audit;
  for (const EventLayer& layer : network_->layers()) {
    const bool cargo = layer.tag == LayerTag::kCargoForward ||
                       layer.tag == LayerTag::kCargoReturn;
    double duration = 0.0;
    for (int a : layer.arcs) duration += cargo ? 0.0 : arc_tof_days(a, x);
    if (cargo) {
      for (int a : layer.arcs)
        duration = std::max(duration, arc_tof_days(a, x));
      x[builder_->tau(layer.event)] = duration;
      audit.t_cargo_days += duration;
    } else {
      audit.t_crew_days += duration;
    }
  }

  audit.objective_kg = model_.objective_value(x);
  audit.max_bound_violation = model_.max_bound_violation(x);
  audit.max_integrality_violation = model_.max_integrality_violation(x);
  for (int i = 0; i < model_.num_constraints(); ++i) {
    const LinearConstraint& row = model_.constraint(i);
    const double v = row_violation(row, x);
    if (v > audit.worst_violation) {
      audit.worst_violation = v;
      audit.worst_row = row.name;
    }
    if (starts_with(row.name, "bal.")) {
      audit.max_balance_violation_kg =
          std::max(audit.max_balance_violation_kg, v);
    } else if (starts_with(row.name, "xf.") || starts_with(row.name, "xfh.") ||
               starts_with(row.name, "tot.") ||
               starts_with(row.name, "pwl.") ||
               starts_with(row.name, "tofp.")) {
      audit.max_transform_violation_kg =
          std::max(audit.max_transform_violation_kg, v);
    } else if (starts_with(row.name, "tof.")) {
      audit.max_time_violation_days =
          std::max(audit.max_time_violation_days, v);
    } else {
      audit.max_policy_violation_kg =
          std::max(audit.max_policy_violation_kg, v);
    }
  }
  return audit;
}

std::string FlowPlan::to_json_string(int indent) const {
  json j;
  j["schema"] = "evsl.flowplan/1";
  j["objective_kg"] = objective_kg;
  json durations = json::object();
  for (const auto& [event, days] : layer_durations_days)
    durations[std::to_string(event)] = days;
  j["layer_durations_days"] = durations;
  j["arcs"] = json::array();
  for (const FlowRecord& r : arcs) {
    json a;
    a["origin"] = r.origin;
    a["dest"] = r.dest;
    a["vehicle"] = r.vehicle;
    a["event"] = r.event;
    a["tof_days"] = r.tof_days;
    a["outflow"] = amounts_to_json(r.outflow);
    if (!r.inflow.empty()) a["inflow"] = amounts_to_json(r.inflow);
    j["arcs"].push_back(std::move(a));
  }
  j["holdovers"] = json::array();
  for (const HoldoverRecord& h : holdovers) {
    json a;
    a["node"] = h.node;
    a["from_event"] = h.from_event;
    a["amount"] = amounts_to_json(h.amount);
    j["holdovers"].push_back(std::move(a));
  }
  return j.dump(indent) + "\n";
}

FlowPlan FlowPlan::from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw CislunarError(std::string("plan: ") + e.what());
  }
  if (!j.is_object() || j.value("schema", "") != "evsl.flowplan/1")
    throw CislunarError("plan: expected schema evsl.flowplan/1");
  FlowPlan plan;
  plan.objective_kg = j.value("objective_kg", 0.0);
  if (j.contains("layer_durations_days")) {
    for (const auto& [key, value] : j["layer_durations_days"].items())
      plan.layer_durations_days[std::stoi(key)] = value.get<double>();
  }
  for (const json& a : j.value("arcs", json::array())) {
    FlowRecord r;
    r.origin = a.value("origin", "");
    r.dest = a.value("dest", "");
    r.vehicle = a.value("vehicle", "");
    r.event = a.value("event", 0);
    r.tof_days = a.value("tof_days", 0.0);
    if (a.contains("outflow")) r.outflow = amounts_from_json(a["outflow"], "outflow");
    if (a.contains("inflow")) r.inflow = amounts_from_json(a["inflow"], "inflow");
    plan.arcs.push_back(std::move(r));
  }
  for (const json& a : j.value("holdovers", json::array())) {
    HoldoverRecord h;
    h.node = a.value("node", "");
    h.from_event = a.value("from_event", 0);
    if (a.contains("amount")) h.amount = amounts_from_json(a["amount"], "amount");
    plan.holdovers.push_back(std::move(h));
  }
  return plan;
}

FlowPlan FlowPlan::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CislunarError("plan: cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_string(buf.str());
}

std::string FlowPlan::to_csv() const {
  // Columns: the fixed campaign commodity order filtered to what appears,
  // then anything else alphabetically (future-proofing for custom schemas).
  std::set<std::string> used;
  for (const FlowRecord& r : arcs)
    for (const auto& [name, amount] : r.outflow) {
      (void)amount;
      used.insert(name);
    }
  for (const HoldoverRecord& h : holdovers)
    for (const auto& [name, amount] : h.amount) {
      (void)amount;
      used.insert(name);
    }
  std::vector<std::string> columns;
  for (const std::string& name : kCsvCommodityOrder)
    if (used.erase(name)) columns.push_back(name);
  columns.insert(columns.end(), used.begin(), used.end());

  std::ostringstream os;
  os << "layer,arc,vehicle";
  for (const std::string& name : columns) os << "," << name;
  os << ",tof_days\n";
  for (const FlowRecord& r : arcs) {
    os << r.event << "," << r.origin << " to " << r.dest << "," << r.vehicle;
    for (const std::string& name : columns) {
      auto it = r.outflow.find(name);
      os << "," << (it == r.outflow.end() ? "0" : format_amount(it->second));
    }
    os << "," << format_amount(r.tof_days) << "\n";
  }
  for (const HoldoverRecord& h : holdovers) {
    os << h.from_event << " to " << h.from_event + 1 << "," << h.node
       << " to " << h.node << ",";
    for (const std::string& name : columns) {
      auto it = h.amount.find(name);
      os << "," << (it == h.amount.end() ? "0" : format_amount(it->second));
    }
    os << ",-\n";
  }
  return os.str();
}

std::vector<ParetoPoint> pareto_sweep(
    const CampaignConfig& base, const ModelRegistry& registry,
    const std::vector<std::pair<double, double>>& grid, int workers) {
  if (grid.empty()) throw CislunarError("pareto_sweep: empty grid");
  // Process tighter budgets first, and hand every point the cheapest plan
  // found under budgets it dominates as a warm start.  A plan stays feasible
  // when both budgets relax and an incumbent can only improve, so with one
  // worker the reported objectives are monotone along each axis even when a
  // point stops on its gap or time limit.  With several workers the seeding
  // is best effort.
  std::vector<size_t> order(grid.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return std::tie(grid[a].second, grid[a].first) <
           std::tie(grid[b].second, grid[b].first);
  });
  struct SolvedPlan {
    double cargo, crew, objective;
    std::vector<double> solution;
  };
  std::vector<SolvedPlan> pool_solutions;
  std::mutex mu;
  std::vector<ParetoPoint> points(grid.size());
  std::atomic<size_t> next{0};
  auto run = [&]() {
    for (size_t oi = next.fetch_add(1); oi < order.size();
         oi = next.fetch_add(1)) {
      ParetoPoint& p = points[order[oi]];
      p.t_cargo_days = grid[order[oi]].first;
      p.t_crew_days = grid[order[oi]].second;
      try {
        CampaignConfig cfg = base;
        cfg.t_cargo_days = p.t_cargo_days;
        cfg.t_crew_days = p.t_crew_days;
        Campaign campaign = Campaign::build(cfg, registry);
        MilpSolveOptions options;
        options.rel_gap = cfg.rel_gap;
        options.time_limit_s = cfg.time_limit_s;
        options.threads = cfg.threads;
        options.log = cfg.log;
        {
          std::lock_guard<std::mutex> lock(mu);
          const SolvedPlan* best = nullptr;
          for (const SolvedPlan& s : pool_solutions)
            if (s.cargo <= p.t_cargo_days && s.crew <= p.t_crew_days &&
                (!best || s.objective < best->objective))
              best = &s;
          if (best) options.warm_start = best->solution;
        }
        SolveReport report = campaign.solve(options);
        p.status = report.status;
        p.has_solution = report.has_solution;
        p.best_bound_kg = report.best_bound;
        p.gap = report.gap;
        p.time_s = report.time_s;
        p.nodes = report.nodes;
        if (report.has_solution) {
          p.objective_kg = report.objective;
          p.plan = campaign.extract_plan(report);
          std::lock_guard<std::mutex> lock(mu);
          pool_solutions.push_back({p.t_cargo_days, p.t_crew_days,
                                    p.objective_kg,
                                    std::move(report.solution)});
        }
      } catch (const std::exception& e) {
        p.error = e.what();
      }
    }
  };
  if (workers <= 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    const int n = std::min<int>(workers, static_cast<int>(grid.size()));
    pool.reserve(n);
    for (int i = 0; i < n; ++i) pool.emplace_back(run);
    for (std::thread& t : pool) t.join();
  }
  std::sort(points.begin(), points.end(),
            [](const ParetoPoint& a, const ParetoPoint& b) {
              return std::tie(a.t_crew_days, a.t_cargo_days) <
                     std::tie(b.t_crew_days, b.t_cargo_days);
            });
  return points;
}

std::vector<std::pair<double, double>> default_pareto_grid() {
  std::vector<std::pair<double, double>> grid;
  for (double crew : {21.0, 30.0, 40.0, 50.0})
    for (double cargo : {0.0, 120.0, 240.0, 360.0, 480.0})
      grid.emplace_back(cargo, crew);
  return grid;
}

std::string pareto_csv(const std::vector<ParetoPoint>& points) {
  double baseline = 0.0;
  for (const ParetoPoint& p : points)
    if (p.has_solution) baseline = std::max(baseline, p.objective_kg);
  std::ostringstream os;
  os << "t_cargo_days,t_crew_days,status,objective_kg,savings_pct\n";
  os.setf(std::ios::fixed);
  for (const ParetoPoint& p : points) {
    os.precision(0);
    os << p.t_cargo_days << "," << p.t_crew_days << ",";
    if (!p.error.empty()) {
      os << "error,,\n";
      continue;
    }
    os << to_string(p.status);
    if (p.has_solution && baseline > 0.0) {
      os.precision(1);
      os << "," << p.objective_kg;
      os.precision(2);
      os << "," << (baseline - p.objective_kg) / baseline * 100.0;
      os << "\n";
    } else {
      os << ",,\n";
    }
  }
  return os.str();
}

}  // namespace evsl
