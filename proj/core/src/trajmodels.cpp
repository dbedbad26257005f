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

#include "evsl/trajmodels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace evsl {

double HighThrustModel::mass_ratio() const {
  return rocket_mass_ratio(dv_kms, isp_s);
}

double rocket_mass_ratio(double dv_kms, double isp_s) {
  if (!(isp_s > 0.0)) throw std::domain_error("rocket_mass_ratio: Isp <= 0");
  if (!(dv_kms >= 0.0)) throw std::domain_error("rocket_mass_ratio: dv < 0");
  return std::exp(-dv_kms * 1000.0 / (kG0 * isp_s));
}

double sep_final_mass(const AffineLowThrustModel& m, double y_plus_t,
                      int present) {
  return m.p1 * y_plus_t + m.p0 * present;
}

double sep_tof_days(const AffineLowThrustModel& m, double y_plus_t,
                    int present) {
  return m.q1 * y_plus_t + m.q0 * present;
}

double circular_spiral_tof_s(double gamma_kms2, double mu_km3s2, double a_i_km,
                             double a_f_km) {
  if (!(gamma_kms2 > 0.0 && mu_km3s2 > 0.0 && a_i_km > 0.0 && a_f_km > 0.0))
    throw std::domain_error("circular_spiral_tof_s: nonpositive input");
  return (std::sqrt(mu_km3s2 / a_i_km) - std::sqrt(mu_km3s2 / a_f_km)) /
         gamma_kms2;
}

void PwlModel::validate() const {
  if (mass_t.size() < 2) throw SchemaError("pwl: needs at least 2 breakpoints");
  if (final_mass_t.size() != mass_t.size() || tof_days.size() != mass_t.size())
    throw SchemaError("pwl: value columns must match breakpoint count");
  for (std::size_t i = 1; i < mass_t.size(); ++i)
    if (!(mass_t[i] > mass_t[i - 1]))
      throw SchemaError("pwl: breakpoints must be strictly increasing");
}

namespace {

double pwl_interp(const std::vector<double>& xs, const std::vector<double>& ys,
                  double x) {
  if (x < xs.front() || x > xs.back())
    throw std::domain_error("pwl: query outside the fitted mass envelope");
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t hi = std::min<std::size_t>(it - xs.begin(), xs.size() - 1);
  const std::size_t lo = hi - 1;
  const double t = (x - xs[lo]) / (xs[hi] - xs[lo]);
  return ys[lo] + t * (ys[hi] - ys[lo]);
}

}  // namespace

double PwlModel::final_mass_at(double initial_mass_t) const {
  validate();
  return pwl_interp(mass_t, final_mass_t, initial_mass_t);
}

double PwlModel::tof_at(double initial_mass_t) const {
  validate();
  return pwl_interp(mass_t, tof_days, initial_mass_t);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// CSV plumbing. The data files are plain comma-separated tables with a
// header row; no quoting or escapes are needed (labels contain no commas).
// ---------------------------------------------------------------------------

namespace {

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int col(const std::string& file, const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw SchemaError(file + ": missing column '" + name + "'");
  }
};

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw MissingRowError("cannot open data file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Csv parse_csv(const std::string& file, const std::string& text) {
  Csv out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (out.header.empty())
      out.header = std::move(cells);
    else
      out.rows.push_back(std::move(cells));
  }
  if (out.header.empty()) throw SchemaError(file + ": empty file");
  for (const auto& r : out.rows)
    if (r.size() != out.header.size())
      throw SchemaError(file + ": ragged row (expected " +
                        std::to_string(out.header.size()) + " cells)");
  return out;
}

double num_cell(const std::string& file, const std::string& cell) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    throw SchemaError(file + ": bad numeric cell '" + cell + "'");
  }
  if (used != cell.size())
    throw SchemaError(file + ": bad numeric cell '" + cell + "'");
  return v;
}

// Optional numeric cell: empty means "not applicable", loaded as 0.
double num_or_zero(const std::string& file, const std::string& cell) {
  return cell.empty() ? 0.0 : num_cell(file, cell);
}

std::string hex16(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

// Reads checksums.txt ("fnv1a64 <hex16> <filename>" per line) and returns
// the verified text of `file`.
class VerifiedDir {
 public:
  explicit VerifiedDir(const std::string& dir) : dir_(dir) {
    const std::string text = read_file(dir + "/checksums.txt");
    std::istringstream in(text);
    std::string algo, hex, name;
    while (in >> algo >> hex >> name) {
      if (algo != "fnv1a64")
        throw ChecksumError("checksums.txt: unknown algorithm '" + algo + "'");
      sums_[name] = hex;
    }
  }

  std::string read(const std::string& file) const {
    const auto it = sums_.find(file);
    if (it == sums_.end())
      throw ChecksumError(file + ": no checksum recorded in checksums.txt");
    const std::string text = read_file(dir_ + "/" + file);
    const std::string got = hex16(fnv1a64(text));
    if (got != it->second)
      throw ChecksumError(file + ": checksum mismatch (recorded " +
                          it->second + ", file hashes to " + got + ")");
    return text;
  }

 private:
  std::string dir_;
  std::unordered_map<std::string, std::string> sums_;
};

// Expands "A to/from B" into the pair ("A to B", "B to A"); a plain
// directional label expands to itself only.
std::vector<std::string> expand_route(const std::string& route) {
  const std::string marker = " to/from ";
  const std::size_t at = route.find(marker);
  if (at == std::string::npos) return {route};
  const std::string a = route.substr(0, at);
  const std::string b = route.substr(at + marker.size());
  return {a + " to " + b, b + " to " + a};
}

}  // namespace

ModelRegistry ModelRegistry::load(const std::string& data_dir) {
  ModelRegistry reg;
  reg.data_dir_ = data_dir;
  const VerifiedDir dir(data_dir);

  {
    const std::string file = "tugs.csv";
    const Csv t = parse_csv(file, dir.read(file));
    const int cn = t.col(file, "name"), cp = t.col(file, "propulsion"),
              cd = t.col(file, "dry_t"), cc = t.col(file, "capacity_t"),
              ckw = t.col(file, "power_kw"), ci = t.col(file, "isp_s"),
              cu = t.col(file, "units");
    for (const auto& r : t.rows) {
      VehicleSpec v;
      v.name = r[cn];
      if (r[cp] == "CP")
        v.propulsion = Propulsion::kChemical;
      else if (r[cp] == "SEP")
        v.propulsion = Propulsion::kElectric;
      else
        throw SchemaError(file + ": unknown propulsion '" + r[cp] + "'");
      v.dry_t = num_cell(file, r[cd]);
      v.capacity_t = num_cell(file, r[cc]);
      v.power_kw = num_or_zero(file, r[ckw]);
      v.isp_s = num_cell(file, r[ci]);
      v.units = static_cast<int>(num_cell(file, r[cu]));
      if (v.dry_t <= 0 || v.capacity_t <= 0 || v.isp_s <= 0 || v.units <= 0)
        throw SchemaError(file + ": nonpositive spec for " + v.name);
      if (v.propulsion == Propulsion::kElectric && v.power_kw <= 0)
        throw SchemaError(file + ": SEP tug without power: " + v.name);
      reg.tugs_.push_back(std::move(v));
    }
    if (reg.tugs_.size() != 6)
      throw MissingRowError(file + ": expected 6 tug classes");
  }

  {
    // The two fit tables share the arc rows; merge them per (arc, type).
    const std::string mf = "sep_fit_mass.csv", tf = "sep_fit_tof.csv";
    const Csv m = parse_csv(mf, dir.read(mf));
    const Csv t = parse_csv(tf, dir.read(tf));
    const int ma = m.col(mf, "arc"), ta = t.col(tf, "arc");
    if (m.rows.size() != 8 || t.rows.size() != 8)
      throw MissingRowError("sep fit tables: expected 8 arcs each");
    for (int type = 1; type <= 3; ++type) {
      const std::string ts = std::to_string(type);
      const int cp1 = m.col(mf, "p1_type" + ts), cp0 = m.col(mf, "p0_type" + ts);
      // Only the type-1 time slope is recorded in tens of days per tonne.
      const bool x10 = type == 1;
      const int cq1 = t.col(tf, (x10 ? "q1_x10_type" : "q1_type") + ts);
      const int cq0 = t.col(tf, "q0_type" + ts);
      for (std::size_t i = 0; i < m.rows.size(); ++i) {
        const std::string arc = m.rows[i][ma];
        if (t.rows[i][ta] != arc)
          throw SchemaError("sep fit tables: arc rows disagree at '" + arc +
                            "' vs '" + t.rows[i][ta] + "'");
        AffineLowThrustModel fit;
        fit.p1 = num_cell(mf, m.rows[i][cp1]);
        fit.p0 = num_cell(mf, m.rows[i][cp0]);
        fit.q1 = num_cell(tf, t.rows[i][cq1]) * (x10 ? kTofSlopeX10 : 1.0);
        fit.q0 = num_cell(tf, t.rows[i][cq0]);
        if (!(fit.p1 > 0.8 && fit.p1 < 1.0))
          throw SchemaError(mf + ": implausible mass slope " +
                            std::to_string(fit.p1) + " on '" + arc + "'");
        if (!(fit.q1 > 0.0 && fit.q0 > 0.0))
          throw SchemaError(tf + ": nonpositive time fit on '" + arc + "'");
        reg.sep_.emplace(std::make_pair(arc, type), fit);
      }
    }
  }

  // All chemical tugs share one engine class; their transfers use that Isp.
  double cp_isp = 0.0;
  for (const VehicleSpec& v : reg.tugs_) {
    if (v.propulsion != Propulsion::kChemical) continue;
    if (cp_isp == 0.0) cp_isp = v.isp_s;
    if (v.isp_s != cp_isp)
      throw SchemaError("tugs.csv: chemical tugs disagree on Isp");
  }

  {
    const std::string file = "cp_arcs.csv";
    const Csv t = parse_csv(file, dir.read(file));
    const int cr = t.col(file, "route"), cv = t.col(file, "dv_kms"),
              ct = t.col(file, "tof_days");
    for (const auto& r : t.rows) {
      HighThrustModel m;
      m.dv_kms = num_cell(file, r[cv]);
      m.isp_s = cp_isp;
      m.tof_days = num_cell(file, r[ct]);
      for (const std::string& arc : expand_route(r[cr]))
        if (!reg.cp_.emplace(arc, m).second)
          throw SchemaError(file + ": duplicate arc '" + arc + "'");
    }
    if (reg.cp_.size() != 8)
      throw MissingRowError(file + ": expected 4 routes (8 directed arcs)");
  }

  {
    const std::string file = "crew_arcs.csv";
    const Csv t = parse_csv(file, dir.read(file));
    const int ca = t.col(file, "arc"), cv = t.col(file, "dv_kms"),
              ct = t.col(file, "tof_days"), cb = t.col(file, "impulse_by");
    for (const auto& r : t.rows) {
      CrewArc arc;
      arc.arc = r[ca];
      arc.dv_kms = num_cell(file, r[cv]);
      arc.tof_days = num_cell(file, r[ct]);
      arc.impulse_by = r[cb];
      if (arc.impulse_by != "US" && arc.impulse_by != "CSM")
        throw SchemaError(file + ": unknown impulse provider '" +
                          arc.impulse_by + "'");
      if (!reg.crew_.emplace(arc.arc, arc).second)
        throw SchemaError(file + ": duplicate arc '" + arc.arc + "'");
    }
    if (reg.crew_.size() != 13)
      throw MissingRowError(file + ": expected 13 crew arcs");
  }

  {
    const std::string file = "crew_vehicles.csv";
    const Csv t = parse_csv(file, dir.read(file));
    const int cn = t.col(file, "vehicle"), cd = t.col(file, "dry_t"),
              cc = t.col(file, "capacity_t"), ci = t.col(file, "isp_s"),
              ce = t.col(file, "fuel_eps");
    for (const auto& r : t.rows) {
      CrewVehicleSpec v;
      v.name = r[cn];
      v.dry_t = num_or_zero(file, r[cd]);
      v.capacity_t = num_or_zero(file, r[cc]);
      v.isp_s = num_cell(file, r[ci]);
      v.fuel_eps = num_cell(file, r[ce]);
      if (v.isp_s <= 0 || v.fuel_eps <= 0 || v.fuel_eps >= 1)
        throw SchemaError(file + ": implausible spec for " + v.name);
      reg.crew_vehicles_.push_back(std::move(v));
    }
    if (reg.crew_vehicles_.size() != 3)
      throw MissingRowError(file + ": expected US, CSM, LM");
  }

  return reg;
}

std::string ModelRegistry::resolve_data_dir(const std::string& override_dir) {
  if (!override_dir.empty()) return override_dir;
  if (const char* env = std::getenv("EVSL_DATA_DIR"); env && *env) return env;
#ifdef EVSL_DEFAULT_DATA_DIR
  return EVSL_DEFAULT_DATA_DIR;
#else
  return "data";
#endif
}

const AffineLowThrustModel& ModelRegistry::sep(const std::string& arc,
                                               int sep_type) const {
  const auto it = sep_.find(std::make_pair(arc, sep_type));
  if (it == sep_.end())
    throw MissingRowError("no low-thrust fit for '" + arc + "' type " +
                          std::to_string(sep_type));
  return it->second;
}

const HighThrustModel& ModelRegistry::cp(const std::string& arc) const {
  const auto it = cp_.find(arc);
  if (it == cp_.end())
    throw MissingRowError("no chemical-tug transfer for '" + arc + "'");
  return it->second;
}

const CrewArc& ModelRegistry::crew(const std::string& arc) const {
  const auto it = crew_.find(arc);
  if (it == crew_.end())
    throw MissingRowError("no crew transfer for '" + arc + "'");
  return it->second;
}

const VehicleSpec& ModelRegistry::tug(const std::string& name) const {
  for (const VehicleSpec& v : tugs_)
    if (v.name == name) return v;
  throw MissingRowError("no tug class named '" + name + "'");
}

const CrewVehicleSpec& ModelRegistry::crew_vehicle(
    const std::string& name) const {
  for (const CrewVehicleSpec& v : crew_vehicles_)
    if (v.name == name) return v;
  throw MissingRowError("no crew vehicle named '" + name + "'");
}

}  // namespace evsl
