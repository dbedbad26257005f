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
// Trajectory performance surrogates: rocket-equation mass ratios for
// impulsive (chemical) transfers, affine fits for low-thrust (solar
// electric) transfers, piecewise-linear surrogate containers, and the data
// registry that loads the campaign's coefficient tables from CSV files.

#ifndef EVSL_TRAJMODELS_HPP_
#define EVSL_TRAJMODELS_HPP_

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace evsl {

// Standard gravity, m/s^2. Every mass-ratio computation in the project goes
// through this constant.
inline constexpr double kG0 = 9.80665;

// The 40 kW tug's time-of-flight slope column is recorded in tens of days
// per tonne (header "q1_x10_*" in sep_fit_tof.csv); the registry rescales it
// so AffineLowThrustModel::q1 is always plain days per tonne. Kept as a
// named constant because the raw tables are ambiguous on this point; the
// power-ordering test (heavier-powered tugs fly a tonne faster) pins the
// interpretation.
inline constexpr double kTofSlopeX10 = 10.0;

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// A data file is missing a column, has a malformed cell, or similar.
struct SchemaError : DataError {
  using DataError::DataError;
};
// A lookup or a load expected a row that is not present.
struct MissingRowError : DataError {
  using DataError::DataError;
};
// A data file's contents do not match the recorded checksum.
struct ChecksumError : DataError {
  using DataError::DataError;
};

enum class Propulsion { kChemical, kElectric };

// Impulsive transfer: final/initial mass ratio exp(-dv/(g*Isp)), fixed
// time of flight.
struct HighThrustModel {
  double dv_kms = 0.0;
  double isp_s = 0.0;
  double tof_days = 0.0;

  double mass_ratio() const;
};

// Low-thrust transfer fitted as final_mass = p1*y + p0 and
// tof = q1*y + q0 over the tug's operating mass envelope, with the affine
// part gated by vehicle presence (no vehicle, no flow, zero arc length).
struct AffineLowThrustModel {
  double p1 = 0.0;  // final-mass slope, dimensionless
  double p0 = 0.0;  // final-mass intercept, t
  double q1 = 0.0;  // time slope, days/t
  double q0 = 0.0;  // time intercept, days
};

// Tabulated surrogate for transfers where an affine fit is too crude:
// breakpoints over initial mass with final-mass and time values at each.
// Encoded into MILPs with an SOS2 interpolation; evaluated here by linear
// interpolation for reference and validation.
struct PwlModel {
  std::vector<double> mass_t;        // strictly increasing, size >= 2
  std::vector<double> final_mass_t;  // same size as mass_t
  std::vector<double> tof_days;      // same size as mass_t

  void validate() const;  // throws SchemaError on malformed tables
  double final_mass_at(double initial_mass_t) const;
  double tof_at(double initial_mass_t) const;
};

struct VehicleSpec {
  std::string name;  // "CP1".."CP3", "SEP1".."SEP3"
  Propulsion propulsion = Propulsion::kChemical;
  double dry_t = 0.0;
  double capacity_t = 0.0;
  double power_kw = 0.0;  // zero for chemical tugs
  double isp_s = 0.0;
  int units = 0;
};

struct CrewVehicleSpec {
  std::string name;        // "US", "CSM", "LM"
  double dry_t = 0.0;      // zero for the upper stage (sized per mission)
  double capacity_t = 0.0; // zero for the upper stage
  double isp_s = 0.0;
  double fuel_eps = 0.0;   // structural coefficient of the stored fuel
};

struct CrewArc {
  std::string arc;  // e.g. "LLO to ES"
  double dv_kms = 0.0;
  double tof_days = 0.0;
  std::string impulse_by;  // "US" or "CSM"
};

// exp(-dv/(g*Isp)) with dv in km/s and Isp in seconds. Strictly decreasing
// in dv, strictly increasing in Isp; 1.0 iff dv == 0.
// Throws std::domain_error unless isp_s > 0 and dv_kms >= 0.
double rocket_mass_ratio(double dv_kms, double isp_s);

// Final mass p1*y + p0*present and arc length q1*y + q0*present for a
// low-thrust transfer. `present` is the 0/1 vehicle indicator; absent
// vehicle means zero flow and zero arc length by construction.
double sep_final_mass(const AffineLowThrustModel& m, double y_plus_t,
                      int present);
double sep_tof_days(const AffineLowThrustModel& m, double y_plus_t,
                    int present);

// Analytic reference for low-thrust transfer times: continuous tangential
// thrust between coplanar circular orbits takes
//   t = (1/gamma) * (sqrt(mu/a_i) - sqrt(mu/a_f))
// seconds, inversely proportional to the thrust acceleration gamma
// (km/s^2); mu in km^3/s^2, semi-major axes in km. Used as an independent
// oracle for the fitted models' qualitative behavior.
// Throws std::domain_error on nonpositive inputs.
double circular_spiral_tof_s(double gamma_kms2, double mu_km3s2, double a_i_km,
                             double a_f_km);

// FNV-1a 64-bit hash; the fingerprint recorded in data/checksums.txt.
std::uint64_t fnv1a64(std::string_view bytes);

// Immutable registry of every surrogate table, loaded from a data
// directory and checksum-verified against checksums.txt. Arc keys use the
// short labels found in the data files ("GTO to L1", "LLO to ES", ...).
// Safe to share across threads after load.
class ModelRegistry {
 public:
  // Loads and validates all tables in `data_dir`. Throws ChecksumError,
  // SchemaError or MissingRowError on bad data.
  static ModelRegistry load(const std::string& data_dir);

  // Resolution order: explicit argument if nonempty, $EVSL_DATA_DIR, then
  // the compiled-in source-tree default.
  static std::string resolve_data_dir(const std::string& override_dir = "");

  // Low-thrust fit for a SEP tug type (1..3) on an arc label.
  const AffineLowThrustModel& sep(const std::string& arc, int sep_type) const;

  // Chemical-tug transfer for a directional arc label ("LEO to L1", "L1 to
  // LEO", ...); the data lists undirected routes, both directions resolve.
  const HighThrustModel& cp(const std::string& arc) const;

  // Crew transfer for a directional arc label ("TLI to LLO", ...).
  const CrewArc& crew(const std::string& arc) const;

  const VehicleSpec& tug(const std::string& name) const;  // "CP1".."SEP3"
  const std::vector<VehicleSpec>& tugs() const { return tugs_; }

  const CrewVehicleSpec& crew_vehicle(const std::string& name) const;

  const std::string& data_dir() const { return data_dir_; }

 private:
  std::string data_dir_;
  std::vector<VehicleSpec> tugs_;
  std::vector<CrewVehicleSpec> crew_vehicles_;
  std::map<std::pair<std::string, int>, AffineLowThrustModel> sep_;
  std::map<std::string, HighThrustModel> cp_;
  std::map<std::string, CrewArc> crew_;
};

}  // namespace evsl

#endif  // EVSL_TRAJMODELS_HPP_
