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

#ifndef EVSL_MILP_HPP_
#define EVSL_MILP_HPP_

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace evsl {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class VarKind : std::uint8_t { kContinuous, kBinary, kInteger };

enum class RowSense : std::uint8_t { kLe, kGe, kEq };

struct Variable {
  std::string name;
  double lb = 0.0;
  double ub = kInfinity;
  double obj = 0.0;
  VarKind kind = VarKind::kContinuous;
};

struct LinearTerm {
  int var = -1;
  double coef = 0.0;
};

struct LinearConstraint {
  std::string name;
  std::vector<LinearTerm> terms;  // sorted by var id, ids unique
  RowSense sense = RowSense::kLe;
  double rhs = 0.0;
};

// A special-ordered set of type 2: at most two member variables may be
// nonzero, and those two must be adjacent in the listed order.
struct Sos2Set {
  std::string name;
  std::vector<int> vars;        // in convex-combination order
  std::vector<double> weights;  // strictly increasing branching weights
};

// Plain MILP container: minimize obj'x subject to rows, bounds, integrality,
// and SOS2 sets. Construction helpers keep referential integrity; validate()
// re-checks everything and is cheap enough to run in tests.
class MilpModel {
 public:
  int add_variable(Variable v);
  int add_variable(const std::string& name, double lb, double ub, double obj,
                   VarKind kind = VarKind::kContinuous);

  // Adds a row. Terms may arrive unsorted or with duplicate variable ids;
  // duplicates are coefficient-summed and the result is stored sorted.
  int add_constraint(LinearConstraint c);
  int add_constraint(const std::string& name,
                     const std::vector<LinearTerm>& terms, RowSense sense,
                     double rhs);

  int add_sos2(Sos2Set s);
  int add_sos2(const std::string& name, std::vector<int> vars,
               std::vector<double> weights);

  int num_variables() const { return static_cast<int>(vars_.size()); }
  int num_constraints() const { return static_cast<int>(rows_.size()); }
  int num_sos2() const { return static_cast<int>(sos2_.size()); }
  int num_integer_variables() const;

  const Variable& variable(int j) const { return vars_[j]; }
  Variable& mutable_variable(int j) { return vars_[j]; }
  const LinearConstraint& constraint(int i) const { return rows_[i]; }
  const Sos2Set& sos2(int s) const { return sos2_[s]; }
  const std::vector<Variable>& variables() const { return vars_; }
  const std::vector<LinearConstraint>& constraints() const { return rows_; }
  const std::vector<Sos2Set>& sos2_sets() const { return sos2_; }

  void set_objective_offset(double c0) { obj_offset_ = c0; }
  double objective_offset() const { return obj_offset_; }

  std::string name = "model";

  // Throws std::runtime_error on broken referential integrity, lb > ub,
  // unsorted/duplicate row terms, or malformed SOS2 weights.
  void validate() const;

  // Objective value of a point (no feasibility check).
  double objective_value(const std::vector<double>& x) const;

  // Largest violation of rows/bounds/integrality at a point; used by the
  // feasibility audits in tests.
  double max_row_violation(const std::vector<double>& x) const;
  double max_bound_violation(const std::vector<double>& x) const;
  double max_integrality_violation(const std::vector<double>& x) const;

 private:
  std::vector<Variable> vars_;
  std::vector<LinearConstraint> rows_;
  std::vector<Sos2Set> sos2_;
  double obj_offset_ = 0.0;
};

}  // namespace evsl

#endif  // EVSL_MILP_HPP_
