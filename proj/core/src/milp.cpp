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

#include "evsl/milp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace evsl {

int MilpModel::add_variable(Variable v) {
  if (!(v.lb <= v.ub)) {
    throw std::runtime_error("variable '" + v.name + "': lb > ub");
  }
  vars_.push_back(std::move(v));
  return static_cast<int>(vars_.size()) - 1;
}

int MilpModel::add_variable(const std::string& name, double lb, double ub,
                            double obj, VarKind kind) {
  return add_variable(Variable{name, lb, ub, obj, kind});
}

int MilpModel::add_constraint(LinearConstraint c) {
  std::stable_sort(c.terms.begin(), c.terms.end(),
                   [](const LinearTerm& a, const LinearTerm& b) {
                     return a.var < b.var;
                   });
  // Merge duplicate variable ids so downstream consumers can assume a clean
  // sorted sparse row.
  std::vector<LinearTerm> merged;
  merged.reserve(c.terms.size());
  for (const LinearTerm& t : c.terms) {
    if (t.var < 0 || t.var >= num_variables()) {
      throw std::runtime_error("constraint '" + c.name +
                               "': unknown variable id");
    }
    if (!merged.empty() && merged.back().var == t.var) {
      merged.back().coef += t.coef;
    } else {
      merged.push_back(t);
    }
  }
  c.terms = std::move(merged);
  rows_.push_back(std::move(c));
  return static_cast<int>(rows_.size()) - 1;
}

int MilpModel::add_constraint(const std::string& name,
                              const std::vector<LinearTerm>& terms,
                              RowSense sense, double rhs) {
  return add_constraint(LinearConstraint{name, terms, sense, rhs});
}

int MilpModel::add_sos2(Sos2Set s) {
  if (s.vars.size() != s.weights.size() || s.vars.size() < 2) {
    throw std::runtime_error("sos2 '" + s.name + "': malformed member list");
  }
  for (std::size_t k = 0; k < s.vars.size(); ++k) {
    if (s.vars[k] < 0 || s.vars[k] >= num_variables()) {
      throw std::runtime_error("sos2 '" + s.name + "': unknown variable id");
    }
    if (k > 0 && !(s.weights[k] > s.weights[k - 1])) {
      throw std::runtime_error("sos2 '" + s.name +
                               "': weights not strictly increasing");
    }
  }
  sos2_.push_back(std::move(s));
  return static_cast<int>(sos2_.size()) - 1;
}

int MilpModel::add_sos2(const std::string& name, std::vector<int> vars,
                        std::vector<double> weights) {
  return add_sos2(Sos2Set{name, std::move(vars), std::move(weights)});
}

int MilpModel::num_integer_variables() const {
  int n = 0;
  for (const Variable& v : vars_) {
    if (v.kind != VarKind::kContinuous) ++n;
  }
  return n;
}

void MilpModel::validate() const {
  for (const Variable& v : vars_) {
    if (!(v.lb <= v.ub)) {
      throw std::runtime_error("variable '" + v.name + "': lb > ub");
    }
  }
  for (const LinearConstraint& c : rows_) {
    int prev = -1;
    for (const LinearTerm& t : c.terms) {
      if (t.var < 0 || t.var >= num_variables()) {
        throw std::runtime_error("constraint '" + c.name +
                                 "': unknown variable id");
      }
      if (t.var <= prev) {
        throw std::runtime_error("constraint '" + c.name +
                                 "': terms not sorted/unique");
      }
      prev = t.var;
    }
  }
  for (const Sos2Set& s : sos2_) {
    for (std::size_t k = 0; k < s.vars.size(); ++k) {
      if (s.vars[k] < 0 || s.vars[k] >= num_variables()) {
        throw std::runtime_error("sos2 '" + s.name + "': unknown variable id");
      }
    }
  }
}

double MilpModel::objective_value(const std::vector<double>& x) const {
  double z = obj_offset_;
  for (int j = 0; j < num_variables(); ++j) z += vars_[j].obj * x[j];
  return z;
}

double MilpModel::max_row_violation(const std::vector<double>& x) const {
  double worst = 0.0;
  for (const LinearConstraint& c : rows_) {
    double a = 0.0;
    for (const LinearTerm& t : c.terms) a += t.coef * x[t.var];
    double viol = 0.0;
    switch (c.sense) {
      case RowSense::kLe: viol = a - c.rhs; break;
      case RowSense::kGe: viol = c.rhs - a; break;
      case RowSense::kEq: viol = std::abs(a - c.rhs); break;
    }
    worst = std::max(worst, viol);
  }
  return worst;
}

double MilpModel::max_bound_violation(const std::vector<double>& x) const {
  double worst = 0.0;
  for (int j = 0; j < num_variables(); ++j) {
    worst = std::max(worst, vars_[j].lb - x[j]);
    if (vars_[j].ub < kInfinity) worst = std::max(worst, x[j] - vars_[j].ub);
  }
  return worst;
}

double MilpModel::max_integrality_violation(const std::vector<double>& x) const {
  double worst = 0.0;
  for (int j = 0; j < num_variables(); ++j) {
    if (vars_[j].kind == VarKind::kContinuous) continue;
    worst = std::max(worst, std::abs(x[j] - std::round(x[j])));
  }
  return worst;
}

}  // namespace evsl
