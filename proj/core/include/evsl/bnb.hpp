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

#ifndef EVSL_BNB_HPP_
#define EVSL_BNB_HPP_

#include <limits>
#include <string>
#include <vector>

#include "evsl/milp.hpp"
#include "evsl/simplex.hpp"

namespace evsl {

enum class SolveStatus : std::uint8_t {
  kOptimal,
  kInfeasible,
  kUnbounded,
  kGapLimit,   // stopped at the node limit with a residual gap
  kTimeLimit,  // stopped at the wall-clock limit
};

const char* to_string(SolveStatus s);

struct MilpSolveOptions {
  // Relative optimality gap at which the search stops. A solve that reaches
  // this gap reports kOptimal.
  double rel_gap = 1e-6;
  double int_tol = 1e-6;  // integrality tolerance on integer variables
  double time_limit_s = std::numeric_limits<double>::infinity();
  long node_limit = std::numeric_limits<long>::max();
  int threads = 1;
  bool log = false;  // progress lines on stderr
  LpOptions lp;
  // Optional feasible point (model variable order) installed as the starting
  // incumbent. Integer entries are rounded first; a point that then violates
  // rows, bounds, or SOS2 ordering beyond tolerance is discarded (with a log
  // line when logging is on) rather than trusted.
  std::vector<double> warm_start;
};

struct SolveReport {
  SolveStatus status = SolveStatus::kInfeasible;
  bool has_solution = false;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double best_bound = -std::numeric_limits<double>::infinity();
  double gap = std::numeric_limits<double>::infinity();  // relative
  long nodes = 0;
  long lp_iterations = 0;
  double time_s = 0.0;
  std::vector<double> solution;  // incumbent, model variable order

  // {"status":..., "objective":..., "gap":..., "nodes":..., "time":...}
  std::string to_json() const;
};

// Branch-and-bound over the bounded revised simplex.
//
// Node selection is best-bound with depth-first plunging: after a node is
// branched, one child is solved immediately from the warm parent basis and
// the sibling joins the global queue. Integer branching scores candidates by
// pseudocosts learned from observed bound degradations, falling back to most
// fractional while a variable has no history. An SOS2 set with more than
// two positive members, or two non-adjacent ones, is branched by splitting
// its index window at the weighted-average position: the left child zeroes
// everything above the split, the right child everything below it.
SolveReport solve_milp(const MilpModel& model,
                       const MilpSolveOptions& opts = MilpSolveOptions());

}  // namespace evsl

#endif  // EVSL_BNB_HPP_
