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

#ifndef EVSL_LP_FORMAT_HPP_
#define EVSL_LP_FORMAT_HPP_

#include <stdexcept>
#include <string>

#include "evsl/milp.hpp"

namespace evsl {

struct LpFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Writes the model as CPLEX-style LP text (grammar: docs/lp_format.md).
// Output is deterministic — variables and rows in model order, numerals in
// shortest round-trip form — so writing the same model twice yields identical
// bytes, and write(parse(write(m))) == write(m).
std::string write_lp(const MilpModel& model);
void write_lp_file(const MilpModel& model, const std::string& path);

// Parses LP text. Variables are created in order of first mention. Throws
// LpFormatError with a line number on malformed input.
MilpModel parse_lp(const std::string& text, std::string model_name = "");
MilpModel parse_lp_file(const std::string& path);

}  // namespace evsl

#endif  // EVSL_LP_FORMAT_HPP_
