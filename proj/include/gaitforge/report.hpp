// Copyright 2026 The gaitforge Authors
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

#ifndef GAITFORGE_REPORT_HPP_
#define GAITFORGE_REPORT_HPP_

#include <string>
#include <vector>

#include "gaitforge/csv.hpp"

/// Standalone SVG renderers. Output depends only on the input tables.
namespace gaitforge::report {

/// One series per gait name (first-appearance order across all tables);
/// needs columns gait, speed, cot. Rows with an empty cot (falls) are skipped.
std::string cot_plot(const std::vector<csv::Table>& tables);

/// best_return against iteration, one line per table; with two or more
/// tables also the mean and a +-1 std band over their common iterations.
std::string learning_curves(const std::vector<csv::Table>& tables);

/// Four rows (FR, FL, RR, RL) over time_s, dark where contact_<leg> is 1.
std::string contact_raster(const csv::Table& trace);

}  // namespace gaitforge::report

#endif  // GAITFORGE_REPORT_HPP_
