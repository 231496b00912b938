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

#ifndef GAITFORGE_CONFIG_HPP_
#define GAITFORGE_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gaitforge/gait.hpp"
#include "gaitforge/trainer.hpp"

namespace gaitforge::config {

using Json = nlohmann::json;

struct BaselineSettings {
  std::vector<gait::BaselineGait> gaits;  // defaults to the built-in table
  std::vector<double> speeds = {0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5};
  /// Seconds held at the target speed after the ramp; CoT uses the last half.
  double hold_s = 4.0;
};

struct TrainSettings {
  /// Independent runs with master seeds seed, seed + 1, ...
  int num_seeds = 1;
  /// Mean checkpoint to resume from ("" = fresh start). Only valid with num_seeds = 1.
  std::string resume;
};

struct EvalSettings {
  std::string checkpoint;
  /// High-level steps of the accelerating profile.
  int profile_steps = 400;
  /// Grid for the learned policy's per-speed CoT (constant-speed runs as in baseline).
  std::vector<double> cot_speeds = {0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5};
};

struct ReportSettings {
  std::vector<std::string> cot;     // baseline/eval CoT tables
  std::vector<std::string> curves;  // learning-curve CSVs
  std::string trace;                // eval trace CSV
};

struct ExperimentConfig {
  train::TaskConfig task;
  train::EsConfig es;
  BaselineSettings baseline;
  TrainSettings train;
  EvalSettings eval;
  ReportSettings report;

  /// Throws ConfigError on any invalid field.
  void validate() const;
};

ExperimentConfig default_experiment();

/// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig experiment_from_json(const Json& j);
Json to_json(const ExperimentConfig& config);

/// Reads a JSON file; relative paths inside it are resolved against the file's directory.
ExperimentConfig load_experiment(const std::filesystem::path& path);
void save_experiment(const std::filesystem::path& path, const ExperimentConfig& config);

Json baseline_table_to_json(const std::vector<gait::BaselineGait>& gaits);
std::vector<gait::BaselineGait> baseline_table_from_json(const Json& j);

}  // namespace gaitforge::config

#endif  // GAITFORGE_CONFIG_HPP_
