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

#ifndef GAITFORGE_EXPERIMENTS_HPP_
#define GAITFORGE_EXPERIMENTS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gaitforge/config.hpp"
#include "gaitforge/trainer.hpp"

namespace gaitforge::exp {

/// One row of a CoT table.
struct SpeedRun {
  std::string gait;
  double speed = 0.0;
  /// Steady-state CoT; empty when the run fell.
  std::optional<double> cot;
  /// |mean(v) - vbar| / vbar over the measurement window.
  double speed_error = 0.0;
  bool fell = false;
};

/// Ramps at env.accel up to `speed`, holds for `hold_s`, and measures over the last half of the hold.
SpeedRun constant_speed_run(const train::TaskConfig& task, const train::GaitFn& policy, const std::string& name,
                            double speed, double hold_s, std::uint64_t seed);

/// Every gait at every speed, fanned out over `workers` threads; rows ordered by gait then speed.
std::vector<SpeedRun> run_baselines(const train::TaskConfig& task, const std::vector<gait::BaselineGait>& gaits,
                                    const std::vector<double>& speeds, double hold_s, std::uint64_t seed, int workers);

/// Columns: gait,speed,cot,speed_err,fell
void write_cot_csv(std::ostream& out, const std::vector<SpeedRun>& rows);

enum class GaitClass { Walk, Trot, Pace, Bound, Pronk, Other };
std::string to_string(GaitClass c);

/// Nearest canonical template whose pairwise leg phase differences all lie
/// within `tolerance` rad (circular distance); Other if none does.
GaitClass classify_gait(const gait::GaitParams& params, double tolerance = 0.35);

struct EvalSummary {
  train::EpisodeStats stats;
  std::vector<train::StepRow> steps;
  std::vector<sim::TraceRow> trace;
  /// Classes held for at least `min_dwell_steps` consecutive steps, in order of first appearance (Other excluded).
  std::vector<GaitClass> regimes;
  /// Mean p_swing over steps whose command is within 10 % of the episode's top command.
  double top_speed_swing_ratio = 0.0;
};

EvalSummary evaluate_policy(const train::TaskConfig& task, const train::GaitFn& policy, int profile_steps,
                            std::uint64_t seed, int min_dwell_steps = 10);

/// Columns: time_s,step,desired_speed,speed,height,roll,pitch,phase_FR,phase_FL,phase_RR,phase_RL,
/// contact_FR,contact_FL,contact_RR,contact_RL,frequency_hz,swing_ratio,offset_FL,offset_RR,offset_RL,power_w,reward
void write_trace_csv(std::ostream& out, const std::vector<sim::TraceRow>& trace);

/// Columns: step,time_s,desired_speed,speed,power_w,reward,frequency_hz,swing_ratio,offset_FL,offset_RR,offset_RL,gait_class
void write_steps_csv(std::ostream& out, const std::vector<train::StepRow>& steps);

/// Gait policy closure over a checkpoint; throws DimensionMismatch if its architecture differs from `task`.
train::GaitFn checkpoint_policy(const train::TaskConfig& task, const gait::PolicyCheckpoint& checkpoint);

// Commands. Each writes into `out_dir` (created if missing) and returns the files written.
std::vector<std::filesystem::path> cmd_baseline(const config::ExperimentConfig& config, std::uint64_t seed,
                                                const std::filesystem::path& out_dir,
                                                const std::vector<std::string>& gait_filter = {});
std::vector<std::filesystem::path> cmd_train(const config::ExperimentConfig& config, std::uint64_t seed,
                                             const std::filesystem::path& out_dir, std::ostream* log = nullptr);
std::vector<std::filesystem::path> cmd_eval(const config::ExperimentConfig& config, std::uint64_t seed,
                                            const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> cmd_report(const config::ExperimentConfig& config,
                                              const std::filesystem::path& out_dir);

}  // namespace gaitforge::exp

#endif  // GAITFORGE_EXPERIMENTS_HPP_
