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

#ifndef GAITFORGE_GAIT_HPP_
#define GAITFORGE_GAIT_HPP_

#include <array>
#include <span>
#include <string>
#include <string_view>

#include "gaitforge/types.hpp"

namespace gaitforge::gait {

/// The five-dimensional gait action shared by all legs.
struct GaitParams {
  double frequency_hz = 2.0;
  double swing_ratio = 0.5;
  /// Offsets of FL, RR, RL relative to FR.
  std::array<double, 3> phase_offsets = {kPi, kPi, kPi};

  /// Phase at which a leg switches from swing to stance.
  double swing_threshold() const { return kTwoPi * swing_ratio; }
  /// Offset of `leg` relative to FR; zero for FR itself.
  double offset(std::size_t leg) const { return leg == 0 ? 0.0 : phase_offsets[leg - 1]; }
  double stance_duration() const { return (1.0 - swing_ratio) / frequency_hz; }
  double swing_duration() const { return swing_ratio / frequency_hz; }

  /// Throws ConfigError unless f in (0, 4], p_swing in (0, 1), offsets in [0, 2pi].
  void validate() const;

  bool operator==(const GaitParams&) const = default;
};

/// Master phase of FR; other legs derive from it through the offsets.
struct GaitState {
  double phase = 0.0;

  double leg_phase(std::size_t leg, const GaitParams& params) const;
};

using ContactSchedule = PerLeg<bool>;

/// Wraps an angle into [0, 2pi).
double wrap_phase(double phase);

GaitState advance_phase(GaitState state, double frequency_hz, double dt);

ContactSchedule contact_schedule(const GaitState& state, const GaitParams& params);

struct BaselineGait {
  std::string name;
  GaitParams params;
};

/// Hand-tuned reference gaits: Walk, Slow Trot, Rapid Trot, Fly Trot.
std::span<const BaselineGait> baseline_gaits();

/// Case-insensitive lookup; accepts "slow_trot", "Slow Trot", "slow-trot".
/// Throws ConfigError for unknown names.
const BaselineGait& find_baseline(std::string_view name);

}  // namespace gaitforge::gait

#endif  // GAITFORGE_GAIT_HPP_
