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

#include "gaitforge/gait.hpp"

#include <cctype>
#include <cmath>

#include "gaitforge/errors.hpp"

namespace gaitforge::gait {

void GaitParams::validate() const {
  if (!(frequency_hz > 0.0 && frequency_hz <= 4.0)) {
    throw ConfigError("gait frequency must lie in (0, 4] Hz");
  }
  if (!(swing_ratio > 0.0 && swing_ratio < 1.0)) throw ConfigError("swing ratio must lie in (0, 1)");
  for (double theta : phase_offsets) {
    if (!(theta >= 0.0 && theta <= kTwoPi)) throw ConfigError("phase offsets must lie in [0, 2pi]");
  }
}

double wrap_phase(double phase) {
  double wrapped = std::fmod(phase, kTwoPi);
  if (wrapped < 0.0) wrapped += kTwoPi;
  // fmod of a value just below a multiple of 2pi can round up to 2pi itself.
  if (wrapped >= kTwoPi) wrapped = 0.0;
  return wrapped;
}

double GaitState::leg_phase(std::size_t leg, const GaitParams& params) const {
  return wrap_phase(phase + params.offset(leg));
}

GaitState advance_phase(GaitState state, double frequency_hz, double dt) {
  state.phase = wrap_phase(state.phase + kTwoPi * frequency_hz * dt);
  return state;
}

ContactSchedule contact_schedule(const GaitState& state, const GaitParams& params) {
  ContactSchedule stance{};
  const double threshold = params.swing_threshold();
  for (std::size_t leg = 0; leg < kNumLegs; ++leg) {
    stance[leg] = state.leg_phase(leg, params) >= threshold;
  }
  return stance;
}

namespace {

const std::array<BaselineGait, 4> kBaselines = {{
    {"Walk", {2.0, 0.3, {kPi, 1.5 * kPi, 0.5 * kPi}}},
    {"Slow Trot", {2.0, 0.5, {kPi, kPi, 0.0}}},
    {"Rapid Trot", {4.0, 0.5, {kPi, kPi, 0.0}}},
    {"Fly Trot", {4.0, 0.6, {kPi, kPi, 0.0}}},
}};

std::string normalize(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (c == ' ' || c == '_' || c == '-') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

std::span<const BaselineGait> baseline_gaits() { return kBaselines; }

const BaselineGait& find_baseline(std::string_view name) {
  const std::string key = normalize(name);
  for (const auto& gait : kBaselines) {
    if (normalize(gait.name) == key) return gait;
  }
  throw ConfigError("unknown baseline gait '" + std::string(name) +
                    "' (expected walk, slow_trot, rapid_trot or fly_trot)");
}

}  // namespace gaitforge::gait
