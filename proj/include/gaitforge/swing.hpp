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

#ifndef GAITFORGE_SWING_HPP_
#define GAITFORGE_SWING_HPP_

#include "gaitforge/robot_model.hpp"
#include "gaitforge/types.hpp"

namespace gaitforge::swing {

struct PdGains {
  Vec3 kp = Vec3::Constant(300.0);
  Vec3 kd = Vec3::Constant(4.0);
};

struct SwingConfig {
  double clearance = 0.05;  // z_des, m
  PdGains gains;
};

/// Raibert foothold: p_ref + v_xy * t_stance / 2. The z component of v is ignored.
Vec3 raibert_landing(const Vec3& p_ref, const Vec3& v_com, double t_stance);

/// Quadratic through lift-off (s = 0), mid-air (s = 0.5) and landing (s = 1),
/// one polynomial per axis: p(s) = c0 + c1 s + c2 s^2.
struct SwingTrajectory {
  Vec3 lift_off = Vec3::Zero();
  Vec3 mid_air = Vec3::Zero();
  Vec3 land = Vec3::Zero();
  Vec3 c0 = Vec3::Zero();
  Vec3 c1 = Vec3::Zero();
  Vec3 c2 = Vec3::Zero();

  Vec3 evaluate(double s) const { return c0 + s * (c1 + s * c2); }
};

/// mid_air = p_ref + (0, 0, z_des).
SwingTrajectory build_trajectory(const Vec3& lift_off, const Vec3& p_ref, const Vec3& land, double z_des);

/// Progress s = phase / phase_swing, clamped to [0, 1].
double swing_progress(double leg_phase, double swing_threshold);

Vec3 swing_foot_target(const SwingTrajectory& traj, double leg_phase, double swing_threshold);

struct SwingCommand {
  Vec3 tau = Vec3::Zero();
  Vec3 q_des = Vec3::Zero();
  bool target_clamped = false;
  int clip_events = 0;
};

/// PD tracking of the IK solution for `target` (base frame):
/// tau = kp (q_des - q) - kd qdot, clipped to the joint torque limit.
SwingCommand swing_torques(const robot::RobotParams& params, std::size_t leg, const Vec3& target, const Vec3& q,
                           const Vec3& qdot, const PdGains& gains);

}  // namespace gaitforge::swing

#endif  // GAITFORGE_SWING_HPP_
