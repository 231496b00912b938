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

#ifndef GAITFORGE_ROBOT_MODEL_HPP_
#define GAITFORGE_ROBOT_MODEL_HPP_

#include <cstddef>

#include "gaitforge/types.hpp"

namespace gaitforge::robot {

/**
 * Physical parameters of the quadruped.
 *
 * Joint convention for each leg: q = (abduction, hip pitch, knee). The zero
 * configuration has the leg pointing straight down from the hip. Abduction
 * rotates about the base x axis, hip pitch and knee about the (abducted)
 * y axis; positive pitch swings the foot backwards. Inverse kinematics
 * returns the knee-backward branch, q_knee in [-pi, 0].
 */
struct RobotParams {
  double mass_kg = 15.0;
  Mat3 inertia_base = Eigen::Vector3d(0.07, 0.26, 0.24).asDiagonal();
  /// Hip positions in the base frame, leg order [FR, FL, RR, RL].
  PerLeg<Vec3> hip_offsets = {Vec3(0.183, -0.13, 0.0), Vec3(0.183, 0.13, 0.0),
                              Vec3(-0.183, -0.13, 0.0), Vec3(-0.183, 0.13, 0.0)};
  double l_abduction = 0.0;
  double l_thigh = 0.2;
  double l_calf = 0.2;
  double gear_ratio = 9.1;
  double motor_alpha = 0.3;
  double torque_limit_joint = 33.5;
  double standing_height = 0.26;
  double gravity = 9.8;

  /// Throws ConfigError if any invariant is violated.
  void validate() const;
};

/// Foot position of `leg` in the base frame.
Vec3 forward_kinematics(const RobotParams& params, std::size_t leg, const Vec3& q);

/// Joint angles placing the foot of `leg` at `foot_pos` (base frame).
/// Throws OutOfReach outside the reachable annulus.
Vec3 inverse_kinematics(const RobotParams& params, std::size_t leg, const Vec3& foot_pos);

struct ClampedIk {
  Vec3 q;
  bool clamped = false;
};

/// Like inverse_kinematics, but projects unreachable targets onto the
/// boundary of the workspace instead of throwing.
ClampedIk inverse_kinematics_clamped(const RobotParams& params, std::size_t leg,
                                     const Vec3& foot_pos);

/// d(foot position)/dq in the base frame.
Mat3 foot_jacobian(const RobotParams& params, std::size_t leg, const Vec3& q);

/// Foot position directly below the hip at standing height (base frame).
Vec3 nominal_foot_position(const RobotParams& params, std::size_t leg);

}  // namespace gaitforge::robot

#endif  // GAITFORGE_ROBOT_MODEL_HPP_
