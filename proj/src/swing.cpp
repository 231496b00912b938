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

#include "gaitforge/swing.hpp"

#include <algorithm>
#include <cmath>

namespace gaitforge::swing {

Vec3 raibert_landing(const Vec3& p_ref, const Vec3& v_com, double t_stance) {
  return p_ref + Vec3(v_com.x(), v_com.y(), 0.0) * (0.5 * t_stance);
}

SwingTrajectory build_trajectory(const Vec3& lift_off, const Vec3& p_ref, const Vec3& land, double z_des) {
  SwingTrajectory traj;
  traj.lift_off = lift_off;
  traj.mid_air = p_ref + Vec3(0.0, 0.0, z_des);
  traj.land = land;
  // Lagrange basis on nodes 0, 1/2, 1 expanded into monomials.
  traj.c0 = lift_off;
  traj.c1 = -3.0 * lift_off + 4.0 * traj.mid_air - land;
  traj.c2 = 2.0 * lift_off - 4.0 * traj.mid_air + 2.0 * land;
  return traj;
}

double swing_progress(double leg_phase, double swing_threshold) {
  return std::clamp(leg_phase / swing_threshold, 0.0, 1.0);
}

Vec3 swing_foot_target(const SwingTrajectory& traj, double leg_phase, double swing_threshold) {
  return traj.evaluate(swing_progress(leg_phase, swing_threshold));
}

SwingCommand swing_torques(const robot::RobotParams& params, std::size_t leg, const Vec3& target, const Vec3& q,
                           const Vec3& qdot, const PdGains& gains) {
  SwingCommand cmd;
  const robot::ClampedIk ik = robot::inverse_kinematics_clamped(params, leg, target);
  cmd.q_des = ik.q;
  cmd.target_clamped = ik.clamped;
  const Vec3 raw = gains.kp.cwiseProduct(ik.q - q) - gains.kd.cwiseProduct(qdot);
  for (int j = 0; j < 3; ++j) {
    double v = raw[j];
    if (std::abs(v) > params.torque_limit_joint) {
      v = std::copysign(params.torque_limit_joint, v);
      ++cmd.clip_events;
    }
    cmd.tau[j] = v;
  }
  return cmd;
}

}  // namespace gaitforge::swing
