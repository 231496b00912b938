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

#include "gaitforge/robot_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gaitforge/errors.hpp"

namespace gaitforge::robot {

void RobotParams::validate() const {
  if (!(mass_kg > 0.0)) throw ConfigError("robot.mass_kg must be positive");
  if (!inertia_base.isApprox(inertia_base.transpose(), 1e-12)) {
    throw ConfigError("robot.inertia_base must be symmetric");
  }
  Eigen::LLT<Mat3> llt(inertia_base);
  if (llt.info() != Eigen::Success) throw ConfigError("robot.inertia_base must be positive definite");
  if (!(l_thigh > 0.0) || !(l_calf > 0.0) || l_abduction < 0.0) {
    throw ConfigError("robot link lengths must be positive");
  }
  if (!(torque_limit_joint > 0.0)) throw ConfigError("robot.torque_limit_joint must be positive");
  if (!(standing_height > 0.0) || standing_height >= l_thigh + l_calf) {
    throw ConfigError("robot.standing_height must lie inside the leg workspace");
  }
}

namespace {

struct Planar {
  double x;  // along base x
  double z;  // along the abducted leg axis, negative is down
};

Planar planar_chain(const RobotParams& p, double hip, double knee) {
  return {-p.l_thigh * std::sin(hip) - p.l_calf * std::sin(hip + knee),
          -p.l_thigh * std::cos(hip) - p.l_calf * std::cos(hip + knee)};
}

Vec3 solve_ik(const RobotParams& p, std::size_t leg, const Vec3& rel, double leg_len_sq) {
  const double y_off = side_sign(leg) * p.l_abduction;
  const double len = std::sqrt(std::max(leg_len_sq, 0.0));
  const double abduction = std::remainder(std::atan2(rel.z(), rel.y()) - std::atan2(-len, y_off), kTwoPi);

  const double planar_x = rel.x();
  const double planar_z = -len;
  const double dist_sq = planar_x * planar_x + planar_z * planar_z;
  double cos_knee = (dist_sq - p.l_thigh * p.l_thigh - p.l_calf * p.l_calf) / (2.0 * p.l_thigh * p.l_calf);
  cos_knee = std::clamp(cos_knee, -1.0, 1.0);
  const double knee = -std::acos(cos_knee);

  const double k1 = p.l_thigh + p.l_calf * std::cos(knee);
  const double k2 = p.l_calf * std::sin(knee);
  const double hip = std::atan2(-planar_x, -planar_z) - std::atan2(k2, k1);
  return {abduction, hip, knee};
}

}  // namespace

Vec3 forward_kinematics(const RobotParams& p, std::size_t leg, const Vec3& q) {
  const Planar pl = planar_chain(p, q[1], q[2]);
  const double y_off = side_sign(leg) * p.l_abduction;
  const double c0 = std::cos(q[0]);
  const double s0 = std::sin(q[0]);
  return p.hip_offsets[leg] + Vec3(pl.x, y_off * c0 - pl.z * s0, y_off * s0 + pl.z * c0);
}

Vec3 inverse_kinematics(const RobotParams& p, std::size_t leg, const Vec3& foot_pos) {
  const Vec3 rel = foot_pos - p.hip_offsets[leg];
  const double leg_len_sq = rel.y() * rel.y() + rel.z() * rel.z() - p.l_abduction * p.l_abduction;
  const double dist = std::sqrt(std::max(rel.x() * rel.x() + leg_len_sq, 0.0));
  const double reach_max = p.l_thigh + p.l_calf;
  const double reach_min = std::abs(p.l_thigh - p.l_calf);
  // Allow rounding-level overshoot so targets produced by FK stay reachable.
  constexpr double kSlack = 1e-12;
  if (leg_len_sq < -kSlack || dist > reach_max + kSlack || dist < reach_min - kSlack) {
    std::ostringstream msg;
    msg << "leg " << kLegNames[leg] << " target at distance " << dist << " m outside [" << reach_min
        << ", " << reach_max << "]";
    throw OutOfReach(msg.str());
  }
  return solve_ik(p, leg, rel, leg_len_sq);
}

ClampedIk inverse_kinematics_clamped(const RobotParams& p, std::size_t leg, const Vec3& foot_pos) {
  const Vec3 rel = foot_pos - p.hip_offsets[leg];
  double leg_len_sq = rel.y() * rel.y() + rel.z() * rel.z() - p.l_abduction * p.l_abduction;
  bool clamped = false;
  if (leg_len_sq < 0.0) {
    leg_len_sq = 0.0;
    clamped = true;
  }
  // Work in the abducted plane: (x, -len) scaled radially into the annulus.
  double px = rel.x();
  double len = std::sqrt(leg_len_sq);
  const double dist = std::hypot(px, len);
  const double reach_max = (p.l_thigh + p.l_calf) * (1.0 - 1e-9);
  const double reach_min = std::abs(p.l_thigh - p.l_calf) + 1e-9;
  double scale = 1.0;
  if (dist > reach_max) {
    scale = reach_max / dist;
  } else if (dist < reach_min) {
    scale = dist > 0.0 ? reach_min / dist : 1.0;
    if (dist <= 0.0) len = reach_min;
  }
  if (scale != 1.0) {
    px *= scale;
    len *= scale;
    clamped = true;
  }
  if (!clamped) return {solve_ik(p, leg, rel, leg_len_sq), false};

  // Rebuild a target with the same abduction plane and the clamped planar extent.
  const double y_off = side_sign(leg) * p.l_abduction;
  const double plane_angle = std::atan2(rel.z(), rel.y()) - std::atan2(-std::sqrt(leg_len_sq), y_off);
  const double c0 = std::cos(plane_angle);
  const double s0 = std::sin(plane_angle);
  const Vec3 target(px, y_off * c0 + len * s0, y_off * s0 - len * c0);
  return {solve_ik(p, leg, target, len * len), true};
}

Mat3 foot_jacobian(const RobotParams& p, std::size_t leg, const Vec3& q) {
  const Planar pl = planar_chain(p, q[1], q[2]);
  const double y_off = side_sign(leg) * p.l_abduction;
  const double c0 = std::cos(q[0]);
  const double s0 = std::sin(q[0]);
  const double dx_dknee = -p.l_calf * std::cos(q[1] + q[2]);
  const double dz_dknee = p.l_calf * std::sin(q[1] + q[2]);

  Mat3 jac;
  jac.col(0) << 0.0, -y_off * s0 - pl.z * c0, y_off * c0 - pl.z * s0;
  jac.col(1) << pl.z, pl.x * s0, -pl.x * c0;
  jac.col(2) << dx_dknee, -dz_dknee * s0, dz_dknee * c0;
  return jac;
}

Vec3 nominal_foot_position(const RobotParams& p, std::size_t leg) {
  return p.hip_offsets[leg] + Vec3(0.0, side_sign(leg) * p.l_abduction, -p.standing_height);
}

}  // namespace gaitforge::robot
