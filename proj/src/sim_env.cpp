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

#include "gaitforge/sim_env.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>

#include <Eigen/Geometry>
#include <Eigen/LU>

#include "gaitforge/errors.hpp"

namespace gaitforge::sim {

int EnvConfig::substeps_per_step() const { return static_cast<int>(std::lround(highlevel_dt / lowlevel_dt)); }

void EnvConfig::validate() const {
  if (!(lowlevel_dt > 0.0) || !(highlevel_dt > 0.0)) throw ConfigError("time steps must be positive");
  const double ratio = highlevel_dt / lowlevel_dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 || ratio < 1.0) {
    throw ConfigError("highlevel_dt must be an integer multiple of lowlevel_dt");
  }
  if (episode_steps <= 0) throw ConfigError("episode_steps must be positive");
  if (accel < 0.0 || v_max < 0.0) throw ConfigError("speed profile must be nonnegative");
  if (!(reward.v_eps > 0.0)) throw ConfigError("v_eps must be positive");
  if (!(joint_inertia > 0.0) || joint_friction < 0.0) throw ConfigError("invalid joint dynamics");
  if (max_fallback_steps < 0) throw ConfigError("max_fallback_steps must be >= 0");
  if (!(min_height >= 0.0) || !(max_tilt > 0.0)) throw ConfigError("invalid termination thresholds");
}

double desired_speed(double t, const EnvConfig& config) { return std::min(config.accel * t, config.v_max); }

double motor_power(double tau, double omega, double alpha) { return std::max(tau * omega + alpha * tau * tau, 0.0); }

double total_power(std::span<const double> tau, std::span<const double> omega, double alpha) {
  if (tau.size() != omega.size()) throw DimensionMismatch("torque and velocity counts differ");
  double sum = 0.0;
  for (std::size_t i = 0; i < tau.size(); ++i) sum += motor_power(tau[i], omega[i], alpha);
  return sum;
}

double step_reward(double v_desired, double v_actual, double power_w, double mass_kg, double gravity,
                   const RewardWeights& w) {
  const double vbar = std::max(v_desired, w.v_eps);
  const double rel = (v_desired - v_actual) / vbar;
  const double cot = power_w / (mass_kg * gravity * vbar);
  return w.survival - w.speed * rel * rel - w.energy * cot;
}

double step_reward(double v_desired, double v_actual, std::span<const double> tau, std::span<const double> omega,
                   double alpha, double mass_kg, double gravity, const RewardWeights& weights) {
  return step_reward(v_desired, v_actual, total_power(tau, omega, alpha), mass_kg, gravity, weights);
}

std::string to_string(Failure failure) {
  switch (failure) {
    case Failure::None: return "none";
    case Failure::Fell: return "fell";
    case Failure::MpcInfeasible: return "mpc_infeasible";
    case Failure::NumericalBlowup: return "numerical_blowup";
  }
  return "unknown";
}

namespace {

Mat3 yaw_rotation(double yaw) {
  return Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
}

bool blown_up(const SimState& s) {
  auto bad = [](const auto& v) { return !v.allFinite() || v.cwiseAbs().maxCoeff() > 1e6; };
  if (bad(s.base.position) || bad(s.base.linear_velocity) || bad(s.base.angular_velocity)) return true;
  for (std::size_t leg = 0; leg < kNumLegs; ++leg) {
    if (bad(s.q[leg]) || bad(s.qdot[leg])) return true;
  }
  return false;
}

}  // namespace

QuadrupedEnv::QuadrupedEnv(robot::RobotParams robot, mpc::MpcConfig mpc_config, swing::SwingConfig swing_config,
                           EnvConfig env_config, qp::QpConfig qp_config)
    : robot_(std::move(robot)),
      stance_(robot_, mpc_config, qp_config),
      swing_(swing_config),
      env_(env_config) {
  robot_.validate();
  env_.validate();
  replan_every_ = std::max(1, static_cast<int>(std::lround(mpc_config.replan_dt / env_.lowlevel_dt)));
  reset();
}

std::array<double, 2> QuadrupedEnv::reset() { return reset(env_.seed); }

std::array<double, 2> QuadrupedEnv::reset(std::uint64_t seed) {
  env_.seed = seed;
  state_ = SimState{};
  failure_ = Failure::None;
  done_ = false;
  steps_ = 0;
  stance_.reset();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double s = env_.init_noise;
  auto& base = state_.base;
  base.position = Vec3(0.0, 0.0, robot_.standing_height + 0.002 * s * unit(rng));
  base.euler_zyx = Vec3(0.01 * s * unit(rng), 0.01 * s * unit(rng), 0.0);
  base.linear_velocity = Vec3(0.02 * s * unit(rng), 0.02 * s * unit(rng), 0.0);
  state_.rotation = mpc::rotation_from_euler(base.euler_zyx);
  state_.start_x = base.position.x();

  for (std::size_t leg = 0; leg < kNumLegs; ++leg) {
    Vec3 foot = base.position + state_.rotation * robot::nominal_foot_position(robot_, leg);
    foot.z() = 0.0;
    state_.pinned_foot[leg] = foot;
    state_.in_contact[leg] = true;
    state_.scheduled[leg] = true;
    state_.q[leg] = robot::inverse_kinematics_clamped(robot_, leg, state_.rotation.transpose() * (foot - base.position)).q;
    state_.qdot[leg] = Vec3::Zero();
    state_.lift_off[leg] = robot::nominal_foot_position(robot_, leg);
    state_.last_command.forces[leg] = Vec3(0.0, 0.0, robot_.mass_kg * robot_.gravity / kNumLegs);
  }
  return {desired_speed(0.0, env_), base.linear_velocity.x()};
}

PerLeg<Vec3> QuadrupedEnv::foot_positions_world() const {
  PerLeg<Vec3> out{};
  for (std::size_t leg = 0; leg < kNumLegs; ++leg) {
    out[leg] = state_.in_contact[leg]
                   ? state_.pinned_foot[leg]
                   : Vec3(state_.base.position + state_.rotation * robot::forward_kinematics(robot_, leg, state_.q[leg]));
  }
  return out;
}

void QuadrupedEnv::sync_euler() { state_.base.euler_zyx = mpc::euler_from_rotation(state_.rotation); }

SubstepInfo QuadrupedEnv::physics_substep(const Vec12& tau_cmd, double dt) {
  SubstepInfo info;
  auto& s = state_;
  auto& base = s.base;
  const Mat3 rot = s.rotation;
  const Vec3 pos = base.position;
  Vec12 tau = tau_cmd;

  // Forces transmitted to the base through pinned feet, evaluated at the
  // configuration the torques were computed for.
  PerLeg<Vec3> force{};
  PerLeg<Mat3> jac{};
  Vec3 total_force(0.0, 0.0, -robot_.mass_kg * robot_.gravity);
  Vec3 total_moment = Vec3::Zero();
  for (std::size_t leg = 0; leg < kNumLegs; ++leg) {
    force[leg] = Vec3::Zero();
    if (!s.in_contact[leg]) continue;
    jac[leg] = robot::foot_jacobian(robot_, leg, s.q[leg]);
    const Vec3 leg_tau = tau.segment<3>(static_cast<Eigen::Index>(3 * leg));
    const Vec3 f = rot * (-jac[leg].transpose().partialPivLu().solve(leg_tau));
    if (f.z() < 0.0 || !f.allFinite()) {
      // The ground cannot pull: the leg goes limp instead.
      tau.segment<3>(static_cast<Eigen::Index>(3 * leg)).setZero();
      continue;
    }
    force[leg] = f;
    total_force += f;
    total_moment += (s.pinned_foot[leg] - pos).cross(f);
  }

  // Rigid-body base, velocities first (semi-implicit Euler).
  const Mat3 inertia_world = rot * robot_.inertia_base * rot.transpose();
  const Vec3 omega = base.angular_velocity;
  const Vec3 omega_dot = inertia_world.ldlt().solve(total_moment - omega.cross(inertia_world * omega));
  base.linear_velocity += total_force / robot_.mass_kg * dt;
  base.angular_velocity += omega_dot * dt;
  const Vec3& v = base.linear_velocity;
  const Vec3& w = base.angular_velocity;

  // Joint rates: contact legs from the base twist, swing legs from their own dynamics.
  for (std::size_t leg = 0; leg < kNumLegs; ++leg) {
    if (s.in_contact[leg]) {
      const Vec3 r = s.pinned_foot[leg] - pos;
      const Vec3 rdot_base = rot.transpose() * (-v - w.cross(r));
      s.qdot[leg] = jac[leg].partialPivLu().solve(rdot_base);
      info.base_work_rate += force[leg].dot(v + w.cross(r));
      info.stance_mech_power += tau.segment<3>(static_cast<Eigen::Index>(3 * leg)).dot(s.qdot[leg]);
    } else {
      const Vec3 leg_tau = tau.segment<3>(static_cast<Eigen::Index>(3 * leg));
      s.qdot[leg] += (leg_tau - env_.joint_friction * s.qdot[leg]) / env_.joint_inertia * dt;
    }
  }

  // Positions.
  base.position += v * dt;
  const double angle = w.norm() * dt;
  if (angle > 0.0) {
    Eigen::Quaterniond quat(Eigen::AngleAxisd(angle, w.normalized()) * rot);
    s.rotation = quat.normalized().toRotationMatrix();
  }
  sync_euler();
  for (std::size_t leg = 0; leg < kNumLegs; ++leg) {
    if (s.in_contact[leg]) {
      const Vec3 foot_base = s.rotation.transpose() * (s.pinned_foot[leg] - base.position);
      const robot::ClampedIk ik = robot::inverse_kinematics_clamped(robot_, leg, foot_base);
      s.q[leg] = ik.q;
      if (ik.clamped) {
        s.in_contact[leg] = false;
        ++info.reach_events;
      }
    } else {
      s.q[leg] += s.qdot[leg] * dt;
    }
  }

  info.tau = tau;
  for (std::size_t leg = 0; leg < kNumLegs; ++leg) info.omega.segment<3>(static_cast<Eigen::Index>(3 * leg)) = s.qdot[leg];
  info.power_w = total_power(std::span<const double>(info.tau.data(), 12), std::span<const double>(info.omega.data(), 12),
                             robot_.motor_alpha);
  s.time_s += dt;
  s.cumulative_energy_j += info.power_w * dt;
  ++s.substeps;
  if (blown_up(s)) throw NumericalBlowup("simulator state exceeded 1e6");
  return info;
}

bool QuadrupedEnv::check_termination() {
  const auto& base = state_.base;
  const double tilt = std::max(std::abs(base.euler_zyx.x()), std::abs(base.euler_zyx.y()));
  if (base.position.z() < env_.min_height || tilt > env_.max_tilt) {
    failure_ = Failure::Fell;
    done_ = true;
    return false;
  }
  return true;
}

bool QuadrupedEnv::substep(const gait::GaitParams& params, double v_desired, SubstepInfo* info_out) {
  auto& s = state_;
  auto& base = s.base;
  const double dt = env_.lowlevel_dt;
  s.last_gait_params = params;
  s.gait = gait::advance_phase(s.gait, params.frequency_hz, dt);
  const gait::ContactSchedule sched =
      standing_ ? gait::ContactSchedule{true, true, true, true} : gait::contact_schedule(s.gait, params);

  const Mat3 rot_yaw = yaw_rotation(base.euler_zyx.z());
  const PerLeg<Vec3> feet = foot_positions_world();
  for (std::size_t leg = 0; leg < kNumLegs; ++leg) {
    if (s.scheduled[leg] && !sched[leg]) {
      s.lift_off[leg] = rot_yaw.transpose() * (feet[leg] - base.position);
      s.in_contact[leg] = false;
    } else if (!s.scheduled[leg] && sched[leg]) {
      Vec3 touch = feet[leg];
      touch.z() = 0.0;
      const robot::ClampedIk ik =
          robot::inverse_kinematics_clamped(robot_, leg, s.rotation.transpose() * (touch - base.position));
      if (!ik.clamped) {
        s.pinned_foot[leg] = touch;
        s.in_contact[leg] = true;
        s.q[leg] = ik.q;
      }
    }
  }
  s.scheduled = sched;

  // Swing trajectories in the yaw frame, rebuilt from the latest velocity.
  const Vec3 v_yaw = rot_yaw.transpose() * base.linear_velocity;
  PerLeg<Vec3> swing_target{};
  PerLeg<Vec3> landing_world{};
  for (std::size_t leg = 0; leg < kNumLegs; ++leg) {
    if (s.in_contact[leg]) continue;
    const Vec3& hip = robot_.hip_offsets[leg];
    const Vec3 p_ref(hip.x(), hip.y() + side_sign(leg) * robot_.l_abduction, -base.position.z());
    const Vec3 land = swing::raibert_landing(p_ref, v_yaw, params.stance_duration());
    const swing::SwingTrajectory traj = swing::build_trajectory(s.lift_off[leg], p_ref, land, swing_.clearance);
    const Vec3 target = swing::swing_foot_target(traj, s.gait.leg_phase(leg, params), params.swing_threshold());
    swing_target[leg] = s.rotation.transpose() * rot_yaw * target;
    landing_world[leg] = base.position + rot_yaw * land;
    landing_world[leg].z() = 0.0;
  }

  // Stance forces.
  int fallbacks = 0;
  mpc::MpcResult solved;
  if (s.substeps % replan_every_ == 0) {
    PerLeg<Vec3> foot_rel{};
    for (std::size_t leg = 0; leg < kNumLegs; ++leg) {
      foot_rel[leg] = (s.in_contact[leg] ? s.pinned_foot[leg] : landing_world[leg]) - base.position;
    }
    std::vector<gait::ContactSchedule> contacts = mpc::predict_contacts(s.gait, params, stance_.config());
    if (standing_) std::fill(contacts.begin(), contacts.end(), gait::ContactSchedule{true, true, true, true});
    contacts[0] = s.in_contact;
    const auto reference =
        mpc::build_reference(base, Vec3(v_desired, 0.0, 0.0), stance_.config(), robot_.standing_height);
    const mpc::MpcResult res = stance_.solve(base, foot_rel, contacts, reference);
    solved = res;
    if (res.status == qp::QpStatus::Infeasible) {
      ++s.fallback_count;
      fallbacks = 1;
      if (s.fallback_count > env_.max_fallback_steps) {
        failure_ = Failure::MpcInfeasible;
        done_ = true;
        return false;
      }
    } else {
      s.last_command = res.command;
      s.fallback_count = 0;
    }
  }

  int clips = 0;
  Vec12 tau = mpc::forces_to_torques(robot_, s.last_command, s.q, s.rotation, s.in_contact, &clips);
  for (std::size_t leg = 0; leg < kNumLegs; ++leg) {
    if (s.in_contact[leg]) continue;
    const swing::SwingCommand cmd =
        swing::swing_torques(robot_, leg, swing_target[leg], s.q[leg], s.qdot[leg], swing_.gains);
    tau.segment<3>(static_cast<Eigen::Index>(3 * leg)) = cmd.tau;
    clips += cmd.clip_events;
  }

  SubstepInfo info;
  try {
    info = physics_substep(tau, dt);
  } catch (const NumericalBlowup&) {
    failure_ = Failure::NumericalBlowup;
    done_ = true;
    return false;
  }
  info.clip_events = clips;
  for (std::size_t leg = 0; leg < kNumLegs; ++leg) {
    if (s.in_contact[leg] || s.scheduled[leg]) continue;
    const double err = (robot::forward_kinematics(robot_, leg, s.q[leg]) - swing_target[leg]).norm();
    info.swing_error = std::max(info.swing_error, err);
  }
  info.mpc_iterations = solved.iterations;
  info.mpc_num_vars = solved.num_vars;
  info.mpc_kkt_residual = solved.kkt_residual;
  info.mpc_objective = solved.objective;
  info.command = s.last_command;
  pending_.mpc_fallbacks += fallbacks;

  if (trace_ != nullptr) {
    TraceRow row{};
    row.time_s = s.time_s;
    row.desired_speed = v_desired;
    row.speed = base.linear_velocity.x();
    row.height = base.position.z();
    row.roll = base.euler_zyx.x();
    row.pitch = base.euler_zyx.y();
    for (std::size_t leg = 0; leg < kNumLegs; ++leg) {
      row.phases[leg] = s.gait.leg_phase(leg, params);
      row.contacts[leg] = s.in_contact[leg];
    }
    row.gait = params;
    row.power_w = info.power_w;
    trace_->push_back(row);
  }
  if (info_out != nullptr) *info_out = info;
  return check_termination();
}

StepResult QuadrupedEnv::step(const gait::GaitParams& params) {
  if (done_) throw Error("step() called on a finished episode; call reset()");
  params.validate();
  const int n = env_.substeps_per_step();
  pending_ = StepInfo{};
  double power_sum = 0.0;
  double speed_sum = 0.0;
  double desired_sum = 0.0;
  int count = 0;
  bool alive = true;
  const std::size_t trace_begin = trace_ != nullptr ? trace_->size() : 0;
  for (int i = 0; i < n && alive; ++i) {
    const double vd = desired_speed(state_.time_s, env_);
    SubstepInfo info;
    alive = substep(params, vd, &info);
    // A controller failure ends the substep before physics runs.
    if (failure_ == Failure::MpcInfeasible || failure_ == Failure::NumericalBlowup) break;
    power_sum += info.power_w;
    speed_sum += state_.base.linear_velocity.x();
    desired_sum += vd;
    pending_.clip_events += info.clip_events;
    pending_.reach_events += info.reach_events;
    ++count;
  }

  StepResult out;
  out.info = pending_;
  out.info.failure = failure_;
  if (count > 0) {
    out.power_w = power_sum / count;
    out.speed = speed_sum / count;
    out.desired_speed = desired_sum / count;
  } else {
    out.desired_speed = desired_speed(state_.time_s, env_);
  }
  const double vbar = std::max(out.desired_speed, env_.reward.v_eps);
  out.reward = step_reward(out.desired_speed, out.speed, out.power_w, robot_.mass_kg, robot_.gravity, env_.reward);
  out.info.speed_error = std::abs(out.desired_speed - out.speed);
  out.info.cot_instant = out.power_w / (robot_.mass_kg * robot_.gravity * vbar);
  if (trace_ != nullptr) {
    for (std::size_t i = trace_begin; i < trace_->size(); ++i) {
      (*trace_)[i].step = steps_;
      (*trace_)[i].reward = out.reward;
    }
  }
  ++steps_;
  out.terminated = failure_ != Failure::None;
  out.truncated = !out.terminated && steps_ >= env_.episode_steps;
  done_ = out.terminated || out.truncated;
  out.observation = {desired_speed(state_.time_s, env_), out.speed};
  return out;
}

}  // namespace gaitforge::sim
