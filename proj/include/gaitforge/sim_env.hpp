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

#ifndef GAITFORGE_SIM_ENV_HPP_
#define GAITFORGE_SIM_ENV_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gaitforge/gait.hpp"
#include "gaitforge/mpc.hpp"
#include "gaitforge/robot_model.hpp"
#include "gaitforge/swing.hpp"
#include "gaitforge/types.hpp"

namespace gaitforge::sim {

struct RewardWeights {
  double survival = 3.0;  // c
  double speed = 1.0;     // w_v
  double energy = 0.37;   // w_e
  /// Floor on the desired speed inside both reward denominators.
  double v_eps = 0.1;
};

struct EnvConfig {
  int episode_steps = 400;
  double highlevel_dt = 0.05;
  double lowlevel_dt = 0.002;
  double accel = 1.0;
  double v_max = 2.5;
  RewardWeights reward;
  double min_height = 0.15;
  double max_tilt = 0.5;
  std::uint64_t seed = 0;
  /// Reflected rotor inertia and viscous friction of each joint (swing dynamics).
  double joint_inertia = 0.06;
  double joint_friction = 0.01;
  /// Consecutive infeasible MPC solves tolerated before the episode fails.
  int max_fallback_steps = 5;
  /// Scale of the seeded initial perturbation (0 disables it).
  double init_noise = 1.0;

  int substeps_per_step() const;
  void validate() const;
};

/// Commanded forward speed: min(accel * t, v_max).
double desired_speed(double t, const EnvConfig& config);

/// Electrical power of one motor from joint torque and velocity: max(tau w + alpha tau^2, 0).
double motor_power(double tau, double omega, double alpha = 0.3);

/// Sum of motor_power over all joints.
double total_power(std::span<const double> tau, std::span<const double> omega, double alpha = 0.3);

/// c - w_v ((vbar - v)/vbar)^2 - w_e P/(m g vbar), vbar floored at v_eps.
double step_reward(double v_desired, double v_actual, double power_w, double mass_kg, double gravity,
                   const RewardWeights& weights);

/// Reward from raw joint torques and velocities.
double step_reward(double v_desired, double v_actual, std::span<const double> tau, std::span<const double> omega,
                   double alpha, double mass_kg, double gravity, const RewardWeights& weights);

struct SimState {
  mpc::CentroidalState base;
  Mat3 rotation = Mat3::Identity();  // base to world, kept alongside the Euler angles
  PerLeg<Vec3> q{};
  PerLeg<Vec3> qdot{};
  /// Physical contact: the foot is pinned at `pinned_foot` (world).
  PerLeg<bool> in_contact{};
  PerLeg<Vec3> pinned_foot{};
  /// Lift-off points latched in the yaw-aligned frame relative to the base.
  PerLeg<Vec3> lift_off{};
  gait::ContactSchedule scheduled{};
  gait::GaitState gait;
  gait::GaitParams last_gait_params;
  double time_s = 0.0;
  double cumulative_energy_j = 0.0;
  double start_x = 0.0;
  std::int64_t substeps = 0;
  mpc::GrfCommand last_command;
  int fallback_count = 0;
};

/// Diagnostics of one physics substep.
struct SubstepInfo {
  Vec12 tau = Vec12::Zero();
  Vec12 omega = Vec12::Zero();
  double power_w = 0.0;
  /// Rate of work done by the contact forces on the base, and the matching
  /// mechanical motor power tau * qdot summed over contact legs.
  double base_work_rate = 0.0;
  double stance_mech_power = 0.0;
  int clip_events = 0;
  int reach_events = 0;
  /// MPC diagnostics of this substep's solve (zeros if no solve ran).
  /// Largest distance between a swing foot and its target after the substep (m).
  double swing_error = 0.0;
  int mpc_iterations = 0;
  int mpc_num_vars = 0;
  double mpc_kkt_residual = 0.0;
  double mpc_objective = 0.0;
  mpc::GrfCommand command;
};

enum class Failure { None, Fell, MpcInfeasible, NumericalBlowup };
std::string to_string(Failure failure);

struct StepInfo {
  double speed_error = 0.0;
  double cot_instant = 0.0;
  int clip_events = 0;
  int reach_events = 0;
  int mpc_fallbacks = 0;
  Failure failure = Failure::None;
};

struct StepResult {
  std::array<double, 2> observation{};  // [vbar, v]
  double reward = 0.0;
  double power_w = 0.0;
  double desired_speed = 0.0;
  double speed = 0.0;
  bool terminated = false;
  bool truncated = false;
  StepInfo info;
};

/// Per-substep record for traces and gait diagrams.
struct TraceRow {
  double time_s;
  double desired_speed;
  double speed;
  double height;
  double roll;
  double pitch;
  std::array<double, kNumLegs> phases;
  std::array<bool, kNumLegs> contacts;
  gait::GaitParams gait;
  double power_w;
  /// Index and reward of the high-level step this substep belongs to.
  int step;
  double reward;
};

/**
 * Simplified quadruped simulator wrapped as an MDP.
 *
 * The base is a single rigid body with massless legs. Feet in contact are
 * pinned to the ground; their joint angles follow from IK and their joint
 * rates from J^-1 applied to the base twist. Contact forces are whatever the
 * (clipped) joint torques transmit, -R J^-T tau, with pulling contacts
 * switched off. Swing joints integrate I qdd = tau - b qd. Everything uses
 * semi-implicit Euler at the low-level rate.
 */
class QuadrupedEnv {
 public:
  QuadrupedEnv(robot::RobotParams robot, mpc::MpcConfig mpc_config, swing::SwingConfig swing_config,
               EnvConfig env_config, qp::QpConfig qp_config = {});

  /// Resets to the standing pose; returns the first observation.
  std::array<double, 2> reset();
  std::array<double, 2> reset(std::uint64_t seed);

  /// Runs one high-level step (highlevel_dt / lowlevel_dt substeps).
  StepResult step(const gait::GaitParams& params);

  /// One low-level control + physics substep at the current gait parameters.
  /// Returns false on termination.
  bool substep(const gait::GaitParams& params, double v_desired, SubstepInfo* info_out = nullptr);

  /// Physics only: integrate under joint torques for legs in contact (forces
  /// transmitted through the pinned feet) and swing dynamics elsewhere.
  SubstepInfo physics_substep(const Vec12& tau, double dt);

  const SimState& state() const { return state_; }
  SimState& mutable_state() { return state_; }
  const EnvConfig& env_config() const { return env_; }
  const robot::RobotParams& robot() const { return robot_; }
  const mpc::MpcConfig& mpc_config() const { return stance_.config(); }

  /// Foot positions in world coordinates.
  PerLeg<Vec3> foot_positions_world() const;

  double distance_travelled() const { return state_.base.position.x() - state_.start_x; }
  Failure failure() const { return failure_; }
  bool done() const { return done_; }
  int steps_taken() const { return steps_; }

  void set_trace(std::vector<TraceRow>* trace) { trace_ = trace; }

  /// Forces every leg into stance regardless of the gait phase (standing tests).
  void set_standing(bool standing) { standing_ = standing; }

 private:
  void sync_euler();
  bool check_termination();

  robot::RobotParams robot_;
  mpc::StanceController stance_;
  swing::SwingConfig swing_;
  EnvConfig env_;
  SimState state_;
  Failure failure_ = Failure::None;
  bool done_ = false;
  int steps_ = 0;
  int replan_every_ = 1;
  bool standing_ = false;
  std::vector<TraceRow>* trace_ = nullptr;
  StepInfo pending_;
};

}  // namespace gaitforge::sim

#endif  // GAITFORGE_SIM_ENV_HPP_
