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

#ifndef GAITFORGE_MPC_HPP_
#define GAITFORGE_MPC_HPP_

#include <vector>

#include "gaitforge/gait.hpp"
#include "gaitforge/qp_solver.hpp"
#include "gaitforge/robot_model.hpp"
#include "gaitforge/types.hpp"

namespace gaitforge::mpc {

/// Base state x = [Theta, p, omega, p_dot]; Theta = (roll, pitch, yaw) of a Z-Y-X rotation.
struct CentroidalState {
  Vec3 euler_zyx = Vec3::Zero();
  Vec3 position = Vec3::Zero();
  Vec3 angular_velocity = Vec3::Zero();  // world frame
  Vec3 linear_velocity = Vec3::Zero();   // world frame

  Vec12 to_vector() const;
  static CentroidalState from_vector(const Vec12& x);
};

/// R = Rz(yaw) * Ry(pitch) * Rx(roll), base to world.
Mat3 rotation_from_euler(const Vec3& euler_zyx);
Vec3 euler_from_rotation(const Mat3& rot);
Mat3 skew(const Vec3& v);

struct MpcConfig {
  int horizon_steps = 10;
  double dt_mpc = 0.025;
  /// Diagonal of Q in state order [Theta, p, omega, p_dot].
  Vec12 state_weights = (Vec12() << 50, 50, 50, 10, 10, 100, 1, 1, 1, 10, 10, 30).finished();
  double force_weight = 1e-4;
  double friction_mu = 0.45;
  double fz_min = 2.0;
  double fz_max = 120.0;
  double replan_dt = 0.002;
  bool warm_start = true;
  /// Move the foot lever arms along the reference CoM path over the horizon
  /// instead of freezing them at their current values.
  bool track_feet = true;

  void validate() const;
};

struct ContinuousDynamics {
  Mat12 a = Mat12::Zero();
  Mat12 b = Mat12::Zero();
  Vec12 g_aff = Vec12::Zero();
};

struct DiscreteDynamics {
  Mat12 a = Mat12::Identity();
  Mat12 b = Mat12::Zero();
  Vec12 g_aff = Vec12::Zero();
};

/// Linear time-varying centroidal model around `state`. `foot_rel` are the
/// foot positions relative to the base CoM in world axes.
/// Throws SingularInertia when cond(I_world) exceeds 1e12.
ContinuousDynamics build_continuous_dynamics(const CentroidalState& state, const PerLeg<Vec3>& foot_rel,
                                             const robot::RobotParams& params);

/// Forward Euler: A' = I + A dt, B' = B dt, g' = g dt.
DiscreteDynamics discretize(const ContinuousDynamics& cont, double dt);

/// T references: constant desired velocity, position integrated from the
/// current x-y, height at standing height, zero orientation and angular rate.
std::vector<CentroidalState> build_reference(const CentroidalState& current, const Vec3& desired_velocity,
                                             const MpcConfig& config, double standing_height);

/// Contact flags for each of the T horizon steps, from rolling the phase
/// integrator forward at frozen gait parameters.
std::vector<gait::ContactSchedule> predict_contacts(const gait::GaitState& state, const gait::GaitParams& params,
                                                    const MpcConfig& config);

/// Ground reaction forces on the robot, world frame; swing legs are zero.
struct GrfCommand {
  PerLeg<Vec3> forces = {Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
};

/// One decision variable block: the force of `leg` at horizon step `step`.
struct ForceBlock {
  int step;
  int leg;
};

struct CondensedQp {
  qp::QpProblem problem;
  std::vector<ForceBlock> blocks;
};

/// Eliminates the states through the discrete recursion; swing-leg forces are
/// removed from the decision vector. The objective is half the MPC cost
/// sum_t |x_t - xref_t|_Q^2 + |u_t|_R^2 up to a constant.
CondensedQp condense(const ContinuousDynamics& cont, const CentroidalState& current,
                     const std::vector<gait::ContactSchedule>& contacts,
                     const std::vector<CentroidalState>& reference, const MpcConfig& config);

/// Same with one continuous input matrix per horizon step.
CondensedQp condense(const ContinuousDynamics& cont, const std::vector<Mat12>& input_matrices,
                     const CentroidalState& current, const std::vector<gait::ContactSchedule>& contacts,
                     const std::vector<CentroidalState>& reference, const MpcConfig& config);

/// Continuous B for each horizon step with fixed world footholds: the lever
/// arm at step t is measured from the CoM at t (current state for t = 0,
/// reference afterwards).
std::vector<Mat12> input_matrices_along_reference(const CentroidalState& current, const PerLeg<Vec3>& foot_rel,
                                                  const std::vector<CentroidalState>& reference,
                                                  const robot::RobotParams& params);

struct MpcResult {
  GrfCommand command;
  qp::QpStatus status = qp::QpStatus::Optimal;
  double kkt_residual = 0.0;
  double objective = 0.0;
  int iterations = 0;
  int num_vars = 0;
};

/// Convex MPC over ground reaction forces; owns a QP workspace.
class StanceController {
 public:
  StanceController(robot::RobotParams params, MpcConfig config, qp::QpConfig qp_config = {});

  const MpcConfig& config() const { return config_; }

  /// Solves the condensed QP and returns the first force command.
  MpcResult solve(const CentroidalState& state, const PerLeg<Vec3>& foot_rel,
                  const std::vector<gait::ContactSchedule>& contacts,
                  const std::vector<CentroidalState>& reference);

  void reset() {
    previous_.resize(0);
    previous_blocks_.clear();
  }

 private:
  robot::RobotParams params_;
  MpcConfig config_;
  qp::QpSolver solver_;
  std::vector<ForceBlock> previous_blocks_;
  Eigen::VectorXd previous_;
};

/// Joint torques realising `command` on stance legs: tau = -J(q)' R' f.
/// Swing legs receive zero. Torques beyond the joint limit are clipped and
/// counted in `clip_events`.
Vec12 forces_to_torques(const robot::RobotParams& params, const GrfCommand& command, const PerLeg<Vec3>& joint_angles,
                        const Mat3& base_to_world, const gait::ContactSchedule& stance, int* clip_events = nullptr);

}  // namespace gaitforge::mpc

#endif  // GAITFORGE_MPC_HPP_
