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

#include "gaitforge/mpc.hpp"

#include <algorithm>
#include <cmath>

#include "gaitforge/errors.hpp"

namespace gaitforge::mpc {

Vec12 CentroidalState::to_vector() const {
  Vec12 x;
  x << euler_zyx, position, angular_velocity, linear_velocity;
  return x;
}

CentroidalState CentroidalState::from_vector(const Vec12& x) {
  return {x.segment<3>(0), x.segment<3>(3), x.segment<3>(6), x.segment<3>(9)};
}

Mat3 rotation_from_euler(const Vec3& e) {
  return (Eigen::AngleAxisd(e.z(), Vec3::UnitZ()) * Eigen::AngleAxisd(e.y(), Vec3::UnitY()) *
          Eigen::AngleAxisd(e.x(), Vec3::UnitX()))
      .toRotationMatrix();
}

Vec3 euler_from_rotation(const Mat3& r) {
  const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  return {std::atan2(r(2, 1), r(2, 2)), pitch, std::atan2(r(1, 0), r(0, 0))};
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

void MpcConfig::validate() const {
  if (horizon_steps < 1) throw ConfigError("mpc.horizon_steps must be >= 1");
  if (!(dt_mpc > 0.0)) throw ConfigError("mpc.dt_mpc must be positive");
  if ((state_weights.array() < 0.0).any() || force_weight < 0.0) throw ConfigError("mpc weights must be >= 0");
  if (!(fz_min > 0.0 && fz_min < fz_max)) throw ConfigError("mpc requires 0 < fz_min < fz_max");
  if (!(friction_mu > 0.0)) throw ConfigError("mpc.friction_mu must be positive");
  if (!(replan_dt > 0.0)) throw ConfigError("mpc.replan_dt must be positive");
}

ContinuousDynamics build_continuous_dynamics(const CentroidalState& state, const PerLeg<Vec3>& foot_rel,
                                             const robot::RobotParams& params) {
  const Mat3 rot = rotation_from_euler(state.euler_zyx);
  const Mat3 inertia_world = rot * params.inertia_base * rot.transpose();
  Eigen::SelfAdjointEigenSolver<Mat3> eig(inertia_world, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12) throw SingularInertia("world inertia is singular or ill-conditioned");
  const Mat3 inertia_inv = inertia_world.inverse();

  const double yaw = state.euler_zyx.z();
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  Mat3 yaw_rate_map;
  yaw_rate_map << c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0;

  ContinuousDynamics out;
  out.a.block<3, 3>(0, 6) = yaw_rate_map;
  out.a.block<3, 3>(3, 9) = Mat3::Identity();
  for (std::size_t leg = 0; leg < kNumLegs; ++leg) {
    const auto col = static_cast<Eigen::Index>(3 * leg);
    out.b.block<3, 3>(6, col) = inertia_inv * skew(foot_rel[leg]);
    out.b.block<3, 3>(9, col) = Mat3::Identity() / params.mass_kg;
  }
  out.g_aff(11) = -params.gravity;
  return out;
}

DiscreteDynamics discretize(const ContinuousDynamics& cont, double dt) {
  DiscreteDynamics d;
  d.a = Mat12::Identity() + cont.a * dt;
  d.b = cont.b * dt;
  d.g_aff = cont.g_aff * dt;
  return d;
}

std::vector<CentroidalState> build_reference(const CentroidalState& current, const Vec3& desired_velocity,
                                             const MpcConfig& config, double standing_height) {
  std::vector<CentroidalState> ref(static_cast<std::size_t>(config.horizon_steps));
  Vec3 pos = current.position;
  for (auto& r : ref) {
    pos += desired_velocity * config.dt_mpc;
    r.position = Vec3(pos.x(), pos.y(), standing_height);
    r.linear_velocity = desired_velocity;
  }
  return ref;
}

std::vector<gait::ContactSchedule> predict_contacts(const gait::GaitState& state, const gait::GaitParams& params,
                                                    const MpcConfig& config) {
  std::vector<gait::ContactSchedule> out(static_cast<std::size_t>(config.horizon_steps));
  for (int k = 0; k < config.horizon_steps; ++k) {
    out[static_cast<std::size_t>(k)] =
        gait::contact_schedule(gait::advance_phase(state, params.frequency_hz, k * config.dt_mpc), params);
  }
  return out;
}

std::vector<Mat12> input_matrices_along_reference(const CentroidalState& current, const PerLeg<Vec3>& foot_rel,
                                                  const std::vector<CentroidalState>& reference,
                                                  const robot::RobotParams& params) {
  std::vector<Mat12> out;
  out.reserve(reference.size());
  PerLeg<Vec3> shifted = foot_rel;
  for (std::size_t t = 0; t < reference.size(); ++t) {
    const Vec3 com = t == 0 ? current.position : reference[t - 1].position;
    for (std::size_t leg = 0; leg < kNumLegs; ++leg) shifted[leg] = current.position + foot_rel[leg] - com;
    out.push_back(build_continuous_dynamics(current, shifted, params).b);
  }
  return out;
}

CondensedQp condense(const ContinuousDynamics& cont, const CentroidalState& current,
                     const std::vector<gait::ContactSchedule>& contacts,
                     const std::vector<CentroidalState>& reference, const MpcConfig& config) {
  return condense(cont, std::vector<Mat12>(static_cast<std::size_t>(config.horizon_steps), cont.b), current, contacts,
                  reference, config);
}

CondensedQp condense(const ContinuousDynamics& cont, const std::vector<Mat12>& input_matrices,
                     const CentroidalState& current, const std::vector<gait::ContactSchedule>& contacts,
                     const std::vector<CentroidalState>& reference, const MpcConfig& config) {
  const int horizon = config.horizon_steps;
  if (static_cast<int>(contacts.size()) != horizon || static_cast<int>(reference.size()) != horizon ||
      static_cast<int>(input_matrices.size()) != horizon) {
    throw DimensionMismatch("contact schedule, reference and input matrices must cover the MPC horizon");
  }
  const double dt = config.dt_mpc;
  const DiscreteDynamics disc = discretize(cont, dt);
  const auto q = config.state_weights.asDiagonal();

  // A has A*A = 0, so A'^p = I + p*dt*A and the response at step k to the
  // input at step t is B'_t + (k-1-t)*E_t with E_t = dt*A*B'_t. B'_t only
  // touches rows 6..11 and E_t only rows 0..5, so with diagonal Q the cross
  // terms vanish: (A'^a B'_t)' Q (A'^b B'_s) = B'_t' Q B'_s + a*b*E_t' Q E_s.

  // Free response errors Q*(x_k - xref_k), k = 1..T.
  std::vector<Vec12> weighted_err(static_cast<std::size_t>(horizon));
  Vec12 x = current.to_vector();
  for (int k = 0; k < horizon; ++k) {
    x = disc.a * x + disc.g_aff;
    weighted_err[static_cast<std::size_t>(k)] = q * (x - reference[static_cast<std::size_t>(k)].to_vector());
  }
  // For input step t: a_t = sum_{k>t} Qe_k, b_t = sum_{k>t} (k-1-t) Qe_k.
  std::vector<Vec12> acc_a_at(static_cast<std::size_t>(horizon));
  std::vector<Vec12> acc_b_at(static_cast<std::size_t>(horizon));
  Vec12 acc_a = Vec12::Zero();
  Vec12 acc_b = Vec12::Zero();
  for (int t = horizon - 1; t >= 0; --t) {
    acc_b += acc_a;
    acc_a += weighted_err[static_cast<std::size_t>(t)];
    acc_a_at[static_cast<std::size_t>(t)] = acc_a;
    acc_b_at[static_cast<std::size_t>(t)] = acc_b;
  }

  CondensedQp out;
  for (int t = 0; t < horizon; ++t) {
    for (int leg = 0; leg < static_cast<int>(kNumLegs); ++leg) {
      if (contacts[static_cast<std::size_t>(t)][static_cast<std::size_t>(leg)]) out.blocks.push_back({t, leg});
    }
  }
  const auto nb_count = out.blocks.size();
  using Mat12x3 = Eigen::Matrix<double, 12, 3>;
  std::vector<Mat12x3> bcol(nb_count);
  std::vector<Mat12x3> ecol(nb_count);
  std::vector<Mat12x3> qb(nb_count);
  std::vector<Mat12x3> qe(nb_count);
  for (std::size_t i = 0; i < nb_count; ++i) {
    const ForceBlock b = out.blocks[i];
    bcol[i] = input_matrices[static_cast<std::size_t>(b.step)].block<12, 3>(0, 3 * b.leg) * dt;
    ecol[i] = dt * cont.a * bcol[i];
    qb[i] = q * bcol[i];
    qe[i] = q * ecol[i];
  }
  const auto nb = static_cast<Eigen::Index>(out.blocks.size());
  const Eigen::Index n = 3 * nb;
  auto& prob = out.problem;
  prob.hessian.resize(n, n);
  prob.linear.resize(n);
  prob.ineq_matrix = Eigen::MatrixXd::Zero(6 * nb, n);
  prob.ineq_bound.resize(6 * nb);

  for (Eigen::Index i = 0; i < nb; ++i) {
    const ForceBlock bi = out.blocks[static_cast<std::size_t>(i)];
    const auto ui = static_cast<std::size_t>(i);
    prob.linear.segment<3>(3 * i) = bcol[ui].transpose() * acc_a_at[static_cast<std::size_t>(bi.step)] +
                                    ecol[ui].transpose() * acc_b_at[static_cast<std::size_t>(bi.step)];
    for (Eigen::Index j = i; j < nb; ++j) {
      const ForceBlock bj = out.blocks[static_cast<std::size_t>(j)];
      const int last = std::max(bi.step, bj.step);
      const double count = horizon - last;
      double lag_sum = 0.0;
      for (int k = last + 1; k <= horizon; ++k) lag_sum += double(k - 1 - bi.step) * double(k - 1 - bj.step);
      const auto uj = static_cast<std::size_t>(j);
      Mat3 block = count * (bcol[ui].transpose() * qb[uj]) + lag_sum * (ecol[ui].transpose() * qe[uj]);
      if (i == j) block.diagonal().array() += config.force_weight;
      prob.hessian.block<3, 3>(3 * i, 3 * j) = block;
      if (i != j) prob.hessian.block<3, 3>(3 * j, 3 * i) = block.transpose();
    }

    const double mu = config.friction_mu;
    const Eigen::Index r = 6 * i;
    const Eigen::Index c = 3 * i;
    auto& g = prob.ineq_matrix;
    g(r + 0, c + 2) = 1.0;  // fz <= fz_max
    g(r + 1, c + 2) = -1.0;  // -fz <= -fz_min
    g(r + 2, c + 0) = 1.0;  // fx - mu fz <= 0
    g(r + 2, c + 2) = -mu;
    g(r + 3, c + 0) = -1.0;  // -fx - mu fz <= 0
    g(r + 3, c + 2) = -mu;
    g(r + 4, c + 1) = 1.0;
    g(r + 4, c + 2) = -mu;
    g(r + 5, c + 1) = -1.0;
    g(r + 5, c + 2) = -mu;
    prob.ineq_bound.segment<6>(r) << config.fz_max, -config.fz_min, 0.0, 0.0, 0.0, 0.0;
  }
  return out;
}

StanceController::StanceController(robot::RobotParams params, MpcConfig config, qp::QpConfig qp_config)
    : params_(std::move(params)), config_(config), solver_(qp_config) {
  config_.validate();
}

MpcResult StanceController::solve(const CentroidalState& state, const PerLeg<Vec3>& foot_rel,
                                  const std::vector<gait::ContactSchedule>& contacts,
                                  const std::vector<CentroidalState>& reference) {
  const ContinuousDynamics cont = build_continuous_dynamics(state, foot_rel, params_);
  const CondensedQp cqp =
      config_.track_feet
          ? condense(cont, input_matrices_along_reference(state, foot_rel, reference, params_), state, contacts,
                     reference, config_)
          : condense(cont, state, contacts, reference, config_);
  const auto n = cqp.problem.num_vars();

  // Seed from the previous solution where the same (step, leg) block exists.
  Eigen::VectorXd warm;
  bool have_warm = false;
  if (config_.warm_start && previous_.size() > 0 && n > 0) {
    warm.resize(n);
    std::size_t cursor = 0;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(cqp.blocks.size()); ++i) {
      const ForceBlock b = cqp.blocks[static_cast<std::size_t>(i)];
      while (cursor < previous_blocks_.size() &&
             (previous_blocks_[cursor].step < b.step ||
              (previous_blocks_[cursor].step == b.step && previous_blocks_[cursor].leg < b.leg))) {
        ++cursor;
      }
      if (cursor < previous_blocks_.size() && previous_blocks_[cursor].step == b.step &&
          previous_blocks_[cursor].leg == b.leg) {
        warm.segment<3>(3 * i) = previous_.segment<3>(3 * static_cast<Eigen::Index>(cursor));
      } else {
        warm.segment<3>(3 * i) = Vec3(0.0, 0.0, 0.5 * (config_.fz_min + config_.fz_max));
      }
    }
    have_warm = true;
  }

  const qp::QpSolution sol = solver_.solve(cqp.problem, have_warm ? &warm : nullptr);

  MpcResult result;
  result.status = sol.status;
  result.kkt_residual = sol.kkt_residual;
  result.iterations = sol.iterations;
  result.num_vars = static_cast<int>(n);
  result.objective = n > 0 ? cqp.problem.objective(sol.u) : 0.0;
  if (sol.status == qp::QpStatus::Infeasible) {
    previous_.resize(0);
    previous_blocks_.clear();
    return result;
  }
  for (std::size_t i = 0; i < cqp.blocks.size() && cqp.blocks[i].step == 0; ++i) {
    result.command.forces[static_cast<std::size_t>(cqp.blocks[i].leg)] =
        sol.u.segment<3>(3 * static_cast<Eigen::Index>(i));
  }
  previous_ = sol.u;
  previous_blocks_ = cqp.blocks;
  return result;
}

Vec12 forces_to_torques(const robot::RobotParams& params, const GrfCommand& command, const PerLeg<Vec3>& joint_angles,
                        const Mat3& base_to_world, const gait::ContactSchedule& stance, int* clip_events) {
  Vec12 tau = Vec12::Zero();
  for (std::size_t leg = 0; leg < kNumLegs; ++leg) {
    if (!stance[leg]) continue;
    const Mat3 jac = robot::foot_jacobian(params, leg, joint_angles[leg]);
    // The foot pushes on the ground with -f.
    const Vec3 leg_tau = -jac.transpose() * (base_to_world.transpose() * command.forces[leg]);
    for (int j = 0; j < 3; ++j) {
      double v = leg_tau[j];
      if (std::abs(v) > params.torque_limit_joint) {
        v = std::copysign(params.torque_limit_joint, v);
        if (clip_events != nullptr) ++*clip_events;
      }
      tau[static_cast<Eigen::Index>(3 * leg) + j] = v;
    }
  }
  return tau;
}

}  // namespace gaitforge::mpc
