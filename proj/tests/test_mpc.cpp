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

#include <random>

#include <gtest/gtest.h>

#include "gaitforge/errors.hpp"
#include "gaitforge/mpc.hpp"
#include "gaitforge/qp_solver.hpp"
#include "gaitforge/robot_model.hpp"
#include "oracles.hpp"

using namespace gaitforge;
using mpc::CentroidalState;
using mpc::MpcConfig;

namespace {

PerLeg<Vec3> standing_feet(const robot::RobotParams& p) {
  PerLeg<Vec3> feet;
  for (std::size_t leg = 0; leg < kNumLegs; ++leg) feet[leg] = robot::nominal_foot_position(p, leg);
  return feet;
}

CentroidalState standing_state(const robot::RobotParams& p) {
  CentroidalState s;
  s.position = Vec3(0.0, 0.0, p.standing_height);
  return s;
}

// Straightforward rollout of the full MPC cost for a stacked (step, leg) force vector.
double rollout_cost(const mpc::ContinuousDynamics& cont, const std::vector<Mat12>& bs, const CentroidalState& x0,
                    const std::vector<gait::ContactSchedule>& contacts, const std::vector<CentroidalState>& ref,
                    const MpcConfig& cfg, const Eigen::VectorXd& u) {
  const Mat12 a = Mat12::Identity() + cont.a * cfg.dt_mpc;
  Vec12 x = x0.to_vector();
  double cost = 0.0;
  Eigen::Index cursor = 0;
  for (int k = 0; k < cfg.horizon_steps; ++k) {
    Vec12 uk = Vec12::Zero();
    for (std::size_t leg = 0; leg < kNumLegs; ++leg) {
      if (contacts[static_cast<std::size_t>(k)][leg]) {
        uk.segment<3>(static_cast<Eigen::Index>(3 * leg)) = u.segment<3>(cursor);
        cursor += 3;
      }
    }
    x = a * x + bs[static_cast<std::size_t>(k)] * cfg.dt_mpc * uk + cont.g_aff * cfg.dt_mpc;
    const Vec12 e = x - ref[static_cast<std::size_t>(k)].to_vector();
    cost += e.dot(cfg.state_weights.asDiagonal() * e) + cfg.force_weight * uk.squaredNorm();
  }
  return cost;
}

}  // namespace

TEST(Mpc, ContinuousDynamicsStructure) {
  const robot::RobotParams p;
  CentroidalState s;
  const auto cont = mpc::build_continuous_dynamics(s, standing_feet(p), p);
  EXPECT_TRUE((cont.a.block<3, 3>(0, 6).isIdentity(0.0)));
  EXPECT_TRUE((cont.a.block<3, 3>(3, 9).isIdentity(0.0)));
  EXPECT_EQ((cont.a.array() != 0.0).count(), 6);
  for (std::size_t leg = 0; leg < kNumLegs; ++leg) {
    const auto col = static_cast<Eigen::Index>(3 * leg);
    EXPECT_TRUE((cont.b.block<3, 3>(9, col).isApprox(Mat3::Identity() / 15.0, 1e-15)));
    EXPECT_NEAR(cont.b(9, col), 1.0 / 15.0, 1e-15);
    EXPECT_TRUE((cont.b.block<3, 3>(0, col).isZero(0.0)));
  }
  Vec12 g = Vec12::Zero();
  g(11) = -9.8;
  EXPECT_EQ(cont.g_aff, g);
}

TEST(Mpc, PerLegLeverArms) {
  const robot::RobotParams p;
  CentroidalState s;
  s.euler_zyx = Vec3(0.1, -0.05, 0.7);
  const auto feet = standing_feet(p);
  const auto cont = mpc::build_continuous_dynamics(s, feet, p);
  const Mat3 rot = mpc::rotation_from_euler(s.euler_zyx);
  const Mat3 iw_inv = (rot * p.inertia_base * rot.transpose()).inverse();
  for (std::size_t leg = 0; leg < kNumLegs; ++leg) {
    const Vec3 f(3.0, -1.0, 40.0);
    const Vec3 expected = iw_inv * feet[leg].cross(f);
    EXPECT_LT((cont.b.block<3, 3>(6, static_cast<Eigen::Index>(3 * leg)) * f - expected).norm(), 1e-12);
  }
}

TEST(Mpc, YawMap) {
  const robot::RobotParams p;
  CentroidalState s;
  s.euler_zyx.z() = 0.3;
  const auto cont = mpc::build_continuous_dynamics(s, standing_feet(p), p);
  // Theta_dot = Rz(yaw)' omega under the small roll/pitch assumption.
  const Mat3 rz = Eigen::AngleAxisd(0.3, Vec3::UnitZ()).toRotationMatrix();
  EXPECT_TRUE((cont.a.block<3, 3>(0, 6).isApprox(rz.transpose(), 1e-15)));
}

TEST(Mpc, SkewIdentity) {
  const Vec3 r(0.2, -0.1, -0.26);
  const Mat3 k = mpc::skew(r);
  EXPECT_TRUE((k + k.transpose()).isZero(0.0));
  EXPECT_LT((k * r).norm(), 1e-17);
}

TEST(Mpc, SingularInertia) {
  robot::RobotParams p;
  p.inertia_base = Vec3(1e-13, 1.0, 1.0).asDiagonal();
  EXPECT_THROW(mpc::build_continuous_dynamics(CentroidalState{}, standing_feet(p), p), SingularInertia);
}

TEST(Mpc, Discretize) {
  const robot::RobotParams p;
  CentroidalState s;
  s.position = Vec3(0.1, 0.2, 0.3);
  s.linear_velocity = Vec3(1.0, -0.5, 0.2);
  const auto cont = mpc::build_continuous_dynamics(s, standing_feet(p), p);
  const double dt = 0.025;
  const auto d = mpc::discretize(cont, dt);
  const Vec12 next = d.a * s.to_vector() + d.g_aff;
  const auto ns = CentroidalState::from_vector(next);
  EXPECT_LT((ns.position - (s.position + dt * s.linear_velocity)).norm(), 1e-15);
  EXPECT_NEAR(ns.linear_velocity.z(), s.linear_velocity.z() - 9.8 * dt, 1e-15);
  const auto tiny = mpc::discretize(cont, 1e-12);
  EXPECT_TRUE(tiny.a.isIdentity(1e-11));
  EXPECT_TRUE(tiny.b.isZero(1e-11));
}

TEST(Mpc, Reference) {
  MpcConfig cfg;
  CentroidalState s;
  s.position = Vec3(1.0, 2.0, 0.2);
  s.euler_zyx = Vec3(0.1, 0.2, 0.3);
  s.angular_velocity = Vec3(1, 1, 1);
  const auto ref = mpc::build_reference(s, Vec3(1, 0, 0), cfg, 0.26);
  ASSERT_EQ(ref.size(), 10u);
  for (int k = 0; k < 10; ++k) {
    const auto& r = ref[static_cast<std::size_t>(k)];
    EXPECT_NEAR(r.position.x(), 1.0 + 0.025 * (k + 1), 1e-12);
    EXPECT_EQ(r.position.y(), 2.0);
    EXPECT_EQ(r.position.z(), 0.26);
    EXPECT_EQ(r.euler_zyx, Vec3::Zero());
    EXPECT_EQ(r.angular_velocity, Vec3::Zero());
    EXPECT_EQ(r.linear_velocity, Vec3(1, 0, 0));
  }
  const auto hold = mpc::build_reference(s, Vec3::Zero(), cfg, 0.26);
  for (const auto& r : hold) EXPECT_EQ(r.position, Vec3(1.0, 2.0, 0.26));
}

TEST(Mpc, PredictContacts) {
  MpcConfig cfg;
  const gait::GaitParams trot{2.0, 0.5, {kPi, kPi, 0.0}};
  const auto c = mpc::predict_contacts({0.0}, trot, cfg);
  ASSERT_EQ(c.size(), 10u);
  for (int k = 0; k < 10; ++k) {
    const auto direct = gait::contact_schedule(gait::advance_phase({0.0}, 2.0, k * 0.025), trot);
    EXPECT_EQ(c[static_cast<std::size_t>(k)], direct);
  }
}

TEST(Mpc, CondensedObjectiveMatchesRollout) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(0.0, 20.0);
  const robot::RobotParams p;
  for (int trial = 0; trial < 40; ++trial) {
    const int horizon = trial % 2 == 0 ? 2 : 10;
    const auto inst = oracle::random_mpc_instance(rng, horizon);
    const auto cont = mpc::build_continuous_dynamics(inst.state, inst.feet, p);
    for (bool per_step : {false, true}) {
      const std::vector<Mat12> bs =
          per_step ? mpc::input_matrices_along_reference(inst.state, inst.feet, inst.reference, p)
                   : std::vector<Mat12>(static_cast<std::size_t>(horizon), cont.b);
      const auto cqp = mpc::condense(cont, bs, inst.state, inst.contacts, inst.reference, inst.config);
      const auto& prob = cqp.problem;
      const double j0 = rollout_cost(cont, bs, inst.state, inst.contacts, inst.reference, inst.config,
                                     Eigen::VectorXd::Zero(prob.num_vars()));
      for (int k = 0; k < 3; ++k) {
        Eigen::VectorXd u(prob.num_vars());
        for (auto& v : u) v = n(rng);
        const double j = rollout_cost(cont, bs, inst.state, inst.contacts, inst.reference, inst.config, u);
        EXPECT_NEAR(prob.objective(u), 0.5 * (j - j0), 1e-9 * std::max(1.0, std::abs(j - j0)));
      }
    }
  }
}

TEST(Mpc, CondensedOptimumMatchesOracle) {
  std::mt19937_64 rng(23);
  const robot::RobotParams p;
  qp::QpSolver solver;
  for (int trial = 0; trial < 10; ++trial) {
    auto inst = oracle::random_mpc_instance(rng, 2);
    const auto cont = mpc::build_continuous_dynamics(inst.state, inst.feet, p);
    const auto cqp = mpc::condense(cont, inst.state, inst.contacts, inst.reference, inst.config);
    if (cqp.problem.num_vars() == 0) continue;
    const auto sol = solver.solve(cqp.problem);
    ASSERT_EQ(sol.status, qp::QpStatus::Optimal);
    const auto& cfg = inst.config;
    const Eigen::VectorXd ref = oracle::projected_gradient(
        cqp.problem.hessian, cqp.problem.linear, oracle::friction_blocks(cfg.friction_mu, cfg.fz_min, cfg.fz_max),
        Eigen::VectorXd::Constant(cqp.problem.num_vars(), 10.0), 2000000, 1e-12);
    const double f_ref = cqp.problem.objective(ref);
    EXPECT_NEAR(cqp.problem.objective(sol.u), f_ref, 1e-6 * std::max(1.0, std::abs(f_ref)));
  }
}

TEST(Mpc, StandingSplitsWeightEvenly) {
  const robot::RobotParams p;
  MpcConfig cfg;
  mpc::StanceController ctrl(p, cfg);
  const CentroidalState s = standing_state(p);
  const auto ref = mpc::build_reference(s, Vec3::Zero(), cfg, p.standing_height);
  const std::vector<gait::ContactSchedule> contacts(10, gait::ContactSchedule{true, true, true, true});
  const auto res = ctrl.solve(s, standing_feet(p), contacts, ref);
  ASSERT_EQ(res.status, qp::QpStatus::Optimal);
  double fz = 0.0;
  for (const auto& f : res.command.forces) {
    fz += f.z();
    EXPECT_NEAR(f.z(), 147.0 / 4.0, 0.5);
    EXPECT_NEAR(f.x(), 0.0, 1e-3);
    EXPECT_NEAR(f.y(), 0.0, 1e-3);
  }
  EXPECT_NEAR(fz, 147.0, 0.5);
  EXPECT_LE(res.kkt_residual, 1e-6);

  // Applying the optimized sequence to the model keeps the height over one horizon.
  const auto cont = mpc::build_continuous_dynamics(s, standing_feet(p), p);
  const auto cqp = mpc::condense(cont, s, contacts, ref, cfg);
  const auto sol = qp::QpSolver().solve(cqp.problem);
  const auto d = mpc::discretize(cont, cfg.dt_mpc);
  Vec12 x = s.to_vector();
  for (int k = 0; k < cfg.horizon_steps; ++k) {
    x = d.a * x + d.b * sol.u.segment<12>(12 * k) + d.g_aff;
    EXPECT_NEAR(x(5), p.standing_height, 1e-3);
  }
}

TEST(Mpc, AllSwingGivesZeroForces) {
  const robot::RobotParams p;
  mpc::StanceController ctrl(p, MpcConfig{});
  const CentroidalState s = standing_state(p);
  const auto ref = mpc::build_reference(s, Vec3::Zero(), MpcConfig{}, p.standing_height);
  const std::vector<gait::ContactSchedule> contacts(10, gait::ContactSchedule{false, false, false, false});
  const auto res = ctrl.solve(s, standing_feet(p), contacts, ref);
  EXPECT_EQ(res.num_vars, 0);
  for (const auto& f : res.command.forces) EXPECT_EQ(f, Vec3::Zero());
}

TEST(Mpc, FrictionConeAndBoxHold) {
  std::mt19937_64 rng(29);
  const robot::RobotParams p;
  for (int trial = 0; trial < 30; ++trial) {
    auto inst = oracle::random_mpc_instance(rng, 10);
    inst.config.friction_mu = 0.4;
    mpc::StanceController ctrl(p, inst.config);
    inst.contacts[0] = {true, (trial % 2) == 0, true, (trial % 3) == 0};
    const auto res = ctrl.solve(inst.state, inst.feet, inst.contacts, inst.reference);
    if (res.status == qp::QpStatus::Infeasible) continue;
    for (std::size_t leg = 0; leg < kNumLegs; ++leg) {
      const Vec3& f = res.command.forces[leg];
      if (!inst.contacts[0][leg]) {
        EXPECT_EQ(f, Vec3::Zero());
        continue;
      }
      EXPECT_LE(std::abs(f.x()), 0.4 * f.z() + 1e-6);
      EXPECT_LE(std::abs(f.y()), 0.4 * f.z() + 1e-6);
      EXPECT_GE(f.z(), inst.config.fz_min - 1e-6);
      EXPECT_LE(f.z(), inst.config.fz_max + 1e-6);
    }
  }
}

TEST(Mpc, TorquesFromForces) {
  const robot::RobotParams p;
  const gait::ContactSchedule all{true, true, true, true};
  PerLeg<Vec3> q = {Vec3(0.05, 0.6, -1.3), Vec3(-0.05, 0.7, -1.4), Vec3(0.0, 0.9, -1.6), Vec3(0.1, 0.5, -1.2)};
  EXPECT_TRUE(mpc::forces_to_torques(p, mpc::GrfCommand{}, q, Mat3::Identity(), all).isZero(0.0));

  // Virtual work: tau . dq = (-f_base) . dp.
  mpc::GrfCommand cmd;
  cmd.forces = {Vec3(5, -2, 40), Vec3(-3, 1, 35), Vec3(2, 2, 30), Vec3(0, -4, 45)};
  const Mat3 rot = mpc::rotation_from_euler(Vec3(0.05, -0.1, 0.4));
  const Vec12 tau = mpc::forces_to_torques(p, cmd, q, rot, all);
  const double h = 1e-6;
  for (std::size_t leg = 0; leg < kNumLegs; ++leg) {
    const Vec3 push = -(rot.transpose() * cmd.forces[leg]);
    for (int j = 0; j < 3; ++j) {
      Vec3 dq = Vec3::Zero();
      dq[j] = h;
      const Vec3 dp = robot::forward_kinematics(p, leg, q[leg] + dq) - robot::forward_kinematics(p, leg, q[leg] - dq);
      EXPECT_NEAR(tau[static_cast<Eigen::Index>(3 * leg) + j], push.dot(dp) / (2 * h), 1e-6);
    }
  }

  // Swing legs get nothing.
  const gait::ContactSchedule front{true, true, false, false};
  const Vec12 partial = mpc::forces_to_torques(p, cmd, q, rot, front);
  EXPECT_TRUE(partial.tail<6>().isZero(0.0));

  // Clipping.
  mpc::GrfCommand huge;
  huge.forces[0] = Vec3(0, 0, 2000);
  int clips = 0;
  const Vec12 clipped = mpc::forces_to_torques(p, huge, q, Mat3::Identity(), all, &clips);
  EXPECT_GT(clips, 0);
  EXPECT_LE(clipped.cwiseAbs().maxCoeff(), p.torque_limit_joint);
}

TEST(Mpc, ConfigValidation) {
  MpcConfig c;
  EXPECT_NO_THROW(c.validate());
  c.horizon_steps = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = MpcConfig{};
  c.fz_min = 130.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = MpcConfig{};
  c.friction_mu = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
}
