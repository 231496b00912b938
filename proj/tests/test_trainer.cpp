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

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "gaitforge/errors.hpp"
#include "gaitforge/trainer.hpp"

using namespace gaitforge;

namespace {

double sphere(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double rosenbrock(std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    s += 100.0 * std::pow(x[i + 1] - x[i] * x[i], 2) + std::pow(1.0 - x[i], 2);
  }
  return s;
}

train::Objective minimize(double (*f)(std::span<const double>)) {
  return [f](std::span<const double> x, std::uint64_t) { return train::Evaluation{-f(x), 0.0, 0.0, 1}; };
}

// Seed-dependent and cheap: catches workers that mix up candidates or seeds.
train::Evaluation noisy(std::span<const double> x, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  return {-sphere(x) + n(rng), 0.0, 0.0, 1};
}

train::TaskConfig short_task(int steps) {
  train::TaskConfig task;
  task.env.episode_steps = steps;
  return task;
}

}  // namespace

TEST(Trainer, AlgorithmNames) {
  EXPECT_EQ(train::algorithm_from_string(train::to_string(train::Algorithm::CmaEs)), train::Algorithm::CmaEs);
  EXPECT_EQ(train::algorithm_from_string(train::to_string(train::Algorithm::Ars)), train::Algorithm::Ars);
  EXPECT_THROW(train::algorithm_from_string("ppo"), ConfigError);
}

TEST(Trainer, ConfigValidation) {
  train::EsConfig c;
  EXPECT_NO_THROW(c.validate());
  c.population = 1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.init_std = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.workers = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(CmaEs, SphereTen) {
  train::EsConfig c;
  c.population = 10;
  c.init_std = 0.3;
  c.iterations = 100000;
  c.max_evaluations = 5000;
  c.target_fitness = -1e-9;
  c.workers = 1;
  const auto r = train::cma_es_train(c, Eigen::VectorXd::Constant(10, 0.3), minimize(sphere));
  EXPECT_LE(r.evaluations, 5000);
  EXPECT_LT(-r.best_fitness, 1e-8);
}

TEST(CmaEs, SphereTenDiagonal) {
  train::EsConfig c;
  c.population = 10;
  c.init_std = 0.3;
  c.iterations = 100000;
  c.max_evaluations = 5000;
  c.target_fitness = -1e-9;
  c.workers = 1;
  c.diagonal_covariance = true;
  const auto r = train::cma_es_train(c, Eigen::VectorXd::Constant(10, 0.3), minimize(sphere));
  EXPECT_LT(-r.best_fitness, 1e-8);
}

TEST(CmaEs, RosenbrockFive) {
  train::EsConfig c;
  c.population = 8;
  c.init_std = 0.5;
  c.iterations = 100000;
  c.max_evaluations = 30000;
  c.target_fitness = -1e-7;
  c.workers = 1;
  const auto r = train::cma_es_train(c, Eigen::VectorXd::Zero(5), minimize(rosenbrock));
  EXPECT_LE(r.evaluations, 30000);
  EXPECT_LT(-r.best_fitness, 1e-6);
}

TEST(CmaEs, StandardWeights) {
  train::CmaEs es(Eigen::VectorXd::Zero(6), 1.0, 12, false, 0);
  EXPECT_EQ(es.mu(), 6);
  EXPECT_NEAR(es.weights().sum(), 1.0, 1e-12);
  for (int i = 1; i < es.mu(); ++i) EXPECT_GT(es.weights()[i - 1], es.weights()[i]);
  const double mu_eff = 1.0 / es.weights().squaredNorm();
  EXPECT_NEAR(es.mu_eff(), mu_eff, 1e-12);
}

TEST(CmaEs, InvariantsHoldEveryGeneration) {
  for (bool diagonal : {false, true}) {
    train::CmaEs es(Eigen::VectorXd::Zero(5), 0.5, 8, diagonal, 7);
    for (int g = 0; g < 300; ++g) {
      const auto cand = es.ask();
      std::vector<double> fit(cand.size());
      for (std::size_t i = 0; i < cand.size(); ++i) {
        fit[i] = -rosenbrock(std::span<const double>(cand[i].data(), static_cast<std::size_t>(cand[i].size())));
      }
      es.tell(cand, fit);
      ASSERT_NO_THROW(es.check_invariants());
      const Eigen::MatrixXd cov = es.covariance();
      ASSERT_LT((cov - cov.transpose()).norm(), 1e-12);
      ASSERT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov).eigenvalues().minCoeff(), 0.0);
      ASSERT_TRUE(std::isfinite(es.sigma()) && es.sigma() > 0.0);
    }
  }
}

TEST(CmaEs, TellRejectsWrongSizes) {
  train::CmaEs es(Eigen::VectorXd::Zero(3), 0.5, 6, false, 0);
  const auto cand = es.ask();
  EXPECT_THROW(es.tell(cand, std::vector<double>(5, 0.0)), DimensionMismatch);
}

TEST(Ars, UpdateArithmetic) {
  const Eigen::VectorXd delta = Eigen::VectorXd::LinSpaced(4, -1.0, 2.0);
  const std::vector<double> plus = {2.0}, minus = {1.0};
  const Eigen::VectorXd theta = train::ars_update(Eigen::VectorXd::Zero(4), {delta}, plus, minus, 0.03, 0.02);
  EXPECT_LT((theta - delta / 3.0).norm(), 1e-12);
  EXPECT_NEAR(theta[3] / delta[3], 0.3333, 1e-4);

  const Eigen::VectorXd start = Eigen::VectorXd::Constant(4, 0.7);
  const std::vector<double> same = {1.5};
  EXPECT_EQ(train::ars_update(start, {delta}, same, same, 0.03, 0.02), start);
  EXPECT_THROW(train::ars_update(start, {delta, delta}, same, same, 0.03, 0.02), DimensionMismatch);
}

TEST(Ars, AntitheticPairs) {
  train::Ars ars(Eigen::VectorXd::Constant(3, 1.0), 0.1, 0.02, 4, 9);
  const auto cand = ars.ask();
  ASSERT_EQ(cand.size(), 8u);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_LT((cand[2 * k] + cand[2 * k + 1] - 2.0 * ars.mean()).norm(), 1e-15);
  }
  ars.tell(std::vector<double>(8, 1.0));
  EXPECT_EQ(ars.mean(), Eigen::VectorXd::Constant(3, 1.0));
}

TEST(Ars, SphereTen) {
  train::EsConfig c;
  c.algorithm = train::Algorithm::Ars;
  c.population = 8;
  c.init_std = 0.002;
  c.ars_step = 25.0;
  c.iterations = 100000;
  c.max_evaluations = 20000;
  c.workers = 1;
  const auto r = train::ars_train(c, Eigen::VectorXd::Constant(10, 0.3), minimize(sphere));
  EXPECT_LE(r.evaluations, 20000);
  const Eigen::VectorXd& m = r.final_mean;
  EXPECT_LT(sphere(std::span<const double>(m.data(), static_cast<std::size_t>(m.size()))), 1e-4);
  EXPECT_LT(-r.best_fitness, 1e-4);
}

TEST(Trainer, ParallelConsistency) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  std::vector<Eigen::VectorXd> cand(13, Eigen::VectorXd(5));
  for (auto& c : cand) {
    for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = n(rng);
  }
  const auto serial = train::evaluate_population(noisy, cand, 42, 1);
  for (int w : {2, 3, 8, 20}) {
    const auto par = train::evaluate_population(noisy, cand, 42, w);
    ASSERT_EQ(par.size(), serial.size());
    for (std::size_t i = 0; i < par.size(); ++i) EXPECT_EQ(par[i].fitness, serial[i].fitness) << w;
  }
}

TEST(Trainer, ParallelConsistencyOnGaitTask) {
  const auto task = short_task(6);
  const auto objective = train::make_gait_objective(task);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 0.03);
  std::vector<Eigen::VectorXd> cand(4, Eigen::VectorXd(task.arch.num_params()));
  for (auto& c : cand) {
    for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = n(rng);
  }
  const auto a = train::evaluate_population(objective, cand, 3, 1);
  const auto b = train::evaluate_population(objective, cand, 3, 3);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].fitness, b[i].fitness);
    EXPECT_EQ(a[i].env_steps, b[i].env_steps);
  }
}

TEST(Trainer, WorkerExceptionsPropagate) {
  const train::Objective bad = [](std::span<const double>, std::uint64_t) -> train::Evaluation {
    throw NumericalBlowup("boom");
  };
  std::vector<Eigen::VectorXd> cand(4, Eigen::VectorXd::Zero(2));
  EXPECT_THROW(train::evaluate_population(bad, cand, 0, 2), NumericalBlowup);
}

TEST(Trainer, ReproducibleAndMonotone) {
  for (auto algo : {train::Algorithm::CmaEs, train::Algorithm::Ars}) {
    train::EsConfig c;
    c.algorithm = algo;
    c.population = 6;
    c.init_std = 0.5;
    c.iterations = 40;
    c.workers = 3;
    c.seed = 11;
    const auto a = train::train(c, Eigen::VectorXd::Constant(4, 1.0), noisy);
    const auto b = train::train(c, Eigen::VectorXd::Constant(4, 1.0), noisy);
    ASSERT_EQ(a.records.size(), 40u);
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      EXPECT_EQ(a.records[i].iteration, static_cast<std::int64_t>(i));
      EXPECT_EQ(a.records[i].best_fitness, b.records[i].best_fitness);
      EXPECT_EQ(a.records[i].mean_fitness, b.records[i].mean_fitness);
      EXPECT_EQ(a.records[i].sigma, b.records[i].sigma);
      if (i > 0) EXPECT_GE(a.records[i].best_ever, a.records[i - 1].best_ever);
    }
    EXPECT_EQ(a.best_params, b.best_params);
    EXPECT_EQ(a.best_fitness, a.records.back().best_ever);
  }
}

TEST(Trainer, CallbackSeesEveryIteration) {
  train::EsConfig c;
  c.population = 4;
  c.iterations = 5;
  c.workers = 1;
  int calls = 0;
  train::cma_es_train(c, Eigen::VectorXd::Zero(3), minimize(sphere),
                      [&](const train::IterationRecord& rec, const train::TrainResult& res) {
                        EXPECT_EQ(rec.iteration, calls);
                        EXPECT_EQ(res.records.size(), static_cast<std::size_t>(calls + 1));
                        ++calls;
                      });
  EXPECT_EQ(calls, 5);
}

TEST(Trainer, ResumeContinuesIterationCounter) {
  train::EsConfig c;
  c.population = 6;
  c.init_std = 0.5;
  c.iterations = 4;
  c.workers = 1;
  const auto first = train::cma_es_train(c, Eigen::VectorXd::Constant(4, 1.0), minimize(sphere));
  train::ResumeState resume;
  resume.mean = first.final_mean;
  resume.sigma = first.final_sigma;
  resume.iteration = first.iterations;
  resume.best_params = first.best_params;
  resume.best_fitness = first.best_fitness;
  resume.env_steps = first.env_steps;
  resume.evaluations = first.evaluations;
  const auto second = train::cma_es_train(c, Eigen::VectorXd::Constant(4, 1.0), minimize(sphere), {}, &resume);
  ASSERT_EQ(second.records.size(), 4u);
  EXPECT_EQ(second.records.front().iteration, 4);
  EXPECT_EQ(second.records.back().iteration, 7);
  EXPECT_EQ(second.evaluations, first.evaluations + 4 * 6);
  EXPECT_GE(second.best_fitness, first.best_fitness);
}

TEST(Trainer, EnvStepBudgetStopsTraining) {
  train::EsConfig c;
  c.population = 4;
  c.iterations = 1000;
  c.workers = 1;
  c.max_env_steps = 10;
  const train::Objective three_steps = [](std::span<const double> x, std::uint64_t) {
    return train::Evaluation{-sphere(x), 0.0, 0.0, 3};
  };
  const auto r = train::cma_es_train(c, Eigen::VectorXd::Zero(2), three_steps);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_EQ(r.env_steps, 12);
}

TEST(Rollout, DimensionMismatch) {
  const auto task = short_task(2);
  const std::vector<double> wrong(7, 0.0);
  EXPECT_THROW(train::rollout_return(task, wrong, 0), DimensionMismatch);
}

TEST(Rollout, DeterministicPerSeed) {
  const auto task = short_task(20);
  std::vector<double> params(static_cast<std::size_t>(task.arch.num_params()));
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 0.03);
  for (auto& p : params) p = n(rng);
  const auto a = train::rollout_return(task, params, 8);
  const auto b = train::rollout_return(task, params, 8);
  EXPECT_EQ(a.episode_return, b.episode_return);
  EXPECT_EQ(a.cot, b.cot);
  EXPECT_EQ(a.speed_error, b.speed_error);
  EXPECT_EQ(a.steps, b.steps);
}

TEST(Rollout, SlowTrotShimCompletesCappedRamp) {
  auto task = short_task(400);
  task.env.v_max = 1.0;
  const gait::GaitParams trot = gait::find_baseline("Slow Trot").params;
  std::vector<train::StepRow> rows;
  const auto stats = train::run_episode(task, [&](const std::array<double, 2>&) { return trot; }, 0, &rows);
  EXPECT_FALSE(stats.fell) << sim::to_string(stats.failure);
  EXPECT_EQ(stats.steps, 400);
  EXPECT_EQ(rows.size(), 400u);
  EXPECT_TRUE(std::isfinite(stats.episode_return));
  EXPECT_GT(stats.cot, 0.0);
  EXPECT_NEAR(stats.sim_time_s, 20.0, 1e-9);
  double sum = 0.0;
  for (const auto& r : rows) sum += r.reward;
  EXPECT_NEAR(sum, stats.episode_return, 1e-9 * std::abs(sum));
}

TEST(Rollout, SpeedErrorMatchesRewardTerm) {
  auto task = short_task(30);
  const gait::GaitParams trot = gait::find_baseline("Slow Trot").params;
  std::vector<train::StepRow> rows;
  const auto stats = train::run_episode(task, [&](const std::array<double, 2>&) { return trot; }, 1, &rows);
  double expect = 0.0;
  for (const auto& r : rows) {
    const double d = (r.desired_speed - r.speed) / std::max(r.desired_speed, task.env.reward.v_eps);
    expect += d * d;
  }
  EXPECT_NEAR(stats.speed_error, expect / static_cast<double>(rows.size()), 1e-12);
}

TEST(Trainer, RecordsCsvHeader) {
  std::ostringstream out;
  train::IterationRecord rec;
  rec.iteration = 3;
  train::write_records_csv(out, {rec});
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')),
            "iteration,best_return,mean_return,best_ever,sigma,best_cot,best_speed_error,env_steps,evaluations");
}
