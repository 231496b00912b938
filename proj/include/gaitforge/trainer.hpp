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

#ifndef GAITFORGE_TRAINER_HPP_
#define GAITFORGE_TRAINER_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gaitforge/policy.hpp"
#include "gaitforge/sim_env.hpp"

namespace gaitforge::train {

enum class Algorithm { CmaEs, Ars };
std::string to_string(Algorithm algorithm);
Algorithm algorithm_from_string(const std::string& name);

struct EsConfig {
  Algorithm algorithm = Algorithm::CmaEs;
  /// CMA-ES: lambda. ARS: number of antithetic perturbation pairs.
  int population = 32;
  double init_std = 0.03;
  double ars_step = 0.02;
  int iterations = 100;
  int workers = 8;
  std::uint64_t seed = 0;
  /// Separable (diagonal) covariance for constrained machines.
  bool diagonal_covariance = false;
  /// Stop once this many env steps were spent (0 = no budget); the last iteration may overshoot.
  std::int64_t max_env_steps = 0;
  /// Stop once this many objective evaluations were spent (0 = no limit).
  std::int64_t max_evaluations = 0;
  /// Stop as soon as the best-ever fitness reaches this value.
  std::optional<double> target_fitness;

  void validate() const;
};

/// Everything needed to build an environment and interpret a policy vector.
struct TaskConfig {
  robot::RobotParams robot;
  mpc::MpcConfig mpc;
  swing::SwingConfig swing;
  sim::EnvConfig env;
  qp::QpConfig qp;
  gait::PolicyArchitecture arch;
  gait::ActionBounds bounds;
};

/// Per-step record of an episode.
struct StepRow {
  int step;
  double time_s;
  double desired_speed;
  double speed;
  double power_w;
  double reward;
  gait::GaitParams gait;
};

struct EpisodeStats {
  double episode_return = 0.0;
  /// Total motor energy / (m g distance); +inf when the robot did not advance.
  double cot = 0.0;
  /// Mean over steps of ((vbar - v) / max(vbar, v_eps))^2, the reward's speed term.
  double speed_error = 0.0;
  int steps = 0;
  bool fell = false;
  sim::Failure failure = sim::Failure::None;
  double distance_m = 0.0;
  double energy_j = 0.0;
  double sim_time_s = 0.0;
};

using GaitFn = std::function<gait::GaitParams(const std::array<double, 2>& observation)>;

/// Runs one episode (up to env.episode_steps) with `policy` choosing the gait each step.
EpisodeStats run_episode(const TaskConfig& task, const GaitFn& policy, std::uint64_t seed,
                         std::vector<StepRow>* steps = nullptr, std::vector<sim::TraceRow>* trace = nullptr);

/// Episode with the neural gait policy given by `params`.
EpisodeStats rollout_return(const TaskConfig& task, std::span<const double> params, std::uint64_t seed);

/// Result of one objective evaluation; the optimizers maximize `fitness`.
struct Evaluation {
  double fitness = 0.0;
  double cot = 0.0;
  double speed_error = 0.0;
  std::int64_t env_steps = 0;
};

using Objective = std::function<Evaluation(std::span<const double> x, std::uint64_t seed)>;

/// Fitness = episode return of the gait policy.
Objective make_gait_objective(const TaskConfig& task);

/// Evaluates every candidate with the same seed on `workers` threads; results
/// are returned in candidate order and do not depend on the worker count.
std::vector<Evaluation> evaluate_population(const Objective& objective, const std::vector<Eigen::VectorXd>& candidates,
                                            std::uint64_t seed, int workers);

/// Episode seed used for every candidate of one iteration.
std::uint64_t iteration_seed(std::uint64_t master_seed, std::int64_t iteration);

/// (mu/mu_w, lambda)-CMA-ES maximizing fitness: weighted recombination,
/// cumulative step-size adaptation, rank-one and rank-mu covariance updates,
/// eigendecomposition refreshed lazily.
class CmaEs {
 public:
  CmaEs(Eigen::VectorXd mean, double sigma, int lambda, bool diagonal, std::uint64_t seed);

  std::vector<Eigen::VectorXd> ask();
  void tell(const std::vector<Eigen::VectorXd>& candidates, const std::vector<double>& fitness);

  const Eigen::VectorXd& mean() const { return mean_; }
  double sigma() const { return sigma_; }
  int lambda() const { return lambda_; }
  int mu() const { return mu_; }
  double mu_eff() const { return mu_eff_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  std::int64_t generation() const { return generation_; }
  /// Full covariance (diagonal mode returns the diagonal as a matrix).
  Eigen::MatrixXd covariance() const;
  /// Throws NumericalBlowup unless sigma is finite and positive and C is symmetric positive definite.
  void check_invariants() const;

 private:
  void update_eigensystem();

  Eigen::Index n_;
  int lambda_;
  int mu_;
  bool diagonal_;
  Eigen::VectorXd weights_;
  double mu_eff_;
  double c_sigma_, d_sigma_, c_c_, c_1_, c_mu_, chi_n_;
  Eigen::VectorXd mean_;
  double sigma_;
  Eigen::VectorXd p_sigma_, p_c_;
  Eigen::MatrixXd cov_;    // full mode
  Eigen::VectorXd cov_diag_;  // diagonal mode
  Eigen::MatrixXd basis_;  // B
  Eigen::VectorXd scales_;  // D (square roots of eigenvalues)
  std::int64_t generation_ = 0;
  std::int64_t eigen_generation_ = 0;
  std::int64_t eigen_gap_ = 1;
  std::mt19937_64 rng_;
};

/// ARS V1 update: theta + step / (2 N sigma) * sum_k (r+_k - r-_k) delta_k.
Eigen::VectorXd ars_update(const Eigen::VectorXd& theta, const std::vector<Eigen::VectorXd>& deltas,
                           std::span<const double> r_plus, std::span<const double> r_minus, double sigma, double step);

/// Basic random search with antithetic perturbations delta ~ N(0, sigma^2 I).
class Ars {
 public:
  Ars(Eigen::VectorXd theta, double sigma, double step, int pairs, std::uint64_t seed);

  /// Returns [theta + delta_1, theta - delta_1, theta + delta_2, ...].
  std::vector<Eigen::VectorXd> ask();
  void tell(const std::vector<double>& fitness);

  const Eigen::VectorXd& mean() const { return theta_; }
  double sigma() const { return sigma_; }

 private:
  Eigen::VectorXd theta_;
  double sigma_;
  double step_;
  int pairs_;
  std::vector<Eigen::VectorXd> deltas_;
  std::mt19937_64 rng_;
};

struct IterationRecord {
  std::int64_t iteration = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
  double best_ever = 0.0;
  double sigma = 0.0;
  double best_cot = 0.0;
  double best_speed_error = 0.0;
  std::int64_t env_steps = 0;
  std::int64_t evaluations = 0;
};

struct TrainResult {
  Eigen::VectorXd best_params;
  double best_fitness = 0.0;
  Eigen::VectorXd final_mean;
  double final_sigma = 0.0;
  std::int64_t iterations = 0;
  std::int64_t env_steps = 0;
  std::int64_t evaluations = 0;
  std::vector<IterationRecord> records;
};

/// Search state restored from a checkpoint: the optimizer restarts from
/// `mean` with step size `sigma` (covariance reset to identity) and
/// continues the iteration counter.
struct ResumeState {
  Eigen::VectorXd mean;
  double sigma = 0.0;
  std::int64_t iteration = 0;
  Eigen::VectorXd best_params;
  double best_fitness = -std::numeric_limits<double>::infinity();
  std::int64_t env_steps = 0;
  std::int64_t evaluations = 0;
};

/// Called after every iteration with the running result (records up to now).
using IterationCallback = std::function<void(const IterationRecord&, const TrainResult&)>;

TrainResult cma_es_train(const EsConfig& config, const Eigen::VectorXd& initial, const Objective& objective,
                         const IterationCallback& on_iteration = {}, const ResumeState* resume = nullptr);

TrainResult ars_train(const EsConfig& config, const Eigen::VectorXd& initial, const Objective& objective,
                      const IterationCallback& on_iteration = {}, const ResumeState* resume = nullptr);

/// Dispatches on config.algorithm.
TrainResult train(const EsConfig& config, const Eigen::VectorXd& initial, const Objective& objective,
                  const IterationCallback& on_iteration = {}, const ResumeState* resume = nullptr);

/// Writes the records as CSV: iteration,best_return,mean_return,best_ever,sigma,best_cot,best_speed_error,env_steps,evaluations
void write_records_csv(std::ostream& out, const std::vector<IterationRecord>& records);

}  // namespace gaitforge::train

#endif  // GAITFORGE_TRAINER_HPP_
