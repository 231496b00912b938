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

#include "gaitforge/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include <Eigen/Eigenvalues>

#include "gaitforge/csv.hpp"
#include "gaitforge/errors.hpp"

namespace gaitforge::train {

std::string to_string(Algorithm algorithm) { return algorithm == Algorithm::CmaEs ? "cmaes" : "ars"; }

Algorithm algorithm_from_string(const std::string& name) {
  std::string lower;
  for (char ch : name) {
    if (ch != '-' && ch != '_') lower += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  if (lower == "cmaes") return Algorithm::CmaEs;
  if (lower == "ars") return Algorithm::Ars;
  throw ConfigError("unknown algorithm '" + name + "' (expected cmaes or ars)");
}

void EsConfig::validate() const {
  if (population < (algorithm == Algorithm::CmaEs ? 2 : 1)) throw ConfigError("population too small");
  if (!(init_std > 0.0)) throw ConfigError("init_std must be positive");
  if (!(ars_step > 0.0)) throw ConfigError("ars_step must be positive");
  if (iterations < 0) throw ConfigError("iterations must be >= 0");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (max_env_steps < 0 || max_evaluations < 0) throw ConfigError("budgets must be >= 0");
}

EpisodeStats run_episode(const TaskConfig& task, const GaitFn& policy, std::uint64_t seed, std::vector<StepRow>* steps,
                         std::vector<sim::TraceRow>* trace) {
  sim::EnvConfig env_config = task.env;
  env_config.seed = seed;
  sim::QuadrupedEnv env(task.robot, task.mpc, task.swing, env_config, task.qp);
  env.set_trace(trace);
  std::array<double, 2> obs = env.reset(seed);
  EpisodeStats stats;
  double err_sum = 0.0;
  while (!env.done()) {
    const gait::GaitParams params = policy(obs);
    const sim::StepResult r = env.step(params);
    stats.episode_return += r.reward;
    const double rel = (r.desired_speed - r.speed) / std::max(r.desired_speed, task.env.reward.v_eps);
    err_sum += rel * rel;
    if (steps != nullptr) {
      steps->push_back({stats.steps, env.state().time_s, r.desired_speed, r.speed, r.power_w, r.reward, params});
    }
    ++stats.steps;
    obs = r.observation;
  }
  stats.failure = env.failure();
  stats.fell = env.failure() != sim::Failure::None;
  stats.distance_m = env.distance_travelled();
  stats.energy_j = env.state().cumulative_energy_j;
  stats.sim_time_s = env.state().time_s;
  stats.speed_error = stats.steps > 0 ? err_sum / stats.steps : 0.0;
  const double weight = task.robot.mass_kg * task.robot.gravity;
  stats.cot = stats.distance_m > 1e-9 ? stats.energy_j / (weight * stats.distance_m)
                                      : std::numeric_limits<double>::infinity();
  return stats;
}

EpisodeStats rollout_return(const TaskConfig& task, std::span<const double> params, std::uint64_t seed) {
  if (params.size() != task.arch.num_params()) {
    throw DimensionMismatch("policy has " + std::to_string(params.size()) + " parameters, expected " +
                            std::to_string(task.arch.num_params()));
  }
  return run_episode(
      task, [&](const std::array<double, 2>& obs) { return gait::policy_forward(task.arch, params, obs, task.bounds); },
      seed);
}

Objective make_gait_objective(const TaskConfig& task) {
  return [task](std::span<const double> x, std::uint64_t seed) {
    const EpisodeStats s = rollout_return(task, x, seed);
    return Evaluation{s.episode_return, s.cot, s.speed_error, s.steps};
  };
}

std::vector<Evaluation> evaluate_population(const Objective& objective, const std::vector<Eigen::VectorXd>& candidates,
                                            std::uint64_t seed, int workers) {
  const std::size_t n = candidates.size();
  std::vector<Evaluation> out(n);
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
  auto eval = [&](std::size_t i) {
    const auto& x = candidates[i];
    out[i] = objective(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), seed);
  };
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) eval(i);
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += threads) eval(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::uint64_t iteration_seed(std::uint64_t master_seed, std::int64_t iteration) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(iteration), static_cast<std::uint32_t>(iteration >> 32)};
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

// ---------------------------------------------------------------- CMA-ES

CmaEs::CmaEs(Eigen::VectorXd mean, double sigma, int lambda, bool diagonal, std::uint64_t seed)
    : n_(mean.size()), lambda_(lambda), mu_(lambda / 2), diagonal_(diagonal), mean_(std::move(mean)), sigma_(sigma),
      rng_(seed) {
  if (n_ < 1) throw ConfigError("CMA-ES needs at least one dimension");
  if (lambda_ < 2) throw ConfigError("CMA-ES population must be >= 2");
  if (!(sigma_ > 0.0)) throw ConfigError("CMA-ES sigma must be positive");
  const double n = static_cast<double>(n_);
  weights_.resize(mu_);
  for (int i = 0; i < mu_; ++i) weights_[i] = std::log(mu_ + 0.5) - std::log(i + 1.0);
  weights_ /= weights_.sum();
  mu_eff_ = 1.0 / weights_.squaredNorm();

  c_sigma_ = (mu_eff_ + 2.0) / (n + mu_eff_ + 5.0);
  d_sigma_ = 1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff_ - 1.0) / (n + 1.0)) - 1.0) + c_sigma_;
  c_c_ = (4.0 + mu_eff_ / n) / (n + 4.0 + 2.0 * mu_eff_ / n);
  c_1_ = 2.0 / ((n + 1.3) * (n + 1.3) + mu_eff_);
  c_mu_ = std::min(1.0 - c_1_, 2.0 * (mu_eff_ - 2.0 + 1.0 / mu_eff_) / ((n + 2.0) * (n + 2.0) + mu_eff_));
  if (diagonal_) {
    // Separable variant: the diagonal has n free parameters instead of n^2/2.
    const double boost = (n + 2.0) / 3.0;
    c_1_ = std::min(1.0, c_1_ * boost);
    c_mu_ = std::min(1.0 - c_1_, c_mu_ * boost);
  }
  chi_n_ = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

  p_sigma_ = Eigen::VectorXd::Zero(n_);
  p_c_ = Eigen::VectorXd::Zero(n_);
  scales_ = Eigen::VectorXd::Ones(n_);
  if (diagonal_) {
    cov_diag_ = Eigen::VectorXd::Ones(n_);
  } else {
    cov_ = Eigen::MatrixXd::Identity(n_, n_);
    basis_ = Eigen::MatrixXd::Identity(n_, n_);
    eigen_gap_ = std::max<std::int64_t>(1, static_cast<std::int64_t>(1.0 / ((c_1_ + c_mu_) * n * 10.0)));
  }
}

std::vector<Eigen::VectorXd> CmaEs::ask() {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Eigen::VectorXd> out(static_cast<std::size_t>(lambda_));
  Eigen::VectorXd z(n_);
  for (auto& x : out) {
    for (Eigen::Index i = 0; i < n_; ++i) z[i] = normal(rng_);
    if (diagonal_) {
      x = mean_ + sigma_ * scales_.cwiseProduct(z);
    } else {
      x = mean_ + sigma_ * (basis_ * scales_.cwiseProduct(z));
    }
  }
  return out;
}

void CmaEs::tell(const std::vector<Eigen::VectorXd>& candidates, const std::vector<double>& fitness) {
  if (static_cast<int>(candidates.size()) != lambda_ || fitness.size() != candidates.size()) {
    throw DimensionMismatch("CMA-ES tell() needs lambda candidates and fitness values");
  }
  std::vector<int> order(static_cast<std::size_t>(lambda_));
  std::iota(order.begin(), order.end(), 0);
  // Best first; ties keep candidate order so the update is deterministic.
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return fitness[static_cast<std::size_t>(a)] > fitness[static_cast<std::size_t>(b)];
  });

  Eigen::MatrixXd y(n_, mu_);
  for (int i = 0; i < mu_; ++i) y.col(i) = (candidates[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] - mean_) / sigma_;
  const Eigen::VectorXd y_w = y * weights_;
  mean_ += sigma_ * y_w;

  // C^{-1/2} y_w = B D^-1 B' y_w.
  Eigen::VectorXd c_inv_sqrt_y;
  if (diagonal_) {
    c_inv_sqrt_y = y_w.cwiseQuotient(scales_);
  } else {
    c_inv_sqrt_y = basis_ * (basis_.transpose() * y_w).cwiseQuotient(scales_);
  }
  p_sigma_ = (1.0 - c_sigma_) * p_sigma_ + std::sqrt(c_sigma_ * (2.0 - c_sigma_) * mu_eff_) * c_inv_sqrt_y;
  ++generation_;
  const double n = static_cast<double>(n_);
  const double ps_norm = p_sigma_.norm() / std::sqrt(1.0 - std::pow(1.0 - c_sigma_, 2.0 * static_cast<double>(generation_)));
  const bool h_sigma = ps_norm / chi_n_ < 1.4 + 2.0 / (n + 1.0);
  p_c_ = (1.0 - c_c_) * p_c_;
  if (h_sigma) p_c_ += std::sqrt(c_c_ * (2.0 - c_c_) * mu_eff_) * y_w;
  const double lost = h_sigma ? 0.0 : c_1_ * c_c_ * (2.0 - c_c_);

  if (diagonal_) {
    Eigen::VectorXd rank_mu = Eigen::VectorXd::Zero(n_);
    for (int i = 0; i < mu_; ++i) rank_mu += weights_[i] * y.col(i).cwiseAbs2();
    cov_diag_ = (1.0 - c_1_ - c_mu_ + lost) * cov_diag_ + c_1_ * p_c_.cwiseAbs2() + c_mu_ * rank_mu;
    scales_ = cov_diag_.cwiseSqrt();
  } else {
    const Eigen::MatrixXd yw = y * weights_.cwiseSqrt().asDiagonal();
    cov_ *= (1.0 - c_1_ - c_mu_ + lost);
    cov_.selfadjointView<Eigen::Lower>().rankUpdate(p_c_, c_1_);
    cov_.selfadjointView<Eigen::Lower>().rankUpdate(yw, c_mu_);
    cov_.triangularView<Eigen::StrictlyUpper>() = cov_.transpose();
    if (generation_ - eigen_generation_ >= eigen_gap_) update_eigensystem();
  }

  sigma_ *= std::exp((c_sigma_ / d_sigma_) * (p_sigma_.norm() / chi_n_ - 1.0));
  check_invariants();
}

void CmaEs::update_eigensystem() {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov_);
  if (eig.info() != Eigen::Success) throw NumericalBlowup("CMA-ES covariance eigendecomposition failed");
  const Eigen::VectorXd values = eig.eigenvalues();
  if (!(values.minCoeff() > 0.0) || !values.allFinite()) {
    throw NumericalBlowup("CMA-ES covariance lost positive definiteness");
  }
  basis_ = eig.eigenvectors();
  scales_ = values.cwiseSqrt();
  eigen_generation_ = generation_;
}

Eigen::MatrixXd CmaEs::covariance() const {
  if (diagonal_) return cov_diag_.asDiagonal();
  return cov_;
}

void CmaEs::check_invariants() const {
  if (!std::isfinite(sigma_) || !(sigma_ > 0.0)) throw NumericalBlowup("CMA-ES step size left (0, inf)");
  if (!mean_.allFinite()) throw NumericalBlowup("CMA-ES mean is not finite");
  if (diagonal_) {
    if (!cov_diag_.allFinite() || !(cov_diag_.minCoeff() > 0.0)) {
      throw NumericalBlowup("CMA-ES diagonal covariance is not positive");
    }
    return;
  }
  if (!cov_.allFinite()) throw NumericalBlowup("CMA-ES covariance is not finite");
  if (!(cov_.diagonal().minCoeff() > 0.0) || !(scales_.minCoeff() > 0.0)) {
    throw NumericalBlowup("CMA-ES covariance is not positive definite");
  }
}

// ---------------------------------------------------------------- ARS

Eigen::VectorXd ars_update(const Eigen::VectorXd& theta, const std::vector<Eigen::VectorXd>& deltas,
                           std::span<const double> r_plus, std::span<const double> r_minus, double sigma, double step) {
  if (deltas.size() != r_plus.size() || deltas.size() != r_minus.size() || deltas.empty()) {
    throw DimensionMismatch("ARS update needs one reward pair per perturbation");
  }
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(theta.size());
  for (std::size_t k = 0; k < deltas.size(); ++k) sum += (r_plus[k] - r_minus[k]) * deltas[k];
  return theta + step / (2.0 * static_cast<double>(deltas.size()) * sigma) * sum;
}

Ars::Ars(Eigen::VectorXd theta, double sigma, double step, int pairs, std::uint64_t seed)
    : theta_(std::move(theta)), sigma_(sigma), step_(step), pairs_(pairs), rng_(seed) {
  if (pairs_ < 1) throw ConfigError("ARS needs at least one perturbation pair");
  if (!(sigma_ > 0.0) || !(step_ > 0.0)) throw ConfigError("ARS sigma and step must be positive");
}

std::vector<Eigen::VectorXd> Ars::ask() {
  std::normal_distribution<double> normal(0.0, sigma_);
  deltas_.assign(static_cast<std::size_t>(pairs_), Eigen::VectorXd(theta_.size()));
  std::vector<Eigen::VectorXd> out;
  out.reserve(2 * deltas_.size());
  for (auto& d : deltas_) {
    for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = normal(rng_);
    out.push_back(theta_ + d);
    out.push_back(theta_ - d);
  }
  return out;
}

void Ars::tell(const std::vector<double>& fitness) {
  if (fitness.size() != 2 * deltas_.size()) throw DimensionMismatch("ARS tell() needs 2N fitness values");
  std::vector<double> plus(deltas_.size());
  std::vector<double> minus(deltas_.size());
  for (std::size_t k = 0; k < deltas_.size(); ++k) {
    plus[k] = fitness[2 * k];
    minus[k] = fitness[2 * k + 1];
  }
  theta_ = ars_update(theta_, deltas_, plus, minus, sigma_, step_);
  if (!theta_.allFinite()) throw NumericalBlowup("ARS parameters are not finite");
}

// ---------------------------------------------------------------- loop

namespace {

template <typename Optimizer, typename Ask, typename Tell>
TrainResult run_loop(const EsConfig& config, Optimizer& opt, const Objective& objective,
                     const IterationCallback& on_iteration, const ResumeState* resume, Ask ask, Tell tell,
                     int evals_per_iteration, double (*sigma_of)(const Optimizer&)) {
  TrainResult result;
  result.best_fitness = -std::numeric_limits<double>::infinity();
  std::int64_t iteration = 0;
  if (resume != nullptr) {
    iteration = resume->iteration;
    result.best_params = resume->best_params;
    result.best_fitness = resume->best_fitness;
    result.env_steps = resume->env_steps;
    result.evaluations = resume->evaluations;
  }
  const std::int64_t stop_at = iteration + config.iterations;
  while (iteration < stop_at) {
    if (config.target_fitness && result.best_fitness >= *config.target_fitness) break;
    if (config.max_evaluations > 0 && result.evaluations + evals_per_iteration > config.max_evaluations) break;
    if (config.max_env_steps > 0 && result.env_steps >= config.max_env_steps) break;

    std::vector<Eigen::VectorXd> candidates = ask(opt);
    const std::uint64_t seed = iteration_seed(config.seed, iteration);
    const std::vector<Evaluation> evals = evaluate_population(objective, candidates, seed, config.workers);

    IterationRecord rec;
    rec.iteration = iteration;
    std::vector<double> fitness(evals.size());
    std::size_t best = 0;
    double sum = 0.0;
    for (std::size_t i = 0; i < evals.size(); ++i) {
      fitness[i] = evals[i].fitness;
      sum += fitness[i];
      result.env_steps += evals[i].env_steps;
      if (fitness[i] > fitness[best]) best = i;
    }
    result.evaluations += static_cast<std::int64_t>(evals.size());
    if (fitness[best] > result.best_fitness) {
      result.best_fitness = fitness[best];
      result.best_params = candidates[best];
    }
    tell(opt, candidates, fitness);
    ++iteration;

    rec.best_fitness = fitness[best];
    rec.mean_fitness = sum / static_cast<double>(evals.size());
    rec.best_ever = result.best_fitness;
    rec.sigma = sigma_of(opt);
    rec.best_cot = evals[best].cot;
    rec.best_speed_error = evals[best].speed_error;
    rec.env_steps = result.env_steps;
    rec.evaluations = result.evaluations;
    result.records.push_back(rec);
    result.iterations = iteration;
    result.final_mean = opt.mean();
    result.final_sigma = sigma_of(opt);
    if (on_iteration) on_iteration(rec, result);
  }
  result.iterations = iteration;
  result.final_mean = opt.mean();
  result.final_sigma = sigma_of(opt);
  return result;
}

}  // namespace

TrainResult cma_es_train(const EsConfig& config, const Eigen::VectorXd& initial, const Objective& objective,
                         const IterationCallback& on_iteration, const ResumeState* resume) {
  config.validate();
  const Eigen::VectorXd start = resume != nullptr ? resume->mean : initial;
  const double sigma = resume != nullptr && resume->sigma > 0.0 ? resume->sigma : config.init_std;
  const std::uint64_t opt_seed = iteration_seed(config.seed ^ 0x5eedc3a5ULL, resume != nullptr ? resume->iteration : 0);
  CmaEs opt(start, sigma, config.population, config.diagonal_covariance, opt_seed);
  return run_loop<CmaEs>(
      config, opt, objective, on_iteration, resume, [](CmaEs& o) { return o.ask(); },
      [](CmaEs& o, const std::vector<Eigen::VectorXd>& c, const std::vector<double>& f) { o.tell(c, f); },
      config.population,
      [](const CmaEs& o) { return o.sigma(); });
}

TrainResult ars_train(const EsConfig& config, const Eigen::VectorXd& initial, const Objective& objective,
                      const IterationCallback& on_iteration, const ResumeState* resume) {
  config.validate();
  const Eigen::VectorXd start = resume != nullptr ? resume->mean : initial;
  const std::uint64_t opt_seed = iteration_seed(config.seed ^ 0xa55eedULL, resume != nullptr ? resume->iteration : 0);
  Ars opt(start, config.init_std, config.ars_step, config.population, opt_seed);
  return run_loop<Ars>(
      config, opt, objective, on_iteration, resume, [](Ars& o) { return o.ask(); },
      [](Ars& o, const std::vector<Eigen::VectorXd>&, const std::vector<double>& f) { o.tell(f); },
      2 * config.population, [](const Ars& o) { return o.sigma(); });
}

TrainResult train(const EsConfig& config, const Eigen::VectorXd& initial, const Objective& objective,
                  const IterationCallback& on_iteration, const ResumeState* resume) {
  return config.algorithm == Algorithm::CmaEs ? cma_es_train(config, initial, objective, on_iteration, resume)
                                              : ars_train(config, initial, objective, on_iteration, resume);
}

void write_records_csv(std::ostream& out, const std::vector<IterationRecord>& records) {
  out << "iteration,best_return,mean_return,best_ever,sigma,best_cot,best_speed_error,env_steps,evaluations\n";
  for (const auto& r : records) {
    out << csv::join({std::to_string(r.iteration), csv::fmt(r.best_fitness), csv::fmt(r.mean_fitness),
                      csv::fmt(r.best_ever), csv::fmt(r.sigma), csv::fmt(r.best_cot), csv::fmt(r.best_speed_error),
                      std::to_string(r.env_steps), std::to_string(r.evaluations)})
        << '\n';
  }
}

}  // namespace gaitforge::train
