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

#include "gaitforge/experiments.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <thread>

#include "gaitforge/csv.hpp"
#include "gaitforge/errors.hpp"
#include "gaitforge/report.hpp"

namespace gaitforge::exp {
namespace fs = std::filesystem;

namespace {

template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += threads) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string normalize(std::string_view name) {
  std::string out;
  for (char ch : name) {
    if (ch == ' ' || ch == '_' || ch == '-') continue;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  return out;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

double circular_distance(double a, double b) {
  const double d = std::abs(gait::wrap_phase(a - b));
  return std::min(d, kTwoPi - d);
}

struct Template {
  GaitClass cls;
  std::array<double, 3> offsets;
};

const std::array<Template, 5>& templates() {
  static const std::array<Template, 5> t = {{
      {GaitClass::Walk, {kPi, 1.5 * kPi, 0.5 * kPi}},
      {GaitClass::Trot, {kPi, kPi, 0.0}},
      {GaitClass::Pace, {kPi, 0.0, kPi}},
      {GaitClass::Bound, {0.0, kPi, kPi}},
      {GaitClass::Pronk, {0.0, 0.0, 0.0}},
  }};
  return t;
}

std::vector<train::IterationRecord> read_records(const fs::path& path, std::int64_t before) {
  std::vector<train::IterationRecord> out;
  if (!fs::exists(path)) return out;
  const csv::Table t = csv::read_file(path);
  const std::size_t c_it = t.column("iteration"), c_best = t.column("best_return"), c_mean = t.column("mean_return"),
                    c_ever = t.column("best_ever"), c_sigma = t.column("sigma"), c_cot = t.column("best_cot"),
                    c_err = t.column("best_speed_error"), c_steps = t.column("env_steps"),
                    c_evals = t.column("evaluations");
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    train::IterationRecord rec;
    rec.iteration = static_cast<std::int64_t>(t.number(r, c_it));
    if (rec.iteration >= before) continue;
    rec.best_fitness = t.number(r, c_best);
    rec.mean_fitness = t.number(r, c_mean);
    rec.best_ever = t.number(r, c_ever);
    rec.sigma = t.number(r, c_sigma);
    rec.best_cot = t.number(r, c_cot);
    rec.best_speed_error = t.number(r, c_err);
    rec.env_steps = static_cast<std::int64_t>(t.number(r, c_steps));
    rec.evaluations = static_cast<std::int64_t>(t.number(r, c_evals));
    out.push_back(rec);
  }
  return out;
}

}  // namespace

SpeedRun constant_speed_run(const train::TaskConfig& task, const train::GaitFn& policy, const std::string& name,
                            double speed, double hold_s, std::uint64_t seed) {
  if (!(speed > 0.0)) throw ConfigError("constant-speed run needs a positive speed");
  train::TaskConfig t = task;
  t.env.v_max = speed;
  const double dt = t.env.highlevel_dt;
  const double ramp_s = speed / t.env.accel;
  t.env.episode_steps = static_cast<int>(std::ceil((ramp_s + hold_s) / dt - 1e-9));
  const auto window_begin = static_cast<std::size_t>(std::ceil((ramp_s + 0.5 * hold_s) / dt - 1e-9));

  std::vector<train::StepRow> steps;
  const train::EpisodeStats stats = train::run_episode(t, policy, seed, &steps);
  SpeedRun out;
  out.gait = name;
  out.speed = speed;
  out.fell = stats.fell;
  const std::size_t begin = steps.size() > window_begin ? window_begin : 0;
  double power = 0.0, v = 0.0, vbar = 0.0;
  for (std::size_t k = begin; k < steps.size(); ++k) {
    power += steps[k].power_w;
    v += steps[k].speed;
    vbar += steps[k].desired_speed;
  }
  out.speed_error = vbar > 0.0 ? std::abs(v - vbar) / vbar : 1.0;
  if (!out.fell && v > 0.0) out.cot = power / (t.robot.mass_kg * t.robot.gravity * v);
  return out;
}

std::vector<SpeedRun> run_baselines(const train::TaskConfig& task, const std::vector<gait::BaselineGait>& gaits,
                                    const std::vector<double>& speeds, double hold_s, std::uint64_t seed, int workers) {
  std::vector<SpeedRun> out(gaits.size() * speeds.size());
  parallel_for(out.size(), workers, [&](std::size_t i) {
    const auto& g = gaits[i / speeds.size()];
    const gait::GaitParams params = g.params;
    out[i] = constant_speed_run(task, [params](const std::array<double, 2>&) { return params; }, g.name,
                                speeds[i % speeds.size()], hold_s, seed);
  });
  return out;
}

void write_cot_csv(std::ostream& out, const std::vector<SpeedRun>& rows) {
  out << "gait,speed,cot,speed_err,fell\n";
  for (const auto& r : rows) {
    out << csv::join({r.gait, csv::fmt(r.speed), r.cot ? csv::fmt(*r.cot) : std::string(), csv::fmt(r.speed_error),
                      r.fell ? "1" : "0"})
        << '\n';
  }
}

std::string to_string(GaitClass c) {
  switch (c) {
    case GaitClass::Walk: return "walk";
    case GaitClass::Trot: return "trot";
    case GaitClass::Pace: return "pace";
    case GaitClass::Bound: return "bound";
    case GaitClass::Pronk: return "pronk";
    case GaitClass::Other: break;
  }
  return "other";
}

GaitClass classify_gait(const gait::GaitParams& params, double tolerance) {
  const std::array<double, 4> o = {0.0, params.phase_offsets[0], params.phase_offsets[1], params.phase_offsets[2]};
  GaitClass best = GaitClass::Other;
  double best_dist = tolerance;
  for (const auto& t : templates()) {
    const std::array<double, 4> r = {0.0, t.offsets[0], t.offsets[1], t.offsets[2]};
    double worst = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = i + 1; j < 4; ++j) worst = std::max(worst, circular_distance(o[j] - o[i], r[j] - r[i]));
    }
    if (worst <= best_dist) {
      best_dist = worst;
      best = t.cls;
    }
  }
  return best;
}

EvalSummary evaluate_policy(const train::TaskConfig& task, const train::GaitFn& policy, int profile_steps,
                            std::uint64_t seed, int min_dwell_steps) {
  EvalSummary out;
  if (profile_steps <= 0) return out;
  train::TaskConfig t = task;
  t.env.episode_steps = profile_steps;
  out.stats = train::run_episode(t, policy, seed, &out.steps, &out.trace);

  GaitClass current = GaitClass::Other;
  int run = 0;
  double top = 0.0;
  for (const auto& s : out.steps) {
    const GaitClass c = classify_gait(s.gait);
    run = c == current ? run + 1 : 1;
    current = c;
    if (run >= min_dwell_steps && c != GaitClass::Other &&
        std::find(out.regimes.begin(), out.regimes.end(), c) == out.regimes.end()) {
      out.regimes.push_back(c);
    }
    top = std::max(top, s.desired_speed);
  }
  double sum = 0.0;
  int count = 0;
  for (const auto& s : out.steps) {
    if (s.desired_speed >= 0.9 * top) {
      sum += s.gait.swing_ratio;
      ++count;
    }
  }
  out.top_speed_swing_ratio = count > 0 ? sum / count : 0.0;
  return out;
}

void write_trace_csv(std::ostream& out, const std::vector<sim::TraceRow>& trace) {
  out << "time_s,step,desired_speed,speed,height,roll,pitch,phase_FR,phase_FL,phase_RR,phase_RL,"
         "contact_FR,contact_FL,contact_RR,contact_RL,frequency_hz,swing_ratio,offset_FL,offset_RR,offset_RL,"
         "power_w,reward\n";
  for (const auto& r : trace) {
    std::vector<std::string> f = {csv::fmt(r.time_s), std::to_string(r.step), csv::fmt(r.desired_speed),
                                  csv::fmt(r.speed),  csv::fmt(r.height),     csv::fmt(r.roll),
                                  csv::fmt(r.pitch)};
    for (double p : r.phases) f.push_back(csv::fmt(p));
    for (bool c : r.contacts) f.emplace_back(c ? "1" : "0");
    f.push_back(csv::fmt(r.gait.frequency_hz));
    f.push_back(csv::fmt(r.gait.swing_ratio));
    for (double o : r.gait.phase_offsets) f.push_back(csv::fmt(o));
    f.push_back(csv::fmt(r.power_w));
    f.push_back(csv::fmt(r.reward));
    out << csv::join(f) << '\n';
  }
}

void write_steps_csv(std::ostream& out, const std::vector<train::StepRow>& steps) {
  out << "step,time_s,desired_speed,speed,power_w,reward,frequency_hz,swing_ratio,offset_FL,offset_RR,offset_RL,"
         "gait_class\n";
  for (const auto& s : steps) {
    out << csv::join({std::to_string(s.step), csv::fmt(s.time_s), csv::fmt(s.desired_speed), csv::fmt(s.speed),
                      csv::fmt(s.power_w), csv::fmt(s.reward), csv::fmt(s.gait.frequency_hz),
                      csv::fmt(s.gait.swing_ratio), csv::fmt(s.gait.phase_offsets[0]),
                      csv::fmt(s.gait.phase_offsets[1]), csv::fmt(s.gait.phase_offsets[2]),
                      to_string(classify_gait(s.gait))})
        << '\n';
  }
}

train::GaitFn checkpoint_policy(const train::TaskConfig& task, const gait::PolicyCheckpoint& checkpoint) {
  const auto& a = checkpoint.arch;
  if (a.input_dim != task.arch.input_dim || a.hidden_dim != task.arch.hidden_dim ||
      a.output_dim != task.arch.output_dim) {
    throw DimensionMismatch("checkpoint architecture " + std::to_string(a.input_dim) + "-" +
                            std::to_string(a.hidden_dim) + "-" + std::to_string(a.output_dim) +
                            " does not match the configured " + std::to_string(task.arch.input_dim) + "-" +
                            std::to_string(task.arch.hidden_dim) + "-" + std::to_string(task.arch.output_dim));
  }
  if (checkpoint.params.size() != a.num_params()) throw DimensionMismatch("checkpoint parameter count mismatch");
  return [arch = a, bounds = checkpoint.bounds, params = checkpoint.params](const std::array<double, 2>& obs) {
    return gait::policy_forward(arch, params, obs, bounds);
  };
}

std::vector<fs::path> cmd_baseline(const config::ExperimentConfig& config, std::uint64_t seed, const fs::path& out_dir,
                                   const std::vector<std::string>& gait_filter) {
  std::vector<gait::BaselineGait> gaits;
  if (gait_filter.empty()) {
    gaits = config.baseline.gaits;
  } else {
    for (const auto& name : gait_filter) {
      auto it = std::find_if(config.baseline.gaits.begin(), config.baseline.gaits.end(),
                             [&](const gait::BaselineGait& g) { return normalize(g.name) == normalize(name); });
      if (it == config.baseline.gaits.end()) throw ConfigError("unknown gait '" + name + "'");
      gaits.push_back(*it);
    }
  }
  const auto rows = run_baselines(config.task, gaits, config.baseline.speeds, config.baseline.hold_s, seed,
                                  config.es.workers);
  fs::create_directories(out_dir);
  const fs::path path = out_dir / "baseline.csv";
  auto out = open_out(path);
  write_cot_csv(out, rows);
  return {path};
}

std::vector<fs::path> cmd_train(const config::ExperimentConfig& config, std::uint64_t seed, const fs::path& out_dir,
                                std::ostream* log) {
  std::vector<fs::path> written;
  const train::Objective objective = train::make_gait_objective(config.task);
  const Eigen::VectorXd initial = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(config.task.arch.num_params()));

  for (int k = 0; k < config.train.num_seeds; ++k) {
    train::EsConfig es = config.es;
    es.seed = seed + static_cast<std::uint64_t>(k);
    const fs::path dir = out_dir / ("seed_" + std::to_string(es.seed));
    fs::create_directories(dir);
    const fs::path curve_path = dir / "curve.csv";
    const fs::path mean_path = dir / "mean.ckpt";
    const fs::path best_path = dir / "best.ckpt";

    std::optional<train::ResumeState> resume;
    std::vector<train::IterationRecord> prior;
    if (!config.train.resume.empty()) {
      const gait::PolicyCheckpoint ck = gait::load_checkpoint(config.train.resume);
      checkpoint_policy(config.task, ck);
      train::ResumeState r;
      r.mean = Eigen::Map<const Eigen::VectorXd>(ck.params.data(), static_cast<Eigen::Index>(ck.params.size()));
      r.sigma = ck.sigma;
      r.iteration = ck.iteration;
      auto metric = [&](const char* key, double fallback) {
        auto it = ck.metrics.find(key);
        return it == ck.metrics.end() ? fallback : it->second;
      };
      r.env_steps = static_cast<std::int64_t>(metric("env_steps", 0.0));
      r.evaluations = static_cast<std::int64_t>(metric("evaluations", 0.0));
      const fs::path src_dir = fs::path(config.train.resume).parent_path();
      if (fs::exists(src_dir / "best.ckpt")) {
        const gait::PolicyCheckpoint best = gait::load_checkpoint(src_dir / "best.ckpt");
        r.best_params =
            Eigen::Map<const Eigen::VectorXd>(best.params.data(), static_cast<Eigen::Index>(best.params.size()));
        auto it = best.metrics.find("best_return");
        if (it != best.metrics.end()) r.best_fitness = it->second;
      }
      prior = read_records(src_dir / "curve.csv", r.iteration);
      resume = r;
    }

    auto make_checkpoint = [&](const Eigen::VectorXd& params, const char* kind, std::int64_t iteration, double sigma,
                               const train::TrainResult& result) {
      gait::PolicyCheckpoint ck;
      ck.arch = config.task.arch;
      ck.bounds = config.task.bounds;
      ck.params.assign(params.data(), params.data() + params.size());
      ck.seed = es.seed;
      ck.iteration = iteration;
      ck.algorithm = train::to_string(es.algorithm);
      ck.sigma = sigma;
      ck.kind = kind;
      ck.metrics = {{"best_return", result.best_fitness},
                    {"env_steps", static_cast<double>(result.env_steps)},
                    {"evaluations", static_cast<double>(result.evaluations)}};
      return ck;
    };

    auto on_iteration = [&](const train::IterationRecord& rec, const train::TrainResult& result) {
      const std::int64_t next = rec.iteration + 1;
      gait::save_checkpoint(mean_path, make_checkpoint(result.final_mean, "mean", next, result.final_sigma, result));
      gait::save_checkpoint(best_path, make_checkpoint(result.best_params, "best", next, result.final_sigma, result));
      std::vector<train::IterationRecord> all = prior;
      all.insert(all.end(), result.records.begin(), result.records.end());
      auto out = open_out(curve_path);
      train::write_records_csv(out, all);
      if (log != nullptr) {
        *log << "seed " << es.seed << " iter " << rec.iteration << " best " << rec.best_fitness << " mean "
             << rec.mean_fitness << " best_ever " << rec.best_ever << " sigma " << rec.sigma << " steps "
             << rec.env_steps << std::endl;
      }
    };

    const train::TrainResult result =
        train::train(es, initial, objective, on_iteration, resume ? &*resume : nullptr);
    if (result.records.empty()) {
      // No iteration ran (zero budget); still leave a consistent set of files behind.
      auto out = open_out(curve_path);
      train::write_records_csv(out, prior);
      if (!fs::exists(mean_path)) {
        gait::save_checkpoint(mean_path, make_checkpoint(result.final_mean, "mean", result.iterations,
                                                         result.final_sigma, result));
      }
    }
    written.push_back(curve_path);
    written.push_back(mean_path);
    if (fs::exists(best_path)) written.push_back(best_path);
  }
  return written;
}

std::vector<fs::path> cmd_eval(const config::ExperimentConfig& config, std::uint64_t seed, const fs::path& out_dir) {
  if (config.eval.checkpoint.empty()) throw ConfigError("eval.checkpoint is required");
  const gait::PolicyCheckpoint ck = gait::load_checkpoint(config.eval.checkpoint);
  const train::GaitFn policy = checkpoint_policy(config.task, ck);
  const EvalSummary summary = evaluate_policy(config.task, policy, config.eval.profile_steps, seed);

  std::vector<SpeedRun> cot(config.eval.cot_speeds.size());
  if (config.eval.profile_steps > 0) {
    parallel_for(cot.size(), config.es.workers, [&](std::size_t i) {
      cot[i] = constant_speed_run(config.task, policy, "learned", config.eval.cot_speeds[i], config.baseline.hold_s,
                                  seed);
    });
  } else {
    cot.clear();
  }

  fs::create_directories(out_dir);
  const fs::path trace_path = out_dir / "eval_trace.csv";
  const fs::path steps_path = out_dir / "eval_steps.csv";
  const fs::path cot_path = out_dir / "eval_cot.csv";
  const fs::path summary_path = out_dir / "eval_summary.json";
  {
    auto out = open_out(trace_path);
    write_trace_csv(out, summary.trace);
  }
  {
    auto out = open_out(steps_path);
    write_steps_csv(out, summary.steps);
  }
  {
    auto out = open_out(cot_path);
    write_cot_csv(out, cot);
  }
  config::Json regimes = config::Json::array();
  for (auto r : summary.regimes) regimes.push_back(to_string(r));
  const auto& s = summary.stats;
  const config::Json j = {{"episode_return", s.episode_return},
                          {"steps", s.steps},
                          {"fell", s.fell},
                          {"failure", sim::to_string(s.failure)},
                          {"distance_m", s.distance_m},
                          {"energy_j", s.energy_j},
                          {"cot", std::isfinite(s.cot) ? config::Json(s.cot) : config::Json(nullptr)},
                          {"speed_error", s.speed_error},
                          {"regimes", regimes},
                          {"top_speed_swing_ratio", summary.top_speed_swing_ratio}};
  {
    auto out = open_out(summary_path);
    out << j.dump(2) << '\n';
  }
  return {trace_path, steps_path, cot_path, summary_path};
}

std::vector<fs::path> cmd_report(const config::ExperimentConfig& config, const fs::path& out_dir) {
  const auto& r = config.report;
  if (r.cot.empty() && r.curves.empty() && r.trace.empty()) {
    throw ConfigError("report: nothing to render (set report.cot, report.curves or report.trace)");
  }
  std::vector<csv::Table> cot, curves;
  for (const auto& p : r.cot) cot.push_back(csv::read_file(p));
  for (const auto& p : r.curves) curves.push_back(csv::read_file(p));
  std::optional<csv::Table> trace;
  if (!r.trace.empty()) trace = csv::read_file(r.trace);

  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  auto emit = [&](const char* name, const std::string& svg) {
    const fs::path path = out_dir / name;
    auto out = open_out(path);
    out << svg;
    written.push_back(path);
  };
  if (!cot.empty()) emit("cot_vs_speed.svg", report::cot_plot(cot));
  if (!curves.empty()) emit("learning_curves.svg", report::learning_curves(curves));
  if (trace) emit("contact_raster.svg", report::contact_raster(*trace));
  return written;
}

}  // namespace gaitforge::exp
