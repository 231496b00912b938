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

#include "gaitforge/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "gaitforge/errors.hpp"

namespace gaitforge::config {
namespace {

// Reads fields out of one JSON object and complains about leftovers.
class Reader {
 public:
  Reader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected a JSON object");
  }
  ~Reader() = default;

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const Json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  template <typename Fn>
  void sub(const char* key, Fn&& fn) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it != j_.end()) fn(*it, where_ + "." + key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) throw ConfigError(where_ + ": unknown key '" + key + "'");
    }
  }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

template <int N>
Json vec_json(const Eigen::Matrix<double, N, 1>& v) {
  Json a = Json::array();
  for (int i = 0; i < N; ++i) a.push_back(v[i]);
  return a;
}

template <int N>
Eigen::Matrix<double, N, 1> vec_from(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(N)) {
    throw ConfigError(where + ": expected an array of " + std::to_string(N) + " numbers");
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) {
    if (!j[static_cast<std::size_t>(i)].is_number()) throw ConfigError(where + ": expected numbers");
    v[i] = j[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

Json robot_json(const robot::RobotParams& p) {
  Json inertia = Json::array();
  for (int r = 0; r < 3; ++r) inertia.push_back(vec_json<3>(p.inertia_base.row(r).transpose()));
  Json hips = Json::array();
  for (const auto& h : p.hip_offsets) hips.push_back(vec_json<3>(h));
  return {{"mass_kg", p.mass_kg},
          {"inertia_base", inertia},
          {"hip_offsets", hips},
          {"l_abduction", p.l_abduction},
          {"l_thigh", p.l_thigh},
          {"l_calf", p.l_calf},
          {"gear_ratio", p.gear_ratio},
          {"motor_alpha", p.motor_alpha},
          {"torque_limit_joint", p.torque_limit_joint},
          {"standing_height", p.standing_height},
          {"gravity", p.gravity}};
}

void robot_from(const Json& j, const std::string& where, robot::RobotParams& p) {
  Reader r(j, where);
  r.get("mass_kg", p.mass_kg);
  r.sub("inertia_base", [&](const Json& v, const std::string& w) {
    if (!v.is_array() || v.size() != 3) throw ConfigError(w + ": expected a 3x3 array");
    for (int row = 0; row < 3; ++row) p.inertia_base.row(row) = vec_from<3>(v[static_cast<std::size_t>(row)], w).transpose();
  });
  r.sub("hip_offsets", [&](const Json& v, const std::string& w) {
    if (!v.is_array() || v.size() != kNumLegs) throw ConfigError(w + ": expected 4 hip positions");
    for (std::size_t leg = 0; leg < kNumLegs; ++leg) p.hip_offsets[leg] = vec_from<3>(v[leg], w);
  });
  r.get("l_abduction", p.l_abduction);
  r.get("l_thigh", p.l_thigh);
  r.get("l_calf", p.l_calf);
  r.get("gear_ratio", p.gear_ratio);
  r.get("motor_alpha", p.motor_alpha);
  r.get("torque_limit_joint", p.torque_limit_joint);
  r.get("standing_height", p.standing_height);
  r.get("gravity", p.gravity);
  r.finish();
}

Json mpc_json(const mpc::MpcConfig& c) {
  return {{"horizon_steps", c.horizon_steps}, {"dt_mpc", c.dt_mpc},         {"state_weights", vec_json<12>(c.state_weights)},
          {"force_weight", c.force_weight},   {"friction_mu", c.friction_mu}, {"fz_min", c.fz_min},
          {"fz_max", c.fz_max},               {"replan_dt", c.replan_dt},     {"warm_start", c.warm_start},
          {"track_feet", c.track_feet}};
}

void mpc_from(const Json& j, const std::string& where, mpc::MpcConfig& c) {
  Reader r(j, where);
  r.get("horizon_steps", c.horizon_steps);
  r.get("dt_mpc", c.dt_mpc);
  r.sub("state_weights", [&](const Json& v, const std::string& w) { c.state_weights = vec_from<12>(v, w); });
  r.get("force_weight", c.force_weight);
  r.get("friction_mu", c.friction_mu);
  r.get("fz_min", c.fz_min);
  r.get("fz_max", c.fz_max);
  r.get("replan_dt", c.replan_dt);
  r.get("warm_start", c.warm_start);
  r.get("track_feet", c.track_feet);
  r.finish();
}

Json swing_json(const swing::SwingConfig& c) {
  return {{"clearance", c.clearance}, {"kp", vec_json<3>(c.gains.kp)}, {"kd", vec_json<3>(c.gains.kd)}};
}

void swing_from(const Json& j, const std::string& where, swing::SwingConfig& c) {
  Reader r(j, where);
  r.get("clearance", c.clearance);
  r.sub("kp", [&](const Json& v, const std::string& w) { c.gains.kp = vec_from<3>(v, w); });
  r.sub("kd", [&](const Json& v, const std::string& w) { c.gains.kd = vec_from<3>(v, w); });
  r.finish();
}

Json qp_json(const qp::QpConfig& c) {
  return {{"tolerance", c.tolerance}, {"max_iterations", c.max_iterations}, {"regularization", c.regularization}};
}

void qp_from(const Json& j, const std::string& where, qp::QpConfig& c) {
  Reader r(j, where);
  r.get("tolerance", c.tolerance);
  r.get("max_iterations", c.max_iterations);
  r.get("regularization", c.regularization);
  r.finish();
}

Json env_json(const sim::EnvConfig& c) {
  return {{"episode_steps", c.episode_steps},
          {"highlevel_dt", c.highlevel_dt},
          {"lowlevel_dt", c.lowlevel_dt},
          {"accel", c.accel},
          {"v_max", c.v_max},
          {"reward",
           {{"survival", c.reward.survival},
            {"speed", c.reward.speed},
            {"energy", c.reward.energy},
            {"v_eps", c.reward.v_eps}}},
          {"min_height", c.min_height},
          {"max_tilt", c.max_tilt},
          {"seed", c.seed},
          {"joint_inertia", c.joint_inertia},
          {"joint_friction", c.joint_friction},
          {"max_fallback_steps", c.max_fallback_steps},
          {"init_noise", c.init_noise}};
}

void env_from(const Json& j, const std::string& where, sim::EnvConfig& c) {
  Reader r(j, where);
  r.get("episode_steps", c.episode_steps);
  r.get("highlevel_dt", c.highlevel_dt);
  r.get("lowlevel_dt", c.lowlevel_dt);
  r.get("accel", c.accel);
  r.get("v_max", c.v_max);
  r.sub("reward", [&](const Json& v, const std::string& w) {
    Reader rr(v, w);
    rr.get("survival", c.reward.survival);
    rr.get("speed", c.reward.speed);
    rr.get("energy", c.reward.energy);
    rr.get("v_eps", c.reward.v_eps);
    rr.finish();
  });
  r.get("min_height", c.min_height);
  r.get("max_tilt", c.max_tilt);
  r.get("seed", c.seed);
  r.get("joint_inertia", c.joint_inertia);
  r.get("joint_friction", c.joint_friction);
  r.get("max_fallback_steps", c.max_fallback_steps);
  r.get("init_noise", c.init_noise);
  r.finish();
}

Json policy_json(const gait::PolicyArchitecture& a, const gait::ActionBounds& b) {
  return {{"input_dim", a.input_dim},         {"hidden_dim", a.hidden_dim},       {"output_dim", a.output_dim},
          {"frequency_min", b.frequency_min}, {"frequency_max", b.frequency_max}, {"swing_min", b.swing_min},
          {"swing_max", b.swing_max}};
}

void policy_from(const Json& j, const std::string& where, gait::PolicyArchitecture& a, gait::ActionBounds& b) {
  Reader r(j, where);
  r.get("input_dim", a.input_dim);
  r.get("hidden_dim", a.hidden_dim);
  r.get("output_dim", a.output_dim);
  r.get("frequency_min", b.frequency_min);
  r.get("frequency_max", b.frequency_max);
  r.get("swing_min", b.swing_min);
  r.get("swing_max", b.swing_max);
  r.finish();
}

Json es_json(const train::EsConfig& c) {
  Json j = {{"algorithm", train::to_string(c.algorithm)},
            {"population", c.population},
            {"init_std", c.init_std},
            {"ars_step", c.ars_step},
            {"iterations", c.iterations},
            {"workers", c.workers},
            {"seed", c.seed},
            {"diagonal_covariance", c.diagonal_covariance},
            {"max_env_steps", c.max_env_steps},
            {"max_evaluations", c.max_evaluations}};
  j["target_fitness"] = c.target_fitness ? Json(*c.target_fitness) : Json(nullptr);
  return j;
}

void es_from(const Json& j, const std::string& where, train::EsConfig& c) {
  Reader r(j, where);
  r.sub("algorithm", [&](const Json& v, const std::string& w) {
    if (!v.is_string()) throw ConfigError(w + ": expected a string");
    c.algorithm = train::algorithm_from_string(v.get<std::string>());
  });
  r.get("population", c.population);
  r.get("init_std", c.init_std);
  r.get("ars_step", c.ars_step);
  r.get("iterations", c.iterations);
  r.get("workers", c.workers);
  r.get("seed", c.seed);
  r.get("diagonal_covariance", c.diagonal_covariance);
  r.get("max_env_steps", c.max_env_steps);
  r.get("max_evaluations", c.max_evaluations);
  r.sub("target_fitness", [&](const Json& v, const std::string& w) {
    if (v.is_null()) {
      c.target_fitness.reset();
    } else if (v.is_number()) {
      c.target_fitness = v.get<double>();
    } else {
      throw ConfigError(w + ": expected a number or null");
    }
  });
  r.finish();
}

std::vector<double> doubles_from(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError(where + ": expected an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<std::string> strings_from(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of strings");
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string()) throw ConfigError(where + ": expected an array of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

void check_speed_grid(const std::vector<double>& speeds, const char* what) {
  for (double v : speeds) {
    if (!(v > 0.0 && v <= 2.5)) {
      throw ConfigError(std::string(what) + ": speed " + std::to_string(v) + " outside (0, 2.5]");
    }
  }
}

std::string resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return p;
  const std::filesystem::path path(p);
  return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

}  // namespace

Json baseline_table_to_json(const std::vector<gait::BaselineGait>& gaits) {
  Json a = Json::array();
  for (const auto& g : gaits) {
    a.push_back({{"name", g.name},
                 {"frequency_hz", g.params.frequency_hz},
                 {"swing_ratio", g.params.swing_ratio},
                 {"phase_offsets", g.params.phase_offsets}});
  }
  return a;
}

std::vector<gait::BaselineGait> baseline_table_from_json(const Json& j) {
  if (!j.is_array()) throw ConfigError("baseline.gaits: expected an array");
  std::vector<gait::BaselineGait> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string where = "baseline.gaits[" + std::to_string(i) + "]";
    gait::BaselineGait g;
    Reader r(j[i], where);
    r.get("name", g.name);
    r.get("frequency_hz", g.params.frequency_hz);
    r.get("swing_ratio", g.params.swing_ratio);
    r.get("phase_offsets", g.params.phase_offsets);
    r.finish();
    if (g.name.empty()) throw ConfigError(where + ": name is required");
    g.params.validate();
    out.push_back(std::move(g));
  }
  return out;
}

ExperimentConfig default_experiment() {
  ExperimentConfig c;
  const auto table = gait::baseline_gaits();
  c.baseline.gaits.assign(table.begin(), table.end());
  return c;
}

void ExperimentConfig::validate() const {
  task.robot.validate();
  task.mpc.validate();
  task.env.validate();
  if (task.arch.input_dim != 2 || task.arch.output_dim != 5 || task.arch.hidden_dim < 1) {
    throw ConfigError("policy: the gait policy maps 2 inputs to 5 outputs through hidden_dim >= 1 units");
  }
  es.validate();
  if (baseline.gaits.empty()) throw ConfigError("baseline.gaits: at least one gait is required");
  for (const auto& g : baseline.gaits) g.params.validate();
  check_speed_grid(baseline.speeds, "baseline.speeds");
  check_speed_grid(eval.cot_speeds, "eval.cot_speeds");
  if (!(baseline.hold_s > 0.0)) throw ConfigError("baseline.hold_s must be positive");
  if (train.num_seeds < 1) throw ConfigError("train.num_seeds must be >= 1");
  if (!train.resume.empty() && train.num_seeds != 1) throw ConfigError("train.resume needs num_seeds = 1");
  if (eval.profile_steps < 0) throw ConfigError("eval.profile_steps must be >= 0");
}

ExperimentConfig experiment_from_json(const Json& j) {
  ExperimentConfig c = default_experiment();
  Reader r(j, "config");
  r.sub("robot", [&](const Json& v, const std::string& w) { robot_from(v, w, c.task.robot); });
  r.sub("mpc", [&](const Json& v, const std::string& w) { mpc_from(v, w, c.task.mpc); });
  r.sub("swing", [&](const Json& v, const std::string& w) { swing_from(v, w, c.task.swing); });
  r.sub("qp", [&](const Json& v, const std::string& w) { qp_from(v, w, c.task.qp); });
  r.sub("env", [&](const Json& v, const std::string& w) { env_from(v, w, c.task.env); });
  r.sub("policy", [&](const Json& v, const std::string& w) { policy_from(v, w, c.task.arch, c.task.bounds); });
  r.sub("es", [&](const Json& v, const std::string& w) { es_from(v, w, c.es); });
  r.sub("baseline", [&](const Json& v, const std::string& w) {
    Reader b(v, w);
    b.sub("gaits", [&](const Json& g, const std::string&) { c.baseline.gaits = baseline_table_from_json(g); });
    b.sub("speeds", [&](const Json& s, const std::string& ww) { c.baseline.speeds = doubles_from(s, ww); });
    b.get("hold_s", c.baseline.hold_s);
    b.finish();
  });
  r.sub("train", [&](const Json& v, const std::string& w) {
    Reader t(v, w);
    t.get("num_seeds", c.train.num_seeds);
    t.get("resume", c.train.resume);
    t.finish();
  });
  r.sub("eval", [&](const Json& v, const std::string& w) {
    Reader e(v, w);
    e.get("checkpoint", c.eval.checkpoint);
    e.get("profile_steps", c.eval.profile_steps);
    e.sub("cot_speeds", [&](const Json& s, const std::string& ww) { c.eval.cot_speeds = doubles_from(s, ww); });
    e.finish();
  });
  r.sub("report", [&](const Json& v, const std::string& w) {
    Reader p(v, w);
    p.sub("cot", [&](const Json& s, const std::string& ww) { c.report.cot = strings_from(s, ww); });
    p.sub("curves", [&](const Json& s, const std::string& ww) { c.report.curves = strings_from(s, ww); });
    p.get("trace", c.report.trace);
    p.finish();
  });
  r.finish();
  c.validate();
  return c;
}

Json to_json(const ExperimentConfig& c) {
  return {{"robot", robot_json(c.task.robot)},
          {"mpc", mpc_json(c.task.mpc)},
          {"swing", swing_json(c.task.swing)},
          {"qp", qp_json(c.task.qp)},
          {"env", env_json(c.task.env)},
          {"policy", policy_json(c.task.arch, c.task.bounds)},
          {"es", es_json(c.es)},
          {"baseline",
           {{"gaits", baseline_table_to_json(c.baseline.gaits)},
            {"speeds", c.baseline.speeds},
            {"hold_s", c.baseline.hold_s}}},
          {"train", {{"num_seeds", c.train.num_seeds}, {"resume", c.train.resume}}},
          {"eval",
           {{"checkpoint", c.eval.checkpoint},
            {"profile_steps", c.eval.profile_steps},
            {"cot_speeds", c.eval.cot_speeds}}},
          {"report", {{"cot", c.report.cot}, {"curves", c.report.curves}, {"trace", c.report.trace}}}};
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  ExperimentConfig c = experiment_from_json(j);
  const auto base = path.parent_path();
  c.train.resume = resolve(base, c.train.resume);
  c.eval.checkpoint = resolve(base, c.eval.checkpoint);
  c.report.trace = resolve(base, c.report.trace);
  for (auto& p : c.report.cot) p = resolve(base, p);
  for (auto& p : c.report.curves) p = resolve(base, p);
  return c;
}

void save_experiment(const std::filesystem::path& path, const ExperimentConfig& config) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << to_json(config).dump(2) << '\n';
}

}  // namespace gaitforge::config
