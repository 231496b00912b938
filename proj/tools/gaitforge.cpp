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

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gaitforge/config.hpp"
#include "gaitforge/experiments.hpp"

namespace fs = std::filesystem;
using namespace gaitforge;

int main(int argc, char** argv) {
  CLI::App app{"gaitforge: gait learning on top of a convex MPC quadruped controller"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out_dir = "out";
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment JSON (defaults when omitted)");
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t s) { seed = s; seed_given = true; }, "master seed (default: es.seed)");
    cmd->add_option("--out", out_dir, "output directory")->capture_default_str();
  };

  auto* baseline = app.add_subcommand("baseline", "CoT and speed error of fixed gaits over the speed grid");
  std::vector<std::string> gaits;
  add_common(baseline);
  baseline->add_option("--gait", gaits, "restrict to these gait names (repeatable)");

  auto* train = app.add_subcommand("train", "optimize the gait policy; checkpoints and learning curves per seed");
  std::string resume;
  add_common(train);
  train->add_option("--resume", resume, "mean checkpoint to continue from");

  auto* eval = app.add_subcommand("eval", "run a checkpoint on the accelerating profile and the CoT grid");
  std::string checkpoint;
  add_common(eval);
  eval->add_option("--checkpoint", checkpoint, "policy checkpoint (overrides eval.checkpoint)");

  auto* report = app.add_subcommand("report", "render SVG plots from CSV outputs");
  std::vector<std::string> cot, curves;
  std::string trace;
  add_common(report);
  report->add_option("--cot", cot, "CoT tables (repeatable)");
  report->add_option("--curve", curves, "learning-curve CSVs (repeatable)");
  report->add_option("--trace", trace, "eval trace CSV");

  auto* defaults = app.add_subcommand("defaults", "write the default experiment config");
  add_common(defaults);

  CLI11_PARSE(app, argc, argv);

  try {
    config::ExperimentConfig cfg =
        config_path.empty() ? config::default_experiment() : config::load_experiment(config_path);
    if (!seed_given) seed = cfg.es.seed;
    const fs::path out(out_dir);
    std::vector<fs::path> written;
    if (baseline->parsed()) {
      written = exp::cmd_baseline(cfg, seed, out, gaits);
    } else if (train->parsed()) {
      if (!resume.empty()) cfg.train.resume = resume;
      cfg.validate();
      written = exp::cmd_train(cfg, seed, out, &std::cerr);
    } else if (eval->parsed()) {
      if (!checkpoint.empty()) cfg.eval.checkpoint = checkpoint;
      written = exp::cmd_eval(cfg, seed, out);
    } else if (report->parsed()) {
      if (!cot.empty()) cfg.report.cot = cot;
      if (!curves.empty()) cfg.report.curves = curves;
      if (!trace.empty()) cfg.report.trace = trace;
      written = exp::cmd_report(cfg, out);
    } else if (defaults->parsed()) {
      fs::create_directories(out);
      written = {out / "config.json"};
      config::save_experiment(written[0], cfg);
    }
    for (const auto& p : written) std::cout << p.string() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
