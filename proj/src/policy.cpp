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

#include "gaitforge/policy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "gaitforge/errors.hpp"

namespace gaitforge::gait {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {
constexpr char kMagic[8] = {'G', 'F', 'P', 'O', 'L', 'I', 'C', 'Y'};
}

std::size_t PolicyArchitecture::num_params() const {
  const auto in = static_cast<std::size_t>(input_dim);
  const auto hid = static_cast<std::size_t>(hidden_dim);
  const auto out = static_cast<std::size_t>(output_dim);
  return hid * in + hid + out * hid + out;
}

Eigen::Matrix<double, 5, 1> raw_policy_output(const PolicyArchitecture& arch, std::span<const double> params,
                                              std::span<const double> obs) {
  if (arch.output_dim != 5) throw DimensionMismatch("gait policy must have 5 outputs");
  if (params.size() != arch.num_params()) {
    throw DimensionMismatch("policy has " + std::to_string(params.size()) + " parameters, architecture expects " +
                            std::to_string(arch.num_params()));
  }
  if (obs.size() != static_cast<std::size_t>(arch.input_dim)) {
    throw DimensionMismatch("observation has " + std::to_string(obs.size()) + " entries, policy expects " +
                            std::to_string(arch.input_dim));
  }
  const int in = arch.input_dim;
  const int hid = arch.hidden_dim;
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const double* data = params.data();
  Eigen::Map<const RowMajor> w1(data, hid, in);
  Eigen::Map<const Eigen::VectorXd> b1(data + hid * in, hid);
  Eigen::Map<const RowMajor> w2(data + hid * in + hid, 5, hid);
  Eigen::Map<const Eigen::VectorXd> b2(data + hid * in + hid + 5 * hid, 5);
  Eigen::Map<const Eigen::VectorXd> x(obs.data(), in);

  const Eigen::VectorXd hidden = (w1 * x + b1).array().tanh().matrix();
  return (w2 * hidden + b2).array().tanh().matrix();
}

GaitParams action_to_gait(const Eigen::Matrix<double, 5, 1>& raw, const ActionBounds& bounds) {
  GaitParams gait;
  gait.frequency_hz = std::clamp(2.0 + 2.0 * raw[0], bounds.frequency_min, bounds.frequency_max);
  gait.swing_ratio = std::clamp(0.5 + 0.5 * raw[1], bounds.swing_min, bounds.swing_max);
  for (int i = 0; i < 3; ++i) {
    gait.phase_offsets[static_cast<std::size_t>(i)] = std::clamp(kPi + kPi * raw[2 + i], 0.0, kTwoPi);
  }
  return gait;
}

GaitParams policy_forward(const PolicyArchitecture& arch, std::span<const double> params,
                          std::span<const double> obs, const ActionBounds& bounds) {
  return action_to_gait(raw_policy_output(arch, params, obs), bounds);
}

void save_checkpoint(const std::filesystem::path& path, const PolicyCheckpoint& ck) {
  if (ck.params.size() != ck.arch.num_params()) {
    throw DimensionMismatch("checkpoint parameter count does not match its architecture");
  }
  nlohmann::ordered_json header;
  header["format"] = "gaitforge-policy";
  header["version"] = 1;
  header["architecture"] = {{"input_dim", ck.arch.input_dim},
                            {"hidden_dim", ck.arch.hidden_dim},
                            {"output_dim", ck.arch.output_dim},
                            {"hidden_activation", "tanh"},
                            {"output_activation", "tanh"}};
  header["bounds"] = {{"frequency_min", ck.bounds.frequency_min},
                      {"frequency_max", ck.bounds.frequency_max},
                      {"swing_min", ck.bounds.swing_min},
                      {"swing_max", ck.bounds.swing_max}};
  header["num_params"] = ck.params.size();
  header["seed"] = ck.seed;
  header["iteration"] = ck.iteration;
  header["algorithm"] = ck.algorithm;
  header["sigma"] = ck.sigma;
  header["kind"] = ck.kind;
  header["metrics"] = ck.metrics;
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open checkpoint for writing: " + path.string());
  const std::uint64_t len = text.size();
  out.write(kMagic, sizeof(kMagic));
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(reinterpret_cast<const char*>(ck.params.data()),
            static_cast<std::streamsize>(ck.params.size() * sizeof(double)));
  if (!out) throw Error("failed writing checkpoint: " + path.string());
}

PolicyCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path.string());
  char magic[8];
  std::uint64_t len = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0 || len > (1u << 20)) {
    throw ParseError(path.string() + ": not a gaitforge policy checkpoint");
  }
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw ParseError(path.string() + ": truncated header");

  PolicyCheckpoint ck;
  try {
    const auto header = nlohmann::json::parse(text);
    const auto& arch = header.at("architecture");
    ck.arch.input_dim = arch.at("input_dim").get<int>();
    ck.arch.hidden_dim = arch.at("hidden_dim").get<int>();
    ck.arch.output_dim = arch.at("output_dim").get<int>();
    const auto& bounds = header.at("bounds");
    ck.bounds.frequency_min = bounds.at("frequency_min").get<double>();
    ck.bounds.frequency_max = bounds.at("frequency_max").get<double>();
    ck.bounds.swing_min = bounds.at("swing_min").get<double>();
    ck.bounds.swing_max = bounds.at("swing_max").get<double>();
    ck.seed = header.value("seed", std::uint64_t{0});
    ck.iteration = header.value("iteration", std::int64_t{0});
    ck.algorithm = header.value("algorithm", std::string{});
    ck.sigma = header.value("sigma", 0.0);
    ck.kind = header.value("kind", std::string{"best"});
    if (header.contains("metrics")) ck.metrics = header.at("metrics").get<std::map<std::string, double>>();
    const auto declared = header.at("num_params").get<std::size_t>();
    if (declared != ck.arch.num_params()) {
      throw DimensionMismatch(path.string() + ": header declares " + std::to_string(declared) +
                              " parameters but architecture needs " + std::to_string(ck.arch.num_params()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": bad checkpoint header: " + e.what());
  }

  ck.params.resize(ck.arch.num_params());
  in.read(reinterpret_cast<char*>(ck.params.data()), static_cast<std::streamsize>(ck.params.size() * sizeof(double)));
  if (!in) throw DimensionMismatch(path.string() + ": payload shorter than declared parameter count");
  in.peek();
  if (!in.eof()) throw DimensionMismatch(path.string() + ": trailing bytes after parameter payload");
  return ck;
}

}  // namespace gaitforge::gait
