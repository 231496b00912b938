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

#ifndef GAITFORGE_POLICY_HPP_
#define GAITFORGE_POLICY_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gaitforge/gait.hpp"

namespace gaitforge::gait {

/// Fully connected input -> tanh hidden -> tanh output network.
struct PolicyArchitecture {
  int input_dim = 2;
  int hidden_dim = 256;
  int output_dim = 5;

  /// Flat layout: W1 (hidden x input, row-major), b1, W2 (output x hidden, row-major), b2.
  std::size_t num_params() const;
  bool operator==(const PolicyArchitecture&) const = default;
};

/// Affine action bounds with clamp floors.
struct ActionBounds {
  double frequency_min = 0.2;
  double frequency_max = 4.0;
  double swing_min = 0.05;
  double swing_max = 0.95;
};

/// Network output in (-1, 1)^5 before the affine map.
Eigen::Matrix<double, 5, 1> raw_policy_output(const PolicyArchitecture& arch, std::span<const double> params,
                                              std::span<const double> obs);

/// Maps a raw action y in [-1, 1]^5 onto GaitParams:
/// f = 2 + 2y, p_swing = 0.5 + 0.5y, theta = pi + pi*y, each clamped to its bounds.
GaitParams action_to_gait(const Eigen::Matrix<double, 5, 1>& raw, const ActionBounds& bounds = {});

/// Throws DimensionMismatch if params or obs do not match `arch`.
GaitParams policy_forward(const PolicyArchitecture& arch, std::span<const double> params,
                          std::span<const double> obs, const ActionBounds& bounds = {});

/// On-disk policy: 8-byte magic "GFPOLICY", u64 little-endian header length,
/// UTF-8 JSON header, then num_params float64 little-endian values.
struct PolicyCheckpoint {
  PolicyArchitecture arch;
  ActionBounds bounds;
  std::vector<double> params;
  std::uint64_t seed = 0;
  std::int64_t iteration = 0;
  std::string algorithm;
  /// Step size of the optimizer when the checkpoint was written; 0 if unknown.
  double sigma = 0.0;
  /// "best" for the best-ever policy, "mean" for the optimizer's search state.
  std::string kind = "best";
  /// Free-form scalars (best_return, env_steps, ...), sorted by key on disk.
  std::map<std::string, double> metrics;
};

void save_checkpoint(const std::filesystem::path& path, const PolicyCheckpoint& checkpoint);

/// Throws ParseError on a malformed file and DimensionMismatch when the
/// payload length disagrees with the declared architecture.
PolicyCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace gaitforge::gait

#endif  // GAITFORGE_POLICY_HPP_
