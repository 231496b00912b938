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

#ifndef GAITFORGE_TYPES_HPP_
#define GAITFORGE_TYPES_HPP_

#include <array>
#include <cstddef>
#include <numbers>
#include <string_view>

#include <Eigen/Dense>

namespace gaitforge {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec12 = Eigen::Matrix<double, 12, 1>;
using Mat12 = Eigen::Matrix<double, 12, 12>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Leg order used by every module: front-right, front-left, rear-right, rear-left.
inline constexpr std::size_t kNumLegs = 4;
inline constexpr std::array<std::string_view, kNumLegs> kLegNames = {"FR", "FL", "RR", "RL"};
enum class Leg : std::size_t { FR = 0, FL = 1, RR = 2, RL = 3 };

/// -1 for right legs, +1 for left legs.
inline constexpr double side_sign(std::size_t leg) { return (leg % 2 == 0) ? -1.0 : 1.0; }

template <typename T>
using PerLeg = std::array<T, kNumLegs>;

}  // namespace gaitforge

#endif  // GAITFORGE_TYPES_HPP_
