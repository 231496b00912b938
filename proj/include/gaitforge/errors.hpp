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

#ifndef GAITFORGE_ERRORS_HPP_
#define GAITFORGE_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace gaitforge {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Foot target outside the annulus |l_thigh - l_calf| <= d <= l_thigh + l_calf.
class OutOfReach : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class SingularInertia : public Error {
 public:
  using Error::Error;
};

class NumericalBlowup : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file; the message names the offending row and column.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace gaitforge

#endif  // GAITFORGE_ERRORS_HPP_
