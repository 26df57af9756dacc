// Copyright 2026 The rpd Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace rpd {

/// Bad dimensions, empty inputs, out-of-range parameters.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A value violates a documented type invariant (non-SPD matrix, negative dual).
class InvariantError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Solver or model configuration that breaks a precondition such as alpha*eta <= 1.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Floating-point breakdown: failed decomposition, non-finite values.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InnerSolveError : public NumericError {
 public:
  using NumericError::NumericError;
};

class ConstraintError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Percentile bounds collapsed (u == l); needs more varied data.
class BoundsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Rank correlation of a constant vector.
class UndefinedCorrelationError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rpd
