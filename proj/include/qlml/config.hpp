// Copyright 2026 The qlml Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace qlml {

// Default numerical tolerance for state invariants (hermiticity drift,
// positivity drift, trace normalization). Overridable per state/config.
inline constexpr double kDefaultTol = 1e-9;

// Eigenvalues below -kPsdAbort after a channel application or projection are
// treated as a real bug, not drift, and abort loudly. Anything in
// [-kPsdAbort, 0) is clamped to zero during repair.
inline constexpr double kPsdAbort = 1e-8;

// Relative floor below which a conditional trace counts as zero: directions
// with less mass have no induced distribution.
inline constexpr double kTraceFloor = 1e-12;

struct ZeroConditionalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PsdViolationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace qlml
