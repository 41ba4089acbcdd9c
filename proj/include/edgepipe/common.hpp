/*
 * Copyright 2026 The EdgePipe Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

namespace edgepipe {

/// Sentinel for stage assignments that violate a memory budget or a
/// minimum-length constraint.
inline constexpr double kInfeasible = std::numeric_limits<double>::infinity();

/// Bad input: malformed file, violated invariant, out-of-range query.
/// Maps to process exit code 2.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// No feasible plan exists for the given budgets/constraints. Exit code 3.
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A simulated device ran out of KVCache memory. Exit code 4.
struct OomError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Fixed 6-fractional-digit formatting used for every float we emit,
/// locale-independent.
inline std::string format_fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

/// Round to the same 6-digit grid as format_fixed, for floats stored in
/// structured documents.
inline double round6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return std::strtod(buf, nullptr);
}

enum class ExecPolicy { Serial, Parallel };

}  // namespace edgepipe
