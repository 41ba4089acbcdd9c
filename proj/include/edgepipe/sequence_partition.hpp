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

#include <cstddef>
#include <vector>

#include "edgepipe/cost_model.hpp"

namespace edgepipe {

/// Ordered sub-sequence lengths for one input, with per-stage latencies
/// h_i = q(|s_i|, sum of earlier lengths) and the bottleneck W = max h_i.
struct SequencePlan {
  std::vector<int> lengths;
  std::vector<double> h;
  double bottleneck = 0.0;

  int k() const { return static_cast<int>(lengths.size()); }
  int total() const;
};

struct SeqDpStats {
  std::size_t cell_evals = 0;
};

/// Closed-form count of inner DP evaluations for a full fill up to max_y with
/// k_max part layers; the implementation's counter matches it exactly.
std::size_t seq_dp_eval_count(int max_y, int k_max);

/// Smallest sub-sequence length at which every device reaches the
/// utilization threshold: max over devices of ceil(threshold * knee).
int min_sublen(const std::vector<DeviceProfile>& devices, double threshold);

/// Optimal split of y tokens into exactly k parts, each at least b tokens,
/// minimizing the slowest part's q latency. Ties: smallest final part,
/// applied recursively. Throws InfeasibleError when k*b > y.
SequencePlan partition_sequence(int y, int k, const QTable& qtable, int b,
                                SeqDpStats* stats = nullptr);

struct PlanChoice {
  SequencePlan plan;
  double latency_est = 0.0;  // sum h_i + (|D|-1) * W
};

/// Picks the part count k in 1..min(4*|D|, floor(y/b)) minimizing the
/// pipeline latency estimate; ties prefer smaller k. Inputs shorter than b
/// fall back to a single short part.
PlanChoice choose_num_subsequences(int y, const QTable& qtable,
                                   int num_devices, int b,
                                   SeqDpStats* stats = nullptr);

struct PlanTable {
  int s_max = 0;
  int num_devices = 0;
  int min_len = 0;
  std::vector<PlanChoice> entries;  // entries[y-1] for y in 1..s_max

  const PlanChoice& at(int y) const { return entries[y - 1]; }
};

/// Plans for every input length 1..s_max. The DP prefix table is filled once
/// and shared across lengths; serial and OpenMP fills are bit-identical.
PlanTable precompute_plan_table(int s_max, const QTable& qtable,
                                int num_devices, int b,
                                ExecPolicy policy = ExecPolicy::Parallel,
                                SeqDpStats* stats = nullptr);

/// Exhaustive oracle over all compositions (guarded to small instances);
/// same tie-break as partition_sequence.
SequencePlan brute_force_sequence(int y, int k, const QTable& qtable, int b);

}  // namespace edgepipe
