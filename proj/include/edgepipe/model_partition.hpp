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
#include <string>
#include <vector>

#include "edgepipe/cost_model.hpp"

namespace edgepipe {

/// One pipeline stage: the inclusive 1-based layer range hosted by a device.
struct StageAssignment {
  int layer_lo = 0;
  int layer_hi = 0;
  std::string device_id;

  int layer_count() const { return layer_hi - layer_lo + 1; }
  bool operator==(const StageAssignment&) const = default;
};

/// Contiguous layer-to-device assignment, one stage per device in device
/// order. bottleneck is the slowest stage's planning-context latency.
struct PartitionPlan {
  std::vector<StageAssignment> stages;
  double bottleneck = 0.0;

  int num_stages() const { return static_cast<int>(stages.size()); }
};

/// t[l][n]: latency of layer l (1-based) on device n (0-based) at the
/// planning context.
class LayerCostMatrix {
 public:
  LayerCostMatrix(int num_layers, int num_devices)
      : num_layers_(num_layers),
        num_devices_(num_devices),
        t_(static_cast<std::size_t>(num_layers) * num_devices, 0.0) {}

  double at(int layer, int dev) const {
    return t_[static_cast<std::size_t>(layer - 1) * num_devices_ + dev];
  }
  void set(int layer, int dev, double v) {
    t_[static_cast<std::size_t>(layer - 1) * num_devices_ + dev] = v;
  }
  int num_layers() const { return num_layers_; }
  int num_devices() const { return num_devices_; }

 private:
  int num_layers_;
  int num_devices_;
  std::vector<double> t_;
};

/// Per-layer analytic costs at the given planning input length (whole input
/// as one chunk, empty context).
LayerCostMatrix analytic_layer_costs(const ModelSpec& model,
                                     const std::vector<DeviceProfile>& devices,
                                     int planning_x);

struct PartitionStats {
  std::size_t stage_time_evals = 0;
};

/// Sum of t[l][n] over layers [i, j], or +inf when the span's memory
/// footprint at max_ctx exceeds device n's budget.
double stage_time(const LayerCostMatrix& costs, int i, int j, int n,
                  const ModelSpec& model,
                  const std::vector<DeviceProfile>& devices, int max_ctx);

/// Min-bottleneck contiguous partition of all layers over the ordered device
/// set, via the prefix dynamic program. Ties broken by the smallest split
/// point at each level, applied recursively.
PartitionPlan partition_model(const LayerCostMatrix& costs,
                              const ModelSpec& model,
                              const std::vector<DeviceProfile>& devices,
                              int max_ctx, PartitionStats* stats = nullptr);

/// Exhaustive oracle over all contiguous partitions (guarded to small
/// instances); same tie-break as partition_model.
PartitionPlan brute_force_partition(const LayerCostMatrix& costs,
                                    const ModelSpec& model,
                                    const std::vector<DeviceProfile>& devices,
                                    int max_ctx);

/// q grid for an existing plan: stage devices resolved by id.
QTable build_q_table(const ModelSpec& model,
                     const std::vector<DeviceProfile>& devices,
                     const PartitionPlan& plan, int spacing,
                     ExecPolicy policy = ExecPolicy::Parallel);

const DeviceProfile& device_by_id(const std::vector<DeviceProfile>& devices,
                                  const std::string& id);

}  // namespace edgepipe
