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

#include "edgepipe/model_partition.hpp"

#include <algorithm>
#include <cmath>

namespace edgepipe {

const DeviceProfile& device_by_id(const std::vector<DeviceProfile>& devices,
                                  const std::string& id) {
  for (const auto& d : devices)
    if (d.id == id) return d;
  throw ValidationError("unknown device id '" + id + "'");
}

LayerCostMatrix analytic_layer_costs(const ModelSpec& model,
                                     const std::vector<DeviceProfile>& devices,
                                     int planning_x) {
  model.validate();
  if (planning_x < 1 || planning_x > model.max_seq_len)
    throw ValidationError("analytic_layer_costs: planning length out of range");
  LayerCostMatrix costs(model.num_layers, static_cast<int>(devices.size()));
  for (int l = 1; l <= model.num_layers; ++l) {
    const double flops = layer_flops_at(model, l, planning_x, 0);
    for (int n = 0; n < static_cast<int>(devices.size()); ++n)
      costs.set(l, n, device_latency(devices[n], flops, planning_x));
  }
  return costs;
}

double stage_time(const LayerCostMatrix& costs, int i, int j, int n,
                  const ModelSpec& model,
                  const std::vector<DeviceProfile>& devices, int max_ctx) {
  if (i < 1 || j < i || j > costs.num_layers())
    throw ValidationError("stage_time: invalid layer range");
  if (memory_footprint(model, i, j, max_ctx) > devices[n].memory_budget)
    return kInfeasible;
  double sum = 0.0;
  for (int l = i; l <= j; ++l) sum += costs.at(l, n);
  return sum;
}

namespace {

void check_inputs(const LayerCostMatrix& costs, const ModelSpec& model,
                  const std::vector<DeviceProfile>& devices) {
  if (devices.empty())
    throw ValidationError("partition_model: at least one device required");
  if (costs.num_devices() != static_cast<int>(devices.size()) ||
      costs.num_layers() != model.num_layers)
    throw ValidationError("partition_model: cost matrix shape mismatch");
  if (model.num_layers < static_cast<int>(devices.size()))
    throw ValidationError(
        "partition_model: more devices than layers (stages must be nonempty)");
}

[[noreturn]] void report_infeasible(const ModelSpec& model,
                                    const std::vector<DeviceProfile>& devices,
                                    int max_ctx) {
  // Name the most constrained device: the one whose budget admits the
  // smallest layer span.
  int worst_span = model.num_layers + 1;
  std::string worst_id;
  std::int64_t worst_budget = 0;
  for (const auto& dev : devices) {
    int span = 0;
    while (span < model.num_layers &&
           memory_footprint(model, 1, span + 1, max_ctx) <= dev.memory_budget)
      ++span;
    if (span < worst_span) {
      worst_span = span;
      worst_id = dev.id;
      worst_budget = dev.memory_budget;
    }
  }
  throw InfeasibleError(
      "no layer assignment satisfies all memory budgets; tightest device '" +
      worst_id + "' (budget " + std::to_string(worst_budget) +
      " bytes) fits at most " + std::to_string(worst_span) + " layer(s)");
}

PartitionPlan plan_from_boundaries(const std::vector<int>& bounds,
                                   const std::vector<DeviceProfile>& devices,
                                   double bottleneck) {
  // bounds[n] = last layer of stage n; bounds.back() = L.
  PartitionPlan plan;
  int lo = 1;
  for (std::size_t n = 0; n < bounds.size(); ++n) {
    plan.stages.push_back({lo, bounds[n], devices[n].id});
    lo = bounds[n] + 1;
  }
  plan.bottleneck = bottleneck;
  return plan;
}

}  // namespace

PartitionPlan partition_model(const LayerCostMatrix& costs,
                              const ModelSpec& model,
                              const std::vector<DeviceProfile>& devices,
                              int max_ctx, PartitionStats* stats) {
  check_inputs(costs, model, devices);
  const int num_layers = model.num_layers;
  const int num_devices = static_cast<int>(devices.size());
  std::size_t evals = 0;

  // best[n][y]: min over assignments of layers 1..y to devices 0..n of the
  // slowest stage; split[n][y]: chosen last boundary of the prefix.
  std::vector<std::vector<double>> best(
      num_devices, std::vector<double>(num_layers + 1, kInfeasible));
  std::vector<std::vector<int>> split(num_devices,
                                      std::vector<int>(num_layers + 1, -1));

  for (int y = 1; y <= num_layers; ++y) {
    ++evals;
    best[0][y] = stage_time(costs, 1, y, 0, model, devices, max_ctx);
  }
  for (int n = 1; n < num_devices; ++n) {
    for (int y = n + 1; y <= num_layers; ++y) {
      double b = kInfeasible;
      int arg = -1;
      for (int l = n; l < y; ++l) {
        ++evals;
        const double tail = stage_time(costs, l + 1, y, n, model, devices, max_ctx);
        const double v = std::max(best[n - 1][l], tail);
        if (v < b) {  // strict: ties keep the smallest split point
          b = v;
          arg = l;
        }
      }
      best[n][y] = b;
      split[n][y] = arg;
    }
  }
  if (stats) stats->stage_time_evals = evals;

  if (!(best[num_devices - 1][num_layers] < kInfeasible))
    report_infeasible(model, devices, max_ctx);

  std::vector<int> bounds(num_devices);
  int y = num_layers;
  for (int n = num_devices - 1; n >= 1; --n) {
    bounds[n] = y;
    y = split[n][y];
  }
  bounds[0] = y;
  return plan_from_boundaries(bounds, devices, best[num_devices - 1][num_layers]);
}

PartitionPlan brute_force_partition(const LayerCostMatrix& costs,
                                    const ModelSpec& model,
                                    const std::vector<DeviceProfile>& devices,
                                    int max_ctx) {
  check_inputs(costs, model, devices);
  const int num_layers = model.num_layers;
  const int num_devices = static_cast<int>(devices.size());
  if (num_layers > 16 || num_devices > 5)
    throw ValidationError("brute_force_partition: instance too large");

  // Lexicographic key matching the DP tie-break: overall bottleneck, then the
  // final split point, then the prefix bottleneck, then the previous split...
  auto make_key = [&](const std::vector<int>& bounds,
                      const std::vector<double>& times) {
    std::vector<double> key;
    key.reserve(2 * bounds.size());
    for (int n = num_devices - 1; n >= 0; --n) {
      double prefix_max = 0.0;
      for (int m = 0; m <= n; ++m) prefix_max = std::max(prefix_max, times[m]);
      key.push_back(prefix_max);
      if (n >= 1) key.push_back(static_cast<double>(bounds[n - 1]));
    }
    return key;
  };

  std::vector<int> bounds(num_devices);
  bounds[num_devices - 1] = num_layers;
  std::vector<double> best_key;
  PartitionPlan best_plan;
  bool found = false;

  std::vector<double> times(num_devices);
  auto recurse = [&](auto&& self, int n, int lo) -> void {
    if (n == num_devices - 1) {
      if (num_layers - lo + 1 < 1) return;
      times[n] = stage_time(costs, lo, num_layers, n, model, devices, max_ctx);
      bool feasible = true;
      for (double t : times)
        if (!(t < kInfeasible)) feasible = false;
      if (!feasible) return;
      auto key = make_key(bounds, times);
      if (!found || key < best_key) {
        found = true;
        best_key = key;
        best_plan = plan_from_boundaries(bounds, devices, key[0]);
      }
      return;
    }
    const int remaining = num_devices - 1 - n;  // stages after this one
    for (int hi = lo; hi <= num_layers - remaining; ++hi) {
      bounds[n] = hi;
      times[n] = stage_time(costs, lo, hi, n, model, devices, max_ctx);
      self(self, n + 1, hi + 1);
    }
  };
  recurse(recurse, 0, 1);

  if (!found) report_infeasible(model, devices, max_ctx);
  return best_plan;
}

QTable build_q_table(const ModelSpec& model,
                     const std::vector<DeviceProfile>& devices,
                     const PartitionPlan& plan, int spacing,
                     ExecPolicy policy) {
  std::vector<DeviceProfile> stage_devices;
  std::vector<int> layer_counts;
  for (const auto& stage : plan.stages) {
    stage_devices.push_back(device_by_id(devices, stage.device_id));
    layer_counts.push_back(stage.layer_count());
  }
  return build_q_table(model, stage_devices, layer_counts, spacing, policy);
}

}  // namespace edgepipe
