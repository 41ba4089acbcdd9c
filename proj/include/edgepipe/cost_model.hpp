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

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "edgepipe/common.hpp"

namespace edgepipe {

/// Static description of a decoder-only transformer. Layer indices are
/// 1-based throughout; layer 1 is the embedding and layer L the output head
/// when flop overrides are enabled via vocab_equiv.
struct ModelSpec {
  int num_layers = 0;
  int hidden_size = 0;
  int ffn_size = 0;
  int num_heads = 1;
  int max_seq_len = 0;
  int bytes_per_param = 2;
  int bytes_per_kv_elem = 2;
  int bytes_per_activation_elem = 2;
  // 0 means "derive from the weight shapes": 4*H^2 + 2*H*H_ffn.
  std::int64_t params_per_layer = 0;
  // >0 enables per-token flop overrides of 2*H*vocab_equiv for the first and
  // last layer (embedding / output head).
  std::int64_t vocab_equiv = 0;

  std::int64_t effective_params_per_layer() const;
  void validate() const;  // throws ValidationError naming the field
};

struct DeviceProfile {
  std::string id;
  double throughput = 0.0;          // effective peak FLOP/s
  std::int64_t memory_budget = 0;   // bytes
  int util_knee = 1;                // smallest sub-sequence length with util=1

  void validate() const;
};

struct LinkProfile {
  double bandwidth = 0.0;  // bytes/s
  double latency = 0.0;    // seconds per message

  void validate() const;
};

/// FLOPs of one decoder layer processing x new tokens on top of y cached
/// context tokens: 2*x*(4H^2 + 2*H*H_ffn) for the projections/FFN plus
/// 4*H*x*(y + (x+1)/2) for causal attention. Strictly increasing in x and y;
/// additive under splitting x into consecutive chunks.
double layer_flops(const ModelSpec& model, int x, int y);

/// Override-aware variant: layers carrying a flop override (embedding/output
/// head when vocab_equiv > 0) cost 2*x*H*vocab_equiv regardless of context.
double layer_flops_at(const ModelSpec& model, int layer, int x, int y);

bool has_flop_override(const ModelSpec& model, int layer);

/// Accelerator utilization for a sub-sequence of length x: min(1, x/knee).
double device_utilization(const DeviceProfile& dev, int x);

/// flops / (throughput * util(x)).
double device_latency(const DeviceProfile& dev, double flops, int x);

/// Parameter plus KVCache bytes of layers [layer_lo, layer_hi] at a given
/// maximum context length.
std::int64_t memory_footprint(const ModelSpec& model, int layer_lo,
                              int layer_hi, int max_ctx);

enum class ParallelMethod { DP, SP, TP, PP };

ParallelMethod parse_method(const std::string& name);
std::string method_name(ParallelMethod m);

/// Activation elements exchanged for one full-sequence inference:
/// DP none, SP 2*L*S*H, TP 4*L*S*H, PP (N-1)*S*H.
std::uint64_t comm_volume(ParallelMethod method, int num_devices, int seq_len,
                          int hidden, int num_layers);

/// Sampled grid of the bottleneck-stage latency q(x, y) for a sub-sequence of
/// length x after y cached context tokens. Exact at grid points, bilinear in
/// between.
class QTable {
 public:
  QTable() = default;
  QTable(std::vector<int> xs, std::vector<int> ys, std::vector<double> values,
         int seq_limit);

  double at(std::size_t ix, std::size_t iy) const {
    return values_[ix * ys_.size() + iy];
  }
  /// Bilinear interpolation; throws ValidationError outside the grid or when
  /// x + y exceeds the sequence limit (if one is set).
  double lookup(int x, int y) const;

  bool covers(int x, int y) const;
  const std::vector<int>& xs() const { return xs_; }
  const std::vector<int>& ys() const { return ys_; }
  const std::vector<double>& values() const { return values_; }
  int seq_limit() const { return seq_limit_; }
  bool empty() const { return values_.empty(); }

 private:
  std::vector<int> xs_;      // sorted sub-sequence lengths, >= 1
  std::vector<int> ys_;      // sorted context lengths, >= 0
  std::vector<double> values_;  // row-major [x][y]
  int seq_limit_ = 0;        // 0 = bounded by the grid only
};

/// Fills the q grid analytically for a pipeline described by per-stage layer
/// counts and devices: q = max over stages of layers_j * latency_j(x, y).
/// Grid axes run up to S_max with the given sample spacing. Serial and
/// OpenMP fills produce bit-identical tables.
QTable build_q_table(const ModelSpec& model,
                     const std::vector<DeviceProfile>& stage_devices,
                     const std::vector<int>& stage_layer_counts, int spacing,
                     ExecPolicy policy = ExecPolicy::Parallel);

/// Parses a profile trace (UTF-8 CSV, header "x,y,seconds") into a QTable.
/// Duplicate (x,y) rows are averaged; missing grid cells are filled by
/// linear interpolation along rows, then columns.
QTable ingest_profile_trace(std::istream& in, const std::string& name);
QTable ingest_profile_trace_file(const std::string& path);

}  // namespace edgepipe
