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

#include "edgepipe/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>

namespace edgepipe {

std::int64_t ModelSpec::effective_params_per_layer() const {
  if (params_per_layer > 0) return params_per_layer;
  const std::int64_t h = hidden_size;
  const std::int64_t f = ffn_size;
  return 4 * h * h + 2 * h * f;
}

void ModelSpec::validate() const {
  if (num_layers < 1) throw ValidationError("model.num_layers: must be >= 1");
  if (hidden_size < 1) throw ValidationError("model.hidden_size: must be >= 1");
  if (ffn_size < 1) throw ValidationError("model.ffn_size: must be >= 1");
  if (num_heads < 1) throw ValidationError("model.num_heads: must be >= 1");
  if (hidden_size % num_heads != 0)
    throw ValidationError(
        "model.hidden_size: must be divisible by model.num_heads");
  if (max_seq_len < 1) throw ValidationError("model.max_seq_len: must be >= 1");
  if (bytes_per_param < 1)
    throw ValidationError("model.bytes_per_param: must be >= 1");
  if (bytes_per_kv_elem < 1)
    throw ValidationError("model.bytes_per_kv_elem: must be >= 1");
  if (bytes_per_activation_elem < 1)
    throw ValidationError("model.bytes_per_activation_elem: must be >= 1");
  if (params_per_layer < 0)
    throw ValidationError("model.params_per_layer: must be >= 0");
  if (vocab_equiv < 0) throw ValidationError("model.vocab_equiv: must be >= 0");
}

void DeviceProfile::validate() const {
  if (id.empty()) throw ValidationError("device.id: must be non-empty");
  if (!(throughput > 0))
    throw ValidationError("device '" + id + "': throughput must be > 0");
  if (memory_budget <= 0)
    throw ValidationError("device '" + id + "': memory_budget must be > 0");
  if (util_knee < 1)
    throw ValidationError("device '" + id + "': util_knee must be >= 1");
}

void LinkProfile::validate() const {
  if (!(bandwidth > 0)) throw ValidationError("link.bandwidth: must be > 0");
  if (latency < 0) throw ValidationError("link.latency: must be >= 0");
}

double layer_flops(const ModelSpec& model, int x, int y) {
  if (x < 1) throw ValidationError("layer_flops: x must be >= 1");
  if (y < 0) throw ValidationError("layer_flops: y must be >= 0");
  if (x + y > model.max_seq_len)
    throw ValidationError("layer_flops: x + y exceeds max_seq_len (" +
                          std::to_string(x + y) + " > " +
                          std::to_string(model.max_seq_len) + ")");
  const double h = model.hidden_size;
  const double f = model.ffn_size;
  const double linear = 2.0 * x * (4.0 * h * h + 2.0 * h * f);
  // 4*H*x*(y + (x+1)/2), kept as integer-valued terms.
  const double attention = 4.0 * h * x * y + 2.0 * h * x * (x + 1.0);
  return linear + attention;
}

bool has_flop_override(const ModelSpec& model, int layer) {
  if (model.vocab_equiv <= 0) return false;
  return layer == 1 || layer == model.num_layers;
}

double layer_flops_at(const ModelSpec& model, int layer, int x, int y) {
  if (has_flop_override(model, layer))
    return 2.0 * x * static_cast<double>(model.hidden_size) *
           static_cast<double>(model.vocab_equiv);
  return layer_flops(model, x, y);
}

double device_utilization(const DeviceProfile& dev, int x) {
  if (x < 1) throw ValidationError("device_utilization: x must be >= 1");
  return std::min(1.0, static_cast<double>(x) / dev.util_knee);
}

double device_latency(const DeviceProfile& dev, double flops, int x) {
  if (flops < 0) throw ValidationError("device_latency: flops must be >= 0");
  return flops / (dev.throughput * device_utilization(dev, x));
}

std::int64_t memory_footprint(const ModelSpec& model, int layer_lo,
                              int layer_hi, int max_ctx) {
  if (layer_lo < 1 || layer_hi < layer_lo || layer_hi > model.num_layers)
    throw ValidationError("memory_footprint: invalid layer range");
  if (max_ctx < 0) throw ValidationError("memory_footprint: max_ctx < 0");
  const std::int64_t span = layer_hi - layer_lo + 1;
  const std::int64_t params =
      model.effective_params_per_layer() * span * model.bytes_per_param;
  const std::int64_t kv = 2LL * span * max_ctx * model.hidden_size *
                          model.bytes_per_kv_elem;
  return params + kv;
}

ParallelMethod parse_method(const std::string& name) {
  if (name == "dp" || name == "DP") return ParallelMethod::DP;
  if (name == "sp" || name == "SP") return ParallelMethod::SP;
  if (name == "tp" || name == "TP") return ParallelMethod::TP;
  if (name == "pp_naive" || name == "pp" || name == "PP")
    return ParallelMethod::PP;
  throw ValidationError("unknown parallelism method '" + name + "'");
}

std::string method_name(ParallelMethod m) {
  switch (m) {
    case ParallelMethod::DP: return "dp";
    case ParallelMethod::SP: return "sp";
    case ParallelMethod::TP: return "tp";
    case ParallelMethod::PP: return "pp_naive";
  }
  return "?";
}

std::uint64_t comm_volume(ParallelMethod method, int num_devices, int seq_len,
                          int hidden, int num_layers) {
  if (num_devices < 1) throw ValidationError("comm_volume: N must be >= 1");
  if (seq_len < 1) throw ValidationError("comm_volume: S must be >= 1");
  const std::uint64_t s = seq_len;
  const std::uint64_t h = hidden;
  const std::uint64_t l = num_layers;
  const std::uint64_t n = num_devices;
  switch (method) {
    case ParallelMethod::DP: return 0;
    case ParallelMethod::SP: return 2 * l * s * h;
    case ParallelMethod::TP: return 4 * l * s * h;
    case ParallelMethod::PP: return (n - 1) * s * h;
  }
  return 0;
}

QTable::QTable(std::vector<int> xs, std::vector<int> ys,
               std::vector<double> values, int seq_limit)
    : xs_(std::move(xs)),
      ys_(std::move(ys)),
      values_(std::move(values)),
      seq_limit_(seq_limit) {
  if (xs_.empty() || ys_.empty())
    throw ValidationError("QTable: grid axes must be non-empty");
  if (values_.size() != xs_.size() * ys_.size())
    throw ValidationError("QTable: value count does not match the grid");
  if (!std::is_sorted(xs_.begin(), xs_.end()) ||
      std::adjacent_find(xs_.begin(), xs_.end()) != xs_.end())
    throw ValidationError("QTable: x samples must be strictly increasing");
  if (!std::is_sorted(ys_.begin(), ys_.end()) ||
      std::adjacent_find(ys_.begin(), ys_.end()) != ys_.end())
    throw ValidationError("QTable: y samples must be strictly increasing");
  if (xs_.front() < 1) throw ValidationError("QTable: x samples must be >= 1");
  if (ys_.front() < 0) throw ValidationError("QTable: y samples must be >= 0");
  for (double v : values_)
    if (!(v > 0)) throw ValidationError("QTable: latencies must be > 0");
}

bool QTable::covers(int x, int y) const {
  if (empty()) return false;
  return x >= xs_.front() && x <= xs_.back() && y >= ys_.front() &&
         y <= ys_.back();
}

namespace {

// Bracketing samples for v: value = (1-t)*f(i0) + t*f(i1). Requires
// axis.front() <= v <= axis.back().
void locate(const std::vector<int>& axis, int v, std::size_t& i0,
            std::size_t& i1, double& t) {
  auto it = std::upper_bound(axis.begin(), axis.end(), v);
  const std::size_t i = static_cast<std::size_t>(it - axis.begin()) - 1;
  if (axis[i] == v) {
    i0 = i1 = i;
    t = 0.0;
    return;
  }
  i0 = i;
  i1 = i + 1;
  t = static_cast<double>(v - axis[i0]) / (axis[i1] - axis[i0]);
}

}  // namespace

double QTable::lookup(int x, int y) const {
  if (empty()) throw ValidationError("q_lookup: empty table");
  if (x < 1 || y < 0) throw ValidationError("q_lookup: x >= 1, y >= 0 required");
  if (seq_limit_ > 0 && x + y > seq_limit_)
    throw ValidationError("q_lookup: x + y exceeds the sequence limit (" +
                          std::to_string(x + y) + " > " +
                          std::to_string(seq_limit_) + ")");
  if (!covers(x, y))
    throw ValidationError("q_lookup: (" + std::to_string(x) + ", " +
                          std::to_string(y) + ") is outside the sampled grid");

  std::size_t x0, x1, y0, y1;
  double tx, ty;
  locate(xs_, x, x0, x1, tx);
  locate(ys_, y, y0, y1, ty);
  if (x0 == x1 && y0 == y1) return at(x0, y0);
  const double v00 = at(x0, y0);
  const double v01 = at(x0, y1);
  const double v10 = at(x1, y0);
  const double v11 = at(x1, y1);
  return (1 - tx) * ((1 - ty) * v00 + ty * v01) +
         tx * ((1 - ty) * v10 + ty * v11);
}

namespace {

std::vector<int> grid_axis(int lo, int s_max, int spacing) {
  std::vector<int> axis;
  axis.push_back(lo);
  for (int v = spacing; v < s_max; v += spacing)
    if (v > lo) axis.push_back(v);
  if (axis.back() != s_max) axis.push_back(s_max);
  return axis;
}

}  // namespace

QTable build_q_table(const ModelSpec& model,
                     const std::vector<DeviceProfile>& stage_devices,
                     const std::vector<int>& stage_layer_counts, int spacing,
                     ExecPolicy policy) {
  model.validate();
  if (spacing < 1) throw ValidationError("build_q_table: spacing must be >= 1");
  if (stage_devices.empty() ||
      stage_devices.size() != stage_layer_counts.size())
    throw ValidationError(
        "build_q_table: stage devices and layer counts must match");

  const int s_max = model.max_seq_len;
  const std::vector<int> xs = grid_axis(1, s_max, spacing);
  const std::vector<int> ys = grid_axis(0, s_max, spacing);
  std::vector<double> values(xs.size() * ys.size());

  auto cell = [&](std::size_t ix, std::size_t iy) {
    const int x = xs[ix];
    // Clamp the context so the corner cells beyond x+y=S_max hold the value
    // at the boundary; interpolation near the edge stays monotone.
    const int y = std::min(ys[iy], s_max - x);
    const double flops = layer_flops(model, x, y);
    double worst = 0.0;
    for (std::size_t j = 0; j < stage_devices.size(); ++j) {
      const double t = stage_layer_counts[j] *
                       device_latency(stage_devices[j], flops, x);
      worst = std::max(worst, t);
    }
    return worst;
  };

  const std::int64_t nx = static_cast<std::int64_t>(xs.size());
  const std::int64_t ny = static_cast<std::int64_t>(ys.size());
  if (policy == ExecPolicy::Parallel) {
#pragma omp parallel for collapse(2) schedule(static)
    for (std::int64_t ix = 0; ix < nx; ++ix)
      for (std::int64_t iy = 0; iy < ny; ++iy)
        values[ix * ny + iy] = cell(ix, iy);
  } else {
    for (std::int64_t ix = 0; ix < nx; ++ix)
      for (std::int64_t iy = 0; iy < ny; ++iy)
        values[ix * ny + iy] = cell(ix, iy);
  }
  return QTable(xs, ys, std::move(values), s_max);
}

namespace {

// 1-D gap fill: linear interpolation between present neighbors, constant
// extension beyond the ends. `present` and `vals` are indexed by axis slot.
void fill_line(const std::vector<int>& axis, std::vector<char>& present,
               std::vector<double>& vals) {
  const std::size_t n = axis.size();
  std::size_t first = n, last = n;
  for (std::size_t i = 0; i < n; ++i)
    if (present[i]) {
      if (first == n) first = i;
      last = i;
    }
  if (first == n) return;  // nothing known on this line
  for (std::size_t i = 0; i < first; ++i) vals[i] = vals[first];
  for (std::size_t i = last + 1; i < n; ++i) vals[i] = vals[last];
  std::size_t prev = first;
  for (std::size_t i = first + 1; i <= last; ++i) {
    if (!present[i]) continue;
    for (std::size_t g = prev + 1; g < i; ++g) {
      const double t = static_cast<double>(axis[g] - axis[prev]) /
                       (axis[i] - axis[prev]);
      vals[g] = (1 - t) * vals[prev] + t * vals[i];
    }
    prev = i;
  }
  std::fill(present.begin(), present.end(), char(1));
}

}  // namespace

QTable ingest_profile_trace(std::istream& in, const std::string& name) {
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line))
    throw ValidationError(name + ": empty file, expected header 'x,y,seconds'");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x,y,seconds")
    throw ValidationError(name + ": line 1: expected header 'x,y,seconds', got '" +
                          line + "'");

  std::map<std::pair<int, int>, std::pair<double, int>> samples;  // sum, count
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string fx, fy, fs;
    if (!std::getline(ls, fx, ',') || !std::getline(ls, fy, ',') ||
        !std::getline(ls, fs))
      throw ValidationError(name + ": line " + std::to_string(line_no) +
                            ": expected 3 comma-separated fields");
    int x, y;
    double secs;
    std::size_t pos = 0;
    try {
      x = std::stoi(fx, &pos);
      if (pos != fx.size()) throw std::invalid_argument(fx);
      y = std::stoi(fy, &pos);
      if (pos != fy.size()) throw std::invalid_argument(fy);
      secs = std::stod(fs, &pos);
      if (pos != fs.size()) throw std::invalid_argument(fs);
    } catch (const std::exception&) {
      throw ValidationError(name + ": line " + std::to_string(line_no) +
                            ": malformed row '" + line + "'");
    }
    if (x < 1 || y < 0)
      throw ValidationError(name + ": line " + std::to_string(line_no) +
                            ": x must be >= 1 and y >= 0");
    if (!(secs > 0))
      throw ValidationError(name + ": line " + std::to_string(line_no) +
                            ": latency must be > 0");
    auto& slot = samples[{x, y}];
    slot.first += secs;
    slot.second += 1;
  }
  if (samples.empty())
    throw ValidationError(name + ": no samples after the header");

  std::set<int> xset, yset;
  for (const auto& [key, _] : samples) {
    xset.insert(key.first);
    yset.insert(key.second);
  }
  std::vector<int> xs(xset.begin(), xset.end());
  std::vector<int> ys(yset.begin(), yset.end());
  const std::size_t ny = ys.size();
  std::vector<double> values(xs.size() * ny, 0.0);
  std::vector<char> present(xs.size() * ny, 0);
  for (std::size_t ix = 0; ix < xs.size(); ++ix)
    for (std::size_t iy = 0; iy < ny; ++iy) {
      auto it = samples.find({xs[ix], ys[iy]});
      if (it != samples.end()) {
        values[ix * ny + iy] = it->second.first / it->second.second;
        present[ix * ny + iy] = 1;
      }
    }

  // Fill holes row-by-row (fixed x), then any fully-unknown rows per column.
  for (std::size_t ix = 0; ix < xs.size(); ++ix) {
    std::vector<char> p(present.begin() + ix * ny, present.begin() + (ix + 1) * ny);
    std::vector<double> v(values.begin() + ix * ny, values.begin() + (ix + 1) * ny);
    fill_line(ys, p, v);
    std::copy(p.begin(), p.end(), present.begin() + ix * ny);
    std::copy(v.begin(), v.end(), values.begin() + ix * ny);
  }
  for (std::size_t iy = 0; iy < ny; ++iy) {
    std::vector<char> p(xs.size());
    std::vector<double> v(xs.size());
    for (std::size_t ix = 0; ix < xs.size(); ++ix) {
      p[ix] = present[ix * ny + iy];
      v[ix] = values[ix * ny + iy];
    }
    fill_line(xs, p, v);
    for (std::size_t ix = 0; ix < xs.size(); ++ix) {
      present[ix * ny + iy] = p[ix];
      values[ix * ny + iy] = v[ix];
    }
  }
  for (char p : present)
    if (!p) throw ValidationError(name + ": grid could not be completed");

  return QTable(std::move(xs), std::move(ys), std::move(values), 0);
}

QTable ingest_profile_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path + ": cannot open profile trace");
  return ingest_profile_trace(in, path);
}

}  // namespace edgepipe
