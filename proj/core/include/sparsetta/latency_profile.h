/* Copyright 2026 The sparsetta Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef SPARSETTA_LATENCY_PROFILE_H_
#define SPARSETTA_LATENCY_PROFILE_H_

#include <cstddef>
#include <vector>

namespace sparsetta {

// Runtime timings of one layer, in milliseconds. `t_b` is always exactly
// `t_dw + t_dx`.
struct LayerLatency {
  bool has_params = true;
  double t_f = 0.0;    // forward
  double t_off = 0.0;  // offline backward
  double t_b = 0.0;    // runtime backward
  double t_dw = 0.0;   // weight-gradient share of t_b
  double t_dx = 0.0;   // activation-gradient share of t_b
  double t_re = 0.0;   // reforward
  double eta = 0.0;    // compute-to-memory time ratio
};

// Per-layer latencies indexed by backward index (1 = output layer) plus the
// end-to-end totals of a full update.
class LatencyProfile {
 public:
  LatencyProfile() = default;

  // `by_backward_index[0]` describes backward index 1. Throws InputError on
  // negative/non-finite timings, t_b != t_dw + t_dx, or a parameter-free
  // layer with non-zero t_dw.
  explicit LatencyProfile(std::vector<LayerLatency> by_backward_index);

  std::size_t size() const { return layers_.size(); }
  bool empty() const { return layers_.empty(); }

  // 1-based backward index.
  const LayerLatency& at(std::size_t backward_index) const;
  const std::vector<LayerLatency>& layers() const { return layers_; }

  double total_forward() const { return total_forward_; }
  double total_backward() const { return total_backward_; }
  double total_reforward() const { return total_reforward_; }
  // T = T_f + T_b + T_re.
  double total() const { return total_forward_ + total_backward_ + total_reforward_; }

 private:
  std::vector<LayerLatency> layers_;
  double total_forward_ = 0.0;
  double total_backward_ = 0.0;
  double total_reforward_ = 0.0;
};

}  // namespace sparsetta

#endif  // SPARSETTA_LATENCY_PROFILE_H_
