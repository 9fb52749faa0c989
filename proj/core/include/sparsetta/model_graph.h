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

// Layer-chain model of a DNN: per-layer analytic cost attributes and the
// backward/reforward cost of a sparse update strategy.
//
// Two index spaces are used throughout. Forward ids run 0..N-1 from the input
// side and are what files use. Backward indices run 1..N from the output layer
// (backward index = N - forward id) and are what the scheduler uses.

#ifndef SPARSETTA_MODEL_GRAPH_H_
#define SPARSETTA_MODEL_GRAPH_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sparsetta/latency_profile.h"

namespace sparsetta {

enum class LayerKind {
  kConv2d,
  kLinear,
  kBatchNorm,
  kLayerNorm,
  kActivation,
  kPooling,
  kAttentionProjection,
  kFeedForward,
};

std::string_view LayerKindName(LayerKind kind);
// Accepts the names produced by LayerKindName ("conv2d", "batchnorm", ...).
LayerKind ParseLayerKind(std::string_view name);
// False for activation and pooling layers.
bool KindHasParams(LayerKind kind);

// Shape record used to derive analytic costs. Zero means "not given"; which
// fields are required depends on the layer kind.
struct LayerHyperparams {
  std::int64_t batch = 1;
  std::int64_t in_channels = 0;
  std::int64_t out_channels = 0;
  std::int64_t kernel_h = 0;
  std::int64_t kernel_w = 0;
  std::int64_t in_height = 0;  // defaults to the output height
  std::int64_t in_width = 0;
  std::int64_t height = 0;  // output spatial dims
  std::int64_t width = 0;
  std::int64_t in_features = 0;
  std::int64_t out_features = 0;
  std::int64_t tokens = 0;
  std::int64_t hidden = 0;
  std::int64_t ffn_hidden = 0;
};

struct LayerSpec {
  int id = 0;
  LayerKind kind = LayerKind::kConv2d;
  bool has_params = true;
  std::int64_t channels = 1;      // output channel count N_c
  std::int64_t out_elements = 1;  // output elements per sample
  std::uint64_t mac_count = 0;    // forward MACs per batch
  std::uint64_t mem_traffic = 0;  // forward bytes per batch
  std::optional<LayerHyperparams> hyperparams;
};

struct LayerCosts {
  std::uint64_t mac_count = 0;
  std::uint64_t mem_traffic = 0;
};

struct LayerShape {
  std::int64_t channels = 0;
  std::int64_t out_elements = 0;
};

// Standard analytic MAC count and forward memory traffic (weights read, input
// read, output written) at `element_width` bytes per element. Backward traffic
// is not modeled. Throws InputError when the hyperparams are missing or carry
// non-positive required dimensions.
LayerCosts DeriveCosts(LayerKind kind, const LayerHyperparams& hp,
                       int element_width = 4);
LayerCosts DeriveCosts(const LayerSpec& layer, int element_width = 4);

// Output channel count and per-sample output elements implied by `hp`.
LayerShape DeriveShape(LayerKind kind, const LayerHyperparams& hp);

class Network {
 public:
  // Validates contiguous ids, positive channels/out_elements, has_params vs
  // kind, and hyperparams/cost agreement within 0.1% relative.
  Network(std::string name, std::vector<LayerSpec> layers,
          int element_width = 4);

  const std::string& name() const { return name_; }
  int element_width() const { return element_width_; }
  std::size_t size() const { return layers_.size(); }
  const std::vector<LayerSpec>& layers() const { return layers_; }

  const LayerSpec& layer(std::size_t forward_id) const;
  const LayerSpec& layer_at_backward(std::size_t backward_index) const;

  std::size_t BackwardIndex(std::size_t forward_id) const;
  std::size_t ForwardId(std::size_t backward_index) const;

 private:
  std::string name_;
  std::vector<LayerSpec> layers_;
  int element_width_ = 4;
};

// Binary selection over backward indices 1..N.
class UpdateStrategy {
 public:
  UpdateStrategy() = default;
  explicit UpdateStrategy(std::size_t layer_count)
      : selected_(layer_count, 0) {}

  static UpdateStrategy FromIndices(std::size_t layer_count,
                                    const std::vector<std::size_t>& indices);
  // Every layer with has_params set.
  static UpdateStrategy Full(const LatencyProfile& profile);

  std::size_t size() const { return selected_.size(); }
  bool contains(std::size_t backward_index) const;
  void Select(std::size_t backward_index);
  void Clear(std::size_t backward_index);

  bool empty() const { return deepest() == 0; }
  std::size_t count() const;
  // Largest selected backward index, 0 when nothing is selected.
  std::size_t deepest() const;
  // Selected backward indices in ascending order.
  std::vector<std::size_t> indices() const;

  friend bool operator==(const UpdateStrategy&, const UpdateStrategy&) = default;

 private:
  std::vector<std::uint8_t> selected_;
};

struct StrategyCost {
  double t_backward = 0.0;
  double t_reforward = 0.0;
  double t_total_extra = 0.0;
};

// Throws InputError if the strategy length differs from the network or a
// parameter-free layer is selected.
void ValidateStrategy(const Network& network, const UpdateStrategy& strategy);

// Closed form with d = deepest(S):
//   t_backward  = sum_{b in S} t_dw[b] + sum_{m=1}^{d-1} t_dx[m]
//   t_reforward = sum_{m=1}^{d} t_re[m]
StrategyCost ComputeStrategyCost(const UpdateStrategy& strategy,
                                 const LatencyProfile& profile);
StrategyCost ComputeStrategyCost(const Network& network,
                                 const UpdateStrategy& strategy,
                                 const LatencyProfile& profile);

}  // namespace sparsetta

#endif  // SPARSETTA_MODEL_GRAPH_H_
