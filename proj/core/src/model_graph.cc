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

#include "sparsetta/model_graph.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <utility>

#include "sparsetta/error.h"

namespace sparsetta {
namespace {

constexpr std::array<std::pair<LayerKind, std::string_view>, 8> kKindNames = {{
    {LayerKind::kConv2d, "conv2d"},
    {LayerKind::kLinear, "linear"},
    {LayerKind::kBatchNorm, "batchnorm"},
    {LayerKind::kLayerNorm, "layernorm"},
    {LayerKind::kActivation, "activation"},
    {LayerKind::kPooling, "pooling"},
    {LayerKind::kAttentionProjection, "attention-projection"},
    {LayerKind::kFeedForward, "feedforward"},
}};

std::uint64_t Positive(std::int64_t value, std::string_view field,
                       LayerKind kind) {
  if (value <= 0) {
    std::ostringstream msg;
    msg << LayerKindName(kind) << ": hyperparameter '" << field
        << "' must be positive (got " << value << ")";
    throw InputError(msg.str());
  }
  return static_cast<std::uint64_t>(value);
}

std::int64_t OrDefault(std::int64_t value, std::int64_t fallback) {
  return value > 0 ? value : fallback;
}

// Channel count for elementwise kinds: conv-style channels, else hidden.
std::int64_t ElementwiseChannels(const LayerHyperparams& hp) {
  if (hp.out_channels > 0) return hp.out_channels;
  if (hp.in_channels > 0) return hp.in_channels;
  return hp.hidden;
}

std::int64_t ElementwiseSpatial(const LayerHyperparams& hp) {
  if (hp.out_channels > 0 || hp.in_channels > 0) {
    return OrDefault(hp.height, 1) * OrDefault(hp.width, 1);
  }
  return OrDefault(hp.tokens, 1);
}

bool WithinRelative(std::uint64_t actual, std::uint64_t expected,
                    double tolerance) {
  const double a = static_cast<double>(actual);
  const double e = static_cast<double>(expected);
  return std::abs(a - e) <= tolerance * std::max(1.0, e);
}

}  // namespace

std::string_view LayerKindName(LayerKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

LayerKind ParseLayerKind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  throw InputError("unknown layer kind '" + std::string(name) + "'");
}

bool KindHasParams(LayerKind kind) {
  return kind != LayerKind::kActivation && kind != LayerKind::kPooling;
}

LayerShape DeriveShape(LayerKind kind, const LayerHyperparams& hp) {
  switch (kind) {
    case LayerKind::kConv2d: {
      const auto c = static_cast<std::int64_t>(Positive(hp.out_channels, "out_channels", kind));
      const auto h = static_cast<std::int64_t>(Positive(hp.height, "height", kind));
      const auto w = static_cast<std::int64_t>(Positive(hp.width, "width", kind));
      return {c, c * h * w};
    }
    case LayerKind::kLinear: {
      const auto out = static_cast<std::int64_t>(Positive(hp.out_features, "out_features", kind));
      return {out, OrDefault(hp.tokens, 1) * out};
    }
    case LayerKind::kAttentionProjection: {
      const auto hidden = static_cast<std::int64_t>(Positive(hp.hidden, "hidden", kind));
      const std::int64_t out = OrDefault(hp.out_features, hidden);
      return {out, OrDefault(hp.tokens, 1) * out};
    }
    case LayerKind::kFeedForward: {
      const auto hidden = static_cast<std::int64_t>(Positive(hp.hidden, "hidden", kind));
      return {hidden, OrDefault(hp.tokens, 1) * hidden};
    }
    case LayerKind::kLayerNorm: {
      const auto hidden = static_cast<std::int64_t>(Positive(hp.hidden, "hidden", kind));
      return {hidden, OrDefault(hp.tokens, 1) * hidden};
    }
    case LayerKind::kBatchNorm:
    case LayerKind::kActivation:
    case LayerKind::kPooling: {
      const auto c = static_cast<std::int64_t>(
          Positive(ElementwiseChannels(hp), "out_channels", kind));
      return {c, c * ElementwiseSpatial(hp)};
    }
  }
  throw InputError("unhandled layer kind");
}

LayerCosts DeriveCosts(LayerKind kind, const LayerHyperparams& hp,
                       int element_width) {
  if (element_width <= 0) throw InputError("element width must be positive");
  const std::uint64_t bytes = static_cast<std::uint64_t>(element_width);
  const std::uint64_t batch = Positive(hp.batch, "batch", kind);

  switch (kind) {
    case LayerKind::kConv2d: {
      const auto cin = Positive(hp.in_channels, "in_channels", kind);
      const auto cout = Positive(hp.out_channels, "out_channels", kind);
      const auto kh = Positive(hp.kernel_h, "kernel_h", kind);
      const auto kw = Positive(hp.kernel_w, "kernel_w", kind);
      const auto h = Positive(hp.height, "height", kind);
      const auto w = Positive(hp.width, "width", kind);
      const auto hin = Positive(OrDefault(hp.in_height, hp.height), "in_height", kind);
      const auto win = Positive(OrDefault(hp.in_width, hp.width), "in_width", kind);
      const std::uint64_t weights = kh * kw * cin * cout;
      const std::uint64_t input = batch * cin * hin * win;
      const std::uint64_t output = batch * cout * h * w;
      return {batch * kh * kw * cin * cout * h * w,
              bytes * (weights + input + output)};
    }
    case LayerKind::kLinear:
    case LayerKind::kAttentionProjection: {
      std::uint64_t in = 0;
      std::uint64_t out = 0;
      if (kind == LayerKind::kLinear) {
        in = Positive(hp.in_features, "in_features", kind);
        out = Positive(hp.out_features, "out_features", kind);
      } else {
        in = Positive(hp.hidden, "hidden", kind);
        out = Positive(OrDefault(hp.out_features, hp.hidden), "out_features", kind);
      }
      const std::uint64_t rows = batch * static_cast<std::uint64_t>(OrDefault(hp.tokens, 1));
      return {rows * in * out, bytes * (in * out + rows * in + rows * out)};
    }
    case LayerKind::kFeedForward: {
      // Two projections hidden -> ffn_hidden -> hidden; the intermediate
      // activation is written once and read once.
      const auto hidden = Positive(hp.hidden, "hidden", kind);
      const auto ffn = Positive(hp.ffn_hidden, "ffn_hidden", kind);
      const std::uint64_t rows = batch * static_cast<std::uint64_t>(OrDefault(hp.tokens, 1));
      return {rows * 2 * hidden * ffn,
              bytes * (2 * hidden * ffn + 2 * rows * hidden + 2 * rows * ffn)};
    }
    case LayerKind::kBatchNorm:
    case LayerKind::kLayerNorm: {
      // Scale + shift: one multiply-add pair per element.
      const LayerShape shape = DeriveShape(kind, hp);
      const auto elements = batch * static_cast<std::uint64_t>(shape.out_elements);
      const auto params = 2 * static_cast<std::uint64_t>(shape.channels);
      return {2 * elements, bytes * (params + 2 * elements)};
    }
    case LayerKind::kActivation: {
      const LayerShape shape = DeriveShape(kind, hp);
      const auto elements = batch * static_cast<std::uint64_t>(shape.out_elements);
      return {elements, bytes * 2 * elements};
    }
    case LayerKind::kPooling: {
      const auto c = Positive(ElementwiseChannels(hp), "out_channels", kind);
      const auto kh = Positive(hp.kernel_h, "kernel_h", kind);
      const auto kw = Positive(hp.kernel_w, "kernel_w", kind);
      const auto h = Positive(hp.height, "height", kind);
      const auto w = Positive(hp.width, "width", kind);
      const auto hin = Positive(OrDefault(hp.in_height, hp.height * hp.kernel_h), "in_height", kind);
      const auto win = Positive(OrDefault(hp.in_width, hp.width * hp.kernel_w), "in_width", kind);
      const std::uint64_t output = batch * c * h * w;
      return {output * kh * kw, bytes * (batch * c * hin * win + output)};
    }
  }
  throw InputError("unhandled layer kind");
}

LayerCosts DeriveCosts(const LayerSpec& layer, int element_width) {
  if (!layer.hyperparams) {
    throw InputError("layer " + std::to_string(layer.id) +
                     ": hyperparams required to derive costs");
  }
  return DeriveCosts(layer.kind, *layer.hyperparams, element_width);
}

Network::Network(std::string name, std::vector<LayerSpec> layers,
                 int element_width)
    : name_(std::move(name)),
      layers_(std::move(layers)),
      element_width_(element_width) {
  if (layers_.empty()) throw InputError("empty network");
  if (element_width_ <= 0) throw InputError("element width must be positive");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerSpec& l = layers_[i];
    const std::string where = "layer " + std::to_string(l.id);
    if (l.id != static_cast<int>(i)) {
      throw InputError("layer ids must be contiguous from 0: position " +
                       std::to_string(i) + " has id " + std::to_string(l.id));
    }
    if (l.channels < 1) throw InputError(where + ": channels must be >= 1");
    if (l.out_elements < 1) {
      throw InputError(where + ": out_elements must be >= 1");
    }
    if (l.has_params && !KindHasParams(l.kind)) {
      throw InputError(where + ": " + std::string(LayerKindName(l.kind)) +
                       " layers cannot have parameters");
    }
    if (l.hyperparams) {
      const LayerCosts derived = DeriveCosts(l, element_width_);
      if (!WithinRelative(l.mac_count, derived.mac_count, 1e-3) ||
          !WithinRelative(l.mem_traffic, derived.mem_traffic, 1e-3)) {
        std::ostringstream msg;
        msg << where << ": costs (mac " << l.mac_count << ", bytes "
            << l.mem_traffic << ") disagree with hyperparams (mac "
            << derived.mac_count << ", bytes " << derived.mem_traffic << ")";
        throw InputError(msg.str());
      }
    }
  }
}

const LayerSpec& Network::layer(std::size_t forward_id) const {
  if (forward_id >= layers_.size()) {
    throw InputError("forward id " + std::to_string(forward_id) + " out of range");
  }
  return layers_[forward_id];
}

const LayerSpec& Network::layer_at_backward(std::size_t backward_index) const {
  return layers_[ForwardId(backward_index)];
}

std::size_t Network::BackwardIndex(std::size_t forward_id) const {
  if (forward_id >= layers_.size()) {
    throw InputError("forward id " + std::to_string(forward_id) + " out of range");
  }
  return layers_.size() - forward_id;
}

std::size_t Network::ForwardId(std::size_t backward_index) const {
  if (backward_index < 1 || backward_index > layers_.size()) {
    throw InputError("backward index " + std::to_string(backward_index) +
                     " out of range");
  }
  return layers_.size() - backward_index;
}

UpdateStrategy UpdateStrategy::FromIndices(
    std::size_t layer_count, const std::vector<std::size_t>& indices) {
  UpdateStrategy s(layer_count);
  for (std::size_t b : indices) s.Select(b);
  return s;
}

UpdateStrategy UpdateStrategy::Full(const LatencyProfile& profile) {
  UpdateStrategy s(profile.size());
  for (std::size_t b = 1; b <= profile.size(); ++b) {
    if (profile.at(b).has_params) s.Select(b);
  }
  return s;
}

bool UpdateStrategy::contains(std::size_t backward_index) const {
  return backward_index >= 1 && backward_index <= selected_.size() &&
         selected_[backward_index - 1] != 0;
}

void UpdateStrategy::Select(std::size_t backward_index) {
  if (backward_index < 1 || backward_index > selected_.size()) {
    throw InputError("backward index " + std::to_string(backward_index) +
                     " out of range for strategy of size " +
                     std::to_string(selected_.size()));
  }
  selected_[backward_index - 1] = 1;
}

void UpdateStrategy::Clear(std::size_t backward_index) {
  if (backward_index >= 1 && backward_index <= selected_.size()) {
    selected_[backward_index - 1] = 0;
  }
}

std::size_t UpdateStrategy::count() const {
  return static_cast<std::size_t>(
      std::count(selected_.begin(), selected_.end(), std::uint8_t{1}));
}

std::size_t UpdateStrategy::deepest() const {
  for (std::size_t b = selected_.size(); b >= 1; --b) {
    if (selected_[b - 1]) return b;
  }
  return 0;
}

std::vector<std::size_t> UpdateStrategy::indices() const {
  std::vector<std::size_t> out;
  for (std::size_t b = 1; b <= selected_.size(); ++b) {
    if (selected_[b - 1]) out.push_back(b);
  }
  return out;
}

void ValidateStrategy(const Network& network, const UpdateStrategy& strategy) {
  if (strategy.size() != network.size()) {
    throw InputError("strategy covers " + std::to_string(strategy.size()) +
                     " layers, network has " + std::to_string(network.size()));
  }
  for (std::size_t b : strategy.indices()) {
    if (!network.layer_at_backward(b).has_params) {
      throw InputError("backward index " + std::to_string(b) +
                       " selects a parameter-free layer");
    }
  }
}

StrategyCost ComputeStrategyCost(const UpdateStrategy& strategy,
                                 const LatencyProfile& profile) {
  if (strategy.size() != profile.size()) {
    throw InputError("strategy covers " + std::to_string(strategy.size()) +
                     " layers, profile has " + std::to_string(profile.size()));
  }
  StrategyCost cost;
  const std::size_t deepest = strategy.deepest();
  if (deepest == 0) return cost;
  for (std::size_t b = 1; b <= deepest; ++b) {
    const LayerLatency& l = profile.at(b);
    if (strategy.contains(b)) {
      if (!l.has_params) {
        throw InputError("backward index " + std::to_string(b) +
                         " selects a parameter-free layer");
      }
      cost.t_backward += l.t_dw;
    }
  }
  for (std::size_t m = 1; m < deepest; ++m) cost.t_backward += profile.at(m).t_dx;
  for (std::size_t m = 1; m <= deepest; ++m) cost.t_reforward += profile.at(m).t_re;
  cost.t_total_extra = cost.t_backward + cost.t_reforward;
  return cost;
}

StrategyCost ComputeStrategyCost(const Network& network,
                                 const UpdateStrategy& strategy,
                                 const LatencyProfile& profile) {
  ValidateStrategy(network, strategy);
  if (profile.size() != network.size()) {
    throw InputError("profile covers " + std::to_string(profile.size()) +
                     " layers, network has " + std::to_string(network.size()));
  }
  return ComputeStrategyCost(strategy, profile);
}

}  // namespace sparsetta
