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

#include "sparsetta/latency.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "sparsetta/error.h"

namespace sparsetta {
namespace {

void RequireTiming(double value, const char* field, std::size_t index) {
  if (!std::isfinite(value) || value < 0.0) {
    throw InputError(std::string("latency profile: ") + field +
                     " of backward index " + std::to_string(index) +
                     " must be finite and >= 0");
  }
}

}  // namespace

LatencyProfile::LatencyProfile(std::vector<LayerLatency> by_backward_index)
    : layers_(std::move(by_backward_index)) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerLatency& l = layers_[i];
    const std::size_t b = i + 1;
    RequireTiming(l.t_f, "t_f", b);
    RequireTiming(l.t_off, "t_off", b);
    RequireTiming(l.t_b, "t_b", b);
    RequireTiming(l.t_dw, "t_dw", b);
    RequireTiming(l.t_dx, "t_dx", b);
    RequireTiming(l.t_re, "t_re", b);
    if (l.t_dw + l.t_dx != l.t_b) {
      throw InputError("latency profile: t_dw + t_dx != t_b at backward index " +
                       std::to_string(b));
    }
    if (!l.has_params && l.t_dw != 0.0) {
      throw InputError("latency profile: parameter-free layer at backward index " +
                       std::to_string(b) + " has non-zero t_dw");
    }
    total_forward_ += l.t_f;
    total_backward_ += l.t_b;
    total_reforward_ += l.t_re;
  }
}

const LayerLatency& LatencyProfile::at(std::size_t backward_index) const {
  if (backward_index < 1 || backward_index > layers_.size()) {
    throw InputError("backward index " + std::to_string(backward_index) +
                     " out of range for profile of size " +
                     std::to_string(layers_.size()));
  }
  return layers_[backward_index - 1];
}

void DeviceSpec::Validate() const {
  if (!(peak_flops > 0.0)) throw InputError("device: peak_flops must be > 0");
  if (!(b_dram > 0.0)) throw InputError("device: b_dram must be > 0");
  if (!(b_cache > b_dram)) {
    throw InputError("device: b_cache must exceed b_dram");
  }
  if (!(phi_off > 0.0 && phi_off <= 1.0)) {
    throw InputError("device: phi_off must lie in (0, 1]");
  }
  if (!(proc_overhead_k >= 0.0)) {
    throw InputError("device: proc_overhead_k must be >= 0");
  }
  if (dvfs.empty()) throw InputError("device: dvfs curve is empty");
  for (std::size_t i = 0; i < dvfs.size(); ++i) {
    if (!(dvfs[i].freq_hz > 0.0)) {
      throw InputError("device: dvfs[" + std::to_string(i) +
                       "].freq_hz must be > 0");
    }
    if (i > 0) {
      if (!(dvfs[i].tem_c > dvfs[i - 1].tem_c)) {
        throw InputError("device: dvfs temperatures must be strictly increasing");
      }
      if (dvfs[i].freq_hz > dvfs[i - 1].freq_hz) {
        throw InputError("device: dvfs frequency must be non-increasing in temperature");
      }
    }
  }
  FrequencyAt(tem_off);
}

double DeviceSpec::FrequencyAt(double tem_c) const {
  if (dvfs.empty()) throw InputError("device: dvfs curve is empty");
  if (!std::isfinite(tem_c)) throw InputError("temperature must be finite");
  if (tem_c <= dvfs.front().tem_c) return dvfs.front().freq_hz;
  auto it = std::lower_bound(
      dvfs.begin(), dvfs.end(), tem_c,
      [](const DvfsPoint& p, double t) { return p.tem_c < t; });
  if (it == dvfs.end()) {
    throw InputError("temperature " + std::to_string(tem_c) +
                     " C is above the dvfs curve");
  }
  return it->freq_hz;
}

SystemState OfflineState(const DeviceSpec& device) {
  return SystemState{0, device.tem_off, device.phi_off};
}

double ComputePi1(const DeviceSpec& device, const SystemState& state) {
  if (state.n < 0) throw InputError("competing process count must be >= 0");
  const double throttle =
      device.FrequencyAt(device.tem_off) / device.FrequencyAt(state.tem_c);
  return throttle * (1.0 + device.proc_overhead_k * static_cast<double>(state.n));
}

double ComputePi2(const DeviceSpec& device, const SystemState& state) {
  if (!(state.phi >= 0.0 && state.phi <= 1.0)) {
    throw InputError("cache-hit rate must lie in [0, 1]");
  }
  if (!(device.b_dram > 0.0)) throw InputError("device: b_dram must be > 0");
  if (device.pi2_convention == Pi2Convention::kLiteral) {
    return state.phi + (1.0 - state.phi) * device.b_dram / device.b_cache;
  }
  const double miss_penalty = device.b_cache / device.b_dram;
  const double runtime = state.phi + (1.0 - state.phi) * miss_penalty;
  const double offline = device.phi_off + (1.0 - device.phi_off) * miss_penalty;
  return runtime / offline;
}

ExpansionFactors ComputeExpansionFactors(const DeviceSpec& device,
                                         const SystemState& state) {
  return {ComputePi1(device, state), ComputePi2(device, state)};
}

double ComputeEta(const LayerSpec& layer, const DeviceSpec& device) {
  if (layer.mem_traffic == 0) return kComputeBound;
  const double t_compute = static_cast<double>(layer.mac_count) / device.peak_flops;
  const double t_memory = static_cast<double>(layer.mem_traffic) / device.b_cache;
  return t_compute / t_memory;
}

double PredictLayerLatency(double t_off, double eta,
                           const ExpansionFactors& factors) {
  if (!std::isfinite(t_off) || t_off < 0.0) {
    throw InputError("offline latency must be finite and >= 0");
  }
  if (std::isnan(eta) || eta < 0.0) throw InputError("eta must be >= 0");
  if (!(factors.pi1 > 0.0) || !(factors.pi2 > 0.0)) {
    throw InputError("expansion factors must be > 0");
  }
  if (std::isinf(eta)) return factors.pi1 * t_off;
  // pi2 + (pi1 - pi2) * w is exactly pi when pi1 == pi2, so the offline state
  // reproduces t_off bit for bit.
  const double compute_share = eta / (eta + 1.0);
  double scale = factors.pi2 + (factors.pi1 - factors.pi2) * compute_share;
  scale = std::clamp(scale, std::min(factors.pi1, factors.pi2),
                     std::max(factors.pi1, factors.pi2));
  return scale * t_off;
}

BackwardMacs ComputeBackwardMacs(const LayerSpec& layer) {
  const double mac = static_cast<double>(layer.mac_count);
  BackwardMacs macs;
  switch (layer.kind) {
    case LayerKind::kConv2d:
    case LayerKind::kLinear:
    case LayerKind::kAttentionProjection:
    case LayerKind::kFeedForward:
      // dL/dW and dL/dX are each one GEMM of the forward size.
      macs = {mac, mac};
      break;
    case LayerKind::kBatchNorm:
    case LayerKind::kLayerNorm:
      // gamma/beta gradients: one MAC per element; input gradient: two.
      macs = {mac / 2.0, mac};
      break;
    case LayerKind::kActivation:
    case LayerKind::kPooling:
      macs = {0.0, mac};
      break;
  }
  if (!layer.has_params) macs.weight = 0.0;
  return macs;
}

BackwardSplit SplitBackward(double t_b, const LayerSpec& layer) {
  if (!std::isfinite(t_b) || t_b < 0.0) {
    throw InputError("backward latency must be finite and >= 0");
  }
  const BackwardMacs macs = ComputeBackwardMacs(layer);
  if (macs.weight <= 0.0) return {0.0, t_b};
  BackwardSplit split;
  if (macs.weight == macs.input) {
    split.t_dw = 0.5 * t_b;
  } else {
    split.t_dw = t_b * (macs.weight / (macs.weight + macs.input));
  }
  split.t_dx = t_b - split.t_dw;
  // Nudge t_dx by single ulps until the parts add back to t_b exactly.
  for (int i = 0; i < 8 && split.t_dw + split.t_dx != t_b; ++i) {
    const double toward = split.t_dw + split.t_dx > t_b ? 0.0 : t_b;
    split.t_dx = std::nextafter(split.t_dx, toward);
  }
  if (split.t_dw + split.t_dx != t_b) split = {0.0, t_b};
  return split;
}

LatencyProfile BuildProfile(const Network& network,
                            const OfflineProfile& offline,
                            const DeviceSpec& device,
                            const ExpansionFactors& factors) {
  device.Validate();
  const std::size_t n = network.size();
  std::vector<const OfflineLayerTiming*> by_id(n, nullptr);
  for (const OfflineLayerTiming& t : offline.layers) {
    if (t.layer_id < 0 || static_cast<std::size_t>(t.layer_id) >= n) {
      throw InputError("offline profile: layer_id " + std::to_string(t.layer_id) +
                       " is not in the network");
    }
    if (by_id[t.layer_id] != nullptr) {
      throw InputError("offline profile: duplicate layer_id " +
                       std::to_string(t.layer_id));
    }
    by_id[t.layer_id] = &t;
  }

  std::vector<LayerLatency> layers(n);
  for (std::size_t id = 0; id < n; ++id) {
    if (by_id[id] == nullptr) {
      throw InputError("offline profile: missing layer " + std::to_string(id));
    }
    const OfflineLayerTiming& timing = *by_id[id];
    const LayerSpec& spec = network.layer(id);
    LayerLatency& out = layers[network.BackwardIndex(id) - 1];
    out.has_params = spec.has_params;
    out.eta = ComputeEta(spec, device);
    out.t_off = timing.t_b_off;
    out.t_f = PredictLayerLatency(timing.t_f, out.eta, factors);
    out.t_b = PredictLayerLatency(timing.t_b_off, out.eta, factors);
    out.t_re = PredictLayerLatency(timing.t_re_off, out.eta, factors);
    const BackwardSplit split = SplitBackward(out.t_b, spec);
    out.t_dw = split.t_dw;
    out.t_dx = split.t_dx;
  }
  return LatencyProfile(std::move(layers));
}

LatencyProfile BuildProfile(const Network& network,
                            const OfflineProfile& offline,
                            const DeviceSpec& device,
                            const SystemState& state) {
  return BuildProfile(network, offline, device,
                      ComputeExpansionFactors(device, state));
}

}  // namespace sparsetta
