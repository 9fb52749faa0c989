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

// Runtime layer latency prediction.
//
// An offline latency t_off is split into a compute part and a memory part by
// the layer's compute-to-memory ratio eta, and each part is inflated by its
// own expansion coefficient:
//
//   t = (pi1 * eta / (eta + 1) + pi2 / (eta + 1)) * t_off
//
// pi1 captures DVFS throttling and round-robin process switching, pi2 the
// extra DRAM traffic caused by a lower cache-hit rate.

#ifndef SPARSETTA_LATENCY_H_
#define SPARSETTA_LATENCY_H_

#include <cstdint>
#include <limits>
#include <vector>

#include "sparsetta/latency_profile.h"
#include "sparsetta/model_graph.h"

namespace sparsetta {

struct DvfsPoint {
  double tem_c = 0.0;
  double freq_hz = 0.0;
};

enum class Pi2Convention {
  // Runtime memory time over offline memory time, >= 1 when phi <= phi_off.
  kNormalized,
  // phi + (1 - phi) * b_dram / b_cache, as printed; below 1 on real devices.
  kLiteral,
};

struct DeviceSpec {
  double peak_flops = 0.0;  // MAC/s
  double b_cache = 0.0;     // bytes/s
  double b_dram = 0.0;      // bytes/s
  std::vector<DvfsPoint> dvfs;  // ascending temperature, non-increasing freq
  double proc_overhead_k = 0.0;  // f(n) = k * n
  double tem_off = 25.0;
  double phi_off = 1.0;
  Pi2Convention pi2_convention = Pi2Convention::kNormalized;

  void Validate() const;

  // Piecewise-constant lookup. Between knots the lower (hotter) frequency
  // applies; below the first knot the first knot applies. Throws above the
  // last knot.
  double FrequencyAt(double tem_c) const;
};

struct SystemState {
  std::int64_t n = 0;  // competing processes
  double tem_c = 25.0;
  double phi = 1.0;  // cache-hit rate
};

SystemState OfflineState(const DeviceSpec& device);

struct ExpansionFactors {
  double pi1 = 1.0;
  double pi2 = 1.0;
};

// freq(tem_off) / freq(tem_on) * (1 + k * n)
double ComputePi1(const DeviceSpec& device, const SystemState& state);
double ComputePi2(const DeviceSpec& device, const SystemState& state);
ExpansionFactors ComputeExpansionFactors(const DeviceSpec& device,
                                         const SystemState& state);

// Sentinel eta for layers with no memory traffic.
inline constexpr double kComputeBound = std::numeric_limits<double>::infinity();

// (c / F) / (m / b_cache). Returns kComputeBound when m == 0.
double ComputeEta(const LayerSpec& layer, const DeviceSpec& device);

double PredictLayerLatency(double t_off, double eta,
                           const ExpansionFactors& factors);

struct BackwardSplit {
  double t_dw = 0.0;
  double t_dx = 0.0;
};

// Analytic MACs of the weight-gradient and input-gradient computations.
struct BackwardMacs {
  double weight = 0.0;
  double input = 0.0;
};
BackwardMacs ComputeBackwardMacs(const LayerSpec& layer);

// Splits t_b by the MAC proportion of weight vs input gradients. The result
// always satisfies t_dw + t_dx == t_b exactly.
BackwardSplit SplitBackward(double t_b, const LayerSpec& layer);

struct OfflineLayerTiming {
  int layer_id = 0;
  double t_f = 0.0;
  double t_b_off = 0.0;
  double t_re_off = 0.0;
};

// Offline measurements in forward order.
struct OfflineProfile {
  std::vector<OfflineLayerTiming> layers;
};

// Calibrates every offline timing (forward, backward and reforward) with the
// layer's eta and the given factors, then splits backward time.
LatencyProfile BuildProfile(const Network& network,
                            const OfflineProfile& offline,
                            const DeviceSpec& device,
                            const ExpansionFactors& factors);
LatencyProfile BuildProfile(const Network& network,
                            const OfflineProfile& offline,
                            const DeviceSpec& device,
                            const SystemState& state);

}  // namespace sparsetta

#endif  // SPARSETTA_LATENCY_H_
