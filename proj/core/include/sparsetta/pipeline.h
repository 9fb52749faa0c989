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

// Discrete simulation of the forward -> backward -> reforward adaptation loop.
//
// Each batch: (1) forward: draw per-layer output moments from a drifting
// synthetic environment and score layer importance against the EMA history;
// (2) backward: predict runtime latencies from the system state observed at
// forward start, solve for the update strategy, execute it against a
// ground-truth executor that sees the instantaneous state plus jitter, and
// apply a proxy update to the model; (3) reforward: re-run only the layers
// from the earliest updated one to the output.

#ifndef SPARSETTA_PIPELINE_H_
#define SPARSETTA_PIPELINE_H_

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sparsetta/importance.h"
#include "sparsetta/latency.h"
#include "sparsetta/model_graph.h"
#include "sparsetta/scheduler.h"

namespace sparsetta {

struct ChannelDistribution {
  double mean = 0.0;
  double var = 1.0;
};

// Per layer (forward order), per channel.
using LayerDistributions = std::vector<std::vector<ChannelDistribution>>;

struct ShiftEvent {
  std::int64_t batch_index = 0;
  std::vector<int> layers;  // forward ids
  double mean_offset_sigma = 0.0;  // in units of the base std deviation
  double var_scale = 1.0;
};

struct EnvironmentSpec {
  LayerDistributions base;
  // Values per channel contributed by one sample (out_elements / channels).
  std::vector<std::int64_t> spatial;
  std::vector<ShiftEvent> shifts;  // strictly increasing batch_index
  std::int64_t batch_size = 4;
  // Report exact distribution parameters instead of sampled moments.
  bool infinite_batch = false;

  void Validate() const;
  std::size_t layer_count() const { return base.size(); }
  // Base distribution with every shift at or before `batch_index` applied.
  LayerDistributions DistributionAt(std::int64_t batch_index) const;
};

// Base moments drawn uniformly from the given ranges.
EnvironmentSpec MakeEnvironment(const Network& network, std::uint64_t seed,
                                double mean_lo, double mean_hi, double var_lo,
                                double var_hi, std::int64_t batch_size,
                                std::vector<ShiftEvent> shifts);

// Proxy for the trainable state of each layer: an affine correction of the
// layer's output moments. Observed output = (env mean + offset, env var *
// scale). Updating a layer moves its observed moments a fraction `gain`
// toward the historical embedding, which is the descent direction of the
// KL adaptation loss.
struct ModelResponseState {
  std::vector<std::vector<double>> mean_offset;
  std::vector<std::vector<double>> var_scale;
  double gain = 0.5;

  static ModelResponseState Initial(const EnvironmentSpec& env, double gain);
};

LayerDistributions ObservedDistribution(const LayerDistributions& env,
                                        const ModelResponseState& model);

// Sampled moments for every layer. Sample means and population variances are
// drawn from their exact sampling distributions for n = batch_size * spatial
// Gaussian values (normal and scaled chi-square), which matches drawing n
// values per channel.
std::vector<FeatureStats> GenerateBatch(const EnvironmentSpec& env,
                                        const ModelResponseState& model,
                                        std::int64_t batch_index,
                                        std::mt19937_64& rng);

// Moves each selected layer's observed moments toward `history` by
// `model.gain`; unselected layers are untouched. `env` is the environment in
// force for the batch.
ModelResponseState ApplyUpdate(const ModelResponseState& model,
                               const UpdateStrategy& strategy,
                               const Network& network,
                               const LayerDistributions& env,
                               const EmbeddingHistory& history);

// Re-expresses `stats` as if produced by `after` instead of `before`; this is
// the reforward of the same batch with the updated model.
std::vector<FeatureStats> ReforwardStats(std::span<const FeatureStats> stats,
                                         const ModelResponseState& before,
                                         const ModelResponseState& after);

struct ReusePlan {
  // Forward id of the earliest updated layer; equals the layer count when
  // the strategy is empty.
  std::size_t first_update_forward_id = 0;
  // Layer whose input activation is retained (== first_update_forward_id).
  std::optional<std::size_t> retained_activation_layer;
  std::vector<std::size_t> skipped;   // forward ids
  std::vector<std::size_t> executed;  // forward ids
};

ReusePlan MakeReusePlan(const UpdateStrategy& strategy, const Network& network);

struct TimedState {
  double t_ms = 0.0;
  SystemState state;
};

// Step function over time; records sorted by t_ms, first at t_ms <= 0.
class StateTrace {
 public:
  StateTrace() = default;
  explicit StateTrace(std::vector<TimedState> records);
  static StateTrace Static(const SystemState& state, double end_ms);

  // State in force at `t_ms`. Throws InputError("trace exhausted") past the
  // last record.
  const SystemState& At(double t_ms) const;
  double end_ms() const { return records_.empty() ? 0.0 : records_.back().t_ms; }
  const std::vector<TimedState>& records() const { return records_; }

 private:
  std::vector<TimedState> records_;
};

struct ExecutedLatency {
  double t_f = 0.0;
  double t_b = 0.0;
  double t_re = 0.0;
  double total() const { return t_f + t_b + t_re; }
};

// Runtime profile from the same eta/pi physics as the predictor, with each
// layer timing multiplied by an independent Uniform(1 - epsilon, 1 + epsilon)
// factor. epsilon == 0 draws nothing from `rng`.
LatencyProfile ExecutedProfile(const Network& network,
                               const OfflineProfile& offline,
                               const DeviceSpec& device,
                               const SystemState& state, double epsilon,
                               std::mt19937_64& rng);

// Forward from `forward_profile`; backward and reforward from
// `update_profile`. Reforward runs exactly the layers in `reuse.executed`.
ExecutedLatency ExecuteStrategy(const LatencyProfile& forward_profile,
                                const LatencyProfile& update_profile,
                                const UpdateStrategy& strategy,
                                const ReusePlan& reuse,
                                const Network& network);

// Single-state convenience wrapper for ExecutedProfile + ExecuteStrategy.
ExecutedLatency ExecuteGroundTruth(const Network& network,
                                   const OfflineProfile& offline,
                                   const DeviceSpec& device,
                                   const SystemState& state,
                                   const UpdateStrategy& strategy,
                                   const ReusePlan& reuse, double epsilon,
                                   std::mt19937_64& rng);

struct SigmaControllerConfig {
  bool enabled = false;
  std::size_t window = 5;
  double decrease = 0.9;
  double increase = 1.1;
  double sigma_min = 0.1;
  double sigma_max = 1.0;
  double target_r = 1.5;

  void Validate() const;
};

// Multiplicative decrease when the windowed mean turnaround exceeds the
// target, increase when below, unchanged when equal; clamped to bounds.
double SigmaController(std::span<const double> r_history, double sigma,
                       const SigmaControllerConfig& config);

enum class PipelineMode { kSequential, kParallel };

struct Scenario {
  Network network{"unnamed", {LayerSpec{}}};
  OfflineProfile offline;
  DeviceSpec device;
  StateTrace trace;
  SchedulerConfig scheduler;
  PipelineMode mode = PipelineMode::kSequential;
  EnvironmentSpec environment;
  std::int64_t batches = 20;
  double alpha = 0.1;
  double adaptation_gain = 0.5;
  KlMode kl_mode = KlMode::kGaussian;
  double jitter = 0.0;
  // Importances below factor * channels / samples_per_channel are treated as
  // sampling noise and not scheduled. 0 disables the floor.
  double noise_floor_factor = 4.0;
  std::optional<double> arrival_interval_ms;  // default: offline T_f
  SigmaControllerConfig controller;
  bool full_update_replay = true;
  std::uint64_t seed = 0;
};

struct PhaseLatency {
  double t_f = 0.0;
  double t_b = 0.0;
  double t_re = 0.0;
};

struct BatchRecord {
  std::int64_t index = 0;
  double sigma = 0.0;
  double budget_ms = 0.0;
  std::vector<std::size_t> selected;  // backward indices
  PhaseLatency predicted;
  PhaseLatency executed;
  double importance_captured = 0.0;
  double importance_available = 0.0;
  double capture_ratio = 1.0;
  double loss_before = 0.0;
  double loss_after = 0.0;
  double arrival_ms = 0.0;
  double start_ms = 0.0;
  double wait_ms = 0.0;
  double turnaround = 1.0;
  std::int64_t staleness = 0;  // parallel mode: batches since the model in use
  bool adapted = true;  // parallel mode: false when the adaptation lane was busy
  double predictor_error = 0.0;  // |predicted - executed| / executed
  std::optional<double> replay_ms;
};

struct EpisodeReport {
  std::string network;
  PipelineMode mode = PipelineMode::kSequential;
  std::uint64_t seed = 0;
  std::vector<BatchRecord> batches;

  double mean_latency_ms = 0.0;
  // Importance-weighted: sum captured / sum available over the episode.
  double capture_ratio = 1.0;
  double mean_capture_ratio = 1.0;
  double mean_predictor_error = 0.0;
  double mean_turnaround = 1.0;
  std::optional<double> replay_latency_ms;  // mean per batch
  std::optional<double> latency_ratio;      // adaptation / replay
  std::optional<double> speedup;            // replay / adaptation
};

EpisodeReport RunEpisode(const Scenario& scenario);

}  // namespace sparsetta

#endif  // SPARSETTA_PIPELINE_H_
