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

#include "sparsetta/pipeline.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <string>
#include <utility>

#include "sparsetta/error.h"

namespace sparsetta {
namespace {

std::vector<Embedding> EmbedAll(std::span<const FeatureStats> stats) {
  std::vector<Embedding> out;
  out.reserve(stats.size());
  for (const FeatureStats& s : stats) out.push_back(Embed(s));
  return out;
}

double SumSelected(const ImportanceVector& importance,
                   const UpdateStrategy& strategy) {
  double total = 0.0;
  for (std::size_t b : strategy.indices()) total += importance.at(b);
  return total;
}

// Zeroes importances that are indistinguishable from sampling noise. The
// Gaussian KL between two estimates of the same distribution from n values
// per channel is on the order of 1/n per channel.
void ApplyNoiseFloor(ImportanceVector& importance, const Network& network,
                     std::span<const FeatureStats> stats, double factor) {
  if (factor <= 0.0) return;
  for (std::size_t id = 0; id < network.size(); ++id) {
    const double floor = factor * static_cast<double>(network.layer(id).channels) /
                         static_cast<double>(stats[id].sample_count);
    double& a = importance.a[network.BackwardIndex(id) - 1];
    if (a < floor) a = 0.0;
  }
}

double RelativeError(double predicted, double executed) {
  if (executed == 0.0) return predicted == 0.0 ? 0.0 : 1.0;
  return std::abs(predicted - executed) / executed;
}

void ValidateScenario(const Scenario& s) {
  s.scheduler.Validate();
  s.device.Validate();
  s.environment.Validate();
  s.controller.Validate();
  if (s.environment.layer_count() != s.network.size()) {
    throw InputError("scenario: environment covers " +
                     std::to_string(s.environment.layer_count()) +
                     " layers, network has " + std::to_string(s.network.size()));
  }
  for (std::size_t id = 0; id < s.network.size(); ++id) {
    if (s.environment.base[id].size() !=
        static_cast<std::size_t>(s.network.layer(id).channels)) {
      throw InputError("scenario: environment layer " + std::to_string(id) +
                       " channel count differs from the network");
    }
  }
  if (s.batches < 1) throw InputError("scenario: batches must be >= 1");
  if (!(s.alpha >= 0.0 && s.alpha <= 1.0)) {
    throw InputError("scenario: alpha must lie in [0, 1]");
  }
  if (!(s.adaptation_gain > 0.0 && s.adaptation_gain <= 1.0)) {
    throw InputError("scenario: adaptation_gain must lie in (0, 1]");
  }
  if (!(s.jitter >= 0.0 && s.jitter < 1.0)) {
    throw InputError("scenario: jitter must lie in [0, 1)");
  }
  if (!(s.noise_floor_factor >= 0.0)) {
    throw InputError("scenario: noise_floor_factor must be >= 0");
  }
  if (s.arrival_interval_ms && !(*s.arrival_interval_ms >= 0.0)) {
    throw InputError("scenario: arrival_interval_ms must be >= 0");
  }
  if (s.trace.records().empty()) throw InputError("scenario: empty state trace");
}

}  // namespace

void EnvironmentSpec::Validate() const {
  if (base.empty()) throw InputError("environment: no layers");
  if (spatial.size() != base.size()) {
    throw InputError("environment: spatial sizes cover " +
                     std::to_string(spatial.size()) + " layers, base covers " +
                     std::to_string(base.size()));
  }
  if (batch_size < 1) throw InputError("environment: batch_size must be >= 1");
  for (std::size_t l = 0; l < base.size(); ++l) {
    if (base[l].empty()) {
      throw InputError("environment: layer " + std::to_string(l) + " has no channels");
    }
    if (spatial[l] < 1) {
      throw InputError("environment: layer " + std::to_string(l) +
                       " spatial size must be >= 1");
    }
    for (const ChannelDistribution& d : base[l]) {
      if (!std::isfinite(d.mean) || !std::isfinite(d.var) || !(d.var > 0.0)) {
        throw InputError("environment: layer " + std::to_string(l) +
                         " needs finite means and positive variances");
      }
    }
  }
  for (std::size_t i = 0; i < shifts.size(); ++i) {
    const ShiftEvent& e = shifts[i];
    if (e.batch_index < 0) throw InputError("environment: shift batch_index < 0");
    if (i > 0 && e.batch_index <= shifts[i - 1].batch_index) {
      throw InputError("environment: shift indices must be strictly increasing");
    }
    if (!std::isfinite(e.mean_offset_sigma) || !(e.var_scale > 0.0) ||
        !std::isfinite(e.var_scale)) {
      throw InputError("environment: shift " + std::to_string(i) +
                       " needs a finite offset and a positive variance scale");
    }
    for (int layer : e.layers) {
      if (layer < 0 || static_cast<std::size_t>(layer) >= base.size()) {
        throw InputError("environment: shift " + std::to_string(i) +
                         " names unknown layer " + std::to_string(layer));
      }
    }
  }
}

LayerDistributions EnvironmentSpec::DistributionAt(std::int64_t batch_index) const {
  LayerDistributions out = base;
  for (const ShiftEvent& e : shifts) {
    if (e.batch_index > batch_index) break;
    for (int layer : e.layers) {
      const auto l = static_cast<std::size_t>(layer);
      for (std::size_t c = 0; c < out[l].size(); ++c) {
        out[l][c].mean += e.mean_offset_sigma * std::sqrt(base[l][c].var);
        out[l][c].var *= e.var_scale;
      }
    }
  }
  return out;
}

EnvironmentSpec MakeEnvironment(const Network& network, std::uint64_t seed,
                                double mean_lo, double mean_hi, double var_lo,
                                double var_hi, std::int64_t batch_size,
                                std::vector<ShiftEvent> shifts) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mean_dist(mean_lo, mean_hi);
  std::uniform_real_distribution<double> var_dist(var_lo, var_hi);
  EnvironmentSpec env;
  env.batch_size = batch_size;
  env.shifts = std::move(shifts);
  for (const LayerSpec& layer : network.layers()) {
    std::vector<ChannelDistribution> channels(
        static_cast<std::size_t>(layer.channels));
    for (ChannelDistribution& d : channels) {
      d.mean = mean_dist(rng);
      d.var = var_dist(rng);
    }
    env.base.push_back(std::move(channels));
    env.spatial.push_back(
        std::max<std::int64_t>(1, layer.out_elements / layer.channels));
  }
  env.Validate();
  return env;
}

ModelResponseState ModelResponseState::Initial(const EnvironmentSpec& env,
                                               double gain) {
  if (!(gain > 0.0 && gain <= 1.0)) {
    throw InputError("adaptation gain must lie in (0, 1]");
  }
  ModelResponseState m;
  m.gain = gain;
  for (const auto& layer : env.base) {
    m.mean_offset.emplace_back(layer.size(), 0.0);
    m.var_scale.emplace_back(layer.size(), 1.0);
  }
  return m;
}

LayerDistributions ObservedDistribution(const LayerDistributions& env,
                                        const ModelResponseState& model) {
  LayerDistributions out = env;
  for (std::size_t l = 0; l < out.size(); ++l) {
    for (std::size_t c = 0; c < out[l].size(); ++c) {
      out[l][c].mean += model.mean_offset[l][c];
      out[l][c].var *= model.var_scale[l][c];
    }
  }
  return out;
}

std::vector<FeatureStats> GenerateBatch(const EnvironmentSpec& env,
                                        const ModelResponseState& model,
                                        std::int64_t batch_index,
                                        std::mt19937_64& rng) {
  if (batch_index < 0) throw InputError("batch index must be >= 0");
  const LayerDistributions observed =
      ObservedDistribution(env.DistributionAt(batch_index), model);
  std::vector<FeatureStats> out(observed.size());
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t l = 0; l < observed.size(); ++l) {
    const std::int64_t n = env.batch_size * env.spatial[l];
    const double nd = static_cast<double>(n);
    FeatureStats& s = out[l];
    s.sample_count = n;
    s.means.reserve(observed[l].size());
    s.vars.reserve(observed[l].size());
    std::chi_squared_distribution<double> chi2(n > 1 ? nd - 1.0 : 1.0);
    for (const ChannelDistribution& d : observed[l]) {
      if (env.infinite_batch) {
        s.means.push_back(d.mean);
        s.vars.push_back(d.var);
        continue;
      }
      s.means.push_back(d.mean + std::sqrt(d.var / nd) * normal(rng));
      s.vars.push_back(n > 1 ? d.var * chi2(rng) / nd : 0.0);
    }
  }
  return out;
}

ModelResponseState ApplyUpdate(const ModelResponseState& model,
                               const UpdateStrategy& strategy,
                               const Network& network,
                               const LayerDistributions& env,
                               const EmbeddingHistory& history) {
  ValidateStrategy(network, strategy);
  if (history.size() != network.size() || env.size() != network.size()) {
    throw InputError("update: history or environment does not cover the network");
  }
  ModelResponseState next = model;
  const double g = model.gain;
  for (std::size_t b : strategy.indices()) {
    const std::size_t id = network.ForwardId(b);
    const Embedding& target = history.layers()[id];
    for (std::size_t c = 0; c < env[id].size(); ++c) {
      const double want_offset = target.mean(c) - env[id][c].mean;
      const double want_scale = target.var(c) / env[id][c].var;
      double& offset = next.mean_offset[id][c];
      double& scale = next.var_scale[id][c];
      offset = g == 1.0 ? want_offset : offset + g * (want_offset - offset);
      scale = g == 1.0 ? want_scale : scale + g * (want_scale - scale);
    }
  }
  return next;
}

std::vector<FeatureStats> ReforwardStats(std::span<const FeatureStats> stats,
                                         const ModelResponseState& before,
                                         const ModelResponseState& after) {
  std::vector<FeatureStats> out(stats.begin(), stats.end());
  for (std::size_t l = 0; l < out.size(); ++l) {
    for (std::size_t c = 0; c < out[l].means.size(); ++c) {
      out[l].means[c] += after.mean_offset[l][c] - before.mean_offset[l][c];
      const double s0 = before.var_scale[l][c];
      const double s1 = after.var_scale[l][c];
      if (s0 != s1 && s0 > 0.0) out[l].vars[c] *= s1 / s0;
    }
  }
  return out;
}

ReusePlan MakeReusePlan(const UpdateStrategy& strategy, const Network& network) {
  ValidateStrategy(network, strategy);
  ReusePlan plan;
  const std::size_t n = network.size();
  const std::size_t deepest = strategy.deepest();
  plan.first_update_forward_id = deepest == 0 ? n : network.ForwardId(deepest);
  if (deepest != 0) plan.retained_activation_layer = plan.first_update_forward_id;
  for (std::size_t id = 0; id < n; ++id) {
    (id < plan.first_update_forward_id ? plan.skipped : plan.executed).push_back(id);
  }
  return plan;
}

StateTrace::StateTrace(std::vector<TimedState> records)
    : records_(std::move(records)) {
  if (records_.empty()) throw InputError("state trace: no records");
  if (records_.front().t_ms > 0.0) {
    throw InputError("state trace: first record must start at t_ms <= 0");
  }
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const TimedState& r = records_[i];
    if (std::isnan(r.t_ms)) throw InputError("state trace: t_ms is NaN");
    if (i > 0 && r.t_ms < records_[i - 1].t_ms) {
      throw InputError("state trace: records must be sorted by t_ms");
    }
    if (r.state.n < 0) throw InputError("state trace: n must be >= 0");
    if (!(r.state.phi > 0.0 && r.state.phi <= 1.0)) {
      throw InputError("state trace: phi must lie in (0, 1]");
    }
  }
}

StateTrace StateTrace::Static(const SystemState& state, double end_ms) {
  return StateTrace({TimedState{0.0, state}, TimedState{end_ms, state}});
}

const SystemState& StateTrace::At(double t_ms) const {
  if (records_.empty() || t_ms > records_.back().t_ms) {
    throw InputError("trace exhausted at t_ms = " + std::to_string(t_ms));
  }
  auto it = std::upper_bound(
      records_.begin(), records_.end(), t_ms,
      [](double t, const TimedState& r) { return t < r.t_ms; });
  if (it == records_.begin()) return records_.front().state;
  return std::prev(it)->state;
}

LatencyProfile ExecutedProfile(const Network& network,
                               const OfflineProfile& offline,
                               const DeviceSpec& device,
                               const SystemState& state, double epsilon,
                               std::mt19937_64& rng) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw InputError("jitter must lie in [0, 1)");
  }
  LatencyProfile exact = BuildProfile(network, offline, device, state);
  if (epsilon == 0.0) return exact;
  std::uniform_real_distribution<double> jitter(1.0 - epsilon, 1.0 + epsilon);
  std::vector<LayerLatency> layers = exact.layers();
  // Draw in forward order so the stream does not depend on indexing.
  for (std::size_t i = layers.size(); i-- > 0;) {
    LayerLatency& l = layers[i];
    l.t_f *= jitter(rng);
    const double kb = jitter(rng);
    l.t_dw *= kb;
    l.t_dx *= kb;
    l.t_b = l.t_dw + l.t_dx;
    l.t_re *= jitter(rng);
  }
  return LatencyProfile(std::move(layers));
}

ExecutedLatency ExecuteStrategy(const LatencyProfile& forward_profile,
                                const LatencyProfile& update_profile,
                                const UpdateStrategy& strategy,
                                const ReusePlan& reuse,
                                const Network& network) {
  ExecutedLatency out;
  out.t_f = forward_profile.total_forward();
  if (strategy.empty()) return out;
  out.t_b = ComputeStrategyCost(network, strategy, update_profile).t_backward;
  for (std::size_t id : reuse.executed) {
    out.t_re += update_profile.at(network.BackwardIndex(id)).t_re;
  }
  return out;
}

ExecutedLatency ExecuteGroundTruth(const Network& network,
                                   const OfflineProfile& offline,
                                   const DeviceSpec& device,
                                   const SystemState& state,
                                   const UpdateStrategy& strategy,
                                   const ReusePlan& reuse, double epsilon,
                                   std::mt19937_64& rng) {
  const LatencyProfile profile =
      ExecutedProfile(network, offline, device, state, epsilon, rng);
  return ExecuteStrategy(profile, profile, strategy, reuse, network);
}

void SigmaControllerConfig::Validate() const {
  if (window < 1) throw InputError("controller: window must be >= 1");
  if (!(sigma_min > 0.0 && sigma_min <= sigma_max && sigma_max <= 1.0)) {
    throw InputError("controller: bounds must satisfy 0 < min <= max <= 1");
  }
  if (!(decrease > 0.0 && decrease < 1.0 && increase > 1.0)) {
    throw InputError("controller: need 0 < decrease < 1 < increase");
  }
  if (!(target_r >= 1.0)) throw InputError("controller: target_r must be >= 1");
}

double SigmaController(std::span<const double> r_history, double sigma,
                       const SigmaControllerConfig& config) {
  if (r_history.empty()) return std::clamp(sigma, config.sigma_min, config.sigma_max);
  const std::size_t take = std::min(config.window, r_history.size());
  const auto recent = r_history.last(take);
  const double mean =
      std::accumulate(recent.begin(), recent.end(), 0.0) / static_cast<double>(take);
  double next = sigma;
  if (mean > config.target_r) {
    next = sigma * config.decrease;
  } else if (mean < config.target_r) {
    next = sigma * config.increase;
  }
  return std::clamp(next, config.sigma_min, config.sigma_max);
}

EpisodeReport RunEpisode(const Scenario& scenario) {
  ValidateScenario(scenario);
  const Network& net = scenario.network;
  const EnvironmentSpec& env = scenario.environment;
  const bool parallel = scenario.mode == PipelineMode::kParallel;

  std::mt19937_64 data_rng(scenario.seed);
  std::seed_seq jitter_seed{scenario.seed, std::uint64_t{0x6a09e667f3bcc909ULL}};
  std::mt19937_64 jitter_rng(jitter_seed);

  double interval = 0.0;
  if (scenario.arrival_interval_ms) {
    interval = *scenario.arrival_interval_ms;
  } else {
    for (const OfflineLayerTiming& t : scenario.offline.layers) interval += t.t_f;
  }

  EpisodeReport report;
  report.network = net.name();
  report.mode = scenario.mode;
  report.seed = scenario.seed;

  ModelResponseState committed =
      ModelResponseState::Initial(env, scenario.adaptation_gain);
  std::int64_t committed_source = -1;
  // Parallel mode: the adaptation lane holds at most one job.
  std::optional<ModelResponseState> pending;
  std::int64_t pending_source = -1;
  double pending_finish = 0.0;
  double lane_free_at = 0.0;

  EmbeddingHistory history;
  std::vector<double> r_history;
  double sigma = scenario.scheduler.sigma;
  double server_free_at = 0.0;

  double sum_latency = 0.0;
  double sum_captured = 0.0;
  double sum_available = 0.0;
  double sum_ratio = 0.0;
  double sum_error = 0.0;
  double sum_r = 0.0;
  double sum_replay = 0.0;

  for (std::int64_t i = 0; i < scenario.batches; ++i) {
    BatchRecord rec;
    rec.index = i;
    rec.sigma = sigma;
    rec.arrival_ms = static_cast<double>(i) * interval;

    if (parallel && pending && pending_finish <= rec.arrival_ms) {
      committed = std::move(*pending);
      committed_source = pending_source;
      pending.reset();
    }
    rec.start_ms = parallel ? rec.arrival_ms : std::max(rec.arrival_ms, server_free_at);
    rec.wait_ms = rec.start_ms - rec.arrival_ms;
    rec.staleness = i - committed_source;

    // Forward.
    const LayerDistributions env_now = env.DistributionAt(i);
    const std::vector<FeatureStats> stats = GenerateBatch(env, committed, i, data_rng);
    const std::vector<Embedding> embeddings = EmbedAll(stats);
    const bool seeding = history.empty();
    if (seeding) history = EmbeddingHistory::Seed(embeddings, scenario.alpha);
    Assessment assessment =
        Assess(net, history.layers(), stats, scenario.kl_mode);
    ImportanceVector importance = assessment.importance;
    ApplyNoiseFloor(importance, net, stats, scenario.noise_floor_factor);

    // Backward: predict from the state at forward start, execute against the
    // state in force when each phase begins.
    const SystemState& observed = scenario.trace.At(rec.start_ms);
    const LatencyProfile predicted =
        BuildProfile(net, scenario.offline, scenario.device, observed);
    SchedulerConfig config = scenario.scheduler;
    config.sigma = sigma;
    const bool lane_busy = parallel && lane_free_at > rec.arrival_ms;
    rec.adapted = !lane_busy;
    ScheduleResult schedule;
    if (rec.adapted) {
      schedule = SolveDp(importance, predicted, config);
    } else {
      schedule.strategy = UpdateStrategy(net.size());
      schedule.budget_ms = ComputeBudget(predicted.total(),
                                         predicted.total_forward(), sigma).ms;
    }
    const UpdateStrategy& strategy = schedule.strategy;
    rec.budget_ms = schedule.budget_ms;
    rec.selected = strategy.indices();

    const LatencyProfile forward_exec =
        ExecutedProfile(net, scenario.offline, scenario.device, observed,
                        scenario.jitter, jitter_rng);
    const SystemState& update_state =
        scenario.trace.At(rec.start_ms + forward_exec.total_forward());
    const LatencyProfile update_exec =
        ExecutedProfile(net, scenario.offline, scenario.device, update_state,
                        scenario.jitter, jitter_rng);
    const ReusePlan reuse = MakeReusePlan(strategy, net);
    ExecutedLatency executed =
        ExecuteStrategy(forward_exec, update_exec, strategy, reuse, net);
    const StrategyCost predicted_cost = ComputeStrategyCost(strategy, predicted);
    rec.predicted = {predicted.total_forward(), predicted_cost.t_backward,
                     predicted_cost.t_reforward};
    if (parallel) {
      executed.t_re = 0.0;
      rec.predicted.t_re = 0.0;
    }
    rec.executed = {executed.t_f, executed.t_b, executed.t_re};
    const double predicted_total =
        rec.predicted.t_f + rec.predicted.t_b + rec.predicted.t_re;
    rec.predictor_error = RelativeError(predicted_total, executed.total());
    scenario.trace.At(rec.start_ms + executed.total());

    const ModelResponseState updated =
        ApplyUpdate(committed, strategy, net, env_now, history);
    const std::vector<FeatureStats> after = ReforwardStats(stats, committed, updated);
    rec.loss_before = assessment.loss;
    rec.loss_after =
        AdaptationLoss(history.layers(), EmbedAll(after), scenario.kl_mode);

    rec.importance_available = importance.Total();
    rec.importance_captured = SumSelected(importance, strategy);
    rec.capture_ratio = rec.importance_available > 0.0
                            ? rec.importance_captured / rec.importance_available
                            : 1.0;

    if (scenario.full_update_replay) {
      const UpdateStrategy full = UpdateStrategy::Full(update_exec);
      const StrategyCost full_cost = ComputeStrategyCost(full, update_exec);
      rec.replay_ms = forward_exec.total_forward() + full_cost.t_backward +
                      (parallel ? 0.0 : full_cost.t_reforward);
      sum_replay += *rec.replay_ms;
    }

    // Commit the update and advance simulated time.
    if (parallel) {
      rec.turnaround = 1.0;
      if (rec.adapted && !strategy.empty()) {
        pending = updated;
        pending_source = i;
        pending_finish = rec.start_ms + executed.t_f + executed.t_b;
        lane_free_at = pending_finish;
      }
    } else {
      committed = updated;
      committed_source = i;
      const double service = executed.total();
      server_free_at = rec.start_ms + service;
      rec.turnaround = service > 0.0 ? (rec.wait_ms + service) / service : 1.0;
    }

    if (!seeding) history = history.Update(embeddings);

    r_history.push_back(rec.turnaround);
    if (scenario.controller.enabled) {
      sigma = SigmaController(r_history, sigma, scenario.controller);
    }

    sum_latency += executed.total();
    sum_captured += rec.importance_captured;
    sum_available += rec.importance_available;
    sum_ratio += rec.capture_ratio;
    sum_error += rec.predictor_error;
    sum_r += rec.turnaround;
    report.batches.push_back(std::move(rec));
  }

  const double count = static_cast<double>(report.batches.size());
  report.mean_latency_ms = sum_latency / count;
  report.capture_ratio = sum_available > 0.0 ? sum_captured / sum_available : 1.0;
  report.mean_capture_ratio = sum_ratio / count;
  report.mean_predictor_error = sum_error / count;
  report.mean_turnaround = sum_r / count;
  if (scenario.full_update_replay) {
    report.replay_latency_ms = sum_replay / count;
    if (*report.replay_latency_ms > 0.0) {
      report.latency_ratio = report.mean_latency_ms / *report.replay_latency_ms;
    }
    if (report.mean_latency_ms > 0.0) {
      report.speedup = *report.replay_latency_ms / report.mean_latency_ms;
    }
  }
  return report;
}

}  // namespace sparsetta
