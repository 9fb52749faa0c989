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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "sparsetta/error.h"
#include "sparsetta/io.h"
#include "test_util.h"

namespace sparsetta {
namespace {

using testing::DataPath;
using testing::LinearChain;

Scenario LoadFixture(const std::string& name) {
  return io::LoadScenario(DataPath("scenarios/" + name + ".json"));
}

EnvironmentSpec UnitEnvironment(const Network& net, std::int64_t batch_size,
                                std::vector<ShiftEvent> shifts = {}) {
  return MakeEnvironment(net, 7, -1.0, 1.0, 0.5, 2.0, batch_size, std::move(shifts));
}

EmbeddingHistory HistoryAt(std::size_t layers, std::size_t channels, double mean, double var) {
  std::vector<double> values;
  for (std::size_t c = 0; c < channels; ++c) {
    values.push_back(mean);
    values.push_back(var);
  }
  return EmbeddingHistory::Seed(std::vector<Embedding>(layers, Embedding(values)), 0.1);
}

LayerDistributions Constant(std::size_t layers, std::size_t channels, double mean, double var) {
  return LayerDistributions(layers, std::vector<ChannelDistribution>(channels, {mean, var}));
}

TEST(GenerateBatchTest, MeansConvergeToTheEnvironment) {
  const Network net = LinearChain(3, 4);
  const EnvironmentSpec env = UnitEnvironment(net, 10000);
  const ModelResponseState model = ModelResponseState::Initial(env, 0.5);
  std::mt19937_64 rng(11);
  const std::vector<FeatureStats> stats = GenerateBatch(env, model, 0, rng);
  for (std::size_t l = 0; l < stats.size(); ++l) {
    EXPECT_EQ(stats[l].sample_count, 10000);
    for (std::size_t c = 0; c < stats[l].means.size(); ++c) {
      const ChannelDistribution& d = env.base[l][c];
      EXPECT_NEAR(stats[l].means[c], d.mean, 3.0 * std::sqrt(d.var / 1e4));
      EXPECT_NEAR(stats[l].vars[c], d.var, 3.0 * d.var * std::sqrt(2.0 / 1e4));
    }
  }
}

TEST(GenerateBatchTest, SameSeedSameStats) {
  const Network net = LinearChain(4, 3);
  const EnvironmentSpec env = UnitEnvironment(net, 8);
  const ModelResponseState model = ModelResponseState::Initial(env, 0.5);
  std::mt19937_64 a(5), b(5);
  for (int i = 0; i < 3; ++i) {
    const auto x = GenerateBatch(env, model, i, a);
    const auto y = GenerateBatch(env, model, i, b);
    for (std::size_t l = 0; l < x.size(); ++l) {
      EXPECT_EQ(x[l].means, y[l].means);
      EXPECT_EQ(x[l].vars, y[l].vars);
    }
  }
}

TEST(GenerateBatchTest, ShiftTouchesOnlyItsLayersFromItsBatchOn) {
  const Network net = LinearChain(10, 3);
  EnvironmentSpec env = UnitEnvironment(net, 4, {ShiftEvent{5, {3, 7}, 2.0, 1.0}});
  env.infinite_batch = true;
  const ModelResponseState model = ModelResponseState::Initial(env, 0.5);
  std::mt19937_64 rng(1);
  for (std::int64_t i = 0; i < 8; ++i) {
    const auto stats = GenerateBatch(env, model, i, rng);
    for (std::size_t l = 0; l < stats.size(); ++l) {
      const bool shifted = i >= 5 && (l == 3 || l == 7);
      for (std::size_t c = 0; c < 3; ++c) {
        const ChannelDistribution& d = env.base[l][c];
        const double expected = d.mean + (shifted ? 2.0 * std::sqrt(d.var) : 0.0);
        EXPECT_NEAR(stats[l].means[c], expected, 1e-12) << "batch " << i << " layer " << l;
        EXPECT_DOUBLE_EQ(stats[l].vars[c], d.var);
      }
    }
  }
}

TEST(GenerateBatchTest, ModelCorrectionComposesWithEnvironment) {
  const Network net = LinearChain(2, 2);
  EnvironmentSpec env = UnitEnvironment(net, 4);
  env.infinite_batch = true;
  ModelResponseState model = ModelResponseState::Initial(env, 0.5);
  model.mean_offset[1][0] = 0.5;
  model.var_scale[1][1] = 3.0;
  std::mt19937_64 rng(1);
  const auto stats = GenerateBatch(env, model, 0, rng);
  EXPECT_DOUBLE_EQ(stats[1].means[0], env.base[1][0].mean + 0.5);
  EXPECT_DOUBLE_EQ(stats[1].vars[1], env.base[1][1].var * 3.0);
}

TEST(EnvironmentTest, ValidationCatchesBadShifts) {
  const Network net = LinearChain(3, 2);
  EXPECT_THROW(UnitEnvironment(net, 4, {ShiftEvent{3, {1}, 1, 1}, ShiftEvent{3, {2}, 1, 1}}),
               InputError);
  EXPECT_THROW(UnitEnvironment(net, 4, {ShiftEvent{3, {9}, 1, 1}}), InputError);
  EXPECT_THROW(UnitEnvironment(net, 0), InputError);
}

TEST(ReusePlanTest, OutputLayerOnly) {
  const Network net = LinearChain(10);
  const ReusePlan plan = MakeReusePlan(UpdateStrategy::FromIndices(10, {1}), net);
  EXPECT_EQ(plan.first_update_forward_id, 9u);
  EXPECT_EQ(plan.executed, (std::vector<std::size_t>{9}));
  EXPECT_EQ(plan.skipped.size(), 9u);
  EXPECT_EQ(plan.retained_activation_layer, std::optional<std::size_t>(9));
}

TEST(ReusePlanTest, DeepestSelectionSetsTheRetentionPoint) {
  const Network net = LinearChain(10);
  const ReusePlan plan = MakeReusePlan(UpdateStrategy::FromIndices(10, {4, 2}), net);
  EXPECT_EQ(plan.first_update_forward_id, 6u);
  EXPECT_EQ(plan.skipped, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
  EXPECT_EQ(plan.executed, (std::vector<std::size_t>{6, 7, 8, 9}));
}

TEST(ReusePlanTest, EmptyStrategySkipsEverything) {
  const Network net = LinearChain(5);
  const ReusePlan plan = MakeReusePlan(UpdateStrategy(5), net);
  EXPECT_TRUE(plan.executed.empty());
  EXPECT_EQ(plan.skipped.size(), 5u);
  EXPECT_FALSE(plan.retained_activation_layer.has_value());
}

struct Synth {
  Network network = io::LoadNetwork(DataPath("synth20/network.json"));
  OfflineProfile offline = io::LoadOfflineProfile(DataPath("synth20/offline.json"));
  DeviceSpec device = io::LoadDevice(DataPath("device.json"));
  SystemState hot = io::LoadStates(DataPath("states/hot_loaded_contention.json")).front().state;
};

UpdateStrategy RandomStrategy(const Network& net, std::mt19937_64& rng) {
  std::bernoulli_distribution pick(0.3);
  UpdateStrategy s(net.size());
  for (std::size_t b = 1; b <= net.size(); ++b) {
    if (net.layer_at_backward(b).has_params && pick(rng)) s.Select(b);
  }
  return s;
}

TEST(GroundTruthTest, NoiseFreeExecutionMatchesPrediction) {
  const Synth m;
  const LatencyProfile predicted = BuildProfile(m.network, m.offline, m.device, m.hot);
  std::mt19937_64 rng(3);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const UpdateStrategy s = RandomStrategy(m.network, rng);
    const ReusePlan plan = MakeReusePlan(s, m.network);
    const ExecutedLatency got =
        ExecuteGroundTruth(m.network, m.offline, m.device, m.hot, s, plan, 0.0, rng);
    const StrategyCost cost = ComputeStrategyCost(s, predicted);
    const double want = predicted.total_forward() + cost.t_total_extra;
    worst = std::max(worst, std::abs(got.total() - want) / want);
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(GroundTruthTest, ReforwardFollowsTheReusePlan) {
  const Synth m;
  const LatencyProfile p = BuildProfile(m.network, m.offline, m.device, m.hot);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const UpdateStrategy s = RandomStrategy(m.network, rng);
    const ReusePlan plan = MakeReusePlan(s, m.network);
    const ExecutedLatency got = ExecuteStrategy(p, p, s, plan, m.network);
    double expected = 0.0;
    for (std::size_t id = plan.first_update_forward_id; id < m.network.size(); ++id) {
      expected += p.at(m.network.BackwardIndex(id)).t_re;
    }
    EXPECT_DOUBLE_EQ(got.t_re, expected);
    EXPECT_NEAR(got.t_re, ComputeStrategyCost(s, p).t_reforward, 1e-12);
  }
}

TEST(GroundTruthTest, EmptyStrategyHasNoUpdateCost) {
  const Synth m;
  std::mt19937_64 rng(1);
  const UpdateStrategy none(m.network.size());
  const ExecutedLatency got = ExecuteGroundTruth(m.network, m.offline, m.device, m.hot, none,
                                                 MakeReusePlan(none, m.network), 0.05, rng);
  EXPECT_GT(got.t_f, 0.0);
  EXPECT_EQ(got.t_b, 0.0);
  EXPECT_EQ(got.t_re, 0.0);
}

TEST(GroundTruthTest, JitterKeepsMeanErrorWithinFivePercent) {
  const Synth m;
  const LatencyProfile predicted = BuildProfile(m.network, m.offline, m.device, m.hot);
  std::mt19937_64 rng(7);
  double sum = 0.0;
  int count = 0;
  double worst = 0.0;
  while (count < 1000) {
    const LatencyProfile exec = ExecutedProfile(m.network, m.offline, m.device, m.hot, 0.05, rng);
    for (std::size_t b = 1; b <= exec.size() && count < 1000; ++b, ++count) {
      const double want = predicted.at(b).t_f + predicted.at(b).t_b + predicted.at(b).t_re;
      const double got = exec.at(b).t_f + exec.at(b).t_b + exec.at(b).t_re;
      const double err = std::abs(got - want) / want;
      sum += err;
      worst = std::max(worst, err);
    }
  }
  EXPECT_LE(sum / count, 0.05);
  EXPECT_LE(worst, 0.05 + 1e-12);
  EXPECT_GT(worst, 0.0);
}

TEST(GroundTruthTest, ZeroJitterDrawsNothing) {
  const Synth m;
  std::mt19937_64 rng(9), untouched(9);
  ExecutedProfile(m.network, m.offline, m.device, m.hot, 0.0, rng);
  EXPECT_EQ(rng(), untouched());
}

TEST(ApplyUpdateTest, HalfGainHalvesTheGap) {
  const Network net = LinearChain(3, 2);
  const auto env = Constant(3, 2, 0.0, 1.0);
  EnvironmentSpec spec;
  spec.base = env;
  spec.spatial = {1, 1, 1};
  const ModelResponseState model = ModelResponseState::Initial(spec, 0.5);
  const EmbeddingHistory history = HistoryAt(3, 2, 4.0, 1.0);
  const ModelResponseState next =
      ApplyUpdate(model, UpdateStrategy::FromIndices(3, {2}), net, env, history);
  const LayerDistributions observed = ObservedDistribution(env, next);
  EXPECT_DOUBLE_EQ(4.0 - observed[1][0].mean, 2.0);
  EXPECT_DOUBLE_EQ(4.0 - observed[0][0].mean, 4.0);
  EXPECT_DOUBLE_EQ(4.0 - observed[2][1].mean, 4.0);
}

TEST(ApplyUpdateTest, FullGainClosesTheGap) {
  const Network net = LinearChain(2, 2);
  const auto env = Constant(2, 2, 1.0, 2.0);
  EnvironmentSpec spec;
  spec.base = env;
  spec.spatial = {1, 1};
  const ModelResponseState model = ModelResponseState::Initial(spec, 1.0);
  const EmbeddingHistory history = HistoryAt(2, 2, -0.5, 0.5);
  const ModelResponseState next =
      ApplyUpdate(model, UpdateStrategy::FromIndices(2, {1, 2}), net, env, history);
  for (const auto& layer : ObservedDistribution(env, next)) {
    for (const ChannelDistribution& d : layer) {
      EXPECT_DOUBLE_EQ(d.mean, -0.5);
      EXPECT_DOUBLE_EQ(d.var, 0.5);
    }
  }
}

TEST(ApplyUpdateTest, EmptyStrategyLeavesModelUnchanged) {
  const Network net = LinearChain(2, 2);
  const auto env = Constant(2, 2, 1.0, 2.0);
  EnvironmentSpec spec;
  spec.base = env;
  spec.spatial = {1, 1};
  const ModelResponseState model = ModelResponseState::Initial(spec, 0.5);
  const ModelResponseState next =
      ApplyUpdate(model, UpdateStrategy(2), net, env, HistoryAt(2, 2, 0.0, 1.0));
  EXPECT_EQ(next.mean_offset, model.mean_offset);
  EXPECT_EQ(next.var_scale, model.var_scale);
}

TEST(ApplyUpdateTest, LossStrictlyDecreasesWithExactMoments) {
  const Network net = LinearChain(6, 3);
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    EnvironmentSpec env = MakeEnvironment(net, trial, -1, 1, 0.5, 2, 4, {});
    env.infinite_batch = true;
    const ModelResponseState model = ModelResponseState::Initial(env, 0.3 + 0.1 * (trial % 7));
    const EmbeddingHistory history =
        EmbeddingHistory::Seed(std::vector<Embedding>(6, Embedding({0.0, 1.0, 0.2, 1.5, -0.3, 0.8})), 0.1);
    const auto stats = GenerateBatch(env, model, 0, rng);
    std::vector<Embedding> before;
    for (const FeatureStats& s : stats) before.push_back(Embed(s));
    UpdateStrategy s = RandomStrategy(net, rng);
    if (s.empty()) s.Select(1);
    const ModelResponseState next = ApplyUpdate(model, s, net, env.base, history);
    std::vector<Embedding> after;
    for (const FeatureStats& f : ReforwardStats(stats, model, next)) after.push_back(Embed(f));
    EXPECT_LT(AdaptationLoss(history.layers(), after), AdaptationLoss(history.layers(), before));
  }
}

TEST(SigmaControllerTest, OnTargetHoldsSigma) {
  SigmaControllerConfig c;
  const std::vector<double> r(5, c.target_r);
  EXPECT_EQ(SigmaController(r, 0.5, c), 0.5);
}

TEST(SigmaControllerTest, PersistentOverloadDrivesSigmaToFloor) {
  SigmaControllerConfig c;
  std::vector<double> r;
  double sigma = 0.8;
  for (int i = 0; i < 60; ++i) {
    r.push_back(3.0);
    const double next = SigmaController(r, sigma, c);
    EXPECT_LE(next, sigma);
    sigma = next;
  }
  EXPECT_EQ(sigma, c.sigma_min);
  EXPECT_EQ(SigmaController(r, c.sigma_min, c), c.sigma_min);
}

TEST(SigmaControllerTest, SlackRaisesSigmaToCeiling) {
  SigmaControllerConfig c;
  EXPECT_DOUBLE_EQ(SigmaController(std::vector<double>{1.0}, 0.5, c), 0.55);
  EXPECT_EQ(SigmaController(std::vector<double>{1.0}, 0.95, c), 1.0);
}

TEST(SigmaControllerTest, OnlyTheWindowCounts) {
  SigmaControllerConfig c;
  // Old overload falls outside the five-batch window.
  const std::vector<double> r = {9, 9, 9, 1, 1, 1, 1, 1};
  EXPECT_DOUBLE_EQ(SigmaController(r, 0.5, c), 0.55);
}

TEST(StateTraceTest, StepLookupAndExhaustion) {
  SystemState a, b;
  b.n = 2;
  const StateTrace trace({{0.0, a}, {10.0, b}, {20.0, b}});
  EXPECT_EQ(trace.At(0.0).n, 0);
  EXPECT_EQ(trace.At(9.99).n, 0);
  EXPECT_EQ(trace.At(10.0).n, 2);
  EXPECT_EQ(trace.At(20.0).n, 2);
  try {
    trace.At(20.5);
    FAIL() << "expected an exhausted trace";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("trace exhausted"), std::string::npos);
  }
}

TEST(RunEpisodeTest, ShortTraceIsReported) {
  Scenario s = LoadFixture("single_shift");
  s.trace = io::LoadStateTrace(DataPath("traces/short.json"));
  try {
    RunEpisode(s);
    FAIL() << "expected an exhausted trace";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("trace exhausted"), std::string::npos);
  }
}

TEST(RunEpisodeTest, PerBatchInvariantsHold) {
  for (const char* name : {"drift", "zero_shift", "single_shift", "parallel"}) {
    Scenario s = LoadFixture(name);
    s.batches = std::min<std::int64_t>(s.batches, 20);
    s.jitter = 0.03;
    const EpisodeReport report = RunEpisode(s);
    ASSERT_EQ(report.batches.size(), static_cast<std::size_t>(s.batches));
    for (const BatchRecord& b : report.batches) {
      EXPECT_GE(b.turnaround, 1.0) << name;
      EXPECT_GE(b.capture_ratio, 0.0);
      EXPECT_LE(b.capture_ratio, 1.0 + 1e-12);
      EXPECT_GE(b.wait_ms, 0.0);
      if (b.selected.empty()) {
        EXPECT_EQ(b.executed.t_b, 0.0);
        EXPECT_EQ(b.executed.t_re, 0.0);
      }
      if (s.mode == PipelineMode::kParallel) EXPECT_EQ(b.executed.t_re, 0.0);
    }
    EXPECT_GE(report.capture_ratio, 0.0);
    EXPECT_LE(report.capture_ratio, 1.0 + 1e-12);
  }
}

TEST(RunEpisodeTest, ExecutedTotalsFollowTheClosedForm) {
  Scenario s = LoadFixture("single_shift");
  s.trace = StateTrace::Static(
      io::LoadStates(DataPath("states/hot.json")).front().state, 1e9);
  const LatencyProfile p = BuildProfile(s.network, s.offline, s.device, s.trace.At(0));
  const EpisodeReport report = RunEpisode(s);
  for (const BatchRecord& b : report.batches) {
    const UpdateStrategy st = UpdateStrategy::FromIndices(s.network.size(), b.selected);
    const StrategyCost cost = ComputeStrategyCost(s.network, st, p);
    EXPECT_NEAR(b.executed.t_f, p.total_forward(), 1e-9);
    EXPECT_NEAR(b.executed.t_b, cost.t_backward, 1e-9);
    EXPECT_NEAR(b.executed.t_re, cost.t_reforward, 1e-9);
    EXPECT_LE(b.executed.t_b + b.executed.t_re, b.budget_ms * (1.0 + 1e-9) + 1e-12);
    EXPECT_LT(b.predictor_error, 1e-9);
  }
}

TEST(RunEpisodeTest, SlowArrivalsNeverQueue) {
  Scenario s = LoadFixture("single_shift");
  s.arrival_interval_ms = 1e3;
  s.trace = StateTrace::Static(SystemState{}, 1e9);
  for (const BatchRecord& b : RunEpisode(s).batches) {
    EXPECT_EQ(b.turnaround, 1.0);
    EXPECT_EQ(b.wait_ms, 0.0);
  }
}

TEST(RunEpisodeTest, BackToBackArrivalsQueue) {
  Scenario s = LoadFixture("single_shift");
  s.arrival_interval_ms = 0.0;
  const EpisodeReport report = RunEpisode(s);
  EXPECT_EQ(report.batches.front().turnaround, 1.0);
  EXPECT_GT(report.batches.back().turnaround, 1.0);
}

TEST(RunEpisodeTest, ExactMomentsNeverRaiseTheLoad) {
  Scenario s = LoadFixture("single_shift");
  s.environment.infinite_batch = true;
  s.noise_floor_factor = 0.0;
  for (const BatchRecord& b : RunEpisode(s).batches) {
    EXPECT_LE(b.loss_after, b.loss_before + 1e-12);
    if (!b.selected.empty() && b.importance_captured > 0.0) {
      EXPECT_LT(b.loss_after, b.loss_before);
    }
  }
}

TEST(RunEpisodeTest, UnconstrainedBudgetCapturesEverything) {
  Scenario s = LoadFixture("single_shift");
  s.scheduler.sigma = 1.0;
  s.scheduler.resolution = 100000;
  s.adaptation_gain = 1.0;
  s.trace = StateTrace::Static(SystemState{}, 1e9);
  const EpisodeReport report = RunEpisode(s);
  const BatchRecord& first_shifted = report.batches.at(10);
  EXPECT_GT(first_shifted.importance_available, 0.0);
  EXPECT_DOUBLE_EQ(first_shifted.capture_ratio, 1.0);
}

TEST(RunEpisodeTest, ShiftedLayerIsSelectedWhileItsGapIsOpen) {
  const Scenario s = LoadFixture("single_shift");
  const std::size_t target = s.network.BackwardIndex(16);
  const EpisodeReport report = RunEpisode(s);
  int selected = 0;
  int open = 0;
  for (std::int64_t i = 10; i < s.batches; ++i) {
    const BatchRecord& b = report.batches.at(static_cast<std::size_t>(i));
    const bool hit = std::find(b.selected.begin(), b.selected.end(), target) != b.selected.end();
    if (!hit && open > 0) break;  // gap closed
    ++open;
    selected += hit;
  }
  ASSERT_GT(open, 0);
  EXPECT_GE(selected, 0.9 * open);
  for (std::int64_t i = 0; i < 10; ++i) {
    const auto& sel = report.batches.at(static_cast<std::size_t>(i)).selected;
    EXPECT_EQ(std::find(sel.begin(), sel.end(), target), sel.end()) << "batch " << i;
  }
}

TEST(RunEpisodeTest, ZeroShiftCostsAboutOneForwardPass) {
  const EpisodeReport report = RunEpisode(LoadFixture("zero_shift"));
  int nonempty = 0;
  double forward_share = 0.0;
  for (const BatchRecord& b : report.batches) {
    nonempty += !b.selected.empty();
    forward_share += b.executed.t_f / *b.replay_ms;
  }
  forward_share /= static_cast<double>(report.batches.size());
  EXPECT_LE(nonempty, static_cast<int>(report.batches.size()) / 10);
  ASSERT_TRUE(report.latency_ratio.has_value());
  EXPECT_NEAR(*report.latency_ratio, forward_share, 0.05);
}

TEST(RunEpisodeTest, ParallelModeTracksStaleness) {
  const EpisodeReport report = RunEpisode(LoadFixture("parallel"));
  bool saw_busy = false;
  for (const BatchRecord& b : report.batches) {
    EXPECT_EQ(b.turnaround, 1.0);
    EXPECT_GE(b.staleness, 1);
    EXPECT_EQ(b.start_ms, b.arrival_ms);
    if (!b.adapted) {
      saw_busy = true;
      EXPECT_TRUE(b.selected.empty());
    }
  }
  EXPECT_TRUE(saw_busy);
}

TEST(RunEpisodeTest, ControllerRespondsToQueueing) {
  Scenario s = LoadFixture("single_shift");
  s.arrival_interval_ms = 0.0;
  s.controller.enabled = true;
  s.scheduler.sigma = 0.9;
  const EpisodeReport report = RunEpisode(s);
  EXPECT_LT(report.batches.back().sigma, 0.9);
  for (const BatchRecord& b : report.batches) {
    EXPECT_GE(b.sigma, s.controller.sigma_min);
    EXPECT_LE(b.sigma, s.controller.sigma_max);
  }
}

TEST(RunEpisodeTest, SameSeedSameReport) {
  Scenario s = LoadFixture("drift");
  s.batches = 12;
  s.jitter = 0.05;
  const std::string first = io::ReportToJson(RunEpisode(s));
  EXPECT_EQ(first, io::ReportToJson(RunEpisode(s)));
  s.seed += 1;
  EXPECT_NE(first, io::ReportToJson(RunEpisode(s)));
}

}  // namespace
}  // namespace sparsetta
