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

#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "sparsetta/importance.h"
#include "sparsetta/io.h"
#include "sparsetta/latency.h"
#include "sparsetta/pipeline.h"
#include "sparsetta/scheduler.h"

namespace sparsetta {
namespace {

const std::string kData = SPARSETTA_DATA_DIR;

struct ResNet {
  Network network = io::LoadNetwork(kData + "/resnet50/network.json");
  OfflineProfile offline = io::LoadOfflineProfile(kData + "/resnet50/offline.json");
  DeviceSpec device = io::LoadDevice(kData + "/device.json");
};

const ResNet& Model() {
  static const ResNet* model = new ResNet();
  return *model;
}

ImportanceVector RandomImportance(const LatencyProfile& profile, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImportanceVector v;
  for (const LayerLatency& l : profile.layers()) v.a.push_back(l.has_params ? u(rng) : 0.0);
  return v;
}

void BM_SolveDp(benchmark::State& state) {
  const ResNet& m = Model();
  const LatencyProfile profile =
      BuildProfile(m.network, m.offline, m.device, OfflineState(m.device));
  const ImportanceVector importance = RandomImportance(profile, 1);
  const double budget = ComputeBudget(profile.total(), profile.total_forward(), 0.33).ms;
  for (auto _ : state) {
    benchmark::DoNotOptimize(SolveDp(importance, profile, budget, state.range(0)));
  }
  state.SetLabel("layers=" + std::to_string(profile.size()));
}
BENCHMARK(BM_SolveDp)->Arg(100)->Arg(500)->Arg(2000)->Unit(benchmark::kMicrosecond);

void BM_BruteForce(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  std::vector<LayerLatency> layers(n);
  for (LayerLatency& l : layers) {
    l.t_f = 1.0;
    l.t_dw = 1.0;
    l.t_dx = 1.0;
    l.t_b = 2.0;
    l.t_re = 1.0;
  }
  const LatencyProfile profile(std::move(layers));
  const ImportanceVector importance = RandomImportance(profile, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(BruteForce(importance, profile, static_cast<double>(n)));
  }
}
BENCHMARK(BM_BruteForce)->Arg(10)->Arg(14)->Arg(18)->Unit(benchmark::kMillisecond);

void BM_Assess(benchmark::State& state) {
  const ResNet& m = Model();
  const EnvironmentSpec env =
      MakeEnvironment(m.network, 3, -1.0, 1.0, 0.5, 2.0, state.range(0), {});
  const ModelResponseState model = ModelResponseState::Initial(env, 0.5);
  std::mt19937_64 rng(4);
  std::vector<Embedding> history;
  for (const FeatureStats& s : GenerateBatch(env, model, 0, rng)) history.push_back(Embed(s));
  const std::vector<FeatureStats> current = GenerateBatch(env, model, 1, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(Assess(m.network, history, current));
  }
}
BENCHMARK(BM_Assess)->Arg(16)->Unit(benchmark::kMicrosecond);

void BM_BuildProfile(benchmark::State& state) {
  const ResNet& m = Model();
  const SystemState hot = io::LoadStates(kData + "/states/hot_loaded_contention.json")
                              .front()
                              .state;
  for (auto _ : state) {
    benchmark::DoNotOptimize(BuildProfile(m.network, m.offline, m.device, hot));
  }
}
BENCHMARK(BM_BuildProfile)->Unit(benchmark::kMicrosecond);

}  // namespace
}  // namespace sparsetta

BENCHMARK_MAIN();
