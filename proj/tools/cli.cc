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

#include "cli.h"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <cmath>
#include <iomanip>
#include <optional>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "sparsetta/error.h"
#include "sparsetta/importance.h"
#include "sparsetta/io.h"
#include "sparsetta/latency.h"
#include "sparsetta/pipeline.h"
#include "sparsetta/scheduler.h"

namespace sparsetta::cli {
namespace {

struct Options {
  bool lenient = false;
  std::string out = "-";

  // assess
  std::string network;
  std::string history;
  std::string current;
  std::string kl_mode = "gaussian";

  // predict
  std::string offline;
  std::string device;
  std::string state;

  // schedule
  std::string importance;
  std::string profile;
  double sigma = 0.33;
  std::int64_t resolution = 500;
  std::optional<double> budget_ms;
  bool oracle = false;

  // simulate
  std::string scenario;
  std::string csv;
  std::optional<std::uint64_t> seed;
  std::optional<double> sim_sigma;
  std::optional<std::string> mode;
  std::optional<double> alpha;
  bool replay = false;
  bool no_replay = false;

  // oracle-check
  std::int64_t instances = 200;
  std::int64_t max_n = 14;
  std::uint64_t check_seed = 0;
  std::int64_t check_resolution = 10000;
};

void Write(const std::string& path, const std::string& content, std::ostream& out) {
  if (path == "-") {
    out << content;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path);
  f << content;
  if (!f) throw InputError("failed writing " + path);
}

KlMode ParseMode(const std::string& name) {
  if (name == "gaussian") return KlMode::kGaussian;
  if (name == "elementwise") return KlMode::kElementwise;
  throw InputError("--kl-mode: expected gaussian or elementwise, got '" + name + "'");
}

// Stand-in network when assess runs without one: every layer is
// parameterized and sized from the stats.
Network NetworkFromStats(const std::vector<FeatureStats>& stats) {
  std::vector<LayerSpec> layers;
  for (std::size_t id = 0; id < stats.size(); ++id) {
    LayerSpec l;
    l.id = static_cast<int>(id);
    l.kind = LayerKind::kLinear;
    l.channels = static_cast<std::int64_t>(stats[id].means.size());
    l.out_elements = l.channels;
    layers.push_back(l);
  }
  return Network("stats", std::move(layers));
}

int CmdAssess(const Options& o, std::ostream& out) {
  const io::ReadOptions ro{o.lenient};
  const KlMode mode = ParseMode(o.kl_mode);
  const std::vector<FeatureStats> history = io::LoadFeatureStats(o.history, ro);
  const std::vector<FeatureStats> current = io::LoadFeatureStats(o.current, ro);
  if (history.size() != current.size()) {
    const std::size_t layer = std::min(history.size(), current.size());
    throw InputError("layer " + std::to_string(layer) + ": present in " +
                     (history.size() > current.size() ? o.history : o.current) +
                     " but missing from " +
                     (history.size() > current.size() ? o.current : o.history));
  }
  const Network network =
      o.network.empty() ? NetworkFromStats(current) : io::LoadNetwork(o.network, ro);
  std::vector<Embedding> embeddings;
  for (const FeatureStats& s : history) embeddings.push_back(Embed(s));
  const Assessment a = Assess(network, embeddings, current, mode);
  Write(o.out, io::ImportanceToJson(a), out);
  return kExitOk;
}

int CmdPredict(const Options& o, std::ostream& out) {
  const io::ReadOptions ro{o.lenient};
  const Network network = io::LoadNetwork(o.network, ro);
  const OfflineProfile offline = io::LoadOfflineProfile(o.offline, ro);
  const DeviceSpec device = io::LoadDevice(o.device, ro);
  const std::vector<TimedState> states = io::LoadStates(o.state, ro);
  const SystemState& state = states.front().state;
  const ExpansionFactors factors = ComputeExpansionFactors(device, state);
  const LatencyProfile profile = BuildProfile(network, offline, device, factors);
  Write(o.out, io::ProfileToJson(profile, factors), out);
  return kExitOk;
}

int CmdSchedule(const Options& o, std::ostream& out, std::ostream& err) {
  const io::ReadOptions ro{o.lenient};
  const io::ImportanceFile imp = io::LoadImportance(o.importance, ro);
  const LatencyProfile profile = io::LoadProfile(o.profile, ro);
  SchedulerConfig config;
  config.sigma = o.sigma;
  config.resolution = o.resolution;
  config.oracle = o.oracle;
  config.Validate();

  ScheduleResult result;
  double budget = 0.0;
  if (o.budget_ms) {
    if (!std::isfinite(*o.budget_ms)) throw InputError("--budget-ms must be finite");
    budget = *o.budget_ms;
    result = SolveDp(imp.importance, profile, budget, config.resolution);
  } else {
    result = SolveDp(imp.importance, profile, config);
    budget = result.budget_ms;
  }
  if (result.budget_warning) {
    err << "warning: latency budget is not positive; only the empty strategy "
           "is feasible\n";
  }
  Write(o.out, io::ScheduleToJson(result), out);

  if (o.oracle) {
    const ScheduleResult ref = BruteForce(imp.importance, profile, budget,
                                          OracleCost::kDiscretized,
                                          config.resolution);
    std::ostringstream line;
    line << std::setprecision(17) << "dp=" << result.achieved_importance
         << " brute_force=" << ref.achieved_importance;
    if (ref.achieved_importance != result.achieved_importance) {
      err << "MISMATCH " << line.str() << "\n";
      return kExitCheckFailed;
    }
    err << "MATCH " << line.str() << "\n";
  }
  return kExitOk;
}

int CmdSimulate(const Options& o, std::ostream& out) {
  const io::ReadOptions ro{o.lenient};
  Scenario s = io::LoadScenario(o.scenario, ro);
  if (o.seed) s.seed = *o.seed;
  if (o.sim_sigma) s.scheduler.sigma = *o.sim_sigma;
  if (o.alpha) s.alpha = *o.alpha;
  if (o.mode) {
    if (*o.mode == "sequential") {
      s.mode = PipelineMode::kSequential;
    } else if (*o.mode == "parallel") {
      s.mode = PipelineMode::kParallel;
    } else {
      throw InputError("--mode: expected sequential or parallel");
    }
  }
  if (o.replay) s.full_update_replay = true;
  if (o.no_replay) s.full_update_replay = false;
  const EpisodeReport report = RunEpisode(s);
  Write(o.out, io::ReportToJson(report), out);
  if (!o.csv.empty()) Write(o.csv, io::ReportToCsv(report), out);
  return kExitOk;
}

struct OracleInstance {
  ImportanceVector importance;
  LatencyProfile profile;
  double budget_ms = 0.0;
};

// Timings and importances on a 1/16 grid so every sum is exact.
OracleInstance MakeInstance(std::uint64_t seed, std::uint64_t index,
                            std::int64_t max_n) {
  std::seed_seq seq{seed, index};
  std::mt19937_64 rng(seq);
  auto grid = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng) / 16.0;
  };
  const auto n = static_cast<std::size_t>(
      std::uniform_int_distribution<std::int64_t>(1, max_n)(rng));
  std::bernoulli_distribution has_params(0.8);
  std::vector<LayerLatency> layers(n);
  ImportanceVector importance;
  importance.a.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    LayerLatency& l = layers[i];
    l.has_params = has_params(rng);
    l.t_f = grid(1, 32);
    l.t_dw = l.has_params ? grid(1, 32) : 0.0;
    l.t_dx = grid(0, 32);
    l.t_b = l.t_dw + l.t_dx;
    l.t_off = l.t_b;
    l.t_re = grid(1, 32);
    l.eta = 1.0;
    if (l.has_params) importance.a[i] = grid(0, 64);
  }
  OracleInstance inst{importance, LatencyProfile(std::move(layers)), 0.0};
  const double full =
      ComputeStrategyCost(UpdateStrategy::Full(inst.profile), inst.profile)
          .t_total_extra;
  inst.budget_ms = full * grid(1, 16);
  return inst;
}

int CmdOracleCheck(const Options& o, std::ostream& out) {
  if (o.instances < 1) throw InputError("--instances must be >= 1");
  if (o.max_n < 1 || o.max_n > static_cast<std::int64_t>(kBruteForceMaxLayers)) {
    throw InputError("--max-n must lie in [1, " +
                     std::to_string(kBruteForceMaxLayers) + "]");
  }
  if (o.check_resolution < 1) throw InputError("--resolution must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  std::int64_t matched = 0;
  for (std::int64_t i = 0; i < o.instances; ++i) {
    const OracleInstance inst =
        MakeInstance(o.check_seed, static_cast<std::uint64_t>(i), o.max_n);
    const ScheduleResult dp =
        SolveDp(inst.importance, inst.profile, inst.budget_ms, o.check_resolution);
    const ScheduleResult bf =
        BruteForce(inst.importance, inst.profile, inst.budget_ms,
                   OracleCost::kDiscretized, o.check_resolution);
    if (dp.achieved_importance == bf.achieved_importance) {
      ++matched;
      continue;
    }
    nlohmann::ordered_json j;
    j["instance"] = i;
    j["seed"] = o.check_seed;
    j["resolution"] = o.check_resolution;
    j["budget_ms"] = inst.budget_ms;
    j["importance"] = inst.importance.a;
    j["profile"] = nlohmann::ordered_json::parse(
        io::ProfileToJson(inst.profile, ExpansionFactors{}));
    j["dp_objective"] = dp.achieved_importance;
    j["brute_force_objective"] = bf.achieved_importance;
    out << matched << "/" << o.instances << " match (mismatch at instance " << i
        << ")\n"
        << j.dump(2) << "\n";
    return kExitCheckFailed;
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out << matched << "/" << o.instances << " match\n"
      << "wall time: " << std::fixed << std::setprecision(3) << seconds << " s\n";
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  Options o;
  CLI::App app{"sparsetta: latency-aware sparse test-time adaptation toolkit",
               "sparsetta"};
  app.require_subcommand(1);
  app.add_flag("--lenient", o.lenient, "Ignore unknown fields in input files");

  CLI::App* assess = app.add_subcommand("assess", "Score layer importance");
  assess->add_option("--history", o.history, "Historical layer stats (JSONL)")
      ->required();
  assess->add_option("--current", o.current, "Current batch layer stats (JSONL)")
      ->required();
  assess->add_option("--network", o.network, "Network description (JSON)");
  assess->add_option("--kl-mode", o.kl_mode, "gaussian or elementwise");
  assess->add_option("--out", o.out, "Output path, - for stdout");

  CLI::App* predict = app.add_subcommand("predict", "Predict runtime layer latencies");
  predict->add_option("--network", o.network, "Network description (JSON)")->required();
  predict->add_option("--offline", o.offline, "Offline latency profile (JSON)")
      ->required();
  predict->add_option("--device", o.device, "Device description (JSON)")->required();
  predict->add_option("--state", o.state, "System state (JSON)")->required();
  predict->add_option("--out", o.out, "Output path, - for stdout");

  CLI::App* schedule = app.add_subcommand("schedule", "Select layers to update");
  schedule->add_option("--importance", o.importance, "Importance file (JSON)")
      ->required();
  schedule->add_option("--profile", o.profile, "Runtime profile (JSON)")->required();
  schedule->add_option("--sigma", o.sigma, "Acceleration factor")->capture_default_str();
  schedule->add_option("--resolution", o.resolution, "Budget units")->capture_default_str();
  schedule->add_option("--budget-ms", o.budget_ms, "Override the latency budget");
  schedule->add_flag("--oracle", o.oracle, "Cross-check against brute force");
  schedule->add_option("--out", o.out, "Output path, - for stdout");

  CLI::App* simulate = app.add_subcommand("simulate", "Run a pipeline episode");
  simulate->add_option("--scenario", o.scenario, "Scenario file (JSON)")->required();
  simulate->add_option("--out", o.out, "Report path, - for stdout");
  simulate->add_option("--csv", o.csv, "Per-batch CSV path");
  simulate->add_option("--seed", o.seed, "Override the scenario seed");
  simulate->add_option("--sigma", o.sim_sigma, "Override the acceleration factor");
  simulate->add_option("--alpha", o.alpha, "Override the EMA rate");
  simulate->add_option("--mode", o.mode, "sequential or parallel");
  simulate->add_flag("--replay", o.replay, "Run the full-update replay baseline");
  simulate->add_flag("--no-replay", o.no_replay, "Skip the full-update replay");

  CLI::App* check = app.add_subcommand("oracle-check",
                                       "Compare the DP against brute force");
  check->add_option("--instances", o.instances, "Random instances")->capture_default_str();
  check->add_option("--max-n", o.max_n, "Largest layer count")->capture_default_str();
  check->add_option("--seed", o.check_seed, "Instance seed")->capture_default_str();
  check->add_option("--resolution", o.check_resolution, "Budget units")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }

  try {
    if (assess->parsed()) return CmdAssess(o, out);
    if (predict->parsed()) return CmdPredict(o, out);
    if (schedule->parsed()) return CmdSchedule(o, out, err);
    if (simulate->parsed()) return CmdSimulate(o, out);
    if (check->parsed()) return CmdOracleCheck(o, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace sparsetta::cli
