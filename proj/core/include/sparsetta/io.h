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

// JSON file formats. Readers reject unknown fields unless `lenient` is set and
// report failures as InputError("<source>: <field path>: <reason>").

#ifndef SPARSETTA_IO_H_
#define SPARSETTA_IO_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sparsetta/importance.h"
#include "sparsetta/latency.h"
#include "sparsetta/model_graph.h"
#include "sparsetta/pipeline.h"
#include "sparsetta/scheduler.h"

namespace sparsetta::io {

struct ReadOptions {
  bool lenient = false;
};

// Reads a whole file; throws InputError when it cannot be opened.
std::string ReadText(const std::filesystem::path& path);

// Missing channels, out_elements, mac_count or mem_traffic are derived from
// the layer's hyperparams.
Network ParseNetwork(const std::string& text, const std::string& source,
                     ReadOptions options = {});
Network LoadNetwork(const std::filesystem::path& path, ReadOptions options = {});

OfflineProfile ParseOfflineProfile(const std::string& text,
                                   const std::string& source,
                                   ReadOptions options = {});
OfflineProfile LoadOfflineProfile(const std::filesystem::path& path,
                                  ReadOptions options = {});

DeviceSpec ParseDevice(const std::string& text, const std::string& source,
                       ReadOptions options = {});
DeviceSpec LoadDevice(const std::filesystem::path& path, ReadOptions options = {});

// A single state object or an array of timed states.
std::vector<TimedState> ParseStates(const std::string& text,
                                    const std::string& source,
                                    ReadOptions options = {});
std::vector<TimedState> LoadStates(const std::filesystem::path& path,
                                   ReadOptions options = {});
// A single state becomes a trace that never runs out.
StateTrace LoadStateTrace(const std::filesystem::path& path,
                          ReadOptions options = {});

// One JSON object per line; returned in forward order, one entry per layer.
std::vector<FeatureStats> ParseFeatureStats(const std::string& text,
                                            const std::string& source,
                                            ReadOptions options = {});
std::vector<FeatureStats> LoadFeatureStats(const std::filesystem::path& path,
                                           ReadOptions options = {});
std::string FeatureStatsToJsonl(const std::vector<FeatureStats>& stats);

struct ImportanceFile {
  ImportanceVector importance;
  std::optional<double> loss;
  std::optional<double> flops;
  std::vector<double> layer_divergence;
};

std::string ImportanceToJson(const Assessment& assessment);
ImportanceFile ParseImportance(const std::string& text, const std::string& source,
                               ReadOptions options = {});
ImportanceFile LoadImportance(const std::filesystem::path& path,
                              ReadOptions options = {});

// Layers are written in forward order with their backward index.
std::string ProfileToJson(const LatencyProfile& profile,
                          const ExpansionFactors& factors);
LatencyProfile ParseProfile(const std::string& text, const std::string& source,
                            ReadOptions options = {});
LatencyProfile LoadProfile(const std::filesystem::path& path,
                           ReadOptions options = {});

std::string ScheduleToJson(const ScheduleResult& result);

// Relative paths inside the scenario resolve against its directory.
Scenario ParseScenario(const std::string& text, const std::string& source,
                       const std::filesystem::path& base_dir,
                       ReadOptions options = {});
Scenario LoadScenario(const std::filesystem::path& path, ReadOptions options = {});

std::string ReportToJson(const EpisodeReport& report);
std::string ReportToCsv(const EpisodeReport& report);

}  // namespace sparsetta::io

#endif  // SPARSETTA_IO_H_
