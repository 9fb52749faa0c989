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

#include "sparsetta/io.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "sparsetta/error.h"

namespace sparsetta::io {
namespace {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

struct Context {
  std::string source;
  bool lenient = false;

  [[noreturn]] void Fail(const std::string& path, const std::string& reason) const {
    throw InputError(source + ": " + (path.empty() ? "<root>" : path) + ": " + reason);
  }
};

Json ParseJson(const std::string& text, const Context& ctx) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InputError(ctx.source + ": invalid JSON: " + e.what());
  }
}

std::string Join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string Index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

double AsDouble(const Json& j, const std::string& path, const Context& ctx) {
  if (!j.is_number()) ctx.Fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) ctx.Fail(path, "expected a finite number");
  return v;
}

std::int64_t AsInt(const Json& j, const std::string& path, const Context& ctx) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9.0e15) {
      return static_cast<std::int64_t>(v);
    }
  }
  ctx.Fail(path, "expected an integer");
}

bool AsBool(const Json& j, const std::string& path, const Context& ctx) {
  if (!j.is_boolean()) ctx.Fail(path, "expected true or false");
  return j.get<bool>();
}

std::string AsString(const Json& j, const std::string& path, const Context& ctx) {
  if (!j.is_string()) ctx.Fail(path, "expected a string");
  return j.get<std::string>();
}

std::vector<double> AsDoubles(const Json& j, const std::string& path,
                              const Context& ctx) {
  if (!j.is_array()) ctx.Fail(path, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(AsDouble(j[i], Index(path, i), ctx));
  }
  return out;
}

// Field access on one JSON object with unknown-field detection.
class Object {
 public:
  Object(const Json& j, std::string path, const Context& ctx)
      : j_(j), path_(std::move(path)), ctx_(ctx) {
    if (!j_.is_object()) ctx_.Fail(path_, "expected an object");
  }

  bool Has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const Json& Get(const std::string& key) {
    if (!Has(key)) ctx_.Fail(Join(path_, key), "missing required field");
    return j_.at(key);
  }

  std::string PathOf(const std::string& key) const { return Join(path_, key); }

  double Double(const std::string& key) {
    return AsDouble(Get(key), PathOf(key), ctx_);
  }
  double Double(const std::string& key, double fallback) {
    return Has(key) ? Double(key) : fallback;
  }
  std::int64_t Int(const std::string& key) { return AsInt(Get(key), PathOf(key), ctx_); }
  std::int64_t Int(const std::string& key, std::int64_t fallback) {
    return Has(key) ? Int(key) : fallback;
  }
  bool Bool(const std::string& key, bool fallback) {
    return Has(key) ? AsBool(Get(key), PathOf(key), ctx_) : fallback;
  }
  std::string String(const std::string& key) {
    return AsString(Get(key), PathOf(key), ctx_);
  }
  std::string String(const std::string& key, const std::string& fallback) {
    return Has(key) ? String(key) : fallback;
  }
  std::vector<double> Doubles(const std::string& key) {
    return AsDoubles(Get(key), PathOf(key), ctx_);
  }
  const Json& Array(const std::string& key) {
    const Json& a = Get(key);
    if (!a.is_array()) ctx_.Fail(PathOf(key), "expected an array");
    return a;
  }
  Object Sub(const std::string& key) { return Object(Get(key), PathOf(key), ctx_); }

  [[noreturn]] void Fail(const std::string& key, const std::string& reason) const {
    ctx_.Fail(PathOf(key), reason);
  }

  // Rejects fields that were never looked up.
  void Done() const {
    if (ctx_.lenient) return;
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) ctx_.Fail(Join(path_, key), "unknown field");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  const Context& ctx_;
  std::set<std::string> seen_;
};

// Rethrows model-level validation failures with the file as context.
template <typename F>
auto WithSource(const Context& ctx, const std::string& path, F&& f) {
  try {
    return f();
  } catch (const InputError& e) {
    ctx.Fail(path, e.what());
  }
}

std::string FormatDouble(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, end);
}

std::string Dump(const OrderedJson& j) { return j.dump(2) + "\n"; }

LayerHyperparams ParseHyperparams(Object o) {
  LayerHyperparams hp;
  hp.batch = o.Int("batch", 1);
  hp.in_channels = o.Int("in_channels", 0);
  hp.out_channels = o.Int("out_channels", 0);
  hp.kernel_h = o.Int("kernel_h", 0);
  hp.kernel_w = o.Int("kernel_w", 0);
  hp.in_height = o.Int("in_height", 0);
  hp.in_width = o.Int("in_width", 0);
  hp.height = o.Int("height", 0);
  hp.width = o.Int("width", 0);
  hp.in_features = o.Int("in_features", 0);
  hp.out_features = o.Int("out_features", 0);
  hp.tokens = o.Int("tokens", 0);
  hp.hidden = o.Int("hidden", 0);
  hp.ffn_hidden = o.Int("ffn_hidden", 0);
  o.Done();
  return hp;
}

std::uint64_t NonNegative(std::int64_t v, Object& o, const std::string& key) {
  if (v < 0) o.Fail(key, "must be >= 0");
  return static_cast<std::uint64_t>(v);
}

SystemState ParseState(Object& o, const Context& ctx) {
  SystemState s;
  s.n = o.Int("n");
  if (s.n < 0) o.Fail("n", "must be >= 0");
  s.tem_c = o.Double("tem_c");
  s.phi = o.Double("phi");
  if (!(s.phi > 0.0 && s.phi <= 1.0)) o.Fail("phi", "must lie in (0, 1]");
  (void)ctx;
  return s;
}

KlMode ParseKlMode(const std::string& name, Object& o, const std::string& key) {
  if (name == "gaussian") return KlMode::kGaussian;
  if (name == "elementwise") return KlMode::kElementwise;
  o.Fail(key, "unknown KL mode '" + name + "' (expected gaussian or elementwise)");
}

const char* KlModeName(KlMode mode) {
  return mode == KlMode::kGaussian ? "gaussian" : "elementwise";
}

std::filesystem::path Resolve(const std::filesystem::path& base,
                              const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

OrderedJson PhaseJson(const PhaseLatency& p) {
  OrderedJson j;
  j["t_f_ms"] = p.t_f;
  j["t_b_ms"] = p.t_b;
  j["t_re_ms"] = p.t_re;
  return j;
}

}  // namespace

std::string ReadText(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Network ParseNetwork(const std::string& text, const std::string& source,
                     ReadOptions options) {
  const Context ctx{source, options.lenient};
  const Json root = ParseJson(text, ctx);
  Object o(root, "", ctx);
  const std::string name = o.String("name", "network");
  const auto width = o.Int("element_width", 4);
  if (width < 1 || width > 64) o.Fail("element_width", "must lie in [1, 64]");
  const Json& layers_json = o.Array("layers");
  std::vector<LayerSpec> layers;
  for (std::size_t i = 0; i < layers_json.size(); ++i) {
    const std::string path = Index("layers", i);
    Object l(layers_json[i], path, ctx);
    LayerSpec spec;
    const std::int64_t id = l.Int("id");
    if (id < 0 || id > std::numeric_limits<int>::max()) l.Fail("id", "out of range");
    spec.id = static_cast<int>(id);
    const std::string kind = l.String("kind");
    spec.kind = WithSource(ctx, l.PathOf("kind"), [&] { return ParseLayerKind(kind); });
    spec.has_params = l.Bool("has_params", KindHasParams(spec.kind));
    if (l.Has("hyperparams")) {
      spec.hyperparams = ParseHyperparams(l.Sub("hyperparams"));
    }
    std::optional<LayerShape> shape;
    std::optional<LayerCosts> costs;
    if (spec.hyperparams) {
      shape = WithSource(ctx, l.PathOf("hyperparams"),
                         [&] { return DeriveShape(spec.kind, *spec.hyperparams); });
      costs = WithSource(ctx, l.PathOf("hyperparams"), [&] {
        return DeriveCosts(spec.kind, *spec.hyperparams, static_cast<int>(width));
      });
    }
    if (l.Has("channels")) {
      spec.channels = l.Int("channels");
    } else if (shape) {
      spec.channels = shape->channels;
    } else {
      l.Fail("channels", "missing required field (no hyperparams to derive it)");
    }
    if (l.Has("out_elements")) {
      spec.out_elements = l.Int("out_elements");
    } else if (shape) {
      spec.out_elements = shape->out_elements;
    } else {
      spec.out_elements = spec.channels;
    }
    spec.mac_count = l.Has("mac_count") ? NonNegative(l.Int("mac_count"), l, "mac_count")
                     : costs           ? costs->mac_count
                                       : 0;
    spec.mem_traffic = l.Has("mem_traffic")
                           ? NonNegative(l.Int("mem_traffic"), l, "mem_traffic")
                       : costs ? costs->mem_traffic
                               : 0;
    l.Done();
    layers.push_back(std::move(spec));
  }
  o.Done();
  return WithSource(ctx, "layers", [&] {
    return Network(name, std::move(layers), static_cast<int>(width));
  });
}

Network LoadNetwork(const std::filesystem::path& path, ReadOptions options) {
  return ParseNetwork(ReadText(path), path.string(), options);
}

OfflineProfile ParseOfflineProfile(const std::string& text,
                                   const std::string& source,
                                   ReadOptions options) {
  const Context ctx{source, options.lenient};
  const Json root = ParseJson(text, ctx);
  Object o(root, "", ctx);
  const Json& layers = o.Array("layers");
  OfflineProfile profile;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Object l(layers[i], Index("layers", i), ctx);
    OfflineLayerTiming t;
    const std::int64_t id = l.Int("layer_id");
    if (id < 0 || id > std::numeric_limits<int>::max()) {
      l.Fail("layer_id", "out of range");
    }
    t.layer_id = static_cast<int>(id);
    t.t_f = l.Double("t_f_ms");
    t.t_b_off = l.Double("t_b_off_ms");
    t.t_re_off = l.Double("t_re_off_ms", t.t_f);
    if (t.t_f < 0.0) l.Fail("t_f_ms", "must be >= 0");
    if (t.t_b_off < 0.0) l.Fail("t_b_off_ms", "must be >= 0");
    if (t.t_re_off < 0.0) l.Fail("t_re_off_ms", "must be >= 0");
    l.Done();
    profile.layers.push_back(t);
  }
  o.Done();
  return profile;
}

OfflineProfile LoadOfflineProfile(const std::filesystem::path& path,
                                  ReadOptions options) {
  return ParseOfflineProfile(ReadText(path), path.string(), options);
}

DeviceSpec ParseDevice(const std::string& text, const std::string& source,
                       ReadOptions options) {
  const Context ctx{source, options.lenient};
  const Json root = ParseJson(text, ctx);
  Object o(root, "", ctx);
  DeviceSpec d;
  d.peak_flops = o.Double("peak_flops");
  d.b_cache = o.Double("b_cache");
  d.b_dram = o.Double("b_dram");
  const Json& dvfs = o.Array("dvfs");
  for (std::size_t i = 0; i < dvfs.size(); ++i) {
    Object p(dvfs[i], Index("dvfs", i), ctx);
    d.dvfs.push_back({p.Double("tem_c"), p.Double("freq_hz")});
    p.Done();
  }
  d.proc_overhead_k = o.Double("proc_overhead_k", 0.0);
  d.tem_off = o.Double("tem_off", d.tem_off);
  d.phi_off = o.Double("phi_off", d.phi_off);
  const std::string mode = o.String("pi2_mode", "normalized");
  if (mode == "normalized") {
    d.pi2_convention = Pi2Convention::kNormalized;
  } else if (mode == "literal") {
    d.pi2_convention = Pi2Convention::kLiteral;
  } else {
    o.Fail("pi2_mode", "expected normalized or literal");
  }
  o.Done();
  WithSource(ctx, "", [&] {
    d.Validate();
    return 0;
  });
  return d;
}

DeviceSpec LoadDevice(const std::filesystem::path& path, ReadOptions options) {
  return ParseDevice(ReadText(path), path.string(), options);
}

std::vector<TimedState> ParseStates(const std::string& text,
                                    const std::string& source,
                                    ReadOptions options) {
  const Context ctx{source, options.lenient};
  const Json root = ParseJson(text, ctx);
  std::vector<TimedState> out;
  if (root.is_object()) {
    Object o(root, "", ctx);
    TimedState t;
    t.t_ms = o.Double("t_ms", 0.0);
    t.state = ParseState(o, ctx);
    o.Done();
    out.push_back(t);
    return out;
  }
  if (!root.is_array() || root.empty()) {
    ctx.Fail("", "expected a state object or a non-empty array of timed states");
  }
  for (std::size_t i = 0; i < root.size(); ++i) {
    Object o(root[i], Index("", i), ctx);
    TimedState t;
    t.t_ms = o.Double("t_ms");
    t.state = ParseState(o, ctx);
    o.Done();
    out.push_back(t);
  }
  return out;
}

std::vector<TimedState> LoadStates(const std::filesystem::path& path,
                                   ReadOptions options) {
  return ParseStates(ReadText(path), path.string(), options);
}

StateTrace LoadStateTrace(const std::filesystem::path& path, ReadOptions options) {
  std::vector<TimedState> states = LoadStates(path, options);
  if (states.size() == 1) {
    return StateTrace::Static(states.front().state,
                              std::numeric_limits<double>::infinity());
  }
  const Context ctx{path.string(), options.lenient};
  return WithSource(ctx, "", [&] { return StateTrace(std::move(states)); });
}

std::vector<FeatureStats> ParseFeatureStats(const std::string& text,
                                            const std::string& source,
                                            ReadOptions options) {
  std::vector<std::optional<FeatureStats>> by_layer;
  std::istringstream lines(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const Context ctx{source + ":" + std::to_string(line_no), options.lenient};
    const Json j = ParseJson(line, ctx);
    Object o(j, "", ctx);
    const std::int64_t id = o.Int("layer_id");
    if (id < 0 || id > 1'000'000) o.Fail("layer_id", "out of range");
    FeatureStats s;
    s.means = o.Doubles("means");
    s.vars = o.Doubles("vars");
    s.sample_count = o.Int("samples", 1);
    if (s.means.empty()) o.Fail("means", "must hold at least one channel");
    if (s.means.size() != s.vars.size()) o.Fail("vars", "length differs from means");
    for (std::size_t c = 0; c < s.vars.size(); ++c) {
      if (s.vars[c] < 0.0) o.Fail(Index("vars", c), "variance must be >= 0");
    }
    if (s.sample_count < 1) o.Fail("samples", "must be >= 1");
    o.Done();
    const auto slot = static_cast<std::size_t>(id);
    if (slot >= by_layer.size()) by_layer.resize(slot + 1);
    if (by_layer[slot]) o.Fail("layer_id", "duplicate layer " + std::to_string(id));
    by_layer[slot] = std::move(s);
  }
  std::vector<FeatureStats> out;
  for (std::size_t id = 0; id < by_layer.size(); ++id) {
    if (!by_layer[id]) {
      throw InputError(source + ": missing stats for layer " + std::to_string(id));
    }
    out.push_back(std::move(*by_layer[id]));
  }
  if (out.empty()) throw InputError(source + ": no layer stats");
  return out;
}

std::vector<FeatureStats> LoadFeatureStats(const std::filesystem::path& path,
                                           ReadOptions options) {
  return ParseFeatureStats(ReadText(path), path.string(), options);
}

std::string FeatureStatsToJsonl(const std::vector<FeatureStats>& stats) {
  std::string out;
  for (std::size_t id = 0; id < stats.size(); ++id) {
    OrderedJson j;
    j["layer_id"] = id;
    j["means"] = stats[id].means;
    j["vars"] = stats[id].vars;
    j["samples"] = stats[id].sample_count;
    out += j.dump() + "\n";
  }
  return out;
}

std::string ImportanceToJson(const Assessment& assessment) {
  OrderedJson j;
  j["a"] = assessment.importance.a;
  j["mode"] = KlModeName(assessment.importance.mode);
  j["loss"] = assessment.loss;
  j["flops"] = assessment.flops;
  j["layer_divergence"] = assessment.layer_divergence;
  return Dump(j);
}

ImportanceFile ParseImportance(const std::string& text, const std::string& source,
                               ReadOptions options) {
  const Context ctx{source, options.lenient};
  const Json root = ParseJson(text, ctx);
  Object o(root, "", ctx);
  ImportanceFile f;
  f.importance.a = o.Doubles("a");
  for (std::size_t i = 0; i < f.importance.a.size(); ++i) {
    if (f.importance.a[i] < 0.0) o.Fail(Index("a", i), "importance must be >= 0");
  }
  f.importance.mode = ParseKlMode(o.String("mode", "gaussian"), o, "mode");
  if (o.Has("loss")) f.loss = o.Double("loss");
  if (o.Has("flops")) f.flops = o.Double("flops");
  if (o.Has("layer_divergence")) f.layer_divergence = o.Doubles("layer_divergence");
  o.Done();
  return f;
}

ImportanceFile LoadImportance(const std::filesystem::path& path,
                              ReadOptions options) {
  return ParseImportance(ReadText(path), path.string(), options);
}

std::string ProfileToJson(const LatencyProfile& profile,
                          const ExpansionFactors& factors) {
  OrderedJson j;
  j["pi1"] = factors.pi1;
  j["pi2"] = factors.pi2;
  OrderedJson totals;
  totals["t_f_ms"] = profile.total_forward();
  totals["t_b_ms"] = profile.total_backward();
  totals["t_re_ms"] = profile.total_reforward();
  totals["total_ms"] = profile.total();
  j["totals"] = totals;
  OrderedJson layers = OrderedJson::array();
  const std::size_t n = profile.size();
  for (std::size_t id = 0; id < n; ++id) {
    const std::size_t b = n - id;
    const LayerLatency& l = profile.at(b);
    OrderedJson e;
    e["layer_id"] = id;
    e["backward_index"] = b;
    e["has_params"] = l.has_params;
    e["t_f_ms"] = l.t_f;
    e["t_off_ms"] = l.t_off;
    e["t_b_ms"] = l.t_b;
    e["t_dw_ms"] = l.t_dw;
    e["t_dx_ms"] = l.t_dx;
    e["t_re_ms"] = l.t_re;
    if (std::isfinite(l.eta)) {
      e["eta"] = l.eta;
    } else {
      e["eta"] = nullptr;
    }
    layers.push_back(std::move(e));
  }
  j["layers"] = std::move(layers);
  return Dump(j);
}

LatencyProfile ParseProfile(const std::string& text, const std::string& source,
                            ReadOptions options) {
  const Context ctx{source, options.lenient};
  const Json root = ParseJson(text, ctx);
  Object o(root, "", ctx);
  o.Has("pi1");
  o.Has("pi2");
  o.Has("totals");
  const Json& layers = o.Array("layers");
  const std::size_t n = layers.size();
  std::vector<LayerLatency> by_backward(n);
  std::vector<bool> filled(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    Object l(layers[i], Index("layers", i), ctx);
    const std::int64_t id = l.Int("layer_id", static_cast<std::int64_t>(i));
    if (id < 0 || static_cast<std::size_t>(id) >= n) l.Fail("layer_id", "out of range");
    const std::size_t b = n - static_cast<std::size_t>(id);
    if (l.Has("backward_index") && l.Int("backward_index") != static_cast<std::int64_t>(b)) {
      l.Fail("backward_index", "inconsistent with layer_id");
    }
    if (filled[b - 1]) l.Fail("layer_id", "duplicate layer");
    filled[b - 1] = true;
    LayerLatency& e = by_backward[b - 1];
    e.has_params = l.Bool("has_params", true);
    e.t_f = l.Double("t_f_ms");
    e.t_b = l.Double("t_b_ms");
    e.t_dw = l.Double("t_dw_ms");
    e.t_dx = l.Double("t_dx_ms");
    e.t_re = l.Double("t_re_ms");
    e.t_off = l.Double("t_off_ms", e.t_b);
    e.eta = l.Has("eta") ? l.Double("eta") : kComputeBound;
    l.Done();
  }
  o.Done();
  return WithSource(ctx, "layers", [&] { return LatencyProfile(std::move(by_backward)); });
}

LatencyProfile LoadProfile(const std::filesystem::path& path, ReadOptions options) {
  return ParseProfile(ReadText(path), path.string(), options);
}

std::string ScheduleToJson(const ScheduleResult& r) {
  OrderedJson j;
  j["selected_backward_indices"] = r.strategy.indices();
  j["achieved_importance"] = r.achieved_importance;
  j["t_backward_ms"] = r.predicted_extra.t_backward;
  j["t_reforward_ms"] = r.predicted_extra.t_reforward;
  j["t_total_extra_ms"] = r.predicted_extra.t_total_extra;
  j["budget_ms"] = r.budget_ms;
  j["slack_ms"] = r.slack_ms;
  j["budget_warning"] = r.budget_warning;
  OrderedJson sub;
  sub["explored"] = r.subproblems_explored;
  sub["pruned"] = r.subproblems_pruned;
  j["subproblems"] = sub;
  return Dump(j);
}

Scenario ParseScenario(const std::string& text, const std::string& source,
                       const std::filesystem::path& base_dir,
                       ReadOptions options) {
  const Context ctx{source, options.lenient};
  const Json root = ParseJson(text, ctx);
  Object o(root, "", ctx);
  Scenario s;
  const auto load = [&](const std::string& key, auto loader) {
    const std::filesystem::path p = Resolve(base_dir, o.String(key));
    try {
      return loader(p);
    } catch (const InputError& e) {
      o.Fail(key, e.what());
    }
  };
  s.network = load("network", [&](const auto& p) { return LoadNetwork(p, options); });
  s.offline = load("offline_profile",
                   [&](const auto& p) { return LoadOfflineProfile(p, options); });
  s.device = load("device", [&](const auto& p) { return LoadDevice(p, options); });
  s.trace = load("state_trace",
                 [&](const auto& p) { return LoadStateTrace(p, options); });

  const std::string mode = o.String("mode", "sequential");
  if (mode == "sequential") {
    s.mode = PipelineMode::kSequential;
  } else if (mode == "parallel") {
    s.mode = PipelineMode::kParallel;
  } else {
    o.Fail("mode", "expected sequential or parallel");
  }
  const std::int64_t seed = o.Int("seed", 0);
  if (seed < 0) o.Fail("seed", "must be >= 0");
  s.seed = static_cast<std::uint64_t>(seed);
  s.batches = o.Int("batches", s.batches);
  s.alpha = o.Double("alpha", s.alpha);
  s.adaptation_gain = o.Double("adaptation_gain", s.adaptation_gain);
  s.kl_mode = ParseKlMode(o.String("kl_mode", "gaussian"), o, "kl_mode");
  s.jitter = o.Double("jitter", s.jitter);
  s.noise_floor_factor = o.Double("noise_floor_factor", s.noise_floor_factor);
  if (o.Has("arrival_interval_ms")) s.arrival_interval_ms = o.Double("arrival_interval_ms");
  s.full_update_replay = o.Bool("full_update_replay", s.full_update_replay);

  if (o.Has("scheduler")) {
    Object sch = o.Sub("scheduler");
    s.scheduler.sigma = sch.Double("sigma", s.scheduler.sigma);
    s.scheduler.resolution = sch.Int("resolution", s.scheduler.resolution);
    sch.Done();
  }
  if (o.Has("controller")) {
    Object c = o.Sub("controller");
    s.controller.enabled = c.Bool("enabled", true);
    const std::int64_t window = c.Int("window", 5);
    if (window < 1) c.Fail("window", "must be >= 1");
    s.controller.window = static_cast<std::size_t>(window);
    s.controller.decrease = c.Double("decrease", s.controller.decrease);
    s.controller.increase = c.Double("increase", s.controller.increase);
    s.controller.sigma_min = c.Double("sigma_min", s.controller.sigma_min);
    s.controller.sigma_max = c.Double("sigma_max", s.controller.sigma_max);
    s.controller.target_r = c.Double("target_r", s.controller.target_r);
    c.Done();
  }

  Object e = o.Sub("environment");
  const std::int64_t env_seed = e.Int("seed", seed);
  if (env_seed < 0) e.Fail("seed", "must be >= 0");
  const std::int64_t batch_size = e.Int("batch_size", 4);
  std::vector<double> mean_range{-1.0, 1.0};
  std::vector<double> var_range{0.5, 2.0};
  if (e.Has("mean_range")) mean_range = e.Doubles("mean_range");
  if (e.Has("var_range")) var_range = e.Doubles("var_range");
  if (mean_range.size() != 2 || !(mean_range[0] <= mean_range[1])) {
    e.Fail("mean_range", "expected [low, high]");
  }
  if (var_range.size() != 2 || !(var_range[0] > 0.0 && var_range[0] <= var_range[1])) {
    e.Fail("var_range", "expected [low, high] with low > 0");
  }
  const bool infinite = e.Bool("infinite_batch", false);
  std::vector<ShiftEvent> shifts;
  if (e.Has("shifts")) {
    const Json& arr = e.Array("shifts");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Object sh(arr[i], Index(e.PathOf("shifts"), i), ctx);
      ShiftEvent ev;
      ev.batch_index = sh.Int("batch_index");
      const Json& layers = sh.Array("layers");
      for (std::size_t k = 0; k < layers.size(); ++k) {
        const std::int64_t id = AsInt(layers[k], Index(sh.PathOf("layers"), k), ctx);
        if (id < 0 || id > std::numeric_limits<int>::max()) {
          ctx.Fail(Index(sh.PathOf("layers"), k), "out of range");
        }
        ev.layers.push_back(static_cast<int>(id));
      }
      ev.mean_offset_sigma = sh.Double("mean_offset_sigma", 0.0);
      ev.var_scale = sh.Double("var_scale", 1.0);
      sh.Done();
      shifts.push_back(std::move(ev));
    }
  }
  e.Done();
  o.Done();
  s.environment = WithSource(ctx, "environment", [&] {
    return MakeEnvironment(s.network, static_cast<std::uint64_t>(env_seed),
                           mean_range[0], mean_range[1], var_range[0],
                           var_range[1], batch_size, std::move(shifts));
  });
  s.environment.infinite_batch = infinite;
  WithSource(ctx, "", [&] {
    s.scheduler.Validate();
    s.controller.Validate();
    return 0;
  });
  return s;
}

Scenario LoadScenario(const std::filesystem::path& path, ReadOptions options) {
  return ParseScenario(ReadText(path), path.string(), path.parent_path(), options);
}

std::string ReportToJson(const EpisodeReport& report) {
  OrderedJson j;
  j["network"] = report.network;
  j["mode"] = report.mode == PipelineMode::kSequential ? "sequential" : "parallel";
  j["seed"] = report.seed;
  OrderedJson agg;
  agg["batches"] = report.batches.size();
  agg["mean_latency_ms"] = report.mean_latency_ms;
  agg["capture_ratio"] = report.capture_ratio;
  agg["mean_capture_ratio"] = report.mean_capture_ratio;
  agg["mean_predictor_error"] = report.mean_predictor_error;
  agg["mean_turnaround"] = report.mean_turnaround;
  if (report.replay_latency_ms) agg["replay_latency_ms"] = *report.replay_latency_ms;
  if (report.latency_ratio) agg["latency_ratio"] = *report.latency_ratio;
  if (report.speedup) agg["speedup"] = *report.speedup;
  j["aggregates"] = std::move(agg);
  OrderedJson batches = OrderedJson::array();
  for (const BatchRecord& b : report.batches) {
    OrderedJson r;
    r["index"] = b.index;
    r["sigma"] = b.sigma;
    r["budget_ms"] = b.budget_ms;
    r["selected"] = b.selected;
    r["predicted"] = PhaseJson(b.predicted);
    r["executed"] = PhaseJson(b.executed);
    r["importance_captured"] = b.importance_captured;
    r["importance_available"] = b.importance_available;
    r["capture_ratio"] = b.capture_ratio;
    r["loss_before"] = b.loss_before;
    r["loss_after"] = b.loss_after;
    r["arrival_ms"] = b.arrival_ms;
    r["start_ms"] = b.start_ms;
    r["wait_ms"] = b.wait_ms;
    r["turnaround"] = b.turnaround;
    r["staleness"] = b.staleness;
    r["adapted"] = b.adapted;
    r["predictor_error"] = b.predictor_error;
    if (b.replay_ms) r["replay_ms"] = *b.replay_ms;
    batches.push_back(std::move(r));
  }
  j["batches"] = std::move(batches);
  return Dump(j);
}

std::string ReportToCsv(const EpisodeReport& report) {
  std::ostringstream out;
  out << "index,sigma,budget_ms,selected,pred_t_f_ms,pred_t_b_ms,pred_t_re_ms,"
         "exec_t_f_ms,exec_t_b_ms,exec_t_re_ms,importance_captured,"
         "importance_available,capture_ratio,loss_before,loss_after,arrival_ms,"
         "start_ms,wait_ms,turnaround,staleness,adapted,predictor_error,replay_ms\n";
  for (const BatchRecord& b : report.batches) {
    std::string selected;
    for (std::size_t k = 0; k < b.selected.size(); ++k) {
      if (k) selected += ' ';
      selected += std::to_string(b.selected[k]);
    }
    const double values[] = {b.predicted.t_f, b.predicted.t_b, b.predicted.t_re,
                             b.executed.t_f,  b.executed.t_b,  b.executed.t_re,
                             b.importance_captured, b.importance_available,
                             b.capture_ratio, b.loss_before, b.loss_after,
                             b.arrival_ms, b.start_ms, b.wait_ms, b.turnaround};
    out << b.index << ',' << FormatDouble(b.sigma) << ',' << FormatDouble(b.budget_ms)
        << ',' << selected;
    for (double v : values) out << ',' << FormatDouble(v);
    out << ',' << b.staleness << ',' << (b.adapted ? 1 : 0) << ','
        << FormatDouble(b.predictor_error) << ','
        << (b.replay_ms ? FormatDouble(*b.replay_ms) : std::string()) << '\n';
  }
  return out.str();
}

}  // namespace sparsetta::io
