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

#include "sparsetta/importance.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "sparsetta/error.h"

namespace sparsetta {
namespace {

// Per-value work for moment extraction: one add for the mean, then a
// subtract, multiply and add for the variance.
constexpr double kMomentFlopsPerValue = 4.0;
// Two divisions to finalize the moments, the Gaussian KL term, and the EMA
// blend of two coordinates.
constexpr double kMomentFinalizeFlopsPerChannel = 2.0;
constexpr double kKlFlopsPerChannel = 12.0;
constexpr double kEmaFlopsPerChannel = 6.0;

void RequireSameShape(const Embedding& a, const Embedding& b) {
  if (a.values().size() != b.values().size()) {
    throw InputError("embedding length mismatch: " +
                     std::to_string(a.values().size()) + " vs " +
                     std::to_string(b.values().size()));
  }
}

double GaussianKl(const Embedding& history, const Embedding& current) {
  double total = 0.0;
  for (std::size_t c = 0; c < history.channels(); ++c) {
    const double var_h = history.var(c) + kVarianceFloor;
    const double var_e = current.var(c) + kVarianceFloor;
    const double dmu = history.mean(c) - current.mean(c);
    // ln(s_e/s_h) + (var_h + dmu^2) / (2 var_e) - 1/2, rewritten around
    // x = var_h/var_e - 1 to avoid cancellation near x = 0.
    const double x = (var_h - var_e) / var_e;
    const double variance_term = std::max(0.0, 0.5 * (x - std::log1p(x)));
    total += variance_term + dmu * dmu / (2.0 * var_e);
  }
  return total;
}

std::vector<double> LogSoftmax(const std::vector<double>& v) {
  const double peak = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += std::exp(x - peak);
  const double log_norm = peak + std::log(sum);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] - log_norm;
  return out;
}

double ElementwiseKl(const Embedding& history, const Embedding& current) {
  if (history.values().empty()) return 0.0;
  const std::vector<double> log_h = LogSoftmax(history.values());
  const std::vector<double> log_e = LogSoftmax(current.values());
  double total = 0.0;
  for (std::size_t i = 0; i < log_h.size(); ++i) {
    total += std::exp(log_h[i]) * (log_h[i] - log_e[i]);
  }
  return std::max(0.0, total);
}

}  // namespace

Embedding::Embedding(std::vector<double> interleaved)
    : values_(std::move(interleaved)) {
  if (values_.size() % 2 != 0) throw InputError("embedding length must be even");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw InputError("embedding holds a non-finite value at slot " +
                       std::to_string(i));
    }
    if (i % 2 == 1 && values_[i] < 0.0) {
      throw InputError("embedding holds a negative variance at channel " +
                       std::to_string(i / 2));
    }
  }
}

Embedding Embed(std::span<const std::vector<double>> channel_samples) {
  if (channel_samples.empty()) throw InputError("no channels to embed");
  std::vector<double> values;
  values.reserve(2 * channel_samples.size());
  for (std::size_t c = 0; c < channel_samples.size(); ++c) {
    const std::vector<double>& s = channel_samples[c];
    if (s.empty()) throw InputError("channel " + std::to_string(c) + " is empty");
    for (double x : s) {
      if (std::isnan(x)) {
        throw InputError("channel " + std::to_string(c) + " holds NaN");
      }
    }
    const double n = static_cast<double>(s.size());
    const double mean = std::accumulate(s.begin(), s.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : s) ss += (x - mean) * (x - mean);
    values.push_back(mean);
    values.push_back(ss / n);
  }
  return Embedding(std::move(values));
}

Embedding Embed(const FeatureStats& stats) {
  if (stats.means.empty()) throw InputError("feature stats hold no channels");
  if (stats.means.size() != stats.vars.size()) {
    throw InputError("feature stats: means and vars differ in length");
  }
  if (stats.sample_count < 1) {
    throw InputError("feature stats: sample count must be >= 1");
  }
  std::vector<double> values;
  values.reserve(2 * stats.means.size());
  for (std::size_t c = 0; c < stats.means.size(); ++c) {
    values.push_back(stats.means[c]);
    values.push_back(stats.vars[c]);
  }
  return Embedding(std::move(values));
}

double LayerImportance(const Embedding& history, const Embedding& current,
                       KlMode mode) {
  RequireSameShape(history, current);
  return mode == KlMode::kGaussian ? GaussianKl(history, current)
                                   : ElementwiseKl(history, current);
}

Embedding BlendEmbedding(const Embedding& history, const Embedding& current,
                         double alpha) {
  RequireSameShape(history, current);
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw InputError("alpha must lie in [0, 1]");
  }
  if (alpha == 0.0) return history;
  if (alpha == 1.0) return current;
  const std::vector<double>& h = history.values();
  const std::vector<double>& c = current.values();
  std::vector<double> out(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double blended = h[i] + alpha * (c[i] - h[i]);
    out[i] = std::clamp(blended, std::min(h[i], c[i]), std::max(h[i], c[i]));
  }
  return Embedding(std::move(out));
}

EmbeddingHistory EmbeddingHistory::Seed(std::vector<Embedding> first,
                                        double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw InputError("alpha must lie in [0, 1]");
  }
  EmbeddingHistory h;
  h.layers_ = std::move(first);
  h.alpha_ = alpha;
  h.batches_seen_ = 1;
  return h;
}

EmbeddingHistory EmbeddingHistory::Update(
    std::span<const Embedding> currents) const {
  if (currents.size() != layers_.size()) {
    throw InputError("history covers " + std::to_string(layers_.size()) +
                     " layers, update has " + std::to_string(currents.size()));
  }
  EmbeddingHistory next;
  next.alpha_ = alpha_;
  next.batches_seen_ = batches_seen_ + 1;
  next.layers_.reserve(layers_.size());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    next.layers_.push_back(BlendEmbedding(layers_[l], currents[l], alpha_));
  }
  return next;
}

double AdaptationLoss(std::span<const Embedding> histories,
                      std::span<const Embedding> currents, KlMode mode) {
  if (histories.size() != currents.size()) {
    throw InputError("adaptation loss: " + std::to_string(histories.size()) +
                     " history layers vs " + std::to_string(currents.size()) +
                     " current layers");
  }
  double loss = 0.0;
  for (std::size_t l = 0; l < histories.size(); ++l) {
    loss += LayerImportance(histories[l], currents[l], mode);
  }
  return loss;
}

double ImportanceVector::Total() const {
  return std::accumulate(a.begin(), a.end(), 0.0);
}

Assessment Assess(const Network& network, std::span<const Embedding> histories,
                  std::span<const FeatureStats> current, KlMode mode) {
  const std::size_t n = network.size();
  if (histories.size() != n) {
    throw InputError("history covers " + std::to_string(histories.size()) +
                     " layers, network has " + std::to_string(n));
  }
  if (current.size() != n) {
    throw InputError("missing layer stats: got " + std::to_string(current.size()) +
                     " layers, network has " + std::to_string(n));
  }
  Assessment out;
  out.importance.mode = mode;
  out.importance.a.assign(n, 0.0);
  out.layer_divergence.assign(n, 0.0);
  for (std::size_t id = 0; id < n; ++id) {
    const LayerSpec& layer = network.layer(id);
    const auto channels = static_cast<std::size_t>(layer.channels);
    if (current[id].means.size() != channels) {
      throw InputError("layer " + std::to_string(id) + ": stats hold " +
                       std::to_string(current[id].means.size()) +
                       " channels, network declares " + std::to_string(channels));
    }
    if (histories[id].channels() != channels) {
      throw InputError("layer " + std::to_string(id) + ": history holds " +
                       std::to_string(histories[id].channels()) +
                       " channels, network declares " + std::to_string(channels));
    }
    const double divergence =
        LayerImportance(histories[id], Embed(current[id]), mode);
    const std::size_t slot = network.BackwardIndex(id) - 1;
    out.layer_divergence[slot] = divergence;
    if (layer.has_params) out.importance.a[slot] = divergence;
    out.flops += AssessmentFlops(layer.channels, current[id].sample_count);
  }
  // Sum in backward order so the loss matches ImportanceVector ordering.
  out.loss = std::accumulate(out.layer_divergence.begin(),
                             out.layer_divergence.end(), 0.0);
  return out;
}

double AssessmentFlops(std::int64_t channels, std::int64_t samples_per_channel) {
  const double c = static_cast<double>(channels);
  const double n = static_cast<double>(samples_per_channel);
  return kMomentFlopsPerValue * n * c +
         (kMomentFinalizeFlopsPerChannel + kKlFlopsPerChannel +
          kEmaFlopsPerChannel) * c;
}

double AssessmentFlops(const Network& network, std::int64_t batch_size) {
  if (batch_size < 1) throw InputError("batch size must be >= 1");
  double total = 0.0;
  for (const LayerSpec& layer : network.layers()) {
    const std::int64_t per_channel =
        std::max<std::int64_t>(1, batch_size * layer.out_elements / layer.channels);
    total += AssessmentFlops(layer.channels, per_channel);
  }
  return total;
}

std::uint64_t HistoryBytes(const Network& network, int scalar_bytes) {
  std::uint64_t scalars = 0;
  for (const LayerSpec& layer : network.layers()) {
    scalars += 2 * static_cast<std::uint64_t>(layer.channels);
  }
  return scalars * static_cast<std::uint64_t>(scalar_bytes);
}

}  // namespace sparsetta
