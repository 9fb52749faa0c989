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

// Backprop-free layer importance.
//
// Each layer's output feature map is summarized by channel-wise first and
// second moments. A layer's importance is the KL divergence from its
// historical embedding (an exponential moving average over past batches) to
// the embedding of the current batch.

#ifndef SPARSETTA_IMPORTANCE_H_
#define SPARSETTA_IMPORTANCE_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sparsetta/model_graph.h"

namespace sparsetta {

// Channel-wise moments of one layer's output for one batch.
struct FeatureStats {
  std::vector<double> means;
  std::vector<double> vars;  // population variance
  std::int64_t sample_count = 1;  // values per channel
};

// Interleaved [mu_1, var_1, ..., mu_C, var_C].
class Embedding {
 public:
  Embedding() = default;
  // Throws InputError on odd length, non-finite values or negative variance.
  explicit Embedding(std::vector<double> interleaved);

  std::size_t channels() const { return values_.size() / 2; }
  double mean(std::size_t c) const { return values_[2 * c]; }
  double var(std::size_t c) const { return values_[2 * c + 1]; }
  const std::vector<double>& values() const { return values_; }

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  std::vector<double> values_;
};

// Population moments of raw per-channel samples.
Embedding Embed(std::span<const std::vector<double>> channel_samples);
Embedding Embed(const FeatureStats& stats);

enum class KlMode {
  // Closed-form KL between per-channel Gaussians N(mu, var).
  kGaussian,
  // Discrete KL between the softmax-normalized embedding vectors.
  kElementwise,
};

// Added to every variance before the Gaussian KL.
inline constexpr double kVarianceFloor = 1e-6;

// D_KL(history || current) for one layer; always >= 0.
double LayerImportance(const Embedding& history, const Embedding& current,
                       KlMode mode = KlMode::kGaussian);

// alpha * current + (1 - alpha) * history, coordinate-wise.
Embedding BlendEmbedding(const Embedding& history, const Embedding& current,
                         double alpha);

// Per-layer historical embeddings in forward order.
class EmbeddingHistory {
 public:
  EmbeddingHistory() = default;

  // The first observed batch seeds the history verbatim.
  static EmbeddingHistory Seed(std::vector<Embedding> first, double alpha);

  // Returns a new history with `currents` blended in; shapes must match.
  EmbeddingHistory Update(std::span<const Embedding> currents) const;

  bool empty() const { return layers_.empty(); }
  std::size_t size() const { return layers_.size(); }
  const std::vector<Embedding>& layers() const { return layers_; }
  double alpha() const { return alpha_; }
  std::int64_t batches_seen() const { return batches_seen_; }

 private:
  std::vector<Embedding> layers_;
  double alpha_ = 0.1;
  std::int64_t batches_seen_ = 0;
};

// Sum of per-layer divergences over all layers.
double AdaptationLoss(std::span<const Embedding> histories,
                      std::span<const Embedding> currents,
                      KlMode mode = KlMode::kGaussian);

// Importance by backward index (a[0] is backward index 1).
struct ImportanceVector {
  std::vector<double> a;
  KlMode mode = KlMode::kGaussian;

  std::size_t size() const { return a.size(); }
  double at(std::size_t backward_index) const { return a.at(backward_index - 1); }
  double Total() const;
};

struct Assessment {
  ImportanceVector importance;  // parameter-free layers forced to 0
  std::vector<double> layer_divergence;  // every layer, backward order
  double loss = 0.0;  // sum of layer_divergence
  double flops = 0.0;  // analytic cost of this assessment
};

// `histories` and `current` are in forward order and cover every layer.
Assessment Assess(const Network& network, std::span<const Embedding> histories,
                  std::span<const FeatureStats> current,
                  KlMode mode = KlMode::kGaussian);

// Floating-point operations spent extracting moments from `samples_per_channel`
// values in each of `channels` channels, taking the KL and blending the EMA.
double AssessmentFlops(std::int64_t channels, std::int64_t samples_per_channel);
// Whole-network count with every layer's output at `batch_size` samples.
double AssessmentFlops(const Network& network, std::int64_t batch_size);

// Bytes needed to keep one historical embedding per layer.
std::uint64_t HistoryBytes(const Network& network, int scalar_bytes = 4);

}  // namespace sparsetta

#endif  // SPARSETTA_IMPORTANCE_H_
