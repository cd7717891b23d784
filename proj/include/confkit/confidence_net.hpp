// Copyright 2026 The confkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Confidence networks: a stacked bidirectional GRU shared by two heads.
//
//   CEM    per-token  score_t = sigmoid(w . [fwd_t ; bwd_t] + b)
//   R-EBM  utterance  score   = sigmoid(w . mean_t [fwd_t ; bwd_t] + b)
//
// GRU cell (h0 = 0):
//   z = sigmoid(Wz x + Uz h + bz)
//   r = sigmoid(Wr x + Ur h + br)
//   n = tanh(Wn x + Un (r * h) + bn)
//   h' = (1 - z) * n + z * h
//
// Layer 0 reads the feature rows; layer l > 0 reads [fwd ; bwd] of l - 1.
// All parameters live in one flat vector so that optimizers and gradient
// checks can treat them uniformly.

#ifndef CONFKIT_CONFIDENCE_NET_HPP_
#define CONFKIT_CONFIDENCE_NET_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "confkit/features.hpp"

namespace confkit {

enum class ModelKind { kCem, kRebm };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

/// Location of one named tensor inside the flat parameter vector.
struct ParamBlock {
  std::string name;
  std::size_t offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::size_t size() const { return static_cast<std::size_t>(rows * cols); }
};

class ConfidenceModel {
 public:
  ConfidenceModel() = default;
  ConfidenceModel(ModelKind kind, int input_width, int hidden, int layers);

  ModelKind kind() const { return kind_; }
  int input_width() const { return input_width_; }
  int hidden() const { return hidden_; }
  int layers() const { return layers_; }

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  const std::vector<ParamBlock>& blocks() const { return blocks_; }

  /// Uniform(-1/sqrt(hidden), 1/sqrt(hidden)) from a seeded stream.
  void init_params(std::uint64_t seed);

  // Block indices; dir 0 = forward in time, 1 = backward.
  std::size_t w_block(int layer, int dir) const { return static_cast<std::size_t>((layer * 2 + dir) * 3); }
  std::size_t u_block(int layer, int dir) const { return w_block(layer, dir) + 1; }
  std::size_t b_block(int layer, int dir) const { return w_block(layer, dir) + 2; }
  std::size_t head_w_block() const { return static_cast<std::size_t>(layers_ * 6); }
  std::size_t head_b_block() const { return head_w_block() + 1; }

  // Filled in by whoever builds the training data; persisted with the model.
  FeatureSchema schema;
  FeatureStats stats;

 private:
  ModelKind kind_ = ModelKind::kCem;
  int input_width_ = 0;
  int hidden_ = 0;
  int layers_ = 0;
  std::vector<ParamBlock> blocks_;
  std::vector<double> params_;
};

/// Per-token confidences in (0, 1). Empty input gives an empty result.
std::vector<double> forward_cem(const ConfidenceModel& model, const FeatureMatrix& m);

/// Utterance confidence in (0, 1); an empty hypothesis scores 0.
double forward_rebm(const ConfidenceModel& model, const FeatureMatrix& m);

/// Minimum token score of every word.
std::vector<double> word_confidence(std::span<const double> token_scores,
                                    const std::vector<bool>& word_start);

/// One training example: a feature matrix plus its targets.
struct TrainItem {
  FeatureMatrix features;
  std::vector<int> token_labels;
  int utterance_label = 0;
};

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

/// Mean binary cross-entropy over the batch (over tokens for CEM, over
/// items for R-EBM) with scores clipped to [1e-8, 1 - 1e-8], and its exact
/// gradient. Empty items are skipped.
LossAndGrad loss_and_gradients(const ConfidenceModel& model,
                               std::span<const TrainItem* const> batch);

/// Loss only; same conventions as loss_and_gradients.
double batch_loss(const ConfidenceModel& model, std::span<const TrainItem* const> batch);

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 32;
  int epochs = 10;
  std::uint64_t seed = 0;
  double ood_mix_ratio = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Rescale the gradient to this L2 norm when larger; 0 disables.
  double max_grad_norm = 0.0;
};

json to_json(const TrainConfig& c);
/// Keys absent from `j` keep their defaults.
TrainConfig train_config_from_json(const json& j, TrainConfig base = {});

struct TrainReport {
  double initial_loss = 0.0;
  std::vector<double> epoch_loss;  // mean batch loss of each epoch
  std::size_t in_domain_draws = 0;
  std::size_t ood_draws = 0;
  std::size_t batches = 0;
  std::size_t ood_per_batch = 0;
};

/// Adam on minibatches. Each batch holds round(ood_mix_ratio * batch_size)
/// OOD items when `ood` is non-empty, the rest in-domain; an epoch is one
/// pass over the in-domain items. Bit-identical for a fixed seed.
TrainReport train(ConfidenceModel& model, std::span<const TrainItem> in_domain,
                  std::span<const TrainItem> ood, const TrainConfig& cfg);

json to_json(const ConfidenceModel& model);
ConfidenceModel model_from_json(const json& j);
void save_model(const ConfidenceModel& model, const std::filesystem::path& path);
ConfidenceModel load_model(const std::filesystem::path& path);

}  // namespace confkit

#endif  // CONFKIT_CONFIDENCE_NET_HPP_
