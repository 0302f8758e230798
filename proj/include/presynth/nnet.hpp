// Copyright 2026 The presynth Authors.
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

#pragma once

// Feedforward and LSTM regressors with exact reverse-mode gradients, Adam,
// early-stopped training and the PVC1 checkpoint format. Parameters are
// float in production and double for gradient checks.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "presynth/matrix.hpp"

namespace presynth {

enum class ModelKind { feedforward, recurrent };
enum class OutputActivation { linear, sigmoid };

const char* to_string(ModelKind k);
ModelKind parse_model_kind(const std::string& s);

struct ModelConfig {
  ModelKind kind = ModelKind::feedforward;
  OutputActivation output = OutputActivation::linear;
  std::size_t hidden_layers = 4;
  std::size_t hidden_width = 512;
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  std::uint64_t seed = 1;

  /// 4 x 512 tanh layers, or 2 x 512 LSTM layers.
  static ModelConfig defaults(ModelKind kind, std::size_t input_dim, std::size_t output_dim);
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch = 8;  // utterances per step
  std::size_t max_epochs = 25;
  std::size_t patience = 5;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;  // workers per batch; results depend on it only through summation order

  static TrainConfig defaults(ModelKind kind);
  void validate() const;
};

/// Utterances stacked row-wise. Utterance u owns rows [offsets[u], offsets[u+1]).
/// Frames with mask 0 are still computed but contribute nothing to the loss.
template <class Real>
struct Batch {
  Matrix<Real> x;
  std::vector<std::size_t> offsets{0};
  std::vector<std::uint8_t> mask;

  static Batch of(std::span<const Matrix<Real>* const> utterances);
  static Batch of(const Matrix<Real>& utterance);
  std::size_t utterances() const { return offsets.size() - 1; }
  std::size_t length(std::size_t u) const { return offsets[u + 1] - offsets[u]; }
};

template <class Real>
struct Parameter {
  std::string name;
  Matrix<Real> value;
};

template <class Real>
using Gradients = std::vector<Matrix<Real>>;

/// Activations kept from a forward pass for the backward pass.
template <class Real>
struct Trace {
  std::vector<Matrix<Real>> hidden;  // output of every hidden layer
  std::vector<Matrix<Real>> gates;   // recurrent: post-activation i, f, g, o per layer
  std::vector<Matrix<Real>> cells;   // recurrent: cell state per layer
  Matrix<Real> output;
};

template <class Real>
class Model {
 public:
  Model() = default;
  /// Glorot-uniform weights drawn from config.seed; zero biases except the
  /// LSTM forget gate, which starts at 1.
  explicit Model(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  std::vector<Parameter<Real>>& parameters() { return params_; }
  const std::vector<Parameter<Real>>& parameters() const { return params_; }
  std::size_t parameter_count() const;
  Gradients<Real> zero_gradients() const;

  Matrix<Real> forward(const Batch<Real>& batch) const;
  Matrix<Real> forward(const Matrix<Real>& utterance) const;
  Trace<Real> forward_trace(const Batch<Real>& batch) const;
  /// Adds d loss / d parameters to `grads` given d loss / d output.
  void backward(const Batch<Real>& batch, const Trace<Real>& trace, const Matrix<Real>& d_output,
                Gradients<Real>& grads) const;

  template <class Other>
  Model<Other> cast() const {
    Model<Other> m;
    m.config_ = config_;
    for (const auto& p : params_) m.params_.push_back({p.name, matrix_cast<Other>(p.value)});
    return m;
  }

 private:
  template <class>
  friend class Model;

  ModelConfig config_;
  std::vector<Parameter<Real>> params_;
};

template <class Real>
struct Loss {
  double value = 0.0;
  Matrix<Real> grad;  // d value / d pred
};

/// Mean squared error over the unmasked frames; every column counts.
template <class Real>
Loss<Real> mse_loss(const Matrix<Real>& pred, const Matrix<Real>& target,
                    std::span<const std::uint8_t> mask);

template <class Real>
struct AdamState {
  std::vector<Matrix<Real>> m;
  std::vector<Matrix<Real>> v;
  std::uint64_t step = 0;

  static AdamState zeros(const Model<Real>& model);
};

/// Bias-corrected Adam. Non-finite gradients throw before anything changes.
template <class Real>
void adam_step(Model<Real>& model, const Gradients<Real>& grads, AdamState<Real>& state,
               const TrainConfig& cfg);

template <class Real>
struct Dataset {
  std::vector<Matrix<Real>> inputs;
  std::vector<Matrix<Real>> targets;

  std::size_t size() const { return inputs.size(); }
  std::size_t frames() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double dev_loss = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  bool stopped_early = false;

  double best_dev_loss() const;
};

template <class Real>
struct TrainResult {
  Model<Real> model;  // parameters of the best dev epoch
  TrainHistory history;
};

/// Frame-weighted MSE over a whole dataset.
template <class Real>
double evaluate_loss(const Model<Real>& model, const Dataset<Real>& data, std::size_t batch = 8);

template <class Real>
TrainResult<Real> train(const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                        const Dataset<Real>& train_set, const Dataset<Real>& dev_set,
                        const std::function<void(const EpochRecord&)>& on_epoch = {});

struct GradientCheck {
  std::vector<std::pair<std::string, double>> tensors;  // name, relative error
  double max_error = 0.0;
};

/// Compares backward() against central differences (step 1e-4) on a random
/// 64-bit model with dims <= 8 and utterances of <= 6 frames. The relative
/// error of a tensor is |analytic - numeric| / max(|analytic|, |numeric|)
/// in the Euclidean norm.
GradientCheck check_gradients(ModelKind kind, std::uint64_t seed);

/// "PVC1", u32 version, config, u32 tensor count, then per tensor: name,
/// u32 rank, u32 dims, f32 data.
template <class Real>
void save_checkpoint(const Model<Real>& model, const std::filesystem::path& path);
std::vector<char> checkpoint_bytes(const Model<float>& model);

template <class Real>
Model<Real> load_checkpoint(const std::filesystem::path& path);
/// Rejects checkpoints of a different model kind with config_mismatch.
template <class Real>
Model<Real> load_checkpoint(const std::filesystem::path& path, ModelKind expected);

}  // namespace presynth
