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

#include <algorithm>
#include <cmath>

#include "presynth/nnet.hpp"
#include "presynth/random.hpp"

namespace presynth {

GradientCheck check_gradients(ModelKind kind, std::uint64_t seed) {
  Rng rng(seed);
  ModelConfig cfg;
  cfg.kind = kind;
  cfg.hidden_layers = 1 + rng.below(2);
  cfg.hidden_width = 2 + rng.below(7);
  cfg.input_dim = 1 + rng.below(8);
  cfg.output_dim = 1 + rng.below(8);
  cfg.output = rng.below(4) == 0 ? OutputActivation::sigmoid : OutputActivation::linear;
  cfg.seed = seed;
  Model<double> model(cfg);
  // Larger than Glorot so the saturating regions get exercised too.
  for (auto& p : model.parameters())
    for (auto& v : p.value.storage()) v = rng.uniform(-1.0, 1.0);

  std::vector<Matrix<double>> inputs, targets;
  const std::size_t utts = 1 + rng.below(3);
  for (std::size_t u = 0; u < utts; ++u) {
    const std::size_t len = 1 + rng.below(6);
    Matrix<double> x(len, cfg.input_dim), y(len, cfg.output_dim);
    for (auto& v : x.storage()) v = rng.normal();
    for (auto& v : y.storage()) v = rng.uniform();
    inputs.push_back(std::move(x));
    targets.push_back(std::move(y));
  }
  std::vector<const Matrix<double>*> in_ptrs, tgt_ptrs;
  for (std::size_t u = 0; u < utts; ++u) {
    in_ptrs.push_back(&inputs[u]);
    tgt_ptrs.push_back(&targets[u]);
  }
  Batch<double> batch = Batch<double>::of(in_ptrs);
  const Matrix<double> target = Batch<double>::of(tgt_ptrs).x;
  if (batch.mask.size() > 1) batch.mask[rng.below(batch.mask.size())] = 0;

  const Trace<double> trace = model.forward_trace(batch);
  const Loss<double> loss = mse_loss(trace.output, target, batch.mask);
  Gradients<double> analytic = model.zero_gradients();
  model.backward(batch, trace, loss.grad, analytic);

  constexpr double kStep = 1e-4;
  GradientCheck out;
  auto& params = model.parameters();
  for (std::size_t p = 0; p < params.size(); ++p) {
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < params[p].value.size(); ++i) {
      double& w = params[p].value.data()[i];
      const double saved = w;
      w = saved + kStep;
      const double up = mse_loss(model.forward(batch), target, batch.mask).value;
      w = saved - kStep;
      const double down = mse_loss(model.forward(batch), target, batch.mask).value;
      w = saved;
      const double numeric = (up - down) / (2.0 * kStep);
      const double a = analytic[p].data()[i];
      diff += (a - numeric) * (a - numeric);
      na += a * a;
      nn += numeric * numeric;
    }
    const double scale = std::max({std::sqrt(na), std::sqrt(nn), 1e-300});
    const double err = diff == 0.0 ? 0.0 : std::sqrt(diff) / scale;
    out.tensors.emplace_back(params[p].name, err);
    out.max_error = std::max(out.max_error, err);
  }
  return out;
}

}  // namespace presynth
