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
#include <limits>
#include <numeric>
#include <thread>

#include "presynth/error.hpp"
#include "presynth/nnet.hpp"
#include "presynth/random.hpp"

namespace presynth {
namespace {

// Sum of squared errors over unmasked rows; writes scale * (pred - target)
// into grad when given.
template <class Real>
double squared_error(const Matrix<Real>& pred, const Matrix<Real>& target,
                     std::span<const std::uint8_t> mask, double scale, Matrix<Real>* grad) {
  double sum = 0.0;
  if (grad) grad->resize(pred.rows(), pred.cols());
  for (std::size_t r = 0; r < pred.rows(); ++r) {
    if (!mask[r]) continue;
    const auto p = pred.row(r);
    const auto t = target.row(r);
    for (std::size_t c = 0; c < p.size(); ++c) {
      const double e = static_cast<double>(p[c]) - static_cast<double>(t[c]);
      sum += e * e;
      if (grad) (*grad)(r, c) = static_cast<Real>(scale * e);
    }
  }
  return sum;
}

std::size_t unmasked(std::span<const std::uint8_t> mask) {
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](auto m) { return m != 0; }));
}

template <class Real>
Batch<Real> gather(const std::vector<Matrix<Real>>& mats, std::span<const std::size_t> ids) {
  std::vector<const Matrix<Real>*> ptrs;
  for (std::size_t i : ids) ptrs.push_back(&mats[i]);
  return Batch<Real>::of(ptrs);
}

template <class Real>
void check_dataset(const Dataset<Real>& d, const ModelConfig& cfg, const char* name) {
  require(d.size() > 0, ErrorKind::insufficient_data, std::string("the ") + name + " split is empty");
  require(d.targets.size() == d.size(), ErrorKind::shape_mismatch,
          std::string(name) + ": inputs and targets differ in count");
  for (std::size_t i = 0; i < d.size(); ++i) {
    require(d.inputs[i].cols() == cfg.input_dim && d.targets[i].cols() == cfg.output_dim,
            ErrorKind::shape_mismatch, std::string(name) + ": feature width does not match the model");
    require(d.inputs[i].rows() == d.targets[i].rows(), ErrorKind::shape_mismatch,
            std::string(name) + ": input and target frame counts differ");
  }
}

// Gradient of one chunk of a batch. Every chunk divides by the whole batch's
// element count so the chunk gradients simply add up.
template <class Real>
double chunk_gradient(const Model<Real>& model, const Dataset<Real>& data,
                      std::span<const std::size_t> ids, double scale, Gradients<Real>& grads) {
  const Batch<Real> batch = gather(data.inputs, ids);
  const Batch<Real> target = gather(data.targets, ids);
  const Trace<Real> trace = model.forward_trace(batch);
  Matrix<Real> d_out;
  const double sse = squared_error(trace.output, target.x, batch.mask, scale, &d_out);
  model.backward(batch, trace, d_out, grads);
  return sse;
}

}  // namespace

template <class Real>
Loss<Real> mse_loss(const Matrix<Real>& pred, const Matrix<Real>& target,
                    std::span<const std::uint8_t> mask) {
  require(pred.rows() == target.rows() && pred.cols() == target.cols(), ErrorKind::shape_mismatch,
          "mse_loss: prediction and target shapes differ");
  require(mask.size() == pred.rows(), ErrorKind::shape_mismatch, "mse_loss: mask length differs");
  const std::size_t frames = unmasked(mask);
  require(frames > 0 && pred.cols() > 0, ErrorKind::insufficient_data, "mse_loss: every frame is masked");
  const double n = static_cast<double>(frames * pred.cols());
  Loss<Real> out;
  out.value = squared_error(pred, target, mask, 2.0 / n, &out.grad) / n;
  return out;
}

template <class Real>
AdamState<Real> AdamState<Real>::zeros(const Model<Real>& model) {
  AdamState s;
  s.m = model.zero_gradients();
  s.v = model.zero_gradients();
  return s;
}

template <class Real>
void adam_step(Model<Real>& model, const Gradients<Real>& grads, AdamState<Real>& state,
               const TrainConfig& cfg) {
  auto& params = model.parameters();
  require(grads.size() == params.size() && state.m.size() == params.size(),
          ErrorKind::shape_mismatch, "adam_step: gradient or state does not match the model");
  for (std::size_t p = 0; p < params.size(); ++p)
    for (Real g : grads[p].storage())
      require(std::isfinite(static_cast<double>(g)), ErrorKind::non_finite,
              "adam_step: non-finite gradient in " + params[p].name);

  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  const Real b1 = static_cast<Real>(cfg.beta1), b2 = static_cast<Real>(cfg.beta2);
  for (std::size_t p = 0; p < params.size(); ++p) {
    Real* w = params[p].value.data();
    Real* m = state.m[p].data();
    Real* v = state.v[p].data();
    const Real* g = grads[p].data();
    for (std::size_t i = 0; i < grads[p].size(); ++i) {
      m[i] = b1 * m[i] + (Real{1} - b1) * g[i];
      v[i] = b2 * v[i] + (Real{1} - b2) * g[i] * g[i];
      const double mhat = static_cast<double>(m[i]) / c1;
      const double vhat = static_cast<double>(v[i]) / c2;
      w[i] = static_cast<Real>(static_cast<double>(w[i]) - cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon));
    }
  }
}

template <class Real>
std::size_t Dataset<Real>::frames() const {
  std::size_t n = 0;
  for (const auto& m : inputs) n += m.rows();
  return n;
}

double TrainHistory::best_dev_loss() const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : epochs) best = std::min(best, e.dev_loss);
  return best;
}

template <class Real>
double evaluate_loss(const Model<Real>& model, const Dataset<Real>& data, std::size_t batch) {
  check_dataset(data, model.config(), "evaluation");
  double sse = 0.0;
  std::size_t elems = 0;
  std::vector<std::size_t> ids(data.size());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  for (std::size_t b = 0; b < ids.size(); b += batch) {
    const auto chunk = std::span<const std::size_t>(ids).subspan(b, std::min(batch, ids.size() - b));
    const Batch<Real> in = gather(data.inputs, chunk);
    const Batch<Real> target = gather(data.targets, chunk);
    sse += squared_error(model.forward(in), target.x, in.mask, 0.0, static_cast<Matrix<Real>*>(nullptr));
    elems += in.x.rows() * model.config().output_dim;
  }
  return sse / static_cast<double>(elems);
}

template <class Real>
TrainResult<Real> train(const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                        const Dataset<Real>& train_set, const Dataset<Real>& dev_set,
                        const std::function<void(const EpochRecord&)>& on_epoch) {
  model_cfg.validate();
  train_cfg.validate();
  check_dataset(train_set, model_cfg, "train");
  check_dataset(dev_set, model_cfg, "dev");

  Model<Real> model(model_cfg);
  AdamState<Real> adam = AdamState<Real>::zeros(model);
  Rng rng(train_cfg.seed);
  TrainResult<Real> result{model, {}};
  double best = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 1; epoch <= train_cfg.max_epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_sse = 0.0;
    std::size_t epoch_elems = 0;
    for (std::size_t b = 0; b < order.size(); b += train_cfg.batch) {
      const auto ids = std::span<const std::size_t>(order).subspan(b, std::min(train_cfg.batch, order.size() - b));
      std::size_t frames = 0;
      for (std::size_t i : ids) frames += train_set.inputs[i].rows();
      if (frames == 0) continue;
      const double elems = static_cast<double>(frames * model_cfg.output_dim);
      const double scale = 2.0 / elems;

      const std::size_t workers = std::min(train_cfg.jobs, ids.size());
      std::vector<Gradients<Real>> grads(workers, model.zero_gradients());
      std::vector<double> sse(workers, 0.0);
      auto run = [&](std::size_t k) {
        const std::size_t lo = ids.size() * k / workers, hi = ids.size() * (k + 1) / workers;
        sse[k] = chunk_gradient(model, train_set, ids.subspan(lo, hi - lo), scale, grads[k]);
      };
      if (workers == 1) {
        run(0);
      } else {
        std::vector<std::thread> pool;
        for (std::size_t k = 0; k < workers; ++k) pool.emplace_back(run, k);
        for (auto& t : pool) t.join();
      }
      // Fixed reduction order keeps a given worker count reproducible.
      for (std::size_t k = 1; k < workers; ++k)
        for (std::size_t p = 0; p < grads[0].size(); ++p)
          for (std::size_t i = 0; i < grads[0][p].size(); ++i) grads[0][p].data()[i] += grads[k][p].data()[i];
      adam_step(model, grads[0], adam, train_cfg);
      for (double s : sse) epoch_sse += s;
      epoch_elems += frames * model_cfg.output_dim;
    }

    EpochRecord rec{epoch, epoch_sse / static_cast<double>(epoch_elems),
                    evaluate_loss(model, dev_set, train_cfg.batch)};
    result.history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (rec.dev_loss < best) {
      best = rec.dev_loss;
      result.history.best_epoch = epoch;
      result.model = model;
    } else if (epoch - result.history.best_epoch >= train_cfg.patience) {
      result.history.stopped_early = epoch < train_cfg.max_epochs;
      break;
    }
  }
  require(result.history.best_epoch > 0, ErrorKind::non_finite, "train: dev loss never became finite");
  return result;
}

#define PRESYNTH_INSTANTIATE(R)                                                                  \
  template Loss<R> mse_loss(const Matrix<R>&, const Matrix<R>&, std::span<const std::uint8_t>); \
  template struct AdamState<R>;                                                                 \
  template void adam_step(Model<R>&, const Gradients<R>&, AdamState<R>&, const TrainConfig&);   \
  template struct Dataset<R>;                                                                   \
  template double evaluate_loss(const Model<R>&, const Dataset<R>&, std::size_t);              \
  template TrainResult<R> train(const ModelConfig&, const TrainConfig&, const Dataset<R>&,      \
                                const Dataset<R>&, const std::function<void(const EpochRecord&)>&);
PRESYNTH_INSTANTIATE(float)
PRESYNTH_INSTANTIATE(double)
#undef PRESYNTH_INSTANTIATE

}  // namespace presynth
