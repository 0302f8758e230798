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

#include "linalg.hpp"
#include "presynth/error.hpp"
#include "presynth/nnet.hpp"
#include "presynth/random.hpp"

namespace presynth {
namespace {

template <class R>
R sigmoid(R x) {
  return R{1} / (R{1} + std::exp(-x));
}

std::size_t params_per_layer(ModelKind kind) { return kind == ModelKind::feedforward ? 2 : 3; }

void check_input(const ModelConfig& cfg, std::size_t cols) {
  require(cols == cfg.input_dim, ErrorKind::shape_mismatch,
          "model expects " + std::to_string(cfg.input_dim) + " input columns, got " +
              std::to_string(cols));
}

}  // namespace

const char* to_string(ModelKind k) { return k == ModelKind::feedforward ? "feedforward" : "recurrent"; }

ModelKind parse_model_kind(const std::string& s) {
  if (s == "feedforward" || s == "dnn") return ModelKind::feedforward;
  if (s == "recurrent" || s == "lstm") return ModelKind::recurrent;
  fail(ErrorKind::invalid_argument, "unknown model kind '" + s + "'");
}

ModelConfig ModelConfig::defaults(ModelKind kind, std::size_t input_dim, std::size_t output_dim) {
  ModelConfig c;
  c.kind = kind;
  c.hidden_layers = kind == ModelKind::feedforward ? 4 : 2;
  c.hidden_width = 512;
  c.input_dim = input_dim;
  c.output_dim = output_dim;
  return c;
}

void ModelConfig::validate() const {
  require(input_dim > 0 && output_dim > 0, ErrorKind::invalid_argument,
          "model dimensions must be positive");
  require(hidden_layers == 0 || hidden_width > 0, ErrorKind::invalid_argument,
          "hidden width must be positive");
  require(kind == ModelKind::feedforward || hidden_layers > 0, ErrorKind::invalid_argument,
          "a recurrent model needs at least one LSTM layer");
}

TrainConfig TrainConfig::defaults(ModelKind kind) {
  TrainConfig c;
  c.learning_rate = kind == ModelKind::feedforward ? 1e-3 : 5e-4;
  return c;
}

void TrainConfig::validate() const {
  require(learning_rate > 0.0 && std::isfinite(learning_rate), ErrorKind::invalid_argument,
          "learning rate must be positive");
  require(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0, ErrorKind::invalid_argument,
          "Adam betas must lie in (0, 1)");
  require(epsilon > 0.0, ErrorKind::invalid_argument, "Adam epsilon must be positive");
  require(batch >= 1 && max_epochs >= 1 && patience >= 1 && jobs >= 1,
          ErrorKind::invalid_argument, "batch, max_epochs, patience and jobs must be >= 1");
}

template <class Real>
Batch<Real> Batch<Real>::of(std::span<const Matrix<Real>* const> utterances) {
  Batch b;
  require(!utterances.empty(), ErrorKind::invalid_argument, "empty batch");
  const std::size_t cols = utterances.front()->cols();
  std::size_t rows = 0;
  for (const auto* u : utterances) {
    require(u->cols() == cols, ErrorKind::shape_mismatch, "batch utterances differ in width");
    rows += u->rows();
    b.offsets.push_back(rows);
  }
  b.x.resize(rows, cols);
  std::size_t at = 0;
  for (const auto* u : utterances) {
    std::copy(u->data(), u->data() + u->size(), b.x.data() + at);
    at += u->size();
  }
  b.mask.assign(rows, 1);
  return b;
}

template <class Real>
Batch<Real> Batch<Real>::of(const Matrix<Real>& utterance) {
  const Matrix<Real>* p = &utterance;
  return of(std::span<const Matrix<Real>* const>(&p, 1));
}

template <class Real>
Model<Real>::Model(const ModelConfig& config) : config_(config) {
  config.validate();
  Rng rng(config.seed);
  const std::size_t w = config.hidden_width;
  auto glorot = [&](std::size_t rows, std::size_t cols, double fan_in, double fan_out) {
    Matrix<Real> m(rows, cols);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& v : m.storage()) v = static_cast<Real>(rng.uniform(-limit, limit));
    return m;
  };
  std::size_t in = config.input_dim;
  for (std::size_t l = 0; l < config.hidden_layers; ++l) {
    const std::string prefix = (config.kind == ModelKind::feedforward ? "hidden" : "lstm") + std::to_string(l);
    if (config.kind == ModelKind::feedforward) {
      params_.push_back({prefix + ".weight", glorot(w, in, double(in), double(w))});
      params_.push_back({prefix + ".bias", Matrix<Real>(1, w)});
    } else {
      // Gates stacked as [input, forget, candidate, output]; each gate block
      // is initialised as its own w x in matrix.
      params_.push_back({prefix + ".w_input", glorot(4 * w, in, double(in), double(w))});
      params_.push_back({prefix + ".w_recurrent", glorot(4 * w, w, double(w), double(w))});
      Matrix<Real> bias(1, 4 * w);
      for (std::size_t j = w; j < 2 * w; ++j) bias(0, j) = Real{1};
      params_.push_back({prefix + ".bias", std::move(bias)});
    }
    in = w;
  }
  params_.push_back({"output.weight", glorot(config.output_dim, in, double(in), double(config.output_dim))});
  params_.push_back({"output.bias", Matrix<Real>(1, config.output_dim)});
}

template <class Real>
std::size_t Model<Real>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

template <class Real>
Gradients<Real> Model<Real>::zero_gradients() const {
  Gradients<Real> g;
  for (const auto& p : params_) g.emplace_back(p.value.rows(), p.value.cols());
  return g;
}

template <class Real>
Matrix<Real> Model<Real>::forward(const Batch<Real>& batch) const {
  return forward_trace(batch).output;
}

template <class Real>
Matrix<Real> Model<Real>::forward(const Matrix<Real>& utterance) const {
  return forward(Batch<Real>::of(utterance));
}

template <class Real>
Trace<Real> Model<Real>::forward_trace(const Batch<Real>& batch) const {
  check_input(config_, batch.x.cols());
  const std::size_t layers = config_.hidden_layers;
  const std::size_t per = params_per_layer(config_.kind);
  const std::size_t w = config_.hidden_width;
  Trace<Real> tr;
  tr.hidden.resize(layers);

  for (std::size_t l = 0; l < layers; ++l) {
    const Matrix<Real>& in = l == 0 ? batch.x : tr.hidden[l - 1];
    Matrix<Real>& h = tr.hidden[l];
    if (config_.kind == ModelKind::feedforward) {
      linalg::affine(in, params_[per * l].value, params_[per * l + 1].value, h);
      for (auto& v : h.storage()) v = std::tanh(v);
      continue;
    }

    const Matrix<Real>& wh = params_[per * l + 1].value;
    Matrix<Real> gates;
    linalg::affine(in, params_[per * l].value, params_[per * l + 2].value, gates);
    Matrix<Real> cells(in.rows(), w);
    h.resize(in.rows(), w);

    std::size_t longest = 0;
    for (std::size_t u = 0; u < batch.utterances(); ++u) longest = std::max(longest, batch.length(u));
    std::vector<std::size_t> rows;
    Matrix<Real> prev(batch.utterances(), w), rec(batch.utterances(), 4 * w);
    for (std::size_t t = 0; t < longest; ++t) {
      rows.clear();
      for (std::size_t u = 0; u < batch.utterances(); ++u)
        if (batch.length(u) > t) rows.push_back(batch.offsets[u] + t);
      if (t > 0) {
        for (std::size_t k = 0; k < rows.size(); ++k)
          std::copy_n(&h(rows[k] - 1, 0), w, &prev(k, 0));
        kernels::gemm_nt(prev.data(), wh.data(), rec.data(), rows.size(), 4 * w, w, false);
        for (std::size_t k = 0; k < rows.size(); ++k)
          kernels::axpy<Real>(Real{1}, rec.row(k), gates.row(rows[k]));
      }
      for (std::size_t r : rows) {
        Real* g = &gates(r, 0);
        Real* c = &cells(r, 0);
        Real* hr = &h(r, 0);
        const Real* cp = t > 0 ? &cells(r - 1, 0) : nullptr;
        for (std::size_t j = 0; j < w; ++j) {
          const Real i = sigmoid(g[j]);
          const Real f = sigmoid(g[w + j]);
          const Real cand = std::tanh(g[2 * w + j]);
          const Real o = sigmoid(g[3 * w + j]);
          g[j] = i;
          g[w + j] = f;
          g[2 * w + j] = cand;
          g[3 * w + j] = o;
          c[j] = (cp ? f * cp[j] : Real{0}) + i * cand;
          hr[j] = o * std::tanh(c[j]);
        }
      }
    }
    tr.gates.push_back(std::move(gates));
    tr.cells.push_back(std::move(cells));
  }

  const Matrix<Real>& top = layers == 0 ? batch.x : tr.hidden.back();
  linalg::affine(top, params_[per * layers].value, params_[per * layers + 1].value, tr.output);
  if (config_.output == OutputActivation::sigmoid)
    for (auto& v : tr.output.storage()) v = sigmoid(v);
  return tr;
}

template <class Real>
void Model<Real>::backward(const Batch<Real>& batch, const Trace<Real>& trace,
                           const Matrix<Real>& d_output, Gradients<Real>& grads) const {
  require(d_output.rows() == trace.output.rows() && d_output.cols() == trace.output.cols(),
          ErrorKind::shape_mismatch, "backward: output gradient shape differs from the output");
  require(grads.size() == params_.size(), ErrorKind::shape_mismatch,
          "backward: gradient list does not match the model");
  const std::size_t layers = config_.hidden_layers;
  const std::size_t per = params_per_layer(config_.kind);
  const std::size_t w = config_.hidden_width;

  Matrix<Real> dz = d_output;
  if (config_.output == OutputActivation::sigmoid)
    for (std::size_t i = 0; i < dz.size(); ++i) {
      const Real y = trace.output.data()[i];
      dz.data()[i] *= y * (Real{1} - y);
    }

  // Output layer.
  const Matrix<Real>& top = layers == 0 ? batch.x : trace.hidden.back();
  linalg::add_tn(dz, top, grads[per * layers]);
  linalg::add_colsum(dz, grads[per * layers + 1]);
  if (layers == 0) return;
  Matrix<Real> dh;
  linalg::mul_nn(dz, linalg::transposed(params_[per * layers].value), dh);

  for (std::size_t l = layers; l-- > 0;) {
    const Matrix<Real>& in = l == 0 ? batch.x : trace.hidden[l - 1];
    const Matrix<Real>& h = trace.hidden[l];
    if (config_.kind == ModelKind::feedforward) {
      for (std::size_t i = 0; i < dh.size(); ++i) {
        const Real y = h.data()[i];
        dh.data()[i] *= Real{1} - y * y;
      }
      linalg::add_tn(dh, in, grads[per * l]);
      linalg::add_colsum(dh, grads[per * l + 1]);
      if (l > 0) {
        Matrix<Real> below;
        linalg::mul_nn(dh, linalg::transposed(params_[per * l].value), below);
        dh = std::move(below);
      }
      continue;
    }

    // Full backpropagation through time, newest frame first.
    const Matrix<Real>& gates = trace.gates[l];
    const Matrix<Real>& cells = trace.cells[l];
    const Matrix<Real> wh_t = linalg::transposed(params_[per * l + 1].value);
    const std::size_t n_utt = batch.utterances();
    Matrix<Real> dpre(h.rows(), 4 * w);
    Matrix<Real> dh_next(n_utt, w), dc_next(n_utt, w);
    Matrix<Real> packed(n_utt, 4 * w), back(n_utt, w);
    std::size_t longest = 0;
    for (std::size_t u = 0; u < n_utt; ++u) longest = std::max(longest, batch.length(u));
    std::vector<std::size_t> rows, utts;
    for (std::size_t t = longest; t-- > 0;) {
      rows.clear();
      utts.clear();
      for (std::size_t u = 0; u < n_utt; ++u)
        if (batch.length(u) > t) {
          rows.push_back(batch.offsets[u] + t);
          utts.push_back(u);
        }
      for (std::size_t k = 0; k < rows.size(); ++k) {
        const std::size_t r = rows[k], u = utts[k];
        const Real* g = &gates(r, 0);
        const Real* c = &cells(r, 0);
        const Real* cp = t > 0 ? &cells(r - 1, 0) : nullptr;
        Real* dp = &dpre(r, 0);
        for (std::size_t j = 0; j < w; ++j) {
          const Real i = g[j], f = g[w + j], cand = g[2 * w + j], o = g[3 * w + j];
          const Real tc = std::tanh(c[j]);
          const Real dhj = dh(r, j) + dh_next(u, j);
          const Real dc = dc_next(u, j) + dhj * o * (Real{1} - tc * tc);
          dp[j] = dc * cand * i * (Real{1} - i);
          dp[w + j] = cp ? dc * cp[j] * f * (Real{1} - f) : Real{0};
          dp[2 * w + j] = dc * i * (Real{1} - cand * cand);
          dp[3 * w + j] = dhj * tc * o * (Real{1} - o);
          dc_next(u, j) = dc * f;
        }
      }
      if (t == 0) break;
      for (std::size_t k = 0; k < rows.size(); ++k) std::copy_n(&dpre(rows[k], 0), 4 * w, &packed(k, 0));
      kernels::gemm_nt(packed.data(), wh_t.data(), back.data(), rows.size(), w, 4 * w, false);
      for (std::size_t k = 0; k < rows.size(); ++k) std::copy_n(&back(k, 0), w, &dh_next(utts[k], 0));
    }

    // h_{t-1} aligned with every row, zero at utterance starts.
    Matrix<Real> shifted(h.rows(), w);
    for (std::size_t u = 0; u < n_utt; ++u)
      for (std::size_t r = batch.offsets[u] + 1; r < batch.offsets[u + 1]; ++r)
        std::copy_n(&h(r - 1, 0), w, &shifted(r, 0));
    linalg::add_tn(dpre, in, grads[per * l]);
    linalg::add_tn(dpre, shifted, grads[per * l + 1]);
    linalg::add_colsum(dpre, grads[per * l + 2]);
    if (l > 0) linalg::mul_nn(dpre, linalg::transposed(params_[per * l].value), dh);
  }
}

template struct Batch<float>;
template struct Batch<double>;
template class Model<float>;
template class Model<double>;

}  // namespace presynth
