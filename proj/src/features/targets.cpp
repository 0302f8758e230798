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

#include "presynth/error.hpp"
#include "presynth/features.hpp"

namespace presynth {
namespace {

// Copies the statics and both delta blocks of `x` into `out` at `offset`.
void put_stream(const Matrix<double>& x, std::size_t offset, Matrix<double>& out) {
  const Deltas d = compute_deltas(x);
  const std::size_t dim = x.cols();
  for (std::size_t t = 0; t < x.rows(); ++t) {
    auto row = out.row(t);
    for (std::size_t j = 0; j < dim; ++j) {
      row[offset + j] = x(t, j);
      row[offset + dim + j] = d.delta(t, j);
      row[offset + 2 * dim + j] = d.delta2(t, j);
    }
  }
}

Matrix<double> take_block(const Matrix<double>& x, std::size_t offset, std::size_t width) {
  Matrix<double> out(x.rows(), width);
  for (std::size_t t = 0; t < x.rows(); ++t)
    std::copy_n(x.row(t).begin() + static_cast<std::ptrdiff_t>(offset), width, out.row(t).begin());
  return out;
}

}  // namespace

Deltas compute_deltas(const Matrix<double>& x) {
  const std::size_t frames = x.rows();
  const std::size_t dim = x.cols();
  Deltas d{Matrix<double>(frames, dim), Matrix<double>(frames, dim)};
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t prev = t == 0 ? 0 : t - 1;
    const std::size_t next = std::min(t + 1, frames - 1);
    for (std::size_t j = 0; j < dim; ++j) {
      d.delta(t, j) = 0.5 * (x(next, j) - x(prev, j));
      d.delta2(t, j) = x(next, j) - 2.0 * x(t, j) + x(prev, j);
    }
  }
  return d;
}

Matrix<double> assemble_targets(const AcousticTrack& track) {
  track.validate();
  const std::size_t frames = track.num_frames();
  Matrix<double> out(frames, kTargetDim);
  put_stream(track.mcep, kMcepBlock, out);
  put_stream(Matrix<double>(frames, 1, track.lf0), kLf0Block, out);
  put_stream(track.bap, kBapBlock, out);
  for (std::size_t t = 0; t < frames; ++t) out(t, kVuvColumn) = track.vuv[t] ? 1.0 : 0.0;
  return out;
}

Matrix<double> stack_context(const Matrix<double>& x, std::size_t radius) {
  const std::size_t frames = x.rows();
  const std::size_t dim = x.cols();
  const std::size_t width = 2 * radius + 1;
  Matrix<double> out(frames, width * dim);
  if (frames == 0) return out;
  const auto last = static_cast<std::ptrdiff_t>(frames) - 1;
  for (std::size_t t = 0; t < frames; ++t) {
    auto row = out.row(t);
    for (std::size_t w = 0; w < width; ++w) {
      const std::ptrdiff_t src = std::clamp<std::ptrdiff_t>(
          static_cast<std::ptrdiff_t>(t + w) - static_cast<std::ptrdiff_t>(radius), 0, last);
      std::copy_n(x.row(static_cast<std::size_t>(src)).begin(), dim,
                  row.begin() + static_cast<std::ptrdiff_t>(w * dim));
    }
  }
  return out;
}

AcousticTrack disassemble_targets(const Matrix<double>& pred, const Normalizer& norm,
                                  GenerationMode mode) {
  require(pred.cols() == kTargetDim, ErrorKind::shape_mismatch,
          "disassemble_targets: expected " + std::to_string(kTargetDim) + " columns, got " +
              std::to_string(pred.cols()));
  require(norm.dim() == kTargetDim, ErrorKind::shape_mismatch,
          "disassemble_targets: normalizer has " + std::to_string(norm.dim()) + " columns");
  const Matrix<double> raw = norm.inverted(pred);
  const std::size_t frames = raw.rows();

  auto statics = [&](std::size_t offset, std::size_t dim) {
    if (mode == GenerationMode::statics || frames == 0) return take_block(raw, offset, dim);
    std::vector<double> var(3 * dim);
    for (std::size_t j = 0; j < 3 * dim; ++j) {
      const double s = norm.stdev()[offset + j];
      var[j] = s * s;
    }
    return mlpg_smooth(take_block(raw, offset, 3 * dim), var);
  };

  AcousticTrack track;
  track.mcep = statics(kMcepBlock, kMcepOrder);
  track.bap = statics(kBapBlock, kBapBands);
  const Matrix<double> lf0 = statics(kLf0Block, 1);
  track.lf0.resize(frames);
  track.vuv.resize(frames);
  const double lo = std::log(50.0), hi = std::log(550.0);
  for (std::size_t t = 0; t < frames; ++t) {
    track.lf0[t] = std::clamp(lf0(t, 0), lo, hi);
    track.vuv[t] = raw(t, kVuvColumn) > 0.5 ? 1 : 0;
  }
  for (double& v : track.bap.storage()) v = std::min(v, 0.0);
  track.validate();
  return track;
}

}  // namespace presynth
