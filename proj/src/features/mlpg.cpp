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

#include <array>
#include <cmath>

#include "presynth/error.hpp"
#include "presynth/features.hpp"

namespace presynth {
namespace {

constexpr std::size_t kBand = 2;

struct Tap {
  std::size_t frame;
  double coef;
};

// Taps of window `w` (0 static, 1 delta, 2 delta-delta) at frame t, with the
// edge replication of compute_deltas folded in.
std::size_t window_taps(std::size_t w, std::size_t t, std::size_t frames, std::array<Tap, 3>& taps) {
  const std::size_t prev = t == 0 ? 0 : t - 1;
  const std::size_t next = t + 1 < frames ? t + 1 : frames - 1;
  std::array<Tap, 3> raw{};
  std::size_t n = 0;
  switch (w) {
    case 0:
      raw[n++] = {t, 1.0};
      break;
    case 1:
      raw[n++] = {prev, -0.5};
      raw[n++] = {next, 0.5};
      break;
    default:
      raw[n++] = {prev, 1.0};
      raw[n++] = {t, -2.0};
      raw[n++] = {next, 1.0};
      break;
  }
  // Merge taps that landed on the same frame.
  std::size_t m = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = 0;
    while (j < m && taps[j].frame != raw[i].frame) ++j;
    if (j == m) taps[m++] = raw[i];
    else taps[j].coef += raw[i].coef;
  }
  return m;
}

}  // namespace

Matrix<double> mlpg_smooth(const Matrix<double>& means, std::span<const double> variances) {
  require(means.cols() % 3 == 0, ErrorKind::shape_mismatch,
          "mlpg_smooth: stream block must have 3*D columns");
  require(variances.size() == means.cols(), ErrorKind::shape_mismatch,
          "mlpg_smooth: one variance per column required");
  for (double v : variances)
    require(v > 0.0 && std::isfinite(v), ErrorKind::invalid_argument,
            "mlpg_smooth: variances must be positive");
  const std::size_t frames = means.rows();
  const std::size_t dim = means.cols() / 3;
  Matrix<double> out(frames, dim);
  if (frames == 0) return out;

  // band(t, j) holds A(t, t + j); chol(t, j) holds L(t, t - j).
  Matrix<double> band(frames, kBand + 1), chol(frames, kBand + 1);
  std::vector<double> rhs(frames);
  std::array<Tap, 3> taps{};
  for (std::size_t d = 0; d < dim; ++d) {
    std::fill(band.storage().begin(), band.storage().end(), 0.0);
    std::fill(rhs.begin(), rhs.end(), 0.0);
    for (std::size_t t = 0; t < frames; ++t) {
      for (std::size_t w = 0; w < 3; ++w) {
        const double prec = 1.0 / variances[w * dim + d];
        const double mu = means(t, w * dim + d);
        const std::size_t n = window_taps(w, t, frames, taps);
        for (std::size_t a = 0; a < n; ++a) {
          rhs[taps[a].frame] += taps[a].coef * prec * mu;
          for (std::size_t b = 0; b < n; ++b) {
            if (taps[b].frame < taps[a].frame) continue;
            band(taps[a].frame, taps[b].frame - taps[a].frame) += taps[a].coef * taps[b].coef * prec;
          }
        }
      }
    }

    // Banded Cholesky, A = L L'.
    for (std::size_t i = 0; i < frames; ++i) {
      const std::size_t j0 = i >= kBand ? i - kBand : 0;
      for (std::size_t j = j0; j <= i; ++j) {
        double s = band(j, i - j);
        for (std::size_t k = j0; k < j; ++k)
          if (j - k <= kBand) s -= chol(i, i - k) * chol(j, j - k);
        if (i == j) {
          require(s > 0.0, ErrorKind::invalid_argument, "mlpg_smooth: system is not positive definite");
          chol(i, 0) = std::sqrt(s);
        } else {
          chol(i, i - j) = s / chol(j, 0);
        }
      }
    }
    // Forward then backward substitution.
    for (std::size_t i = 0; i < frames; ++i) {
      double s = rhs[i];
      for (std::size_t k = i >= kBand ? i - kBand : 0; k < i; ++k) s -= chol(i, i - k) * rhs[k];
      rhs[i] = s / chol(i, 0);
    }
    for (std::size_t i = frames; i-- > 0;) {
      double s = rhs[i];
      for (std::size_t k = i + 1; k < std::min(frames, i + kBand + 1); ++k) s -= chol(k, k - i) * rhs[k];
      rhs[i] = s / chol(i, 0);
    }
    for (std::size_t t = 0; t < frames; ++t) out(t, d) = rhs[t];
  }
  return out;
}

}  // namespace presynth
