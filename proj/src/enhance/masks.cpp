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

#include "presynth/enhance.hpp"
#include "presynth/error.hpp"
#include "presynth/kernels.hpp"

namespace presynth {
namespace {

void check_aligned(const Spectrogram& a, const Spectrogram& b, const char* who) {
  require(a.num_frames() == b.num_frames() && a.num_bins() == b.num_bins(),
          ErrorKind::shape_mismatch,
          std::string(who) + ": spectrograms differ in shape (" + std::to_string(a.num_frames()) +
              "x" + std::to_string(a.num_bins()) + " vs " + std::to_string(b.num_frames()) + "x" +
              std::to_string(b.num_bins()) + ")");
}

Matrix<double> mel_energy(const Spectrogram& spec, const MelFilterbank& fb) {
  require(fb.weights.cols() == spec.num_bins(), ErrorKind::shape_mismatch,
          "mel filterbank does not match the spectrogram's bin count");
  const Matrix<double> power = power_spectrum(spec);
  Matrix<double> out(spec.num_frames(), fb.n_mels);
  kernels::gemm_nt(power.data(), fb.weights.data(), out.data(), power.rows(), fb.n_mels,
                   power.cols(), false);
  return out;
}

}  // namespace

Mask oracle_wiener_mask(const Spectrogram& clean, const Spectrogram& noise) {
  check_aligned(clean, noise, "oracle_wiener_mask");
  Mask m{Matrix<double>(clean.num_frames(), clean.num_bins()), clean.config};
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    const double s = std::norm(clean.frames.data()[i]);
    const double n = std::norm(noise.frames.data()[i]);
    m.values.data()[i] = s + n > 0.0 ? s / (s + n) : 0.0;
  }
  return m;
}

Waveform apply_mask(const Spectrogram& noisy, const Mask& mask) {
  require(mask.values.rows() == noisy.num_frames() && mask.values.cols() == noisy.num_bins(),
          ErrorKind::shape_mismatch,
          "apply_mask: mask is " + std::to_string(mask.values.rows()) + "x" +
              std::to_string(mask.values.cols()) + ", spectrogram is " +
              std::to_string(noisy.num_frames()) + "x" + std::to_string(noisy.num_bins()));
  Spectrogram out = noisy;
  for (std::size_t i = 0; i < mask.values.size(); ++i)
    out.frames.data()[i] *= std::clamp(mask.values.data()[i], 0.0, 1.0);
  return istft(out);
}

Matrix<double> irm_training_targets(const Spectrogram& clean, const Spectrogram& noise,
                                    const MelFilterbank& fb) {
  check_aligned(clean, noise, "irm_training_targets");
  const Matrix<double> s = mel_energy(clean, fb);
  const Matrix<double> n = mel_energy(noise, fb);
  Matrix<double> out(s.rows(), s.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double num = s.data()[i] + kIrmFloor;
    out.data()[i] = std::clamp(num / (num + n.data()[i]), 0.0, 1.0);
  }
  return out;
}

Mask expand_mel_mask(const Matrix<double>& mel_mask, const MelFilterbank& fb,
                     const FrameConfig& cfg) {
  const std::size_t bins = cfg.num_bins();
  require(mel_mask.cols() == fb.n_mels && fb.weights.cols() == bins, ErrorKind::shape_mismatch,
          "expand_mel_mask: mask has " + std::to_string(mel_mask.cols()) +
              " bands, filterbank has " + std::to_string(fb.n_mels));
  // Column-normalised transpose, n_mels x bins laid out for C = M * W'.
  Matrix<double> wt(bins, fb.n_mels, 0.0);
  for (std::size_t k = 0; k < bins; ++k) {
    double col = 0.0;
    for (std::size_t j = 0; j < fb.n_mels; ++j) col += fb.weights(j, k);
    if (col > 0.0) {
      for (std::size_t j = 0; j < fb.n_mels; ++j) wt(k, j) = fb.weights(j, k) / col;
      continue;
    }
    const double hz = static_cast<double>(k) * cfg.bin_hz();
    std::size_t nearest = 0;
    for (std::size_t j = 1; j < fb.n_mels; ++j)
      if (std::abs(fb.centers_hz[j] - hz) < std::abs(fb.centers_hz[nearest] - hz)) nearest = j;
    wt(k, nearest) = 1.0;
  }
  Mask out{Matrix<double>(mel_mask.rows(), bins), cfg};
  kernels::gemm_nt(mel_mask.data(), wt.data(), out.values.data(), mel_mask.rows(), bins,
                   fb.n_mels, false);
  for (double& v : out.values.storage()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

Matrix<double> project_mask_to_mel(const Mask& mask, const MelFilterbank& fb) {
  require(mask.values.cols() == fb.weights.cols(), ErrorKind::shape_mismatch,
          "project_mask_to_mel: bin counts differ");
  Matrix<double> w = fb.weights;
  for (std::size_t j = 0; j < fb.n_mels; ++j) {
    auto row = w.row(j);
    double sum = 0.0;
    for (double v : row) sum += v;
    for (double& v : row) v /= sum;
  }
  Matrix<double> out(mask.values.rows(), fb.n_mels);
  kernels::gemm_nt(mask.values.data(), w.data(), out.data(), mask.values.rows(), fb.n_mels,
                   mask.values.cols(), false);
  return out;
}

}  // namespace presynth
