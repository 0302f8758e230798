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

#include "presynth/dsp.hpp"
#include "presynth/error.hpp"
#include "presynth/kernels.hpp"

namespace presynth {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank build_mel_filterbank(std::size_t n_mels, const FrameConfig& cfg,
                                   double f_min, double f_max) {
  cfg.validate();
  const double nyquist = cfg.sample_rate / 2.0;
  require(n_mels >= 2, ErrorKind::invalid_argument, "mel filterbank needs n_mels >= 2");
  require(f_min >= 0.0 && f_min < f_max && f_max <= nyquist, ErrorKind::invalid_argument,
          "mel filterbank bounds must satisfy 0 <= f_min < f_max <= sample_rate/2");

  const double mel_lo = hz_to_mel(f_min);
  const double mel_hi = hz_to_mel(f_max);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                      static_cast<double>(n_mels + 1));

  MelFilterbank fb;
  fb.n_mels = n_mels;
  fb.f_min = f_min;
  fb.f_max = f_max;
  fb.weights.resize(n_mels, cfg.num_bins());
  fb.centers_hz.assign(edges.begin() + 1, edges.end() - 1);

  for (std::size_t j = 0; j < n_mels; ++j) {
    const double lo = edges[j], mid = edges[j + 1], hi = edges[j + 2];
    auto row = fb.weights.row(j);
    double peak = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) {
      const double f = static_cast<double>(k) * cfg.bin_hz();
      const double up = (f - lo) / (mid - lo);
      const double down = (hi - f) / (hi - mid);
      row[k] = std::max(0.0, std::min(up, down));
      peak = std::max(peak, row[k]);
    }
    require(peak > 0.0, ErrorKind::invalid_argument,
            "mel filter " + std::to_string(j) + " covers no FFT bin; use fewer bands or a larger FFT");
    for (double& w : row) w /= peak;
  }
  return fb;
}

Matrix<double> log_mel(const Spectrogram& spec, const MelFilterbank& fb) {
  require(fb.weights.cols() == spec.num_bins(), ErrorKind::shape_mismatch,
          "log_mel: filterbank has " + std::to_string(fb.weights.cols()) +
              " bins, spectrogram has " + std::to_string(spec.num_bins()));
  const Matrix<double> power = power_spectrum(spec);
  Matrix<double> out(spec.num_frames(), fb.n_mels);
  kernels::gemm_nt(power.data(), fb.weights.data(), out.data(), power.rows(), fb.n_mels,
                   power.cols(), false);
  for (double& v : out.storage()) v = std::log(std::max(v, kLogMelFloor));
  return out;
}

}  // namespace presynth
