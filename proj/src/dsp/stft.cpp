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

#include <cmath>
#include <numbers>

#include "presynth/dsp.hpp"
#include "presynth/error.hpp"

namespace presynth {

void FrameConfig::validate() const {
  require(hop > 0 && window_len > 0 && fft_size > 0, ErrorKind::invalid_argument,
          "frame sizes must be positive");
  require(hop <= window_len && window_len <= fft_size, ErrorKind::invalid_argument,
          "frame config requires hop <= window_len <= fft_size");
  require(fft_size % 2 == 0, ErrorKind::invalid_argument, "fft_size must be even");
  require(sample_rate > 0, ErrorKind::invalid_argument, "sample rate must be positive");
}

std::size_t num_frames(std::size_t len, const FrameConfig& cfg) {
  return len / cfg.hop + 1;
}

std::vector<double> analysis_window(const FrameConfig& cfg) {
  std::vector<double> w(cfg.window_len);
  const double n = static_cast<double>(cfg.window_len);
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / n);
  return w;
}

std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  std::ptrdiff_t r = i % period;
  if (r < 0) r += period;
  if (r >= static_cast<std::ptrdiff_t>(n)) r = period - r;
  return static_cast<std::size_t>(r);
}

void extract_segment(std::span<const double> x, std::ptrdiff_t start,
                     std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::ptrdiff_t idx = start + static_cast<std::ptrdiff_t>(i);
    out[i] = (idx >= 0 && idx < n) ? x[static_cast<std::size_t>(idx)]
                                   : x[reflect_index(idx, x.size())];
  }
}

Spectrogram stft(const Waveform& wave, const FrameConfig& cfg) {
  cfg.validate();
  require(!wave.empty(), ErrorKind::invalid_argument, "stft: empty signal");
  require(wave.sample_rate == cfg.sample_rate, ErrorKind::sample_rate,
          "stft: waveform is " + std::to_string(wave.sample_rate) +
              " Hz but frame config assumes " + std::to_string(cfg.sample_rate) + " Hz");

  const std::size_t frames = num_frames(wave.size(), cfg);
  const auto window = analysis_window(cfg);
  const auto half = static_cast<std::ptrdiff_t>(cfg.window_len / 2);

  Spectrogram spec;
  spec.config = cfg;
  spec.origin_len = wave.size();
  spec.frames.resize(frames, cfg.num_bins());

  RealFft fft(cfg.fft_size);
  std::vector<double> buf(cfg.fft_size, 0.0);
  std::span<double> seg(buf.data(), cfg.window_len);
  for (std::size_t t = 0; t < frames; ++t) {
    const auto center = static_cast<std::ptrdiff_t>(t * cfg.hop);
    extract_segment(wave.samples, center - half, seg);
    for (std::size_t i = 0; i < cfg.window_len; ++i) seg[i] *= window[i];
    fft.forward(buf, spec.frames.row(t));
  }
  return spec;
}

Waveform istft(const Spectrogram& spec) {
  const FrameConfig& cfg = spec.config;
  cfg.validate();
  require(spec.num_bins() == cfg.num_bins(), ErrorKind::shape_mismatch,
          "istft: spectrogram has " + std::to_string(spec.num_bins()) +
              " bins, config expects " + std::to_string(cfg.num_bins()));

  const auto window = analysis_window(cfg);
  const std::size_t half = cfg.window_len / 2;
  const std::size_t frames = spec.num_frames();
  const std::size_t padded_len = (frames == 0 ? 0 : (frames - 1) * cfg.hop) + cfg.window_len;

  std::vector<double> acc(padded_len, 0.0);
  std::vector<double> norm(padded_len, 0.0);
  std::vector<double> buf(cfg.fft_size);
  RealFft fft(cfg.fft_size);
  for (std::size_t t = 0; t < frames; ++t) {
    fft.inverse(spec.frames.row(t), buf);
    const std::size_t start = t * cfg.hop;
    for (std::size_t i = 0; i < cfg.window_len; ++i) {
      acc[start + i] += window[i] * buf[i];
      norm[start + i] += window[i] * window[i];
    }
  }

  Waveform out;
  out.sample_rate = cfg.sample_rate;
  out.samples.assign(spec.origin_len, 0.0);
  for (std::size_t n = 0; n < spec.origin_len; ++n) {
    const std::size_t p = n + half;
    if (p < padded_len && norm[p] > 1e-10) out.samples[n] = acc[p] / norm[p];
  }
  return out;
}

Matrix<double> power_spectrum(const Spectrogram& spec) {
  Matrix<double> p(spec.num_frames(), spec.num_bins());
  for (std::size_t i = 0; i < p.size(); ++i) p.data()[i] = std::norm(spec.frames.data()[i]);
  return p;
}

}  // namespace presynth
