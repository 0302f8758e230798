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

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "presynth/matrix.hpp"

namespace presynth {

inline constexpr int kSampleRate = 16000;

struct Waveform {
  std::vector<double> samples;
  int sample_rate = kSampleRate;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
};

enum class WindowKind { hann_periodic };

/// Analysis framing. Defaults give 64 ms windows at a 5 ms hop at 16 kHz.
struct FrameConfig {
  std::size_t window_len = 1024;
  std::size_t hop = 80;
  std::size_t fft_size = 1024;
  WindowKind window = WindowKind::hann_periodic;
  int sample_rate = kSampleRate;

  std::size_t num_bins() const noexcept { return fft_size / 2 + 1; }
  double bin_hz() const noexcept {
    return static_cast<double>(sample_rate) / static_cast<double>(fft_size);
  }
  double hop_seconds() const noexcept {
    return static_cast<double>(hop) / static_cast<double>(sample_rate);
  }

  /// Throws ErrorKind::invalid_argument on an unusable configuration.
  void validate() const;

  friend bool operator==(const FrameConfig&, const FrameConfig&) = default;
};

/// Frame count for a signal of `len` samples: frames are centred on t * hop
/// for t = 0 .. len / hop.
std::size_t num_frames(std::size_t len, const FrameConfig& cfg);

std::vector<double> analysis_window(const FrameConfig& cfg);

/// Mirror index into [0, n) without repeating the edge sample, folding as
/// many times as needed for very short signals.
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n);

/// Copies `out.size()` samples of `x` starting at `start`, reflecting past
/// either edge.
void extract_segment(std::span<const double> x, std::ptrdiff_t start,
                     std::span<double> out);

/// Real-input FFT of fixed size n, backed by FFTW.
/// Plans are shared process-wide; the scratch buffers make an instance
/// single-threaded, so give each worker its own.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(RealFft&&) noexcept;
  RealFft& operator=(RealFft&&) noexcept;

  std::size_t size() const noexcept { return n_; }

  /// out.size() must be n/2+1.
  void forward(std::span<const double> in, std::span<std::complex<double>> out);
  /// Normalized so inverse(forward(x)) == x.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

 struct Plans;

 private:
  std::size_t n_ = 0;
  const Plans* plans_ = nullptr;
  std::vector<double> real_;
  std::vector<std::complex<double>> spec_;
};

struct Spectrogram {
  Matrix<std::complex<double>> frames;  // T x (fft_size/2+1)
  FrameConfig config;
  std::size_t origin_len = 0;

  std::size_t num_frames() const noexcept { return frames.rows(); }
  std::size_t num_bins() const noexcept { return frames.cols(); }
};

/// Centered STFT with window_len/2 reflection padding on both ends.
Spectrogram stft(const Waveform& wave, const FrameConfig& cfg);

/// Weighted overlap-add inverse normalised by the summed squared window;
/// output has exactly origin_len samples.
Waveform istft(const Spectrogram& spec);

Matrix<double> power_spectrum(const Spectrogram& spec);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

struct MelFilterbank {
  std::size_t n_mels = 0;
  Matrix<double> weights;          // n_mels x num_bins
  std::vector<double> centers_hz;  // n_mels
  double f_min = 0.0;
  double f_max = 0.0;
};

MelFilterbank build_mel_filterbank(std::size_t n_mels, const FrameConfig& cfg,
                                   double f_min, double f_max);

inline constexpr double kLogMelFloor = 1e-10;

/// ln(max(fb . |X|^2, 1e-10)), T x n_mels.
Matrix<double> log_mel(const Spectrogram& spec, const MelFilterbank& fb);

}  // namespace presynth
