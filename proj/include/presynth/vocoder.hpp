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

// A compact analysis/synthesis vocoder with WORLD-shaped parameters:
// autocorrelation F0, pitch-adaptive smoothed spectral envelope stored as a
// 60-term mel-cepstrum, 5-band aperiodicity and a voicing flag per 5 ms frame.

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "presynth/dsp.hpp"
#include "presynth/matrix.hpp"

namespace presynth {

inline constexpr std::size_t kMcepOrder = 60;
inline constexpr std::size_t kBapBands = 5;

struct VocoderConfig {
  FrameConfig frame;

  double f0_floor_hz = 50.0;
  double f0_ceil_hz = 550.0;
  /// Normalized cross-correlation peak needed to call a frame voiced.
  double voicing_threshold = 0.45;
  /// Frames quieter than this RMS are unvoiced regardless of periodicity.
  double silence_rms = 1e-4;
  /// Correlation length in samples (30 ms).
  std::size_t f0_window = 480;
  std::size_t median_len = 5;

  double unvoiced_smoothing_hz = 200.0;
  double envelope_floor = 1e-12;

  std::size_t mcep_order = kMcepOrder;
  double alpha = 0.58;

  std::array<double, kBapBands + 1> band_edges_hz{0.0, 1000.0, 2000.0, 4000.0, 6000.0, 8000.0};
  double bap_floor_db = -60.0;

  /// Peak limit applied to synthesized output (scaled down only if exceeded).
  double peak_limit = 0.99;
};

struct F0Track {
  std::vector<double> f0;     // Hz, 0 when unvoiced
  std::vector<std::uint8_t> vuv;
  double hop_ms = 5.0;

  std::size_t size() const noexcept { return f0.size(); }
};

struct AcousticTrack {
  Matrix<double> mcep;  // T x 60, coefficient 0 is log power
  Matrix<double> bap;   // T x 5, dB, <= 0
  std::vector<double> lf0;  // natural log Hz, interpolated through unvoiced frames
  std::vector<std::uint8_t> vuv;
  double frame_hop_ms = 5.0;
  int sample_rate = kSampleRate;

  std::size_t num_frames() const noexcept { return lf0.size(); }

  /// Shape and finiteness checks; throws shape_mismatch / non_finite.
  void validate() const;
};

F0Track estimate_f0(const Waveform& wave, const VocoderConfig& cfg = {});

/// Per-frame smoothed power spectral density, T x (fft_size/2+1).
Matrix<double> estimate_envelope(const Waveform& wave, const F0Track& f0,
                                 const VocoderConfig& cfg = {});

/// log env(w) = c0 + sum_{m>=1} c_m cos(m * warp(w)); flat power p gives
/// c0 = ln p.
Matrix<double> envelope_to_mcep(const Matrix<double>& envelope, std::size_t order,
                                double alpha);
Matrix<double> mcep_to_envelope(const Matrix<double>& mcep, const FrameConfig& cfg,
                                double alpha);

/// First-order all-pass frequency warping, radians in [0, pi].
double warp_frequency(double omega, double alpha);

Matrix<double> estimate_band_aperiodicity(const Waveform& wave, const F0Track& f0,
                                          const VocoderConfig& cfg = {});

AcousticTrack analyze(const Waveform& wave, const VocoderConfig& cfg = {});

/// Deterministic for a given seed. Output has num_frames * hop samples.
Waveform synthesize(const AcousticTrack& track, std::uint64_t seed,
                    const VocoderConfig& cfg = {});

/// Hz contour implied by a track (exp(lf0) on voiced frames, 0 elsewhere).
F0Track f0_of(const AcousticTrack& track);

/// Interpolates ln f0 across unvoiced frames, holding the edges.
std::vector<double> interpolate_lf0(const F0Track& f0);

void save_track(const std::filesystem::path& path, const AcousticTrack& track);
AcousticTrack load_track(const std::filesystem::path& path);

}  // namespace presynth
