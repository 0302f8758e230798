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

// Enhancement systems: parametric resynthesis (PR, PR-clean), the
// vocoder-encoded-decoded upper bound (VED), and mask baselines (oracle
// Wiener mask, DNN-predicted ratio mask).

#include <cstdint>
#include <string>

#include "presynth/corpus.hpp"
#include "presynth/dsp.hpp"
#include "presynth/features.hpp"
#include "presynth/matrix.hpp"
#include "presynth/nnet.hpp"

namespace presynth {

struct Mask {
  Matrix<double> values;  // T x bins, in [0, 1]
  FrameConfig config;
};

/// |S|^2 / (|S|^2 + |N|^2) per bin, 0 where both are zero.
Mask oracle_wiener_mask(const Spectrogram& clean, const Spectrogram& noise);

/// Scales noisy magnitudes by the mask, keeps the noisy phase, inverts.
Waveform apply_mask(const Spectrogram& noisy, const Mask& mask);

inline constexpr double kIrmFloor = 1e-10;

/// Ratio mask on mel-band energies, (mel|S|^2 + e) / (mel|S|^2 + mel|N|^2 + e)
/// with e = kIrmFloor; T x n_mels.
Matrix<double> irm_training_targets(const Spectrogram& clean, const Spectrogram& noise,
                                    const MelFilterbank& fb);

/// Mel-domain mask to per-bin mask through the column-normalised transpose
/// of the filterbank. Bins no filter covers take the nearest filter's value.
Mask expand_mel_mask(const Matrix<double>& mel_mask, const MelFilterbank& fb,
                     const FrameConfig& cfg);

/// Per-bin mask to mel bands: filter-weighted average over each band.
Matrix<double> project_mask_to_mel(const Mask& mask, const MelFilterbank& fb);

enum class SystemKind { pr, pr_clean, ved, owm, dnn_irm, noisy_passthrough };

/// Lower-case label used in file names and reports ("pr", "pr_clean", ...).
const char* to_string(SystemKind k);
SystemKind parse_system(const std::string& s);

/// A trained acoustic-feature predictor with the statistics it was trained on.
struct PrModel {
  Model<float> model;
  Normalizer input_norm;
  Normalizer target_norm;
  FeatureOptions features;

  /// Throws config_mismatch if the model, normalizers and features disagree.
  void validate() const;
};

/// Normalized model input for one waveform.
Matrix<float> model_input(const Waveform& wave, const Normalizer& input_norm,
                          const FeatureOptions& features);

/// The vocoder track a PR model predicts for `wave`.
AcousticTrack predict_track(const PrModel& pr, const Waveform& wave, GenerationMode mode);

/// Synthesizes a track and trims or zero-pads it to `length` samples.
Waveform resynthesize(const AcousticTrack& track, std::size_t length, std::uint64_t seed,
                      const VocoderConfig& cfg = {});

/// log-mel, context, normalize, predict, denormalize, synthesize. PR-clean is
/// this function with a clean-input model applied to clean speech.
Waveform pr_enhance(const PrModel& pr, const Waveform& wave, GenerationMode mode,
                    std::uint64_t seed);

/// Vocoder-encoded-decoded speech: synthesize(analyze(wave)).
Waveform ved(const Waveform& wave, std::uint64_t seed, const VocoderConfig& cfg = {});

/// Oracle Wiener mask from the (already scaled) speech and noise of a mixture.
Waveform owm_enhance(const Waveform& speech, const Waveform& noise, const Waveform& noisy,
                     const FrameConfig& cfg = {});

/// Mel-domain ratio-mask predictor.
struct MaskModel {
  Model<float> model;
  Normalizer input_norm;
  FeatureOptions features;

  void validate() const;
};

/// Predicted mel mask, clamped to [0, 1], T x n_mels.
Matrix<double> predict_mel_mask(const MaskModel& mm, const Waveform& noisy);

Waveform dnn_irm_enhance(const MaskModel& mm, const Waveform& noisy);

/// Scales the signal down so that max |x| <= limit. Returns the factor used.
double limit_peak(Waveform& wave, double limit = 0.99);

}  // namespace presynth
