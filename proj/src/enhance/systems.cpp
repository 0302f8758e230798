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

namespace presynth {
namespace {

std::size_t input_width(const FeatureOptions& f) { return f.n_mels * (2 * f.context_radius + 1); }

void check_input_side(const Model<float>& model, const Normalizer& input_norm,
                      const FeatureOptions& features, const char* who) {
  const std::size_t width = input_width(features);
  require(model.config().input_dim == width, ErrorKind::config_mismatch,
          std::string(who) + ": model takes " + std::to_string(model.config().input_dim) +
              " inputs but the feature config yields " + std::to_string(width));
  require(input_norm.dim() == width, ErrorKind::config_mismatch,
          std::string(who) + ": input normalizer has " + std::to_string(input_norm.dim()) +
              " columns, expected " + std::to_string(width));
}

Matrix<double> run(const Model<float>& model, const Matrix<float>& x) {
  return matrix_cast<double>(model.forward(x));
}

}  // namespace

const char* to_string(SystemKind k) {
  switch (k) {
    case SystemKind::pr: return "pr";
    case SystemKind::pr_clean: return "pr_clean";
    case SystemKind::ved: return "ved";
    case SystemKind::owm: return "owm";
    case SystemKind::dnn_irm: return "dnn_irm";
    case SystemKind::noisy_passthrough: return "noisy";
  }
  return "?";
}

SystemKind parse_system(const std::string& s) {
  for (auto k : {SystemKind::pr, SystemKind::pr_clean, SystemKind::ved, SystemKind::owm,
                 SystemKind::dnn_irm, SystemKind::noisy_passthrough})
    if (s == to_string(k)) return k;
  fail(ErrorKind::invalid_argument, "unknown system '" + s + "'");
}

void PrModel::validate() const {
  check_input_side(model, input_norm, features, "PR model");
  require(model.config().output_dim == kTargetDim && target_norm.dim() == kTargetDim,
          ErrorKind::config_mismatch, "PR model: output is not the vocoder target layout");
}

void MaskModel::validate() const {
  check_input_side(model, input_norm, features, "mask model");
  require(model.config().output_dim == features.n_mels, ErrorKind::config_mismatch,
          "mask model: output width differs from the mel band count");
}

Matrix<float> model_input(const Waveform& wave, const Normalizer& input_norm,
                          const FeatureOptions& features) {
  return matrix_cast<float>(input_norm.applied(input_features(wave, features)));
}

AcousticTrack predict_track(const PrModel& pr, const Waveform& wave, GenerationMode mode) {
  pr.validate();
  const Matrix<double> pred = run(pr.model, model_input(wave, pr.input_norm, pr.features));
  AcousticTrack track = disassemble_targets(pred, pr.target_norm, mode);
  track.frame_hop_ms = 1000.0 * pr.features.vocoder.frame.hop_seconds();
  track.sample_rate = pr.features.vocoder.frame.sample_rate;
  return track;
}

Waveform resynthesize(const AcousticTrack& track, std::size_t length, std::uint64_t seed,
                      const VocoderConfig& cfg) {
  Waveform out = synthesize(track, seed, cfg);
  out.samples.resize(length, 0.0);
  return out;
}

Waveform pr_enhance(const PrModel& pr, const Waveform& wave, GenerationMode mode,
                    std::uint64_t seed) {
  return resynthesize(predict_track(pr, wave, mode), wave.size(), seed, pr.features.vocoder);
}

Waveform ved(const Waveform& wave, std::uint64_t seed, const VocoderConfig& cfg) {
  return resynthesize(analyze(wave, cfg), wave.size(), seed, cfg);
}

Waveform owm_enhance(const Waveform& speech, const Waveform& noise, const Waveform& noisy,
                     const FrameConfig& cfg) {
  const Spectrogram x = stft(noisy, cfg);
  Waveform out = apply_mask(x, oracle_wiener_mask(stft(speech, cfg), stft(noise, cfg)));
  limit_peak(out);
  return out;
}

Matrix<double> predict_mel_mask(const MaskModel& mm, const Waveform& noisy) {
  mm.validate();
  Matrix<double> m = run(mm.model, model_input(noisy, mm.input_norm, mm.features));
  for (double& v : m.storage()) v = std::clamp(v, 0.0, 1.0);
  return m;
}

Waveform dnn_irm_enhance(const MaskModel& mm, const Waveform& noisy) {
  const FrameConfig& frame = mm.features.vocoder.frame;
  const MelFilterbank fb = build_mel_filterbank(mm.features.n_mels, frame, mm.features.f_min, mm.features.f_max);
  Waveform out = apply_mask(stft(noisy, frame), expand_mel_mask(predict_mel_mask(mm, noisy), fb, frame));
  limit_peak(out);
  return out;
}

double limit_peak(Waveform& wave, double limit) {
  double peak = 0.0;
  for (double v : wave.samples) peak = std::max(peak, std::abs(v));
  if (peak <= limit) return 1.0;
  const double scale = limit / peak;
  for (double& v : wave.samples) v *= scale;
  return scale;
}

}  // namespace presynth
