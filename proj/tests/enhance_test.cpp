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

#include "doctest.h"
#include "presynth/corpus.hpp"
#include "presynth/enhance.hpp"
#include "presynth/error.hpp"
#include "presynth/metrics.hpp"
#include "presynth/synthetic.hpp"
#include "test_util.hpp"

using namespace presynth;
using namespace presynth::testing;

namespace {

Waveform speech(std::uint64_t seed, bool high = false) {
  Rng rng(seed);
  return synthetic::vowel_sequence(rng, high ? synthetic::high_voice() : synthetic::low_voice());
}

double energy(const Waveform& w) {
  double s = 0.0;
  for (double v : w.samples) s += v * v;
  return s;
}

// Mixture at the requested SNR, with the scaled speech and noise it is made of.
struct Parts {
  Waveform speech, noise, noisy;
};

Parts mixture(const Waveform& clean, std::uint64_t seed, double snr_db) {
  Rng rng(seed);
  Waveform n = synthetic::noise(rng, 2.0, synthetic::NoiseColor::pink);
  n.samples.resize(clean.size());
  const double scale = std::sqrt(energy(clean) / energy(n) / std::pow(10.0, snr_db / 10.0));
  for (double& v : n.samples) v *= scale;
  const Mixture m = mix(clean, n, 0);
  Parts p{clean, m.noise, m.noisy};
  for (double& v : p.speech.samples) v *= kMixGain;
  for (double& v : p.noise.samples) v *= kMixGain;
  return p;
}

Spectrogram flat_spec(std::size_t frames, std::size_t bins, std::complex<double> v) {
  Spectrogram s;
  s.frames = Matrix<std::complex<double>>(frames, bins, v);
  s.origin_len = (frames - 1) * s.config.hop;
  return s;
}

double peak(const Waveform& w) {
  double p = 0.0;
  for (double v : w.samples) p = std::max(p, std::abs(v));
  return p;
}

// A PR model with random weights on the default feature layout.
PrModel random_pr(std::uint64_t seed) {
  FeatureOptions f;
  const std::size_t in = f.n_mels * (2 * f.context_radius + 1);
  ModelConfig mc = ModelConfig::defaults(ModelKind::feedforward, in, kTargetDim);
  mc.hidden_layers = 1;
  mc.hidden_width = 16;
  mc.seed = seed;
  return PrModel{Model<float>(mc), Normalizer::identity(in, NormalizerKind::input),
                 Normalizer::identity(kTargetDim, NormalizerKind::target), f};
}

}  // namespace

TEST_CASE("oracle wiener mask") {
  const std::size_t bins = FrameConfig{}.num_bins();
  auto m = oracle_wiener_mask(flat_spec(3, bins, {1.0, 1.0}), flat_spec(3, bins, {0.0, std::sqrt(2.0)}));
  CHECK(m.values(1, 5) == doctest::Approx(0.5));
  m = oracle_wiener_mask(flat_spec(3, bins, std::sqrt(3.0)), flat_spec(3, bins, 1.0));
  CHECK(m.values(2, 100) == doctest::Approx(0.75));
  m = oracle_wiener_mask(flat_spec(3, bins, 0.2), flat_spec(3, bins, 0.0));
  CHECK(std::all_of(m.values.storage().begin(), m.values.storage().end(), [](double v) { return v == 1.0; }));
  m = oracle_wiener_mask(flat_spec(3, bins, 0.0), flat_spec(3, bins, 0.0));
  CHECK(m.values(0, 0) == 0.0);
  CHECK(kind_of([&] { oracle_wiener_mask(flat_spec(3, bins, 1.0), flat_spec(4, bins, 1.0)); }) ==
        ErrorKind::shape_mismatch);
}

TEST_CASE("apply mask") {
  const auto noisy = mixture(speech(1), 2, 0.0).noisy;
  const auto spec = stft(noisy, FrameConfig{});
  Mask ones{Matrix<double>(spec.num_frames(), spec.num_bins(), 1.0), spec.config};
  const auto same = apply_mask(spec, ones);
  REQUIRE(same.size() == noisy.size());
  const std::size_t edge = spec.config.window_len;
  double err = 0.0, ref = 0.0;
  for (std::size_t i = edge; i + edge < noisy.size(); ++i) {
    err += (same.samples[i] - noisy.samples[i]) * (same.samples[i] - noisy.samples[i]);
    ref += noisy.samples[i] * noisy.samples[i];
  }
  CHECK(std::sqrt(err / ref) < 1e-6);

  Mask zeros{Matrix<double>(spec.num_frames(), spec.num_bins(), 0.0), spec.config};
  CHECK(peak(apply_mask(spec, zeros)) == 0.0);
  Mask wrong{Matrix<double>(spec.num_frames() - 1, spec.num_bins(), 1.0), spec.config};
  CHECK(kind_of([&] { apply_mask(spec, wrong); }) == ErrorKind::shape_mismatch);
}

TEST_CASE("oracle wiener mask improves intelligibility at 0 dB") {
  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto clean = speech(10 + s, s % 2 == 1);
    const auto p = mixture(clean, 20 + s, 0.0);
    const auto out = owm_enhance(p.speech, p.noise, p.noisy);
    CHECK(out.size() == clean.size());
    CHECK(stoi(clean, out) > stoi(clean, p.noisy));
    CHECK(peak(out) <= 0.99);
  }
}

TEST_CASE("ratio mask targets") {
  const FrameConfig cfg;
  const auto fb = build_mel_filterbank(80, cfg, 0.0, 8000.0);
  const auto clean = speech(3);
  Waveform silent = clean;
  std::fill(silent.samples.begin(), silent.samples.end(), 0.0);
  const auto noise = mixture(clean, 4, 0.0).noise;

  const auto only_speech = irm_training_targets(stft(clean, cfg), stft(silent, cfg), fb);
  CHECK(only_speech.cols() == 80);
  CHECK(*std::min_element(only_speech.storage().begin(), only_speech.storage().end()) >= 0.999);
  const auto only_noise = irm_training_targets(stft(silent, cfg), stft(noise, cfg), fb);
  CHECK(*std::max_element(only_noise.storage().begin(), only_noise.storage().end()) <= 0.001);
  const auto both = irm_training_targets(stft(clean, cfg), stft(noise, cfg), fb);
  for (double v : both.storage()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("mel mask expansion") {
  const FrameConfig cfg;
  const auto fb = build_mel_filterbank(80, cfg, 0.0, 8000.0);
  Matrix<double> constant(6, 80, 0.37);
  auto back = project_mask_to_mel(expand_mel_mask(constant, fb, cfg), fb);
  for (double v : back.storage()) CHECK(v == doctest::Approx(0.37).epsilon(1e-12));

  // Adjacent mel filters overlap by half their width, so a band-alternating
  // pattern cannot survive the round trip exactly. The worst band is off by
  // about 0.37.
  Matrix<double> checker(6, 80);
  for (std::size_t t = 0; t < 6; ++t)
    for (std::size_t b = 0; b < 80; ++b) checker(t, b) = (t + b) % 2 ? 1.0 : 0.0;
  const auto expanded = expand_mel_mask(checker, fb, cfg);
  CHECK(expanded.values.cols() == cfg.num_bins());
  for (double v : expanded.values.storage()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  back = project_mask_to_mel(expanded, fb);
  double worst = 0.0;
  for (std::size_t i = 0; i < back.size(); ++i) worst = std::max(worst, std::abs(back.data()[i] - checker.data()[i]));
  CHECK(worst < 0.40);
  // Smooth patterns (every fourth band) come back far closer.
  Matrix<double> blocks(6, 80);
  for (std::size_t b = 0; b < 80; ++b) blocks(0, b) = (b / 4) % 2 ? 1.0 : 0.0;
  back = project_mask_to_mel(expand_mel_mask(blocks, fb, cfg), fb);
  double mean_err = 0.0;
  for (std::size_t b = 0; b < 80; ++b) mean_err += std::abs(back(0, b) - blocks(0, b)) / 80.0;
  CHECK(mean_err < 0.15);
}

TEST_CASE("ved") {
  const auto x = speech(5);
  const auto y = ved(x, 9);
  CHECK(y.size() == x.size());
  CHECK(peak(y) <= 0.99);
  const auto again = ved(x, 9);
  CHECK(again.samples == y.samples);

  const auto f0_ref = f0_of(analyze(x)), f0_hyp = f0_of(analyze(y));
  const auto m = f0_metrics(f0_ref, f0_hyp);
  CHECK(m.rmse_hz < 2.0);
  CHECK(m.vuv_pct < 5.0);

  Rng rng(6);
  const auto noise = random_wave(rng, x.size(), std::sqrt(energy(x) / static_cast<double>(x.size())));
  CHECK(stoi(x, y) > stoi(x, noise));
}

TEST_CASE("parametric resynthesis with ground-truth targets equals ved") {
  for (std::uint64_t s = 0; s < 2; ++s) {
    const auto x = speech(30 + s, s == 1);
    const AcousticTrack truth = analyze(x);
    const auto targets = assemble_targets(truth);
    const AcousticTrack back = disassemble_targets(
        targets, Normalizer::identity(kTargetDim, NormalizerKind::target), GenerationMode::statics);
    CHECK(resynthesize(back, x.size(), 77).samples == ved(x, 77).samples);
  }
}

TEST_CASE("resynthesized silence stays silent") {
  // Leading and trailing silence of the synthetic utterances, plus extra
  // padding, under the ground-truth pipeline.
  auto x = speech(40);
  x.samples.insert(x.samples.begin(), 4000, 0.0);
  x.samples.insert(x.samples.end(), 4000, 0.0);
  const AcousticTrack track = analyze(x);
  const auto y = resynthesize(track, x.size(), 3);
  const std::size_t hop = FrameConfig{}.hop;
  std::size_t quiet = 0;
  for (std::size_t t = 0; t < track.num_frames(); ++t) {
    if (track.vuv[t] || track.mcep(t, 0) > -20.0) continue;
    // The samples frame t is centred on.
    const std::size_t lo = t * hop >= hop / 2 ? t * hop - hop / 2 : 0;
    const std::size_t hi = std::min(x.size(), t * hop + hop / 2);
    if (lo >= hi) continue;
    double e = 0.0;
    for (std::size_t i = lo; i < hi; ++i) e += y.samples[i] * y.samples[i];
    CHECK(std::sqrt(e / static_cast<double>(hi - lo)) < 1e-3);
    ++quiet;
  }
  CHECK(quiet > 80);
}

TEST_CASE("pr_enhance") {
  const PrModel pr = random_pr(3);
  const auto x = mixture(speech(50), 51, 5.0).noisy;
  const auto a = pr_enhance(pr, x, GenerationMode::mlpg, 5);
  CHECK(a.size() == x.size());
  CHECK(peak(a) <= 0.99);
  CHECK(pr_enhance(pr, x, GenerationMode::mlpg, 5).samples == a.samples);
  const auto track = predict_track(pr, x, GenerationMode::statics);
  CHECK(track.num_frames() == num_frames(x.size(), FrameConfig{}));
  for (double v : track.bap.storage()) CHECK(v <= 0.0);

  PrModel wrong = pr;
  wrong.features.context_radius = 2;
  CHECK(kind_of([&] { pr_enhance(wrong, x, GenerationMode::statics, 1); }) == ErrorKind::config_mismatch);
  wrong = pr;
  wrong.target_norm = Normalizer::identity(10, NormalizerKind::target);
  CHECK(kind_of([&] { predict_track(wrong, x, GenerationMode::statics); }) == ErrorKind::config_mismatch);
}

TEST_CASE("dnn-irm") {
  FeatureOptions f;
  const std::size_t in = f.n_mels * (2 * f.context_radius + 1);
  ModelConfig mc = ModelConfig::defaults(ModelKind::feedforward, in, f.n_mels);
  mc.output = OutputActivation::sigmoid;
  mc.hidden_layers = 1;
  mc.hidden_width = 8;
  const MaskModel mm{Model<float>(mc), Normalizer::identity(in, NormalizerKind::input), f};
  const auto x = mixture(speech(60), 61, 0.0).noisy;
  const auto mask = predict_mel_mask(mm, x);
  CHECK(mask.cols() == f.n_mels);
  for (double v : mask.storage()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  const auto y = dnn_irm_enhance(mm, x);
  CHECK(y.size() == x.size());
  CHECK(peak(y) <= 0.99);

  ModelConfig bad = mc;
  bad.output_dim = 40;
  const MaskModel wrong{Model<float>(bad), mm.input_norm, f};
  CHECK(kind_of([&] { dnn_irm_enhance(wrong, x); }) == ErrorKind::config_mismatch);
}

TEST_CASE("peak limiting and system names") {
  Waveform w{{0.5, -2.0, 1.0}, kSampleRate};
  CHECK(limit_peak(w) == doctest::Approx(0.495));
  CHECK(w.samples[1] == doctest::Approx(-0.99));
  Waveform quiet{{0.1, -0.2}, kSampleRate};
  CHECK(limit_peak(quiet) == 1.0);
  for (auto k : {SystemKind::pr, SystemKind::pr_clean, SystemKind::ved, SystemKind::owm,
                 SystemKind::dnn_irm, SystemKind::noisy_passthrough})
    CHECK(parse_system(to_string(k)) == k);
  CHECK(kind_of([] { parse_system("wavenet"); }) == ErrorKind::invalid_argument);
}
