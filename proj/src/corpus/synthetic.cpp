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

#include "presynth/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace presynth::synthetic {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Harmonic amplitudes are refreshed every this many samples.
constexpr std::size_t kControlRate = 16;

struct VowelShape {
  std::array<double, 3> formants;
};

constexpr std::array<VowelShape, 6> kVowels{{
    {{730.0, 1090.0, 2440.0}},
    {{270.0, 2290.0, 3010.0}},
    {{300.0, 870.0, 2240.0}},
    {{530.0, 1840.0, 2480.0}},
    {{570.0, 840.0, 2410.0}},
    {{660.0, 1720.0, 2410.0}},
}};

double resonance_gain(double f, const Formant& r) {
  const double x = f / r.hz;
  const double damp = f * r.bandwidth_hz / (r.hz * r.hz);
  return 1.0 / std::sqrt((1.0 - x * x) * (1.0 - x * x) + damp * damp);
}

double harmonic_amplitude(double f, const std::vector<Formant>& formants) {
  double a = 1.0;
  for (const auto& r : formants) a *= resonance_gain(f, r);
  return a;
}

// Control track for one utterance, one value per sample.
struct Control {
  std::vector<double> f0;        // 0 when the source is off
  std::vector<double> voice_amp;
  std::vector<double> noise_amp;
  std::vector<std::array<double, 3>> formants;
};

void render_voiced(const Control& c, double scale, std::vector<double>& out) {
  const double nyquist = kSampleRate / 2.0;
  double phase = 0.0;
  std::vector<double> amps;
  std::vector<Formant> res(3);
  double norm = 1.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double f0 = c.f0[i];
    if (f0 <= 0.0 || c.voice_amp[i] <= 0.0) {
      continue;
    }
    if (i % kControlRate == 0 || amps.empty()) {
      for (std::size_t r = 0; r < 3; ++r)
        res[r] = {c.formants[i][r], 60.0 + 0.06 * c.formants[i][r]};
      const auto n = static_cast<std::size_t>((nyquist - 200.0) / f0);
      amps.assign(n, 0.0);
      double energy = 0.0;
      for (std::size_t k = 1; k <= n; ++k) {
        const double f = static_cast<double>(k) * f0;
        amps[k - 1] = harmonic_amplitude(f, res) / static_cast<double>(k);
        energy += 0.5 * amps[k - 1] * amps[k - 1];
      }
      norm = energy > 0.0 ? 1.0 / std::sqrt(energy) : 0.0;
    }
    phase += f0 / kSampleRate;
    phase -= std::floor(phase);
    double v = 0.0;
    for (std::size_t k = 0; k < amps.size(); ++k)
      v += amps[k] * std::sin(kTwoPi * static_cast<double>(k + 1) * phase);
    out[i] += scale * c.voice_amp[i] * norm * v;
  }
}

}  // namespace

Waveform formant_vowel(double f0, const std::vector<Formant>& formants, double seconds,
                       double amplitude) {
  Waveform w;
  const auto n = static_cast<std::size_t>(seconds * kSampleRate);
  w.samples.assign(n, 0.0);
  const auto harmonics = static_cast<std::size_t>((kSampleRate / 2.0 - 1.0) / f0);
  std::vector<double> amps(harmonics);
  double energy = 0.0;
  for (std::size_t k = 1; k <= harmonics; ++k) {
    amps[k - 1] = harmonic_amplitude(static_cast<double>(k) * f0, formants) / static_cast<double>(k);
    energy += 0.5 * amps[k - 1] * amps[k - 1];
  }
  const double norm = amplitude / std::sqrt(energy);
  for (std::size_t i = 0; i < n; ++i) {
    const double ph = kTwoPi * f0 * static_cast<double>(i) / kSampleRate;
    double v = 0.0;
    for (std::size_t k = 0; k < harmonics; ++k) v += amps[k] * std::sin(static_cast<double>(k + 1) * ph);
    w.samples[i] = norm * v;
  }
  return w;
}

SpeakerProfile low_voice() { return {"low", 90.0, 140.0, 1.0}; }
SpeakerProfile high_voice() { return {"high", 180.0, 260.0, 1.15}; }

Waveform vowel_sequence(Rng& rng, const SpeakerProfile& speaker, const UtteranceOptions& opts) {
  const auto secs = [](double s) { return static_cast<std::size_t>(s * kSampleRate); };

  struct Segment {
    std::size_t len;
    bool voiced;
    std::array<double, 3> formants;
  };
  std::vector<Segment> segments;
  const std::size_t vowels =
      opts.min_vowels + static_cast<std::size_t>(rng.below(opts.max_vowels - opts.min_vowels + 1));
  for (std::size_t v = 0; v < vowels; ++v) {
    if (v > 0 && rng.uniform() < opts.fricative_prob)
      segments.push_back({secs(rng.uniform(0.06, 0.12)), false, {}});
    auto shape = kVowels[rng.below(kVowels.size())].formants;
    for (auto& f : shape) f *= speaker.formant_scale;
    segments.push_back({secs(rng.uniform(0.15, 0.3)), true, shape});
  }

  const std::size_t lead = secs(rng.uniform(0.08, 0.15));
  const std::size_t tail = secs(rng.uniform(0.08, 0.15));
  std::size_t body = 0;
  for (const auto& s : segments) body += s.len;
  const std::size_t total = lead + body + tail;

  Control c;
  c.f0.assign(total, 0.0);
  c.voice_amp.assign(total, 0.0);
  c.noise_amp.assign(total, 0.0);
  c.formants.assign(total, kVowels[0].formants);

  // Declining F0 with a slow random wobble.
  const double start_f0 = rng.uniform(speaker.f0_lo + 0.4 * (speaker.f0_hi - speaker.f0_lo), speaker.f0_hi);
  const double end_f0 = rng.uniform(speaker.f0_lo, speaker.f0_lo + 0.4 * (speaker.f0_hi - speaker.f0_lo));
  const double wobble_hz = rng.uniform(1.5, 3.5);
  const double wobble_phase = rng.uniform(0.0, kTwoPi);
  const double wobble_depth = 0.04;

  const std::size_t fade = secs(0.01);
  const std::size_t glide = secs(0.03);
  std::size_t pos = lead;
  std::array<double, 3> prev = segments.front().voiced ? segments.front().formants : kVowels[0].formants;
  for (const auto& s : segments) {
    for (std::size_t i = 0; i < s.len; ++i) {
      const std::size_t n = pos + i;
      const double u = static_cast<double>(n - lead) / static_cast<double>(std::max<std::size_t>(body, 1));
      const double ramp = std::min({1.0, static_cast<double>(i) / fade, static_cast<double>(s.len - i) / fade});
      if (s.voiced) {
        const double base = start_f0 + (end_f0 - start_f0) * u;
        c.f0[n] = base * (1.0 + wobble_depth * std::sin(kTwoPi * wobble_hz * static_cast<double>(n) / kSampleRate + wobble_phase));
        c.voice_amp[n] = ramp;
        const double g = std::min(1.0, static_cast<double>(i) / static_cast<double>(glide));
        for (std::size_t r = 0; r < 3; ++r) c.formants[n][r] = (1.0 - g) * prev[r] + g * s.formants[r];
      } else {
        c.noise_amp[n] = ramp;
      }
    }
    if (s.voiced) prev = s.formants;
    pos += s.len;
  }

  Waveform w;
  w.samples.assign(total, 0.0);
  render_voiced(c, opts.amplitude, w.samples);

  // Fricatives: differentiated (high-tilted) white noise.
  double last = 0.0;
  for (std::size_t n = 0; n < total; ++n) {
    const double x = rng.normal();
    if (c.noise_amp[n] > 0.0) w.samples[n] += 0.25 * opts.amplitude * c.noise_amp[n] * (x - last);
    last = x;
  }
  return w;
}

Waveform noise(Rng& rng, double seconds, NoiseColor color, double rms) {
  Waveform w;
  const auto n = static_cast<std::size_t>(seconds * kSampleRate);
  w.samples.resize(n);
  // Paul Kellet's economy pink filter.
  double b0 = 0.0, b1 = 0.0, b2 = 0.0, lp = 0.0;
  const double mod_hz = rng.uniform(0.5, 2.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.normal();
    double v = x;
    switch (color) {
      case NoiseColor::white:
        break;
      case NoiseColor::pink:
      case NoiseColor::modulated:
        b0 = 0.99765 * b0 + x * 0.0990460;
        b1 = 0.96300 * b1 + x * 0.2965164;
        b2 = 0.57000 * b2 + x * 1.0526913;
        v = b0 + b1 + b2 + x * 0.1848;
        if (color == NoiseColor::modulated)
          v *= 0.6 + 0.4 * std::sin(kTwoPi * mod_hz * static_cast<double>(i) / kSampleRate);
        break;
      case NoiseColor::lowpass:
        lp = 0.95 * lp + 0.05 * x;
        v = lp;
        break;
    }
    w.samples[i] = v;
  }
  double energy = 0.0;
  for (double v : w.samples) energy += v * v;
  const double scale = energy > 0.0 ? rms / std::sqrt(energy / static_cast<double>(n)) : 0.0;
  for (double& v : w.samples) v *= scale;
  return w;
}

}  // namespace presynth::synthetic
