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

// Seeded generators for the desk-scale corpus: formant-synthesized vowel
// sequences standing in for read speech, and coloured noise recordings.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "presynth/dsp.hpp"
#include "presynth/random.hpp"

namespace presynth::synthetic {

struct Formant {
  double hz;
  double bandwidth_hz;
};

/// Steady vowel by additive synthesis: harmonics of f0 with a -6 dB/octave
/// source weighted by a cascade of second-order resonances.
Waveform formant_vowel(double f0, const std::vector<Formant>& formants, double seconds,
                       double amplitude = 0.3);

struct SpeakerProfile {
  std::string name = "spk";
  double f0_lo = 90.0;
  double f0_hi = 150.0;
  double formant_scale = 1.0;
};

SpeakerProfile low_voice();
SpeakerProfile high_voice();

struct UtteranceOptions {
  std::size_t min_vowels = 3;
  std::size_t max_vowels = 5;
  double fricative_prob = 0.35;
  double amplitude = 0.3;  // RMS of the voiced segments; peaks reach about 3x
};

/// Silence, a run of vowels (some separated by unvoiced fricative noise) with
/// a smooth F0 contour, then silence. Roughly 0.8-1.6 s.
Waveform vowel_sequence(Rng& rng, const SpeakerProfile& speaker,
                        const UtteranceOptions& opts = {});

enum class NoiseColor { white, pink, lowpass, modulated };

Waveform noise(Rng& rng, double seconds, NoiseColor color, double rms = 0.05);

}  // namespace presynth::synthetic
