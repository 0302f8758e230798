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
#include <array>
#include <cmath>
#include <numbers>

#include "presynth/error.hpp"
#include "presynth/random.hpp"
#include "presynth/vocoder.hpp"

namespace presynth {
namespace {

// Per-bin aperiodic power fraction for one frame. Band values (dB) are
// placed at band centres and interpolated linearly in between, held flat
// outside the first and last centre, which avoids the ringing a per-band step
// would put into the pulse responses.
std::vector<double> bin_aperiodicity(const AcousticTrack& track, std::size_t t,
                                     const VocoderConfig& cfg) {
  const std::size_t bins = cfg.frame.num_bins();
  std::vector<double> a(bins, 1.0);
  if (!track.vuv[t]) return a;
  const double bin_hz = cfg.frame.bin_hz();
  std::array<double, kBapBands> centre{};
  for (std::size_t b = 0; b < kBapBands; ++b)
    centre[b] = 0.5 * (cfg.band_edges_hz[b] + cfg.band_edges_hz[b + 1]);
  for (std::size_t k = 0; k < bins; ++k) {
    const double f = static_cast<double>(k) * bin_hz;
    double db;
    if (f <= centre.front()) {
      db = track.bap(t, 0);
    } else if (f >= centre.back()) {
      db = track.bap(t, kBapBands - 1);
    } else {
      std::size_t b = 0;
      while (f > centre[b + 1]) ++b;
      const double w = (f - centre[b]) / (centre[b + 1] - centre[b]);
      db = (1.0 - w) * track.bap(t, b) + w * track.bap(t, b + 1);
    }
    a[k] = std::clamp(std::pow(10.0, db / 10.0), 0.0, 1.0);
  }
  return a;
}

// Minimum-phase amplitude spectrum whose magnitude is sqrt(power).
void minimum_phase(std::span<const double> power, RealFft& fft,
                   std::span<std::complex<double>> out) {
  const std::size_t n = fft.size();
  std::vector<std::complex<double>> spec(power.size());
  for (std::size_t k = 0; k < power.size(); ++k) spec[k] = 0.5 * std::log(power[k]);
  std::vector<double> cep(n);
  fft.inverse(spec, cep);
  for (std::size_t i = 1; i < n / 2; ++i) cep[i] *= 2.0;
  for (std::size_t i = n / 2 + 1; i < n; ++i) cep[i] = 0.0;
  fft.forward(cep, out);
  for (auto& c : out) c = std::exp(c);
}

}  // namespace

void AcousticTrack::validate() const {
  const std::size_t t = lf0.size();
  require(mcep.rows() == t && bap.rows() == t && vuv.size() == t, ErrorKind::shape_mismatch,
          "acoustic track streams disagree on frame count");
  require(mcep.cols() == kMcepOrder && bap.cols() == kBapBands, ErrorKind::shape_mismatch,
          "acoustic track must have 60 mcep and 5 bap columns");
  auto finite = [](double v) { return std::isfinite(v); };
  require(std::all_of(mcep.storage().begin(), mcep.storage().end(), finite) &&
              std::all_of(bap.storage().begin(), bap.storage().end(), finite) &&
              std::all_of(lf0.begin(), lf0.end(), finite),
          ErrorKind::non_finite, "acoustic track contains non-finite values");
}

AcousticTrack analyze(const Waveform& wave, const VocoderConfig& cfg) {
  require(wave.sample_rate == cfg.frame.sample_rate, ErrorKind::sample_rate,
          "analyze: expected " + std::to_string(cfg.frame.sample_rate) + " Hz input");
  const F0Track f0 = estimate_f0(wave, cfg);
  const Matrix<double> env = estimate_envelope(wave, f0, cfg);

  AcousticTrack track;
  track.frame_hop_ms = f0.hop_ms;
  track.sample_rate = wave.sample_rate;
  track.mcep = envelope_to_mcep(env, cfg.mcep_order, cfg.alpha);
  track.bap = estimate_band_aperiodicity(wave, f0, cfg);
  track.lf0 = interpolate_lf0(f0);
  track.vuv = f0.vuv;
  return track;
}

Waveform synthesize(const AcousticTrack& track, std::uint64_t seed, const VocoderConfig& cfg) {
  track.validate();
  const FrameConfig& frame = cfg.frame;
  const std::size_t frames = track.num_frames();
  const std::size_t hop = frame.hop;
  const std::size_t len = frames * hop;
  const double sr = frame.sample_rate;

  Waveform out;
  out.sample_rate = frame.sample_rate;
  out.samples.assign(len, 0.0);
  if (frames == 0) return out;

  const Matrix<double> env = mcep_to_envelope(track.mcep, frame, cfg.alpha);
  const std::size_t bins = frame.num_bins();
  const std::size_t n = frame.fft_size;
  RealFft fft(n);

  std::vector<std::vector<double>> aper(frames);
  for (std::size_t t = 0; t < frames; ++t) aper[t] = bin_aperiodicity(track, t, cfg);

  // Periodic part: one minimum-phase response per glottal pulse.
  Matrix<std::complex<double>> min_phase(frames, bins);
  std::vector<std::uint8_t> have_min_phase(frames, 0);
  std::vector<std::complex<double>> pulse_spec(bins);
  std::vector<double> periodic(bins);
  std::vector<double> response(n);
  double phase = 1.0;
  bool was_voiced = false;
  for (std::size_t i = 0; i < len; ++i) {
    const double pos = static_cast<double>(i) / static_cast<double>(hop);
    const std::size_t t = std::min(frames - 1, static_cast<std::size_t>(std::lround(pos)));
    if (!track.vuv[t]) {
      was_voiced = false;
      continue;
    }
    const std::size_t t0 = std::min(frames - 1, static_cast<std::size_t>(pos));
    const std::size_t t1 = std::min(frames - 1, t0 + 1);
    const double w = std::clamp(pos - static_cast<double>(t0), 0.0, 1.0);
    const double f0 = std::exp((1.0 - w) * track.lf0[t0] + w * track.lf0[t1]);
    const double inc = f0 / sr;
    if (!was_voiced) phase = 1.0 - inc;  // pulse at the first voiced sample
    was_voiced = true;
    const double before = phase;
    phase += inc;
    if (phase < 1.0) continue;
    phase -= 1.0;

    // Exact crossing time between samples i-1 and i.
    const double tp = static_cast<double>(i) - 1.0 + (1.0 - before) / inc;
    const double start = std::floor(tp);
    const double frac = tp - start;
    if (!have_min_phase[t]) {
      for (std::size_t k = 0; k < bins; ++k)
        periodic[k] = std::max(env(t, k) * (1.0 - aper[t][k]), cfg.envelope_floor);
      minimum_phase(periodic, fft, min_phase.row(t));
      have_min_phase[t] = 1;
    }
    const double gain = std::sqrt(sr / f0);
    auto h = min_phase.row(t);
    for (std::size_t k = 0; k < bins; ++k) {
      const double delay = -2.0 * std::numbers::pi * static_cast<double>(k) * frac / static_cast<double>(n);
      pulse_spec[k] = h[k] * gain * std::polar(1.0, delay);
    }
    fft.inverse(pulse_spec, response);
    const auto s = static_cast<std::ptrdiff_t>(start);
    for (std::size_t j = 0; j < n; ++j) {
      const std::ptrdiff_t idx = s + static_cast<std::ptrdiff_t>(j);
      if (idx >= 0 && idx < static_cast<std::ptrdiff_t>(len)) out.samples[static_cast<std::size_t>(idx)] += response[j];
    }
  }

  // Aperiodic part: white noise cut into Hann segments two hops long (which
  // sum to one), each shaped by its frame's zero-phase filter sqrt(E * a) and
  // overlap-added. Short segments keep the noise from smearing across
  // voicing boundaries.
  Rng rng(seed);
  std::vector<double> noise(len);
  for (auto& v : noise) v = rng.normal();
  const std::size_t seg_len = 2 * hop;
  std::vector<double> seg_window(seg_len);
  for (std::size_t i = 0; i < seg_len; ++i)
    seg_window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                         static_cast<double>(seg_len));
  std::vector<double> buf(n);
  std::vector<std::complex<double>> seg_spec(bins);
  for (std::size_t t = 0; t < frames; ++t) {
    const auto seg_start = static_cast<std::ptrdiff_t>(t * hop) - static_cast<std::ptrdiff_t>(hop);
    std::fill(buf.begin(), buf.end(), 0.0);
    bool any = false;
    for (std::size_t i = 0; i < seg_len; ++i) {
      const std::ptrdiff_t idx = seg_start + static_cast<std::ptrdiff_t>(i);
      if (idx < 0 || idx >= static_cast<std::ptrdiff_t>(len)) continue;
      buf[i] = seg_window[i] * noise[static_cast<std::size_t>(idx)];
      any = true;
    }
    if (!any) continue;
    fft.forward(buf, seg_spec);
    for (std::size_t k = 0; k < bins; ++k) seg_spec[k] *= std::sqrt(env(t, k) * aper[t][k]);
    fft.inverse(seg_spec, buf);
    // Circular output: the upper half holds the filter's anticausal tail.
    for (std::size_t j = 0; j < n; ++j) {
      const std::ptrdiff_t shift = j < n / 2 ? static_cast<std::ptrdiff_t>(j)
                                             : static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(n);
      const std::ptrdiff_t idx = seg_start + shift;
      if (idx >= 0 && idx < static_cast<std::ptrdiff_t>(len)) out.samples[static_cast<std::size_t>(idx)] += buf[j];
    }
  }

  double peak = 0.0;
  for (double v : out.samples) peak = std::max(peak, std::abs(v));
  if (peak > cfg.peak_limit) {
    const double scale = cfg.peak_limit / peak;
    for (double& v : out.samples) v *= scale;
  }
  return out;
}

}  // namespace presynth
