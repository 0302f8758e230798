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

#include "presynth/error.hpp"
#include "presynth/kernels.hpp"
#include "presynth/vocoder.hpp"

namespace presynth {
namespace {

// Fraction of the global correlation maximum a shorter-lag peak must reach to
// be preferred. Keeps the estimator off sub-harmonics.
constexpr double kSubharmonicRatio = 0.9;

struct LagPick {
  double lag = 0.0;
  double score = 0.0;
};

LagPick pick_lag(const std::vector<double>& r, std::size_t min_lag, std::size_t max_lag) {
  // r is indexed by lag and populated on [min_lag - 1, max_lag + 1].
  double global = -1.0;
  for (std::size_t lag = min_lag; lag <= max_lag; ++lag) global = std::max(global, r[lag]);
  if (global <= 0.0) return {};

  for (std::size_t lag = min_lag; lag <= max_lag; ++lag) {
    const bool peak = r[lag] > r[lag - 1] && r[lag] >= r[lag + 1];
    if (!peak || r[lag] < kSubharmonicRatio * global) continue;
    const double a = r[lag - 1], b = r[lag], c = r[lag + 1];
    const double denom = a - 2.0 * b + c;
    double offset = denom < 0.0 ? 0.5 * (a - c) / denom : 0.0;
    offset = std::clamp(offset, -0.5, 0.5);
    return {static_cast<double>(lag) + offset, b};
  }
  return {};
}

}  // namespace

F0Track estimate_f0(const Waveform& wave, const VocoderConfig& cfg) {
  require(!wave.empty(), ErrorKind::invalid_argument, "estimate_f0: empty signal");
  require(cfg.f0_floor_hz > 0.0 && cfg.f0_floor_hz < cfg.f0_ceil_hz, ErrorKind::invalid_argument,
          "estimate_f0: need 0 < f_lo < f_hi");
  const double sr = wave.sample_rate;
  const auto min_lag = static_cast<std::size_t>(std::floor(sr / cfg.f0_ceil_hz));
  const auto max_lag = static_cast<std::size_t>(std::ceil(sr / cfg.f0_floor_hz));
  require(min_lag >= 2, ErrorKind::invalid_argument, "estimate_f0: f_hi too close to Nyquist");

  const std::size_t frames = num_frames(wave.size(), cfg.frame);
  const std::size_t len = cfg.f0_window;
  // Both correlation windows are placed symmetrically about the frame centre
  // for every lag, so the estimate is not skewed in time. The span also
  // covers twice the longest lag for the periodicity check below.
  const std::size_t reach = len / 2 + max_lag + 4;
  const std::size_t span_len = 2 * reach + 1;

  F0Track track;
  track.hop_ms = 1000.0 * cfg.frame.hop_seconds();
  track.f0.assign(frames, 0.0);
  track.vuv.assign(frames, 0);

  std::vector<double> seg(span_len);
  std::vector<double> r(max_lag + 2, 0.0);
  std::vector<double> energy(span_len + 1);
  auto nccf = [&](std::size_t lag) {
    const std::size_t a = reach - len / 2 - lag / 2;
    const std::size_t b = a + lag;
    const double ea = energy[a + len] - energy[a];
    const double eb = energy[b + len] - energy[b];
    const double num = kernels::dot(std::span<const double>(seg.data() + a, len),
                                    std::span<const double>(seg.data() + b, len));
    return ea > 0.0 && eb > 0.0 ? num / std::sqrt(ea * eb) : 0.0;
  };
  for (std::size_t t = 0; t < frames; ++t) {
    const auto center = static_cast<std::ptrdiff_t>(t * cfg.frame.hop);
    extract_segment(wave.samples, center - static_cast<std::ptrdiff_t>(reach), seg);

    // Silence gate over the two hops around the frame centre, so voicing
    // does not bleed half a correlation window past onsets and offsets.
    const std::size_t gate_half = std::min(cfg.frame.hop, len / 2);
    const std::size_t gate0 = reach - gate_half;
    double mean = 0.0;
    for (double v : seg) mean += v;
    mean /= static_cast<double>(seg.size());
    double power = 0.0;
    for (std::size_t i = gate0; i < gate0 + 2 * gate_half; ++i) power += seg[i] * seg[i];
    for (auto& v : seg) v -= mean;
    const double rms = std::sqrt(power / static_cast<double>(2 * gate_half));
    if (rms <= cfg.silence_rms) continue;

    energy[0] = 0.0;
    for (std::size_t i = 0; i < span_len; ++i) energy[i + 1] = energy[i] + seg[i] * seg[i];
    for (std::size_t lag = min_lag - 1; lag <= max_lag + 1; ++lag) r[lag] = nccf(lag);
    const LagPick pick = pick_lag(r, min_lag, max_lag);
    if (pick.lag <= 0.0 || pick.score <= cfg.voicing_threshold) continue;
    // A periodic signal also correlates two periods apart; resonant noise
    // (a formant ringing in a fricative) usually does not.
    const auto two = static_cast<std::size_t>(std::lround(2.0 * pick.lag));
    double second = 0.0;
    for (std::size_t lag = two - 2; lag <= two + 2; ++lag) second = std::max(second, nccf(lag));
    if (second <= cfg.voicing_threshold) continue;
    track.f0[t] = std::clamp(sr / pick.lag, cfg.f0_floor_hz, cfg.f0_ceil_hz);
    track.vuv[t] = 1;
  }

  // Median filter over the voiced contour only.
  if (cfg.median_len > 1) {
    const auto half = static_cast<std::ptrdiff_t>(cfg.median_len / 2);
    std::vector<double> filtered = track.f0;
    std::vector<double> window;
    for (std::size_t t = 0; t < frames; ++t) {
      if (!track.vuv[t]) continue;
      window.clear();
      for (std::ptrdiff_t d = -half; d <= half; ++d) {
        const std::ptrdiff_t u = static_cast<std::ptrdiff_t>(t) + d;
        if (u >= 0 && u < static_cast<std::ptrdiff_t>(frames) && track.vuv[static_cast<std::size_t>(u)])
          window.push_back(track.f0[static_cast<std::size_t>(u)]);
      }
      auto mid = window.begin() + static_cast<std::ptrdiff_t>(window.size() / 2);
      std::nth_element(window.begin(), mid, window.end());
      double med = *mid;
      if (window.size() % 2 == 0) {
        const double lower = *std::max_element(window.begin(), mid);
        med = 0.5 * (med + lower);
      }
      filtered[t] = med;
    }
    track.f0 = std::move(filtered);
  }
  return track;
}

std::vector<double> interpolate_lf0(const F0Track& f0) {
  const std::size_t n = f0.size();
  // Fallback level for tracks with no voiced frame: geometric centre of the
  // default search range.
  const double neutral = 0.5 * (std::log(50.0) + std::log(550.0));
  std::vector<double> lf0(n, neutral);
  std::vector<std::size_t> voiced;
  for (std::size_t t = 0; t < n; ++t)
    if (f0.vuv[t] && f0.f0[t] > 0.0) voiced.push_back(t);
  if (voiced.empty()) return lf0;

  for (std::size_t t : voiced) lf0[t] = std::log(f0.f0[t]);
  for (std::size_t t = 0; t < voiced.front(); ++t) lf0[t] = lf0[voiced.front()];
  for (std::size_t t = voiced.back() + 1; t < n; ++t) lf0[t] = lf0[voiced.back()];
  for (std::size_t i = 0; i + 1 < voiced.size(); ++i) {
    const std::size_t a = voiced[i], b = voiced[i + 1];
    for (std::size_t t = a + 1; t < b; ++t) {
      const double w = static_cast<double>(t - a) / static_cast<double>(b - a);
      lf0[t] = (1.0 - w) * lf0[a] + w * lf0[b];
    }
  }
  return lf0;
}

F0Track f0_of(const AcousticTrack& track) {
  F0Track out;
  out.hop_ms = track.frame_hop_ms;
  out.f0.assign(track.num_frames(), 0.0);
  out.vuv = track.vuv;
  for (std::size_t t = 0; t < track.num_frames(); ++t)
    if (track.vuv[t]) out.f0[t] = std::exp(track.lf0[t]);
  return out;
}

}  // namespace presynth
