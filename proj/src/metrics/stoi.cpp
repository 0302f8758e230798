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
#include <numbers>
#include <numeric>

#include "presynth/error.hpp"
#include "presynth/metrics.hpp"

namespace presynth {
namespace {

constexpr int kStoiRate = 10000;
constexpr std::size_t kFrame = 256;
constexpr std::size_t kHop = kFrame / 2;
constexpr std::size_t kFft = 512;
constexpr std::size_t kBands = 15;
constexpr double kMinFreq = 150.0;
constexpr std::size_t kSegment = 30;  // 384 ms of frames
constexpr double kBetaDb = -15.0;
constexpr double kDynRangeDb = 40.0;
constexpr double kEps = 2.220446049250313e-16;

// Symmetric Hann of length n without its zero end points.
std::vector<double> inner_hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i + 1) / static_cast<double>(n + 1));
  return w;
}

// One-third octave band bin ranges [lo, hi) on the kFft grid.
std::vector<std::pair<std::size_t, std::size_t>> third_octave_bands() {
  const std::size_t bins = kFft / 2 + 1;
  auto nearest = [&](double hz) {
    std::size_t best = 0;
    double err = 1e300;
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * kStoiRate / static_cast<double>(kFft);
      if ((f - hz) * (f - hz) < err) {
        err = (f - hz) * (f - hz);
        best = k;
      }
    }
    return best;
  };
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t b = 0; b < kBands; ++b) {
    const double k = static_cast<double>(b);
    out.emplace_back(nearest(kMinFreq * std::pow(2.0, (2.0 * k - 1.0) / 6.0)),
                     nearest(kMinFreq * std::pow(2.0, (2.0 * k + 1.0) / 6.0)));
  }
  return out;
}

std::size_t frame_count(std::size_t len) { return len > kFrame ? (len - kFrame - 1) / kHop + 1 : 0; }

// Drops frames more than 40 dB below the loudest clean frame, from both
// signals, and overlap-adds what is left.
void remove_silent_frames(std::vector<double>& x, std::vector<double>& y) {
  const auto w = inner_hann(kFrame);
  const std::size_t frames = frame_count(x.size());
  std::vector<double> energy(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double s = 0.0;
    for (std::size_t i = 0; i < kFrame; ++i) {
      const double v = w[i] * x[f * kHop + i];
      s += v * v;
    }
    energy[f] = 20.0 * std::log10(std::sqrt(s) + kEps);
  }
  const double top = frames ? *std::max_element(energy.begin(), energy.end()) : 0.0;
  std::vector<std::size_t> keep;
  for (std::size_t f = 0; f < frames; ++f)
    if (top - kDynRangeDb - energy[f] < 0.0) keep.push_back(f);

  const std::size_t out_len = keep.empty() ? 0 : (keep.size() - 1) * kHop + kFrame;
  std::vector<double> xo(out_len, 0.0), yo(out_len, 0.0);
  for (std::size_t j = 0; j < keep.size(); ++j)
    for (std::size_t i = 0; i < kFrame; ++i) {
      xo[j * kHop + i] += w[i] * x[keep[j] * kHop + i];
      yo[j * kHop + i] += w[i] * y[keep[j] * kHop + i];
    }
  x = std::move(xo);
  y = std::move(yo);
}

// Band envelopes, kBands x frames (row-major by band).
Matrix<double> band_envelopes(const std::vector<double>& x, RealFft& fft,
                              const std::vector<std::pair<std::size_t, std::size_t>>& bands) {
  const auto w = inner_hann(kFrame);
  const std::size_t frames = frame_count(x.size());
  Matrix<double> env(kBands, frames);
  std::vector<double> buf(kFft);
  std::vector<std::complex<double>> spec(kFft / 2 + 1);
  for (std::size_t f = 0; f < frames; ++f) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (std::size_t i = 0; i < kFrame; ++i) buf[i] = w[i] * x[f * kHop + i];
    fft.forward(buf, spec);
    for (std::size_t b = 0; b < kBands; ++b) {
      double s = 0.0;
      for (std::size_t k = bands[b].first; k < bands[b].second; ++k) s += std::norm(spec[k]);
      env(b, f) = std::sqrt(s);
    }
  }
  return env;
}

}  // namespace

Waveform resample(const Waveform& wave, int target_rate) {
  require(wave.sample_rate > 0 && target_rate > 0, ErrorKind::invalid_argument,
          "resample: rates must be positive");
  if (wave.sample_rate == target_rate) return wave;
  const auto g = std::gcd(wave.sample_rate, target_rate);
  const auto up = static_cast<std::size_t>(target_rate / g);
  const auto down = static_cast<std::size_t>(wave.sample_rate / g);
  const double fc = std::min(1.0, static_cast<double>(up) / static_cast<double>(down));
  constexpr double kZeros = 16.0;
  constexpr double kBeta = 8.6;
  const double half = kZeros / fc;  // in input samples
  const auto reach = static_cast<std::ptrdiff_t>(std::ceil(half));
  const double i0_beta = std::cyl_bessel_i(0.0, kBeta);

  // One filter per output phase, taps for input offsets -reach .. reach.
  const std::size_t taps = static_cast<std::size_t>(2 * reach + 2);
  std::vector<std::vector<double>> phases(up, std::vector<double>(taps, 0.0));
  for (std::size_t p = 0; p < up; ++p) {
    const double frac = static_cast<double>(p) / static_cast<double>(up);
    for (std::size_t j = 0; j < taps; ++j) {
      const double d = frac - static_cast<double>(static_cast<std::ptrdiff_t>(j) - reach);
      if (std::abs(d) > half) continue;
      const double arg = fc * d;
      const double sinc = arg == 0.0 ? 1.0 : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
      const double r = d / half;
      const double window = std::cyl_bessel_i(0.0, kBeta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0_beta;
      phases[p][j] = fc * sinc * window;
    }
  }

  Waveform out;
  out.sample_rate = target_rate;
  const std::size_t n = wave.size();
  out.samples.resize((n * up + down - 1) / down);
  const auto len = static_cast<std::ptrdiff_t>(n);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t pos = i * down;
    const auto base = static_cast<std::ptrdiff_t>(pos / up);
    const auto& h = phases[pos % up];
    double acc = 0.0;
    for (std::size_t j = 0; j < taps; ++j) {
      const std::ptrdiff_t k = base + static_cast<std::ptrdiff_t>(j) - reach;
      if (k >= 0 && k < len) acc += h[j] * wave.samples[static_cast<std::size_t>(k)];
    }
    out.samples[i] = acc;
  }
  return out;
}

double stoi(const Waveform& clean, const Waveform& processed) {
  require(clean.sample_rate == processed.sample_rate, ErrorKind::sample_rate,
          "stoi: signals have different sample rates");
  const std::size_t n = std::min(clean.size(), processed.size());
  Waveform c = clean, p = processed;
  c.samples.resize(n);
  p.samples.resize(n);
  std::vector<double> x = resample(c, kStoiRate).samples;
  std::vector<double> y = resample(p, kStoiRate).samples;
  remove_silent_frames(x, y);

  static const auto bands = third_octave_bands();
  RealFft fft(kFft);
  const Matrix<double> xe = band_envelopes(x, fft, bands);
  const Matrix<double> ye = band_envelopes(y, fft, bands);
  const std::size_t frames = xe.cols();
  require(frames >= kSegment, ErrorKind::insufficient_data,
          "stoi: fewer than " + std::to_string(kSegment) + " non-silent frames");

  const double clip = std::pow(10.0, -kBetaDb / 20.0);
  double total = 0.0;
  std::size_t count = 0;
  std::vector<double> xs(kSegment), ys(kSegment);
  for (std::size_t m = kSegment; m <= frames; ++m) {
    for (std::size_t b = 0; b < kBands; ++b) {
      double nx = 0.0, ny = 0.0;
      for (std::size_t j = 0; j < kSegment; ++j) {
        xs[j] = xe(b, m - kSegment + j);
        ys[j] = ye(b, m - kSegment + j);
        nx += xs[j] * xs[j];
        ny += ys[j] * ys[j];
      }
      const double alpha = std::sqrt(nx) / (std::sqrt(ny) + kEps);
      double mx = 0.0, my = 0.0;
      for (std::size_t j = 0; j < kSegment; ++j) {
        ys[j] = std::min(alpha * ys[j], xs[j] * (1.0 + clip));
        mx += xs[j];
        my += ys[j];
      }
      mx /= kSegment;
      my /= kSegment;
      double sx = 0.0, sy = 0.0, sxy = 0.0;
      for (std::size_t j = 0; j < kSegment; ++j) {
        xs[j] -= mx;
        ys[j] -= my;
        sx += xs[j] * xs[j];
        sy += ys[j] * ys[j];
      }
      const double dx = std::sqrt(sx) + kEps, dy = std::sqrt(sy) + kEps;
      for (std::size_t j = 0; j < kSegment; ++j) sxy += (xs[j] / dx) * (ys[j] / dy);
      total += sxy;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace presynth
