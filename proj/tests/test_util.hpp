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

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <string>
#include <numbers>
#include <vector>

#include "presynth/dsp.hpp"
#include "presynth/error.hpp"
#include "presynth/matrix.hpp"
#include "presynth/random.hpp"

namespace presynth::testing {

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name)
      : path(std::filesystem::temp_directory_path() / ("presynth_" + name)) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

/// Kind of the presynth::Error thrown by fn; invalid_argument if none.
inline ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::invalid_argument;
}

inline Waveform random_wave(Rng& rng, std::size_t n, double amp = 0.3) {
  Waveform w;
  w.samples.resize(n);
  for (auto& s : w.samples) s = amp * rng.normal();
  return w;
}

inline Waveform sine(double hz, double seconds, double amp = 1.0, double phase = 0.0) {
  Waveform w;
  const auto n = static_cast<std::size_t>(seconds * kSampleRate);
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    w.samples[i] = amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / kSampleRate + phase);
  return w;
}

/// Band-limited sawtooth by additive synthesis.
inline Waveform sawtooth(double f0, double seconds, double amp = 0.5) {
  Waveform w;
  const auto n = static_cast<std::size_t>(seconds * kSampleRate);
  w.samples.assign(n, 0.0);
  const int harmonics = static_cast<int>((kSampleRate / 2.0 - 1.0) / f0);
  for (std::size_t i = 0; i < n; ++i) {
    double v = 0.0;
    const double ph = 2.0 * std::numbers::pi * f0 * static_cast<double>(i) / kSampleRate;
    for (int k = 1; k <= harmonics; ++k) v += std::sin(k * ph) / k;
    w.samples[i] = amp * (2.0 / std::numbers::pi) * v;
  }
  return w;
}

/// Direct O(N^2) DFT of a real sequence, bins 0..N/2.
inline std::vector<std::complex<double>> naive_dft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += x[i] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * i % n) / static_cast<double>(n));
    out[k] = acc;
  }
  return out;
}

inline double rel_l2(const std::vector<double>& ref, const std::vector<double>& got,
                     std::size_t begin, std::size_t end) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    num += (ref[i] - got[i]) * (ref[i] - got[i]);
    den += ref[i] * ref[i];
  }
  return std::sqrt(num / std::max(den, 1e-300));
}

/// Dense Gaussian elimination with partial pivoting; a is n x n row-major.
inline std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r * n + c]) > std::abs(a[piv * n + c])) piv = r;
    for (std::size_t k = 0; k < n; ++k) std::swap(a[c * n + k], a[piv * n + k]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r * n + c] / a[c * n + c];
      for (std::size_t k = c; k < n; ++k) a[r * n + k] -= f * a[c * n + k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t r = n; r-- > 0;) {
    double s = b[r];
    for (std::size_t k = r + 1; k < n; ++k) s -= a[r * n + k] * x[k];
    x[r] = s / a[r * n + r];
  }
  return x;
}

// Direct transcriptions of the metric definitions, used as oracles.

/// mean over frames of (10 / ln 10) * sqrt(2 * sum_{d >= 1} diff^2).
inline double oracle_mcd(const Matrix<double>& a, const Matrix<double>& b) {
  std::vector<double> per_frame;
  for (std::size_t t = 0; t < a.rows(); ++t) {
    std::vector<double> d;
    for (std::size_t c = 1; c < a.cols(); ++c) d.push_back(a(t, c) - b(t, c));
    double ss = 0.0;
    for (double v : d) ss += v * v;
    per_frame.push_back(10.0 / std::log(10.0) * std::sqrt(2.0 * ss));
  }
  double s = 0.0;
  for (double v : per_frame) s += v;
  return s / static_cast<double>(per_frame.size());
}

inline double oracle_bapd(const Matrix<double>& a, const Matrix<double>& b) {
  double s = 0.0;
  for (std::size_t t = 0; t < a.rows(); ++t) {
    double ss = 0.0;
    for (std::size_t c = 0; c < a.cols(); ++c) ss += std::pow(a(t, c) - b(t, c), 2);
    s += std::sqrt(ss / static_cast<double>(a.cols()));
  }
  return s / static_cast<double>(a.rows());
}

struct OracleF0 {
  double rmse, corr, vuv_pct;
};

/// Two-pass statistics over the frames voiced in both tracks.
inline OracleF0 oracle_f0(const std::vector<double>& ref, const std::vector<std::uint8_t>& rv,
                          const std::vector<double>& hyp, const std::vector<std::uint8_t>& hv) {
  std::vector<double> x, y;
  std::size_t flips = 0;
  for (std::size_t t = 0; t < ref.size(); ++t) {
    if (rv[t] && hv[t]) {
      x.push_back(ref[t]);
      y.push_back(hyp[t]);
    }
    if (bool(rv[t]) != bool(hv[t])) ++flips;
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0, se = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
    se += (x[i] - y[i]) * (x[i] - y[i]);
  }
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return {std::sqrt(se / n), sxy / std::sqrt(sxx * syy),
          100.0 * static_cast<double>(flips) / static_cast<double>(ref.size())};
}

}  // namespace presynth::testing
