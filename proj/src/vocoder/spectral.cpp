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

#include "presynth/error.hpp"
#include "presynth/kernels.hpp"
#include "presynth/vocoder.hpp"

namespace presynth {
namespace {

// Moving average of width `width` bins, treating each bin as a constant over
// [k-0.5, k+0.5] and mirroring the spectrum at DC and Nyquist.
void boxcar_smooth(std::span<const double> in, double width, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(in.size());
  if (width <= 1.0) {
    std::copy(in.begin(), in.end(), out.begin());
    return;
  }
  const auto margin = static_cast<std::ptrdiff_t>(std::ceil(width)) + 2;
  // cum[i] = integral of the mirrored spectrum over [-margin-0.5, i-margin-0.5)
  std::vector<double> cum(static_cast<std::size_t>(n + 2 * margin + 1), 0.0);
  for (std::ptrdiff_t i = 0; i < n + 2 * margin; ++i) {
    const std::ptrdiff_t k = i - margin;
    cum[static_cast<std::size_t>(i + 1)] = cum[static_cast<std::size_t>(i)] + in[reflect_index(k, in.size())];
  }
  auto integral_to = [&](double x) {
    // x in bin coordinates; cum index j corresponds to x = j - margin - 0.5.
    const double pos = x + static_cast<double>(margin) + 0.5;
    const auto j = static_cast<std::ptrdiff_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(j);
    const auto ju = static_cast<std::size_t>(j);
    return cum[ju] + frac * (cum[ju + 1] - cum[ju]);
  };
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const double lo = static_cast<double>(k) - 0.5 * width;
    const double hi = static_cast<double>(k) + 0.5 * width;
    out[static_cast<std::size_t>(k)] = (integral_to(hi) - integral_to(lo)) / width;
  }
}

void check_frames(const Waveform& wave, const F0Track& f0, const FrameConfig& frame,
                  const char* who) {
  const std::size_t expected = num_frames(wave.size(), frame);
  require(f0.size() == expected && f0.vuv.size() == expected, ErrorKind::shape_mismatch,
          std::string(who) + ": F0 track has " + std::to_string(f0.size()) +
              " frames, waveform framing gives " + std::to_string(expected));
}

double window_energy(const FrameConfig& cfg) {
  double e = 0.0;
  for (double w : analysis_window(cfg)) e += w * w;
  return e;
}

}  // namespace

double warp_frequency(double omega, double alpha) {
  return omega + 2.0 * std::atan2(alpha * std::sin(omega), 1.0 - alpha * std::cos(omega));
}

Matrix<double> estimate_envelope(const Waveform& wave, const F0Track& f0,
                                 const VocoderConfig& cfg) {
  require(!wave.empty(), ErrorKind::invalid_argument, "estimate_envelope: empty signal");
  check_frames(wave, f0, cfg.frame, "estimate_envelope");
  const Spectrogram spec = stft(wave, cfg.frame);
  const double norm = 1.0 / window_energy(cfg.frame);
  const double bin_hz = cfg.frame.bin_hz();

  Matrix<double> env(spec.num_frames(), spec.num_bins());
  std::vector<double> power(spec.num_bins()), smooth(spec.num_bins());
  for (std::size_t t = 0; t < spec.num_frames(); ++t) {
    auto row = spec.frames.row(t);
    for (std::size_t k = 0; k < row.size(); ++k) power[k] = std::norm(row[k]) * norm;
    const double width_hz = f0.vuv[t] && f0.f0[t] > 0.0 ? f0.f0[t] : cfg.unvoiced_smoothing_hz;
    const double width = width_hz / bin_hz;

    // Power-domain averaging over one harmonic spacing, then the same
    // smoothing on the log spectrum to remove the residual ripple.
    boxcar_smooth(power, width, smooth);
    for (std::size_t k = 0; k < smooth.size(); ++k)
      power[k] = std::log(std::max(smooth[k], cfg.envelope_floor));
    boxcar_smooth(power, width, smooth);
    auto out = env.row(t);
    for (std::size_t k = 0; k < smooth.size(); ++k)
      out[k] = std::max(std::exp(smooth[k]), cfg.envelope_floor);
  }
  return env;
}

Matrix<double> envelope_to_mcep(const Matrix<double>& envelope, std::size_t order,
                                double alpha) {
  require(envelope.cols() >= 2, ErrorKind::shape_mismatch, "envelope_to_mcep: too few bins");
  const std::size_t bins = envelope.cols();
  const std::size_t n = 2 * (bins - 1);
  require(order >= 1 && order <= bins, ErrorKind::invalid_argument,
          "envelope_to_mcep: order must be in [1, bins]");
  for (double v : envelope.storage())
    require(v > 0.0 && std::isfinite(v), ErrorKind::non_finite,
            "envelope_to_mcep: envelope must be strictly positive and finite");

  // For every point of a uniform grid on the warped axis, the (fractional)
  // linear-frequency bin it comes from.
  std::vector<double> source_bin(bins);
  for (std::size_t j = 0; j < bins; ++j) {
    const double warped = std::numbers::pi * static_cast<double>(j) / static_cast<double>(bins - 1);
    const double linear = std::clamp(warp_frequency(warped, -alpha), 0.0, std::numbers::pi);
    source_bin[j] = linear / std::numbers::pi * static_cast<double>(bins - 1);
  }

  Matrix<double> mcep(envelope.rows(), order);
  RealFft fft(n);
  std::vector<double> logspec(bins);
  std::vector<std::complex<double>> half(bins);
  std::vector<double> cep(n);
  for (std::size_t t = 0; t < envelope.rows(); ++t) {
    auto row = envelope.row(t);
    for (std::size_t k = 0; k < bins; ++k) logspec[k] = std::log(row[k]);
    for (std::size_t j = 0; j < bins; ++j) {
      const double pos = source_bin[j];
      const auto k0 = std::min(static_cast<std::size_t>(pos), bins - 2);
      const double frac = pos - static_cast<double>(k0);
      half[j] = (1.0 - frac) * logspec[k0] + frac * logspec[k0 + 1];
    }
    fft.inverse(half, cep);
    auto out = mcep.row(t);
    out[0] = cep[0];
    for (std::size_t m = 1; m < order; ++m) out[m] = 2.0 * cep[m];
  }
  return mcep;
}

Matrix<double> mcep_to_envelope(const Matrix<double>& mcep, const FrameConfig& cfg,
                                double alpha) {
  const std::size_t bins = cfg.num_bins();
  const std::size_t order = mcep.cols();
  require(order >= 1, ErrorKind::shape_mismatch, "mcep_to_envelope: no coefficients");
  // basis(k, m) = cos(m * warp(w_k)), so log env = mcep . basis^T
  Matrix<double> basis(bins, order);
  for (std::size_t k = 0; k < bins; ++k) {
    const double warped = warp_frequency(std::numbers::pi * static_cast<double>(k) /
                                             static_cast<double>(bins - 1),
                                         alpha);
    for (std::size_t m = 0; m < order; ++m) basis(k, m) = std::cos(static_cast<double>(m) * warped);
  }
  Matrix<double> env(mcep.rows(), bins);
  kernels::gemm_nt(mcep.data(), basis.data(), env.data(), mcep.rows(), bins, order, false);
  for (double& v : env.storage()) v = std::exp(v);
  return env;
}

Matrix<double> estimate_band_aperiodicity(const Waveform& wave, const F0Track& f0,
                                          const VocoderConfig& cfg) {
  require(!wave.empty(), ErrorKind::invalid_argument, "estimate_band_aperiodicity: empty signal");
  check_frames(wave, f0, cfg.frame, "estimate_band_aperiodicity");
  const Spectrogram spec = stft(wave, cfg.frame);
  const double bin_hz = cfg.frame.bin_hz();
  const std::size_t bins = spec.num_bins();
  const double floor_ratio = std::pow(10.0, cfg.bap_floor_db / 10.0);
  // Half-width of the Hann main lobe in bins, scaled for zero padding.
  const double lobe = 2.0 * static_cast<double>(cfg.frame.fft_size) /
                      static_cast<double>(cfg.frame.window_len);

  Matrix<double> bap(spec.num_frames(), kBapBands, 0.0);
  std::vector<double> power(bins);
  std::vector<double> harmonic_distance(bins);
  for (std::size_t t = 0; t < spec.num_frames(); ++t) {
    if (!f0.vuv[t] || f0.f0[t] <= 0.0) continue;  // unvoiced: 0 dB
    auto row = spec.frames.row(t);
    for (std::size_t k = 0; k < bins; ++k) power[k] = std::norm(row[k]);

    // Locate each harmonic's actual peak near h*f0 and record, per bin, the
    // distance to the nearest located peak.
    const double spacing = f0.f0[t] / bin_hz;
    std::fill(harmonic_distance.begin(), harmonic_distance.end(), 1e9);
    const auto search = std::max<std::ptrdiff_t>(1, static_cast<std::ptrdiff_t>(0.3 * spacing));
    for (double h = 1.0; h * spacing < static_cast<double>(bins - 1); h += 1.0) {
      const auto expect = static_cast<std::ptrdiff_t>(std::lround(h * spacing));
      std::ptrdiff_t best = expect;
      for (std::ptrdiff_t k = expect - search; k <= expect + search; ++k)
        if (k >= 0 && k < static_cast<std::ptrdiff_t>(bins) &&
            power[static_cast<std::size_t>(k)] > power[static_cast<std::size_t>(best)])
          best = k;
      for (std::size_t k = 0; k < bins; ++k)
        harmonic_distance[k] = std::min(harmonic_distance[k],
                                        std::abs(static_cast<double>(k) - static_cast<double>(best)));
    }

    auto out = bap.row(t);
    for (std::size_t b = 0; b < kBapBands; ++b) {
      const auto k_lo = static_cast<std::size_t>(std::ceil(cfg.band_edges_hz[b] / bin_hz));
      const auto k_hi = std::min(bins - 1, static_cast<std::size_t>(std::floor(cfg.band_edges_hz[b + 1] / bin_hz)));
      double total = 0.0, residual = 0.0, valley = 0.0;
      std::size_t n_band = 0, n_residual = 0;
      for (std::size_t k = k_lo; k <= k_hi; ++k) {
        total += power[k];
        ++n_band;
        if (harmonic_distance[k] > lobe) {
          residual += power[k];
          ++n_residual;
        }
      }
      if (n_band == 0 || total <= 0.0) continue;
      double density;
      if (n_residual > 0) {
        density = residual / static_cast<double>(n_residual);
      } else {
        // Harmonics too dense to leave clean bins: fall back on the deepest
        // valley between adjacent harmonics.
        valley = *std::min_element(power.begin() + static_cast<std::ptrdiff_t>(k_lo),
                                   power.begin() + static_cast<std::ptrdiff_t>(k_hi) + 1);
        density = valley;
      }
      const double ratio = std::clamp(density * static_cast<double>(n_band) / total, floor_ratio, 1.0);
      out[b] = 10.0 * std::log10(ratio);
    }
  }
  return bap;
}

}  // namespace presynth
