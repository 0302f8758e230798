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
#include "presynth/metrics.hpp"

namespace presynth {
namespace {

void check_frames(const Matrix<double>& a, const Matrix<double>& b, const char* who) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::shape_mismatch,
          std::string(who) + ": reference is " + std::to_string(a.rows()) + "x" +
              std::to_string(a.cols()) + ", hypothesis " + std::to_string(b.rows()) + "x" +
              std::to_string(b.cols()));
  require(a.rows() > 0, ErrorKind::insufficient_data, std::string(who) + ": no frames");
}

}  // namespace

double mcd(const Matrix<double>& ref_mcep, const Matrix<double>& hyp_mcep) {
  check_frames(ref_mcep, hyp_mcep, "mcd");
  const double k = 10.0 / std::numbers::ln10;
  double total = 0.0;
  for (std::size_t t = 0; t < ref_mcep.rows(); ++t) {
    double s = 0.0;
    for (std::size_t d = 1; d < ref_mcep.cols(); ++d) {
      const double e = ref_mcep(t, d) - hyp_mcep(t, d);
      s += e * e;
    }
    total += k * std::sqrt(2.0 * s);
  }
  return total / static_cast<double>(ref_mcep.rows());
}

double bapd(const Matrix<double>& ref_bap, const Matrix<double>& hyp_bap) {
  check_frames(ref_bap, hyp_bap, "bapd");
  double total = 0.0;
  for (std::size_t t = 0; t < ref_bap.rows(); ++t) {
    double s = 0.0;
    for (std::size_t b = 0; b < ref_bap.cols(); ++b) {
      const double e = ref_bap(t, b) - hyp_bap(t, b);
      s += e * e;
    }
    total += std::sqrt(s / static_cast<double>(ref_bap.cols()));
  }
  return total / static_cast<double>(ref_bap.rows());
}

double vuv_error_pct(const F0Track& ref, const F0Track& hyp) {
  require(ref.size() == hyp.size(), ErrorKind::shape_mismatch,
          "vuv: tracks differ in length (" + std::to_string(ref.size()) + " vs " +
              std::to_string(hyp.size()) + ")");
  require(ref.size() > 0, ErrorKind::insufficient_data, "vuv: empty tracks");
  std::size_t differ = 0;
  for (std::size_t t = 0; t < ref.size(); ++t) differ += (ref.vuv[t] != 0) != (hyp.vuv[t] != 0);
  return 100.0 * static_cast<double>(differ) / static_cast<double>(ref.size());
}

F0Metrics f0_metrics(const F0Track& ref, const F0Track& hyp) {
  F0Metrics m;
  m.vuv_pct = vuv_error_pct(ref, hyp);
  double sr = 0.0, sh = 0.0;
  for (std::size_t t = 0; t < ref.size(); ++t) {
    if (!ref.vuv[t] || !hyp.vuv[t]) continue;
    ++m.voiced_both;
    sr += ref.f0[t];
    sh += hyp.f0[t];
  }
  require(m.voiced_both > 0, ErrorKind::undefined_metric, "f0: no frame is voiced in both tracks");
  const double n = static_cast<double>(m.voiced_both);
  const double mr = sr / n, mh = sh / n;
  double se = 0.0, cov = 0.0, vr = 0.0, vh = 0.0;
  for (std::size_t t = 0; t < ref.size(); ++t) {
    if (!ref.vuv[t] || !hyp.vuv[t]) continue;
    const double e = ref.f0[t] - hyp.f0[t];
    se += e * e;
    cov += (ref.f0[t] - mr) * (hyp.f0[t] - mh);
    vr += (ref.f0[t] - mr) * (ref.f0[t] - mr);
    vh += (hyp.f0[t] - mh) * (hyp.f0[t] - mh);
  }
  m.rmse_hz = std::sqrt(se / n);
  require(vr > 0.0 && vh > 0.0, ErrorKind::undefined_metric,
          "f0: correlation is undefined for a flat contour");
  m.corr = cov / std::sqrt(vr * vh);
  return m;
}

double si_snr_db(const Waveform& reference, const Waveform& processed) {
  const std::size_t n = std::min(reference.size(), processed.size());
  require(n > 0, ErrorKind::insufficient_data, "snr: empty signal");
  double rr = 0.0, rp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    rr += reference.samples[i] * reference.samples[i];
    rp += reference.samples[i] * processed.samples[i];
  }
  require(rr > 0.0, ErrorKind::undefined_metric, "snr: silent reference");
  const double a = rp / rr;
  double signal = 0.0, error = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = a * reference.samples[i];
    signal += s * s;
    error += (s - processed.samples[i]) * (s - processed.samples[i]);
  }
  // Clamped so perfect and hopeless matches still give finite numbers.
  if (signal <= 0.0) return -100.0;
  if (error <= 0.0) return 300.0;
  return std::clamp(10.0 * std::log10(signal / error), -100.0, 300.0);
}

}  // namespace presynth
