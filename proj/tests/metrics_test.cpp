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

#include <cmath>
#include <numbers>

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

Matrix<double> random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix<double> m(rows, cols);
  for (auto& v : m.storage()) v = rng.normal();
  return m;
}

F0Track track(std::vector<double> f0) {
  F0Track t;
  t.f0 = std::move(f0);
  for (double v : t.f0) t.vuv.push_back(v > 0.0);
  return t;
}

Waveform speech(std::uint64_t seed) {
  Rng rng(seed);
  return synthetic::vowel_sequence(rng, synthetic::low_voice());
}

Waveform add(const Waveform& a, const Waveform& b, double gain_b) {
  Waveform out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.samples[i] += gain_b * b.samples[i % b.size()];
  return out;
}

double power(const Waveform& w) {
  double s = 0.0;
  for (double v : w.samples) s += v * v;
  return s / static_cast<double>(w.size());
}

}  // namespace

TEST_CASE("mcd") {
  Matrix<double> a(4, kMcepOrder, 0.0), b = a;
  CHECK(mcd(a, b) == 0.0);
  for (std::size_t t = 0; t < 4; ++t) b(t, 7) = 1.0;
  CHECK(mcd(a, b) == doctest::Approx(10.0 / std::numbers::ln10 * std::sqrt(2.0)).epsilon(1e-12));
  b = a;
  for (std::size_t t = 0; t < 4; ++t) b(t, 0) = 5.0;
  CHECK(mcd(a, b) == 0.0);
  CHECK_THROWS_AS(mcd(a, Matrix<double>(3, kMcepOrder)), Error);
}

TEST_CASE("bapd") {
  Matrix<double> a(6, kBapBands, -10.0), b = a;
  CHECK(bapd(a, b) == 0.0);
  for (auto& v : b.storage()) v += 1.0;
  CHECK(bapd(a, b) == doctest::Approx(1.0));
  b = a;
  for (std::size_t t = 0; t < 6; ++t) b(t, 2) += 1.0;
  CHECK(bapd(a, b) == doctest::Approx(1.0 / std::sqrt(5.0)));
}

TEST_CASE("f0 metrics") {
  const auto ref = track({0, 100, 110, 120, 130, 0, 140, 150, 160, 0});
  auto m = f0_metrics(ref, ref);
  CHECK(m.rmse_hz == 0.0);
  CHECK(m.corr == doctest::Approx(1.0));
  CHECK(m.vuv_pct == 0.0);

  auto shifted = ref;
  for (auto& v : shifted.f0)
    if (v > 0) v += 5.0;
  m = f0_metrics(ref, shifted);
  CHECK(m.rmse_hz == doctest::Approx(5.0));
  CHECK(m.corr == doctest::Approx(1.0));

  auto flipped = ref;
  flipped.vuv[0] = 1;
  flipped.f0[0] = 90.0;
  CHECK(f0_metrics(ref, flipped).vuv_pct == doctest::Approx(10.0));

  const auto silent = track(std::vector<double>(10, 0.0));
  CHECK(kind_of([&] { f0_metrics(ref, silent); }) == ErrorKind::undefined_metric);
  const auto flat = track({0, 100, 100, 100, 0, 0, 0, 0, 0, 0});
  CHECK(kind_of([&] { f0_metrics(flat, flat); }) == ErrorKind::undefined_metric);
  CHECK(vuv_error_pct(silent, silent) == 0.0);
}

TEST_CASE("metrics match direct transcriptions") {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t frames = 1 + rng.below(60);
    const auto a = random_matrix(rng, frames, kMcepOrder), b = random_matrix(rng, frames, kMcepOrder);
    CHECK(std::abs(mcd(a, b) - oracle_mcd(a, b)) < 1e-9);
    const auto p = random_matrix(rng, frames, kBapBands), q = random_matrix(rng, frames, kBapBands);
    CHECK(std::abs(bapd(p, q) - oracle_bapd(p, q)) < 1e-9);

    // Metric properties.
    CHECK(mcd(a, b) == doctest::Approx(mcd(b, a)).epsilon(1e-14));
    CHECK(mcd(a, b) > 0.0);
    CHECK(bapd(p, q) == doctest::Approx(bapd(q, p)).epsilon(1e-14));

    F0Track r, h;
    for (std::size_t t = 0; t < 40; ++t) {
      const bool rv = rng.uniform() < 0.7, hv = rng.uniform() < 0.7;
      r.f0.push_back(rv ? rng.uniform(80, 300) : 0.0);
      r.vuv.push_back(rv);
      h.f0.push_back(hv ? rng.uniform(80, 300) : 0.0);
      h.vuv.push_back(hv);
    }
    const auto m = f0_metrics(r, h);
    const auto o = oracle_f0(r.f0, r.vuv, h.f0, h.vuv);
    CHECK(std::abs(m.rmse_hz - o.rmse) < 1e-9);
    CHECK(std::abs(m.corr - o.corr) < 1e-9);
    CHECK(std::abs(m.vuv_pct - o.vuv_pct) < 1e-9);
  }
}

TEST_CASE("resampler") {
  const auto x = sine(1000.0, 0.5, 0.5);
  const auto y = resample(x, 10000);
  CHECK(y.sample_rate == 10000);
  CHECK(y.size() == 5000);
  double err = 0.0;
  for (std::size_t i = 200; i < 4800; ++i)
    err = std::max(err, std::abs(y.samples[i] - 0.5 * std::sin(2.0 * std::numbers::pi * 1000.0 * static_cast<double>(i) / 10000.0)));
  CHECK(err < 1e-3);
  // A tone above the new Nyquist is removed.
  const auto hi = resample(sine(6500.0, 0.5, 0.5), 10000);
  CHECK(std::sqrt(power(Waveform{std::vector<double>(hi.samples.begin() + 200, hi.samples.end() - 200), 10000})) < 1e-2);
}

TEST_CASE("stoi") {
  const auto x = speech(1);
  CHECK(stoi(x, x) == doctest::Approx(1.0).epsilon(1e-6));
  Rng rng(2);
  const auto noise = random_wave(rng, x.size(), std::sqrt(power(x)));
  const auto y = add(x, noise, 0.3);
  const double base = stoi(x, y);
  for (double g : {0.5, 2.0}) {
    Waveform scaled = y;
    for (auto& v : scaled.samples) v *= g;
    CHECK(std::abs(stoi(x, scaled) - base) < 1e-6);
  }
  // Standard STOI leaves independent noise near 0.43 on these vowel
  // sequences (a reference implementation agrees to 1e-4), well under the
  // 0 dB mixture.
  CHECK(stoi(x, noise) < 0.5);
  CHECK(stoi(x, noise) < stoi(x, add(x, noise, 1.0)) - 0.2);
  CHECK(stoi(x, add(x, noise, 0.1)) > stoi(x, add(x, noise, 1.0)));  // 20 dB vs 0 dB
  CHECK(stoi(x, ved(x, 3)) > stoi(x, noise));
  CHECK(kind_of([&] { stoi(sine(200, 0.1), sine(200, 0.1)); }) == ErrorKind::insufficient_data);
}

TEST_CASE("si-snr") {
  const auto x = speech(4);
  Waveform half = x;
  for (auto& v : half.samples) v *= 0.5;
  CHECK(si_snr_db(x, half) == 300.0);
  Rng rng(3);
  const auto n = random_wave(rng, x.size(), std::sqrt(power(x)));
  CHECK(std::abs(si_snr_db(x, add(x, n, 1.0))) < 0.3);
}

TEST_CASE("reports") {
  TempDir dir("metrics_report");
  Manifest man;
  man.seed = 1;
  for (int i = 0; i < 3; ++i) {
    const auto w = speech(10 + static_cast<std::uint64_t>(i));
    const std::string id = (i < 2 ? "low_" : "high_") + std::to_string(i);
    save_wav(dir.path / (id + ".wav"), w);
    MixtureSpec s;
    s.utt_id = id;
    s.split = Split::test;
    s.clean_path = (dir.path / (id + ".wav")).string();
    man.entries.push_back(s);
    if (i < 2) save_wav(dir.path / "out" / (id + ".clean.wav"), load_wav(dir.path / (id + ".wav")));
  }
  const auto r = evaluate_system(man, "m.jsonl", dir.path / "out", "clean");
  CHECK(r.expected == 3);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.missing == std::vector<std::string>{"high_2"});
  for (const auto& row : r.rows) {
    CHECK(row.mcd_db == 0.0);
    CHECK(row.vuv_pct == 0.0);
    CHECK(row.stoi == doctest::Approx(1.0).epsilon(1e-6));
  }
  const auto means = r.means();
  CHECK(means.stoi == doctest::Approx((r.rows[0].stoi + r.rows[1].stoi) / 2.0));
  CHECK(r.by_speaker().count("low") == 1);

  const auto back = EvalReport::from_json(r.to_json());
  CHECK(back.to_json() == r.to_json());
  const auto table = format_table({r, back}, true);
  CHECK(table.find("clean [low]") != std::string::npos);
  CHECK(table.find("STOI") != std::string::npos);
}
