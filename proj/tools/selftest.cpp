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

#include "selftest.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "presynth/corpus.hpp"
#include "presynth/enhance.hpp"
#include "presynth/metrics.hpp"
#include "presynth/nnet.hpp"
#include "presynth/synthetic.hpp"

namespace presynth::tools {
namespace {

struct Check {
  bool ok;
  std::string detail;
};

char buf[256];

Check stft_round_trip() {
  Rng rng(11);
  const FrameConfig cfg;
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    Waveform w;
    w.samples.resize(4000 + rng.below(12000));
    for (double& v : w.samples) v = rng.normal();
    const Waveform back = istft(stft(w, cfg));
    double err = 0.0, ref = 0.0;
    for (std::size_t i = cfg.window_len; i + cfg.window_len < w.size(); ++i) {
      err += (back.samples[i] - w.samples[i]) * (back.samples[i] - w.samples[i]);
      ref += w.samples[i] * w.samples[i];
    }
    worst = std::max(worst, std::sqrt(err / ref));
  }
  std::snprintf(buf, sizeof buf, "max relative error %.2e over 10 signals", worst);
  return {worst < 1e-6, buf};
}

Check gradients(ModelKind kind) {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) worst = std::max(worst, check_gradients(kind, seed).max_error);
  std::snprintf(buf, sizeof buf, "max relative error %.2e over 5 models", worst);
  return {worst < 1e-4, buf};
}

Check checkpoint_round_trip() {
  const auto path = std::filesystem::temp_directory_path() / "presynth_selftest.pvc";
  ModelConfig mc = ModelConfig::defaults(ModelKind::recurrent, 12, 5);
  mc.hidden_width = 8;
  const Model<float> m(mc);
  save_checkpoint(m, path);
  const Model<float> back = load_checkpoint<float>(path);
  std::filesystem::remove(path);
  const bool same = checkpoint_bytes(back) == checkpoint_bytes(m);
  return {same, same ? "bitwise identical" : "reloaded model differs"};
}

Check vocoder_round_trip() {
  Rng rng(5);
  double worst_rmse = 0.0, worst_vuv = 0.0;
  for (int i = 0; i < 3; ++i) {
    const Waveform x = synthetic::vowel_sequence(rng, i % 2 ? synthetic::high_voice() : synthetic::low_voice());
    const auto f = f0_metrics(f0_of(analyze(x)), f0_of(analyze(ved(x, 1))));
    worst_rmse = std::max(worst_rmse, f.rmse_hz);
    worst_vuv = std::max(worst_vuv, f.vuv_pct);
  }
  std::snprintf(buf, sizeof buf, "F0 RMSE %.2f Hz, VUV %.2f%% (worst of 3)", worst_rmse, worst_vuv);
  return {worst_rmse < 2.0 && worst_vuv < 5.0, buf};
}

Check stoi_identity() {
  Rng rng(8);
  const Waveform x = synthetic::vowel_sequence(rng, synthetic::low_voice());
  const double s = stoi(x, x);
  std::snprintf(buf, sizeof buf, "stoi(x, x) = %.9f", s);
  return {std::abs(s - 1.0) < 1e-6, buf};
}

Check manifest_round_trip() {
  Manifest m;
  m.seed = 7;
  MixtureSpec s;
  s.utt_id = "low_001";
  s.clean_path = "clean/low_001.wav";
  s.noise_path = "noise/noise_0.wav";
  s.noise_offset = 1234;
  s.snr_db = 3.25;
  m.entries.push_back(s);
  const std::string text = m.to_jsonl();
  const bool same = Manifest::from_jsonl(text).to_jsonl() == text;
  return {same, same ? "identical text" : "text changed"};
}

}  // namespace

int run_selftest() {
  struct Item {
    const char* name;
    Check (*fn)();
  };
  const Item items[] = {
      {"stft round trip", stft_round_trip},
      {"gradients (feedforward)", [] { return gradients(ModelKind::feedforward); }},
      {"gradients (recurrent)", [] { return gradients(ModelKind::recurrent); }},
      {"checkpoint round trip", checkpoint_round_trip},
      {"vocoder round trip", vocoder_round_trip},
      {"stoi identity", stoi_identity},
      {"manifest round trip", manifest_round_trip},
  };
  int failed = 0;
  for (const auto& item : items) {
    const auto start = std::chrono::steady_clock::now();
    Check c;
    try {
      c = item.fn();
    } catch (const std::exception& e) {
      c = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s  %-26s %s (%.1f s)\n", c.ok ? "PASS" : "FAIL", item.name, c.detail.c_str(), secs);
    failed += !c.ok;
  }
  std::printf("%d of %zu checks failed\n", failed, std::size(items));
  return failed;
}

}  // namespace presynth::tools
