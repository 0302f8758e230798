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
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "presynth/binary_io.hpp"
#include "presynth/corpus.hpp"
#include "presynth/error.hpp"
#include "presynth/synthetic.hpp"
#include "test_util.hpp"

using namespace presynth;
using namespace presynth::testing;
namespace fs = std::filesystem;

namespace {

// Hand-rolled canonical WAV header, independent of save_wav.
void write_raw_wav(const fs::path& p, std::uint16_t format, std::uint16_t channels,
                   std::uint32_t rate, std::uint16_t bits, const std::vector<char>& data) {
  io::ByteWriter w;
  w.magic("RIFF");
  w.u32(36 + static_cast<std::uint32_t>(data.size()));
  w.magic("WAVE");
  w.magic("fmt ");
  w.u32(16);
  w.u32(format | (static_cast<std::uint32_t>(channels) << 16));
  w.u32(rate);
  w.u32(rate * channels * bits / 8);
  w.u32(static_cast<std::uint32_t>(channels * bits / 8) | (static_cast<std::uint32_t>(bits) << 16));
  w.magic("data");
  w.u32(static_cast<std::uint32_t>(data.size()));
  auto bytes = w.bytes();
  bytes.insert(bytes.end(), data.begin(), data.end());
  io::write_file(p, bytes);
}

std::vector<char> pcm16(const std::vector<std::int16_t>& v) {
  std::vector<char> out;
  for (auto s : v) {
    const auto u = static_cast<std::uint16_t>(s);
    out.push_back(static_cast<char>(u & 0xff));
    out.push_back(static_cast<char>(u >> 8));
  }
  return out;
}

// Small synthetic corpus on disk: `n` clean vowel sequences, one mono and one
// stereo noise file.
void write_corpus(const fs::path& root, std::size_t n) {
  Rng rng(1234);
  fs::create_directories(root / "clean");
  fs::create_directories(root / "noise");
  synthetic::UtteranceOptions opts;
  opts.min_vowels = 1;
  opts.max_vowels = 2;
  for (std::size_t i = 0; i < n; ++i) {
    const auto spk = i % 2 ? synthetic::high_voice() : synthetic::low_voice();
    char name[32];
    std::snprintf(name, sizeof name, "%s_%03zu.wav", spk.name.c_str(), i);
    save_wav(root / "clean" / name, synthetic::vowel_sequence(rng, spk, opts));
  }
  save_wav(root / "noise" / "pink.wav", synthetic::noise(rng, 1.5, synthetic::NoiseColor::pink, 0.1));
  const auto a = synthetic::noise(rng, 2.0, synthetic::NoiseColor::white, 0.05);
  const auto b = synthetic::noise(rng, 2.0, synthetic::NoiseColor::lowpass, 0.1);
  std::vector<std::int16_t> inter;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter.push_back(static_cast<std::int16_t>(std::lround(a.samples[i] * 32768.0)));
    inter.push_back(static_cast<std::int16_t>(std::lround(b.samples[i] * 32768.0)));
  }
  write_raw_wav(root / "noise" / "stereo.wav", 1, 2, 16000, 16, pcm16(inter));
}

}  // namespace

TEST_CASE("wav round trip and saturation") {
  TempDir dir("presynth_wav_test");
  Rng rng(3);
  auto w = random_wave(rng, 4000, 0.3);
  w.samples[10] = 1.5;
  w.samples[11] = -2.0;
  save_wav(dir.path / "a.wav", w);
  const auto back = load_wav(dir.path / "a.wav");
  REQUIRE(back.size() == w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (std::abs(w.samples[i]) >= 1.0) continue;
    CHECK(std::abs(back.samples[i] - w.samples[i]) <= 1.0 / 32768.0);
  }
  CHECK(back.samples[10] == 32767.0 / 32768.0);
  CHECK(back.samples[11] == -1.0);

  // Same bytes through the independent header writer.
  std::vector<std::int16_t> raw = {0, 16384, -16384, 32767, -32768};
  write_raw_wav(dir.path / "b.wav", 1, 1, 16000, 16, pcm16(raw));
  const auto b = load_wav(dir.path / "b.wav");
  REQUIRE(b.size() == 5);
  CHECK(b.samples[1] == 0.5);
  CHECK(b.samples[2] == -0.5);
  CHECK(b.samples[4] == -1.0);
}

TEST_CASE("wav format errors are typed") {
  TempDir dir("presynth_wav_err");
  const auto data = pcm16({1, 2, 3, 4});
  write_raw_wav(dir.path / "44k.wav", 1, 1, 44100, 16, data);
  CHECK(kind_of([&] { load_wav(dir.path / "44k.wav"); }) == ErrorKind::sample_rate);
  write_raw_wav(dir.path / "stereo.wav", 1, 2, 16000, 16, data);
  CHECK(kind_of([&] { load_wav(dir.path / "stereo.wav"); }) == ErrorKind::channel_count);
  CHECK(load_wav_channels(dir.path / "stereo.wav").size() == 2);
  write_raw_wav(dir.path / "float.wav", 3, 1, 16000, 32, data);
  CHECK(kind_of([&] { load_wav(dir.path / "float.wav"); }) == ErrorKind::sample_encoding);
  write_raw_wav(dir.path / "8bit.wav", 1, 1, 16000, 8, data);
  CHECK(kind_of([&] { load_wav(dir.path / "8bit.wav"); }) == ErrorKind::sample_encoding);
  io::write_text(dir.path / "junk.wav", "this is not audio at all");
  CHECK(kind_of([&] { load_wav(dir.path / "junk.wav"); }) == ErrorKind::wav_format);
  CHECK(kind_of([&] { load_wav(dir.path / "missing.wav"); }) == ErrorKind::io);
}

TEST_CASE("mixing") {
  Rng rng(8);
  const auto clean = random_wave(rng, 1000, 0.2);
  auto m = mix(clean, clean, 0);
  CHECK(m.snr_db == doctest::Approx(0.0).epsilon(1e-12));
  for (std::size_t i = 0; i < clean.size(); ++i)
    CHECK(m.noisy.samples[i] == doctest::Approx(0.95 * 2.0 * clean.samples[i]));

  Waveform half = clean;
  for (double& v : half.samples) v *= 0.5;
  CHECK(mix(clean, half, 0).snr_db == doctest::Approx(10.0 * std::log10(4.0)));
  CHECK(mix(clean, half, 0, 0.3).snr_db == doctest::Approx(10.0 * std::log10(4.0)));

  // Wrap-around from an offset near the end of a short noise.
  Waveform noise;
  noise.samples = {1.0, 2.0, 3.0};
  Waveform c;
  c.samples.assign(7, 0.1);
  m = mix(c, noise, 2);
  const std::vector<double> expect = {3, 1, 2, 3, 1, 2, 3};
  CHECK(m.noise.samples == expect);
  CHECK(m.clipped);
  CHECK(m.noisy.samples[0] == doctest::Approx(0.95 * 3.1));

  Waveform silent;
  silent.samples.assign(100, 0.0);
  CHECK(kind_of([&] { mix(clean, silent, 0); }) == ErrorKind::degenerate_mixture);
  CHECK_THROWS_AS(mix(Waveform{}, clean, 0), Error);
}

TEST_CASE("manifest construction") {
  TempDir dir("presynth_manifest_test");
  write_corpus(dir.path, 14);
  const SplitCounts counts{10, 2, 2};
  const auto a = build_manifest(dir.path / "clean", dir.path / "noise", 7, counts);
  const auto b = build_manifest(dir.path / "clean", dir.path / "noise", 7, counts);
  CHECK(a.to_jsonl() == b.to_jsonl());
  const auto c = build_manifest(dir.path / "clean", dir.path / "noise", 8, counts);
  CHECK(a.to_jsonl() != c.to_jsonl());

  CHECK(a.split(Split::train).size() == 10);
  CHECK(a.split(Split::dev).size() == 2);
  CHECK(a.split(Split::test).size() == 2);
  std::set<std::string> ids;
  for (const auto& e : a.entries) ids.insert(e.utt_id);
  CHECK(ids.size() == 14);

  std::set<std::pair<std::string, std::uint32_t>> used;
  for (const auto& e : a.entries) {
    const auto m = materialize(e);
    CHECK(m.snr_db == doctest::Approx(e.snr_db).epsilon(1e-12));
    CHECK(std::isfinite(e.snr_db));
    used.insert({e.noise_path, e.noise_channel});
  }
  CHECK(used.size() >= 2);

  const auto parsed = Manifest::from_jsonl(a.to_jsonl());
  CHECK(parsed.seed == 7);
  CHECK(parsed.entries == a.entries);
  CHECK_THROWS_AS(Manifest::from_jsonl("{\"utt_id\": 3}\n"), Error);

  CHECK(kind_of([&] { build_manifest(dir.path / "clean", dir.path / "noise", 7, {12, 2, 2}); }) ==
        ErrorKind::insufficient_data);
  CHECK(speaker_of("low_004") == "low");
  CHECK(speaker_of("plain") == "");
}

TEST_CASE("feature preparation") {
  TempDir dir("presynth_prepare_test");
  write_corpus(dir.path, 8);
  const auto manifest = build_manifest(dir.path / "clean", dir.path / "noise", 3, {5, 2, 1});
  const FeatureStore store(dir.path / "store");
  auto report = prepare_features(manifest, store, {}, 2);
  CHECK(report.failures.empty());
  CHECK(report.written == 8);
  CHECK(report.normalizers_written);

  for (const auto& e : manifest.entries) {
    const auto in = store.load(e.split, e.utt_id, Role::noisy_input);
    const auto cin = store.load(e.split, e.utt_id, Role::clean_input);
    const auto tgt = store.load(e.split, e.utt_id, Role::target);
    const auto irm = store.load(e.split, e.utt_id, Role::irm);
    CHECK(in.cols() == 720);
    CHECK(tgt.cols() == 199);
    CHECK(irm.cols() == 80);
    CHECK(in.rows() == tgt.rows());
    CHECK(cin.rows() == tgt.rows());
    CHECK(irm.rows() == tgt.rows());
  }

  // Rerun is a no-op.
  const auto before = io::read_file(store.normalizer_path(Role::target));
  report = prepare_features(manifest, store, {}, 1);
  CHECK(report.written == 0);
  CHECK(report.skipped == 8);
  CHECK_FALSE(report.normalizers_written);

  // Statistics come from the train split only.
  const auto norm = store.normalizer(Role::target);
  CHECK(norm.is_excluded(kVuvColumn));
  std::vector<Matrix<double>> train, all;
  for (const auto& e : manifest.entries) {
    all.push_back(store.load(e.split, e.utt_id, Role::target));
    if (e.split == Split::train) train.push_back(all.back());
  }
  auto mean_col = [](const std::vector<Matrix<double>>& ms, std::size_t c) {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& m : ms)
      for (std::size_t t = 0; t < m.rows(); ++t, ++n) s += m(t, c);
    return s / static_cast<double>(n);
  };
  CHECK(norm.mean()[0] == doctest::Approx(mean_col(train, 0)).epsilon(1e-5));
  CHECK(std::abs(mean_col(all, 0) - mean_col(train, 0)) > 1e-4);

  // A changed source re-prepares that utterance only; a missing one is
  // reported without aborting the rest.
  auto edited = manifest;
  edited.entries[0].noise_offset += 100;
  const auto missing = edited.entries[1].utt_id;
  edited.entries[1].clean_path = (dir.path / "nope.wav").string();
  report = prepare_features(edited, store, {}, 1);
  CHECK(report.written == 1);
  CHECK(report.skipped == 6);
  REQUIRE(report.failures.size() == 1);
  CHECK(report.failures[0].first == missing);
  CHECK(io::read_file(store.normalizer_path(Role::target)) == before);
}

TEST_CASE("matrix files") {
  TempDir dir("presynth_pvm_test");
  Matrix<double> m(3, 4);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = 0.25 * static_cast<double>(i) - 1.0;
  save_matrix(dir.path / "m.pvm", m);
  CHECK(load_matrix(dir.path / "m.pvm") == m);
  auto bytes = io::read_file(dir.path / "m.pvm");
  bytes.pop_back();
  io::write_file(dir.path / "m.pvm", bytes);
  CHECK(kind_of([&] { load_matrix(dir.path / "m.pvm"); }) == ErrorKind::corruption);
}
