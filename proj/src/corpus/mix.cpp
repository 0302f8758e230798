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
#include <map>

#include "presynth/binary_io.hpp"
#include "presynth/corpus.hpp"
#include "presynth/error.hpp"
#include "presynth/random.hpp"

#include "json.hpp"

namespace presynth {
namespace {

using nlohmann::json;

std::vector<std::filesystem::path> wav_files(const std::filesystem::path& dir) {
  require(std::filesystem::is_directory(dir), ErrorKind::io, dir.string() + " is not a directory");
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".wav") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

json to_json(const MixtureSpec& s, std::uint64_t seed) {
  return json{{"utt_id", s.utt_id},           {"split", to_string(s.split)},
              {"clean_path", s.clean_path},   {"noise_path", s.noise_path},
              {"noise_channel", s.noise_channel}, {"noise_offset", s.noise_offset},
              {"gain", s.gain},               {"snr_db", s.snr_db},
              {"clipped", s.clipped},         {"seed", seed}};
}

}  // namespace

Mixture mix(const Waveform& clean, const Waveform& noise, std::size_t offset, double gain) {
  require(!clean.empty(), ErrorKind::invalid_argument, "mix: empty clean signal");
  require(!noise.empty(), ErrorKind::invalid_argument, "mix: empty noise signal");
  require(clean.sample_rate == kSampleRate && noise.sample_rate == kSampleRate,
          ErrorKind::sample_rate, "mix: both signals must be 16 kHz");
  require(gain > 0.0, ErrorKind::invalid_argument, "mix: gain must be positive");

  Mixture m;
  m.clean = clean;
  m.noise.samples.resize(clean.size());
  const std::size_t n = noise.size();
  std::size_t pos = offset % n;
  for (double& v : m.noise.samples) {
    v = noise.samples[pos];
    if (++pos == n) pos = 0;
  }
  double es = 0.0, en = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    es += clean.samples[i] * clean.samples[i];
    en += m.noise.samples[i] * m.noise.samples[i];
  }
  require(en > 0.0, ErrorKind::degenerate_mixture, "mix: noise segment is silent (infinite SNR)");
  require(es > 0.0, ErrorKind::degenerate_mixture, "mix: clean signal is silent (SNR is -inf)");
  m.snr_db = 10.0 * std::log10(es / en);

  m.noisy.samples.resize(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const double v = gain * (clean.samples[i] + m.noise.samples[i]);
    m.noisy.samples[i] = v;
    if (std::abs(v) > 1.0) m.clipped = true;
  }
  return m;
}

const char* to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "dev") return Split::dev;
  if (s == "test") return Split::test;
  fail(ErrorKind::invalid_argument, "unknown split '" + s + "'");
}

std::string speaker_of(const std::string& utt_id) {
  const auto p = utt_id.find('_');
  return p == std::string::npos ? std::string() : utt_id.substr(0, p);
}

std::vector<const MixtureSpec*> Manifest::split(Split s) const {
  std::vector<const MixtureSpec*> out;
  for (const auto& e : entries)
    if (e.split == s) out.push_back(&e);
  return out;
}

std::string Manifest::to_jsonl() const {
  std::string out;
  for (const auto& e : entries) {
    out += to_json(e, seed).dump();
    out += '\n';
  }
  return out;
}

Manifest Manifest::from_jsonl(const std::string& text, const std::string& source) {
  Manifest m;
  std::size_t line_no = 0, start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      MixtureSpec s;
      s.utt_id = j.at("utt_id").get<std::string>();
      s.split = parse_split(j.at("split").get<std::string>());
      s.clean_path = j.at("clean_path").get<std::string>();
      s.noise_path = j.at("noise_path").get<std::string>();
      s.noise_channel = j.at("noise_channel").get<std::uint32_t>();
      s.noise_offset = j.at("noise_offset").get<std::uint64_t>();
      s.gain = j.at("gain").get<double>();
      s.snr_db = j.at("snr_db").get<double>();
      s.clipped = j.value("clipped", false);
      m.seed = j.value("seed", m.seed);
      m.entries.push_back(std::move(s));
    } catch (const json::exception& e) {
      fail(ErrorKind::corruption, source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  std::map<std::string, int> seen;
  for (const auto& e : m.entries)
    require(seen[e.utt_id]++ == 0, ErrorKind::corruption, source + ": duplicate utt_id " + e.utt_id);
  return m;
}

void Manifest::save(const std::filesystem::path& path) const { io::write_text(path, to_jsonl()); }

Manifest Manifest::load(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  return from_jsonl(std::string(bytes.begin(), bytes.end()), path.string());
}

Manifest build_manifest(const std::filesystem::path& clean_dir,
                        const std::filesystem::path& noise_dir, std::uint64_t seed,
                        const SplitCounts& counts) {
  const auto clean = wav_files(clean_dir);
  const auto noise_files = wav_files(noise_dir);
  require(clean.size() >= counts.total(), ErrorKind::insufficient_data,
          "build_manifest: " + std::to_string(counts.total()) + " utterances requested, " +
              std::to_string(clean.size()) + " clean files in " + clean_dir.string());
  require(counts.total() > 0, ErrorKind::invalid_argument, "build_manifest: all split counts are zero");

  // Every channel of every noise file is a separate recording.
  struct Recording {
    std::string path;
    std::uint32_t channel;
    Waveform wave;
  };
  std::vector<Recording> noise;
  for (const auto& p : noise_files) {
    auto channels = load_wav_channels(p);
    for (std::size_t c = 0; c < channels.size(); ++c)
      if (!channels[c].empty())
        noise.push_back({p.generic_string(), static_cast<std::uint32_t>(c), std::move(channels[c])});
  }
  require(!noise.empty(), ErrorKind::insufficient_data,
          "build_manifest: no noise recordings in " + noise_dir.string());

  Rng rng(seed);
  std::vector<std::size_t> order(clean.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(std::span<std::size_t>(order));

  Manifest m;
  m.seed = seed;
  const std::size_t bounds[3] = {counts.train, counts.train + counts.dev, counts.total()};
  for (std::size_t i = 0; i < counts.total(); ++i) {
    MixtureSpec s;
    s.split = i < bounds[0] ? Split::train : i < bounds[1] ? Split::dev : Split::test;
    s.clean_path = clean[order[i]].generic_string();
    s.utt_id = clean[order[i]].stem().string();
    m.entries.push_back(std::move(s));
  }
  std::stable_sort(m.entries.begin(), m.entries.end(), [](const MixtureSpec& a, const MixtureSpec& b) {
    if (a.split != b.split) return a.split < b.split;
    return a.utt_id < b.utt_id;
  });
  for (auto& s : m.entries) {
    const Recording& r = noise[rng.below(noise.size())];
    s.noise_path = r.path;
    s.noise_channel = r.channel;
    s.noise_offset = rng.below(r.wave.size());
    const Mixture mx = mix(load_wav(s.clean_path), r.wave, s.noise_offset, s.gain);
    s.snr_db = mx.snr_db;
    s.clipped = mx.clipped;
  }
  return m;
}

Mixture materialize(const MixtureSpec& spec) {
  const Waveform clean = load_wav(spec.clean_path);
  auto channels = load_wav_channels(spec.noise_path);
  require(spec.noise_channel < channels.size(), ErrorKind::invalid_argument,
          spec.noise_path + ": no channel " + std::to_string(spec.noise_channel));
  return mix(clean, channels[spec.noise_channel], spec.noise_offset, spec.gain);
}

}  // namespace presynth
