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
#include <atomic>
#include <cstdio>
#include <thread>

#include "presynth/binary_io.hpp"
#include "presynth/corpus.hpp"
#include "presynth/enhance.hpp"
#include "presynth/error.hpp"

namespace presynth {
namespace {

constexpr Role kAllRoles[] = {Role::noisy_input, Role::clean_input, Role::target, Role::irm};

const char* suffix(Role r) {
  switch (r) {
    case Role::noisy_input: return "in";
    case Role::clean_input: return "cin";
    case Role::target: return "tgt";
    case Role::irm: return "irm";
  }
  return "?";
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_text_or_empty(const std::filesystem::path& p) {
  std::error_code ec;
  if (!std::filesystem::exists(p, ec)) return {};
  const auto bytes = io::read_file(p);
  return {bytes.begin(), bytes.end()};
}

std::string options_key(const FeatureOptions& o) {
  const auto& v = o.vocoder;
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "mels=%zu fmin=%.17g fmax=%.17g ctx=%zu win=%zu hop=%zu fft=%zu sr=%d "
                "f0=%.17g,%.17g vt=%.17g mcep=%zu alpha=%.17g",
                o.n_mels, o.f_min, o.f_max, o.context_radius, v.frame.window_len, v.frame.hop,
                v.frame.fft_size, v.frame.sample_rate, v.f0_floor_hz, v.f0_ceil_hz,
                v.voicing_threshold, v.mcep_order, v.alpha);
  return buf;
}

// Content stamp of one utterance: the manifest entry, the options and the
// bytes of both source files.
std::string utterance_stamp(const MixtureSpec& s, std::uint64_t seed, const FeatureOptions& o) {
  Manifest one;
  one.seed = seed;
  one.entries.push_back(s);
  std::uint64_t h = io::fnv1a(one.to_jsonl());
  h = io::fnv1a(options_key(o), h);
  for (const auto& p : {s.clean_path, s.noise_path}) {
    const auto bytes = io::read_file(p);
    h = io::fnv1a(std::string_view(bytes.data(), bytes.size()), h);
  }
  return hex(h);
}

std::filesystem::path stamp_path(const FeatureStore& store, const MixtureSpec& s) {
  return store.root() / to_string(s.split) / (s.utt_id + ".stamp");
}

void prepare_one(const MixtureSpec& s, const FeatureStore& store, const FeatureOptions& opts,
                 const MelFilterbank& fb) {
  const Mixture m = materialize(s);
  const FrameConfig& frame = opts.vocoder.frame;

  Waveform speech = m.clean, noise = m.noise;
  for (double& v : speech.samples) v *= s.gain;
  for (double& v : noise.samples) v *= s.gain;
  const Matrix<double> irm = irm_training_targets(stft(speech, frame), stft(noise, frame), fb);

  save_matrix(store.path(s.split, s.utt_id, Role::noisy_input), input_features(m.noisy, opts));
  save_matrix(store.path(s.split, s.utt_id, Role::clean_input), input_features(m.clean, opts));
  save_matrix(store.path(s.split, s.utt_id, Role::target),
              assemble_targets(analyze(m.clean, opts.vocoder)));
  save_matrix(store.path(s.split, s.utt_id, Role::irm), irm);
}

}  // namespace

const char* to_string(Role r) {
  switch (r) {
    case Role::noisy_input: return "input";
    case Role::clean_input: return "clean_input";
    case Role::target: return "target";
    case Role::irm: return "irm";
  }
  return "?";
}

void save_matrix(const std::filesystem::path& path, const Matrix<double>& m) {
  io::ByteWriter w;
  w.magic("PVM1");
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.u32(static_cast<std::uint32_t>(m.cols()));
  for (double v : m.storage()) w.f32(static_cast<float>(v));
  io::write_file(path, w.bytes());
}

Matrix<double> load_matrix(const std::filesystem::path& path) {
  io::ByteReader r(io::read_file(path), path.string());
  r.expect_magic("PVM1");
  const std::uint32_t rows = r.u32(), cols = r.u32();
  r.need(static_cast<std::size_t>(rows) * cols * 4);
  Matrix<double> m(rows, cols);
  for (double& v : m.storage()) v = r.f32();
  return m;
}

std::filesystem::path FeatureStore::path(Split split, const std::string& utt_id, Role role) const {
  return root_ / to_string(split) / (utt_id + "." + suffix(role) + ".pvm");
}

std::filesystem::path FeatureStore::normalizer_path(Role role) const {
  require(role != Role::irm, ErrorKind::invalid_argument, "mask targets are not normalised");
  return root_ / "norm" / (std::string(to_string(role)) + ".pvn");
}

Matrix<double> FeatureStore::load(Split split, const std::string& utt_id, Role role) const {
  return load_matrix(path(split, utt_id, role));
}

Normalizer FeatureStore::normalizer(Role role) const {
  return Normalizer::load(normalizer_path(role),
                          role == Role::target ? NormalizerKind::target : NormalizerKind::input);
}

Matrix<double> input_features(const Waveform& wave, const FeatureOptions& opts) {
  const FrameConfig& frame = opts.vocoder.frame;
  const MelFilterbank fb = build_mel_filterbank(opts.n_mels, frame, opts.f_min, opts.f_max);
  return stack_context(log_mel(stft(wave, frame), fb), opts.context_radius);
}

PrepareReport prepare_features(const Manifest& manifest, const FeatureStore& store,
                               const FeatureOptions& opts, std::size_t jobs) {
  const auto& entries = manifest.entries;
  const MelFilterbank fb = build_mel_filterbank(opts.n_mels, opts.vocoder.frame, opts.f_min, opts.f_max);
  for (Split s : {Split::train, Split::dev, Split::test})
    std::filesystem::create_directories(store.root() / to_string(s));

  enum class Outcome : std::uint8_t { written, skipped, failed };
  std::vector<Outcome> outcome(entries.size(), Outcome::failed);
  std::vector<std::string> stamps(entries.size()), errors(entries.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++) {
      const MixtureSpec& s = entries[i];
      try {
        stamps[i] = utterance_stamp(s, manifest.seed, opts);
        bool fresh = read_text_or_empty(stamp_path(store, s)) == stamps[i];
        for (Role r : kAllRoles) fresh = fresh && std::filesystem::exists(store.path(s.split, s.utt_id, r));
        if (fresh) {
          outcome[i] = Outcome::skipped;
          continue;
        }
        prepare_one(s, store, opts, fb);
        io::write_text(stamp_path(store, s), stamps[i]);
        outcome[i] = Outcome::written;
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(jobs, entries.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  PrepareReport report;
  bool train_ok = true;
  std::uint64_t train_hash = io::fnv1a("norm");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    switch (outcome[i]) {
      case Outcome::written: ++report.written; break;
      case Outcome::skipped: ++report.skipped; break;
      case Outcome::failed: report.failures.emplace_back(entries[i].utt_id, errors[i]); break;
    }
    if (entries[i].split == Split::train) {
      train_ok = train_ok && outcome[i] != Outcome::failed;
      train_hash = io::fnv1a(stamps[i], train_hash);
    }
  }
  const auto train = manifest.split(Split::train);
  if (!train_ok || train.empty()) return report;

  const auto norm_stamp = store.root() / "norm" / "stamp";
  bool fresh = read_text_or_empty(norm_stamp) == hex(train_hash);
  for (Role r : {Role::noisy_input, Role::clean_input, Role::target})
    fresh = fresh && std::filesystem::exists(store.normalizer_path(r));
  if (fresh) return report;

  for (Role r : {Role::noisy_input, Role::clean_input, Role::target}) {
    std::vector<Matrix<double>> mats;
    mats.reserve(train.size());
    for (const auto* s : train) mats.push_back(store.load(Split::train, s->utt_id, r));
    std::vector<const Matrix<double>*> ptrs;
    for (const auto& m : mats) ptrs.push_back(&m);
    const bool is_target = r == Role::target;
    const Normalizer norm = Normalizer::fit(
        ptrs, is_target ? NormalizerKind::target : NormalizerKind::input,
        is_target ? std::vector<std::uint32_t>{static_cast<std::uint32_t>(kVuvColumn)}
                  : std::vector<std::uint32_t>{});
    norm.save(store.normalizer_path(r));
  }
  io::write_text(norm_stamp, hex(train_hash));
  report.normalizers_written = true;
  return report;
}

}  // namespace presynth
