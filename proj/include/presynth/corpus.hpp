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

// WAV I/O, noisy-mixture synthesis, manifests and the on-disk feature store.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "presynth/dsp.hpp"
#include "presynth/features.hpp"
#include "presynth/matrix.hpp"

namespace presynth {

/// 16-bit PCM, mono, 16 kHz. Anything else is rejected with a typed error.
Waveform load_wav(const std::filesystem::path& path);
/// Every channel of a 16-bit PCM 16 kHz file, each as its own waveform.
std::vector<Waveform> load_wav_channels(const std::filesystem::path& path);
/// Scales by 32768 with rounding and saturation.
void save_wav(const std::filesystem::path& path, const Waveform& wave);

struct Mixture {
  Waveform clean;  // unscaled
  Waveform noisy;
  Waveform noise;  // the unscaled noise segment actually used
  double snr_db = 0.0;
  bool clipped = false;
};

inline constexpr double kMixGain = 0.95;

/// noisy = gain * clean + gain * noise[offset ...], the noise read cyclically.
Mixture mix(const Waveform& clean, const Waveform& noise, std::size_t offset,
            double gain = kMixGain);

enum class Split { train, dev, test };
const char* to_string(Split s);
Split parse_split(const std::string& s);

struct MixtureSpec {
  std::string utt_id;
  Split split = Split::train;
  std::string clean_path;
  std::string noise_path;
  std::uint32_t noise_channel = 0;
  std::uint64_t noise_offset = 0;
  double gain = kMixGain;
  double snr_db = 0.0;
  bool clipped = false;

  friend bool operator==(const MixtureSpec&, const MixtureSpec&) = default;
};

/// Speaker label: the utt_id prefix before the first '_', or "" if none.
std::string speaker_of(const std::string& utt_id);

struct SplitCounts {
  std::size_t train = 0, dev = 0, test = 0;
  std::size_t total() const { return train + dev + test; }
};

struct Manifest {
  std::uint64_t seed = 0;
  std::vector<MixtureSpec> entries;

  std::vector<const MixtureSpec*> split(Split s) const;
  /// One JSON object per entry and line; each line also carries the seed.
  std::string to_jsonl() const;
  static Manifest from_jsonl(const std::string& text, const std::string& source = "manifest");
  void save(const std::filesystem::path& path) const;
  static Manifest load(const std::filesystem::path& path);
};

/// Seeded split of the sorted clean files and seeded choice of noise
/// recording (file, channel) and offset for every utterance.
Manifest build_manifest(const std::filesystem::path& clean_dir,
                        const std::filesystem::path& noise_dir, std::uint64_t seed,
                        const SplitCounts& counts);

/// Rebuilds the mixture an entry describes.
Mixture materialize(const MixtureSpec& spec);

// "PVM1", u32 rows, u32 cols, f32 row-major.
void save_matrix(const std::filesystem::path& path, const Matrix<double>& m);
Matrix<double> load_matrix(const std::filesystem::path& path);

struct FeatureOptions {
  std::size_t n_mels = 80;
  double f_min = 0.0;
  double f_max = 8000.0;
  std::size_t context_radius = kContextRadius;
  VocoderConfig vocoder;
};

/// Per-utterance roles in the store.
enum class Role {
  noisy_input,   // context-stacked noisy log-mel
  clean_input,   // context-stacked clean log-mel
  target,        // 199-column vocoder targets of the clean speech
  irm            // mel-band ratio mask targets
};
const char* to_string(Role r);

/// Directory layout: {root}/{split}/{utt_id}.{in,cin,tgt,irm}.pvm plus
/// {root}/norm/{input,clean_input,target}.pvn.
class FeatureStore {
 public:
  explicit FeatureStore(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path path(Split split, const std::string& utt_id, Role role) const;
  std::filesystem::path normalizer_path(Role role) const;
  Matrix<double> load(Split split, const std::string& utt_id, Role role) const;
  Normalizer normalizer(Role role) const;

 private:
  std::filesystem::path root_;
};

struct PrepareReport {
  std::size_t written = 0;
  std::size_t skipped = 0;  // already up to date
  bool normalizers_written = false;
  std::vector<std::pair<std::string, std::string>> failures;  // utt_id, message
};

/// Computes every role for every entry, then fits the normalizers on the
/// train split only. Utterances whose content stamp is unchanged are skipped.
PrepareReport prepare_features(const Manifest& manifest, const FeatureStore& store,
                               const FeatureOptions& opts = {}, std::size_t jobs = 1);

/// The model-input features of one waveform (log-mel, context-stacked).
Matrix<double> input_features(const Waveform& wave, const FeatureOptions& opts = {});

}  // namespace presynth
