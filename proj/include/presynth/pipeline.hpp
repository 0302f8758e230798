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

// Corpus-level workflow shared by the command-line tool and the acceptance
// runner: desk corpus generation, run configuration, training from the
// feature store, batch enhancement and evaluation.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "presynth/corpus.hpp"
#include "presynth/enhance.hpp"
#include "presynth/metrics.hpp"
#include "presynth/nnet.hpp"
#include "presynth/synthetic.hpp"

namespace presynth {

const char* to_string(GenerationMode m);
GenerationMode parse_generation(const std::string& s);

/// Resolved settings for a run. Loaded from JSON; anything absent keeps its
/// default.
struct RunConfig {
  FeatureOptions features;
  ModelKind model_kind = ModelKind::feedforward;
  std::size_t hidden_layers = 0;  // 0: default for the kind
  std::size_t hidden_width = 512;
  std::uint64_t model_seed = 1;
  TrainConfig train;             // jobs is a runtime flag, not part of the config
  double learning_rate = 0.0;    // 0: default for the model kind
  GenerationMode generation = GenerationMode::mlpg;
  std::uint64_t seed = 1;  // mixing and synthesis

  ModelConfig model_config(std::size_t input_dim, std::size_t output_dim) const;
  TrainConfig train_config() const;

  std::string to_json() const;
  static RunConfig from_json(const std::string& text, const std::string& source = "config");
  static RunConfig load(const std::filesystem::path& path);
};

/// Version string compiled into the binaries.
std::string code_version();

/// Writes a provenance record: command, resolved config, inputs and code
/// version. No timestamps, so reruns produce the same bytes.
void write_provenance(const std::filesystem::path& file, const std::string& command,
                      const RunConfig& cfg,
                      const std::vector<std::pair<std::string, std::string>>& inputs);

struct DeskCorpusOptions {
  std::vector<synthetic::SpeakerProfile> speakers;  // empty: low voice only
  std::size_t utterances_per_speaker = 70;
  double speech_rms = 0.08;  // voiced-segment level; keeps peaks well below full scale
  std::size_t noise_files = 4;
  double noise_seconds = 8.0;
  double noise_rms = 0.05;
  std::uint64_t seed = 1;
};

/// Writes `{dir}/clean/{speaker}_{nnn}.wav` and `{dir}/noise/noise_{k}.wav`
/// (one recording per file, colours cycling white/pink/lowpass/modulated).
void generate_desk_corpus(const std::filesystem::path& dir, const DeskCorpusOptions& opts);

/// What a trained network maps from and to.
enum class TrainRole {
  pr,        // noisy log-mel -> vocoder targets
  pr_clean,  // clean log-mel -> vocoder targets
  irm        // noisy log-mel -> mel ratio mask
};
const char* to_string(TrainRole r);
TrainRole parse_train_role(const std::string& s);

/// Normalized inputs and targets of one split, in manifest order.
Dataset<float> load_dataset(const Manifest& manifest, const FeatureStore& store, Split split,
                            TrainRole role);

/// Trains on the train split with early stopping on dev, then writes
/// `model.pvc`, the normalizers, `history.json` and `config.json` to
/// `model_dir`.
TrainHistory train_role(const Manifest& manifest, const FeatureStore& store, TrainRole role,
                        const RunConfig& cfg, std::size_t jobs,
                        const std::filesystem::path& model_dir,
                        const std::function<void(const EpochRecord&)>& on_epoch = {});

TrainRole model_role(const std::filesystem::path& model_dir);
PrModel load_pr_model(const std::filesystem::path& model_dir);
MaskModel load_mask_model(const std::filesystem::path& model_dir);

/// Synthesis seed for one utterance; independent of processing order.
std::uint64_t utterance_seed(std::uint64_t seed, const std::string& utt_id);

struct EnhanceJob {
  std::vector<SystemKind> systems;
  std::filesystem::path pr_model, pr_clean_model, irm_model;
  GenerationMode generation = GenerationMode::mlpg;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
};

struct EnhanceSummary {
  std::size_t written = 0;
  std::vector<std::pair<std::string, std::string>> failures;  // utt_id, message
};

/// Writes `{out_dir}/{utt_id}.{system}.wav` for every test utterance.
EnhanceSummary enhance_corpus(const Manifest& manifest, const EnhanceJob& job,
                              const std::filesystem::path& out_dir);

/// Evaluates each system and writes `{report_dir}/{system}.json` plus
/// `table.txt` and `table_speakers.txt`.
std::vector<EvalReport> evaluate_corpus(const Manifest& manifest, const std::string& manifest_ref,
                                        const std::filesystem::path& outputs_dir,
                                        const std::vector<std::string>& systems,
                                        const std::filesystem::path& report_dir,
                                        const VocoderConfig& vocoder, std::size_t jobs);

}  // namespace presynth
