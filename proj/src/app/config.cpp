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

#include <set>

#include "json.hpp"
#include "presynth/binary_io.hpp"
#include "presynth/error.hpp"
#include "presynth/kernels.hpp"
#include "presynth/pipeline.hpp"

#ifndef PRESYNTH_VERSION
#define PRESYNTH_VERSION "0.0.0"
#endif
#ifndef PRESYNTH_GIT_REVISION
#define PRESYNTH_GIT_REVISION "unknown"
#endif

namespace presynth {
namespace {

using nlohmann::ordered_json;

// Rejects keys the schema does not know, which catches misspelt settings.
void check_keys(const ordered_json& j, const std::set<std::string>& known, const std::string& where) {
  require(j.is_object(), ErrorKind::invalid_argument, where + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    require(known.count(key) > 0, ErrorKind::invalid_argument, where + ": unknown key '" + key + "'");
}

template <class T>
void read(const ordered_json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

const char* to_string(GenerationMode m) { return m == GenerationMode::mlpg ? "mlpg" : "statics"; }

GenerationMode parse_generation(const std::string& s) {
  if (s == "mlpg") return GenerationMode::mlpg;
  if (s == "statics") return GenerationMode::statics;
  fail(ErrorKind::invalid_argument, "unknown generation mode '" + s + "' (mlpg, statics)");
}

ModelConfig RunConfig::model_config(std::size_t input_dim, std::size_t output_dim) const {
  ModelConfig mc = ModelConfig::defaults(model_kind, input_dim, output_dim);
  if (hidden_layers > 0) mc.hidden_layers = hidden_layers;
  mc.hidden_width = hidden_width;
  mc.seed = model_seed;
  mc.validate();
  return mc;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig tc = train;
  tc.learning_rate = learning_rate > 0.0 ? learning_rate : TrainConfig::defaults(model_kind).learning_rate;
  tc.validate();
  return tc;
}

std::string RunConfig::to_json() const {
  const VocoderConfig& v = features.vocoder;
  ordered_json j;
  j["seed"] = seed;
  j["generation"] = to_string(generation);
  j["features"] = {
      {"n_mels", features.n_mels},
      {"f_min", features.f_min},
      {"f_max", features.f_max},
      {"context_radius", features.context_radius},
      {"frame", {{"window_len", v.frame.window_len}, {"hop", v.frame.hop}, {"fft_size", v.frame.fft_size}}},
      {"vocoder",
       {{"f0_floor_hz", v.f0_floor_hz},
        {"f0_ceil_hz", v.f0_ceil_hz},
        {"voicing_threshold", v.voicing_threshold},
        {"alpha", v.alpha}}}};
  j["model"] = {{"kind", presynth::to_string(model_kind)},
                {"hidden_layers", hidden_layers},
                {"hidden_width", hidden_width},
                {"seed", model_seed}};
  j["train"] = {{"learning_rate", learning_rate},
                {"beta1", train.beta1},
                {"beta2", train.beta2},
                {"epsilon", train.epsilon},
                {"batch_size", train.batch},
                {"max_epochs", train.max_epochs},
                {"patience", train.patience},
                {"seed", train.seed}};
  return j.dump(2) + "\n";
}

RunConfig RunConfig::from_json(const std::string& text, const std::string& source) {
  RunConfig c;
  try {
    const auto j = ordered_json::parse(text);
    check_keys(j, {"seed", "generation", "features", "model", "train"}, source);
    read(j, "seed", c.seed);
    if (j.contains("generation")) c.generation = parse_generation(j.at("generation").get<std::string>());
    if (j.contains("features")) {
      const auto& f = j.at("features");
      check_keys(f, {"n_mels", "f_min", "f_max", "context_radius", "frame", "vocoder"}, source + ": features");
      read(f, "n_mels", c.features.n_mels);
      read(f, "f_min", c.features.f_min);
      read(f, "f_max", c.features.f_max);
      read(f, "context_radius", c.features.context_radius);
      VocoderConfig& v = c.features.vocoder;
      if (f.contains("frame")) {
        const auto& fr = f.at("frame");
        check_keys(fr, {"window_len", "hop", "fft_size"}, source + ": features.frame");
        read(fr, "window_len", v.frame.window_len);
        read(fr, "hop", v.frame.hop);
        read(fr, "fft_size", v.frame.fft_size);
      }
      if (f.contains("vocoder")) {
        const auto& vo = f.at("vocoder");
        check_keys(vo, {"f0_floor_hz", "f0_ceil_hz", "voicing_threshold", "alpha"}, source + ": features.vocoder");
        read(vo, "f0_floor_hz", v.f0_floor_hz);
        read(vo, "f0_ceil_hz", v.f0_ceil_hz);
        read(vo, "voicing_threshold", v.voicing_threshold);
        read(vo, "alpha", v.alpha);
      }
    }
    if (j.contains("model")) {
      const auto& m = j.at("model");
      check_keys(m, {"kind", "hidden_layers", "hidden_width", "seed"}, source + ": model");
      if (m.contains("kind")) c.model_kind = parse_model_kind(m.at("kind").get<std::string>());
      read(m, "hidden_layers", c.hidden_layers);
      read(m, "hidden_width", c.hidden_width);
      read(m, "seed", c.model_seed);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      check_keys(t, {"learning_rate", "beta1", "beta2", "epsilon", "batch_size", "max_epochs", "patience", "seed"},
                 source + ": train");
      read(t, "learning_rate", c.learning_rate);
      read(t, "beta1", c.train.beta1);
      read(t, "beta2", c.train.beta2);
      read(t, "epsilon", c.train.epsilon);
      read(t, "batch_size", c.train.batch);
      read(t, "max_epochs", c.train.max_epochs);
      read(t, "patience", c.train.patience);
      read(t, "seed", c.train.seed);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::invalid_argument, source + ": " + e.what());
  }
  c.features.vocoder.frame.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  return from_json(std::string(bytes.begin(), bytes.end()), path.string());
}

std::string code_version() { return std::string(PRESYNTH_VERSION) + "+" + PRESYNTH_GIT_REVISION; }

void write_provenance(const std::filesystem::path& file, const std::string& command,
                      const RunConfig& cfg,
                      const std::vector<std::pair<std::string, std::string>>& inputs) {
  ordered_json j;
  j["command"] = command;
  j["version"] = code_version();
  j["kernels"] = std::string(kernels::name(kernels::active()));
  ordered_json in = ordered_json::object();
  for (const auto& [k, v] : inputs) in[k] = v;
  j["inputs"] = in;
  j["config"] = ordered_json::parse(cfg.to_json());
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  io::write_text(file, j.dump(2) + "\n");
}

}  // namespace presynth
