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

#include <atomic>
#include <cstdio>
#include <optional>
#include <thread>

#include "json.hpp"
#include "presynth/binary_io.hpp"
#include "presynth/error.hpp"
#include "presynth/pipeline.hpp"

namespace presynth {
namespace {

using nlohmann::ordered_json;

std::string read_text(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, n));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) fn(i);
  };
  if (workers == 1) {
    worker();
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t k = 0; k < workers; ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

Role input_role(TrainRole r) { return r == TrainRole::pr_clean ? Role::clean_input : Role::noisy_input; }

std::string history_json(const TrainHistory& h) {
  ordered_json j;
  j["best_epoch"] = h.best_epoch;
  j["best_dev_loss"] = h.best_dev_loss();
  j["stopped_early"] = h.stopped_early;
  ordered_json epochs = ordered_json::array();
  for (const auto& e : h.epochs)
    epochs.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"dev_loss", e.dev_loss}});
  j["epochs"] = std::move(epochs);
  return j.dump(2) + "\n";
}

struct ModelDir {
  TrainRole role;
  RunConfig config;
};

ModelDir read_model_dir(const std::filesystem::path& dir) {
  const auto path = dir / "config.json";
  try {
    const auto j = ordered_json::parse(read_text(path));
    return {parse_train_role(j.at("role").get<std::string>()),
            RunConfig::from_json(j.at("config").dump(), path.string())};
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::corruption, path.string() + ": " + e.what());
  }
}

}  // namespace

void generate_desk_corpus(const std::filesystem::path& dir, const DeskCorpusOptions& opts) {
  require(opts.utterances_per_speaker > 0 && opts.noise_files > 0, ErrorKind::invalid_argument,
          "generate: need at least one utterance and one noise file");
  const auto speakers = opts.speakers.empty() ? std::vector{synthetic::low_voice()} : opts.speakers;
  std::filesystem::create_directories(dir / "clean");
  std::filesystem::create_directories(dir / "noise");
  Rng rng(opts.seed);
  synthetic::UtteranceOptions utt;
  utt.amplitude = opts.speech_rms;
  for (const auto& spk : speakers) {
    require(!spk.name.empty() && spk.name.find('_') == std::string::npos, ErrorKind::invalid_argument,
            "generate: speaker names must be non-empty and free of '_'");
    for (std::size_t i = 0; i < opts.utterances_per_speaker; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "_%03zu.wav", i);
      save_wav(dir / "clean" / (spk.name + name), synthetic::vowel_sequence(rng, spk, utt));
    }
  }
  const synthetic::NoiseColor colors[] = {synthetic::NoiseColor::white, synthetic::NoiseColor::pink,
                                          synthetic::NoiseColor::lowpass, synthetic::NoiseColor::modulated};
  for (std::size_t k = 0; k < opts.noise_files; ++k)
    save_wav(dir / "noise" / ("noise_" + std::to_string(k) + ".wav"),
             synthetic::noise(rng, opts.noise_seconds, colors[k % 4], opts.noise_rms));
}

const char* to_string(TrainRole r) {
  switch (r) {
    case TrainRole::pr: return "pr";
    case TrainRole::pr_clean: return "pr_clean";
    case TrainRole::irm: return "irm";
  }
  return "?";
}

TrainRole parse_train_role(const std::string& s) {
  for (auto r : {TrainRole::pr, TrainRole::pr_clean, TrainRole::irm})
    if (s == to_string(r)) return r;
  fail(ErrorKind::invalid_argument, "unknown training role '" + s + "' (pr, pr_clean, irm)");
}

Dataset<float> load_dataset(const Manifest& manifest, const FeatureStore& store, Split split,
                            TrainRole role) {
  const Normalizer in_norm = store.normalizer(input_role(role));
  const bool vocoder_targets = role != TrainRole::irm;
  const Normalizer tgt_norm = vocoder_targets ? store.normalizer(Role::target) : Normalizer{};
  Dataset<float> d;
  for (const auto* s : manifest.split(split)) {
    d.inputs.push_back(matrix_cast<float>(in_norm.applied(store.load(split, s->utt_id, input_role(role)))));
    Matrix<double> t = store.load(split, s->utt_id, vocoder_targets ? Role::target : Role::irm);
    if (vocoder_targets) tgt_norm.apply(t);
    d.targets.push_back(matrix_cast<float>(t));
  }
  return d;
}

TrainHistory train_role(const Manifest& manifest, const FeatureStore& store, TrainRole role,
                        const RunConfig& cfg, std::size_t jobs,
                        const std::filesystem::path& model_dir,
                        const std::function<void(const EpochRecord&)>& on_epoch) {
  const Dataset<float> train_set = load_dataset(manifest, store, Split::train, role);
  const Dataset<float> dev_set = load_dataset(manifest, store, Split::dev, role);
  require(train_set.size() > 0, ErrorKind::insufficient_data, "train: the manifest has no train utterances");
  require(dev_set.size() > 0, ErrorKind::insufficient_data, "train: the manifest has no dev utterances");

  const std::size_t in_dim = train_set.inputs.front().cols();
  const std::size_t out_dim = train_set.targets.front().cols();
  const std::size_t expected_in = cfg.features.n_mels * (2 * cfg.features.context_radius + 1);
  require(in_dim == expected_in, ErrorKind::config_mismatch,
          "train: store features have " + std::to_string(in_dim) + " columns, the config implies " +
              std::to_string(expected_in));
  ModelConfig mc = cfg.model_config(in_dim, out_dim);
  if (role == TrainRole::irm) mc.output = OutputActivation::sigmoid;
  TrainConfig tc = cfg.train_config();
  tc.jobs = jobs;

  TrainResult<float> result = train(mc, tc, train_set, dev_set, on_epoch);

  std::filesystem::create_directories(model_dir);
  save_checkpoint(result.model, model_dir / "model.pvc");
  store.normalizer(input_role(role)).save(model_dir / "input.pvn");
  if (role != TrainRole::irm) store.normalizer(Role::target).save(model_dir / "target.pvn");
  io::write_text(model_dir / "history.json", history_json(result.history));
  ordered_json j;
  j["role"] = to_string(role);
  j["config"] = ordered_json::parse(cfg.to_json());
  io::write_text(model_dir / "config.json", j.dump(2) + "\n");
  return result.history;
}

TrainRole model_role(const std::filesystem::path& model_dir) { return read_model_dir(model_dir).role; }

PrModel load_pr_model(const std::filesystem::path& model_dir) {
  const ModelDir md = read_model_dir(model_dir);
  require(md.role != TrainRole::irm, ErrorKind::config_mismatch,
          model_dir.string() + " holds a mask model, not a parametric resynthesis model");
  PrModel pr{load_checkpoint<float>(model_dir / "model.pvc"),
             Normalizer::load(model_dir / "input.pvn", NormalizerKind::input),
             Normalizer::load(model_dir / "target.pvn", NormalizerKind::target), md.config.features};
  pr.validate();
  return pr;
}

MaskModel load_mask_model(const std::filesystem::path& model_dir) {
  const ModelDir md = read_model_dir(model_dir);
  require(md.role == TrainRole::irm, ErrorKind::config_mismatch,
          model_dir.string() + " holds a parametric resynthesis model, not a mask model");
  MaskModel mm{load_checkpoint<float>(model_dir / "model.pvc"),
               Normalizer::load(model_dir / "input.pvn", NormalizerKind::input), md.config.features};
  mm.validate();
  return mm;
}

std::uint64_t utterance_seed(std::uint64_t seed, const std::string& utt_id) {
  return io::fnv1a(utt_id, io::fnv1a(std::to_string(seed)));
}

EnhanceSummary enhance_corpus(const Manifest& manifest, const EnhanceJob& job,
                              const std::filesystem::path& out_dir) {
  require(!job.systems.empty(), ErrorKind::invalid_argument, "enhance: no systems selected");
  std::optional<PrModel> pr, pr_clean;
  std::optional<MaskModel> irm;
  for (SystemKind k : job.systems) {
    auto need = [&](const std::filesystem::path& p, const char* flag) {
      require(!p.empty(), ErrorKind::invalid_argument,
              std::string("enhance: system '") + to_string(k) + "' needs " + flag);
    };
    if (k == SystemKind::pr && !pr) {
      need(job.pr_model, "a PR model");
      pr = load_pr_model(job.pr_model);
    } else if (k == SystemKind::pr_clean && !pr_clean) {
      need(job.pr_clean_model, "a PR-clean model");
      pr_clean = load_pr_model(job.pr_clean_model);
    } else if (k == SystemKind::dnn_irm && !irm) {
      need(job.irm_model, "a mask model");
      irm = load_mask_model(job.irm_model);
    }
  }
  std::filesystem::create_directories(out_dir);

  const auto tests = manifest.split(Split::test);
  std::vector<std::size_t> written(tests.size(), 0);
  std::vector<std::string> errors(tests.size());
  parallel_for(tests.size(), job.jobs, [&](std::size_t i) {
    const MixtureSpec& s = *tests[i];
    try {
      const Mixture m = materialize(s);
      const std::uint64_t seed = utterance_seed(job.seed, s.utt_id);
      for (SystemKind k : job.systems) {
        Waveform out;
        switch (k) {
          case SystemKind::pr: out = pr_enhance(*pr, m.noisy, job.generation, seed); break;
          case SystemKind::pr_clean: out = pr_enhance(*pr_clean, m.clean, job.generation, seed); break;
          case SystemKind::ved: out = ved(m.clean, seed); break;
          case SystemKind::dnn_irm: out = dnn_irm_enhance(*irm, m.noisy); break;
          case SystemKind::noisy_passthrough: out = m.noisy; break;
          case SystemKind::owm: {
            Waveform speech = m.clean, noise = m.noise;
            for (double& v : speech.samples) v *= s.gain;
            for (double& v : noise.samples) v *= s.gain;
            out = owm_enhance(speech, noise, m.noisy);
            break;
          }
        }
        limit_peak(out);
        save_wav(out_dir / (s.utt_id + "." + to_string(k) + ".wav"), out);
        ++written[i];
      }
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  EnhanceSummary summary;
  for (std::size_t i = 0; i < tests.size(); ++i) {
    summary.written += written[i];
    if (!errors[i].empty()) summary.failures.emplace_back(tests[i]->utt_id, errors[i]);
  }
  return summary;
}

std::vector<EvalReport> evaluate_corpus(const Manifest& manifest, const std::string& manifest_ref,
                                        const std::filesystem::path& outputs_dir,
                                        const std::vector<std::string>& systems,
                                        const std::filesystem::path& report_dir,
                                        const VocoderConfig& vocoder, std::size_t jobs) {
  std::vector<EvalReport> reports;
  std::filesystem::create_directories(report_dir);
  for (const auto& system : systems) {
    reports.push_back(evaluate_system(manifest, manifest_ref, outputs_dir, system, vocoder, jobs));
    io::write_text(report_dir / (system + ".json"), reports.back().to_json());
  }
  io::write_text(report_dir / "table.txt", format_table(reports, false));
  io::write_text(report_dir / "table_speakers.txt", format_table(reports, true));
  return reports;
}

}  // namespace presynth
