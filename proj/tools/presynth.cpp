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

// presynth: command-line front end for the speech enhancement pipeline.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "presynth/binary_io.hpp"
#include "presynth/error.hpp"
#include "presynth/kernels.hpp"
#include "presynth/pipeline.hpp"
#include "selftest.hpp"

namespace fs = std::filesystem;
using namespace presynth;

namespace {

// Exit codes. Typed errors map to kErrorBase + their ErrorKind index.
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;
constexpr int kExitSelftest = 3;
constexpr int kExitPartial = 4;  // finished, but some utterances failed
constexpr int kErrorBase = 10;

struct Globals {
  std::string config_path;
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
  std::string isa = "auto";
  std::string store;
};

// Flag values that replace config-file settings when given.
class Overrides {
 public:
  template <class T>
  void add(CLI::App* app, const std::string& flag, const std::string& help,
           std::function<void(RunConfig&, const T&)> set) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(flag, *value, help);
    fns_.push_back([value, opt, set](RunConfig& c) {
      if (opt->count() > 0) set(c, *value);
    });
  }
  void apply(RunConfig& c) const {
    for (const auto& f : fns_) f(c);
  }

 private:
  std::vector<std::function<void(RunConfig&)>> fns_;
};

void add_model_flags(CLI::App* app, Overrides& ov) {
  ov.add<std::string>(app, "--model-kind", "feedforward or recurrent",
                      [](RunConfig& c, const std::string& v) { c.model_kind = parse_model_kind(v); });
  ov.add<std::size_t>(app, "--hidden-layers", "hidden layer count (0: default for the kind)",
                      [](RunConfig& c, const std::size_t& v) { c.hidden_layers = v; });
  ov.add<std::size_t>(app, "--hidden-width", "units per hidden layer",
                      [](RunConfig& c, const std::size_t& v) { c.hidden_width = v; });
  ov.add<std::uint64_t>(app, "--model-seed", "weight initialisation seed",
                        [](RunConfig& c, const std::uint64_t& v) { c.model_seed = v; });
  ov.add<double>(app, "--learning-rate", "Adam step size (0: default for the kind)",
                 [](RunConfig& c, const double& v) { c.learning_rate = v; });
  ov.add<double>(app, "--beta1", "Adam first-moment decay", [](RunConfig& c, const double& v) { c.train.beta1 = v; });
  ov.add<double>(app, "--beta2", "Adam second-moment decay", [](RunConfig& c, const double& v) { c.train.beta2 = v; });
  ov.add<double>(app, "--epsilon", "Adam epsilon", [](RunConfig& c, const double& v) { c.train.epsilon = v; });
  ov.add<std::size_t>(app, "--batch-size", "utterances per update",
                      [](RunConfig& c, const std::size_t& v) { c.train.batch = v; });
  ov.add<std::size_t>(app, "--max-epochs", "epoch budget",
                      [](RunConfig& c, const std::size_t& v) { c.train.max_epochs = v; });
  ov.add<std::size_t>(app, "--patience", "epochs without dev improvement before stopping",
                      [](RunConfig& c, const std::size_t& v) { c.train.patience = v; });
  ov.add<std::uint64_t>(app, "--train-seed", "shuffling seed",
                        [](RunConfig& c, const std::uint64_t& v) { c.train.seed = v; });
}

RunConfig resolve(const Globals& g, const Overrides& ov) {
  RunConfig c = g.config_path.empty() ? RunConfig{} : RunConfig::load(g.config_path);
  ov.apply(c);
  c.model_config(1, 1);  // validates
  c.train_config();
  return c;
}

void print_config(const RunConfig& c) { std::cerr << "resolved config:\n" << c.to_json(); }

fs::path store_root(const Globals& g) {
  if (!g.store.empty()) return g.store;
  if (const char* env = std::getenv("PRESYNTH_STORE"); env && *env) return env;
  return "store";
}

std::string hash_of(const fs::path& file) {
  const auto bytes = io::read_file(file);
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(io::fnv1a(std::string_view(bytes.data(), bytes.size()))));
  return buf;
}

std::vector<std::size_t> parse_splits(const std::string& s) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t comma = std::min(s.find(',', pos), s.size());
    const std::string part = s.substr(pos, comma - pos);
    require(!part.empty() && part.find_first_not_of("0123456789") == std::string::npos,
            ErrorKind::invalid_argument, "--splits expects three counts like 50,10,10");
    out.push_back(std::stoul(part));
    pos = comma + 1;
  }
  require(out.size() == 3, ErrorKind::invalid_argument, "--splits expects three counts like 50,10,10");
  return out;
}

void report_failures(const std::vector<std::pair<std::string, std::string>>& failures) {
  for (const auto& [utt, msg] : failures) std::cerr << "  " << utt << ": " << msg << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parametric resynthesis speech enhancement: corpus mixing, feature preparation, "
               "training, enhancement and evaluation."};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  Globals g;
  app.add_option("--config", g.config_path, "JSON run configuration; flags override its values")
      ->check(CLI::ExistingFile);
  app.add_option("-j,--jobs", g.jobs, "worker threads (1 gives bitwise reproducible runs)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--isa", g.isa, "numeric kernels: auto, scalar or avx2")
      ->capture_default_str()
      ->check(CLI::IsMember({"auto", "scalar", "avx2"}));
  app.add_option("--store", g.store, "feature store root (else $PRESYNTH_STORE, else ./store)");

  std::function<int()> action;
  Overrides ov;

  // generate
  auto* generate = app.add_subcommand("generate", "write a synthetic desk corpus (vowel sequences and noise)");
  std::string gen_out;
  std::vector<std::string> gen_speakers{"low"};
  DeskCorpusOptions gen_opts;
  generate->add_option("--out", gen_out, "corpus directory")->required();
  generate->add_option("--speakers", gen_speakers, "voices to generate: low, high")
      ->delimiter(',')
      ->check(CLI::IsMember({"low", "high"}))
      ->capture_default_str();
  generate->add_option("--per-speaker", gen_opts.utterances_per_speaker, "utterances per voice")->capture_default_str();
  generate->add_option("--noise-files", gen_opts.noise_files, "noise recordings")->capture_default_str();
  generate->add_option("--noise-seconds", gen_opts.noise_seconds, "length of each recording")->capture_default_str();
  generate->add_option("--noise-rms", gen_opts.noise_rms, "RMS level of the noise")->capture_default_str();
  generate->add_option("--seed", gen_opts.seed, "generator seed")->capture_default_str();
  generate->callback([&] {
    action = [&] {
      for (const auto& s : gen_speakers)
        gen_opts.speakers.push_back(s == "high" ? synthetic::high_voice() : synthetic::low_voice());
      generate_desk_corpus(gen_out, gen_opts);
      std::cout << "wrote " << gen_opts.utterances_per_speaker * gen_opts.speakers.size()
                << " utterances to " << (fs::path(gen_out) / "clean").string() << " and "
                << gen_opts.noise_files << " noise files to " << (fs::path(gen_out) / "noise").string() << "\n";
      return 0;
    };
  });

  // mix
  auto* mix_cmd = app.add_subcommand("mix", "build a seeded mixture manifest from clean and noise directories");
  std::string mix_clean, mix_noise, mix_out = "manifest.jsonl", mix_splits = "50,10,10";
  std::optional<std::uint64_t> mix_seed;
  mix_cmd->add_option("--clean-dir", mix_clean, "directory of clean 16 kHz WAV files")->required()->check(CLI::ExistingDirectory);
  mix_cmd->add_option("--noise-dir", mix_noise, "directory of noise WAV files")->required()->check(CLI::ExistingDirectory);
  mix_cmd->add_option("--splits", mix_splits, "train,dev,test utterance counts")->capture_default_str();
  mix_cmd->add_option("--seed", mix_seed, "split and noise-draw seed (default: config seed)");
  mix_cmd->add_option("--out", mix_out, "manifest path")->capture_default_str();
  mix_cmd->callback([&] {
    action = [&] {
      RunConfig cfg = resolve(g, ov);
      if (mix_seed) cfg.seed = *mix_seed;
      const auto n = parse_splits(mix_splits);
      const Manifest m = build_manifest(mix_clean, mix_noise, cfg.seed, {n[0], n[1], n[2]});
      m.save(mix_out);
      write_provenance(fs::path(mix_out).string() + ".provenance.json", "mix", cfg,
                       {{"clean_dir", mix_clean}, {"noise_dir", mix_noise}, {"splits", mix_splits},
                        {"seed", std::to_string(cfg.seed)}});
      std::size_t clipped = 0;
      for (const auto& e : m.entries) clipped += e.clipped;
      std::cout << "wrote " << m.entries.size() << " mixtures to " << mix_out << "\n";
      if (clipped) std::cerr << "warning: " << clipped << " mixtures clip\n";
      return 0;
    };
  });

  // prepare
  auto* prepare = app.add_subcommand("prepare", "compute model inputs, targets and normalizers into the store");
  std::string manifest_path;
  prepare->add_option("--manifest", manifest_path, "mixture manifest")->required()->check(CLI::ExistingFile);
  prepare->callback([&] {
    action = [&] {
      const RunConfig cfg = resolve(g, ov);
      print_config(cfg);
      const FeatureStore store(store_root(g));
      const auto rep = prepare_features(Manifest::load(manifest_path), store, cfg.features, g.jobs);
      write_provenance(store.root() / "prepare.provenance.json", "prepare", cfg,
                       {{"manifest", manifest_path}, {"manifest_fnv1a", hash_of(manifest_path)}});
      std::cout << "prepared " << rep.written << " utterances, " << rep.skipped << " up to date"
                << (rep.normalizers_written ? ", normalizers refitted" : "") << "\n";
      if (!rep.failures.empty()) {
        std::cerr << rep.failures.size() << " utterances failed:\n";
        report_failures(rep.failures);
        return kExitPartial;
      }
      return 0;
    };
  });

  // train
  auto* train_cmd = app.add_subcommand("train", "train a PR, PR-clean or ratio-mask network");
  std::string role = "pr", model_out;
  bool quiet = false;
  train_cmd->add_option("--manifest", manifest_path, "mixture manifest")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--role", role, "pr (noisy input), pr_clean (clean input) or irm (mask)")
      ->capture_default_str()
      ->check(CLI::IsMember({"pr", "pr_clean", "irm"}));
  train_cmd->add_option("--out", model_out, "model directory")->required();
  train_cmd->add_flag("-q,--quiet", quiet, "no per-epoch progress");
  add_model_flags(train_cmd, ov);
  train_cmd->callback([&] {
    action = [&] {
      const RunConfig cfg = resolve(g, ov);
      print_config(cfg);
      const FeatureStore store(store_root(g));
      const auto history = train_role(Manifest::load(manifest_path), store, parse_train_role(role), cfg, g.jobs,
                                      model_out, [&](const EpochRecord& e) {
                                        if (!quiet)
                                          std::fprintf(stderr, "epoch %3zu  train %.5f  dev %.5f\n", e.epoch,
                                                       e.train_loss, e.dev_loss);
                                      });
      write_provenance(fs::path(model_out) / "provenance.json", "train", cfg,
                       {{"manifest", manifest_path},
                        {"manifest_fnv1a", hash_of(manifest_path)},
                        {"role", role},
                        {"jobs", std::to_string(g.jobs)}});
      std::cout << "best dev loss " << history.best_dev_loss() << " at epoch " << history.best_epoch << " of "
                << history.epochs.size() << (history.stopped_early ? " (stopped early)" : "") << "; saved to "
                << model_out << "\n";
      return 0;
    };
  });

  // enhance
  auto* enhance = app.add_subcommand("enhance", "write {utt_id}.{system}.wav for every test utterance");
  std::vector<std::string> systems;
  std::string enh_out, pr_model, pr_clean_model, irm_model;
  std::optional<std::string> generation;
  enhance->add_option("--manifest", manifest_path, "mixture manifest")->required()->check(CLI::ExistingFile);
  enhance->add_option("--systems", systems, "pr, pr_clean, ved, owm, dnn_irm, noisy")
      ->required()
      ->delimiter(',')
      ->check(CLI::IsMember({"pr", "pr_clean", "ved", "owm", "dnn_irm", "noisy"}));
  enhance->add_option("--out", enh_out, "output directory")->required();
  enhance->add_option("--pr-model", pr_model, "model directory for pr")->check(CLI::ExistingDirectory);
  enhance->add_option("--pr-clean-model", pr_clean_model, "model directory for pr_clean")->check(CLI::ExistingDirectory);
  enhance->add_option("--irm-model", irm_model, "model directory for dnn_irm")->check(CLI::ExistingDirectory);
  enhance->add_option("--generation", generation, "mlpg or statics (default: config)")
      ->check(CLI::IsMember({"mlpg", "statics"}));
  enhance->callback([&] {
    action = [&] {
      RunConfig cfg = resolve(g, ov);
      if (generation) cfg.generation = parse_generation(*generation);
      print_config(cfg);
      EnhanceJob job;
      for (const auto& s : systems) job.systems.push_back(parse_system(s));
      job.pr_model = pr_model;
      job.pr_clean_model = pr_clean_model;
      job.irm_model = irm_model;
      job.generation = cfg.generation;
      job.seed = cfg.seed;
      job.jobs = g.jobs;
      const auto summary = enhance_corpus(Manifest::load(manifest_path), job, enh_out);
      std::vector<std::pair<std::string, std::string>> inputs{{"manifest", manifest_path},
                                                              {"manifest_fnv1a", hash_of(manifest_path)}};
      for (const auto& [name, dir] : {std::pair{"pr_model", pr_model}, {"pr_clean_model", pr_clean_model},
                                      {"irm_model", irm_model}})
        if (!dir.empty()) {
          inputs.emplace_back(name, dir);
          inputs.emplace_back(std::string(name) + "_fnv1a", hash_of(fs::path(dir) / "model.pvc"));
        }
      write_provenance(fs::path(enh_out) / "enhance.provenance.json", "enhance", cfg, inputs);
      std::cout << "wrote " << summary.written << " files to " << enh_out << "\n";
      if (!summary.failures.empty()) {
        std::cerr << summary.failures.size() << " utterances failed:\n";
        report_failures(summary.failures);
        return kExitPartial;
      }
      return 0;
    };
  });

  // resynth
  auto* resynth = app.add_subcommand("resynth", "vocoder analysis and resynthesis of one file (VED)");
  std::string rs_in, rs_out;
  std::optional<std::uint64_t> rs_seed;
  resynth->add_option("input", rs_in, "16 kHz mono WAV")->required()->check(CLI::ExistingFile);
  resynth->add_option("output", rs_out, "output WAV")->required();
  resynth->add_option("--seed", rs_seed, "noise excitation seed (default: config seed)");
  resynth->callback([&] {
    action = [&] {
      const RunConfig cfg = resolve(g, ov);
      Waveform out = ved(load_wav(rs_in), rs_seed.value_or(cfg.seed), cfg.features.vocoder);
      limit_peak(out);
      save_wav(rs_out, out);
      std::cout << "wrote " << rs_out << "\n";
      return 0;
    };
  });

  // eval
  auto* eval = app.add_subcommand("eval", "score enhanced outputs against the clean references");
  std::string outputs_dir, reports_dir;
  bool per_speaker = false;
  eval->add_option("--manifest", manifest_path, "mixture manifest")->required()->check(CLI::ExistingFile);
  eval->add_option("--outputs", outputs_dir, "directory of {utt_id}.{system}.wav files")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--systems", systems, "system labels to score (any name used in the file names)")
      ->required()
      ->delimiter(',');
  eval->add_option("--reports", reports_dir, "directory for {system}.json and table.txt")->required();
  eval->add_flag("--per-speaker", per_speaker, "also print per-speaker rows");
  eval->callback([&] {
    action = [&] {
      const RunConfig cfg = resolve(g, ov);
      const auto reports = evaluate_corpus(Manifest::load(manifest_path), manifest_path, outputs_dir, systems,
                                           reports_dir, cfg.features.vocoder, g.jobs);
      write_provenance(fs::path(reports_dir) / "eval.provenance.json", "eval", cfg,
                       {{"manifest", manifest_path}, {"manifest_fnv1a", hash_of(manifest_path)}, {"outputs", outputs_dir}});
      std::cout << format_table(reports, per_speaker);
      bool partial = false;
      for (const auto& r : reports)
        if (!r.missing.empty()) {
          partial = true;
          std::cerr << r.system << ": " << r.missing.size() << " of " << r.expected << " outputs missing or unscorable\n";
          report_failures(r.failures);
        }
      return partial ? kExitPartial : 0;
    };
  });

  // report
  auto* report = app.add_subcommand("report", "print the table for previously written reports");
  report->add_option("--reports", reports_dir, "directory of {system}.json files")->required()->check(CLI::ExistingDirectory);
  report->add_option("--systems", systems, "systems in display order (default: all, sorted)")->delimiter(',');
  report->add_flag("--per-speaker", per_speaker, "also print per-speaker rows");
  report->callback([&] {
    action = [&] {
      std::vector<std::string> names = systems;
      if (names.empty()) {
        for (const auto& e : fs::directory_iterator(reports_dir))
          if (e.path().extension() == ".json" && e.path().stem().string().find('.') == std::string::npos)
            names.push_back(e.path().stem().string());
        std::sort(names.begin(), names.end());
      }
      require(!names.empty(), ErrorKind::insufficient_data, "report: no reports in " + reports_dir);
      std::vector<EvalReport> reports;
      for (const auto& n : names) {
        const auto bytes = io::read_file(fs::path(reports_dir) / (n + ".json"));
        reports.push_back(EvalReport::from_json(std::string(bytes.begin(), bytes.end())));
      }
      std::cout << format_table(reports, per_speaker);
      return 0;
    };
  });

  // selftest
  auto* selftest = app.add_subcommand("selftest", "run the built-in oracle checks");
  selftest->callback([&] {
    action = [] { return tools::run_selftest() == 0 ? 0 : kExitSelftest; };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (g.isa == "scalar") kernels::set_active(kernels::Isa::scalar);
    if (g.isa == "avx2") kernels::set_active(kernels::Isa::avx2);
    return action();
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return kErrorBase + static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
