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
#include <sstream>
#include <thread>

#include "json.hpp"
#include "presynth/error.hpp"
#include "presynth/metrics.hpp"

namespace presynth {
namespace {

using nlohmann::ordered_json;

ordered_json means_json(const ScoreMeans& m) {
  ordered_json j;
  j["count"] = m.count;
  j["mcd_db"] = m.mcd_db;
  j["bapd_db"] = m.bapd_db;
  j["f0_count"] = m.f0_count;
  j["f0_rmse_hz"] = m.f0_count ? ordered_json(m.f0_rmse_hz) : ordered_json(nullptr);
  j["f0_corr"] = m.f0_count ? ordered_json(m.f0_corr) : ordered_json(nullptr);
  j["vuv_pct"] = m.vuv_pct;
  j["stoi"] = m.stoi;
  j["snr_db"] = m.snr_db;
  return j;
}

std::string cell(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace

ScoreMeans mean_of(const std::vector<UtteranceScores>& rows) {
  ScoreMeans m;
  for (const auto& r : rows) {
    ++m.count;
    m.mcd_db += r.mcd_db;
    m.bapd_db += r.bapd_db;
    m.vuv_pct += r.vuv_pct;
    m.stoi += r.stoi;
    m.snr_db += r.snr_db;
    if (r.f0_defined) {
      ++m.f0_count;
      m.f0_rmse_hz += r.f0_rmse_hz;
      m.f0_corr += r.f0_corr;
    }
  }
  if (m.count) {
    const double n = static_cast<double>(m.count);
    m.mcd_db /= n;
    m.bapd_db /= n;
    m.vuv_pct /= n;
    m.stoi /= n;
    m.snr_db /= n;
  }
  if (m.f0_count) {
    m.f0_rmse_hz /= static_cast<double>(m.f0_count);
    m.f0_corr /= static_cast<double>(m.f0_count);
  }
  return m;
}

std::map<std::string, ScoreMeans> EvalReport::by_speaker() const {
  std::map<std::string, std::vector<UtteranceScores>> groups;
  for (const auto& r : rows) groups[r.speaker].push_back(r);
  std::map<std::string, ScoreMeans> out;
  for (const auto& [spk, g] : groups) out[spk] = mean_of(g);
  return out;
}

std::string EvalReport::to_json() const {
  ordered_json j;
  j["system"] = system;
  j["manifest"] = manifest;
  j["expected"] = expected;
  j["coverage"] = rows.size();
  j["missing"] = missing;
  ordered_json fails = ordered_json::object();
  for (const auto& [utt, msg] : failures) fails[utt] = msg;
  j["failures"] = fails;
  j["mean"] = means_json(means());
  ordered_json spk = ordered_json::object();
  for (const auto& [name, m] : by_speaker()) spk[name] = means_json(m);
  j["speakers"] = spk;
  ordered_json utts = ordered_json::array();
  for (const auto& r : rows) {
    ordered_json u;
    u["utt_id"] = r.utt_id;
    u["speaker"] = r.speaker;
    u["mcd_db"] = r.mcd_db;
    u["bapd_db"] = r.bapd_db;
    u["f0_rmse_hz"] = r.f0_defined ? ordered_json(r.f0_rmse_hz) : ordered_json(nullptr);
    u["f0_corr"] = r.f0_defined ? ordered_json(r.f0_corr) : ordered_json(nullptr);
    u["vuv_pct"] = r.vuv_pct;
    u["stoi"] = r.stoi;
    u["snr_db"] = r.snr_db;
    utts.push_back(std::move(u));
  }
  j["utterances"] = std::move(utts);
  return j.dump(2) + "\n";
}

EvalReport EvalReport::from_json(const std::string& text) {
  EvalReport r;
  try {
    const auto j = ordered_json::parse(text);
    r.system = j.at("system").get<std::string>();
    r.manifest = j.at("manifest").get<std::string>();
    r.expected = j.at("expected").get<std::size_t>();
    r.missing = j.at("missing").get<std::vector<std::string>>();
    if (j.contains("failures"))
      for (const auto& [utt, msg] : j.at("failures").items()) r.failures.emplace_back(utt, msg.get<std::string>());
    for (const auto& u : j.at("utterances")) {
      UtteranceScores s;
      s.utt_id = u.at("utt_id").get<std::string>();
      s.speaker = u.at("speaker").get<std::string>();
      s.mcd_db = u.at("mcd_db").get<double>();
      s.bapd_db = u.at("bapd_db").get<double>();
      s.f0_defined = !u.at("f0_rmse_hz").is_null();
      if (s.f0_defined) {
        s.f0_rmse_hz = u.at("f0_rmse_hz").get<double>();
        s.f0_corr = u.at("f0_corr").get<double>();
      }
      s.vuv_pct = u.at("vuv_pct").get<double>();
      s.stoi = u.at("stoi").get<double>();
      s.snr_db = u.at("snr_db").get<double>();
      r.rows.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::corruption, std::string("report: ") + e.what());
  }
  return r;
}

UtteranceScores score_utterance(const std::string& utt_id, const Waveform& reference,
                                const Waveform& processed, const VocoderConfig& cfg) {
  UtteranceScores s;
  s.utt_id = utt_id;
  s.speaker = speaker_of(utt_id);
  // Frame-synchronous comparison: the output is cut or padded to the
  // reference length before analysis.
  Waveform hyp = processed;
  hyp.samples.resize(reference.size(), 0.0);
  const AcousticTrack ref_track = analyze(reference, cfg);
  const AcousticTrack hyp_track = analyze(hyp, cfg);
  s.mcd_db = mcd(ref_track.mcep, hyp_track.mcep);
  s.bapd_db = bapd(ref_track.bap, hyp_track.bap);
  const F0Track rf = f0_of(ref_track), hf = f0_of(hyp_track);
  s.vuv_pct = vuv_error_pct(rf, hf);
  try {
    const F0Metrics f = f0_metrics(rf, hf);
    s.f0_rmse_hz = f.rmse_hz;
    s.f0_corr = f.corr;
    s.f0_defined = true;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::undefined_metric) throw;
  }
  s.stoi = stoi(reference, hyp);
  s.snr_db = si_snr_db(reference, hyp);
  return s;
}

EvalReport evaluate_system(const Manifest& manifest, const std::string& manifest_ref,
                           const std::filesystem::path& outputs_dir, const std::string& system,
                           const VocoderConfig& cfg, std::size_t jobs) {
  EvalReport report;
  report.system = system;
  report.manifest = manifest_ref;
  const auto tests = manifest.split(Split::test);
  report.expected = tests.size();

  std::vector<std::optional<UtteranceScores>> slots(tests.size());
  std::vector<std::string> errors(tests.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tests.size(); i = next++) {
      const auto& spec = *tests[i];
      const auto out = outputs_dir / (spec.utt_id + "." + system + ".wav");
      if (!std::filesystem::exists(out)) continue;
      try {
        slots[i] = score_utterance(spec.utt_id, load_wav(spec.clean_path), load_wav(out), cfg);
      } catch (const Error& e) {
        errors[i] = e.what();
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, tests.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < workers; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < tests.size(); ++i) {
    if (slots[i])
      report.rows.push_back(std::move(*slots[i]));
    else
      report.missing.push_back(tests[i]->utt_id);
    if (!errors[i].empty()) report.failures.emplace_back(tests[i]->utt_id, errors[i]);
  }
  return report;
}

std::string format_table(const std::vector<EvalReport>& reports, bool per_speaker) {
  const std::vector<std::string> head{"System", "N", "MCD (dB)", "BAPD (dB)", "RMSE (Hz)",
                                      "CORR", "VUV (%)", "STOI", "SNR (dB)"};
  std::vector<std::vector<std::string>> rows;
  auto add = [&](const std::string& label, const ScoreMeans& m) {
    rows.push_back({label, std::to_string(m.count), cell(m.mcd_db, 2), cell(m.bapd_db, 2),
                    m.f0_count ? cell(m.f0_rmse_hz, 2) : "-", m.f0_count ? cell(m.f0_corr, 3) : "-",
                    cell(m.vuv_pct, 2), cell(m.stoi, 3), cell(m.snr_db, 2)});
  };
  for (const auto& r : reports) {
    add(r.system, r.means());
    if (per_speaker)
      for (const auto& [spk, m] : r.by_speaker()) add("  " + r.system + " [" + spk + "]", m);
  }
  std::vector<std::size_t> width(head.size());
  for (std::size_t c = 0; c < head.size(); ++c) {
    width[c] = head[c].size();
    for (const auto& row : rows) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << "  ";
      const std::size_t pad = width[c] - row[c].size();
      if (c == 0)
        out << row[c] << std::string(pad, ' ');
      else
        out << std::string(pad, ' ') << row[c];
    }
    out << "\n";
  };
  line(head);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out << std::string(total + 2 * (width.size() - 1), '-') << "\n";
  for (const auto& row : rows) line(row);
  return out.str();
}

}  // namespace presynth
