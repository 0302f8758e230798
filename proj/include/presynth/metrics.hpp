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

// Objective measures: mel-cepstral distortion, band-aperiodicity distortion,
// F0 error and correlation, voicing error, scale-invariant SNR and STOI, plus
// per-system report aggregation.

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "presynth/corpus.hpp"
#include "presynth/dsp.hpp"
#include "presynth/matrix.hpp"
#include "presynth/vocoder.hpp"

namespace presynth {

/// Frame-averaged (10 / ln 10) sqrt(2 sum_{d>=1} (ref_d - hyp_d)^2); c0 is
/// ignored.
double mcd(const Matrix<double>& ref_mcep, const Matrix<double>& hyp_mcep);

/// Frame-averaged RMS over bands of the dB difference.
double bapd(const Matrix<double>& ref_bap, const Matrix<double>& hyp_bap);

struct F0Metrics {
  double rmse_hz = 0.0;
  double corr = 0.0;
  double vuv_pct = 0.0;
  std::size_t voiced_both = 0;
};

/// Percentage of frames whose voicing decisions differ.
double vuv_error_pct(const F0Track& ref, const F0Track& hyp);

/// RMSE and Pearson correlation over frames voiced in both tracks. Throws
/// undefined_metric when no frame is voiced in both or a contour is flat.
F0Metrics f0_metrics(const F0Track& ref, const F0Track& hyp);

/// 10 log10(|a r|^2 / |a r - p|^2) with a the least-squares gain of the
/// reference; lengths are trimmed to the shorter signal.
double si_snr_db(const Waveform& reference, const Waveform& processed);

/// Rational-ratio windowed-sinc resampler (Kaiser window, 16 zero crossings).
Waveform resample(const Waveform& wave, int target_rate);

/// Short-time objective intelligibility at 10 kHz. Lengths are trimmed to
/// the shorter signal.
double stoi(const Waveform& clean, const Waveform& processed);

struct UtteranceScores {
  std::string utt_id;
  std::string speaker;
  double mcd_db = 0.0;
  double bapd_db = 0.0;
  bool f0_defined = false;  // rmse/corr exist only with mutually voiced frames
  double f0_rmse_hz = 0.0;
  double f0_corr = 0.0;
  double vuv_pct = 0.0;
  double stoi = 0.0;
  double snr_db = 0.0;
};

struct ScoreMeans {
  std::size_t count = 0;
  std::size_t f0_count = 0;
  double mcd_db = 0.0, bapd_db = 0.0, f0_rmse_hz = 0.0, f0_corr = 0.0, vuv_pct = 0.0,
         stoi = 0.0, snr_db = 0.0;
};

ScoreMeans mean_of(const std::vector<UtteranceScores>& rows);

struct EvalReport {
  std::string system;
  std::string manifest;
  std::size_t expected = 0;               // test utterances in the manifest
  std::vector<UtteranceScores> rows;      // manifest order
  std::vector<std::string> missing;       // utt_ids without a usable output
  std::vector<std::pair<std::string, std::string>> failures;  // utt_id, why scoring failed

  ScoreMeans means() const { return mean_of(rows); }
  std::map<std::string, ScoreMeans> by_speaker() const;

  std::string to_json() const;
  static EvalReport from_json(const std::string& text);
};

/// Scores one processed waveform against its clean reference.
UtteranceScores score_utterance(const std::string& utt_id, const Waveform& reference,
                                const Waveform& processed, const VocoderConfig& cfg = {});

/// Scores `{outputs_dir}/{utt_id}.{system}.wav` for every test utterance.
/// Missing or unscorable outputs are listed; the rest are still scored.
EvalReport evaluate_system(const Manifest& manifest, const std::string& manifest_ref,
                           const std::filesystem::path& outputs_dir, const std::string& system,
                           const VocoderConfig& cfg = {}, std::size_t jobs = 1);

/// Systems as rows, metrics as columns, aligned plain text. With
/// `per_speaker`, one extra row per speaker and system.
std::string format_table(const std::vector<EvalReport>& reports, bool per_speaker = false);

}  // namespace presynth
