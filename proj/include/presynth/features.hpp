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

// Model inputs and targets. Inputs are log-mel frames stacked with +-4
// neighbours; targets are vocoder statics with first and second deltas plus
// the voicing flag, in a fixed 199-column layout.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "presynth/matrix.hpp"
#include "presynth/vocoder.hpp"

namespace presynth {

// Target layout: [mcep, d mcep, dd mcep | lf0, d, dd | bap, d, dd | vuv].
inline constexpr std::size_t kMcepBlock = 0;
inline constexpr std::size_t kLf0Block = 3 * kMcepOrder;             // 180
inline constexpr std::size_t kBapBlock = kLf0Block + 3;              // 183
inline constexpr std::size_t kVuvColumn = kBapBlock + 3 * kBapBands;  // 198
inline constexpr std::size_t kTargetDim = kVuvColumn + 1;             // 199
inline constexpr std::size_t kContextRadius = 4;

struct Deltas {
  Matrix<double> delta;
  Matrix<double> delta2;
};

/// Centred +-1 frame windows with edge replication:
/// d_t = (x_{t+1} - x_{t-1}) / 2, dd_t = x_{t+1} - 2 x_t + x_{t-1}.
Deltas compute_deltas(const Matrix<double>& x);

Matrix<double> assemble_targets(const AcousticTrack& track);

/// Row t becomes rows t-radius .. t+radius concatenated, edges replicated.
Matrix<double> stack_context(const Matrix<double>& x, std::size_t radius = kContextRadius);

enum class NormalizerKind { input, target };

/// Per-column mean / standard deviation. Excluded columns pass through.
class Normalizer {
 public:
  static constexpr double kStdFloor = 1e-8;

  Normalizer() = default;
  Normalizer(std::vector<double> mean, std::vector<double> stdev,
             std::vector<std::uint32_t> excluded, NormalizerKind kind);

  /// Statistics over all rows of all matrices. Needs at least two frames.
  static Normalizer fit(std::span<const Matrix<double>* const> data, NormalizerKind kind,
                        std::vector<std::uint32_t> excluded = {});
  static Normalizer fit(const Matrix<double>& data, NormalizerKind kind,
                        std::vector<std::uint32_t> excluded = {});
  /// Mean 0, std 1 on every column.
  static Normalizer identity(std::size_t dim, NormalizerKind kind);

  std::size_t dim() const noexcept { return mean_.size(); }
  NormalizerKind kind() const noexcept { return kind_; }
  const std::vector<double>& mean() const noexcept { return mean_; }
  const std::vector<double>& stdev() const noexcept { return std_; }
  const std::vector<std::uint32_t>& excluded() const noexcept { return excluded_; }
  bool is_excluded(std::size_t col) const noexcept { return !scaled_[col]; }

  void apply(Matrix<double>& x) const;
  void invert(Matrix<double>& x) const;
  Matrix<double> applied(Matrix<double> x) const {
    apply(x);
    return x;
  }
  Matrix<double> inverted(Matrix<double> x) const {
    invert(x);
    return x;
  }

  /// "PVN1", u32 D, f32 means, f32 stds, u32 count, u32 excluded indices.
  void save(const std::filesystem::path& path) const;
  static Normalizer load(const std::filesystem::path& path, NormalizerKind kind);

  friend bool operator==(const Normalizer&, const Normalizer&) = default;

 private:
  std::vector<double> mean_;
  std::vector<double> std_;
  std::vector<std::uint32_t> excluded_;
  std::vector<std::uint8_t> scaled_;
  NormalizerKind kind_ = NormalizerKind::input;
};

/// Maximum-likelihood trajectory for one stream. `means` is T x 3D laid out
/// [static D | delta D | delta2 D]; `variances` has 3D entries in the same
/// order. Solves (W' S^-1 W) c = W' S^-1 mu per dimension with a banded
/// Cholesky factorisation.
Matrix<double> mlpg_smooth(const Matrix<double>& means, std::span<const double> variances);

enum class GenerationMode { statics, mlpg };

/// Denormalises a predicted target matrix and rebuilds the vocoder track.
/// In mlpg mode the squared target stds act as the global variances.
AcousticTrack disassemble_targets(const Matrix<double>& pred, const Normalizer& norm,
                                  GenerationMode mode);

}  // namespace presynth
