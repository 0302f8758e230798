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

#include "presynth/binary_io.hpp"
#include "presynth/error.hpp"
#include "presynth/features.hpp"

namespace presynth {

Normalizer::Normalizer(std::vector<double> mean, std::vector<double> stdev,
                       std::vector<std::uint32_t> excluded, NormalizerKind kind)
    : mean_(std::move(mean)), std_(std::move(stdev)), excluded_(std::move(excluded)), kind_(kind) {
  require(mean_.size() == std_.size(), ErrorKind::shape_mismatch,
          "normalizer: mean and std lengths differ");
  std::sort(excluded_.begin(), excluded_.end());
  excluded_.erase(std::unique(excluded_.begin(), excluded_.end()), excluded_.end());
  scaled_.assign(mean_.size(), 1);
  for (std::uint32_t c : excluded_) {
    require(c < mean_.size(), ErrorKind::invalid_argument,
            "normalizer: excluded column " + std::to_string(c) + " out of range");
    scaled_[c] = 0;
    mean_[c] = 0.0;
    std_[c] = 1.0;
  }
  for (double& s : std_) {
    require(std::isfinite(s), ErrorKind::non_finite, "normalizer: non-finite std");
    s = std::max(s, kStdFloor);
  }
}

Normalizer Normalizer::fit(std::span<const Matrix<double>* const> data, NormalizerKind kind,
                           std::vector<std::uint32_t> excluded) {
  require(!data.empty(), ErrorKind::insufficient_data, "fit_normalizer: no matrices");
  const std::size_t dim = data.front()->cols();
  std::size_t count = 0;
  std::vector<double> sum(dim, 0.0);
  for (const auto* m : data) {
    require(m->cols() == dim, ErrorKind::shape_mismatch, "fit_normalizer: column counts differ");
    for (std::size_t t = 0; t < m->rows(); ++t) {
      auto row = m->row(t);
      for (std::size_t j = 0; j < dim; ++j) sum[j] += row[j];
    }
    count += m->rows();
  }
  require(count >= 2, ErrorKind::insufficient_data, "fit_normalizer: need at least two frames");
  std::vector<double> mean(dim), var(dim, 0.0);
  for (std::size_t j = 0; j < dim; ++j) mean[j] = sum[j] / static_cast<double>(count);
  // Second pass on centred values.
  for (const auto* m : data)
    for (std::size_t t = 0; t < m->rows(); ++t) {
      auto row = m->row(t);
      for (std::size_t j = 0; j < dim; ++j) {
        const double d = row[j] - mean[j];
        var[j] += d * d;
      }
    }
  std::vector<double> stdev(dim);
  for (std::size_t j = 0; j < dim; ++j) stdev[j] = std::sqrt(var[j] / static_cast<double>(count));
  return Normalizer(std::move(mean), std::move(stdev), std::move(excluded), kind);
}

Normalizer Normalizer::fit(const Matrix<double>& data, NormalizerKind kind,
                           std::vector<std::uint32_t> excluded) {
  const Matrix<double>* one[] = {&data};
  return fit(one, kind, std::move(excluded));
}

Normalizer Normalizer::identity(std::size_t dim, NormalizerKind kind) {
  return Normalizer(std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0), {}, kind);
}

void Normalizer::apply(Matrix<double>& x) const {
  require(x.cols() == dim(), ErrorKind::shape_mismatch,
          "normalizer: matrix has " + std::to_string(x.cols()) + " columns, expected " +
              std::to_string(dim()));
  for (std::size_t t = 0; t < x.rows(); ++t) {
    auto row = x.row(t);
    for (std::size_t j = 0; j < row.size(); ++j)
      if (scaled_[j]) row[j] = (row[j] - mean_[j]) / std_[j];
  }
}

void Normalizer::invert(Matrix<double>& x) const {
  require(x.cols() == dim(), ErrorKind::shape_mismatch,
          "normalizer: matrix has " + std::to_string(x.cols()) + " columns, expected " +
              std::to_string(dim()));
  for (std::size_t t = 0; t < x.rows(); ++t) {
    auto row = x.row(t);
    for (std::size_t j = 0; j < row.size(); ++j)
      if (scaled_[j]) row[j] = row[j] * std_[j] + mean_[j];
  }
}

void Normalizer::save(const std::filesystem::path& path) const {
  io::ByteWriter w;
  w.magic("PVN1");
  w.u32(static_cast<std::uint32_t>(dim()));
  for (double v : mean_) w.f32(static_cast<float>(v));
  for (double v : std_) w.f32(static_cast<float>(v));
  w.u32(static_cast<std::uint32_t>(excluded_.size()));
  for (std::uint32_t c : excluded_) w.u32(c);
  io::write_file(path, w.bytes());
}

Normalizer Normalizer::load(const std::filesystem::path& path, NormalizerKind kind) {
  io::ByteReader r(io::read_file(path), path.string());
  r.expect_magic("PVN1");
  const std::uint32_t dim = r.u32();
  r.need(static_cast<std::size_t>(dim) * 8);
  std::vector<double> mean(dim), stdev(dim);
  for (double& v : mean) v = r.f32();
  for (double& v : stdev) v = r.f32();
  const std::uint32_t n = r.u32();
  r.need(static_cast<std::size_t>(n) * 4);
  std::vector<std::uint32_t> excluded(n);
  for (auto& c : excluded) c = r.u32();
  for (double v : mean)
    require(std::isfinite(v), ErrorKind::corruption, path.string() + ": non-finite mean");
  return Normalizer(std::move(mean), std::move(stdev), std::move(excluded), kind);
}

}  // namespace presynth
