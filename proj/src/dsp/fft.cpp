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

#include <fftw3.h>

#include <map>
#include <mutex>

#include "presynth/dsp.hpp"
#include "presynth/error.hpp"

namespace presynth {

struct RealFft::Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

namespace {

// FFTW's planner is not thread-safe; execution of an existing plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

const RealFft::Plans* plans_for(std::size_t n) {
  static std::map<std::size_t, RealFft::Plans> cache;
  std::lock_guard lock(planner_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return &it->second;

  std::vector<double> real(n);
  std::vector<std::complex<double>> spec(n / 2 + 1);
  auto* in = real.data();
  auto* out = reinterpret_cast<fftw_complex*>(spec.data());
  const int size = static_cast<int>(n);
  RealFft::Plans p;
  p.r2c = fftw_plan_dft_r2c_1d(size, in, out, FFTW_ESTIMATE | FFTW_UNALIGNED);
  p.c2r = fftw_plan_dft_c2r_1d(size, out, in, FFTW_ESTIMATE | FFTW_UNALIGNED);
  require(p.r2c != nullptr && p.c2r != nullptr, ErrorKind::invalid_argument,
          "FFTW could not plan size " + std::to_string(n));
  return &cache.emplace(n, p).first->second;
}

}  // namespace

RealFft::RealFft(std::size_t n) : n_(n), real_(n), spec_(n / 2 + 1) {
  require(n >= 2, ErrorKind::invalid_argument, "FFT size must be at least 2");
  plans_ = plans_for(n);
}

RealFft::~RealFft() = default;
RealFft::RealFft(RealFft&&) noexcept = default;
RealFft& RealFft::operator=(RealFft&&) noexcept = default;

void RealFft::forward(std::span<const double> in,
                      std::span<std::complex<double>> out) {
  require(in.size() == n_ && out.size() == n_ / 2 + 1, ErrorKind::shape_mismatch,
          "RealFft::forward size mismatch");
  std::copy(in.begin(), in.end(), real_.begin());
  fftw_execute_dft_r2c(plans_->r2c, real_.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void RealFft::inverse(std::span<const std::complex<double>> in,
                      std::span<double> out) {
  require(in.size() == n_ / 2 + 1 && out.size() == n_, ErrorKind::shape_mismatch,
          "RealFft::inverse size mismatch");
  // c2r clobbers its input.
  std::copy(in.begin(), in.end(), spec_.begin());
  fftw_execute_dft_c2r(plans_->c2r, reinterpret_cast<fftw_complex*>(spec_.data()),
                       out.data());
  const double scale = 1.0 / static_cast<double>(n_);
  for (double& v : out) v *= scale;
}

}  // namespace presynth
