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

#include <cmath>
#include <vector>

#include "doctest.h"
#include "presynth/kernels.hpp"
#include "presynth/random.hpp"

using namespace presynth;
namespace k = presynth::kernels;

namespace {

template <class T>
std::vector<T> random_vec(Rng& rng, std::size_t n) {
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(rng.uniform(-1.0, 1.0));
  return v;
}

// Compares every compiled-in variant against the scalar reference.
template <class T>
void check_equivalence(double tol) {
  Rng rng(17);
  const auto& ref = k::ops<T>(k::Isa::scalar);
  for (k::Isa isa : {k::Isa::scalar, k::Isa::avx2}) {
    if (!k::supported(isa)) continue;
    const auto& o = k::ops<T>(isa);
    CAPTURE(k::name(isa));
    for (std::size_t n : {0u, 1u, 3u, 7u, 8u, 15u, 31u, 32u, 33u, 100u, 513u}) {
      auto a = random_vec<T>(rng, n);
      auto b = random_vec<T>(rng, n);
      CHECK(std::abs(o.dot(a.data(), b.data(), n) - ref.dot(a.data(), b.data(), n)) <=
            tol * (1.0 + n));

      auto y1 = random_vec<T>(rng, n);
      auto y2 = y1;
      o.axpy(T(0.37), a.data(), y1.data(), n);
      ref.axpy(T(0.37), a.data(), y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= tol);
    }
    const std::size_t shapes[][3] = {{1, 1, 1}, {2, 4, 8}, {3, 5, 9}, {7, 9, 33}, {16, 13, 70}};
    for (const auto& shape : shapes) {
      const std::size_t m = shape[0], n = shape[1], kk = shape[2];
      auto a = random_vec<T>(rng, m * kk);
      auto b = random_vec<T>(rng, n * kk);
      std::vector<T> c1(m * n, T(1)), c2(m * n, T(1));
      o.gemm_nt(a.data(), b.data(), c1.data(), m, n, kk, true);
      ref.gemm_nt(a.data(), b.data(), c2.data(), m, n, kk, true);
      for (std::size_t i = 0; i < m * n; ++i) CHECK(std::abs(c1[i] - c2[i]) <= tol * (1.0 + kk));
      o.gemm_nt(a.data(), b.data(), c1.data(), m, n, kk, false);
      ref.gemm_nt(a.data(), b.data(), c2.data(), m, n, kk, false);
      for (std::size_t i = 0; i < m * n; ++i) CHECK(std::abs(c1[i] - c2[i]) <= tol * (1.0 + kk));
    }
  }
}

}  // namespace

TEST_CASE("simd variants agree with the scalar reference") {
  check_equivalence<float>(1e-5);
  check_equivalence<double>(1e-13);
}

TEST_CASE("scalar gemm_nt matches a triple loop") {
  Rng rng(3);
  const std::size_t m = 5, n = 6, kk = 7;
  auto a = random_vec<double>(rng, m * kk);
  auto b = random_vec<double>(rng, n * kk);
  std::vector<double> c(m * n);
  k::ops<double>(k::Isa::scalar).gemm_nt(a.data(), b.data(), c.data(), m, n, kk, false);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0;
      for (std::size_t p = 0; p < kk; ++p) s += a[i * kk + p] * b[j * kk + p];
      CHECK(c[i * n + j] == doctest::Approx(s).epsilon(1e-14));
    }
}

TEST_CASE("gemm_nn_acc and gemm_tn_acc match triple loops under both variants") {
  Rng rng(5);
  const std::size_t m = 4, n = 11, kk = 6;
  for (k::Isa isa : {k::Isa::scalar, k::Isa::avx2}) {
    if (!k::supported(isa)) continue;
    const k::Isa saved = k::active();
    k::set_active(isa);
    auto a = random_vec<double>(rng, m * kk);
    auto b = random_vec<double>(rng, kk * n);
    std::vector<double> c(m * n, 0.5);
    k::gemm_nn_acc(a.data(), b.data(), c.data(), m, n, kk);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.5;
        for (std::size_t p = 0; p < kk; ++p) s += a[i * kk + p] * b[p * n + j];
        CHECK(c[i * n + j] == doctest::Approx(s).epsilon(1e-12));
      }
    auto at = random_vec<double>(rng, kk * m);
    std::vector<double> d(m * n, 0.0);
    k::gemm_tn_acc(at.data(), b.data(), d.data(), m, n, kk);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t p = 0; p < kk; ++p) s += at[p * m + i] * b[p * n + j];
        CHECK(d[i * n + j] == doctest::Approx(s).epsilon(1e-12));
      }
    k::set_active(saved);
  }
}

TEST_CASE("dispatch reports a usable default") {
  CHECK(k::supported(k::Isa::scalar));
  CHECK(k::supported(k::detect()));
  CHECK_NOTHROW(k::set_active(k::detect()));
}
