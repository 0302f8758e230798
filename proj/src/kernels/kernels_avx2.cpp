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

// Built with -mavx2 -mfma. Nothing in this file may run unless
// kernels::supported(Isa::avx2) returned true.

#include <algorithm>
#include <immintrin.h>

#include "presynth/kernels.hpp"

namespace presynth::kernels::detail {
namespace {

struct F32 {
  using scalar = float;
  using vec = __m256;
  static constexpr std::size_t width = 8;
  static vec zero() { return _mm256_setzero_ps(); }
  static vec load(const float* p) { return _mm256_loadu_ps(p); }
  static void store(float* p, vec v) { _mm256_storeu_ps(p, v); }
  static vec splat(float x) { return _mm256_set1_ps(x); }
  static vec fmadd(vec a, vec b, vec c) { return _mm256_fmadd_ps(a, b, c); }
  static vec add(vec a, vec b) { return _mm256_add_ps(a, b); }
  static float hsum(vec v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 shuf = _mm_movehdup_ps(lo);
    __m128 sums = _mm_add_ps(lo, shuf);
    shuf = _mm_movehl_ps(shuf, sums);
    sums = _mm_add_ss(sums, shuf);
    return _mm_cvtss_f32(sums);
  }
};

struct F64 {
  using scalar = double;
  using vec = __m256d;
  static constexpr std::size_t width = 4;
  static vec zero() { return _mm256_setzero_pd(); }
  static vec load(const double* p) { return _mm256_loadu_pd(p); }
  static void store(double* p, vec v) { _mm256_storeu_pd(p, v); }
  static vec splat(double x) { return _mm256_set1_pd(x); }
  static vec fmadd(vec a, vec b, vec c) { return _mm256_fmadd_pd(a, b, c); }
  static vec add(vec a, vec b) { return _mm256_add_pd(a, b); }
  static double hsum(vec v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d high64 = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, high64));
  }
};

template <class V>
typename V::scalar dot(const typename V::scalar* a, const typename V::scalar* b,
                       std::size_t n) {
  constexpr std::size_t w = V::width;
  auto acc0 = V::zero(), acc1 = V::zero(), acc2 = V::zero(), acc3 = V::zero();
  std::size_t i = 0;
  for (; i + 4 * w <= n; i += 4 * w) {
    acc0 = V::fmadd(V::load(a + i), V::load(b + i), acc0);
    acc1 = V::fmadd(V::load(a + i + w), V::load(b + i + w), acc1);
    acc2 = V::fmadd(V::load(a + i + 2 * w), V::load(b + i + 2 * w), acc2);
    acc3 = V::fmadd(V::load(a + i + 3 * w), V::load(b + i + 3 * w), acc3);
  }
  for (; i + w <= n; i += w) acc0 = V::fmadd(V::load(a + i), V::load(b + i), acc0);
  typename V::scalar sum = V::hsum(V::add(V::add(acc0, acc1), V::add(acc2, acc3)));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

template <class V>
void axpy(typename V::scalar alpha, const typename V::scalar* x,
          typename V::scalar* y, std::size_t n) {
  constexpr std::size_t w = V::width;
  const auto va = V::splat(alpha);
  std::size_t i = 0;
  for (; i + 2 * w <= n; i += 2 * w) {
    V::store(y + i, V::fmadd(va, V::load(x + i), V::load(y + i)));
    V::store(y + i + w, V::fmadd(va, V::load(x + i + w), V::load(y + i + w)));
  }
  for (; i + w <= n; i += w) V::store(y + i, V::fmadd(va, V::load(x + i), V::load(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

// 2 rows of A against 4 rows of B per micro-tile; eight accumulators stay in
// registers while streaming over k.
template <class V>
void gemm_nt_panel(const typename V::scalar* a, const typename V::scalar* b,
                   typename V::scalar* c, std::size_t m, std::size_t n, std::size_t k,
                   std::size_t ldc, bool accumulate) {
  using S = typename V::scalar;
  constexpr std::size_t w = V::width;
  const std::size_t kv = k - k % w;

  auto finish = [&](std::size_t i, std::size_t j, S v) {
    c[i * ldc + j] = accumulate ? c[i * ldc + j] + v : v;
  };

  std::size_t i = 0;
  for (; i + 2 <= m; i += 2) {
    const S* a0 = a + i * k;
    const S* a1 = a0 + k;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const S* b0 = b + j * k;
      const S* b1 = b0 + k;
      const S* b2 = b1 + k;
      const S* b3 = b2 + k;
      auto c00 = V::zero(), c01 = V::zero(), c02 = V::zero(), c03 = V::zero();
      auto c10 = V::zero(), c11 = V::zero(), c12 = V::zero(), c13 = V::zero();
      for (std::size_t p = 0; p < kv; p += w) {
        const auto x0 = V::load(a0 + p);
        const auto x1 = V::load(a1 + p);
        auto y = V::load(b0 + p);
        c00 = V::fmadd(x0, y, c00);
        c10 = V::fmadd(x1, y, c10);
        y = V::load(b1 + p);
        c01 = V::fmadd(x0, y, c01);
        c11 = V::fmadd(x1, y, c11);
        y = V::load(b2 + p);
        c02 = V::fmadd(x0, y, c02);
        c12 = V::fmadd(x1, y, c12);
        y = V::load(b3 + p);
        c03 = V::fmadd(x0, y, c03);
        c13 = V::fmadd(x1, y, c13);
      }
      S r[2][4] = {{V::hsum(c00), V::hsum(c01), V::hsum(c02), V::hsum(c03)},
                   {V::hsum(c10), V::hsum(c11), V::hsum(c12), V::hsum(c13)}};
      for (std::size_t p = kv; p < k; ++p) {
        r[0][0] += a0[p] * b0[p];
        r[0][1] += a0[p] * b1[p];
        r[0][2] += a0[p] * b2[p];
        r[0][3] += a0[p] * b3[p];
        r[1][0] += a1[p] * b0[p];
        r[1][1] += a1[p] * b1[p];
        r[1][2] += a1[p] * b2[p];
        r[1][3] += a1[p] * b3[p];
      }
      for (std::size_t q = 0; q < 4; ++q) {
        finish(i, j + q, r[0][q]);
        finish(i + 1, j + q, r[1][q]);
      }
    }
    for (; j < n; ++j) {
      finish(i, j, dot<V>(a0, b + j * k, k));
      finish(i + 1, j, dot<V>(a1, b + j * k, k));
    }
  }
  for (; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) finish(i, j, dot<V>(a + i * k, b + j * k, k));
}

// Walks B in panels small enough to stay in L2 while every row pair of A
// streams past them.
template <class V>
void gemm_nt(const typename V::scalar* a, const typename V::scalar* b,
             typename V::scalar* c, std::size_t m, std::size_t n, std::size_t k,
             bool accumulate) {
  constexpr std::size_t kPanelBytes = 128 * 1024;
  const std::size_t row_bytes = std::max<std::size_t>(k, 1) * sizeof(typename V::scalar);
  const std::size_t panel = std::max<std::size_t>(4, kPanelBytes / row_bytes / 4 * 4);
  for (std::size_t j0 = 0; j0 < n; j0 += panel) {
    const std::size_t nj = std::min(panel, n - j0);
    gemm_nt_panel<V>(a, b + j0 * k, c + j0, m, nj, k, n, accumulate);
  }
}

}  // namespace

template <>
const Ops<float>& avx2_ops<float>() {
  static const Ops<float> table{&dot<F32>, &axpy<F32>, &gemm_nt<F32>};
  return table;
}

template <>
const Ops<double>& avx2_ops<double>() {
  static const Ops<double> table{&dot<F64>, &axpy<F64>, &gemm_nt<F64>};
  return table;
}

}  // namespace presynth::kernels::detail
