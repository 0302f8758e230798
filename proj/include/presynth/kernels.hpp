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

// Data-parallel inner loops used by the DSP and network code. Every kernel has
// a portable scalar reference and, on x86-64, an AVX2/FMA variant. The variant
// is picked once at startup from CPUID and can be overridden for testing.

#include <cstddef>
#include <span>
#include <string_view>

namespace presynth::kernels {

enum class Isa { scalar, avx2 };

std::string_view name(Isa isa);

/// True when the variant was compiled in and the CPU can run it.
bool supported(Isa isa);

/// Best supported variant.
Isa detect();

Isa active();

/// Throws presynth::Error(invalid_argument) if `isa` is not supported.
void set_active(Isa isa);

template <class T>
struct Ops {
  /// sum_i a[i] * b[i]
  T (*dot)(const T* a, const T* b, std::size_t n);
  /// y += alpha * x
  void (*axpy)(T alpha, const T* x, T* y, std::size_t n);
  /// C(m x n) = A(m x k) * B(n x k)^T, added to C when `accumulate`.
  void (*gemm_nt)(const T* a, const T* b, T* c, std::size_t m, std::size_t n,
                  std::size_t k, bool accumulate);
};

template <class T>
const Ops<T>& ops(Isa isa);

template <class T>
const Ops<T>& ops() {
  return ops<T>(active());
}

template <class T>
T dot(std::span<const T> a, std::span<const T> b) {
  return ops<T>().dot(a.data(), b.data(), a.size() < b.size() ? a.size() : b.size());
}

template <class T>
void axpy(T alpha, std::span<const T> x, std::span<T> y) {
  ops<T>().axpy(alpha, x.data(), y.data(), x.size() < y.size() ? x.size() : y.size());
}

template <class T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t n,
             std::size_t k, bool accumulate) {
  ops<T>().gemm_nt(a, b, c, m, n, k, accumulate);
}

/// C(m x n) += A(m x k) * B(k x n)
template <class T>
void gemm_nn_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t n,
                 std::size_t k) {
  const auto& o = ops<T>();
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    T* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p)
      if (arow[p] != T{0}) o.axpy(arow[p], b + p * n, crow, n);
  }
}

/// C(m x n) += A(k x m)^T * B(k x n)
template <class T>
void gemm_tn_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t n,
                 std::size_t k) {
  const auto& o = ops<T>();
  for (std::size_t p = 0; p < k; ++p) {
    const T* arow = a + p * m;
    const T* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i)
      if (arow[i] != T{0}) o.axpy(arow[i], brow, c + i * n, n);
  }
}

namespace detail {
template <class T>
const Ops<T>& scalar_ops();
#if defined(PRESYNTH_HAVE_AVX2)
template <class T>
const Ops<T>& avx2_ops();
#endif
}  // namespace detail

}  // namespace presynth::kernels
