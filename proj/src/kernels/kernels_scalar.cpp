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

#include "presynth/kernels.hpp"

namespace presynth::kernels::detail {
namespace {

template <class T>
T dot(const T* a, const T* b, std::size_t n) {
  T acc{0};
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <class T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <class T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t n,
             std::size_t k, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const T v = dot(a + i * k, b + j * k, k);
      c[i * n + j] = accumulate ? c[i * n + j] + v : v;
    }
  }
}

}  // namespace

template <class T>
const Ops<T>& scalar_ops() {
  static const Ops<T> table{&dot<T>, &axpy<T>, &gemm_nt<T>};
  return table;
}

template const Ops<float>& scalar_ops<float>();
template const Ops<double>& scalar_ops<double>();

}  // namespace presynth::kernels::detail
