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

// Dense products on row-major matrices, all routed through kernels::gemm_nt.

#include <algorithm>

#include "presynth/kernels.hpp"
#include "presynth/matrix.hpp"

namespace presynth::linalg {

template <class R>
Matrix<R> transposed(const R* a, std::size_t rows, std::size_t cols) {
  Matrix<R> t(cols, rows);
  constexpr std::size_t kBlock = 32;
  for (std::size_t i0 = 0; i0 < rows; i0 += kBlock)
    for (std::size_t j0 = 0; j0 < cols; j0 += kBlock)
      for (std::size_t i = i0; i < std::min(rows, i0 + kBlock); ++i)
        for (std::size_t j = j0; j < std::min(cols, j0 + kBlock); ++j)
          t.data()[j * rows + i] = a[i * cols + j];
  return t;
}

template <class R>
Matrix<R> transposed(const Matrix<R>& a) {
  return transposed(a.data(), a.rows(), a.cols());
}

/// out = x * w^T + bias (bias is 1 x w.rows()).
template <class R>
void affine(const Matrix<R>& x, const Matrix<R>& w, const Matrix<R>& bias, Matrix<R>& out) {
  out.resize(x.rows(), w.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) std::copy(bias.data(), bias.data() + bias.cols(), &out(r, 0));
  if (x.rows() == 0) return;
  kernels::gemm_nt(x.data(), w.data(), out.data(), x.rows(), w.rows(), x.cols(), true);
}

/// c += a^T * b for a (n x m), b (n x k).
template <class R>
void add_tn(const Matrix<R>& a, const Matrix<R>& b, Matrix<R>& c) {
  if (a.rows() == 0) return;
  const Matrix<R> at = transposed(a);
  const Matrix<R> bt = transposed(b);
  kernels::gemm_nt(at.data(), bt.data(), c.data(), at.rows(), bt.rows(), at.cols(), true);
}

/// out = a * w for a (n x m), w (m x k); `wt` is w transposed.
template <class R>
void mul_nn(const Matrix<R>& a, const Matrix<R>& wt, Matrix<R>& out) {
  out.resize(a.rows(), wt.rows());
  if (a.rows() == 0) return;
  kernels::gemm_nt(a.data(), wt.data(), out.data(), a.rows(), wt.rows(), a.cols(), false);
}

/// Column sums of a added to the 1 x cols matrix b.
template <class R>
void add_colsum(const Matrix<R>& a, Matrix<R>& b) {
  for (std::size_t r = 0; r < a.rows(); ++r)
    kernels::axpy<R>(R{1}, a.row(r), b.row(0));
}

}  // namespace presynth::linalg
