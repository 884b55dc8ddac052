// Copyright 2026 the asrlink authors
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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "asrlink/common.hpp"

namespace asrlink {

// Row-major dense matrix of doubles. All model math runs in 64-bit so the
// finite-difference gradient checks have headroom.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
  double* row(int r) { return v.data() + static_cast<std::size_t>(r) * cols; }
  const double* row(int r) const { return v.data() + static_cast<std::size_t>(r) * cols; }
  std::size_t size() const { return v.size(); }

  void fill(double x) { std::fill(v.begin(), v.end(), x); }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  bool all_finite() const {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  }

  static Matrix random_uniform(int r, int c, double lo, double hi, Rng& rng) {
    Matrix m(r, c);
    for (auto& x : m.v) x = rng.uniform(lo, hi);
    return m;
  }
};

inline bool operator==(const Matrix& a, const Matrix& b) {
  return a.rows == b.rows && a.cols == b.cols && a.v == b.v;
}

// y[1 x n] += x[1 x m] * W[m x n]
inline void vec_matmul_acc(const double* x, const Matrix& w, double* y) {
  for (int i = 0; i < w.rows; ++i) {
    double xi = x[i];
    if (xi == 0.0) continue;
    const double* wr = w.row(i);
    for (int j = 0; j < w.cols; ++j) y[j] += xi * wr[j];
  }
}

// dx[1 x m] += dy[1 x n] * W^T
inline void vec_matmul_transpose_acc(const double* dy, const Matrix& w, double* dx) {
  for (int i = 0; i < w.rows; ++i) {
    const double* wr = w.row(i);
    double acc = 0.0;
    for (int j = 0; j < w.cols; ++j) acc += dy[j] * wr[j];
    dx[i] += acc;
  }
}

// dW[m x n] += x^T[m x 1] * dy[1 x n]
inline void outer_acc(const double* x, const double* dy, Matrix& dw) {
  for (int i = 0; i < dw.rows; ++i) {
    double xi = x[i];
    if (xi == 0.0) continue;
    double* dwr = dw.row(i);
    for (int j = 0; j < dw.cols; ++j) dwr[j] += xi * dy[j];
  }
}

// A named view over one parameter (or gradient) block; the optimizer walks
// lists of these.
struct TensorView {
  double* data = nullptr;
  std::size_t size = 0;
  std::string name;
};

// Batch of variable-length frame sequences, padded to the batch maximum.
// data is laid out [b][t][c]; positions at or beyond lengths[b] are zero.
struct Tensor3 {
  int batch = 0;
  int steps = 0;
  int chans = 0;
  std::vector<double> v;
  std::vector<int> lengths;

  Tensor3() = default;
  Tensor3(int b, int t, int c)
      : batch(b), steps(t), chans(c), v(static_cast<std::size_t>(b) * t * c, 0.0), lengths(b, t) {}

  double& at(int b, int t, int c) {
    return v[(static_cast<std::size_t>(b) * steps + t) * chans + c];
  }
  double at(int b, int t, int c) const {
    return v[(static_cast<std::size_t>(b) * steps + t) * chans + c];
  }
  double* frame(int b, int t) { return v.data() + (static_cast<std::size_t>(b) * steps + t) * chans; }
  const double* frame(int b, int t) const {
    return v.data() + (static_cast<std::size_t>(b) * steps + t) * chans;
  }

  bool all_finite() const {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  }
};

}  // namespace asrlink
