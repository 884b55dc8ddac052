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

#include <string>
#include <vector>

#include "asrlink/encoder.hpp"
#include "asrlink/tensor.hpp"

namespace asrlink::connector {

// The trainable connector: stack every K consecutive encoder frames into one
// vector, then project through two affine maps with GELU in between. This is
// the only module whose parameters move during training.
struct ConnectorParams {
  int K = 1;
  Matrix w1;               // (E*K) x d_mid
  std::vector<double> b1;  // d_mid
  Matrix w2;               // d_mid x d_llm
  std::vector<double> b2;  // d_llm

  int in_features() const { return w1.rows; }
  int mid_dim() const { return w1.cols; }
  int out_dim() const { return w2.cols; }

  // W1, W2 ~ uniform(+-1/sqrt(fan_in)), biases zero.
  static ConnectorParams init(int K, int embed_dim, int d_mid, int d_llm, std::uint64_t seed);

  void validate() const;
  void save(const std::string& path) const;
  static ConnectorParams load(const std::string& path);
  std::uint64_t checksum() const;
};

struct ProjectedEmbeddings {
  Tensor3 data;  // B x ceil(T/K) x d_llm
};

struct ConnectorGradients {
  Matrix dw1;
  std::vector<double> db1;
  Matrix dw2;
  std::vector<double> db2;

  static ConnectorGradients zeros_like(const ConnectorParams& p);
  void add_scaled(const ConnectorGradients& other, double scale);
  bool all_finite() const;
};

// Concatenates every K consecutive frames; a trailing partial group is
// zero-padded to K frames. New lengths are ceil(old / K).
Tensor3 downsample_stack(const Tensor3& h, int K);

// Exact GELU, x * Phi(x) via erf (not the tanh approximation).
double gelu(double x);
double gelu_derivative(double x);
Matrix gelu(const Matrix& x);

ProjectedEmbeddings connector_forward(const encoder::AcousticEmbeddings& h,
                                      const ConnectorParams& params);

// Exact reverse-mode gradients of a scalar loss with upstream d_proj.
// Positions at or beyond the valid length contribute nothing. When d_speech
// is non-null it receives the gradient with respect to the encoder output
// (unused in training since the encoder is frozen).
ConnectorGradients connector_backward(const encoder::AcousticEmbeddings& h,
                                      const ConnectorParams& params, const Tensor3& d_proj,
                                      Tensor3* d_speech = nullptr);

}  // namespace asrlink::connector
