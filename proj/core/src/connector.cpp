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

#include "asrlink/connector.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace asrlink::connector {

namespace {

constexpr std::uint32_t kMagic = 0x41434F4E;  // "ACON"
constexpr std::uint32_t kVersion = 1;
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

void write_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::ifstream& in, const std::string& path) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw ParseError("truncated connector checkpoint: " + path);
  return v;
}

void write_block(std::ofstream& out, const double* p, std::size_t n) {
  out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

void read_block(std::ifstream& in, double* p, std::size_t n, const std::string& path) {
  in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw ParseError("truncated connector checkpoint: " + path);
}

}  // namespace

ConnectorParams ConnectorParams::init(int K, int embed_dim, int d_mid, int d_llm,
                                      std::uint64_t seed) {
  if (K < 1) throw ConfigError("downsampling factor K must be >= 1");
  if (embed_dim < 1 || d_mid < 1 || d_llm < 1)
    throw ConfigError("connector dimensions must be positive");
  ConnectorParams p;
  p.K = K;
  Rng rng(mix_seed(seed, 0xC0FFEE));
  const int in_features = embed_dim * K;
  double bound1 = 1.0 / std::sqrt(static_cast<double>(in_features));
  double bound2 = 1.0 / std::sqrt(static_cast<double>(d_mid));
  p.w1 = Matrix::random_uniform(in_features, d_mid, -bound1, bound1, rng);
  p.b1.assign(d_mid, 0.0);
  p.w2 = Matrix::random_uniform(d_mid, d_llm, -bound2, bound2, rng);
  p.b2.assign(d_llm, 0.0);
  return p;
}

void ConnectorParams::validate() const {
  if (K < 1) throw ConfigError("downsampling factor K must be >= 1");
  if (w1.cols != static_cast<int>(b1.size()) || w2.cols != static_cast<int>(b2.size()) ||
      w1.cols != w2.rows)
    throw ShapeError("connector parameter dimensions are inconsistent");
  if (w1.rows % K != 0)
    throw ShapeError("connector input features not divisible by K");
  if (!w1.all_finite() || !w2.all_finite()) throw ShapeError("non-finite connector weight");
  for (double x : b1)
    if (!std::isfinite(x)) throw ShapeError("non-finite connector bias");
  for (double x : b2)
    if (!std::isfinite(x)) throw ShapeError("non-finite connector bias");
}

void ConnectorParams::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write connector checkpoint: " + path);
  write_u32(out, kMagic);
  write_u32(out, kVersion);
  write_u32(out, static_cast<std::uint32_t>(K));
  write_u32(out, static_cast<std::uint32_t>(w1.rows));
  write_u32(out, static_cast<std::uint32_t>(w1.cols));
  write_u32(out, static_cast<std::uint32_t>(w2.cols));
  write_block(out, w1.v.data(), w1.v.size());
  write_block(out, b1.data(), b1.size());
  write_block(out, w2.v.data(), w2.v.size());
  write_block(out, b2.data(), b2.size());
  if (!out) throw IoError("write failed: " + path);
}

ConnectorParams ConnectorParams::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open connector checkpoint: " + path);
  if (read_u32(in, path) != kMagic) throw ParseError("not a connector checkpoint: " + path);
  if (read_u32(in, path) != kVersion) throw ParseError("unsupported checkpoint version: " + path);
  ConnectorParams p;
  p.K = static_cast<int>(read_u32(in, path));
  int in_features = static_cast<int>(read_u32(in, path));
  int d_mid = static_cast<int>(read_u32(in, path));
  int d_llm = static_cast<int>(read_u32(in, path));
  if (p.K < 1 || in_features < 1 || d_mid < 1 || d_llm < 1 || in_features % p.K != 0)
    throw ParseError("invalid connector checkpoint dimensions: " + path);
  p.w1 = Matrix(in_features, d_mid);
  p.b1.assign(d_mid, 0.0);
  p.w2 = Matrix(d_mid, d_llm);
  p.b2.assign(d_llm, 0.0);
  read_block(in, p.w1.v.data(), p.w1.v.size(), path);
  read_block(in, p.b1.data(), p.b1.size(), path);
  read_block(in, p.w2.v.data(), p.w2.v.size(), path);
  read_block(in, p.b2.data(), p.b2.size(), path);
  p.validate();
  return p;
}

std::uint64_t ConnectorParams::checksum() const {
  std::uint64_t h = fnv1a(&K, sizeof(K));
  h = fnv1a(w1.v.data(), w1.v.size() * sizeof(double), h);
  h = fnv1a(b1.data(), b1.size() * sizeof(double), h);
  h = fnv1a(w2.v.data(), w2.v.size() * sizeof(double), h);
  return fnv1a(b2.data(), b2.size() * sizeof(double), h);
}

ConnectorGradients ConnectorGradients::zeros_like(const ConnectorParams& p) {
  ConnectorGradients g;
  g.dw1 = Matrix(p.w1.rows, p.w1.cols);
  g.db1.assign(p.b1.size(), 0.0);
  g.dw2 = Matrix(p.w2.rows, p.w2.cols);
  g.db2.assign(p.b2.size(), 0.0);
  return g;
}

void ConnectorGradients::add_scaled(const ConnectorGradients& other, double scale) {
  for (std::size_t i = 0; i < dw1.v.size(); ++i) dw1.v[i] += scale * other.dw1.v[i];
  for (std::size_t i = 0; i < db1.size(); ++i) db1[i] += scale * other.db1[i];
  for (std::size_t i = 0; i < dw2.v.size(); ++i) dw2.v[i] += scale * other.dw2.v[i];
  for (std::size_t i = 0; i < db2.size(); ++i) db2[i] += scale * other.db2[i];
}

bool ConnectorGradients::all_finite() const {
  if (!dw1.all_finite() || !dw2.all_finite()) return false;
  for (double x : db1)
    if (!std::isfinite(x)) return false;
  for (double x : db2)
    if (!std::isfinite(x)) return false;
  return true;
}

Tensor3 downsample_stack(const Tensor3& h, int K) {
  if (K < 1) throw ConfigError("downsampling factor K must be >= 1");
  const int out_steps = (h.steps + K - 1) / K;
  Tensor3 out(h.batch, out_steps, h.chans * K);
  for (int b = 0; b < h.batch; ++b) {
    out.lengths[b] = (h.lengths[b] + K - 1) / K;
    for (int j = 0; j < out.lengths[b]; ++j) {
      double* dst = out.frame(b, j);
      for (int k = 0; k < K; ++k) {
        int t = j * K + k;
        if (t >= h.lengths[b]) break;  // trailing group stays zero-padded
        std::memcpy(dst + static_cast<std::size_t>(k) * h.chans, h.frame(b, t),
                    sizeof(double) * h.chans);
      }
    }
  }
  return out;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_derivative(double x) {
  double phi_cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
  double phi_pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
  return phi_cdf + x * phi_pdf;
}

Matrix gelu(const Matrix& x) {
  Matrix out = x;
  for (auto& v : out.v) v = gelu(v);
  return out;
}

ProjectedEmbeddings connector_forward(const encoder::AcousticEmbeddings& h,
                                      const ConnectorParams& params) {
  params.validate();
  if (h.data.chans * params.K != params.in_features())
    throw ShapeError("connector expects stacked dim " + std::to_string(params.in_features()) +
                     ", got E*K = " + std::to_string(h.data.chans * params.K));
  Tensor3 stacked = downsample_stack(h.data, params.K);

  const int d_mid = params.mid_dim();
  const int d_llm = params.out_dim();
  ProjectedEmbeddings out;
  out.data = Tensor3(stacked.batch, stacked.steps, d_llm);
  out.data.lengths = stacked.lengths;

  std::vector<double> mid(d_mid);
  for (int b = 0; b < stacked.batch; ++b) {
    for (int j = 0; j < stacked.lengths[b]; ++j) {
      std::copy(params.b1.begin(), params.b1.end(), mid.begin());
      vec_matmul_acc(stacked.frame(b, j), params.w1, mid.data());
      for (auto& m : mid) m = gelu(m);
      double* dst = out.data.frame(b, j);
      std::copy(params.b2.begin(), params.b2.end(), dst);
      vec_matmul_acc(mid.data(), params.w2, dst);
    }
  }
  return out;
}

ConnectorGradients connector_backward(const encoder::AcousticEmbeddings& h,
                                      const ConnectorParams& params, const Tensor3& d_proj,
                                      Tensor3* d_speech) {
  params.validate();
  Tensor3 stacked = downsample_stack(h.data, params.K);
  if (d_proj.batch != stacked.batch || d_proj.steps != stacked.steps ||
      d_proj.chans != params.out_dim())
    throw ShapeError("connector_backward: upstream gradient shape mismatch");

  const int d_mid = params.mid_dim();
  ConnectorGradients g = ConnectorGradients::zeros_like(params);
  if (d_speech) {
    *d_speech = Tensor3(h.data.batch, h.data.steps, h.data.chans);
    d_speech->lengths = h.data.lengths;
  }

  std::vector<double> pre1(d_mid), act1(d_mid), d_act1(d_mid), d_pre1(d_mid);
  std::vector<double> d_stacked(params.in_features());
  for (int b = 0; b < stacked.batch; ++b) {
    for (int j = 0; j < stacked.lengths[b]; ++j) {
      const double* x = stacked.frame(b, j);
      std::copy(params.b1.begin(), params.b1.end(), pre1.begin());
      vec_matmul_acc(x, params.w1, pre1.data());
      for (int m = 0; m < d_mid; ++m) act1[m] = gelu(pre1[m]);

      const double* dy = d_proj.frame(b, j);
      outer_acc(act1.data(), dy, g.dw2);
      for (int c = 0; c < params.out_dim(); ++c) g.db2[c] += dy[c];

      std::fill(d_act1.begin(), d_act1.end(), 0.0);
      vec_matmul_transpose_acc(dy, params.w2, d_act1.data());
      for (int m = 0; m < d_mid; ++m) d_pre1[m] = d_act1[m] * gelu_derivative(pre1[m]);

      outer_acc(x, d_pre1.data(), g.dw1);
      for (int m = 0; m < d_mid; ++m) g.db1[m] += d_pre1[m];

      if (d_speech) {
        std::fill(d_stacked.begin(), d_stacked.end(), 0.0);
        vec_matmul_transpose_acc(d_pre1.data(), params.w1, d_stacked.data());
        for (int k = 0; k < params.K; ++k) {
          int t = j * params.K + k;
          if (t >= h.data.lengths[b]) break;
          double* dst = d_speech->frame(b, t);
          const double* src = d_stacked.data() + static_cast<std::size_t>(k) * h.data.chans;
          for (int c = 0; c < h.data.chans; ++c) dst[c] += src[c];
        }
      }
    }
  }
  return g;
}

}  // namespace asrlink::connector
