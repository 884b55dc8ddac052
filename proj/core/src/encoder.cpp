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

#include "asrlink/encoder.hpp"

#include <cmath>

#include "asrlink/kvfile.hpp"

namespace asrlink::encoder {

EncoderParams EncoderParams::create(int frame_dim, int embed_dim, std::uint64_t seed) {
  if (frame_dim <= 0 || embed_dim <= 0) throw ConfigError("encoder dimensions must be positive");
  EncoderParams p;
  p.frame_dim = frame_dim;
  p.embed_dim = embed_dim;
  p.seed = seed;
  Rng rng(mix_seed(seed, 0xE4C0DE));
  double bound = 1.0 / std::sqrt(static_cast<double>(frame_dim));
  p.projection = Matrix::random_uniform(frame_dim, embed_dim, -bound, bound, rng);
  return p;
}

void EncoderParams::save(const std::string& path) const {
  KvFile f;
  auto& s = f.section("encoder");
  s.set("frame_dim", std::to_string(frame_dim));
  s.set("embed_dim", std::to_string(embed_dim));
  s.set("seed", std::to_string(seed));
  f.write_file(path);
}

EncoderParams EncoderParams::load(const std::string& path) {
  KvFile f = KvFile::parse_file(path);
  const auto& s = f.require("encoder");
  return create(static_cast<int>(s.get_int("frame_dim")), static_cast<int>(s.get_int("embed_dim")),
                s.get_u64_or("seed", 0));
}

std::uint64_t EncoderParams::checksum() const {
  std::uint64_t h = fnv1a(&frame_dim, sizeof(frame_dim));
  h = fnv1a(&embed_dim, sizeof(embed_dim), h);
  h = fnv1a(&seed, sizeof(seed), h);
  return fnv1a(projection.v.data(), projection.v.size() * sizeof(double), h);
}

AcousticEmbeddings encode(const std::vector<Matrix>& signals, const EncoderParams& params) {
  int max_t = 1;
  for (const auto& s : signals) {
    if (s.cols != params.frame_dim)
      throw ShapeError("encode: expected frame dim " + std::to_string(params.frame_dim) + ", got " +
                       std::to_string(s.cols));
    if (s.rows < 1) throw ShapeError("encode: empty signal");
    max_t = std::max(max_t, s.rows);
  }

  AcousticEmbeddings out;
  out.data = Tensor3(static_cast<int>(signals.size()), max_t, params.embed_dim);
  for (std::size_t b = 0; b < signals.size(); ++b) {
    const Matrix& sig = signals[b];
    out.data.lengths[b] = sig.rows;
    for (int t = 0; t < sig.rows; ++t) {
      double* row = out.data.frame(static_cast<int>(b), t);
      vec_matmul_acc(sig.row(t), params.projection, row);
      for (int e = 0; e < params.embed_dim; ++e) row[e] = std::tanh(row[e]);
    }
  }
  return out;
}

}  // namespace asrlink::encoder
