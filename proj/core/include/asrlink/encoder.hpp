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

#include "asrlink/tensor.hpp"

namespace asrlink::encoder {

// Frozen featurizer: a fixed random projection followed by tanh. Immutable
// after construction; the parameter file stores (seed, dims) so the matrix is
// reproduced bit-exactly on load.
struct EncoderParams {
  int frame_dim = 16;   // F
  int embed_dim = 32;   // E
  std::uint64_t seed = 0;
  Matrix projection;    // F x E

  static EncoderParams create(int frame_dim, int embed_dim, std::uint64_t seed);

  void save(const std::string& path) const;
  static EncoderParams load(const std::string& path);

  std::uint64_t checksum() const;
};

struct AcousticEmbeddings {
  Tensor3 data;  // B x T x E, zero past lengths[b]
};

// data[b, t, :] = tanh(signal[b][t] . projection). Pure in params (the
// backbone stays frozen through training).
AcousticEmbeddings encode(const std::vector<Matrix>& signals, const EncoderParams& params);

}  // namespace asrlink::encoder
