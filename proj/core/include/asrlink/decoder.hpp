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

#include "asrlink/connector.hpp"
#include "asrlink/tensor.hpp"

namespace asrlink::decoder {

// Character alphabet plus non-printable BOS/EOS/PAD ids appended after the
// printable symbols. Ids are dense from 0.
struct Vocabulary {
  std::vector<char> symbols;

  int bos() const { return static_cast<int>(symbols.size()); }
  int eos() const { return static_cast<int>(symbols.size()) + 1; }
  int pad() const { return static_cast<int>(symbols.size()) + 2; }
  int size() const { return static_cast<int>(symbols.size()) + 3; }

  // The fixed a-priori alphabet for syllabic corpora: space plus a-z.
  static Vocabulary syllabic();
  static Vocabulary from_text(const std::vector<std::string>& texts);

  std::vector<int> encode(const std::string& text) const;  // symbols only, no specials
  std::string decode(const std::vector<int>& tokens) const;  // drops specials

  bool operator==(const Vocabulary&) const = default;
};

// Single-layer gated recurrent decoder over [prompt; speech; text] prefixes.
// Frozen once pretrained; connector training only reads it.
struct DecoderParams {
  Vocabulary vocab;
  Matrix token_embedding;   // |V| x d_llm
  Matrix w_z, w_r, w_c;     // d_llm x d_dec
  Matrix u_z, u_r, u_c;     // d_dec x d_dec
  std::vector<double> b_z, b_r, b_c;  // d_dec
  Matrix w_out;             // d_dec x |V|
  std::vector<double> b_out;          // |V|
  Matrix prompt_embedding;  // prompt_len x d_llm

  int d_llm() const { return token_embedding.cols; }
  int d_dec() const { return w_z.cols; }
  int prompt_len() const { return prompt_embedding.rows; }
  int vocab_size() const { return vocab.size(); }

  static DecoderParams init(const Vocabulary& vocab, int d_llm, int d_dec, int prompt_len,
                            std::uint64_t seed);

  void save(const std::string& path) const;
  static DecoderParams load(const std::string& path);
  std::uint64_t checksum() const;

  // Parameter blocks in a fixed order, for the optimizer during pretraining.
  std::vector<TensorView> tensor_refs();
};

struct DecoderGradients {
  DecoderParams shadow;  // same shapes, holds gradient values
  explicit DecoderGradients(const DecoderParams& like);
  void zero();
  std::vector<TensorView> tensor_refs() { return shadow.tensor_refs(); }
};

struct PretrainConfig {
  int d_llm = 24;
  int d_dec = 64;
  int prompt_len = 4;
  int epochs = 30;
  int batch_size = 16;
  double learning_rate = 2e-3;
  double weight_decay = 0.0;
  std::uint64_t seed = 1;
};

struct PretrainLog {
  std::vector<double> epoch_loss;  // mean next-char NLL per epoch
};

// Trains the decoder as a pure character language model (next-character
// prediction, no speech input) for a fixed budget; deterministic in seed.
DecoderParams pretrain_decoder(const std::vector<std::string>& texts, const Vocabulary& vocab,
                               const PretrainConfig& config, PretrainLog* log = nullptr);

// Mean per-character NLL of the language model on texts (prompt + BOS fed
// first, EOS supervised). exp() of it is the perplexity.
double lm_mean_nll(const DecoderParams& params, const std::vector<std::string>& texts);

struct TeacherForcedResult {
  double loss = 0.0;  // mean NLL over valid target positions in the batch
  Tensor3 d_proj;     // exact gradient of loss w.r.t. the projected speech
};

// Cross-entropy of the target tokens given [prompt; speech; BOS; target...]
// with the decoder held fixed. Targets must end with EOS; trailing PAD ids
// are treated as padding, PAD before the end is a validation error.
TeacherForcedResult teacher_forced_loss(const connector::ProjectedEmbeddings& h_proj,
                                        const std::vector<std::vector<int>>& targets,
                                        const DecoderParams& params);

// Convenience: gradients of teacher_forced_loss w.r.t. connector parameters,
// i.e. connector_backward composed with the loss above.
connector::ConnectorGradients connector_loss_gradients(const encoder::AcousticEmbeddings& h,
                                                       const connector::ConnectorParams& conn,
                                                       const std::vector<std::vector<int>>& targets,
                                                       const DecoderParams& params,
                                                       double* loss_out = nullptr);

struct DecodeOutput {
  std::vector<int> tokens;  // ends with EOS when a hypothesis completed
  std::string text;
  double score = 0.0;  // total (unnormalized) log-probability
};

// Standard beam search over next-token log-probabilities conditioned on
// [prompt; speech]. Hypotheses are ranked by length-normalized total
// log-probability; ties break toward the lexicographically smaller token
// sequence. BOS and PAD are never proposed.
DecodeOutput beam_search(const connector::ProjectedEmbeddings& h_proj,
                         const DecoderParams& params, int beam_size, int max_len, int item = 0);

// Total log-probability the model assigns to emitting exactly these tokens
// after [prompt; speech]; used by score-additivity checks and enumeration
// oracles.
double replay_score(const connector::ProjectedEmbeddings& h_proj, const DecoderParams& params,
                    const std::vector<int>& tokens, int item = 0);

}  // namespace asrlink::decoder
