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

#include "asrlink/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include "asrlink/optimizer.hpp"

namespace asrlink::decoder {

namespace {

constexpr std::uint32_t kMagic = 0x41444543;  // "ADEC"
constexpr std::uint32_t kVersion = 1;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void write_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::ifstream& in, const std::string& path) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw ParseError("truncated decoder checkpoint: " + path);
  return v;
}

}  // namespace

Vocabulary Vocabulary::syllabic() {
  Vocabulary v;
  v.symbols.push_back(' ');
  for (char c = 'a'; c <= 'z'; ++c) v.symbols.push_back(c);
  return v;
}

Vocabulary Vocabulary::from_text(const std::vector<std::string>& texts) {
  std::set<char> chars;
  for (const auto& t : texts)
    for (char c : t) chars.insert(c);
  Vocabulary v;
  v.symbols.assign(chars.begin(), chars.end());
  return v;
}

std::vector<int> Vocabulary::encode(const std::string& text) const {
  std::vector<int> out;
  out.reserve(text.size());
  for (char c : text) {
    auto it = std::find(symbols.begin(), symbols.end(), c);
    if (it == symbols.end())
      throw ValidationError(std::string("character '") + c + "' not in vocabulary");
    out.push_back(static_cast<int>(it - symbols.begin()));
  }
  return out;
}

std::string Vocabulary::decode(const std::vector<int>& tokens) const {
  std::string out;
  for (int t : tokens) {
    if (t < 0 || t >= size()) throw ValidationError("token id out of range: " + std::to_string(t));
    if (t < static_cast<int>(symbols.size())) out += symbols[t];
  }
  return out;
}

DecoderParams DecoderParams::init(const Vocabulary& vocab, int d_llm, int d_dec, int prompt_len,
                                  std::uint64_t seed) {
  if (d_llm < 1 || d_dec < 1 || prompt_len < 0)
    throw ConfigError("decoder dimensions must be positive");
  DecoderParams p;
  p.vocab = vocab;
  Rng rng(mix_seed(seed, 0xDEC0DE));
  const int v = vocab.size();
  const double bx = 1.0 / std::sqrt(static_cast<double>(d_llm));
  const double bh = 1.0 / std::sqrt(static_cast<double>(d_dec));
  p.token_embedding = Matrix::random_uniform(v, d_llm, -0.5, 0.5, rng);
  p.w_z = Matrix::random_uniform(d_llm, d_dec, -bx, bx, rng);
  p.w_r = Matrix::random_uniform(d_llm, d_dec, -bx, bx, rng);
  p.w_c = Matrix::random_uniform(d_llm, d_dec, -bx, bx, rng);
  p.u_z = Matrix::random_uniform(d_dec, d_dec, -bh, bh, rng);
  p.u_r = Matrix::random_uniform(d_dec, d_dec, -bh, bh, rng);
  p.u_c = Matrix::random_uniform(d_dec, d_dec, -bh, bh, rng);
  p.b_z.assign(d_dec, 0.0);
  p.b_r.assign(d_dec, 0.0);
  p.b_c.assign(d_dec, 0.0);
  p.w_out = Matrix::random_uniform(d_dec, v, -bh, bh, rng);
  p.b_out.assign(v, 0.0);
  p.prompt_embedding = Matrix::random_uniform(prompt_len, d_llm, -0.5, 0.5, rng);
  return p;
}

std::vector<TensorView> DecoderParams::tensor_refs() {
  return {
      {token_embedding.v.data(), token_embedding.v.size(), "token_embedding"},
      {w_z.v.data(), w_z.v.size(), "w_z"},
      {u_z.v.data(), u_z.v.size(), "u_z"},
      {b_z.data(), b_z.size(), "b_z"},
      {w_r.v.data(), w_r.v.size(), "w_r"},
      {u_r.v.data(), u_r.v.size(), "u_r"},
      {b_r.data(), b_r.size(), "b_r"},
      {w_c.v.data(), w_c.v.size(), "w_c"},
      {u_c.v.data(), u_c.v.size(), "u_c"},
      {b_c.data(), b_c.size(), "b_c"},
      {w_out.v.data(), w_out.v.size(), "w_out"},
      {b_out.data(), b_out.size(), "b_out"},
      {prompt_embedding.v.data(), prompt_embedding.v.size(), "prompt_embedding"},
  };
}

DecoderGradients::DecoderGradients(const DecoderParams& like) : shadow(like) { zero(); }

void DecoderGradients::zero() {
  for (auto& ref : shadow.tensor_refs()) std::fill(ref.data, ref.data + ref.size, 0.0);
}

void DecoderParams::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write decoder checkpoint: " + path);
  write_u32(out, kMagic);
  write_u32(out, kVersion);
  write_u32(out, static_cast<std::uint32_t>(vocab.symbols.size()));
  out.write(vocab.symbols.data(), static_cast<std::streamsize>(vocab.symbols.size()));
  write_u32(out, static_cast<std::uint32_t>(d_llm()));
  write_u32(out, static_cast<std::uint32_t>(d_dec()));
  write_u32(out, static_cast<std::uint32_t>(prompt_len()));
  for (const auto& ref : const_cast<DecoderParams*>(this)->tensor_refs())
    out.write(reinterpret_cast<const char*>(ref.data),
              static_cast<std::streamsize>(ref.size * sizeof(double)));
  if (!out) throw IoError("write failed: " + path);
}

DecoderParams DecoderParams::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open decoder checkpoint: " + path);
  if (read_u32(in, path) != kMagic) throw ParseError("not a decoder checkpoint: " + path);
  if (read_u32(in, path) != kVersion) throw ParseError("unsupported checkpoint version: " + path);
  std::uint32_t n_sym = read_u32(in, path);
  Vocabulary vocab;
  vocab.symbols.resize(n_sym);
  in.read(vocab.symbols.data(), static_cast<std::streamsize>(n_sym));
  if (!in) throw ParseError("truncated decoder checkpoint: " + path);
  int d_llm = static_cast<int>(read_u32(in, path));
  int d_dec = static_cast<int>(read_u32(in, path));
  int prompt_len = static_cast<int>(read_u32(in, path));
  DecoderParams p = DecoderParams::init(vocab, d_llm, d_dec, prompt_len, 0);
  for (auto& ref : p.tensor_refs()) {
    in.read(reinterpret_cast<char*>(ref.data),
            static_cast<std::streamsize>(ref.size * sizeof(double)));
    if (!in) throw ParseError("truncated decoder checkpoint: " + path);
  }
  return p;
}

std::uint64_t DecoderParams::checksum() const {
  std::uint64_t h = fnv1a(vocab.symbols.data(), vocab.symbols.size());
  for (const auto& ref : const_cast<DecoderParams*>(this)->tensor_refs())
    h = fnv1a(ref.data, ref.size * sizeof(double), h);
  return h;
}

// ---------------------------------------------------------------------------
// Sequence engine: forward with activation cache, exact reverse-mode through
// the gated recurrence back to every input vector.
// ---------------------------------------------------------------------------

namespace {

enum class InKind { Prompt, Speech, Token };

struct InRef {
  InKind kind;
  int idx;  // prompt row / speech step / token id
};

struct StepCache {
  std::vector<double> x, h_prev, z, r, c, h;
};

struct SeqContext {
  const DecoderParams* p = nullptr;
  const Tensor3* speech = nullptr;  // may be null when no speech inputs occur
  int speech_item = 0;
};

const double* input_vector(const SeqContext& ctx, const InRef& ref) {
  switch (ref.kind) {
    case InKind::Prompt: return ctx.p->prompt_embedding.row(ref.idx);
    case InKind::Speech: return ctx.speech->frame(ctx.speech_item, ref.idx);
    case InKind::Token: return ctx.p->token_embedding.row(ref.idx);
  }
  return nullptr;
}

void gru_cell_forward(const DecoderParams& p, const double* x, const std::vector<double>& h_prev,
                      std::vector<double>& z, std::vector<double>& r, std::vector<double>& c,
                      std::vector<double>& h) {
  const int d = p.d_dec();
  z.assign(p.b_z.begin(), p.b_z.end());
  r.assign(p.b_r.begin(), p.b_r.end());
  vec_matmul_acc(x, p.w_z, z.data());
  vec_matmul_acc(h_prev.data(), p.u_z, z.data());
  vec_matmul_acc(x, p.w_r, r.data());
  vec_matmul_acc(h_prev.data(), p.u_r, r.data());
  for (int i = 0; i < d; ++i) {
    z[i] = sigmoid(z[i]);
    r[i] = sigmoid(r[i]);
  }
  c.assign(p.b_c.begin(), p.b_c.end());
  vec_matmul_acc(x, p.w_c, c.data());
  std::vector<double> rh(d);
  for (int i = 0; i < d; ++i) rh[i] = r[i] * h_prev[i];
  vec_matmul_acc(rh.data(), p.u_c, c.data());
  for (int i = 0; i < d; ++i) c[i] = std::tanh(c[i]);
  h.resize(d);
  for (int i = 0; i < d; ++i) h[i] = (1.0 - z[i]) * h_prev[i] + z[i] * c[i];
}

void compute_logits(const DecoderParams& p, const std::vector<double>& h, std::vector<double>& out) {
  out.assign(p.b_out.begin(), p.b_out.end());
  vec_matmul_acc(h.data(), p.w_out, out.data());
}

// log softmax in place; returns logsumexp
double log_softmax_inplace(std::vector<double>& logits) {
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - mx);
  double lse = mx + std::log(sum);
  for (double& v : logits) v -= lse;
  return lse;
}

// Forward over the full input list. targets_at[t] is the supervised target
// at step t or -1. Returns summed NLL over supervised steps.
double sequence_forward(const SeqContext& ctx, const std::vector<InRef>& inputs,
                        const std::vector<int>& targets_at, std::vector<StepCache>* cache) {
  const DecoderParams& p = *ctx.p;
  const int d = p.d_dec();
  std::vector<double> h_prev(d, 0.0);
  std::vector<double> z, r, c, h, logits;
  double nll = 0.0;
  if (cache) cache->resize(inputs.size());
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const double* x = input_vector(ctx, inputs[t]);
    gru_cell_forward(p, x, h_prev, z, r, c, h);
    if (targets_at[t] >= 0) {
      compute_logits(p, h, logits);
      log_softmax_inplace(logits);
      nll -= logits[targets_at[t]];
    }
    if (cache) {
      StepCache& sc = (*cache)[t];
      sc.x.assign(x, x + p.d_llm());
      sc.h_prev = h_prev;
      sc.z = z;
      sc.r = r;
      sc.c = c;
      sc.h = h;
    }
    h_prev = h;
  }
  return nll;
}

// Reverse pass. scale multiplies every gradient (1 / total valid targets).
// d_params may be null (frozen decoder); d_speech, when non-null, receives
// gradients for Speech inputs of this item (rows indexed by speech step).
void sequence_backward(const SeqContext& ctx, const std::vector<InRef>& inputs,
                       const std::vector<int>& targets_at, const std::vector<StepCache>& cache,
                       double scale, DecoderParams* d_params, Matrix* d_speech) {
  const DecoderParams& p = *ctx.p;
  const int d = p.d_dec();
  const int dl = p.d_llm();
  std::vector<double> dh(d, 0.0);
  std::vector<double> dh_prev(d), logits, dac(d), dar(d), daz(d), drh(d), dx(dl), rh(d);

  for (int t = static_cast<int>(inputs.size()) - 1; t >= 0; --t) {
    const StepCache& sc = cache[t];

    if (targets_at[t] >= 0) {
      compute_logits(p, sc.h, logits);
      log_softmax_inplace(logits);
      for (auto& v : logits) v = std::exp(v);  // softmax probabilities
      logits[targets_at[t]] -= 1.0;
      for (auto& v : logits) v *= scale;
      // dh += dlogits . w_out^T ; dW_out += h^T dlogits
      vec_matmul_transpose_acc(logits.data(), p.w_out, dh.data());
      if (d_params) {
        outer_acc(sc.h.data(), logits.data(), d_params->w_out);
        for (int i = 0; i < p.vocab_size(); ++i) d_params->b_out[i] += logits[i];
      }
    }

    std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
    std::fill(dx.begin(), dx.end(), 0.0);
    for (int i = 0; i < d; ++i) rh[i] = sc.r[i] * sc.h_prev[i];

    for (int i = 0; i < d; ++i) {
      double dz = dh[i] * (sc.c[i] - sc.h_prev[i]);
      double dc = dh[i] * sc.z[i];
      dh_prev[i] += dh[i] * (1.0 - sc.z[i]);
      dac[i] = dc * (1.0 - sc.c[i] * sc.c[i]);
      daz[i] = dz * sc.z[i] * (1.0 - sc.z[i]);
    }
    // candidate path
    vec_matmul_transpose_acc(dac.data(), p.w_c, dx.data());
    std::fill(drh.begin(), drh.end(), 0.0);
    vec_matmul_transpose_acc(dac.data(), p.u_c, drh.data());
    if (d_params) {
      outer_acc(sc.x.data(), dac.data(), d_params->w_c);
      outer_acc(rh.data(), dac.data(), d_params->u_c);
      for (int i = 0; i < d; ++i) d_params->b_c[i] += dac[i];
    }
    for (int i = 0; i < d; ++i) {
      double dr = drh[i] * sc.h_prev[i];
      dh_prev[i] += drh[i] * sc.r[i];
      dar[i] = dr * sc.r[i] * (1.0 - sc.r[i]);
    }
    // reset gate path
    vec_matmul_transpose_acc(dar.data(), p.w_r, dx.data());
    vec_matmul_transpose_acc(dar.data(), p.u_r, dh_prev.data());
    if (d_params) {
      outer_acc(sc.x.data(), dar.data(), d_params->w_r);
      outer_acc(sc.h_prev.data(), dar.data(), d_params->u_r);
      for (int i = 0; i < d; ++i) d_params->b_r[i] += dar[i];
    }
    // update gate path
    vec_matmul_transpose_acc(daz.data(), p.w_z, dx.data());
    vec_matmul_transpose_acc(daz.data(), p.u_z, dh_prev.data());
    if (d_params) {
      outer_acc(sc.x.data(), daz.data(), d_params->w_z);
      outer_acc(sc.h_prev.data(), daz.data(), d_params->u_z);
      for (int i = 0; i < d; ++i) d_params->b_z[i] += daz[i];
    }

    // hand dx to whichever input produced x at this step
    switch (inputs[t].kind) {
      case InKind::Prompt:
        if (d_params) {
          double* row = d_params->prompt_embedding.row(inputs[t].idx);
          for (int i = 0; i < dl; ++i) row[i] += dx[i];
        }
        break;
      case InKind::Token:
        if (d_params) {
          double* row = d_params->token_embedding.row(inputs[t].idx);
          for (int i = 0; i < dl; ++i) row[i] += dx[i];
        }
        break;
      case InKind::Speech:
        if (d_speech) {
          double* row = d_speech->row(inputs[t].idx);
          for (int i = 0; i < dl; ++i) row[i] += dx[i];
        }
        break;
    }

    dh = dh_prev;
  }
}

// Strips trailing PADs, validates EOS-final shape, returns clean target.
std::vector<int> clean_target(const std::vector<int>& target, const Vocabulary& vocab) {
  std::vector<int> t = target;
  while (!t.empty() && t.back() == vocab.pad()) t.pop_back();
  if (t.empty()) throw ValidationError("empty target sequence");
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < 0 || t[i] >= vocab.size())
      throw ValidationError("target token id out of range: " + std::to_string(t[i]));
    if (t[i] == vocab.pad())
      throw ValidationError("PAD inside target sequence");
    if (t[i] == vocab.eos() && i + 1 != t.size())
      throw ValidationError("EOS before end of target sequence");
  }
  if (t.back() != vocab.eos()) throw ValidationError("target sequence must end with EOS");
  return t;
}

std::vector<InRef> build_inputs(const DecoderParams& p, int speech_len,
                                const std::vector<int>& target, std::vector<int>* targets_at) {
  std::vector<InRef> inputs;
  inputs.reserve(p.prompt_len() + speech_len + target.size());
  for (int i = 0; i < p.prompt_len(); ++i) inputs.push_back({InKind::Prompt, i});
  for (int t = 0; t < speech_len; ++t) inputs.push_back({InKind::Speech, t});
  inputs.push_back({InKind::Token, p.vocab.bos()});
  for (std::size_t i = 0; i + 1 < target.size(); ++i)
    inputs.push_back({InKind::Token, target[i]});
  targets_at->assign(inputs.size(), -1);
  const std::size_t first = inputs.size() - target.size();
  for (std::size_t i = 0; i < target.size(); ++i) (*targets_at)[first + i] = target[i];
  return inputs;
}

}  // namespace

DecoderParams pretrain_decoder(const std::vector<std::string>& texts, const Vocabulary& vocab,
                               const PretrainConfig& config, PretrainLog* log) {
  if (texts.empty()) throw ConfigError("pretrain_decoder: empty text corpus");
  if (config.epochs < 1 || config.batch_size < 1)
    throw ConfigError("pretrain_decoder: epochs and batch_size must be positive");

  DecoderParams params =
      DecoderParams::init(vocab, config.d_llm, config.d_dec, config.prompt_len, config.seed);

  std::vector<std::vector<int>> targets;
  targets.reserve(texts.size());
  for (const auto& t : texts) {
    std::vector<int> seq = vocab.encode(t);
    seq.push_back(vocab.eos());
    targets.push_back(std::move(seq));
  }

  DecoderGradients grads(params);
  auto param_refs = params.tensor_refs();
  training::OptimizerState opt = training::OptimizerState::for_params(param_refs);
  training::AdamWConfig adamw;
  adamw.learning_rate = config.learning_rate;
  adamw.weight_decay = config.weight_decay;

  std::vector<std::size_t> order(targets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  SeqContext ctx;
  ctx.p = &params;

  std::vector<StepCache> cache;
  std::vector<int> targets_at;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle_rng(mix_seed(config.seed, 0xB00 + static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    double epoch_nll = 0.0;
    std::size_t epoch_tokens = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      std::size_t end = std::min(order.size(), start + config.batch_size);
      std::size_t batch_tokens = 0;
      for (std::size_t i = start; i < end; ++i) batch_tokens += targets[order[i]].size();

      grads.zero();
      for (std::size_t i = start; i < end; ++i) {
        const auto& tgt = targets[order[i]];
        std::vector<InRef> inputs = build_inputs(params, 0, tgt, &targets_at);
        double nll = sequence_forward(ctx, inputs, targets_at, &cache);
        epoch_nll += nll;
        sequence_backward(ctx, inputs, targets_at, cache, 1.0 / static_cast<double>(batch_tokens),
                          &grads.shadow, nullptr);
      }
      epoch_tokens += batch_tokens;
      adamw_step(param_refs, grads.tensor_refs(), opt, adamw);
    }
    if (log) log->epoch_loss.push_back(epoch_nll / static_cast<double>(epoch_tokens));
  }
  return params;
}

double lm_mean_nll(const DecoderParams& params, const std::vector<std::string>& texts) {
  if (texts.empty()) throw ConfigError("lm_mean_nll: no texts");
  SeqContext ctx;
  ctx.p = &params;
  double nll = 0.0;
  std::size_t count = 0;
  std::vector<int> targets_at;
  for (const auto& t : texts) {
    std::vector<int> tgt = params.vocab.encode(t);
    tgt.push_back(params.vocab.eos());
    std::vector<InRef> inputs = build_inputs(params, 0, tgt, &targets_at);
    nll += sequence_forward(ctx, inputs, targets_at, nullptr);
    count += tgt.size();
  }
  return nll / static_cast<double>(count);
}

TeacherForcedResult teacher_forced_loss(const connector::ProjectedEmbeddings& h_proj,
                                        const std::vector<std::vector<int>>& targets,
                                        const DecoderParams& params) {
  const Tensor3& speech = h_proj.data;
  if (speech.chans != params.d_llm())
    throw ShapeError("teacher_forced_loss: projected dim " + std::to_string(speech.chans) +
                     " != decoder d_llm " + std::to_string(params.d_llm()));
  if (static_cast<std::size_t>(speech.batch) != targets.size())
    throw ShapeError("teacher_forced_loss: batch size mismatch");

  std::vector<std::vector<int>> clean(targets.size());
  std::size_t total_tokens = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    clean[i] = clean_target(targets[i], params.vocab);
    total_tokens += clean[i].size();
  }

  TeacherForcedResult res;
  res.d_proj = Tensor3(speech.batch, speech.steps, speech.chans);
  res.d_proj.lengths = speech.lengths;

  SeqContext ctx;
  ctx.p = &params;
  ctx.speech = &speech;

  const double scale = 1.0 / static_cast<double>(total_tokens);
  std::vector<StepCache> cache;
  std::vector<int> targets_at;
  double nll = 0.0;
  for (int b = 0; b < speech.batch; ++b) {
    ctx.speech_item = b;
    std::vector<InRef> inputs = build_inputs(params, speech.lengths[b], clean[b], &targets_at);
    nll += sequence_forward(ctx, inputs, targets_at, &cache);
    Matrix d_item(speech.steps, speech.chans);
    sequence_backward(ctx, inputs, targets_at, cache, scale, nullptr, &d_item);
    for (int t = 0; t < speech.lengths[b]; ++t)
      std::copy(d_item.row(t), d_item.row(t) + speech.chans, res.d_proj.frame(b, t));
  }
  res.loss = nll * scale;
  return res;
}

connector::ConnectorGradients connector_loss_gradients(const encoder::AcousticEmbeddings& h,
                                                       const connector::ConnectorParams& conn,
                                                       const std::vector<std::vector<int>>& targets,
                                                       const DecoderParams& params,
                                                       double* loss_out) {
  connector::ProjectedEmbeddings proj = connector::connector_forward(h, conn);
  TeacherForcedResult tf = teacher_forced_loss(proj, targets, params);
  if (loss_out) *loss_out = tf.loss;
  return connector::connector_backward(h, conn, tf.d_proj);
}

// ---------------------------------------------------------------------------
// Beam search
// ---------------------------------------------------------------------------

namespace {

struct Hypothesis {
  std::vector<int> tokens;
  double logp = 0.0;
  std::vector<double> state;
};

// compares a + [a_tail] against b + [b_tail] lexicographically
bool lex_less(const std::vector<int>& a, int a_tail, const std::vector<int>& b, int b_tail) {
  const std::size_t an = a.size() + 1, bn = b.size() + 1;
  const std::size_t n = std::min(an, bn);
  for (std::size_t i = 0; i < n; ++i) {
    int av = i < a.size() ? a[i] : a_tail;
    int bv = i < b.size() ? b[i] : b_tail;
    if (av != bv) return av < bv;
  }
  return an < bn;
}

std::vector<double> prefix_state(const connector::ProjectedEmbeddings& h_proj,
                                 const DecoderParams& params, int item) {
  const Tensor3& speech = h_proj.data;
  if (item < 0 || item >= speech.batch) throw ShapeError("beam_search: item out of range");
  if (speech.chans != params.d_llm())
    throw ShapeError("beam_search: projected dim != decoder d_llm");
  std::vector<double> h(params.d_dec(), 0.0), z, r, c, hn;
  for (int i = 0; i < params.prompt_len(); ++i) {
    gru_cell_forward(params, params.prompt_embedding.row(i), h, z, r, c, hn);
    h = hn;
  }
  for (int t = 0; t < speech.lengths[item]; ++t) {
    gru_cell_forward(params, speech.frame(item, t), h, z, r, c, hn);
    h = hn;
  }
  gru_cell_forward(params, params.token_embedding.row(params.vocab.bos()), h, z, r, c, hn);
  return hn;
}

}  // namespace

DecodeOutput beam_search(const connector::ProjectedEmbeddings& h_proj, const DecoderParams& params,
                         int beam_size, int max_len, int item) {
  if (beam_size < 1) throw ConfigError("beam_size must be >= 1");
  if (max_len < 1) throw ConfigError("max_len must be >= 1");
  const Vocabulary& vocab = params.vocab;

  std::vector<int> allowed;
  for (int t = 0; t < vocab.size(); ++t)
    if (t != vocab.bos() && t != vocab.pad()) allowed.push_back(t);

  std::vector<Hypothesis> live;
  live.push_back({{}, 0.0, prefix_state(h_proj, params, item)});

  struct Completed {
    std::vector<int> tokens;
    double logp;
  };
  std::vector<Completed> completed;

  struct Candidate {
    int hyp;
    int token;
    double score;
  };

  std::vector<double> logits;
  std::vector<double> z, r, c, hn;
  for (int step = 0; step < max_len && !live.empty(); ++step) {
    std::vector<Candidate> cands;
    cands.reserve(live.size() * allowed.size());
    for (std::size_t i = 0; i < live.size(); ++i) {
      compute_logits(params, live[i].state, logits);
      log_softmax_inplace(logits);
      for (int tok : allowed)
        cands.push_back({static_cast<int>(i), tok, live[i].logp + logits[tok]});
    }
    std::stable_sort(cands.begin(), cands.end(), [&](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      return lex_less(live[a.hyp].tokens, a.token, live[b.hyp].tokens, b.token);
    });

    std::vector<Hypothesis> next;
    const std::size_t keep = std::min<std::size_t>(beam_size, cands.size());
    for (std::size_t i = 0; i < keep; ++i) {
      const Candidate& cd = cands[i];
      std::vector<int> toks = live[cd.hyp].tokens;
      toks.push_back(cd.token);
      if (cd.token == vocab.eos()) {
        completed.push_back({std::move(toks), cd.score});
      } else {
        gru_cell_forward(params, params.token_embedding.row(cd.token), live[cd.hyp].state, z, r, c,
                         hn);
        next.push_back({std::move(toks), cd.score, hn});
      }
    }
    live = std::move(next);
  }

  auto normalized = [](double logp, std::size_t len) {
    return logp / static_cast<double>(std::max<std::size_t>(1, len));
  };

  DecodeOutput out;
  if (!completed.empty()) {
    const Completed* best = &completed[0];
    for (const auto& cand : completed) {
      double a = normalized(cand.logp, cand.tokens.size());
      double b = normalized(best->logp, best->tokens.size());
      if (a > b || (a == b && cand.tokens < best->tokens)) best = &cand;
    }
    out.tokens = best->tokens;
    out.score = best->logp;
  } else {
    const Hypothesis* best = &live[0];
    for (const auto& cand : live) {
      double a = normalized(cand.logp, cand.tokens.size());
      double b = normalized(best->logp, best->tokens.size());
      if (a > b || (a == b && cand.tokens < best->tokens)) best = &cand;
    }
    out.tokens = best->tokens;
    out.score = best->logp;
  }
  out.text = vocab.decode(out.tokens);
  return out;
}

double replay_score(const connector::ProjectedEmbeddings& h_proj, const DecoderParams& params,
                    const std::vector<int>& tokens, int item) {
  std::vector<double> h = prefix_state(h_proj, params, item);
  std::vector<double> logits, z, r, c, hn;
  double total = 0.0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    compute_logits(params, h, logits);
    log_softmax_inplace(logits);
    total += logits[tokens[i]];
    if (i + 1 < tokens.size()) {
      gru_cell_forward(params, params.token_embedding.row(tokens[i]), h, z, r, c, hn);
      h = hn;
    }
  }
  return total;
}

}  // namespace asrlink::decoder
