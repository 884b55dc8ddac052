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

#include "asrlink/corpus.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace asrlink::corpus {

namespace {

constexpr const char* kConsonants = "bcdfghjklmnpqrstvwxyz";  // 21
constexpr const char* kVowels = "aeiouy";                     // 6
constexpr int kNumConsonants = 21;
constexpr int kNumVowels = 6;

}  // namespace

int phoneme_universe_size() { return kNumConsonants * kNumVowels; }

std::string phoneme_name(int symbol_id) {
  if (symbol_id < 0 || symbol_id >= phoneme_universe_size())
    throw ConfigError("phoneme symbol id out of range: " + std::to_string(symbol_id));
  std::string s(2, ' ');
  s[0] = kConsonants[symbol_id / kNumVowels];
  s[1] = kVowels[symbol_id % kNumVowels];
  return s;
}

std::vector<int> word_to_phonemes(const std::string& word) {
  if (word.empty() || word.size() % 2 != 0)
    throw ValidationError("not a syllabic word: '" + word + "'");
  std::vector<int> ids;
  ids.reserve(word.size() / 2);
  for (std::size_t i = 0; i < word.size(); i += 2) {
    const char* c = std::strchr(kConsonants, word[i]);
    const char* v = std::strchr(kVowels, word[i + 1]);
    if (!c || !v) throw ValidationError("not a syllabic word: '" + word + "'");
    ids.push_back(static_cast<int>(c - kConsonants) * kNumVowels + static_cast<int>(v - kVowels));
  }
  return ids;
}

Matrix phoneme_template(int symbol_id, const CorpusParams& params) {
  if (symbol_id < 0 || symbol_id >= phoneme_universe_size())
    throw ConfigError("phoneme symbol id out of range: " + std::to_string(symbol_id));
  Rng rng(mix_seed(params.template_seed, static_cast<std::uint64_t>(symbol_id) + 1));
  Matrix t(params.frames_per_phoneme, params.frame_dim);
  for (auto& x : t.v) x = rng.uniform(-1.0, 1.0);
  return t;
}

FamilyPrototype family_prototype(const std::string& family_id, std::uint64_t seed,
                                 const CorpusParams& params) {
  const int universe = phoneme_universe_size();
  if (params.inventory_size <= 0 || params.inventory_size > universe)
    throw ConfigError("inventory_size out of range");
  Rng rng(mix_seed(seed, hash_str(family_id)));

  FamilyPrototype proto;
  proto.family_id = family_id;
  for (std::size_t idx : rng.sample_without_replacement(universe, params.inventory_size))
    proto.inventory.push_back(static_cast<int>(idx));

  std::set<int> in_proto(proto.inventory.begin(), proto.inventory.end());
  for (int s = 0; s < universe; ++s)
    if (!in_proto.count(s)) proto.fresh_pool.push_back(s);
  rng.shuffle(proto.fresh_pool);

  // prototype lexicon: distinct words over the prototype inventory
  std::set<std::string> seen;
  while (static_cast<int>(proto.lexicon.size()) < params.n_lexicon_words) {
    int len = params.word_min_phonemes +
              static_cast<int>(rng.uniform_int(params.word_max_phonemes - params.word_min_phonemes + 1));
    std::string w;
    for (int i = 0; i < len; ++i)
      w += phoneme_name(proto.inventory[rng.uniform_int(proto.inventory.size())]);
    if (seen.insert(w).second) proto.lexicon.push_back(w);
  }
  return proto;
}

std::vector<std::string> build_lexicon(const LanguageSpec& spec, const FamilyPrototype& prototype,
                                       const CorpusParams& params) {
  const int n_shared = static_cast<int>(spec.relatedness * spec.n_lexicon_words);
  std::vector<std::string> lex(prototype.lexicon.begin(), prototype.lexicon.begin() + n_shared);

  // Fresh words never collide with any prototype word, so lexicon overlap
  // with the prototype is exactly floor(relatedness * n_lexicon_words).
  std::set<std::string> forbidden(prototype.lexicon.begin(), prototype.lexicon.end());
  std::set<std::string> seen(lex.begin(), lex.end());
  Rng rng(spec.lexicon_seed);
  while (static_cast<int>(lex.size()) < spec.n_lexicon_words) {
    int len = params.word_min_phonemes +
              static_cast<int>(rng.uniform_int(params.word_max_phonemes - params.word_min_phonemes + 1));
    std::string w;
    for (int i = 0; i < len; ++i)
      w += phoneme_name(spec.phoneme_inventory[rng.uniform_int(spec.phoneme_inventory.size())]);
    if (forbidden.count(w) || !seen.insert(w).second) continue;
    lex.push_back(w);
  }
  return lex;
}

GeneratedFamily generate_family_full(const std::string& family_id, int n_languages,
                                     double relatedness, std::uint64_t seed,
                                     const CorpusParams& params) {
  if (n_languages < 1 || n_languages > 5)
    throw ConfigError("n_languages must be in [1, 5], got " + std::to_string(n_languages));
  if (relatedness < 0.0 || relatedness > 1.0)
    throw ConfigError("relatedness must be in [0, 1]");

  GeneratedFamily fam;
  fam.prototype = family_prototype(family_id, seed, params);

  const int n_shared_ph = static_cast<int>(relatedness * params.inventory_size);
  const int need = params.inventory_size - n_shared_ph;
  if (static_cast<std::size_t>(need) * n_languages > fam.prototype.fresh_pool.size())
    throw ConfigError("phoneme universe too small for " + std::to_string(n_languages) +
                      " languages at relatedness " + std::to_string(relatedness));

  const std::uint64_t family_stream = mix_seed(seed, hash_str(family_id));
  for (int i = 0; i < n_languages; ++i) {
    LanguageSpec spec;
    spec.language_id = family_id + "_" + std::to_string(i);
    spec.family_id = family_id;
    spec.relatedness = relatedness;
    spec.n_lexicon_words = params.n_lexicon_words;
    spec.lexicon_seed = mix_seed(family_stream, 0x1000 + static_cast<std::uint64_t>(i));
    spec.phoneme_inventory.assign(fam.prototype.inventory.begin(),
                                  fam.prototype.inventory.begin() + n_shared_ph);
    for (int f = 0; f < need; ++f)
      spec.phoneme_inventory.push_back(fam.prototype.fresh_pool[i * need + f]);
    fam.languages.push_back(Language{spec, build_lexicon(spec, fam.prototype, params)});
  }
  return fam;
}

std::vector<LanguageSpec> generate_family(const std::string& family_id, int n_languages,
                                          double relatedness, std::uint64_t seed,
                                          const CorpusParams& params) {
  GeneratedFamily fam = generate_family_full(family_id, n_languages, relatedness, seed, params);
  std::vector<LanguageSpec> specs;
  specs.reserve(fam.languages.size());
  for (auto& l : fam.languages) specs.push_back(std::move(l.spec));
  return specs;
}

namespace {

// Nearest-index resampling of a template to a jittered length.
void append_resampled(const Matrix& tmpl, int new_len, Matrix& out, int& row) {
  for (int j = 0; j < new_len; ++j) {
    int src = (new_len == tmpl.rows) ? j : (j * tmpl.rows) / new_len;
    std::copy(tmpl.row(src), tmpl.row(src) + tmpl.cols, out.row(row));
    ++row;
  }
}

}  // namespace

Utterance synthesize_utterance(const Language& lang, const DomainSpec& domain,
                               const std::string& transcript, std::uint64_t seed,
                               const CorpusParams& params) {
  const std::vector<std::string> words = split_ws(transcript);
  if (words.empty()) throw ValidationError("empty transcript");
  std::set<std::string> lex(lang.lexicon.begin(), lang.lexicon.end());
  for (const auto& w : words)
    if (!lex.count(w))
      throw ValidationError("out-of-lexicon word '" + w + "' for language " +
                            lang.spec.language_id);

  Rng rng(mix_seed(seed, hash_str(domain.domain_id)));

  // Per-phoneme segment lengths, jittered when the domain asks for it.
  std::vector<int> phonemes;
  std::vector<int> seg_len;
  for (const auto& w : words)
    for (int p : word_to_phonemes(w)) {
      phonemes.push_back(p);
      int len = params.frames_per_phoneme;
      if (domain.frame_jitter > 0.0) {
        int delta = static_cast<int>(std::llround(rng.uniform(-domain.frame_jitter, domain.frame_jitter)));
        len = std::max(1, len + delta);
      }
      seg_len.push_back(len);
    }

  int total = 0;
  for (int l : seg_len) total += l;

  Utterance utt;
  utt.language_id = lang.spec.language_id;
  utt.family_id = lang.spec.family_id;
  utt.domain_id = domain.domain_id;
  utt.transcript = transcript;
  utt.signal = Matrix(total, params.frame_dim);

  int row = 0;
  for (std::size_t i = 0; i < phonemes.size(); ++i)
    append_resampled(phoneme_template(phonemes[i], params), seg_len[i], utt.signal, row);

  if (domain.noise_level > 0.0)
    for (auto& x : utt.signal.v) x += domain.noise_level * rng.normal();
  if (domain.channel_gain != 1.0)
    for (auto& x : utt.signal.v) x *= domain.channel_gain;

  utt.duration_seconds = static_cast<double>(total) / params.frame_rate;
  return utt;
}

std::string split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  throw ConfigError("unknown split");
}

Split split_from_name(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw ValidationError("unknown split name: '" + s + "'");
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);

  Manifest m;
  std::unordered_set<std::string> ids;
  std::string line;
  int lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": malformed record: " + e.what());
    }
    auto need = [&](const char* field) -> const nlohmann::json& {
      if (!rec.contains(field))
        throw ParseError(path + ":" + std::to_string(lineno) + ": missing field '" + field + "'");
      return rec.at(field);
    };

    ManifestEntry e;
    try {
      e.utterance_id = need("utterance_id").get<std::string>();
      e.language_id = need("language_id").get<std::string>();
      e.family_id = need("family_id").get<std::string>();
      e.domain_id = need("domain_id").get<std::string>();
      e.duration_seconds = need("duration_seconds").get<double>();
      e.transcript = need("transcript").get<std::string>();
      if (rec.contains("signal_path")) {
        e.signal_path = rec.at("signal_path").get<std::string>();
      } else if (rec.contains("frames")) {
        const auto& fr = rec.at("frames");
        if (!fr.is_array() || fr.empty())
          throw ParseError(path + ":" + std::to_string(lineno) + ": 'frames' must be a non-empty array");
        int rows = static_cast<int>(fr.size());
        int cols = static_cast<int>(fr.at(0).size());
        Matrix sig(rows, cols);
        for (int r = 0; r < rows; ++r) {
          const auto& frow = fr.at(r);
          if (static_cast<int>(frow.size()) != cols)
            throw ParseError(path + ":" + std::to_string(lineno) + ": ragged 'frames' rows");
          for (int c = 0; c < cols; ++c) sig.at(r, c) = frow.at(c).get<double>();
        }
        e.inline_frames = std::move(sig);
      } else {
        throw ParseError(path + ":" + std::to_string(lineno) +
                         ": record needs 'signal_path' or 'frames'");
      }
      if (first) {
        m.corpus_id = rec.value("corpus_id", std::string{});
        m.split = split_from_name(rec.value("split", std::string{"train"}));
        first = false;
      }
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": bad field type: " + ex.what());
    }

    if (!ids.insert(e.utterance_id).second)
      throw ValidationError(path + ":" + std::to_string(lineno) + ": duplicate utterance_id '" +
                            e.utterance_id + "'");
    m.entries.push_back(std::move(e));
  }
  return m;
}

void write_manifest(const Manifest& manifest, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write manifest: " + path);
  for (const auto& e : manifest.entries) {
    nlohmann::json rec{
        {"utterance_id", e.utterance_id},       {"language_id", e.language_id},
        {"family_id", e.family_id},             {"domain_id", e.domain_id},
        {"duration_seconds", e.duration_seconds}, {"transcript", e.transcript},
        {"split", split_name(manifest.split)},  {"corpus_id", manifest.corpus_id},
    };
    if (!e.signal_path.empty()) {
      rec["signal_path"] = e.signal_path;
    } else if (e.inline_frames) {
      nlohmann::json fr = nlohmann::json::array();
      for (int r = 0; r < e.inline_frames->rows; ++r) {
        nlohmann::json frow = nlohmann::json::array();
        for (int c = 0; c < e.inline_frames->cols; ++c) frow.push_back(e.inline_frames->at(r, c));
        fr.push_back(std::move(frow));
      }
      rec["frames"] = std::move(fr);
    } else {
      throw ValidationError("manifest entry '" + e.utterance_id + "' has neither signal_path nor frames");
    }
    out << rec.dump() << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

void write_frames(const Matrix& frames, const std::string& path) {
  static_assert(sizeof(float) == 4);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write frame file: " + path);
  std::uint32_t hdr[2] = {static_cast<std::uint32_t>(frames.rows),
                          static_cast<std::uint32_t>(frames.cols)};
  out.write(reinterpret_cast<const char*>(hdr), sizeof(hdr));
  std::vector<float> buf(frames.v.size());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(frames.v[i]);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!out) throw IoError("write failed: " + path);
}

Matrix read_frames(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open frame file: " + path);
  std::uint32_t hdr[2];
  in.read(reinterpret_cast<char*>(hdr), sizeof(hdr));
  if (!in) throw ParseError("frame file truncated header: " + path);
  Matrix m(static_cast<int>(hdr[0]), static_cast<int>(hdr[1]));
  std::vector<float> buf(m.v.size());
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!in) throw ParseError("frame file truncated data: " + path);
  for (std::size_t i = 0; i < buf.size(); ++i) m.v[i] = static_cast<double>(buf[i]);
  return m;
}

std::vector<Utterance> load_utterances(const Manifest& manifest, const std::string& base_dir,
                                       int jobs) {
  std::vector<Utterance> out(manifest.entries.size());
  parallel_for(manifest.entries.size(), jobs, [&](std::size_t i) {
    const ManifestEntry& e = manifest.entries[i];
    Utterance u;
    u.utterance_id = e.utterance_id;
    u.language_id = e.language_id;
    u.family_id = e.family_id;
    u.domain_id = e.domain_id;
    u.transcript = e.transcript;
    u.duration_seconds = e.duration_seconds;
    if (e.inline_frames) {
      u.signal = *e.inline_frames;
    } else {
      u.signal = read_frames((std::filesystem::path(base_dir) / e.signal_path).string());
    }
    out[i] = std::move(u);
  });
  return out;
}

Manifest cap_hours(const Manifest& manifest, double cap_hours_value) {
  if (cap_hours_value <= 0.0) throw ConfigError("cap_hours must be positive");
  const double cap_seconds = cap_hours_value * 3600.0;

  Manifest out;
  out.split = manifest.split;
  out.corpus_id = manifest.corpus_id;
  std::map<std::string, double> cum;
  std::set<std::string> closed;
  for (const auto& e : manifest.entries) {
    if (closed.count(e.language_id)) continue;
    double next = cum[e.language_id] + e.duration_seconds;
    if (next > cap_seconds) {
      closed.insert(e.language_id);
      continue;
    }
    cum[e.language_id] = next;
    out.entries.push_back(e);
  }
  return out;
}

void validate_against_specs(const Manifest& manifest, const std::vector<LanguageSpec>& specs) {
  std::unordered_map<std::string, std::string> fam_of;
  for (const auto& s : specs) fam_of[s.language_id] = s.family_id;
  for (const auto& e : manifest.entries) {
    auto it = fam_of.find(e.language_id);
    if (it == fam_of.end())
      throw ValidationError("manifest entry '" + e.utterance_id + "' references unknown language '" +
                            e.language_id + "'");
    if (it->second != e.family_id)
      throw ValidationError("manifest entry '" + e.utterance_id + "': family_id '" + e.family_id +
                            "' does not match language '" + e.language_id + "' (expected '" +
                            it->second + "')");
  }
}

}  // namespace asrlink::corpus
