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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "asrlink/tensor.hpp"

namespace asrlink::corpus {

// Frame-level and lexicon-level generation parameters. These are corpus
// metadata: every artifact derived from a corpus (signals, templates,
// lexicons) is a pure function of them plus the declared seeds.
struct CorpusParams {
  int frame_dim = 16;          // F
  int frame_rate = 50;         // frames per second
  int frames_per_phoneme = 4;  // nominal template length
  int inventory_size = 20;     // phonemes per language
  int n_lexicon_words = 16;    // words per language
  int word_min_phonemes = 2;
  int word_max_phonemes = 3;
  std::uint64_t template_seed = 7777;  // seeds the global phoneme templates
};

// The global phoneme universe: every symbol id names one consonant-vowel
// syllable, so transcripts decompose back into symbol ids unambiguously.
int phoneme_universe_size();
std::string phoneme_name(int symbol_id);
std::vector<int> word_to_phonemes(const std::string& word);

// Acoustic identity of a phoneme, shared by every language that carries it.
Matrix phoneme_template(int symbol_id, const CorpusParams& params);

struct LanguageSpec {
  std::string language_id;
  std::string family_id;
  std::vector<int> phoneme_inventory;  // ordered, duplicate-free
  std::uint64_t lexicon_seed = 0;
  int n_lexicon_words = 0;
  double relatedness = 0.0;  // fraction of inventory/lexicon shared with the family prototype

  bool operator==(const LanguageSpec&) const = default;
};

struct DomainSpec {
  std::string domain_id;
  double noise_level = 0.0;   // additive noise scale; 0 = clean
  double channel_gain = 1.0;  // multiplicative gain
  double frame_jitter = 0.0;  // max +/- frames of per-phoneme length perturbation

  bool is_identity() const {
    return noise_level == 0.0 && channel_gain == 1.0 && frame_jitter == 0.0;
  }
};

struct FamilyPrototype {
  std::string family_id;
  std::vector<int> inventory;
  std::vector<std::string> lexicon;
  std::vector<int> fresh_pool;  // universe minus prototype inventory, shuffled
};

// A language spec bundled with its materialized lexicon; synthesis and
// transcript sampling operate on this.
struct Language {
  LanguageSpec spec;
  std::vector<std::string> lexicon;
};

FamilyPrototype family_prototype(const std::string& family_id, std::uint64_t seed,
                                 const CorpusParams& params);

// Deterministic in (family_id, seed). Each language shares exactly
// floor(relatedness * inventory_size) phonemes and floor(relatedness *
// n_lexicon_words) lexicon words with the family prototype; the remainder is
// drawn from disjoint slices of the non-prototype symbol pool, so languages
// generated with relatedness 0 have pairwise-disjoint inventories and
// lexicons.
std::vector<LanguageSpec> generate_family(const std::string& family_id, int n_languages,
                                          double relatedness, std::uint64_t seed,
                                          const CorpusParams& params = {});

struct GeneratedFamily {
  FamilyPrototype prototype;
  std::vector<Language> languages;
};

GeneratedFamily generate_family_full(const std::string& family_id, int n_languages,
                                     double relatedness, std::uint64_t seed,
                                     const CorpusParams& params = {});

std::vector<std::string> build_lexicon(const LanguageSpec& spec, const FamilyPrototype& prototype,
                                       const CorpusParams& params);

struct Utterance {
  std::string utterance_id;
  std::string language_id;
  std::string family_id;
  std::string domain_id;
  Matrix signal;  // frames x frame_dim
  std::string transcript;
  double duration_seconds = 0.0;
};

// Renders a transcript into a frame sequence: per-word contiguous segments of
// concatenated phoneme templates, then the domain transform (additive noise
// scaled by noise_level, multiplication by channel_gain, per-phoneme length
// jitter). Deterministic in (transcript, lang, domain, seed).
Utterance synthesize_utterance(const Language& lang, const DomainSpec& domain,
                               const std::string& transcript, std::uint64_t seed,
                               const CorpusParams& params = {});

enum class Split { Train, Val, Test };
std::string split_name(Split s);
Split split_from_name(const std::string& s);

struct ManifestEntry {
  std::string utterance_id;
  std::string language_id;
  std::string family_id;
  std::string domain_id;
  double duration_seconds = 0.0;
  std::string transcript;
  std::string signal_path;                 // relative to the manifest directory; empty if inline
  std::optional<Matrix> inline_frames;     // set iff signal_path is empty

  bool operator==(const ManifestEntry&) const = default;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  Split split = Split::Train;
  std::string corpus_id;

  bool operator==(const Manifest&) const = default;
};

// Line-delimited JSON records, one utterance per line. Parse failures name
// the offending line; duplicate utterance ids are a validation error.
Manifest load_manifest(const std::string& path);
void write_manifest(const Manifest& manifest, const std::string& path);

// Binary frame file: header of two little-endian uint32 (rows, cols), then
// rows*cols little-endian float32, row-major.
void write_frames(const Matrix& frames, const std::string& path);
Matrix read_frames(const std::string& path);

// Materializes signals for every entry (from signal_path relative to
// base_dir, or from inline frames).
std::vector<Utterance> load_utterances(const Manifest& manifest, const std::string& base_dir,
                                       int jobs = 1);

// Per language, retains the longest prefix (in manifest order) whose
// cumulative duration stays within cap_hours; entries of a language are
// dropped from the first overflowing entry onward. Deterministic and
// idempotent.
Manifest cap_hours(const Manifest& manifest, double cap_hours_value);

// Checks that every entry's family_id matches its language under the given
// specs and that every language_id is known.
void validate_against_specs(const Manifest& manifest, const std::vector<LanguageSpec>& specs);

}  // namespace asrlink::corpus
