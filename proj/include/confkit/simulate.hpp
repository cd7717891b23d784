// Copyright 2026 The confkit Authors
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

// Synthetic decoder. Reference sentences are sampled from a domain unigram;
// hypotheses are produced by a per-token edit process and carry features
// drawn conditionally on whether each emitted token is right.
//
// Edit process, one reference token at a time, with rates scaled by
// (1 + strength) and clamped to the simplex:
//   ok   emit the reference token
//   sub  emit a substitute (never the reference id)
//   ins  emit the reference token, then an extra token starting a new word
//   del  emit nothing
// Substitutes and insertions come from the domain unigram raised to
// 1 / confusion_temperature.
//
// Features of an emitted token, with c = "token is right":
//   p ~ Beta(posterior[c])       top-1 probability; log_posterior = ln p
//   q ~ Beta(share[c])           share of the runner-up in the rest mass
//   masses = p, (1-p) q, then (1-p)(1-q) halved repeatedly over the
//            remaining K-1 points (the last point takes what is left)
//   topk = the K largest of the K+1 masses (as logs); entropy over all of them
//   extra[e] ~ N(offset + signal[e] * (c ? +1/2 : -1/2), 1)
// The token right after a deletion draws q from share[wrong].
//
// Every utterance uses its own stream derived from (seed, utt_id), so the
// output does not depend on generation order.

#ifndef CONFKIT_SIMULATE_HPP_
#define CONFKIT_SIMULATE_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "confkit/data_model.hpp"
#include "confkit/rng.hpp"

namespace confkit {

struct BetaParams {
  double a = 1.0;
  double b = 1.0;
};

struct FeatureParams {
  BetaParams posterior_correct{8.0, 1.5};
  BetaParams posterior_error{2.0, 3.0};
  BetaParams share_correct{2.0, 5.0};
  BetaParams share_error{5.0, 2.0};
  double extra_offset = 0.0;
  std::vector<double> extra_signal;  // per extra column; missing entries are 0
};

struct ErrorModel {
  double p_sub = 0.0;
  double p_ins = 0.0;
  double p_del = 0.0;
  double confusion_temperature = 1.0;
  FeatureParams feature_params;
  double augmentation_strength = 0.0;
};

void validate(const ErrorModel& em);

/// Per-token probabilities {ok, sub, ins, del} at the given strength.
std::array<double, 4> effective_rates(const ErrorModel& em, double strength);

struct LengthRange {
  int min = 4;
  int max = 12;
};

struct DomainSpec {
  std::string name = "in";
  std::vector<double> unigram;  // over token ids, sums to 1
  LengthRange length;
  double word_start_prob = 0.7;
  ErrorModel error_model;
};

void validate(const DomainSpec& d, int vocab_size);

/// Zipf weights 1 / (rank + 1)^exponent over a seeded permutation of ids.
std::vector<double> zipf_unigram(int vocab_size, double exponent, std::uint64_t seed);

/// Surface string of a token id ("a", "b", ..., "z", "ba", ...).
std::string token_surface(int id);

/// Precomputed sampling tables for one domain.
class DomainSampler {
 public:
  DomainSampler(DomainSpec spec, CorpusHeader header);

  const DomainSpec& spec() const { return spec_; }
  const CorpusHeader& header() const { return header_; }

  TokenSeq sample_sentence(Rng& rng) const;
  int sample_word(Rng& rng) const;
  /// From the tempered unigram, never equal to `avoid`.
  int sample_confusion(Rng& rng, int avoid) const;

 private:
  static int draw(const std::vector<double>& cdf, Rng& rng);

  DomainSpec spec_;
  CorpusHeader header_;
  std::vector<double> word_cdf_;
  std::vector<double> confusion_cdf_;
};

/// Counts of the edit events actually drawn.
struct CorruptionTrace {
  std::size_t ok = 0, sub = 0, ins = 0, del = 0;
  std::vector<int> token_correct;  // per emitted token, as intended
};

Hypothesis corrupt(const TokenSeq& ref, const DomainSampler& domain, double strength,
                   Rng& rng, CorruptionTrace* trace = nullptr);

/// Features for one emitted token (exposed for tests).
TokenFeatures sample_features(const FeatureParams& fp, int topk, int extra_dims, bool correct,
                              bool after_deletion, Rng& rng);

/// n corruptions, each from its own derived stream, sorted by decode_score.
Utterance generate_nbest(const std::string& utt_id, const TokenSeq& ref, int n,
                         const DomainSampler& domain, double strength, std::uint64_t seed);

/// One strength-0 decode of the hidden reference.
TokenSeq pseudo_reference(const std::string& utt_id, const TokenSeq& hidden_ref,
                          const DomainSampler& domain, std::uint64_t seed);

/// Sets pseudo_reference on every utterance from its hidden reference.
void make_pseudo_references(Corpus& corpus, const std::map<std::string, TokenSeq>& hidden,
                            const DomainSampler& domain, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Scenarios

enum class ReferenceMode { kGold, kPseudo, kHidden };

struct CorpusSpec {
  std::string name;
  std::string domain;
  int utterances = 0;
  int n = 8;
  std::optional<double> strength;  // defaults to the domain's augmentation_strength
  ReferenceMode reference = ReferenceMode::kGold;
};

struct TextSpec {
  std::string name;
  std::string domain;
  int sentences = 0;
};

struct Scenario {
  std::uint64_t seed = 0;
  CorpusHeader header;
  std::vector<DomainSpec> domains;
  std::vector<CorpusSpec> corpora;
  std::vector<TextSpec> texts;
};

Scenario scenario_from_json(const json& j);
json to_json(const Scenario& s);

struct GeneratedCorpus {
  Corpus corpus;
  std::map<std::string, TokenSeq> truth;  // hidden references (pseudo/hidden modes)
};

GeneratedCorpus generate_corpus(const Scenario& s, const CorpusSpec& c);
std::vector<std::vector<int>> generate_text(const Scenario& s, const TextSpec& t);

/// Writes <name>.jsonl (+ <name>.truth.jsonl when references are withheld)
/// for every corpus and <name>.txt for every text. Returns written paths.
std::vector<std::filesystem::path> run_scenario(const Scenario& s, const std::filesystem::path& out_dir);

/// Sidecar: one {"utt_id", "reference"} object per line.
void write_truth(const std::map<std::string, TokenSeq>& truth, const std::filesystem::path& path);
std::map<std::string, TokenSeq> read_truth(const std::filesystem::path& path);

}  // namespace confkit

#endif  // CONFKIT_SIMULATE_HPP_
