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

// Shared domain types and the JSON Lines corpus format.
//
// A corpus file is JSON Lines. Line 1 is the header
//
//   {"format":"confkit-corpus","version":1,"vocab_size":V,"topk":K,
//    "extra_dims":E}
//
// and every following line is one utterance:
//
//   {"utt_id":"...","domain":"in",
//    "reference":{"ids":[..],"surfaces":[..],"word_start":[..]},   optional
//    "pseudo_reference":{...},                                     optional
//    "nbest":[{"decode_score":x,
//              "tokens":{"ids":[..],"surfaces":[..],"word_start":[..]},
//              "features":{"log_posterior":[..],"entropy":[..],
//                          "topk":[[..],..],"extra":[[..],..],
//                          "lm_in":[..],"lm_ood":[..]}}]}      lm_* optional
//
// Sequences are stored column-wise. Floats carry 17 significant digits.

#ifndef CONFKIT_DATA_MODEL_HPP_
#define CONFKIT_DATA_MODEL_HPP_

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "confkit/json_io.hpp"

namespace confkit {

struct Token {
  int id = 0;
  std::string surface;
  bool word_start = false;

  bool operator==(const Token&) const = default;
};

using TokenSeq = std::vector<Token>;

struct TokenFeatures {
  double log_posterior = 0.0;
  double entropy = 0.0;
  std::vector<double> topk;   // K largest output log-probs, descending
  std::vector<double> extra;  // producer-specific columns, width E
  std::optional<double> lm_in;
  std::optional<double> lm_ood;

  bool operator==(const TokenFeatures&) const = default;
};

struct Hypothesis {
  TokenSeq tokens;
  std::vector<TokenFeatures> features;
  double decode_score = 0.0;

  bool operator==(const Hypothesis&) const = default;
};

struct Utterance {
  std::string utt_id;
  std::optional<TokenSeq> reference;
  std::optional<TokenSeq> pseudo_reference;
  std::vector<Hypothesis> nbest;
  std::string domain_tag = "in";

  bool operator==(const Utterance&) const = default;
};

struct CorpusHeader {
  int version = 1;
  int vocab_size = 0;
  int topk = 0;
  int extra_dims = 0;

  bool operator==(const CorpusHeader&) const = default;
};

struct Corpus {
  CorpusHeader header;
  std::vector<Utterance> utterances;

  bool operator==(const Corpus&) const = default;
};

struct LabeledHypothesis {
  Hypothesis hypothesis;
  std::vector<int> token_labels;  // 1 = correct
  std::vector<int> word_labels;
  int utterance_label = 0;
};

/// Half-open token range [begin, end) of one word.
struct WordSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

std::vector<WordSpan> word_spans(std::span<const Token> tokens);
std::vector<WordSpan> word_spans_from_flags(const std::vector<bool>& word_start);
/// Word surfaces: token surfaces concatenated between word_start boundaries.
std::vector<std::string> words_of(std::span<const Token> tokens);
std::vector<int> ids_of(std::span<const Token> tokens);

/// Throws DataError naming the utt_id and field on any invariant violation.
void validate(const Utterance& utt, const CorpusHeader& header);
void validate_header(const CorpusHeader& header);

/// Stable sort of the n-best list by decode_score, descending.
void sort_nbest(Utterance& utt);

json to_json(const CorpusHeader& h);
json to_json(const Utterance& u);
json to_json(std::span<const Token> tokens);
CorpusHeader header_from_json(const json& j);
Utterance utterance_from_json(const json& j);
TokenSeq tokens_from_json(const json& j);

/// Streaming reader; validates every utterance as it is read.
class CorpusReader {
 public:
  explicit CorpusReader(const std::filesystem::path& path);

  const CorpusHeader& header() const { return header_; }
  /// Next utterance, or nullopt at end of file.
  std::optional<Utterance> next();

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  CorpusHeader header_;
  std::size_t line_no_ = 0;
};

Corpus read_corpus(const std::filesystem::path& path);
/// Written atomically (temp file + rename).
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);
std::string corpus_to_string(const Corpus& corpus);

}  // namespace confkit

#endif  // CONFKIT_DATA_MODEL_HPP_
