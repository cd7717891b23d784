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

// Back-off n-gram language model over token ids, trained with interpolated
// absolute discounting and stored as an ARPA file.
//
// Each sentence is scored with one implicit <s> as left context and an
// explicit </s> event. Ids never seen in training are mapped to <unk>, whose
// unigram count is the number of singleton types in the training text.
//
//   P(w | h) = max(c(h,w) - D, 0) / c(h) + D * N1+(h .) / c(h) * P(w | h')
//
// with h' the history minus its oldest token; the recursion ends in a
// uniform distribution over the vocabulary (known ids, <unk>, </s>).
// Unseen histories defer entirely to h'.

#ifndef CONFKIT_LM_HPP_
#define CONFKIT_LM_HPP_

#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace confkit {

inline constexpr int kBos = -1;
inline constexpr int kEos = -2;
inline constexpr int kUnk = -3;

using NGram = std::vector<int>;

class NGramModel {
 public:
  NGramModel() = default;
  NGramModel(int order, std::set<int> vocab);

  int order() const { return order_; }
  const std::set<int>& vocab() const { return vocab_; }

  /// Known id, or kUnk. kBos/kEos pass through.
  int map_id(int id) const;

  /// Natural-log P(word | context) by the standard back-off walk; context
  /// is oldest-first and may be longer than order-1 (it is truncated).
  double log_prob(std::span<const int> context, int word) const;

  /// Outcome set of every conditional distribution: known ids, kUnk, kEos.
  std::vector<int> outcomes() const;

  /// Tables of natural-log probabilities and back-off weights. probs[n-1]
  /// holds the n-grams (context..., word); backoffs is keyed by context.
  std::vector<std::map<NGram, double>>& probs() { return probs_; }
  const std::vector<std::map<NGram, double>>& probs() const { return probs_; }
  std::map<NGram, double>& backoffs() { return backoffs_; }
  const std::map<NGram, double>& backoffs() const { return backoffs_; }

 private:
  int order_ = 0;
  std::set<int> vocab_;
  std::vector<std::map<NGram, double>> probs_;
  std::map<NGram, double> backoffs_;
};

/// Throws UsageError on an empty corpus, order < 1, or discount outside (0,1).
NGramModel train_ngram(const std::vector<std::vector<int>>& corpus, int order,
                       double discount = 0.75);

/// ln P(token_i | longest available history) per position; no </s> term.
std::vector<double> score_sequence(const NGramModel& model,
                                   std::span<const int> tokens);

/// ARPA text with log10 values, entries sorted within each section.
std::string to_arpa(const NGramModel& model);
NGramModel from_arpa(const std::string& text);
void write_arpa(const NGramModel& model, const std::filesystem::path& path);
NGramModel read_arpa(const std::filesystem::path& path);

/// One sentence of whitespace-separated integer ids per line.
std::vector<std::vector<int>> read_text_corpus(const std::filesystem::path& path);
void write_text_corpus(const std::vector<std::vector<int>>& sentences,
                       const std::filesystem::path& path);

}  // namespace confkit

#endif  // CONFKIT_LM_HPP_
