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

// Levenshtein alignment and the binary correctness targets derived from it.

#ifndef CONFKIT_ALIGN_HPP_
#define CONFKIT_ALIGN_HPP_

#include <algorithm>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "confkit/data_model.hpp"

namespace confkit {

enum class EditOp { kMatch, kSubstitute, kInsert, kDelete };

/// One edit step. kInsert has only a hyp index, kDelete only a ref index.
struct EditStep {
  EditOp op = EditOp::kMatch;
  std::ptrdiff_t hyp = -1;
  std::ptrdiff_t ref = -1;

  bool operator==(const EditStep&) const = default;
};

struct Alignment {
  std::vector<EditStep> ops;
  std::size_t distance = 0;
};

/// Unit-cost edit distance with a deterministic backtrace. When several
/// scripts are optimal the backtrace (walking from the end) prefers the
/// diagonal (MATCH/SUBSTITUTE), then DELETE, then INSERT.
template <typename T>
Alignment levenshtein(std::span<const T> hyp, std::span<const T> ref) {
  const std::size_t n = hyp.size();
  const std::size_t m = ref.size();
  const std::size_t w = m + 1;
  std::vector<std::size_t> d((n + 1) * w);
  for (std::size_t j = 0; j <= m; ++j) d[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    d[i * w] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = d[(i - 1) * w + j - 1] + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
      const std::size_t del = d[i * w + j - 1] + 1;
      const std::size_t ins = d[(i - 1) * w + j] + 1;
      d[i * w + j] = std::min({diag, del, ins});
    }
  }

  Alignment out;
  out.distance = d[n * w + m];
  std::size_t i = n;
  std::size_t j = m;
  while (i > 0 || j > 0) {
    const std::size_t here = d[i * w + j];
    if (i > 0 && j > 0) {
      const bool same = hyp[i - 1] == ref[j - 1];
      if (here == d[(i - 1) * w + j - 1] + (same ? 0 : 1)) {
        out.ops.push_back({same ? EditOp::kMatch : EditOp::kSubstitute,
                           static_cast<std::ptrdiff_t>(i - 1),
                           static_cast<std::ptrdiff_t>(j - 1)});
        --i;
        --j;
        continue;
      }
    }
    if (j > 0 && here == d[i * w + j - 1] + 1) {
      out.ops.push_back({EditOp::kDelete, -1, static_cast<std::ptrdiff_t>(j - 1)});
      --j;
      continue;
    }
    out.ops.push_back({EditOp::kInsert, static_cast<std::ptrdiff_t>(i - 1), -1});
    --i;
  }
  std::reverse(out.ops.begin(), out.ops.end());
  return out;
}

template <typename T>
Alignment levenshtein(const std::vector<T>& hyp, const std::vector<T>& ref) {
  return levenshtein(std::span<const T>(hyp), std::span<const T>(ref));
}

/// Applies the script to `ref` and returns the resulting sequence, taking
/// inserted/substituted symbols from `hyp`.
template <typename T>
std::vector<T> replay(const Alignment& a, std::span<const T> hyp,
                      std::span<const T> ref) {
  std::vector<T> out;
  for (const auto& s : a.ops) {
    switch (s.op) {
      case EditOp::kMatch:
        out.push_back(ref[static_cast<std::size_t>(s.ref)]);
        break;
      case EditOp::kSubstitute:
      case EditOp::kInsert:
        out.push_back(hyp[static_cast<std::size_t>(s.hyp)]);
        break;
      case EditOp::kDelete:
        break;
    }
  }
  return out;
}

/// Token, word and utterance targets. A token is correct iff it takes part
/// in a MATCH. A word is correct iff all its tokens match and the matched
/// reference tokens are exactly one whole reference word with the same
/// surface. The utterance is correct iff the distance is zero and the word
/// sequences agree.
LabeledHypothesis label_hypothesis(const Hypothesis& hyp, const TokenSeq& ref);

/// Word error rate over (hyp, ref) token sequences, scored on words.
double wer(std::span<const std::pair<TokenSeq, TokenSeq>> pairs);
/// Fraction of pairs whose word sequences differ.
double ser(std::span<const std::pair<TokenSeq, TokenSeq>> pairs);

/// Word-level edit distance of a single pair and its reference word count.
std::pair<std::size_t, std::size_t> word_errors(const TokenSeq& hyp,
                                                const TokenSeq& ref);

}  // namespace confkit

#endif  // CONFKIT_ALIGN_HPP_
