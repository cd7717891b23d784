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

#include "confkit/align.hpp"

#include <string>

#include "confkit/error.hpp"

namespace confkit {

LabeledHypothesis label_hypothesis(const Hypothesis& hyp, const TokenSeq& ref) {
  const std::vector<int> hyp_ids = ids_of(hyp.tokens);
  const std::vector<int> ref_ids = ids_of(ref);
  const Alignment a = levenshtein(hyp_ids, ref_ids);

  LabeledHypothesis out;
  out.hypothesis = hyp;
  out.token_labels.assign(hyp.tokens.size(), 0);
  // Reference position matched by each hyp token, -1 if none.
  std::vector<std::ptrdiff_t> matched_ref(hyp.tokens.size(), -1);
  for (const auto& s : a.ops) {
    if (s.op == EditOp::kMatch) {
      out.token_labels[static_cast<std::size_t>(s.hyp)] = 1;
      matched_ref[static_cast<std::size_t>(s.hyp)] = s.ref;
    }
  }

  // Reference word index of every reference token.
  std::vector<std::size_t> ref_word_of(ref.size());
  const auto ref_spans = word_spans(ref);
  for (std::size_t w = 0; w < ref_spans.size(); ++w) {
    for (std::size_t i = ref_spans[w].begin; i < ref_spans[w].end; ++i) ref_word_of[i] = w;
  }

  for (const auto& span : word_spans(hyp.tokens)) {
    int ok = 1;
    std::string hyp_surface;
    for (std::size_t i = span.begin; i < span.end && ok; ++i) {
      hyp_surface += hyp.tokens[i].surface;
      if (matched_ref[i] < 0) ok = 0;
      if (ok && i > span.begin && matched_ref[i] != matched_ref[i - 1] + 1) ok = 0;
    }
    if (ok) {
      const auto first = static_cast<std::size_t>(matched_ref[span.begin]);
      const auto last = static_cast<std::size_t>(matched_ref[span.end - 1]);
      const WordSpan& rw = ref_spans[ref_word_of[first]];
      if (rw.begin != first || rw.end != last + 1) {
        ok = 0;
      } else {
        std::string ref_surface;
        for (std::size_t i = rw.begin; i < rw.end; ++i) ref_surface += ref[i].surface;
        ok = ref_surface == hyp_surface ? 1 : 0;
      }
    }
    out.word_labels.push_back(ok);
  }
  // Equal token ids with a different word segmentation is still a word error.
  out.utterance_label = a.distance == 0 && words_of(hyp.tokens) == words_of(ref) ? 1 : 0;
  return out;
}

std::pair<std::size_t, std::size_t> word_errors(const TokenSeq& hyp,
                                                const TokenSeq& ref) {
  const auto hw = words_of(hyp);
  const auto rw = words_of(ref);
  return {levenshtein(hw, rw).distance, rw.size()};
}

double wer(std::span<const std::pair<TokenSeq, TokenSeq>> pairs) {
  std::size_t errors = 0;
  std::size_t words = 0;
  for (const auto& [hyp, ref] : pairs) {
    const auto [e, n] = word_errors(hyp, ref);
    errors += e;
    words += n;
  }
  if (words == 0) throw DataError("wer: no reference words");
  return static_cast<double>(errors) / static_cast<double>(words);
}

double ser(std::span<const std::pair<TokenSeq, TokenSeq>> pairs) {
  if (pairs.empty()) throw DataError("ser: empty list");
  std::size_t wrong = 0;
  for (const auto& [hyp, ref] : pairs) {
    if (words_of(hyp) != words_of(ref)) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(pairs.size());
}

}  // namespace confkit
