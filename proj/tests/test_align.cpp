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


#include <doctest.h>

#include "confkit/align.hpp"
#include "confkit/error.hpp"
#include "oracles.hpp"

using namespace confkit;
using oracle::tokens;

namespace {

std::size_t count_non_match(const Alignment& a) {
  std::size_t n = 0;
  for (const auto& s : a.ops) n += s.op != EditOp::kMatch;
  return n;
}

Hypothesis hyp_of(const TokenSeq& t) {
  Hypothesis h;
  h.tokens = t;
  h.features.resize(t.size());
  return h;
}

}  // namespace

TEST_SUITE("align") {

TEST_CASE("identity and empty sides") {
  const std::vector<int> ab{0, 1};
  Alignment a = levenshtein(ab, ab);
  CHECK(a.distance == 0);
  REQUIRE(a.ops.size() == 2);
  CHECK(a.ops[0].op == EditOp::kMatch);

  a = levenshtein(std::vector<int>{}, std::vector<int>{0});
  CHECK(a.distance == 1);
  REQUIRE(a.ops.size() == 1);
  CHECK(a.ops[0].op == EditOp::kDelete);
  CHECK(a.ops[0].ref == 0);

  a = levenshtein(std::vector<int>{0, 2, 1}, ab);
  CHECK(a.distance == 1);
  REQUIRE(a.ops.size() == 3);
  CHECK(a.ops[0].op == EditOp::kMatch);
  CHECK(a.ops[1].op == EditOp::kInsert);
  CHECK(a.ops[1].hyp == 1);
  CHECK(a.ops[2].op == EditOp::kMatch);
}

TEST_CASE("tie-break prefers substitution, then deletion, then insertion") {
  // [a] vs [b]: substitution beats delete+insert.
  Alignment a = levenshtein(std::vector<int>{0}, std::vector<int>{1});
  REQUIRE(a.ops.size() == 1);
  CHECK(a.ops[0].op == EditOp::kSubstitute);
  // [a] vs [b, a]: the leftover ref token is deleted.
  a = levenshtein(std::vector<int>{0}, std::vector<int>{1, 0});
  CHECK(a.ops.front().op == EditOp::kDelete);
}

TEST_CASE("distance matches exhaustive search for short sequences") {
  const oracle::EditGraph g(3, 4);
  const auto& nodes = g.nodes();
  for (std::size_t i = 0; i < nodes.size(); i += 3) {
    const auto dist = g.distances_from(i);
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      const Alignment a = levenshtein(nodes[i], nodes[j]);
      REQUIRE(a.distance == static_cast<std::size_t>(dist[j]));
      REQUIRE(count_non_match(a) == a.distance);
      const auto back = replay(a, std::span<const int>(nodes[i]), std::span<const int>(nodes[j]));
      REQUIRE(back == nodes[i]);
    }
  }
}

TEST_CASE("symmetry and triangle inequality") {
  Rng rng(4);
  auto draw = [&] {
    std::vector<int> v(rng.below(8));
    for (int& x : v) x = static_cast<int>(rng.below(4));
    return v;
  };
  for (int t = 0; t < 500; ++t) {
    const auto a = draw(), b = draw(), c = draw();
    const auto ab = levenshtein(a, b).distance;
    CHECK(ab == levenshtein(b, a).distance);
    CHECK(levenshtein(a, c).distance <= ab + levenshtein(b, c).distance);
  }
}

TEST_CASE("label_hypothesis") {
  const TokenSeq ref = tokens({0, 1});
  auto lab = label_hypothesis(hyp_of(ref), ref);
  CHECK(lab.token_labels == std::vector<int>{1, 1});
  CHECK(lab.word_labels == std::vector<int>{1, 1});
  CHECK(lab.utterance_label == 1);

  // Inserted x inside the first word: [a x | b].
  lab = label_hypothesis(hyp_of(tokens({0, 2, 1}, {true, false, true})), ref);
  CHECK(lab.token_labels == std::vector<int>{1, 0, 1});
  CHECK(lab.word_labels == std::vector<int>{0, 1});
  CHECK(lab.utterance_label == 0);

  lab = label_hypothesis(hyp_of({}), ref);
  CHECK(lab.token_labels.empty());
  CHECK(lab.word_labels.empty());
  CHECK(lab.utterance_label == 0);
}

TEST_CASE("word labels need the whole reference word") {
  // ref word "ab" = [a, b]; hyp splits it into two words [a][b].
  const TokenSeq ref = tokens({0, 1}, {true, false});
  const auto lab = label_hypothesis(hyp_of(tokens({0, 1}, {true, true})), ref);
  CHECK(lab.token_labels == std::vector<int>{1, 1});
  CHECK(lab.word_labels == std::vector<int>{0, 0});
  CHECK(lab.utterance_label == 0);

  // Hyp covers only the first piece of a two-piece reference word.
  const auto lab2 = label_hypothesis(hyp_of(tokens({0})), ref);
  CHECK(lab2.word_labels == std::vector<int>{0});
}

TEST_CASE("utterance label agrees with single-pair wer") {
  Rng rng(6);
  for (int t = 0; t < 300; ++t) {
    std::vector<int> h(1 + rng.below(5)), r(1 + rng.below(5));
    for (int& x : h) x = static_cast<int>(rng.below(3));
    for (int& x : r) x = static_cast<int>(rng.below(3));
    const TokenSeq ht = tokens(h), rt = tokens(r);
    const auto lab = label_hypothesis(hyp_of(ht), rt);
    const std::pair<TokenSeq, TokenSeq> p{ht, rt};
    CHECK((lab.utterance_label == 1) == (wer(std::span(&p, 1)) == 0.0));
    std::size_t ones = 0;
    for (int l : lab.token_labels) ones += l;
    const auto a = levenshtein(h, r);
    std::size_t matches = 0;
    for (const auto& s : a.ops) matches += s.op == EditOp::kMatch;
    CHECK(ones == matches);
  }
}

TEST_CASE("wer and ser") {
  using P = std::pair<TokenSeq, TokenSeq>;
  const TokenSeq ab = tokens({0, 1}), ac = tokens({0, 2});
  std::vector<P> pairs{{ab, ab}};
  CHECK(wer(pairs) == 0.0);
  pairs = {{ab, ac}};
  CHECK(wer(pairs) == doctest::Approx(0.5));
  // Words are compared, not tokens: [a b] as one word vs [a][b] is 2 errors over 2 words.
  pairs = {{tokens({0, 1}, {true, false}), ab}};
  CHECK(wer(pairs) == doctest::Approx(1.0));

  pairs = {{ab, ab}, {ab, ac}, {tokens({0}), ab}};
  // Per-pair distances 0, 1, 1 over 6 reference words.
  CHECK(wer(pairs) == doctest::Approx(2.0 / 6.0));

  pairs = {{ab, ab}, {ab, ac}, {ac, ab}, {tokens({1}), ab}};
  CHECK(ser(pairs) == doctest::Approx(0.75));
  pairs = {{ab, ab}};
  CHECK(ser(pairs) == 0.0);
  pairs = {{ab, ac}};
  CHECK(ser(pairs) == 1.0);

  CHECK_THROWS(ser(std::vector<P>{}));
  pairs = {{ab, {}}};
  CHECK_THROWS(wer(pairs));
}

}
