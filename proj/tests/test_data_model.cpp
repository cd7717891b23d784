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

#include <fstream>

#include "confkit/data_model.hpp"
#include "confkit/error.hpp"
#include "confkit/simulate.hpp"
#include "oracles.hpp"

using namespace confkit;

namespace {

TokenFeatures feat(double lp, int topk = 2, int extra = 1) {
  TokenFeatures f;
  f.log_posterior = lp;
  f.entropy = 0.3;
  f.topk.assign(static_cast<std::size_t>(topk), lp);
  f.topk[0] = std::max(lp, -0.01);
  f.extra.assign(static_cast<std::size_t>(extra), 0.25);
  return f;
}

Corpus small_corpus() {
  Corpus c;
  c.header = {1, 10, 2, 1};
  Utterance u;
  u.utt_id = "u1";
  u.reference = oracle::tokens({1, 2, 3}, {true, false, true});
  Hypothesis h;
  h.tokens = oracle::tokens({1, 2}, {true, false});
  h.features = {feat(-0.1), feat(-1.0 / 3.0)};
  h.decode_score = -0.1 - 1.0 / 3.0;
  u.nbest.push_back(h);
  c.utterances.push_back(u);
  return c;
}

Corpus simulated(std::uint64_t seed, int n_utts) {
  DomainSpec d;
  d.unigram = zipf_unigram(30, 1.0, seed);
  d.error_model.p_sub = 0.2;
  d.error_model.p_ins = 0.05;
  d.error_model.p_del = 0.05;
  d.error_model.feature_params.extra_signal = {1.0};
  const CorpusHeader h{1, 30, 3, 1};
  const DomainSampler ds(d, h);
  Corpus c;
  c.header = h;
  Rng rng(seed);
  for (int i = 0; i < n_utts; ++i) {
    const TokenSeq ref = ds.sample_sentence(rng);
    c.utterances.push_back(generate_nbest("s" + std::to_string(i), ref, 3, ds, 1.0, seed));
    if (i % 2 == 0) c.utterances.back().reference.reset();
    if (i % 3 == 0) c.utterances.back().pseudo_reference = ref;
  }
  return c;
}

void write_lines(const std::filesystem::path& p, const std::vector<std::string>& lines) {
  std::ofstream out(p);
  for (const auto& l : lines) out << l << "\n";
}

}  // namespace

TEST_SUITE("data_model") {

TEST_CASE("word spans") {
  const auto spans = word_spans(oracle::tokens({1, 2, 3, 4}, {true, false, true, false}));
  REQUIRE(spans.size() == 2);
  CHECK(spans[1].begin == 2);
  CHECK(spans[1].end == 4);
  CHECK(words_of(oracle::tokens({0, 1}, {true, false})) == std::vector<std::string>{"ab"});
}

TEST_CASE("round trip") {
  const auto dir = oracle::temp_dir("data_model_rt");
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Corpus c = simulated(seed, 12);
    write_corpus(c, dir / "c.jsonl");
    const Corpus back = read_corpus(dir / "c.jsonl");
    CHECK(back == c);
  }
  const Corpus s = small_corpus();
  write_corpus(s, dir / "s.jsonl");
  const Corpus back = read_corpus(dir / "s.jsonl");
  CHECK(back == s);
  CHECK_FALSE(back.utterances[0].pseudo_reference.has_value());
  CHECK(read_text_file(dir / "s.jsonl").find("pseudo_reference") == std::string::npos);
}

TEST_CASE("header-only corpus") {
  const auto dir = oracle::temp_dir("data_model_empty");
  Corpus c;
  c.header = {1, 5, 1, 0};
  write_corpus(c, dir / "e.jsonl");
  const std::string text = read_text_file(dir / "e.jsonl");
  CHECK(std::count(text.begin(), text.end(), '\n') == 1);
  CHECK(read_corpus(dir / "e.jsonl").utterances.empty());
}

TEST_CASE("floats survive bit-exactly") {
  const auto dir = oracle::temp_dir("data_model_bits");
  Corpus c = small_corpus();
  c.utterances[0].nbest[0].features[1].extra[0] = 0.1 + 0.2;
  c.utterances[0].nbest[0].features[1].lm_in = std::nextafter(-1.0, 0.0);
  c.utterances[0].nbest[0].features[0].lm_in = -1e-300;
  write_corpus(c, dir / "b.jsonl");
  const Corpus back = read_corpus(dir / "b.jsonl");
  CHECK(back.utterances[0].nbest[0].features[1].extra[0] == 0.1 + 0.2);
  CHECK(*back.utterances[0].nbest[0].features[1].lm_in == std::nextafter(-1.0, 0.0));
}

TEST_CASE("invariant violations name the utterance") {
  const CorpusHeader h{1, 10, 2, 1};
  Utterance u = small_corpus().utterances[0];
  u.nbest[0].features.pop_back();
  try {
    validate(u, h);
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("'u1'") != std::string::npos);
  }

  u = small_corpus().utterances[0];
  u.nbest[0].tokens[0].word_start = false;
  CHECK_THROWS_AS(validate(u, h), DataError);
  u = small_corpus().utterances[0];
  u.nbest[0].tokens[0].id = 10;
  CHECK_THROWS_AS(validate(u, h), DataError);
  u = small_corpus().utterances[0];
  u.nbest[0].features[0].topk = {-2.0, -1.0};
  CHECK_THROWS_AS(validate(u, h), DataError);
  u = small_corpus().utterances[0];
  u.nbest[0].features[0].topk[0] = -5.0;
  u.nbest[0].features[0].topk[1] = -6.0;
  CHECK_THROWS_AS(validate(u, h), DataError);
  u = small_corpus().utterances[0];
  u.nbest[0].features[0].entropy = -0.1;
  CHECK_THROWS_AS(validate(u, h), DataError);
  u = small_corpus().utterances[0];
  u.nbest.clear();
  CHECK_THROWS_AS(validate(u, h), DataError);
  u = small_corpus().utterances[0];
  u.nbest.push_back(u.nbest[0]);
  u.nbest[1].decode_score = 0.0;
  CHECK_THROWS_AS(validate(u, h), DataError);
}

TEST_CASE("reader errors carry line numbers") {
  const auto dir = oracle::temp_dir("data_model_err");
  const std::string header = R"({"version":1,"vocab_size":10,"topk":2,"extra_dims":1})";
  const std::string good = dump_json(to_json(small_corpus().utterances[0]));
  write_lines(dir / "bad.jsonl", {header, good, "{not json"});
  try {
    read_corpus(dir / "bad.jsonl");
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }

  json broken = to_json(small_corpus().utterances[0]);
  broken["utt_id"] = "broken";
  broken["nbest"][0]["tokens"]["ids"].push_back(4);
  broken["nbest"][0]["tokens"]["surfaces"].push_back("e");
  broken["nbest"][0]["tokens"]["word_start"].push_back(true);
  write_lines(dir / "mismatch.jsonl", {header, dump_json(broken)});
  try {
    read_corpus(dir / "mismatch.jsonl");
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("broken") != std::string::npos);
  }

  write_lines(dir / "dup.jsonl", {header, good, good});
  CHECK_THROWS_AS(read_corpus(dir / "dup.jsonl"), DataError);
  CHECK_THROWS_AS(read_corpus(dir / "missing.jsonl"), DataError);
}

TEST_CASE("sort_nbest is stable") {
  Utterance u = small_corpus().utterances[0];
  Hypothesis a = u.nbest[0], b = u.nbest[0], c = u.nbest[0];
  a.decode_score = -2.0;
  b.decode_score = -1.0;
  c.decode_score = -2.0;
  c.tokens[0].id = 7;
  c.tokens[0].surface = token_surface(7);
  u.nbest = {a, b, c};
  sort_nbest(u);
  CHECK(u.nbest[0].decode_score == -1.0);
  CHECK(u.nbest[1].tokens[0].id == 1);
  CHECK(u.nbest[2].tokens[0].id == 7);
}

}
