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

#include <cmath>

#include "confkit/align.hpp"
#include "confkit/error.hpp"
#include "confkit/lm.hpp"
#include "confkit/simulate.hpp"
#include "oracles.hpp"

using namespace confkit;

namespace {

DomainSpec uniform_domain(int vocab, double p_sub, double p_ins, double p_del) {
  DomainSpec d;
  d.unigram.assign(static_cast<std::size_t>(vocab), 1.0 / vocab);
  d.error_model.p_sub = p_sub;
  d.error_model.p_ins = p_ins;
  d.error_model.p_del = p_del;
  d.error_model.feature_params.extra_signal = {1.0, 0.0};
  d.word_start_prob = 1.0;
  return d;
}

const CorpusHeader kHeader{1, 50, 3, 2};

double log_beta_pdf(double x, const BetaParams& p) {
  return (p.a - 1) * std::log(x) + (p.b - 1) * std::log1p(-x) + std::lgamma(p.a + p.b) - std::lgamma(p.a) -
         std::lgamma(p.b);
}

}  // namespace

TEST_SUITE("simulate") {

TEST_CASE("effective rates scale and clamp") {
  ErrorModel em;
  em.p_sub = 0.1;
  em.p_ins = 0.05;
  em.p_del = 0.05;
  auto r = effective_rates(em, 0.0);
  CHECK(r[1] == doctest::Approx(0.1));
  CHECK(r[0] == doctest::Approx(0.8));
  r = effective_rates(em, 1.0);
  CHECK(r[1] == doctest::Approx(0.2));
  r = effective_rates(em, 9.0);
  CHECK(r[0] == 0.0);
  CHECK(r[1] + r[2] + r[3] == doctest::Approx(1.0));
  CHECK(r[1] == doctest::Approx(0.5));
  CHECK_THROWS_AS(effective_rates(em, -1.0), UsageError);
  em.p_sub = 0.95;
  CHECK_THROWS_AS(validate(em), DataError);
}

TEST_CASE("zipf unigram and surfaces") {
  const auto w = zipf_unigram(100, 1.1, 3);
  double sum = 0;
  for (double x : w) sum += x;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(zipf_unigram(100, 1.1, 3) == w);
  CHECK(zipf_unigram(100, 1.1, 4) != w);
  CHECK(token_surface(0) == "a");
  CHECK(token_surface(25) == "z");
  CHECK(token_surface(26) == "ba");
}

TEST_CASE("error-free corruption is the identity") {
  const DomainSampler ds(uniform_domain(50, 0, 0, 0), kHeader);
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    const TokenSeq ref = ds.sample_sentence(rng);
    const Hypothesis h = corrupt(ref, ds, 3.0, rng);
    CHECK(h.tokens == ref);
    CHECK(label_hypothesis(h, ref).utterance_label == 1);
  }
}

TEST_CASE("certain deletion empties the hypothesis") {
  const DomainSampler ds(uniform_domain(50, 0, 0, 1.0), kHeader);
  Rng rng(2);
  const Hypothesis h = corrupt(ds.sample_sentence(rng), ds, 0.0, rng);
  CHECK(h.tokens.empty());
  CHECK(h.features.empty());
}

TEST_CASE("substitution rate matches its parameter") {
  const DomainSampler ds(uniform_domain(50, 0.1, 0, 0), kHeader);
  Rng rng(3);
  std::size_t subs = 0, total = 0;
  for (int t = 0; t < 10000; ++t) {
    CorruptionTrace tr;
    const TokenSeq ref = ds.sample_sentence(rng);
    const Hypothesis h = corrupt(ref, ds, 0.0, rng, &tr);
    subs += tr.sub;
    total += ref.size();
    // Substitutes never repeat the reference token.
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK((tr.token_correct[i] == 1) == (h.tokens[i].id == ref[i].id));
  }
  CHECK(std::abs(static_cast<double>(subs) / static_cast<double>(total) - 0.1) < 0.01);
}

TEST_CASE("generated utterances satisfy the corpus invariants") {
  const DomainSampler ds(uniform_domain(50, 0.1, 0.1, 0.1), kHeader);
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    const TokenSeq ref = ds.sample_sentence(rng);
    const Utterance u = generate_nbest("u" + std::to_string(t), ref, 8, ds, 1.0, 77);
    CHECK(u.nbest.size() == 8);
    CHECK_NOTHROW(validate(u, kHeader));
    for (std::size_t j = 1; j < u.nbest.size(); ++j) CHECK(u.nbest[j].decode_score <= u.nbest[j - 1].decode_score);
    for (const auto& h : u.nbest) {
      double sum = 0;
      for (const auto& f : h.features) {
        sum += f.log_posterior;
        CHECK(f.topk[0] >= f.log_posterior);
      }
      CHECK(h.decode_score == doctest::Approx(sum).epsilon(1e-12));
    }
    CHECK(generate_nbest("u" + std::to_string(t), ref, 8, ds, 1.0, 77) == u);
  }
  const Utterance one = generate_nbest("p", oracle::tokens({1, 2, 3}),
                                       1, DomainSampler(uniform_domain(50, 0, 0, 0), kHeader), 0.0, 1);
  REQUIRE(one.nbest.size() == 1);
  CHECK(one.nbest[0].tokens == oracle::tokens({1, 2, 3}));
}

TEST_CASE("posterior separability grows with the Beta gap") {
  // Monte-Carlo KL(correct || error) from the sampler's own draws.
  double prev = -1.0;
  for (double ac : {3.0, 5.0, 8.0}) {
    FeatureParams fp;
    fp.posterior_correct = {ac, 2.0};
    fp.posterior_error = {2.0, 2.0};
    Rng rng(5);
    double kl = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      const TokenFeatures f = sample_features(fp, 2, 0, true, false, rng);
      const double p = std::exp(f.log_posterior);
      kl += log_beta_pdf(p, fp.posterior_correct) - log_beta_pdf(p, fp.posterior_error);
    }
    kl /= n;
    CHECK(kl > prev);
    prev = kl;
  }
}

TEST_CASE("pseudo references") {
  const DomainSampler clean(uniform_domain(50, 0, 0, 0), kHeader);
  Rng rng(6);
  const TokenSeq ref = clean.sample_sentence(rng);
  CHECK(pseudo_reference("x", ref, clean, 9) == ref);

  // Base p_sub = 0.2, uniform vocabulary of 50: a pseudo label differs from
  // the gold one when the hypothesis token is right but the pseudo reference
  // was substituted (0.8 * 0.2), or both picked the same substitute (0.04 / 49).
  const DomainSampler noisy(uniform_domain(50, 0.2, 0, 0), kHeader);
  std::size_t flips = 0, tokens = 0;
  for (int t = 0; t < 3000; ++t) {
    const std::string id = "u" + std::to_string(t);
    const TokenSeq truth = noisy.sample_sentence(rng);
    const TokenSeq pseudo = pseudo_reference(id, truth, noisy, 11);
    const Utterance u = generate_nbest(id, truth, 1, noisy, 0.0, 12);
    const auto gold = label_hypothesis(u.nbest[0], truth);
    const auto pl = label_hypothesis(u.nbest[0], pseudo);
    for (std::size_t i = 0; i < gold.token_labels.size(); ++i) flips += gold.token_labels[i] != pl.token_labels[i];
    tokens += gold.token_labels.size();
  }
  const double expected = 0.8 * 0.2 + 0.04 / 49.0;
  CHECK(std::abs(static_cast<double>(flips) / static_cast<double>(tokens) - expected) < 0.01);
}

TEST_CASE("augmented n-best rarely equals the pseudo reference") {
  const DomainSampler ds(uniform_domain(50, 0.05, 0.05, 0.05), kHeader);
  Rng rng(7);
  std::size_t differ = 0, total = 0;
  for (int t = 0; t < 500; ++t) {
    const std::string id = "u" + std::to_string(t);
    const TokenSeq truth = ds.sample_sentence(rng);
    const TokenSeq pseudo = pseudo_reference(id, truth, ds, 3);
    const Utterance u = generate_nbest(id, truth, 8, ds, 2.0, 3);
    for (const auto& h : u.nbest) {
      differ += label_hypothesis(h, pseudo).utterance_label == 0;
      ++total;
    }
  }
  CHECK(static_cast<double>(differ) / static_cast<double>(total) >= 0.9);
}

TEST_CASE("confusion sampling avoids the reference token") {
  DomainSpec d = uniform_domain(3, 0.1, 0, 0);
  d.unigram = {1.0, 0.0, 0.0};
  const DomainSampler ds(d, CorpusHeader{1, 3, 1, 0});
  Rng rng(8);
  for (int t = 0; t < 100; ++t) CHECK(ds.sample_confusion(rng, 0) != 0);
}

TEST_CASE("scenarios") {
  const json j = json::parse(R"({
    "seed": 5, "vocab_size": 40, "topk": 2, "extra_dims": 1, "n": 3,
    "domains": [
      {"name": "in", "unigram": {"zipf": 1.0}, "length": {"min": 2, "max": 5},
       "error_model": {"p_sub": 0.1, "p_ins": 0.02, "p_del": 0.02, "augmentation_strength": 1.0,
                       "feature_params": {"posterior_correct": [8, 1.5], "extra_signal": [1.0]}}},
      {"name": "ood", "unigram": {"zipf": 1.2}, "error_model": {"p_sub": 0.2}}
    ],
    "corpora": [
      {"name": "train", "domain": "in", "utterances": 20},
      {"name": "unlab", "domain": "ood", "utterances": 10, "strength": 0.5, "reference": "pseudo"},
      {"name": "blind", "domain": "ood", "utterances": 4, "n": 1, "reference": "hidden"}
    ],
    "texts": [{"name": "in_text", "domain": "in", "sentences": 30}]
  })");
  const Scenario s = scenario_from_json(j);
  CHECK(s.domains.size() == 2);
  CHECK(s.corpora[0].n == 3);
  CHECK(s.corpora[2].n == 1);
  // Unigrams are renormalised on load, so compare them to rounding.
  json a = to_json(scenario_from_json(to_json(s)));
  json b = to_json(s);
  for (std::size_t d = 0; d < 2; ++d) {
    const auto ua = a["domains"][d]["unigram"].get<std::vector<double>>();
    const auto ub = b["domains"][d]["unigram"].get<std::vector<double>>();
    REQUIRE(ua.size() == ub.size());
    for (std::size_t i = 0; i < ua.size(); ++i) CHECK(ua[i] == doctest::Approx(ub[i]).epsilon(1e-12));
    a["domains"][d].erase("unigram");
    b["domains"][d].erase("unigram");
  }
  CHECK(a == b);

  const auto dir = oracle::temp_dir("scenario");
  const auto written = run_scenario(s, dir / "a");
  CHECK(written.size() == 6);
  const Corpus train = read_corpus(dir / "a" / "train.jsonl");
  CHECK(train.utterances.size() == 20);
  CHECK(train.utterances[0].utt_id == "train-000000");
  CHECK(train.utterances[0].reference.has_value());
  const Corpus unlab = read_corpus(dir / "a" / "unlab.jsonl");
  CHECK_FALSE(unlab.utterances[0].reference.has_value());
  CHECK(unlab.utterances[0].pseudo_reference.has_value());
  CHECK(unlab.utterances[0].domain_tag == "ood");
  const Corpus blind = read_corpus(dir / "a" / "blind.jsonl");
  CHECK_FALSE(blind.utterances[0].pseudo_reference.has_value());
  CHECK(read_truth(dir / "a" / "unlab.truth.jsonl").size() == 10);
  CHECK(read_text_corpus(dir / "a" / "in_text.txt").size() == 30);

  run_scenario(s, dir / "b");
  for (const auto& p : written) {
    CHECK(read_text_file(p) == read_text_file(dir / "b" / p.filename()));
  }

  json bad = j;
  bad["corpora"][0]["domain"] = "nowhere";
  CHECK_THROWS_AS(scenario_from_json(bad), DataError);
  bad = j;
  bad["domains"][0]["error_model"]["p_sub"] = 2.0;
  CHECK_THROWS_AS(scenario_from_json(bad), DataError);
  bad = j;
  bad.erase("vocab_size");
  CHECK_THROWS_AS(scenario_from_json(bad), DataError);
}

}
