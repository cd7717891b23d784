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

#include "confkit/error.hpp"
#include "confkit/features.hpp"
#include "confkit/lm.hpp"
#include "oracles.hpp"

using namespace confkit;

namespace {

Hypothesis sample_hyp(int len, int topk, int extra, std::uint64_t seed) {
  Rng rng(seed);
  Hypothesis h;
  for (int i = 0; i < len; ++i) {
    const int id = static_cast<int>(rng.below(6));
    h.tokens.push_back({id, token_surface(id), i == 0 || rng.uniform() < 0.6});
    TokenFeatures f;
    f.log_posterior = -rng.uniform();
    f.entropy = rng.uniform();
    for (int k = 0; k < topk; ++k) f.topk.push_back(-0.1 * k);
    for (int e = 0; e < extra; ++e) f.extra.push_back(rng.normal());
    h.features.push_back(f);
  }
  return h;
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("schema widths and column order") {
  const FeatureSchema s{3, 2, true, true};
  CHECK(s.width() == 9);
  const auto names = s.column_names();
  CHECK(names.front() == "log_posterior");
  CHECK(names[2] == "topk[0]");
  CHECK(names[5] == "extra[0]");
  CHECK(names[7] == "lm_in");
  CHECK(names[8] == "lm_ood");
  CHECK(schema_from_json(to_json(s)) == s);
}

TEST_CASE("assemble without language models") {
  const Hypothesis h = sample_hyp(5, 3, 2, 1);
  const FeatureMatrix m = assemble(h, nullptr, nullptr, FeatureSchema{3, 2, false, false});
  CHECK(m.rows() == 5);
  CHECK(m.cols() == 2 + 3 + 2);
  for (int i = 0; i < 5; ++i) {
    const auto& f = h.features[static_cast<std::size_t>(i)];
    CHECK(m(i, 0) == f.log_posterior);
    CHECK(m(i, 1) == f.entropy);
    CHECK(m(i, 4) == f.topk[2]);
    CHECK(m(i, 6) == f.extra[1]);
  }
}

TEST_CASE("assemble with both language models") {
  const NGramModel in = train_ngram({{0, 1, 2}, {1, 2, 3}}, 2);
  const NGramModel ood = train_ngram({{4, 5}, {5, 4, 0}}, 3);
  const Hypothesis h = sample_hyp(6, 2, 1, 2);
  const FeatureSchema s{2, 1, true, true};
  const FeatureMatrix m = assemble(h, &in, &ood, s);
  CHECK(m.cols() == 2 + 2 + 1 + 2);
  const auto ids = ids_of(h.tokens);
  const auto a = score_sequence(in, ids), b = score_sequence(ood, ids);
  for (int i = 0; i < 6; ++i) {
    CHECK(m(i, 5) == a[static_cast<std::size_t>(i)]);
    CHECK(m(i, 6) == b[static_cast<std::size_t>(i)]);
  }
  // Dropping lm_ood leaves a prefix-identical matrix.
  const FeatureMatrix p = assemble(h, &in, nullptr, FeatureSchema{2, 1, true, false});
  CHECK(p == m.leftCols(6));
}

TEST_CASE("stored LM columns and mismatches") {
  Hypothesis h = sample_hyp(3, 1, 0, 3);
  const FeatureSchema s{1, 0, true, false};
  CHECK_THROWS_AS(assemble(h, nullptr, nullptr, s), DataError);
  for (auto& f : h.features) f.lm_in = -2.5;
  CHECK(assemble(h, nullptr, nullptr, s)(2, 3) == -2.5);
  const NGramModel lm = train_ngram({{0, 1}}, 1);
  CHECK_THROWS_AS(assemble(h, nullptr, &lm, s), DataError);
  CHECK_THROWS_AS(assemble(h, nullptr, nullptr, FeatureSchema{2, 0, false, false}), DataError);
}

TEST_CASE("empty hypothesis") {
  const FeatureMatrix m = assemble(Hypothesis{}, nullptr, nullptr, FeatureSchema{4, 3, false, false});
  CHECK(m.rows() == 0);
  CHECK(m.cols() == 9);
}

TEST_CASE("rows are independent of neighbouring feature values") {
  const Hypothesis h = sample_hyp(5, 2, 1, 4);
  Hypothesis g = h;
  g.features[3].log_posterior = -3.0;
  g.features[3].extra[0] = 10.0;
  const FeatureSchema s{2, 1, false, false};
  const FeatureMatrix a = assemble(h, nullptr, nullptr, s), b = assemble(g, nullptr, nullptr, s);
  for (int i = 0; i < 5; ++i) {
    if (i != 3) CHECK(a.row(i) == b.row(i));
  }
}

TEST_CASE("standardize") {
  FeatureMatrix m(2, 2);
  m << 1, 3, 5, -1;
  const FeatureStats st{{1.0, 1.0}, {2.0, 2.0}};
  const FeatureMatrix z = standardize(st, m);
  CHECK(z(0, 0) == 0.0);
  CHECK(z(0, 1) == 1.0);
  CHECK(z(1, 0) == 2.0);
  CHECK(z(1, 1) == -1.0);

  Rng rng(5);
  FeatureMatrix r = oracle::random_matrix(rng, 40, 3);
  r.col(2).setConstant(4.0);
  const std::vector<FeatureMatrix> v{r.topRows(15), r.bottomRows(25)};
  const FeatureStats own = compute_stats(v);
  const FeatureMatrix s = standardize(own, r);
  for (int c = 0; c < 2; ++c) {
    CHECK(std::abs(s.col(c).mean()) < 1e-12);
    const double var = (s.col(c).array() - s.col(c).mean()).square().mean();
    CHECK(var == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(s.col(2) == r.col(2));
  CHECK(stats_from_json(to_json(own)) == own);
  CHECK_THROWS_AS(standardize(FeatureStats{{0.0}, {1.0}}, r), DataError);
}

}
