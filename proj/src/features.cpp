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

#include "confkit/features.hpp"

#include <cmath>

#include "confkit/error.hpp"

namespace confkit {

std::vector<std::string> FeatureSchema::column_names() const {
  std::vector<std::string> names{"log_posterior", "entropy"};
  for (int k = 0; k < topk; ++k) names.push_back("topk[" + std::to_string(k) + "]");
  for (int e = 0; e < extra_dims; ++e) names.push_back("extra[" + std::to_string(e) + "]");
  if (lm_in) names.emplace_back("lm_in");
  if (lm_ood) names.emplace_back("lm_ood");
  return names;
}

FeatureSchema FeatureSchema::from_header(const CorpusHeader& h, bool lm_in, bool lm_ood) {
  return FeatureSchema{h.topk, h.extra_dims, lm_in, lm_ood};
}

json to_json(const FeatureSchema& s) {
  return json{{"topk", s.topk},
              {"extra_dims", s.extra_dims},
              {"lm_in", s.lm_in},
              {"lm_ood", s.lm_ood},
              {"columns", s.column_names()}};
}

FeatureSchema schema_from_json(const json& j) {
  try {
    return FeatureSchema{j.at("topk").get<int>(), j.at("extra_dims").get<int>(),
                         j.at("lm_in").get<bool>(), j.at("lm_ood").get<bool>()};
  } catch (const json::exception& e) {
    throw DataError(std::string("feature schema: ") + e.what());
  }
}

namespace {

std::vector<double> lm_column(const Hypothesis& hyp, const NGramModel* lm,
                              std::optional<double> TokenFeatures::*stored,
                              const char* name) {
  if (lm != nullptr) {
    return score_sequence(*lm, ids_of(hyp.tokens));
  }
  std::vector<double> col;
  col.reserve(hyp.features.size());
  for (const auto& f : hyp.features) {
    if (!(f.*stored)) {
      throw DataError(std::string("schema requests ") + name +
                      " but no LM was supplied and the corpus has no stored values");
    }
    col.push_back(*(f.*stored));
  }
  return col;
}

}  // namespace

FeatureMatrix assemble(const Hypothesis& hyp, const NGramModel* lm_in,
                       const NGramModel* lm_ood, const FeatureSchema& schema) {
  if (lm_in != nullptr && !schema.lm_in) throw DataError("in-domain LM supplied but schema has no lm_in column");
  if (lm_ood != nullptr && !schema.lm_ood) throw DataError("OOD LM supplied but schema has no lm_ood column");
  const auto rows = static_cast<Eigen::Index>(hyp.tokens.size());
  FeatureMatrix m(rows, schema.width());
  if (rows == 0) return m;

  std::vector<double> in_col;
  std::vector<double> ood_col;
  if (schema.lm_in) in_col = lm_column(hyp, lm_in, &TokenFeatures::lm_in, "lm_in");
  if (schema.lm_ood) ood_col = lm_column(hyp, lm_ood, &TokenFeatures::lm_ood, "lm_ood");

  for (Eigen::Index i = 0; i < rows; ++i) {
    const TokenFeatures& f = hyp.features[static_cast<std::size_t>(i)];
    if (f.topk.size() != static_cast<std::size_t>(schema.topk) ||
        f.extra.size() != static_cast<std::size_t>(schema.extra_dims)) {
      throw DataError("token features do not match the schema widths");
    }
    Eigen::Index c = 0;
    m(i, c++) = f.log_posterior;
    m(i, c++) = f.entropy;
    for (double v : f.topk) m(i, c++) = v;
    for (double v : f.extra) m(i, c++) = v;
    if (schema.lm_in) m(i, c++) = in_col[static_cast<std::size_t>(i)];
    if (schema.lm_ood) m(i, c++) = ood_col[static_cast<std::size_t>(i)];
  }
  return m;
}

json to_json(const FeatureStats& s) {
  return json{{"mean", s.mean}, {"stddev", s.stddev}};
}

FeatureStats stats_from_json(const json& j) {
  try {
    return FeatureStats{j.at("mean").get<std::vector<double>>(),
                        j.at("stddev").get<std::vector<double>>()};
  } catch (const json::exception& e) {
    throw DataError(std::string("feature stats: ") + e.what());
  }
}

FeatureStats compute_stats(std::span<const FeatureMatrix> matrices) {
  Eigen::Index width = -1;
  for (const auto& m : matrices) {
    if (width < 0) width = m.cols();
    if (m.cols() != width) throw DataError("compute_stats: matrices differ in width");
  }
  if (width < 0) throw DataError("compute_stats: no matrices");
  const auto w = static_cast<std::size_t>(width);
  // Two passes for numerical stability.
  std::vector<double> sum(w, 0.0);
  double rows = 0.0;
  for (const auto& m : matrices) {
    for (Eigen::Index c = 0; c < width; ++c) sum[static_cast<std::size_t>(c)] += m.col(c).sum();
    rows += static_cast<double>(m.rows());
  }
  if (rows == 0.0) throw DataError("compute_stats: no rows");
  FeatureStats st;
  st.mean.resize(w);
  for (std::size_t c = 0; c < w; ++c) st.mean[c] = sum[c] / rows;
  std::vector<double> sq(w, 0.0);
  for (const auto& m : matrices) {
    for (Eigen::Index c = 0; c < width; ++c) {
      sq[static_cast<std::size_t>(c)] +=
          (m.col(c).array() - st.mean[static_cast<std::size_t>(c)]).square().sum();
    }
  }
  st.stddev.resize(w);
  for (std::size_t c = 0; c < w; ++c) st.stddev[c] = std::sqrt(sq[c] / rows);
  return st;
}

FeatureMatrix standardize(const FeatureStats& stats, const FeatureMatrix& m) {
  if (stats.mean.size() != static_cast<std::size_t>(m.cols()) ||
      stats.stddev.size() != static_cast<std::size_t>(m.cols())) {
    throw DataError("standardize: stats width " + std::to_string(stats.mean.size()) +
                    " does not match matrix width " + std::to_string(m.cols()));
  }
  FeatureMatrix out = m;
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const double sd = stats.stddev[static_cast<std::size_t>(c)];
    if (sd == 0.0) continue;
    out.col(c) = (m.col(c).array() - stats.mean[static_cast<std::size_t>(c)]) / sd;
  }
  return out;
}

}  // namespace confkit
