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

// Per-token feature matrices for the confidence networks.

#ifndef CONFKIT_FEATURES_HPP_
#define CONFKIT_FEATURES_HPP_

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "confkit/data_model.hpp"
#include "confkit/lm.hpp"

namespace confkit {

/// One row per token, one column per schema entry.
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Fixed column layout:
///   log_posterior, entropy, topk[0..K-1], extra[0..E-1], lm_in?, lm_ood?
struct FeatureSchema {
  int topk = 1;
  int extra_dims = 0;
  bool lm_in = false;
  bool lm_ood = false;

  int width() const { return 2 + topk + extra_dims + (lm_in ? 1 : 0) + (lm_ood ? 1 : 0); }
  std::vector<std::string> column_names() const;

  static FeatureSchema from_header(const CorpusHeader& h, bool lm_in, bool lm_ood);

  bool operator==(const FeatureSchema&) const = default;
};

json to_json(const FeatureSchema& s);
FeatureSchema schema_from_json(const json& j);

/// LM columns are computed with score_sequence when the model is given.
/// Without a model, a requested LM column falls back to the values stored
/// in the hypothesis; if those are missing too it is a DataError, as is
/// passing a model the schema has no column for.
FeatureMatrix assemble(const Hypothesis& hyp, const NGramModel* lm_in,
                       const NGramModel* lm_ood, const FeatureSchema& schema);

struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // population standard deviation

  bool operator==(const FeatureStats&) const = default;
};

json to_json(const FeatureStats& s);
FeatureStats stats_from_json(const json& j);

/// Column statistics pooled over every row of every matrix.
FeatureStats compute_stats(std::span<const FeatureMatrix> matrices);

/// (x - mean) / stddev per column; columns with stddev 0 are left as is.
FeatureMatrix standardize(const FeatureStats& stats, const FeatureMatrix& m);

}  // namespace confkit

#endif  // CONFKIT_FEATURES_HPP_
