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

// Confidence quality metrics. Label 1 means "correct" and is the positive
// class throughout.

#ifndef CONFKIT_METRICS_HPP_
#define CONFKIT_METRICS_HPP_

#include <optional>
#include <string>
#include <vector>

#include "confkit/json_io.hpp"

namespace confkit {

struct ScoredSet {
  std::vector<double> scores;
  std::vector<int> labels;
};

/// Average precision. Items with equal scores form one threshold group.
double auc_pr(const ScoredSet& s);

/// FNR = FPR crossing, linearly interpolated between the two operating
/// points that bracket it.
double eer(const ScoredSet& s);

/// (H(c) - H(c, p)) / H(c) in nats, scores clipped to [1e-8, 1 - 1e-8].
double nce(const ScoredSet& s);

/// Equal-width binning of [0, 1]; a score s falls into min(floor(s * bins), bins - 1).
double ece(const ScoredSet& s, int bins = 50);

struct ReliabilityBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double mean_confidence = 0.0;
  double accuracy = 0.0;
};

std::vector<ReliabilityBin> reliability_bins(const ScoredSet& s, int bins = 50);

/// Metrics that are undefined for the given set (single class) are empty.
struct MetricsReport {
  std::optional<double> auc;
  std::optional<double> eer;
  std::optional<double> nce;
  std::optional<double> ece;
  std::size_t n = 0;
  std::size_t n_pos = 0;
};

MetricsReport compute_report(const ScoredSet& s, int ece_bins = 50);

/// Flat object {auc, eer, nce, ece, n, n_pos}; undefined entries are null.
json to_json(const MetricsReport& r);
MetricsReport metrics_report_from_json(const json& j);

/// Plain-text table, one metric per row.
std::string render_table(const MetricsReport& r);

}  // namespace confkit

#endif  // CONFKIT_METRICS_HPP_
