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

// Piece-wise linear score calibration.
//
// fit_pwlm:
//   1. bin the dev scores into equal-width buckets (per-bin count, mean
//      score, accuracy; empty bins are dropped);
//   2. pick interior breakpoints among the bin edges by DP, scoring each
//      segment by a count-weighted least-squares line through its bins;
//   3. refit the knot values jointly as one continuous piece-wise linear
//      function (weighted least squares with a tiny ridge towards the
//      overall accuracy, so knots without data stay defined);
//   4. pool adjacent violators, then clamp to [0, 1].

#ifndef CONFKIT_CALIBRATE_HPP_
#define CONFKIT_CALIBRATE_HPP_

#include <vector>

#include "confkit/json_io.hpp"
#include "confkit/metrics.hpp"

namespace confkit {

struct PwlMapping {
  std::vector<double> breakpoints;  // strictly increasing, 0 ... 1
  std::vector<double> values;       // non-decreasing, in [0, 1]
};

/// Throws DataError if the mapping breaks its invariants.
void validate(const PwlMapping& m);

PwlMapping fit_pwlm(const ScoredSet& dev, int segments = 5, int bins = 50);

/// Clamps the score to [0, 1] and interpolates linearly.
double apply_pwlm(const PwlMapping& m, double score);
std::vector<double> apply_pwlm(const PwlMapping& m, const std::vector<double>& scores);

/// Weighted pool-adjacent-violators: the non-decreasing sequence closest
/// to `y` in weighted squared error.
std::vector<double> pool_adjacent_violators(const std::vector<double>& y,
                                            const std::vector<double>& w);

json to_json(const PwlMapping& m);
PwlMapping pwl_mapping_from_json(const json& j);

}  // namespace confkit

#endif  // CONFKIT_CALIBRATE_HPP_
