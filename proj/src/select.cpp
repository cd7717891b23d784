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

#include "confkit/select.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "confkit/align.hpp"
#include "confkit/error.hpp"

namespace confkit {

namespace {

std::pair<std::vector<std::string>, double> take(const std::vector<ScoredUtterance>& utts,
                                                 const std::vector<std::size_t>& order,
                                                 std::size_t k) {
  std::vector<std::string> ids;
  std::vector<std::pair<TokenSeq, TokenSeq>> pairs;
  for (std::size_t i = 0; i < k; ++i) {
    const ScoredUtterance& u = utts[order[i]];
    ids.push_back(u.utt_id);
    pairs.emplace_back(u.hyp, u.ref);
  }
  return {ids, ser(pairs)};
}

}  // namespace

SelectionReport select_extremes(const std::vector<ScoredUtterance>& utts, std::size_t k,
                                bool pseudo_referenced) {
  if (utts.empty()) throw DataError("select: empty input");
  if (k < 1) throw UsageError("select: k must be >= 1");
  for (const auto& u : utts) {
    if (!std::isfinite(u.confidence)) throw NumericError("select: non-finite confidence for '" + u.utt_id + "'");
  }
  const std::size_t n = std::min(k, utts.size());

  std::vector<std::size_t> asc(utts.size());
  std::iota(asc.begin(), asc.end(), std::size_t{0});
  std::vector<std::size_t> desc = asc;
  std::sort(asc.begin(), asc.end(), [&](std::size_t a, std::size_t b) {
    if (utts[a].confidence != utts[b].confidence) return utts[a].confidence < utts[b].confidence;
    return utts[a].utt_id < utts[b].utt_id;
  });
  std::sort(desc.begin(), desc.end(), [&](std::size_t a, std::size_t b) {
    if (utts[a].confidence != utts[b].confidence) return utts[a].confidence > utts[b].confidence;
    return utts[a].utt_id < utts[b].utt_id;
  });

  SelectionReport r;
  r.k = n;
  r.pseudo_referenced = pseudo_referenced;
  std::tie(r.bottom_ids, r.bottom_ser) = take(utts, asc, n);
  std::tie(r.top_ids, r.top_ser) = take(utts, desc, n);
  r.threshold_bottom = utts[asc[n - 1]].confidence;
  r.threshold_top = utts[desc[n - 1]].confidence;
  return r;
}

json to_json(const SelectionReport& r) {
  return json{{"k", r.k},
              {"bottom_ids", r.bottom_ids},
              {"top_ids", r.top_ids},
              {"bottom_ser", r.bottom_ser},
              {"top_ser", r.top_ser},
              {"threshold_bottom", r.threshold_bottom},
              {"threshold_top", r.threshold_top},
              {"pseudo_referenced", r.pseudo_referenced}};
}

}  // namespace confkit
