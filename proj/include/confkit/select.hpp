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

// Utterance selection by confidence: the k least confident (candidates for
// manual transcription) and the k most confident (for self-training).

#ifndef CONFKIT_SELECT_HPP_
#define CONFKIT_SELECT_HPP_

#include <string>
#include <vector>

#include "confkit/data_model.hpp"

namespace confkit {

struct ScoredUtterance {
  std::string utt_id;
  double confidence = 0.0;
  TokenSeq hyp;
  TokenSeq ref;
};

struct SelectionReport {
  std::size_t k = 0;
  std::vector<std::string> bottom_ids;
  std::vector<std::string> top_ids;
  double bottom_ser = 0.0;
  double top_ser = 0.0;
  double threshold_bottom = 0.0;  // highest confidence among the bottom set
  double threshold_top = 0.0;     // lowest confidence among the top set
  bool pseudo_referenced = false;
};

inline constexpr std::size_t kDefaultSelectK = 200;

/// Bottom set orders by (confidence asc, utt_id asc), top set by
/// (confidence desc, utt_id asc). Both have min(k, N) members.
SelectionReport select_extremes(const std::vector<ScoredUtterance>& utts, std::size_t k,
                                bool pseudo_referenced = false);

json to_json(const SelectionReport& r);

}  // namespace confkit

#endif  // CONFKIT_SELECT_HPP_
