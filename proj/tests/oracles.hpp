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


// Slow, independent reference implementations shared by the unit tests and
// the acceptance runner.

#ifndef CONFKIT_TESTS_ORACLES_HPP_
#define CONFKIT_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "confkit/confidence_net.hpp"
#include "confkit/data_model.hpp"
#include "confkit/metrics.hpp"
#include "confkit/rng.hpp"
#include "confkit/simulate.hpp"

namespace oracle {

using confkit::ScoredSet;

// Precision at each positive's own score, counting everything scored at
// least as high.
inline double average_precision(const ScoredSet& s) {
  double sum = 0.0;
  int pos = 0;
  for (std::size_t i = 0; i < s.scores.size(); ++i) {
    if (s.labels[i] != 1) continue;
    ++pos;
    int above = 0, above_pos = 0;
    for (std::size_t j = 0; j < s.scores.size(); ++j) {
      if (s.scores[j] >= s.scores[i]) {
        ++above;
        above_pos += s.labels[j];
      }
    }
    sum += static_cast<double>(above_pos) / above;
  }
  return sum / pos;
}

// Sweep thresholds at +inf, every midpoint between distinct scores, and
// -inf; walk the (FNR, FPR) polyline and return the first crossing.
inline double equal_error_rate(const ScoredSet& s) {
  std::vector<double> u(s.scores.begin(), s.scores.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  u.erase(std::unique(u.begin(), u.end()), u.end());
  std::vector<double> th{HUGE_VAL};
  for (std::size_t i = 0; i + 1 < u.size(); ++i) th.push_back(0.5 * (u[i] + u[i + 1]));
  th.push_back(-HUGE_VAL);
  double P = 0, N = 0;
  for (int l : s.labels) (l ? P : N) += 1;
  auto rates = [&](double t) {
    double fn = 0, fp = 0;
    for (std::size_t i = 0; i < s.scores.size(); ++i) {
      const bool accept = s.scores[i] > t;
      if (s.labels[i] == 1 && !accept) fn += 1;
      if (s.labels[i] == 0 && accept) fp += 1;
    }
    return std::pair<double, double>{fn / P, fp / N};
  };
  auto prev = rates(th[0]);
  for (std::size_t k = 1; k < th.size(); ++k) {
    const auto cur = rates(th[k]);
    const double d0 = prev.first - prev.second;
    const double d1 = cur.first - cur.second;
    if (d1 <= 0) {
      const double t = d0 / (d0 - d1);
      return prev.first + t * (cur.first - prev.first);
    }
    prev = cur;
  }
  return NAN;
}

inline double normalized_cross_entropy(const ScoredSet& s) {
  const double n = static_cast<double>(s.labels.size());
  double pos = 0;
  for (int l : s.labels) pos += l;
  double hc = 0.0;
  for (int l : s.labels) hc -= std::log(l ? pos / n : (n - pos) / n);
  hc /= n;
  double hcp = 0.0;
  for (std::size_t i = 0; i < s.scores.size(); ++i) {
    const double p = std::min(std::max(s.scores[i], 1e-8), 1.0 - 1e-8);
    hcp -= s.labels[i] ? std::log(p) : std::log1p(-p);
  }
  hcp /= n;
  return (hc - hcp) / hc;
}

// Bin m holds m/M <= s < (m+1)/M; the last bin is closed at 1.
inline double expected_calibration_error(const ScoredSet& s, int M) {
  double total = 0.0;
  for (int m = 0; m < M; ++m) {
    const double lo = static_cast<double>(m) / M;
    const double hi = static_cast<double>(m + 1) / M;
    double cnt = 0, acc = 0, conf = 0;
    for (std::size_t i = 0; i < s.scores.size(); ++i) {
      const double x = s.scores[i];
      if (x >= lo && (x < hi || (m == M - 1 && x <= 1.0))) {
        cnt += 1;
        acc += s.labels[i];
        conf += x;
      }
    }
    if (cnt > 0) total += std::abs(acc / cnt - conf / cnt) * cnt;
  }
  return total / static_cast<double>(s.scores.size());
}

// Shortest edit path between all short sequences over a small alphabet,
// by breadth-first search in sequence space.
class EditGraph {
 public:
  EditGraph(int alphabet, int max_len) : alphabet_(alphabet), max_len_(max_len) {
    std::vector<int> cur;
    enumerate(cur);
  }

  const std::vector<std::vector<int>>& nodes() const { return nodes_; }

  std::vector<int> distances_from(std::size_t src) const {
    std::vector<int> dist(nodes_.size(), -1);
    std::queue<std::size_t> q;
    dist[src] = 0;
    q.push(src);
    while (!q.empty()) {
      const std::size_t v = q.front();
      q.pop();
      for (const auto& nb : neighbours(nodes_[v])) {
        const std::size_t w = index_[code(nb)];
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          q.push(w);
        }
      }
    }
    return dist;
  }

 private:
  // Bijective base-(alphabet + 1) code; digit 0 never occurs.
  std::size_t code(const std::vector<int>& s) const {
    std::size_t c = 0;
    for (int x : s) c = c * static_cast<std::size_t>(alphabet_ + 1) + static_cast<std::size_t>(x + 1);
    return c;
  }

  void enumerate(std::vector<int>& cur) {
    const std::size_t c = code(cur);
    if (index_.size() <= c) index_.resize(c + 1);
    index_[c] = nodes_.size();
    nodes_.push_back(cur);
    if (static_cast<int>(cur.size()) == max_len_) return;
    for (int a = 0; a < alphabet_; ++a) {
      cur.push_back(a);
      enumerate(cur);
      cur.pop_back();
    }
  }

  std::vector<std::vector<int>> neighbours(const std::vector<int>& s) const {
    std::vector<std::vector<int>> out;
    for (std::size_t i = 0; i < s.size(); ++i) {
      auto d = s;
      d.erase(d.begin() + static_cast<std::ptrdiff_t>(i));
      out.push_back(d);
      for (int a = 0; a < alphabet_; ++a) {
        if (a == s[i]) continue;
        auto t = s;
        t[i] = a;
        out.push_back(t);
      }
    }
    if (static_cast<int>(s.size()) < max_len_) {
      for (std::size_t i = 0; i <= s.size(); ++i) {
        for (int a = 0; a < alphabet_; ++a) {
          auto t = s;
          t.insert(t.begin() + static_cast<std::ptrdiff_t>(i), a);
          out.push_back(t);
        }
      }
    }
    return out;
  }

  int alphabet_;
  int max_len_;
  std::vector<std::vector<int>> nodes_;
  std::vector<std::size_t> index_;
};

inline confkit::TokenSeq tokens(const std::vector<int>& ids, const std::vector<bool>& starts = {}) {
  confkit::TokenSeq out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const bool ws = starts.empty() ? true : starts[i];
    out.push_back({ids[i], confkit::token_surface(ids[i]), ws});
  }
  return out;
}

inline confkit::ScoredSet random_set(confkit::Rng& rng, std::size_t max_n, bool ties) {
  confkit::ScoredSet s;
  std::size_t n = 2 + rng.below(max_n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    s.scores.push_back(ties ? static_cast<double>(rng.below(6)) / 5.0 : rng.uniform());
    s.labels.push_back(rng.uniform() < 0.6 ? 1 : 0);
  }
  s.labels[0] = 1;
  s.labels[1] = 0;
  return s;
}

// Random feature matrix with rows ~ N(0, 1).
inline confkit::FeatureMatrix random_matrix(confkit::Rng& rng, int rows, int cols) {
  confkit::FeatureMatrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.normal();
  }
  return m;
}

struct GradCheck {
  double worst_rel = 0.0;
  std::size_t coords = 0;
};

// Central differences against loss_and_gradients; relative error uses
// max(|a|, |n|, 1e-6) so that vanishing coordinates are compared absolutely.
inline GradCheck check_gradients(confkit::ConfidenceModel& model,
                                 const std::vector<confkit::TrainItem>& items, double h = 1e-5) {
  std::vector<const confkit::TrainItem*> batch;
  for (const auto& it : items) batch.push_back(&it);
  const auto analytic = confkit::loss_and_gradients(model, batch);
  GradCheck out;
  auto& p = model.params();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double keep = p[i];
    p[i] = keep + h;
    const double up = confkit::batch_loss(model, batch);
    p[i] = keep - h;
    const double down = confkit::batch_loss(model, batch);
    p[i] = keep;
    const double numeric = (up - down) / (2 * h);
    const double denom = std::max({std::abs(analytic.grad[i]), std::abs(numeric), 1e-6});
    out.worst_rel = std::max(out.worst_rel, std::abs(analytic.grad[i] - numeric) / denom);
    ++out.coords;
  }
  return out;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("confkit_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace oracle

#endif  // CONFKIT_TESTS_ORACLES_HPP_
