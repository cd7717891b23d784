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

#include "confkit/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "confkit/error.hpp"

namespace confkit {

namespace {

constexpr double kRidge = 1e-6;

struct Bin {
  double w = 0.0;  // count
  double x = 0.0;  // mean score
  double y = 0.0;  // accuracy
  std::size_t index = 0;
};

// Prefix sums of the weighted moments so that the least-squares line of
// any bin range costs O(1).
struct Moments {
  std::vector<double> w, wx, wy, wxx, wxy, wyy;

  explicit Moments(const std::vector<Bin>& bins) {
    const std::size_t n = bins.size();
    for (auto* v : {&w, &wx, &wy, &wxx, &wxy, &wyy}) v->assign(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const Bin& b = bins[i];
      w[i + 1] = w[i] + b.w;
      wx[i + 1] = wx[i] + b.w * b.x;
      wy[i + 1] = wy[i] + b.w * b.y;
      wxx[i + 1] = wxx[i] + b.w * b.x * b.x;
      wxy[i + 1] = wxy[i] + b.w * b.x * b.y;
      wyy[i + 1] = wyy[i] + b.w * b.y * b.y;
    }
  }

  // Residual weighted SSE of the best line through bins [i, j).
  double sse(std::size_t i, std::size_t j) const {
    const double sw = w[j] - w[i];
    if (sw <= 0.0) return 0.0;
    const double mx = (wx[j] - wx[i]) / sw;
    const double my = (wy[j] - wy[i]) / sw;
    const double sxx = (wxx[j] - wxx[i]) - sw * mx * mx;
    const double sxy = (wxy[j] - wxy[i]) - sw * mx * my;
    const double syy = (wyy[j] - wyy[i]) - sw * my * my;
    const double r = sxx > 1e-15 ? syy - sxy * sxy / sxx : syy;
    return std::max(r, 0.0);
  }
};

}  // namespace

void validate(const PwlMapping& m) {
  if (m.breakpoints.size() < 2 || m.breakpoints.size() != m.values.size()) {
    throw DataError("pwl mapping: need >= 2 breakpoints and one value per breakpoint");
  }
  if (m.breakpoints.front() != 0.0 || m.breakpoints.back() != 1.0) {
    throw DataError("pwl mapping: breakpoints must start at 0 and end at 1");
  }
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    if (i > 0 && !(m.breakpoints[i] > m.breakpoints[i - 1])) {
      throw DataError("pwl mapping: breakpoints must be strictly increasing");
    }
    if (i > 0 && m.values[i] < m.values[i - 1]) throw DataError("pwl mapping: values must be non-decreasing");
    if (!(m.values[i] >= 0.0 && m.values[i] <= 1.0)) throw DataError("pwl mapping: values must lie in [0, 1]");
  }
}

std::vector<double> pool_adjacent_violators(const std::vector<double>& y,
                                            const std::vector<double>& w) {
  if (y.size() != w.size()) throw DataError("pav: length mismatch");
  struct Block {
    double sum_wy, sum_w;
    std::size_t len;
  };
  std::vector<Block> stack;
  for (std::size_t i = 0; i < y.size(); ++i) {
    stack.push_back({w[i] * y[i], w[i], 1});
    while (stack.size() > 1) {
      const Block& b = stack.back();
      const Block& a = stack[stack.size() - 2];
      if (a.sum_wy * b.sum_w <= b.sum_wy * a.sum_w) break;
      Block merged{a.sum_wy + b.sum_wy, a.sum_w + b.sum_w, a.len + b.len};
      stack.pop_back();
      stack.back() = merged;
    }
  }
  std::vector<double> out;
  out.reserve(y.size());
  for (const Block& b : stack) out.insert(out.end(), b.len, b.sum_wy / b.sum_w);
  return out;
}

PwlMapping fit_pwlm(const ScoredSet& dev, int segments, int bins) {
  if (segments < 1) throw UsageError("fit_pwlm: segments must be >= 1");
  if (bins < segments) throw UsageError("fit_pwlm: bins must be >= segments");
  const auto rb = reliability_bins(dev, bins);  // validates the set

  std::vector<Bin> data;
  double total = 0.0;
  double correct = 0.0;
  for (std::size_t b = 0; b < rb.size(); ++b) {
    if (rb[b].count == 0) continue;
    const double w = static_cast<double>(rb[b].count);
    data.push_back({w, rb[b].mean_confidence, rb[b].accuracy, b});
    total += w;
    correct += w * rb[b].accuracy;
  }
  const double overall = correct / total;

  // DP over knot positions k in {0..bins}; bins [k_prev, k) form a segment.
  // first[k] = index into `data` of the first non-empty bin with index >= k.
  const auto B = static_cast<std::size_t>(bins);
  const auto S = static_cast<std::size_t>(segments);
  std::vector<std::size_t> first(B + 1, data.size());
  for (std::size_t k = B + 1; k-- > 0;) {
    std::size_t i = data.size();
    while (i > 0 && data[i - 1].index >= k) --i;
    first[k] = i;
  }
  const Moments mom(data);
  const double inf = std::numeric_limits<double>::infinity();
  // cost[s][k]: best SSE covering bins [0, k) with s segments.
  std::vector<std::vector<double>> cost(S + 1, std::vector<double>(B + 1, inf));
  std::vector<std::vector<std::size_t>> arg(S + 1, std::vector<std::size_t>(B + 1, 0));
  cost[0][0] = 0.0;
  for (std::size_t s = 1; s <= S; ++s) {
    for (std::size_t k = s; k <= B; ++k) {
      for (std::size_t p = s - 1; p < k; ++p) {
        if (cost[s - 1][p] == inf) continue;
        const double c = cost[s - 1][p] + mom.sse(first[p], first[k]);
        // Strict comparison keeps the leftmost optimum.
        if (c < cost[s][k]) {
          cost[s][k] = c;
          arg[s][k] = p;
        }
      }
    }
  }
  std::vector<std::size_t> knots(S + 1);
  knots[S] = B;
  for (std::size_t s = S; s > 0; --s) knots[s - 1] = arg[s][knots[s]];

  PwlMapping m;
  for (std::size_t k : knots) m.breakpoints.push_back(static_cast<double>(k) / bins);
  m.breakpoints.front() = 0.0;
  m.breakpoints.back() = 1.0;

  if (overall == 0.0 || overall == 1.0) {
    m.values.assign(S + 1, overall);
    return m;
  }

  // Continuous refit on the hat basis.
  const Eigen::Index K = static_cast<Eigen::Index>(S + 1);
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(K, K) * (kRidge * total);
  Eigen::VectorXd rhs = Eigen::VectorXd::Constant(K, kRidge * total * overall);
  std::vector<double> mass(S + 1, 0.0);
  for (const Bin& b : data) {
    const auto it = std::upper_bound(m.breakpoints.begin(), m.breakpoints.end(), b.x);
    auto seg = static_cast<Eigen::Index>(std::distance(m.breakpoints.begin(), it)) - 1;
    seg = std::clamp<Eigen::Index>(seg, 0, K - 2);
    const double x0 = m.breakpoints[static_cast<std::size_t>(seg)];
    const double x1 = m.breakpoints[static_cast<std::size_t>(seg + 1)];
    const double t = std::clamp((b.x - x0) / (x1 - x0), 0.0, 1.0);
    const double phi[2] = {1.0 - t, t};
    for (int a = 0; a < 2; ++a) {
      rhs(seg + a) += b.w * phi[a] * b.y;
      mass[static_cast<std::size_t>(seg + a)] += b.w * phi[a];
      for (int c = 0; c < 2; ++c) A(seg + a, seg + c) += b.w * phi[a] * phi[c];
    }
  }
  const Eigen::VectorXd v = A.ldlt().solve(rhs);
  std::vector<double> values(v.data(), v.data() + K);
  std::vector<double> weights(S + 1);
  for (std::size_t i = 0; i <= S; ++i) weights[i] = mass[i] + kRidge * total;
  values = pool_adjacent_violators(values, weights);
  for (double& y : values) y = std::clamp(y, 0.0, 1.0);
  m.values = std::move(values);
  return m;
}

double apply_pwlm(const PwlMapping& m, double score) {
  if (std::isnan(score)) throw NumericError("apply_pwlm: NaN score");
  const double x = std::clamp(score, 0.0, 1.0);
  const auto& bp = m.breakpoints;
  const auto it = std::upper_bound(bp.begin(), bp.end(), x);
  if (it == bp.end()) return m.values.back();
  const auto i = static_cast<std::size_t>(std::distance(bp.begin(), it)) - 1;
  const double t = (x - bp[i]) / (bp[i + 1] - bp[i]);
  if (t == 0.0) return m.values[i];
  return m.values[i] + t * (m.values[i + 1] - m.values[i]);
}

std::vector<double> apply_pwlm(const PwlMapping& m, const std::vector<double>& scores) {
  std::vector<double> out;
  out.reserve(scores.size());
  for (double s : scores) out.push_back(apply_pwlm(m, s));
  return out;
}

json to_json(const PwlMapping& m) {
  return json{{"breakpoints", m.breakpoints}, {"values", m.values}};
}

PwlMapping pwl_mapping_from_json(const json& j) {
  PwlMapping m;
  try {
    m.breakpoints = j.at("breakpoints").get<std::vector<double>>();
    m.values = j.at("values").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("pwl mapping: ") + e.what());
  }
  validate(m);
  return m;
}

}  // namespace confkit
