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

#include "confkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "confkit/error.hpp"

namespace confkit {

namespace {

constexpr double kClipLo = 1e-8;
constexpr double kClipHi = 1.0 - 1e-8;

struct Counts {
  std::size_t pos = 0;
  std::size_t neg = 0;
};

Counts check(const ScoredSet& s, const char* what) {
  if (s.scores.size() != s.labels.size()) {
    throw DataError(std::string(what) + ": scores and labels differ in length");
  }
  if (s.scores.empty()) throw DataError(std::string(what) + ": empty set");
  Counts c;
  for (std::size_t i = 0; i < s.scores.size(); ++i) {
    if (!std::isfinite(s.scores[i])) throw NumericError(std::string(what) + ": non-finite score");
    if (s.labels[i] == 1) {
      ++c.pos;
    } else if (s.labels[i] == 0) {
      ++c.neg;
    } else {
      throw DataError(std::string(what) + ": labels must be 0 or 1");
    }
  }
  return c;
}

Counts check_two_class(const ScoredSet& s, const char* what) {
  const Counts c = check(s, what);
  if (c.pos == 0 || c.neg == 0) {
    throw DataError(std::string(what) + ": undefined for a single-class set");
  }
  return c;
}

// Cumulative (tp, fp) after each group of tied scores, highest score first.
struct Group {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t group_pos = 0;
};

std::vector<Group> descending_groups(const ScoredSet& s) {
  std::vector<std::size_t> idx(s.scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return s.scores[a] > s.scores[b]; });
  std::vector<Group> out;
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    std::size_t gp = 0;
    while (j < idx.size() && s.scores[idx[j]] == s.scores[idx[i]]) {
      if (s.labels[idx[j]] == 1) {
        ++tp;
        ++gp;
      } else {
        ++fp;
      }
      ++j;
    }
    out.push_back({tp, fp, gp});
    i = j;
  }
  return out;
}

}  // namespace

double auc_pr(const ScoredSet& s) {
  const Counts c = check_two_class(s, "auc_pr");
  double ap = 0.0;
  for (const Group& g : descending_groups(s)) {
    if (g.group_pos == 0) continue;
    const double precision = static_cast<double>(g.tp) / static_cast<double>(g.tp + g.fp);
    ap += static_cast<double>(g.group_pos) * precision;
  }
  return ap / static_cast<double>(c.pos);
}

double eer(const ScoredSet& s) {
  const Counts c = check_two_class(s, "eer");
  const double P = static_cast<double>(c.pos);
  const double N = static_cast<double>(c.neg);
  // Operating point 0 accepts nothing: FNR = 1, FPR = 0.
  double fnr_prev = 1.0;
  double fpr_prev = 0.0;
  for (const Group& g : descending_groups(s)) {
    const double fnr = 1.0 - static_cast<double>(g.tp) / P;
    const double fpr = static_cast<double>(g.fp) / N;
    const double d = fnr - fpr;
    if (d <= 0.0) {
      const double d_prev = fnr_prev - fpr_prev;
      const double t = d_prev / (d_prev - d);
      return fnr_prev + t * (fnr - fnr_prev);
    }
    fnr_prev = fnr;
    fpr_prev = fpr;
  }
  // The last group accepts everything (FNR 0, FPR 1), so this is unreachable.
  throw NumericError("eer: no crossing found");
}

double nce(const ScoredSet& s) {
  const Counts c = check(s, "nce");
  if (c.pos == 0 || c.neg == 0) {
    throw DataError("nce: undefined when all labels are identical (H(c) = 0)");
  }
  const double n = static_cast<double>(s.scores.size());
  const double pc = static_cast<double>(c.pos) / n;
  const double hc = -(pc * std::log(pc) + (1.0 - pc) * std::log(1.0 - pc));
  double hcp = 0.0;
  for (std::size_t i = 0; i < s.scores.size(); ++i) {
    const double p = std::clamp(s.scores[i], kClipLo, kClipHi);
    hcp -= s.labels[i] ? std::log(p) : std::log(1.0 - p);
  }
  hcp /= n;
  return (hc - hcp) / hc;
}

std::vector<ReliabilityBin> reliability_bins(const ScoredSet& s, int bins) {
  check(s, "ece");
  if (bins < 1) throw UsageError("ece: bins must be >= 1");
  const auto m = static_cast<std::size_t>(bins);
  std::vector<ReliabilityBin> out(m);
  std::vector<double> conf_sum(m, 0.0);
  std::vector<double> pos(m, 0.0);
  for (std::size_t i = 0; i < s.scores.size(); ++i) {
    const double x = s.scores[i];
    if (x < 0.0 || x > 1.0) throw DataError("ece: score outside [0, 1]");
    const auto b = std::min(static_cast<std::size_t>(std::floor(x * bins)), m - 1);
    ++out[b].count;
    conf_sum[b] += x;
    pos[b] += s.labels[i];
  }
  for (std::size_t b = 0; b < m; ++b) {
    out[b].lo = static_cast<double>(b) / bins;
    out[b].hi = static_cast<double>(b + 1) / bins;
    if (out[b].count > 0) {
      out[b].mean_confidence = conf_sum[b] / static_cast<double>(out[b].count);
      out[b].accuracy = pos[b] / static_cast<double>(out[b].count);
    }
  }
  return out;
}

double ece(const ScoredSet& s, int bins) {
  const double n = static_cast<double>(s.scores.size());
  double total = 0.0;
  for (const auto& b : reliability_bins(s, bins)) {
    if (b.count == 0) continue;
    total += static_cast<double>(b.count) / n * std::abs(b.accuracy - b.mean_confidence);
  }
  return total;
}

MetricsReport compute_report(const ScoredSet& s, int ece_bins) {
  const Counts c = check(s, "metrics");
  MetricsReport r;
  r.n = s.scores.size();
  r.n_pos = c.pos;
  r.ece = ece(s, ece_bins);
  if (c.pos > 0 && c.neg > 0) {
    r.auc = auc_pr(s);
    r.eer = eer(s);
    r.nce = nce(s);
  }
  return r;
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

json to_json(const MetricsReport& r) {
  return json{{"auc", opt(r.auc)}, {"eer", opt(r.eer)}, {"nce", opt(r.nce)},
              {"ece", opt(r.ece)}, {"n", r.n},          {"n_pos", r.n_pos}};
}

MetricsReport metrics_report_from_json(const json& j) {
  try {
    MetricsReport r;
    r.auc = opt_from(j, "auc");
    r.eer = opt_from(j, "eer");
    r.nce = opt_from(j, "nce");
    r.ece = opt_from(j, "ece");
    r.n = j.at("n").get<std::size_t>();
    r.n_pos = j.at("n_pos").get<std::size_t>();
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("metrics report: ") + e.what());
  }
}

std::string render_table(const MetricsReport& r) {
  auto row = [](const char* name, const std::optional<double>& v) {
    char buf[64];
    if (v) {
      std::snprintf(buf, sizeof buf, "%-6s %.4f\n", name, *v);
    } else {
      std::snprintf(buf, sizeof buf, "%-6s n/a\n", name);
    }
    return std::string(buf);
  };
  std::string out = row("auc", r.auc) + row("eer", r.eer) + row("nce", r.nce) + row("ece", r.ece);
  out += "n      " + std::to_string(r.n) + "\nn_pos  " + std::to_string(r.n_pos) + "\n";
  if (!r.auc) out += "(single-class set: auc/eer/nce undefined)\n";
  return out;
}

}  // namespace confkit
