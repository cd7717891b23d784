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

#include "confkit/lm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include "confkit/error.hpp"
#include "confkit/json_io.hpp"

namespace confkit {

namespace fs = std::filesystem;

NGramModel::NGramModel(int order, std::set<int> vocab)
    : order_(order), vocab_(std::move(vocab)), probs_(static_cast<std::size_t>(order)) {}

int NGramModel::map_id(int id) const {
  if (id == kBos || id == kEos) return id;
  return vocab_.count(id) ? id : kUnk;
}

std::vector<int> NGramModel::outcomes() const {
  std::vector<int> out(vocab_.begin(), vocab_.end());
  out.push_back(kUnk);
  out.push_back(kEos);
  return out;
}

double NGramModel::log_prob(std::span<const int> context, int word) const {
  const std::size_t max_ctx = static_cast<std::size_t>(order_ - 1);
  if (context.size() > max_ctx) context = context.subspan(context.size() - max_ctx);
  NGram ctx;
  ctx.reserve(context.size() + 1);
  for (int c : context) ctx.push_back(map_id(c));
  const int w = map_id(word);

  double acc = 0.0;
  for (;;) {
    NGram key = ctx;
    key.push_back(w);
    const auto& table = probs_[ctx.size()];
    if (auto it = table.find(key); it != table.end()) return acc + it->second;
    if (ctx.empty()) {
      throw UsageError("log_prob: token " + std::to_string(word) + " is not an outcome");
    }
    if (auto it = backoffs_.find(ctx); it != backoffs_.end()) acc += it->second;
    ctx.erase(ctx.begin());
  }
}

NGramModel train_ngram(const std::vector<std::vector<int>>& corpus, int order,
                       double discount) {
  if (corpus.empty()) throw UsageError("train_ngram: empty corpus");
  if (order < 1) throw UsageError("train_ngram: order must be >= 1");
  if (!(discount > 0.0 && discount < 1.0)) {
    throw UsageError("train_ngram: discount must lie in (0, 1)");
  }
  const auto n_orders = static_cast<std::size_t>(order);

  std::set<int> vocab;
  for (const auto& s : corpus) {
    for (int id : s) {
      if (id < 0) throw UsageError("train_ngram: negative token id");
      vocab.insert(id);
    }
  }

  // counts[n-1][(context..., w)]
  std::vector<std::map<NGram, double>> counts(n_orders);
  for (const auto& s : corpus) {
    NGram hist{kBos};
    hist.insert(hist.end(), s.begin(), s.end());
    for (std::size_t i = 0; i <= s.size(); ++i) {
      const int w = i < s.size() ? s[i] : kEos;
      // History available at position i: hist[0 .. i].
      for (std::size_t n = 1; n <= n_orders; ++n) {
        const std::size_t ctx_len = n - 1;
        if (ctx_len > i + 1) break;
        NGram key(hist.begin() + static_cast<std::ptrdiff_t>(i + 1 - ctx_len),
                  hist.begin() + static_cast<std::ptrdiff_t>(i + 1));
        key.push_back(w);
        counts[n - 1][key] += 1.0;
      }
    }
  }

  double singletons = 0.0;
  for (const auto& [key, c] : counts[0]) {
    if (key[0] >= 0 && c == 1.0) singletons += 1.0;
  }
  if (singletons > 0.0) counts[0][{kUnk}] = singletons;

  // Per-context totals c(h) and distinct continuations N1+(h .).
  std::map<NGram, std::pair<double, double>> ctx_stats;
  for (std::size_t n = 2; n <= n_orders; ++n) {
    for (const auto& [key, c] : counts[n - 1]) {
      auto& st = ctx_stats[NGram(key.begin(), key.end() - 1)];
      st.first += c;
      st.second += 1.0;
    }
  }

  NGramModel model(order, vocab);
  const std::vector<int> outcomes = model.outcomes();
  double total = 0.0;
  double types = 0.0;
  for (const auto& [key, c] : counts[0]) {
    total += c;
    types += 1.0;
  }
  const double uniform = 1.0 / static_cast<double>(outcomes.size());
  const double D = discount;

  std::function<double(const NGram&, int)> interp = [&](const NGram& ctx, int w) -> double {
    if (ctx.empty()) {
      auto it = counts[0].find({w});
      const double c = it == counts[0].end() ? 0.0 : it->second;
      return std::max(c - D, 0.0) / total + D * types / total * uniform;
    }
    const NGram shorter(ctx.begin() + 1, ctx.end());
    auto st = ctx_stats.find(ctx);
    if (st == ctx_stats.end()) return interp(shorter, w);
    NGram key = ctx;
    key.push_back(w);
    auto it = counts[ctx.size()].find(key);
    const double c = it == counts[ctx.size()].end() ? 0.0 : it->second;
    const auto [c_h, n1] = st->second;
    return std::max(c - D, 0.0) / c_h + D * n1 / c_h * interp(shorter, w);
  };

  for (int w : outcomes) model.probs()[0][{w}] = std::log(interp({}, w));
  for (std::size_t n = 2; n <= n_orders; ++n) {
    for (const auto& [key, c] : counts[n - 1]) {
      const NGram ctx(key.begin(), key.end() - 1);
      model.probs()[n - 1][key] = std::log(interp(ctx, key.back()));
    }
  }
  for (const auto& [ctx, st] : ctx_stats) {
    model.backoffs()[ctx] = std::log(D * st.second / st.first);
  }
  return model;
}

std::vector<double> score_sequence(const NGramModel& model, std::span<const int> tokens) {
  std::vector<double> out;
  out.reserve(tokens.size());
  NGram hist{kBos};
  hist.insert(hist.end(), tokens.begin(), tokens.end());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    out.push_back(model.log_prob(std::span<const int>(hist.data(), i + 1), tokens[i]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// ARPA

namespace {

std::string symbol(int id) {
  switch (id) {
    case kBos: return "<s>";
    case kEos: return "</s>";
    case kUnk: return "<unk>";
    default: return std::to_string(id);
  }
}

int parse_symbol(const std::string& s) {
  if (s == "<s>") return kBos;
  if (s == "</s>") return kEos;
  if (s == "<unk>") return kUnk;
  std::size_t pos = 0;
  int id = 0;
  try {
    id = std::stoi(s, &pos);
  } catch (const std::exception&) {
    throw DataError("arpa: bad token '" + s + "'");
  }
  if (pos != s.size() || id < 0) throw DataError("arpa: bad token '" + s + "'");
  return id;
}

const double kLn10 = std::numbers::ln10;

}  // namespace

std::string to_arpa(const NGramModel& model) {
  std::ostringstream out;
  const auto& probs = model.probs();
  const auto n_orders = static_cast<std::size_t>(model.order());
  const bool bos_bow = model.backoffs().count({kBos}) > 0;
  out << "\\data\\\n";
  for (std::size_t n = 1; n <= n_orders; ++n) {
    std::size_t count = probs[n - 1].size() + (n == 1 && bos_bow ? 1 : 0);
    out << "ngram " << n << "=" << count << "\n";
  }
  for (std::size_t n = 1; n <= n_orders; ++n) {
    out << "\n\\" << n << "-grams:\n";
    auto emit = [&](const NGram& key, const std::string& logp) {
      out << logp << '\t';
      for (std::size_t i = 0; i < key.size(); ++i) out << (i ? " " : "") << symbol(key[i]);
      if (n < n_orders) {
        if (auto it = model.backoffs().find(key); it != model.backoffs().end()) {
          out << '\t' << format_double(it->second / kLn10);
        }
      }
      out << '\n';
    };
    std::map<NGram, std::string> lines;
    for (const auto& [key, lp] : probs[n - 1]) lines[key] = format_double(lp / kLn10);
    // <s> is context-only and carries the conventional -99.
    if (n == 1 && bos_bow) lines[{kBos}] = "-99";
    for (const auto& [key, logp] : lines) emit(key, logp);
  }
  out << "\n\\end\\\n";
  return out.str();
}

NGramModel from_arpa(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::size_t> declared;
  std::size_t section = 0;
  bool in_data = false;
  std::vector<std::map<NGram, double>> probs;
  std::map<NGram, double> backoffs;
  std::size_t line_no = 0;
  auto parse_double = [&](const std::string& s) {
    try {
      std::size_t pos = 0;
      double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw DataError("arpa:" + std::to_string(line_no) + ": bad number '" + s + "'");
    }
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line == "\\data\\") {
      in_data = true;
      continue;
    }
    if (line == "\\end\\") break;
    if (line.front() == '\\') {
      in_data = false;
      const auto dash = line.find("-grams:");
      if (dash == std::string::npos) throw DataError("arpa:" + std::to_string(line_no) + ": unknown section");
      section = static_cast<std::size_t>(std::stoul(line.substr(1, dash - 1)));
      if (section < 1 || section > declared.size()) throw DataError("arpa: undeclared order");
      continue;
    }
    if (in_data) {
      if (line.rfind("ngram ", 0) != 0) throw DataError("arpa: bad \\data\\ line");
      const auto eq = line.find('=');
      const auto n = std::stoul(line.substr(6, eq - 6));
      if (n != declared.size() + 1) throw DataError("arpa: ngram orders out of sequence");
      declared.push_back(std::stoul(line.substr(eq + 1)));
      probs.resize(declared.size());
      continue;
    }
    if (section == 0) throw DataError("arpa:" + std::to_string(line_no) + ": entry outside a section");
    std::vector<std::string> fields;
    {
      std::istringstream ls(line);
      std::string f;
      while (ls >> f) fields.push_back(f);
    }
    if (fields.size() != section + 1 && fields.size() != section + 2) {
      throw DataError("arpa:" + std::to_string(line_no) + ": wrong field count");
    }
    NGram key;
    for (std::size_t i = 1; i <= section; ++i) key.push_back(parse_symbol(fields[i]));
    const double lp = parse_double(fields[0]);
    if (!(section == 1 && key[0] == kBos)) probs[section - 1][key] = lp * kLn10;
    if (fields.size() == section + 2) backoffs[key] = parse_double(fields.back()) * kLn10;
  }
  if (declared.empty()) throw DataError("arpa: missing \\data\\ section");
  std::set<int> vocab;
  for (const auto& [key, lp] : probs[0]) {
    if (key[0] >= 0) vocab.insert(key[0]);
  }
  if (!probs[0].count({kUnk}) || !probs[0].count({kEos})) {
    throw DataError("arpa: unigram section must contain <unk> and </s>");
  }
  NGramModel model(static_cast<int>(declared.size()), std::move(vocab));
  model.probs() = std::move(probs);
  model.backoffs() = std::move(backoffs);
  return model;
}

void write_arpa(const NGramModel& model, const fs::path& path) {
  write_file_atomic(path, to_arpa(model));
}

NGramModel read_arpa(const fs::path& path) {
  try {
    return from_arpa(read_text_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::vector<std::vector<int>> read_text_corpus(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::vector<int>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::vector<int> s;
    std::string tok;
    while (ls >> tok) {
      try {
        std::size_t pos = 0;
        int id = std::stoi(tok, &pos);
        if (pos != tok.size() || id < 0) throw std::invalid_argument(tok);
        s.push_back(id);
      } catch (const std::exception&) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad token id '" + tok + "'");
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_text_corpus(const std::vector<std::vector<int>>& sentences,
                       const fs::path& path) {
  std::string out;
  for (const auto& s : sentences) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i) out += ' ';
      out += std::to_string(s[i]);
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

}  // namespace confkit
