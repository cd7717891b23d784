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

#include "confkit/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "confkit/error.hpp"

namespace confkit {

namespace fs = std::filesystem;

std::vector<WordSpan> word_spans_from_flags(const std::vector<bool>& word_start) {
  std::vector<WordSpan> spans;
  for (std::size_t i = 0; i < word_start.size(); ++i) {
    if (word_start[i] || spans.empty()) {
      spans.push_back({i, i + 1});
    } else {
      spans.back().end = i + 1;
    }
  }
  return spans;
}

std::vector<WordSpan> word_spans(std::span<const Token> tokens) {
  std::vector<bool> flags(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) flags[i] = tokens[i].word_start;
  return word_spans_from_flags(flags);
}

std::vector<std::string> words_of(std::span<const Token> tokens) {
  std::vector<std::string> words;
  for (const auto& span : word_spans(tokens)) {
    std::string w;
    for (std::size_t i = span.begin; i < span.end; ++i) w += tokens[i].surface;
    words.push_back(std::move(w));
  }
  return words;
}

std::vector<int> ids_of(std::span<const Token> tokens) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(t.id);
  return ids;
}

void validate_header(const CorpusHeader& h) {
  if (h.version != 1) throw DataError("header: unsupported version " + std::to_string(h.version));
  if (h.vocab_size <= 0) throw DataError("header: vocab_size must be positive");
  if (h.topk < 1) throw DataError("header: topk must be >= 1");
  if (h.extra_dims < 0) throw DataError("header: extra_dims must be >= 0");
}

namespace {

[[noreturn]] void fail(const Utterance& u, const std::string& field,
                       const std::string& what) {
  throw DataError("utterance '" + u.utt_id + "': " + field + ": " + what);
}

void check_tokens(const Utterance& u, const std::string& field,
                  const TokenSeq& tokens, const CorpusHeader& h) {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].id < 0 || tokens[i].id >= h.vocab_size) {
      fail(u, field, "token " + std::to_string(i) + " id " +
                         std::to_string(tokens[i].id) + " outside vocabulary");
    }
  }
  if (!tokens.empty() && !tokens.front().word_start) {
    fail(u, field, "first token must have word_start = true");
  }
}

}  // namespace

void validate(const Utterance& u, const CorpusHeader& h) {
  if (u.utt_id.empty()) throw DataError("utterance with empty utt_id");
  if (u.reference) check_tokens(u, "reference", *u.reference, h);
  if (u.pseudo_reference) check_tokens(u, "pseudo_reference", *u.pseudo_reference, h);
  if (u.nbest.empty()) fail(u, "nbest", "must be non-empty");
  for (std::size_t n = 0; n < u.nbest.size(); ++n) {
    const Hypothesis& hyp = u.nbest[n];
    const std::string field = "nbest[" + std::to_string(n) + "]";
    check_tokens(u, field + ".tokens", hyp.tokens, h);
    if (hyp.tokens.size() != hyp.features.size()) {
      fail(u, field, "|tokens| = " + std::to_string(hyp.tokens.size()) +
                         " but |features| = " + std::to_string(hyp.features.size()));
    }
    if (!std::isfinite(hyp.decode_score)) fail(u, field + ".decode_score", "not finite");
    for (std::size_t i = 0; i < hyp.features.size(); ++i) {
      const TokenFeatures& f = hyp.features[i];
      const std::string ff = field + ".features[" + std::to_string(i) + "]";
      if (!std::isfinite(f.log_posterior) || f.log_posterior > 0.0) {
        fail(u, ff + ".log_posterior", "must be finite and <= 0");
      }
      if (!std::isfinite(f.entropy) || f.entropy < 0.0) fail(u, ff + ".entropy", "must be finite and >= 0");
      if (f.topk.size() != static_cast<std::size_t>(h.topk)) fail(u, ff + ".topk", "length differs from header topk");
      for (std::size_t k = 0; k < f.topk.size(); ++k) {
        if (!std::isfinite(f.topk[k]) || f.topk[k] > 0.0) fail(u, ff + ".topk", "values must be finite and <= 0");
        if (k > 0 && f.topk[k] > f.topk[k - 1]) fail(u, ff + ".topk", "not sorted non-increasing");
      }
      if (f.topk.front() < f.log_posterior) fail(u, ff + ".topk", "topk[0] < log_posterior");
      if (f.extra.size() != static_cast<std::size_t>(h.extra_dims)) fail(u, ff + ".extra", "length differs from header extra_dims");
      for (double x : f.extra) {
        if (!std::isfinite(x)) fail(u, ff + ".extra", "not finite");
      }
      for (const auto* lm : {&f.lm_in, &f.lm_ood}) {
        if (*lm && (!std::isfinite(**lm) || **lm > 0.0)) fail(u, ff + ".lm", "log-probability must be finite and <= 0");
      }
      const auto& first = hyp.features.front();
      if (f.lm_in.has_value() != first.lm_in.has_value() ||
          f.lm_ood.has_value() != first.lm_ood.has_value()) {
        fail(u, ff, "lm columns must be present on all tokens or none");
      }
    }
    if (n > 0 && hyp.decode_score > u.nbest[n - 1].decode_score) {
      fail(u, "nbest", "not sorted by decode_score descending");
    }
  }
}

void sort_nbest(Utterance& utt) {
  std::stable_sort(utt.nbest.begin(), utt.nbest.end(),
                   [](const Hypothesis& a, const Hypothesis& b) {
                     return a.decode_score > b.decode_score;
                   });
}

// ---------------------------------------------------------------------------
// JSON mapping

json to_json(const CorpusHeader& h) {
  return json{{"format", "confkit-corpus"},
              {"version", h.version},
              {"vocab_size", h.vocab_size},
              {"topk", h.topk},
              {"extra_dims", h.extra_dims}};
}

json to_json(std::span<const Token> tokens) {
  json ids = json::array();
  json surfaces = json::array();
  json starts = json::array();
  for (const auto& t : tokens) {
    ids.push_back(t.id);
    surfaces.push_back(t.surface);
    starts.push_back(t.word_start);
  }
  return json{{"ids", ids}, {"surfaces", surfaces}, {"word_start", starts}};
}

namespace {

json features_to_json(const std::vector<TokenFeatures>& fs) {
  json lp = json::array(), ent = json::array(), topk = json::array(),
       extra = json::array(), lm_in = json::array(), lm_ood = json::array();
  bool has_in = !fs.empty() && fs.front().lm_in.has_value();
  bool has_ood = !fs.empty() && fs.front().lm_ood.has_value();
  for (const auto& f : fs) {
    lp.push_back(f.log_posterior);
    ent.push_back(f.entropy);
    topk.push_back(f.topk);
    extra.push_back(f.extra);
    if (has_in) lm_in.push_back(*f.lm_in);
    if (has_ood) lm_ood.push_back(*f.lm_ood);
  }
  json j{{"log_posterior", lp}, {"entropy", ent}, {"topk", topk}, {"extra", extra}};
  if (has_in) j["lm_in"] = lm_in;
  if (has_ood) j["lm_ood"] = lm_ood;
  return j;
}

// nlohmann stores "-0.0" and "1.0" as floats but whole numbers written by
// other tools may arrive as integers; accept both.
double as_double(const json& j) {
  if (!j.is_number()) throw DataError("expected a number");
  return j.get<double>();
}

std::vector<double> as_doubles(const json& j) {
  if (!j.is_array()) throw DataError("expected an array of numbers");
  std::vector<double> v;
  v.reserve(j.size());
  for (const auto& e : j) v.push_back(as_double(e));
  return v;
}

const json& need(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw DataError(std::string("missing field '") + key + "'");
  return *it;
}

std::vector<TokenFeatures> features_from_json(const json& j) {
  const auto lp = as_doubles(need(j, "log_posterior"));
  const auto ent = as_doubles(need(j, "entropy"));
  const json& topk = need(j, "topk");
  const json& extra = need(j, "extra");
  const std::size_t n = lp.size();
  if (ent.size() != n || topk.size() != n || extra.size() != n) {
    throw DataError("feature columns have different lengths");
  }
  std::vector<TokenFeatures> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].log_posterior = lp[i];
    out[i].entropy = ent[i];
    out[i].topk = as_doubles(topk[i]);
    out[i].extra = as_doubles(extra[i]);
  }
  for (const char* key : {"lm_in", "lm_ood"}) {
    auto it = j.find(key);
    if (it == j.end()) continue;
    const auto col = as_doubles(*it);
    if (col.size() != n) throw DataError(std::string(key) + " column length mismatch");
    for (std::size_t i = 0; i < n; ++i) {
      (std::string(key) == "lm_in" ? out[i].lm_in : out[i].lm_ood) = col[i];
    }
  }
  return out;
}

}  // namespace

TokenSeq tokens_from_json(const json& j) {
  const json& ids = need(j, "ids");
  const json& surfaces = need(j, "surfaces");
  const json& starts = need(j, "word_start");
  if (!ids.is_array() || ids.size() != surfaces.size() || ids.size() != starts.size()) {
    throw DataError("token columns have different lengths");
  }
  TokenSeq out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!ids[i].is_number_integer()) throw DataError("token id must be an integer");
    out[i].id = ids[i].get<int>();
    out[i].surface = surfaces[i].get<std::string>();
    out[i].word_start = starts[i].get<bool>();
  }
  return out;
}

json to_json(const Utterance& u) {
  json nbest = json::array();
  for (const auto& h : u.nbest) {
    nbest.push_back(json{{"decode_score", h.decode_score},
                         {"tokens", to_json(std::span<const Token>(h.tokens))},
                         {"features", features_to_json(h.features)}});
  }
  json j{{"utt_id", u.utt_id}, {"domain", u.domain_tag}, {"nbest", nbest}};
  if (u.reference) j["reference"] = to_json(std::span<const Token>(*u.reference));
  if (u.pseudo_reference) j["pseudo_reference"] = to_json(std::span<const Token>(*u.pseudo_reference));
  return j;
}

Utterance utterance_from_json(const json& j) {
  Utterance u;
  u.utt_id = need(j, "utt_id").get<std::string>();
  try {
    if (auto it = j.find("domain"); it != j.end()) u.domain_tag = it->get<std::string>();
    if (auto it = j.find("reference"); it != j.end()) u.reference = tokens_from_json(*it);
    if (auto it = j.find("pseudo_reference"); it != j.end()) u.pseudo_reference = tokens_from_json(*it);
    for (const auto& hj : need(j, "nbest")) {
      Hypothesis h;
      h.decode_score = as_double(need(hj, "decode_score"));
      h.tokens = tokens_from_json(need(hj, "tokens"));
      h.features = features_from_json(need(hj, "features"));
      u.nbest.push_back(std::move(h));
    }
  } catch (const DataError& e) {
    throw DataError("utterance '" + u.utt_id + "': " + e.what());
  } catch (const json::exception& e) {
    throw DataError("utterance '" + u.utt_id + "': " + e.what());
  }
  return u;
}

CorpusHeader header_from_json(const json& j) {
  CorpusHeader h;
  try {
    h.version = need(j, "version").get<int>();
    h.vocab_size = need(j, "vocab_size").get<int>();
    h.topk = need(j, "topk").get<int>();
    h.extra_dims = need(j, "extra_dims").get<int>();
  } catch (const json::exception& e) {
    throw DataError(std::string("header: ") + e.what());
  }
  validate_header(h);
  return h;
}

// ---------------------------------------------------------------------------
// Streaming I/O

CorpusReader::CorpusReader(const fs::path& path) : path_(path), in_(path) {
  if (!in_) throw DataError("cannot open corpus " + path.string());
  std::string line;
  if (!std::getline(in_, line)) throw DataError(path.string() + ": missing header line");
  line_no_ = 1;
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ":1: malformed header: " + e.what());
  }
  header_ = header_from_json(j);
}

std::optional<Utterance> CorpusReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(path_.string() + ":" + std::to_string(line_no_) +
                      ": malformed JSON: " + e.what());
    }
    Utterance u;
    try {
      u = utterance_from_json(j);
      validate(u, header_);
    } catch (const DataError& e) {
      throw DataError(path_.string() + ":" + std::to_string(line_no_) + ": " + e.what());
    }
    return u;
  }
  return std::nullopt;
}

Corpus read_corpus(const fs::path& path) {
  CorpusReader reader(path);
  Corpus c;
  c.header = reader.header();
  std::set<std::string> seen;
  while (auto u = reader.next()) {
    if (!seen.insert(u->utt_id).second) {
      throw DataError(path.string() + ": duplicate utt_id '" + u->utt_id + "'");
    }
    c.utterances.push_back(std::move(*u));
  }
  return c;
}

std::string corpus_to_string(const Corpus& corpus) {
  validate_header(corpus.header);
  std::string out = dump_json(to_json(corpus.header));
  out += '\n';
  for (const auto& u : corpus.utterances) {
    validate(u, corpus.header);
    out += dump_json(to_json(u));
    out += '\n';
  }
  return out;
}

void write_corpus(const Corpus& corpus, const fs::path& path) {
  write_file_atomic(path, corpus_to_string(corpus));
}

}  // namespace confkit
