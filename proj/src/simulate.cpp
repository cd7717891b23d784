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

#include "confkit/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>

#include "confkit/error.hpp"
#include "confkit/json_io.hpp"
#include "confkit/lm.hpp"

namespace confkit {

namespace fs = std::filesystem;

namespace {

constexpr double kMinMass = 1e-300;

void check_beta(const BetaParams& p, const char* name) {
  if (!(p.a > 0.0 && p.b > 0.0 && std::isfinite(p.a) && std::isfinite(p.b))) {
    throw DataError(std::string("error model: ") + name + " needs positive Beta parameters");
  }
}

std::vector<double> cumulative(const std::vector<double>& w) {
  std::vector<double> cdf(w.size());
  std::partial_sum(w.begin(), w.end(), cdf.begin());
  return cdf;
}

}  // namespace

void validate(const ErrorModel& em) {
  for (double p : {em.p_sub, em.p_ins, em.p_del}) {
    if (!(p >= 0.0 && p <= 1.0)) throw DataError("error model: probabilities must lie in [0, 1]");
  }
  if (em.p_sub + em.p_ins + em.p_del > 1.0 + 1e-12) {
    throw DataError("error model: p_sub + p_ins + p_del must be <= 1");
  }
  if (!(em.confusion_temperature > 0.0)) throw DataError("error model: confusion_temperature must be > 0");
  if (!(em.augmentation_strength >= 0.0)) throw DataError("error model: augmentation_strength must be >= 0");
  const FeatureParams& f = em.feature_params;
  check_beta(f.posterior_correct, "posterior_correct");
  check_beta(f.posterior_error, "posterior_error");
  check_beta(f.share_correct, "share_correct");
  check_beta(f.share_error, "share_error");
}

std::array<double, 4> effective_rates(const ErrorModel& em, double strength) {
  if (!(strength >= 0.0)) throw UsageError("strength must be >= 0");
  const double s = 1.0 + strength;
  double sub = em.p_sub * s;
  double ins = em.p_ins * s;
  double del = em.p_del * s;
  const double total = sub + ins + del;
  if (total > 1.0) {
    sub /= total;
    ins /= total;
    del /= total;
  }
  return {std::max(0.0, 1.0 - (sub + ins + del)), sub, ins, del};
}

void validate(const DomainSpec& d, int vocab_size) {
  if (d.name.empty()) throw DataError("domain: empty name");
  if (d.unigram.size() != static_cast<std::size_t>(vocab_size)) {
    throw DataError("domain '" + d.name + "': unigram has " + std::to_string(d.unigram.size()) +
                    " entries, vocab_size is " + std::to_string(vocab_size));
  }
  double sum = 0.0;
  for (double w : d.unigram) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DataError("domain '" + d.name + "': bad unigram weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw DataError("domain '" + d.name + "': unigram must sum to 1");
  if (d.length.min < 1 || d.length.max < d.length.min) {
    throw DataError("domain '" + d.name + "': need 1 <= length.min <= length.max");
  }
  if (!(d.word_start_prob >= 0.0 && d.word_start_prob <= 1.0)) {
    throw DataError("domain '" + d.name + "': word_start_prob must lie in [0, 1]");
  }
  validate(d.error_model);
}

std::vector<double> zipf_unigram(int vocab_size, double exponent, std::uint64_t seed) {
  if (vocab_size < 1) throw UsageError("zipf_unigram: vocab_size must be >= 1");
  std::vector<int> perm(static_cast<std::size_t>(vocab_size));
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  rng.shuffle(perm);
  std::vector<double> w(perm.size());
  double total = 0.0;
  for (std::size_t r = 0; r < perm.size(); ++r) {
    const double v = 1.0 / std::pow(static_cast<double>(r + 1), exponent);
    w[static_cast<std::size_t>(perm[r])] = v;
    total += v;
  }
  for (double& v : w) v /= total;
  return w;
}

std::string token_surface(int id) {
  if (id < 0) throw UsageError("token_surface: negative id");
  std::string s;
  do {
    s.insert(s.begin(), static_cast<char>('a' + id % 26));
    id /= 26;
  } while (id > 0);
  return s;
}

DomainSampler::DomainSampler(DomainSpec spec, CorpusHeader header)
    : spec_(std::move(spec)), header_(header) {
  validate_header(header_);
  if (header_.vocab_size < 2) throw DataError("simulator needs vocab_size >= 2");
  validate(spec_, header_.vocab_size);
  word_cdf_ = cumulative(spec_.unigram);
  std::vector<double> tempered(spec_.unigram.size());
  const double inv_t = 1.0 / spec_.error_model.confusion_temperature;
  for (std::size_t i = 0; i < tempered.size(); ++i) {
    tempered[i] = spec_.unigram[i] > 0.0 ? std::pow(spec_.unigram[i], inv_t) : 0.0;
  }
  confusion_cdf_ = cumulative(tempered);
}

int DomainSampler::draw(const std::vector<double>& cdf, Rng& rng) {
  const double u = rng.uniform() * cdf.back();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  const auto i = std::min<std::ptrdiff_t>(std::distance(cdf.begin(), it),
                                          static_cast<std::ptrdiff_t>(cdf.size()) - 1);
  return static_cast<int>(i);
}

int DomainSampler::sample_word(Rng& rng) const { return draw(word_cdf_, rng); }

int DomainSampler::sample_confusion(Rng& rng, int avoid) const {
  const double total = confusion_cdf_.back();
  double own = 0.0;
  if (avoid >= 0) {
    const auto a = static_cast<std::size_t>(avoid);
    own = confusion_cdf_[a] - (a > 0 ? confusion_cdf_[a - 1] : 0.0);
  }
  if (total - own <= total * 1e-12) {
    // All mass sits on `avoid`: fall back to a uniform choice among the rest.
    const auto k = static_cast<int>(rng.below(static_cast<std::uint64_t>(header_.vocab_size - 1)));
    return k >= avoid ? k + 1 : k;
  }
  for (;;) {
    const int id = draw(confusion_cdf_, rng);
    if (id != avoid) return id;
  }
}

TokenSeq DomainSampler::sample_sentence(Rng& rng) const {
  const auto span = static_cast<std::uint64_t>(spec_.length.max - spec_.length.min + 1);
  const int len = spec_.length.min + static_cast<int>(rng.below(span));
  TokenSeq out;
  out.reserve(static_cast<std::size_t>(len));
  for (int i = 0; i < len; ++i) {
    const int id = sample_word(rng);
    const bool start = i == 0 || rng.uniform() < spec_.word_start_prob;
    out.push_back(Token{id, token_surface(id), start});
  }
  return out;
}

TokenFeatures sample_features(const FeatureParams& fp, int topk, int extra_dims, bool correct,
                              bool after_deletion, Rng& rng) {
  const BetaParams& pp = correct ? fp.posterior_correct : fp.posterior_error;
  const BetaParams& qp = correct && !after_deletion ? fp.share_correct : fp.share_error;
  const double p = std::clamp(rng.beta(pp.a, pp.b), 1e-12, 1.0 - 1e-12);
  const double q = rng.beta(qp.a, qp.b);

  const auto K = static_cast<std::size_t>(topk);
  std::vector<double> mass(K + 1);
  mass[0] = p;
  if (K == 1) {
    mass[1] = 1.0 - p;
  } else {
    mass[1] = (1.0 - p) * q;
    double rest = (1.0 - p) * (1.0 - q);
    for (std::size_t j = 2; j < K; ++j) {
      mass[j] = rest * 0.5;
      rest -= mass[j];
    }
    mass[K] = rest;
  }
  for (double& m : mass) m = std::max(m, kMinMass);

  TokenFeatures f;
  f.log_posterior = std::log(p);
  double h = 0.0;
  for (double m : mass) h -= m * std::log(m);
  f.entropy = std::max(h, 0.0);
  std::vector<double> sorted = mass;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  for (std::size_t k = 0; k < K; ++k) f.topk.push_back(std::log(sorted[k]));

  const double sign = correct ? 0.5 : -0.5;
  for (int e = 0; e < extra_dims; ++e) {
    const auto ei = static_cast<std::size_t>(e);
    const double signal = ei < fp.extra_signal.size() ? fp.extra_signal[ei] : 0.0;
    f.extra.push_back(fp.extra_offset + signal * sign + rng.normal());
  }
  return f;
}

Hypothesis corrupt(const TokenSeq& ref, const DomainSampler& domain, double strength,
                   Rng& rng, CorruptionTrace* trace) {
  const auto rates = effective_rates(domain.spec().error_model, strength);
  const FeatureParams& fp = domain.spec().error_model.feature_params;
  const CorpusHeader& h = domain.header();

  Hypothesis hyp;
  bool pending_start = false;
  bool after_deletion = false;
  auto emit = [&](int id, bool word_start, bool correct) {
    hyp.tokens.push_back(Token{id, token_surface(id), word_start});
    hyp.features.push_back(sample_features(fp, h.topk, h.extra_dims, correct, after_deletion, rng));
    hyp.decode_score += hyp.features.back().log_posterior;
    if (trace) trace->token_correct.push_back(correct ? 1 : 0);
    after_deletion = false;
    pending_start = false;
  };

  for (const Token& t : ref) {
    if (t.word_start) pending_start = false;
    const std::size_t op = rng.categorical(rates);
    const bool start = t.word_start || pending_start;
    switch (op) {
      case 0:
        if (trace) ++trace->ok;
        emit(t.id, start, true);
        break;
      case 1:
        if (trace) ++trace->sub;
        emit(domain.sample_confusion(rng, t.id), start, false);
        break;
      case 2:
        if (trace) ++trace->ins;
        emit(t.id, start, true);
        emit(domain.sample_confusion(rng, -1), true, false);
        break;
      default:
        if (trace) ++trace->del;
        if (t.word_start) pending_start = true;
        after_deletion = true;
        break;
    }
  }
  if (!hyp.tokens.empty()) hyp.tokens.front().word_start = true;
  return hyp;
}

Utterance generate_nbest(const std::string& utt_id, const TokenSeq& ref, int n,
                         const DomainSampler& domain, double strength, std::uint64_t seed) {
  if (n < 1) throw UsageError("generate_nbest: n must be >= 1");
  const std::uint64_t base = Rng::hash(seed, utt_id);
  Utterance u;
  u.utt_id = utt_id;
  u.reference = ref;
  u.domain_tag = domain.spec().name;
  for (int j = 0; j < n; ++j) {
    Rng rng = Rng::derive(base, "hyp/" + std::to_string(j));
    u.nbest.push_back(corrupt(ref, domain, strength, rng));
  }
  sort_nbest(u);
  return u;
}

TokenSeq pseudo_reference(const std::string& utt_id, const TokenSeq& hidden_ref,
                          const DomainSampler& domain, std::uint64_t seed) {
  Rng rng = Rng::derive(Rng::hash(seed, utt_id), "pseudo");
  return corrupt(hidden_ref, domain, 0.0, rng).tokens;
}

void make_pseudo_references(Corpus& corpus, const std::map<std::string, TokenSeq>& hidden,
                            const DomainSampler& domain, std::uint64_t seed) {
  for (Utterance& u : corpus.utterances) {
    const auto it = hidden.find(u.utt_id);
    if (it == hidden.end()) throw DataError("no hidden reference for '" + u.utt_id + "'");
    u.pseudo_reference = pseudo_reference(u.utt_id, it->second, domain, seed);
  }
}

// ---------------------------------------------------------------------------
// Scenarios

namespace {

BetaParams beta_from_json(const json& j, BetaParams def) {
  if (j.is_array() && j.size() == 2) return {j[0].get<double>(), j[1].get<double>()};
  if (j.is_object()) return {j.value("a", def.a), j.value("b", def.b)};
  throw DataError("Beta parameters must be [a, b] or {a, b}");
}

json beta_to_json(const BetaParams& p) { return json::array({p.a, p.b}); }

ErrorModel error_model_from_json(const json& j) {
  ErrorModel em;
  em.p_sub = j.value("p_sub", 0.0);
  em.p_ins = j.value("p_ins", 0.0);
  em.p_del = j.value("p_del", 0.0);
  em.confusion_temperature = j.value("confusion_temperature", 1.0);
  em.augmentation_strength = j.value("augmentation_strength", 0.0);
  if (j.contains("feature_params")) {
    const json& f = j["feature_params"];
    FeatureParams& fp = em.feature_params;
    if (f.contains("posterior_correct")) fp.posterior_correct = beta_from_json(f["posterior_correct"], fp.posterior_correct);
    if (f.contains("posterior_error")) fp.posterior_error = beta_from_json(f["posterior_error"], fp.posterior_error);
    if (f.contains("share_correct")) fp.share_correct = beta_from_json(f["share_correct"], fp.share_correct);
    if (f.contains("share_error")) fp.share_error = beta_from_json(f["share_error"], fp.share_error);
    fp.extra_offset = f.value("extra_offset", 0.0);
    if (f.contains("extra_signal")) fp.extra_signal = f["extra_signal"].get<std::vector<double>>();
  }
  return em;
}

json to_json(const ErrorModel& em) {
  const FeatureParams& fp = em.feature_params;
  return json{{"p_sub", em.p_sub},
              {"p_ins", em.p_ins},
              {"p_del", em.p_del},
              {"confusion_temperature", em.confusion_temperature},
              {"augmentation_strength", em.augmentation_strength},
              {"feature_params",
               {{"posterior_correct", beta_to_json(fp.posterior_correct)},
                {"posterior_error", beta_to_json(fp.posterior_error)},
                {"share_correct", beta_to_json(fp.share_correct)},
                {"share_error", beta_to_json(fp.share_error)},
                {"extra_offset", fp.extra_offset},
                {"extra_signal", fp.extra_signal}}}};
}

ReferenceMode reference_mode(const std::string& s) {
  if (s == "gold") return ReferenceMode::kGold;
  if (s == "pseudo") return ReferenceMode::kPseudo;
  if (s == "hidden") return ReferenceMode::kHidden;
  throw DataError("reference must be gold, pseudo or hidden, got '" + s + "'");
}

std::string to_string(ReferenceMode m) {
  switch (m) {
    case ReferenceMode::kGold:
      return "gold";
    case ReferenceMode::kPseudo:
      return "pseudo";
    case ReferenceMode::kHidden:
      return "hidden";
  }
  return "gold";
}

const DomainSpec& find_domain(const Scenario& s, const std::string& name) {
  for (const auto& d : s.domains) {
    if (d.name == name) return d;
  }
  throw DataError("scenario: unknown domain '" + name + "'");
}

std::string utt_name(const std::string& corpus, int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06d", i);
  return corpus + "-" + buf;
}

}  // namespace

Scenario scenario_from_json(const json& j) {
  Scenario s;
  try {
    s.seed = j.value("seed", std::uint64_t{0});
    s.header.vocab_size = j.at("vocab_size").get<int>();
    s.header.topk = j.value("topk", 4);
    s.header.extra_dims = j.value("extra_dims", 0);
    validate_header(s.header);
    const int default_n = j.value("n", 8);
    for (const json& dj : j.at("domains")) {
      DomainSpec d;
      d.name = dj.at("name").get<std::string>();
      const json& uj = dj.at("unigram");
      if (uj.is_array()) {
        d.unigram = uj.get<std::vector<double>>();
        const double sum = std::accumulate(d.unigram.begin(), d.unigram.end(), 0.0);
        if (!(sum > 0.0)) throw DataError("domain '" + d.name + "': unigram weights sum to 0");
        for (double& w : d.unigram) w /= sum;
      } else {
        const std::uint64_t perm_seed = uj.contains("permutation_seed")
                                            ? uj["permutation_seed"].get<std::uint64_t>()
                                            : Rng::hash(s.seed, "unigram/" + d.name);
        d.unigram = zipf_unigram(s.header.vocab_size, uj.value("zipf", 1.0), perm_seed);
      }
      if (dj.contains("length")) {
        d.length.min = dj["length"].value("min", d.length.min);
        d.length.max = dj["length"].value("max", d.length.max);
      }
      d.word_start_prob = dj.value("word_start_prob", d.word_start_prob);
      if (dj.contains("error_model")) d.error_model = error_model_from_json(dj["error_model"]);
      validate(d, s.header.vocab_size);
      s.domains.push_back(std::move(d));
    }
    if (j.contains("corpora")) {
      for (const json& cj : j["corpora"]) {
        CorpusSpec c;
        c.name = cj.at("name").get<std::string>();
        c.domain = cj.at("domain").get<std::string>();
        c.utterances = cj.at("utterances").get<int>();
        c.n = cj.value("n", default_n);
        if (cj.contains("strength")) c.strength = cj["strength"].get<double>();
        c.reference = reference_mode(cj.value("reference", std::string("gold")));
        if (c.utterances < 0 || c.n < 1) throw DataError("corpus '" + c.name + "': bad size");
        find_domain(s, c.domain);
        s.corpora.push_back(std::move(c));
      }
    }
    if (j.contains("texts")) {
      for (const json& tj : j["texts"]) {
        TextSpec t{tj.at("name").get<std::string>(), tj.at("domain").get<std::string>(),
                   tj.at("sentences").get<int>()};
        if (t.sentences < 0) throw DataError("text '" + t.name + "': bad size");
        find_domain(s, t.domain);
        s.texts.push_back(std::move(t));
      }
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("scenario: ") + e.what());
  }
  return s;
}

json to_json(const Scenario& s) {
  json domains = json::array();
  for (const auto& d : s.domains) {
    domains.push_back(json{{"name", d.name},
                           {"unigram", d.unigram},
                           {"length", {{"min", d.length.min}, {"max", d.length.max}}},
                           {"word_start_prob", d.word_start_prob},
                           {"error_model", to_json(d.error_model)}});
  }
  json corpora = json::array();
  for (const auto& c : s.corpora) {
    json cj{{"name", c.name}, {"domain", c.domain}, {"utterances", c.utterances},
            {"n", c.n},       {"reference", to_string(c.reference)}};
    if (c.strength) cj["strength"] = *c.strength;
    corpora.push_back(cj);
  }
  json texts = json::array();
  for (const auto& t : s.texts) texts.push_back(json{{"name", t.name}, {"domain", t.domain}, {"sentences", t.sentences}});
  return json{{"seed", s.seed},
              {"vocab_size", s.header.vocab_size},
              {"topk", s.header.topk},
              {"extra_dims", s.header.extra_dims},
              {"domains", domains},
              {"corpora", corpora},
              {"texts", texts}};
}

GeneratedCorpus generate_corpus(const Scenario& s, const CorpusSpec& c) {
  const DomainSampler domain(find_domain(s, c.domain), s.header);
  const double strength = c.strength.value_or(domain.spec().error_model.augmentation_strength);
  GeneratedCorpus out;
  out.corpus.header = s.header;
  for (int i = 0; i < c.utterances; ++i) {
    const std::string id = utt_name(c.name, i);
    Rng ref_rng = Rng::derive(Rng::hash(s.seed, id), "ref");
    const TokenSeq ref = domain.sample_sentence(ref_rng);
    Utterance u = generate_nbest(id, ref, c.n, domain, strength, s.seed);
    if (c.reference != ReferenceMode::kGold) {
      u.reference.reset();
      out.truth[id] = ref;
      if (c.reference == ReferenceMode::kPseudo) u.pseudo_reference = pseudo_reference(id, ref, domain, s.seed);
    }
    out.corpus.utterances.push_back(std::move(u));
  }
  return out;
}

std::vector<std::vector<int>> generate_text(const Scenario& s, const TextSpec& t) {
  const DomainSampler domain(find_domain(s, t.domain), s.header);
  std::vector<std::vector<int>> out;
  out.reserve(static_cast<std::size_t>(t.sentences));
  for (int i = 0; i < t.sentences; ++i) {
    Rng rng = Rng::derive(s.seed, "text/" + t.name + "/" + std::to_string(i));
    out.push_back(ids_of(domain.sample_sentence(rng)));
  }
  return out;
}

void write_truth(const std::map<std::string, TokenSeq>& truth, const fs::path& path) {
  std::string out;
  for (const auto& [id, ref] : truth) {
    out += dump_json(json{{"utt_id", id}, {"reference", to_json(std::span<const Token>(ref))}});
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::map<std::string, TokenSeq> read_truth(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::map<std::string, TokenSeq> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      out[j.at("utt_id").get<std::string>()] = tokens_from_json(j.at("reference"));
    } catch (const std::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<fs::path> run_scenario(const Scenario& s, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  for (const auto& c : s.corpora) {
    GeneratedCorpus g = generate_corpus(s, c);
    const fs::path p = out_dir / (c.name + ".jsonl");
    write_corpus(g.corpus, p);
    written.push_back(p);
    if (c.reference != ReferenceMode::kGold) {
      const fs::path tp = out_dir / (c.name + ".truth.jsonl");
      write_truth(g.truth, tp);
      written.push_back(tp);
    }
  }
  for (const auto& t : s.texts) {
    const fs::path p = out_dir / (t.name + ".txt");
    write_text_corpus(generate_text(s, t), p);
    written.push_back(p);
  }
  return written;
}

}  // namespace confkit
