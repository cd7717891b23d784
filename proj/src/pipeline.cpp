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

#include "confkit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "confkit/align.hpp"
#include "confkit/error.hpp"

namespace confkit {

namespace fs = std::filesystem;

namespace {

const char* const kTestRoles[] = {"test", "ood_test"};
const char* const kCorpusRoles[] = {"train", "dev", "test", "ood_unlabeled", "ood_dev", "ood_test"};
const char* const kTextRoles[] = {"in_text", "ood_text"};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Labels and scores

const TokenSeq* pick_reference(const Utterance& u, RefSource src) {
  switch (src) {
    case RefSource::kGold:
      return u.reference ? &*u.reference : nullptr;
    case RefSource::kPseudo:
      return u.pseudo_reference ? &*u.pseudo_reference : nullptr;
    case RefSource::kGoldOrPseudo:
      if (u.reference) return &*u.reference;
      return u.pseudo_reference ? &*u.pseudo_reference : nullptr;
  }
  return nullptr;
}

namespace {

const TokenSeq& need_reference(const Utterance& u, RefSource src) {
  const TokenSeq* ref = pick_reference(u, src);
  if (ref == nullptr) {
    throw DataError("utterance '" + u.utt_id + "': " +
                    (src == RefSource::kPseudo ? "pseudo_reference" : "reference") + " missing");
  }
  return *ref;
}

}  // namespace

std::vector<TrainItem> make_train_items(const Corpus& corpus, const FeatureSchema& schema,
                                        const NGramModel* lm_in, const NGramModel* lm_ood,
                                        RefSource src) {
  std::vector<TrainItem> items;
  for (const Utterance& u : corpus.utterances) {
    const TokenSeq& ref = need_reference(u, src);
    for (const Hypothesis& h : u.nbest) {
      const LabeledHypothesis lh = label_hypothesis(h, ref);
      items.push_back(TrainItem{assemble(h, lm_in, lm_ood, schema), lh.token_labels, lh.utterance_label});
    }
  }
  return items;
}

void standardize_items(std::vector<TrainItem>& items, const FeatureStats& stats) {
  for (TrainItem& it : items) it.features = standardize(stats, it.features);
}

json to_json(const ScoreFile& f) {
  json items = json::array();
  for (const auto& it : f.items) items.push_back(json{{"utt_id", it.utt_id}, {"scores", it.scores}});
  return json{{"kind", f.kind}, {"level", f.level}, {"items", items}};
}

ScoreFile score_file_from_json(const json& j) {
  ScoreFile f;
  try {
    f.kind = j.at("kind").get<std::string>();
    f.level = j.at("level").get<std::string>();
    for (const json& it : j.at("items")) {
      f.items.push_back(UttScores{it.at("utt_id").get<std::string>(), it.at("scores").get<std::vector<double>>()});
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("scores: ") + e.what());
  }
  if (f.level != "word" && f.level != "utterance") throw DataError("scores: level must be word or utterance");
  return f;
}

ScoreFile score_corpus(const ConfidenceModel& model, const Corpus& corpus,
                       const NGramModel* lm_in, const NGramModel* lm_ood) {
  ScoreFile f;
  f.kind = to_string(model.kind());
  f.level = model.kind() == ModelKind::kCem ? "word" : "utterance";
  // LMs the schema has no column for are simply not used.
  const NGramModel* in = model.schema.lm_in ? lm_in : nullptr;
  const NGramModel* ood = model.schema.lm_ood ? lm_ood : nullptr;
  for (const Utterance& u : corpus.utterances) {
    const Hypothesis& h = u.nbest.front();
    const FeatureMatrix m = standardize(model.stats, assemble(h, in, ood, model.schema));
    UttScores s{u.utt_id, {}};
    if (model.kind() == ModelKind::kCem) {
      std::vector<bool> starts;
      for (const Token& t : h.tokens) starts.push_back(t.word_start);
      s.scores = word_confidence(forward_cem(model, m), starts);
    } else {
      s.scores = {forward_rebm(model, m)};
    }
    f.items.push_back(std::move(s));
  }
  return f;
}

ScoreFile softmax_scores(const Corpus& corpus, const std::string& level) {
  if (level != "word" && level != "utterance") throw UsageError("softmax_scores: level must be word or utterance");
  ScoreFile f{"softmax", level, {}};
  for (const Utterance& u : corpus.utterances) {
    const Hypothesis& h = u.nbest.front();
    UttScores s{u.utt_id, {}};
    if (level == "word") {
      std::vector<double> tok;
      std::vector<bool> starts;
      for (std::size_t i = 0; i < h.tokens.size(); ++i) {
        tok.push_back(std::exp(h.features[i].log_posterior));
        starts.push_back(h.tokens[i].word_start);
      }
      s.scores = word_confidence(tok, starts);
    } else if (h.tokens.empty()) {
      s.scores = {0.0};
    } else {
      double sum = 0.0;
      for (const auto& tf : h.features) sum += tf.log_posterior;
      s.scores = {std::exp(sum / static_cast<double>(h.features.size()))};
    }
    f.items.push_back(std::move(s));
  }
  return f;
}

ScoredSet join_labels(const ScoreFile& scores, const Corpus& corpus, RefSource src) {
  std::map<std::string, const Utterance*> by_id;
  for (const Utterance& u : corpus.utterances) by_id[u.utt_id] = &u;
  ScoredSet out;
  for (const UttScores& s : scores.items) {
    const auto it = by_id.find(s.utt_id);
    if (it == by_id.end()) throw DataError("scores: utterance '" + s.utt_id + "' not in corpus");
    const Utterance& u = *it->second;
    const LabeledHypothesis lh = label_hypothesis(u.nbest.front(), need_reference(u, src));
    if (scores.level == "word") {
      if (lh.word_labels.size() != s.scores.size()) {
        throw DataError("scores: utterance '" + s.utt_id + "' has " + std::to_string(s.scores.size()) +
                        " word scores but " + std::to_string(lh.word_labels.size()) + " words");
      }
      out.scores.insert(out.scores.end(), s.scores.begin(), s.scores.end());
      out.labels.insert(out.labels.end(), lh.word_labels.begin(), lh.word_labels.end());
    } else {
      if (s.scores.size() != 1) throw DataError("scores: utterance '" + s.utt_id + "' needs one score");
      out.scores.push_back(s.scores.front());
      out.labels.push_back(lh.utterance_label);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Baseline

json to_json(const LevelReports& r) {
  return json{{"word", to_json(r.word)}, {"utterance", to_json(r.utterance)}};
}

LevelReports run_baseline_softmax(const Corpus& corpus, int ece_bins) {
  for (const Utterance& u : corpus.utterances) {
    if (!u.reference) throw DataError("baseline needs a labelled corpus; '" + u.utt_id + "' has no reference");
  }
  LevelReports r;
  r.word = compute_report(join_labels(softmax_scores(corpus, "word"), corpus), ece_bins);
  r.utterance = compute_report(join_labels(softmax_scores(corpus, "utterance"), corpus), ece_bins);
  return r;
}

// ---------------------------------------------------------------------------
// Plan

namespace {

ModelSpec model_spec_from_json(const json& j, ModelSpec def) {
  def.hidden = j.value("hidden", def.hidden);
  def.layers = j.value("layers", def.layers);
  if (j.contains("train")) def.train = train_config_from_json(j["train"], def.train);
  return def;
}

json to_json(const ModelSpec& m) {
  return json{{"hidden", m.hidden}, {"layers", m.layers}, {"train", to_json(m.train)}};
}

bool is_text_role(const std::string& role) {
  return std::find(std::begin(kTextRoles), std::end(kTextRoles), role) != std::end(kTextRoles);
}

}  // namespace

ExperimentPlan plan_from_json(const json& j, const fs::path& base_dir) {
  ExperimentPlan p;
  p.base_dir = base_dir;
  try {
    p.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("scenario")) {
      const json& sj = j["scenario"];
      p.scenario = scenario_from_json(sj.is_string() ? parse_json_file(base_dir / sj.get<std::string>()) : sj);
    }
    for (const auto& [role, v] : j.at("corpora").items()) p.corpora[role] = v.get<std::string>();
    p.lm_order = j.value("lm_order", p.lm_order);
    if (j.contains("cem")) p.cem = model_spec_from_json(j["cem"], p.cem);
    if (j.contains("rebm")) p.rebm = model_spec_from_json(j["rebm"], p.rebm);
    if (j.contains("grid")) {
      p.grid.clear();
      for (const json& g : j["grid"]) {
        p.grid.emplace_back(g.at("use_pseudo").get<bool>(), g.at("use_ood_lm").get<bool>());
      }
    }
    p.ece_bins = j.value("ece_bins", p.ece_bins);
    p.pwlm_segments = j.value("pwlm_segments", p.pwlm_segments);
    p.pwlm_bins = j.value("pwlm_bins", p.pwlm_bins);
    p.select_k = j.value("select_k", p.select_k);
  } catch (const json::exception& e) {
    throw DataError(std::string("plan: ") + e.what());
  }
  validate(p);
  return p;
}

json to_json(const ExperimentPlan& p) {
  json grid = json::array();
  for (const auto& [ps, lm] : p.grid) grid.push_back(json{{"use_pseudo", ps}, {"use_ood_lm", lm}});
  json j{{"seed", p.seed},         {"corpora", p.corpora},
         {"lm_order", p.lm_order}, {"cem", to_json(p.cem)},
         {"rebm", to_json(p.rebm)}, {"grid", grid},
         {"ece_bins", p.ece_bins}, {"pwlm_segments", p.pwlm_segments},
         {"pwlm_bins", p.pwlm_bins}, {"select_k", p.select_k}};
  if (p.scenario) j["scenario"] = to_json(*p.scenario);
  return j;
}

void validate(const ExperimentPlan& p) {
  for (const auto& [role, v] : p.corpora) {
    const bool known = is_text_role(role) ||
                       std::find(std::begin(kCorpusRoles), std::end(kCorpusRoles), role) != std::end(kCorpusRoles);
    if (!known) throw DataError("plan: unknown corpus role '" + role + "'");
  }
  if (!p.corpora.count("train")) throw DataError("plan: corpora.train is required");
  if (!p.corpora.count("test") && !p.corpora.count("ood_test")) {
    throw DataError("plan: need corpora.test or corpora.ood_test");
  }
  if (p.grid.empty()) throw DataError("plan: empty grid");
  for (const auto& [ps, lm] : p.grid) {
    if (ps && !p.corpora.count("ood_unlabeled")) throw DataError("plan: use_pseudo requires corpora.ood_unlabeled");
    if (lm && !p.corpora.count("ood_text")) throw DataError("plan: use_ood_lm requires corpora.ood_text");
  }
  if (p.lm_order < 1) throw DataError("plan: lm_order must be >= 1");
  if (p.cem.hidden < 1 || p.cem.layers < 1 || p.rebm.hidden < 1 || p.rebm.layers < 1) {
    throw DataError("plan: model dimensions must be positive");
  }
  if (p.select_k < 1) throw DataError("plan: select_k must be >= 1");
}

// ---------------------------------------------------------------------------
// Grid

std::string cell_name(bool use_pseudo, bool use_ood_lm) {
  return std::string("pseudo") + (use_pseudo ? "1" : "0") + "_lm" + (use_ood_lm ? "1" : "0");
}

namespace {

struct Inputs {
  std::map<std::string, Corpus> corpora;
  std::map<std::string, std::vector<std::vector<int>>> texts;
};

Inputs load_inputs(const ExperimentPlan& plan) {
  Inputs in;
  for (const auto& [role, v] : plan.corpora) {
    if (plan.scenario) {
      const Scenario& s = *plan.scenario;
      if (is_text_role(role)) {
        const auto it = std::find_if(s.texts.begin(), s.texts.end(), [&](const TextSpec& t) { return t.name == v; });
        if (it == s.texts.end()) throw DataError("plan: scenario has no text '" + v + "'");
        in.texts[role] = generate_text(s, *it);
      } else {
        const auto it = std::find_if(s.corpora.begin(), s.corpora.end(), [&](const CorpusSpec& c) { return c.name == v; });
        if (it == s.corpora.end()) throw DataError("plan: scenario has no corpus '" + v + "'");
        in.corpora[role] = generate_corpus(s, *it).corpus;
      }
    } else {
      const fs::path path = fs::path(v).is_absolute() ? fs::path(v) : plan.base_dir / v;
      if (is_text_role(role)) {
        in.texts[role] = read_text_corpus(path);
      } else {
        in.corpora[role] = read_corpus(path);
      }
    }
  }
  return in;
}

std::vector<FeatureMatrix> matrices_of(const std::vector<TrainItem>& items) {
  std::vector<FeatureMatrix> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back(it.features);
  return out;
}

EvalResult evaluate(const ConfidenceModel& cem, const ConfidenceModel& rebm, const Corpus& test,
                    const Corpus* dev, const NGramModel* lm_in, const NGramModel* lm_ood,
                    const ExperimentPlan& plan) {
  EvalResult r;
  const ScoredSet word = join_labels(score_corpus(cem, test, lm_in, lm_ood), test);
  r.word = compute_report(word, plan.ece_bins);
  r.word_reliability = reliability_bins(word, plan.ece_bins);
  if (dev != nullptr) {
    const ScoredSet dev_word = join_labels(score_corpus(cem, *dev, lm_in, lm_ood), *dev);
    r.pwlm = fit_pwlm(dev_word, plan.pwlm_segments, plan.pwlm_bins);
    ScoredSet cal = word;
    cal.scores = apply_pwlm(*r.pwlm, word.scores);
    r.word_calibrated = compute_report(cal, plan.ece_bins);
    r.word_reliability_calibrated = reliability_bins(cal, plan.ece_bins);
  }
  const ScoreFile utt_scores = score_corpus(rebm, test, lm_in, lm_ood);
  r.utterance = compute_report(join_labels(utt_scores, test), plan.ece_bins);

  std::vector<ScoredUtterance> su;
  for (std::size_t i = 0; i < test.utterances.size(); ++i) {
    const Utterance& u = test.utterances[i];
    su.push_back(ScoredUtterance{u.utt_id, utt_scores.items[i].scores.front(), u.nbest.front().tokens, *u.reference});
  }
  r.selection = select_extremes(su, plan.select_k);
  return r;
}

}  // namespace

AblationResult run_ablation(const ExperimentPlan& plan, const LogFn& log) {
  validate(plan);
  auto note = [&](const std::string& msg, const json& fields) {
    if (log) log(msg, fields);
  };
  const Inputs in = load_inputs(plan);
  const Corpus& train_corpus = in.corpora.at("train");
  const CorpusHeader& header = train_corpus.header;
  for (const auto& [role, c] : in.corpora) {
    if (!(c.header == header)) throw DataError("plan: corpus '" + role + "' header differs from train");
  }

  std::optional<NGramModel> lm_in;
  std::optional<NGramModel> lm_ood;
  if (in.texts.count("in_text")) lm_in = train_ngram(in.texts.at("in_text"), plan.lm_order);
  if (in.texts.count("ood_text")) lm_ood = train_ngram(in.texts.at("ood_text"), plan.lm_order);
  note("lms", json{{"lm_in", lm_in.has_value()}, {"lm_ood", lm_ood.has_value()}});

  AblationResult result;
  for (const char* role : kTestRoles) {
    if (!in.corpora.count(role)) continue;
    result.baseline[role] = run_baseline_softmax(in.corpora.at(role), plan.ece_bins);
    const Corpus& test = in.corpora.at(role);
    std::vector<ScoredUtterance> oracle;
    for (const Utterance& u : test.utterances) {
      const int label = label_hypothesis(u.nbest.front(), *u.reference).utterance_label;
      oracle.push_back(ScoredUtterance{u.utt_id, static_cast<double>(label), u.nbest.front().tokens, *u.reference});
    }
    result.oracle_selection[role] = select_extremes(oracle, plan.select_k);
  }

  // Shared across cells so that cells differ only by their toggles.
  const std::uint64_t cem_init = Rng::hash(plan.seed, "init/cem");
  const std::uint64_t rebm_init = Rng::hash(plan.seed, "init/rebm");
  TrainConfig cem_cfg = plan.cem.train;
  TrainConfig rebm_cfg = plan.rebm.train;
  cem_cfg.seed = Rng::hash(plan.seed, "train/cem");
  rebm_cfg.seed = Rng::hash(plan.seed, "train/rebm");

  for (const auto& [use_pseudo, use_ood_lm] : plan.grid) {
    CellResult cell;
    cell.use_pseudo = use_pseudo;
    cell.use_ood_lm = use_ood_lm;
    cell.schema = FeatureSchema::from_header(header, lm_in.has_value(), use_ood_lm);
    const NGramModel* lin = lm_in ? &*lm_in : nullptr;
    const NGramModel* lood = use_ood_lm ? &*lm_ood : nullptr;

    std::vector<TrainItem> in_items = make_train_items(train_corpus, cell.schema, lin, lood, RefSource::kGold);
    std::vector<TrainItem> ood_items;
    if (use_pseudo) {
      ood_items = make_train_items(in.corpora.at("ood_unlabeled"), cell.schema, lin, lood, RefSource::kPseudo);
    }
    // Statistics come from the in-domain training data only.
    const FeatureStats stats = compute_stats(matrices_of(in_items));
    standardize_items(in_items, stats);
    standardize_items(ood_items, stats);

    const int width = cell.schema.width();
    cell.cem = ConfidenceModel(ModelKind::kCem, width, plan.cem.hidden, plan.cem.layers);
    cell.cem.init_params(cem_init);
    cell.cem.schema = cell.schema;
    cell.cem.stats = stats;
    cell.cem_train = train(cell.cem, in_items, ood_items, cem_cfg);
    note("trained", json{{"cell", cell_name(use_pseudo, use_ood_lm)}, {"model", "cem"},
                         {"epoch_loss", cell.cem_train.epoch_loss}});

    cell.rebm = ConfidenceModel(ModelKind::kRebm, width, plan.rebm.hidden, plan.rebm.layers);
    cell.rebm.init_params(rebm_init);
    cell.rebm.schema = cell.schema;
    cell.rebm.stats = stats;
    cell.rebm_train = train(cell.rebm, in_items, ood_items, rebm_cfg);
    note("trained", json{{"cell", cell_name(use_pseudo, use_ood_lm)}, {"model", "rebm"},
                         {"epoch_loss", cell.rebm_train.epoch_loss}});

    for (const char* role : kTestRoles) {
      if (!in.corpora.count(role)) continue;
      const std::string dev_role = std::string(role) == "test" ? "dev" : "ood_dev";
      const Corpus* dev = in.corpora.count(dev_role) ? &in.corpora.at(dev_role) : nullptr;
      cell.evals[role] = evaluate(cell.cem, cell.rebm, in.corpora.at(role), dev, lin, lood, plan);
    }
    result.cells.push_back(std::move(cell));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Reporting

namespace {

json bins_to_json(const std::vector<ReliabilityBin>& bins) {
  json out = json::array();
  for (const auto& b : bins) {
    out.push_back(json{{"lo", b.lo}, {"hi", b.hi}, {"count", b.count},
                       {"mean_confidence", b.mean_confidence}, {"accuracy", b.accuracy}});
  }
  return out;
}

json train_report_json(const TrainReport& t) {
  return json{{"initial_loss", t.initial_loss}, {"epoch_loss", t.epoch_loss},
              {"in_domain_draws", t.in_domain_draws}, {"ood_draws", t.ood_draws},
              {"batches", t.batches}, {"ood_per_batch", t.ood_per_batch}};
}

json eval_json(const EvalResult& e) {
  json j{{"word", to_json(e.word)}, {"utterance", to_json(e.utterance)},
         {"word_reliability", bins_to_json(e.word_reliability)}};
  if (e.word_calibrated) {
    j["word_calibrated"] = to_json(*e.word_calibrated);
    j["pwlm"] = to_json(*e.pwlm);
    j["word_reliability_calibrated"] = bins_to_json(e.word_reliability_calibrated);
  }
  if (e.selection) j["selection"] = to_json(*e.selection);
  return j;
}

std::string cell(const std::optional<double>& v) { return v ? fmt("%.4f", *v) : std::string("n/a"); }

}  // namespace

json to_json(const CellResult& c) {
  json evals = json::object();
  for (const auto& [role, e] : c.evals) evals[role] = eval_json(e);
  return json{{"cell", cell_name(c.use_pseudo, c.use_ood_lm)},
              {"use_pseudo", c.use_pseudo},
              {"use_ood_lm", c.use_ood_lm},
              {"schema", to_json(c.schema)},
              {"train", {{"cem", train_report_json(c.cem_train)}, {"rebm", train_report_json(c.rebm_train)}}},
              {"evals", evals}};
}

json to_json(const AblationResult& r) {
  json baseline = json::object();
  for (const auto& [role, b] : r.baseline) baseline[role] = to_json(b);
  json oracle = json::object();
  for (const auto& [role, s] : r.oracle_selection) oracle[role] = to_json(s);
  json cells = json::array();
  for (const auto& c : r.cells) cells.push_back(to_json(c));
  return json{{"baseline", baseline}, {"oracle_selection", oracle}, {"cells", cells}};
}

std::string render_summary(const AblationResult& r) {
  std::string out = "# Ablation summary\n\n";
  for (const char* role : kTestRoles) {
    if (!r.baseline.count(role)) continue;
    out += std::string("## ") + (std::string(role) == "test" ? "In-domain test" : "OOD test") + "\n\n";
    out += "| system | pseudo | LM | word AUC | word EER | word NCE | word ECE | word ECE (PWLM) | utt AUC | utt EER |\n";
    out += "|---|---|---|---|---|---|---|---|---|---|\n";
    const LevelReports& b = r.baseline.at(role);
    out += "| softmax | - | - | " + cell(b.word.auc) + " | " + cell(b.word.eer) + " | " + cell(b.word.nce) + " | " +
           cell(b.word.ece) + " | n/a | " + cell(b.utterance.auc) + " | " + cell(b.utterance.eer) + " |\n";
    for (const auto& c : r.cells) {
      const auto it = c.evals.find(role);
      if (it == c.evals.end()) continue;
      const EvalResult& e = it->second;
      out += std::string("| CEM / R-EBM | ") + (c.use_pseudo ? "yes" : "no") + " | " + (c.use_ood_lm ? "yes" : "no") +
             " | " + cell(e.word.auc) + " | " + cell(e.word.eer) + " | " + cell(e.word.nce) + " | " +
             cell(e.word.ece) + " | " + (e.word_calibrated ? cell(e.word_calibrated->ece) : "n/a") + " | " +
             cell(e.utterance.auc) + " | " + cell(e.utterance.eer) + " |\n";
    }
    out += "\n";
    out += "| selection | k | bottom SER | top SER |\n|---|---|---|---|\n";
    if (r.oracle_selection.count(role)) {
      const SelectionReport& s = r.oracle_selection.at(role);
      out += "| oracle | " + std::to_string(s.k) + " | " + fmt("%.4f", s.bottom_ser) + " | " + fmt("%.4f", s.top_ser) + " |\n";
    }
    for (const auto& c : r.cells) {
      const auto it = c.evals.find(role);
      if (it == c.evals.end() || !it->second.selection) continue;
      const SelectionReport& s = *it->second.selection;
      out += "| R-EBM " + cell_name(c.use_pseudo, c.use_ood_lm) + " | " + std::to_string(s.k) + " | " +
             fmt("%.4f", s.bottom_ser) + " | " + fmt("%.4f", s.top_ser) + " |\n";
    }
    out += "\n";
  }
  out += "Reliability diagrams: `reliability_<cell>_<test>.svg`.\n";
  return out;
}

std::string reliability_svg(const std::vector<ReliabilityBin>& bins, const std::string& title) {
  const double size = 320.0;
  const double pad = 40.0;
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"400\" height=\"400\" viewBox=\"0 0 400 400\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"400\" height=\"400\" fill=\"white\"/>\n";
  s += "<text x=\"200\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" + title + "</text>\n";
  s += "<rect x=\"40\" y=\"40\" width=\"320\" height=\"320\" fill=\"none\" stroke=\"black\"/>\n";
  s += "<line x1=\"40\" y1=\"360\" x2=\"360\" y2=\"40\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n";
  for (const auto& b : bins) {
    if (b.count == 0) continue;
    const double x = pad + b.lo * size;
    const double w = (b.hi - b.lo) * size;
    const double h = b.accuracy * size;
    s += "<rect x=\"" + fmt("%.3f", x) + "\" y=\"" + fmt("%.3f", pad + size - h) + "\" width=\"" + fmt("%.3f", w) +
         "\" height=\"" + fmt("%.3f", h) + "\" fill=\"steelblue\" fill-opacity=\"0.7\" stroke=\"white\"/>\n";
    s += "<circle cx=\"" + fmt("%.3f", pad + b.mean_confidence * size) + "\" cy=\"" +
         fmt("%.3f", pad + size - b.accuracy * size) + "\" r=\"2\" fill=\"darkred\"/>\n";
  }
  s += "<text x=\"200\" y=\"390\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">confidence</text>\n";
  s += "<text x=\"14\" y=\"200\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
       "transform=\"rotate(-90 14 200)\">accuracy</text>\n";
  s += "</svg>\n";
  return s;
}

std::vector<fs::path> write_results(const AblationResult& r, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  auto put = [&](const fs::path& p, const std::string& text) {
    write_file_atomic(p, text);
    written.push_back(p);
  };
  json baseline = json::object();
  for (const auto& [role, b] : r.baseline) baseline[role] = to_json(b);
  json oracle = json::object();
  for (const auto& [role, s] : r.oracle_selection) oracle[role] = to_json(s);
  put(out_dir / "baseline.json", dump_json_pretty(json{{"baseline", baseline}, {"oracle_selection", oracle}}) + "\n");
  for (const auto& c : r.cells) {
    const std::string name = cell_name(c.use_pseudo, c.use_ood_lm);
    put(out_dir / ("cell_" + name + ".json"), dump_json_pretty(to_json(c)) + "\n");
    put(out_dir / ("model_" + name + "_cem.json"), dump_json(to_json(c.cem)) + "\n");
    put(out_dir / ("model_" + name + "_rebm.json"), dump_json(to_json(c.rebm)) + "\n");
    for (const auto& [role, e] : c.evals) {
      put(out_dir / ("reliability_" + name + "_" + role + ".svg"),
          reliability_svg(e.word_reliability, "word reliability, " + name + ", " + role));
      if (e.word_calibrated) {
        put(out_dir / ("reliability_" + name + "_" + role + "_pwlm.svg"),
            reliability_svg(e.word_reliability_calibrated, "word reliability after PWLM, " + name + ", " + role));
      }
    }
  }
  put(out_dir / "grid.json", dump_json_pretty(to_json(r)) + "\n");
  put(out_dir / "summary.md", render_summary(r));
  return written;
}

}  // namespace confkit
