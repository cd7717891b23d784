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

#include "confkit/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "confkit/align.hpp"
#include "confkit/calibrate.hpp"
#include "confkit/confidence_net.hpp"
#include "confkit/error.hpp"
#include "confkit/json_io.hpp"
#include "confkit/lm.hpp"
#include "confkit/metrics.hpp"
#include "confkit/pipeline.hpp"
#include "confkit/select.hpp"
#include "confkit/simulate.hpp"

namespace confkit {

namespace fs = std::filesystem;

namespace {

// JSON config file: top-level keys are global options, nested objects are
// subcommands ({"train-cem": {"epochs": 5}}). Underscores in keys match
// dashes in flag names.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    throw CLI::ConversionError("writing JSON config files is not supported");
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      input >> j;
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config: top level must be an object");
    std::vector<CLI::ConfigItem> out;
    flatten(j, {}, out);
    return out;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw CLI::ConversionError("config: unsupported value " + v.dump());
  }

  static void flatten(const json& j, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& out) {
    for (const auto& [key, v] : j.items()) {
      std::string name = key;
      std::replace(name.begin(), name.end(), '_', '-');
      if (v.is_object()) {
        auto p = parents;
        p.push_back(name);
        flatten(v, p, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = name;
      if (v.is_array()) {
        for (const auto& e : v) item.inputs.push_back(scalar(e));
      } else {
        item.inputs.push_back(scalar(v));
      }
      out.push_back(std::move(item));
    }
  }
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  bool verbose = false;

  void log(const std::string& event, const json& fields = json::object()) const {
    if (!verbose) return;
    json line = fields.is_object() ? fields : json{{"value", fields}};
    line["event"] = event;
    err << dump_json(line) << "\n";
  }
};

void write_json(const fs::path& dir, const std::string& name, const json& j, const Context& ctx) {
  fs::create_directories(dir);
  const fs::path p = dir / name;
  write_file_atomic(p, dump_json_pretty(j) + "\n");
  ctx.log("wrote", json{{"path", p.string()}});
}

RefSource label_source(const std::string& mode) {
  if (mode == "from-corpus") return RefSource::kGold;
  if (mode == "from-pseudo") return RefSource::kPseudo;
  throw UsageError("--labels mode must be from-corpus or from-pseudo, got '" + mode + "'");
}

std::optional<NGramModel> maybe_lm(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return read_arpa(path);
}

const NGramModel* ptr(const std::optional<NGramModel>& m) { return m ? &*m : nullptr; }

struct TrainOpts {
  std::string corpus;
  std::string ood;
  std::string lm_in;
  std::string lm_ood;
  bool pseudo = false;
  int hidden = 32;
  int layers = 2;
  TrainConfig cfg;
  std::string out;
};

void add_train_command(CLI::App& app, const std::string& name, ModelKind kind, TrainOpts& o,
                       std::function<void(ModelKind)> run) {
  auto* c = app.add_subcommand(name, kind == ModelKind::kCem ? "Train a token-level confidence model"
                                                              : "Train an utterance-level confidence model");
  c->add_option("--corpus", o.corpus, "Labelled training corpus (JSONL)")->required()->check(CLI::ExistingFile);
  c->add_flag("--pseudo", o.pseudo, "Label --corpus against pseudo_reference instead of reference");
  c->add_option("--ood", o.ood, "Pseudo-labelled OOD corpus mixed into every minibatch")->check(CLI::ExistingFile);
  c->add_option("--lm-in", o.lm_in, "In-domain ARPA LM; adds the lm_in column")->check(CLI::ExistingFile);
  c->add_option("--lm-ood", o.lm_ood, "OOD ARPA LM; adds the lm_ood column")->check(CLI::ExistingFile);
  c->add_option("--hidden", o.hidden, "Units per direction")->capture_default_str()->check(CLI::PositiveNumber);
  c->add_option("--layers", o.layers, "Bidirectional layers")->capture_default_str()->check(CLI::PositiveNumber);
  c->add_option("--epochs", o.cfg.epochs, "Passes over the in-domain data")->capture_default_str()->check(CLI::NonNegativeNumber);
  c->add_option("--batch-size", o.cfg.batch_size, "Items per minibatch")->capture_default_str()->check(CLI::PositiveNumber);
  c->add_option("--lr", o.cfg.learning_rate, "Adam learning rate")->capture_default_str()->check(CLI::PositiveNumber);
  c->add_option("--ood-mix-ratio", o.cfg.ood_mix_ratio, "Fraction of OOD items per minibatch")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  c->add_option("--max-grad-norm", o.cfg.max_grad_norm, "Gradient norm clip, 0 = off")->capture_default_str();
  c->add_option("--out", o.out, "Output directory")->required();
  c->callback([run, kind] { run(kind); });
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"confkit: confidence estimation toolkit for speech recognition output"};
  app.name("confkit");
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config file; keys nested by subcommand, flags win");

  Context ctx{out, err};
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Seed for every random choice")->envname("CONFKIT_SEED")->capture_default_str();
  app.add_flag("--verbose", ctx.verbose, "Structured JSON log lines on stderr");

  // simulate
  std::string scenario_path, sim_out;
  auto* sim = app.add_subcommand("simulate", "Generate corpora and LM text from a scenario file");
  sim->add_option("--scenario", scenario_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", sim_out, "Output directory")->required();
  sim->callback([&] {
    Scenario s = scenario_from_json(parse_json_file(scenario_path));
    if (app.get_option("--seed")->count() > 0) s.seed = seed;
    for (const auto& p : run_scenario(s, sim_out)) ctx.log("wrote", json{{"path", p.string()}});
  });

  // label
  std::string label_corpus, label_out;
  bool label_pseudo = false;
  auto* lab = app.add_subcommand("label", "Align every n-best entry and write token/word/utterance labels");
  lab->add_option("--corpus", label_corpus, "Corpus (JSONL)")->required()->check(CLI::ExistingFile);
  lab->add_flag("--pseudo", label_pseudo, "Align against pseudo_reference");
  lab->add_option("--out", label_out, "Output directory")->required();
  lab->callback([&] {
    const Corpus c = read_corpus(label_corpus);
    std::string text;
    for (const Utterance& u : c.utterances) {
      const TokenSeq* ref = pick_reference(u, label_pseudo ? RefSource::kPseudo : RefSource::kGold);
      if (ref == nullptr) throw DataError("utterance '" + u.utt_id + "': no reference to label against");
      for (std::size_t i = 0; i < u.nbest.size(); ++i) {
        const LabeledHypothesis lh = label_hypothesis(u.nbest[i], *ref);
        text += dump_json(json{{"utt_id", u.utt_id}, {"hyp", i}, {"token_labels", lh.token_labels},
                               {"word_labels", lh.word_labels}, {"utterance_label", lh.utterance_label}});
        text += "\n";
      }
    }
    fs::create_directories(label_out);
    write_file_atomic(fs::path(label_out) / "labels.jsonl", text);
  });

  // train-lm
  std::string lm_text, lm_out;
  int lm_order = 3;
  double lm_discount = 0.75;
  auto* tlm = app.add_subcommand("train-lm", "Train a back-off n-gram LM and write it as ARPA");
  tlm->add_option("--text", lm_text, "One sentence of token ids per line")->required()->check(CLI::ExistingFile);
  tlm->add_option("--order", lm_order, "n-gram order")->capture_default_str()->check(CLI::PositiveNumber);
  tlm->add_option("--discount", lm_discount, "Absolute discount in (0, 1)")->capture_default_str();
  tlm->add_option("--out", lm_out, "Output directory")->required();
  tlm->callback([&] {
    const NGramModel m = train_ngram(read_text_corpus(lm_text), lm_order, lm_discount);
    fs::create_directories(lm_out);
    write_arpa(m, fs::path(lm_out) / "lm.arpa");
  });

  // train-cem / train-rebm
  TrainOpts topts;
  auto run_train = [&](ModelKind kind) {
    const Corpus corpus = read_corpus(topts.corpus);
    const auto lm_in = maybe_lm(topts.lm_in);
    const auto lm_ood = maybe_lm(topts.lm_ood);
    const FeatureSchema schema = FeatureSchema::from_header(corpus.header, lm_in.has_value(), lm_ood.has_value());
    std::vector<TrainItem> items = make_train_items(corpus, schema, ptr(lm_in), ptr(lm_ood),
                                                    topts.pseudo ? RefSource::kPseudo : RefSource::kGold);
    std::vector<TrainItem> ood;
    if (!topts.ood.empty()) {
      const Corpus oc = read_corpus(topts.ood);
      if (!(oc.header == corpus.header)) throw DataError("--ood corpus header differs from --corpus");
      ood = make_train_items(oc, schema, ptr(lm_in), ptr(lm_ood), RefSource::kPseudo);
    }
    std::vector<FeatureMatrix> mats;
    for (const auto& it : items) mats.push_back(it.features);
    const FeatureStats stats = compute_stats(mats);
    standardize_items(items, stats);
    standardize_items(ood, stats);
    ConfidenceModel model(kind, schema.width(), topts.hidden, topts.layers);
    model.init_params(Rng::hash(seed, "init/" + to_string(kind)));
    model.schema = schema;
    model.stats = stats;
    TrainConfig cfg = topts.cfg;
    cfg.seed = Rng::hash(seed, "train/" + to_string(kind));
    ctx.log("train_start", json{{"kind", to_string(kind)}, {"items", items.size()}, {"ood_items", ood.size()},
                                {"config", to_json(cfg)}});
    const TrainReport rep = train(model, items, ood, cfg);
    for (std::size_t e = 0; e < rep.epoch_loss.size(); ++e) {
      ctx.log("epoch", json{{"epoch", e + 1}, {"loss", rep.epoch_loss[e]}});
    }
    fs::create_directories(topts.out);
    save_model(model, fs::path(topts.out) / "model.json");
    write_json(topts.out, "train_report.json",
               json{{"initial_loss", rep.initial_loss}, {"epoch_loss", rep.epoch_loss},
                    {"in_domain_draws", rep.in_domain_draws}, {"ood_draws", rep.ood_draws},
                    {"batches", rep.batches}, {"ood_per_batch", rep.ood_per_batch}, {"config", to_json(cfg)}},
               ctx);
  };
  add_train_command(app, "train-cem", ModelKind::kCem, topts, run_train);
  add_train_command(app, "train-rebm", ModelKind::kRebm, topts, run_train);

  // score
  std::string score_model, score_corpus_path, score_lm_in, score_lm_ood, score_out, score_softmax;
  auto* sc = app.add_subcommand("score", "Score the 1-best hypothesis of every utterance");
  sc->add_option("--model", score_model, "Model JSON")->check(CLI::ExistingFile);
  sc->add_option("--softmax", score_softmax, "Softmax baseline instead of a model: word or utterance")
      ->check(CLI::IsMember({"word", "utterance"}));
  sc->add_option("--corpus", score_corpus_path, "Corpus (JSONL)")->required()->check(CLI::ExistingFile);
  sc->add_option("--lm-in", score_lm_in, "In-domain ARPA LM")->check(CLI::ExistingFile);
  sc->add_option("--lm-ood", score_lm_ood, "OOD ARPA LM")->check(CLI::ExistingFile);
  sc->add_option("--out", score_out, "Output directory")->required();
  sc->callback([&] {
    if (score_model.empty() == score_softmax.empty()) throw UsageError("score: give exactly one of --model, --softmax");
    const Corpus corpus = read_corpus(score_corpus_path);
    ScoreFile f;
    if (!score_softmax.empty()) {
      f = softmax_scores(corpus, score_softmax);
    } else {
      const ConfidenceModel m = load_model(score_model);
      const auto lm_in = maybe_lm(score_lm_in);
      const auto lm_ood = maybe_lm(score_lm_ood);
      f = score_corpus(m, corpus, ptr(lm_in), ptr(lm_ood));
    }
    write_json(score_out, "scores.json", to_json(f), ctx);
  });

  // metrics
  std::string met_scores, met_out;
  std::vector<std::string> met_labels;
  int met_bins = 50;
  bool met_table = false;
  auto* met = app.add_subcommand("metrics", "AUC-PR, EER, NCE and ECE of a score file");
  met->add_option("--scores", met_scores, "Score file from `score`")->required()->check(CLI::ExistingFile);
  met->add_option("--labels", met_labels, "from-corpus|from-pseudo <corpus.jsonl>")->required()->expected(2);
  met->add_option("--bins", met_bins, "ECE bins")->capture_default_str()->check(CLI::PositiveNumber);
  met->add_flag("--table", met_table, "Print a table instead of JSON");
  met->add_option("--out", met_out, "Also write metrics.json here");
  met->callback([&] {
    const ScoreFile f = score_file_from_json(parse_json_file(met_scores));
    const Corpus corpus = read_corpus(met_labels[1]);
    const MetricsReport r = compute_report(join_labels(f, corpus, label_source(met_labels[0])), met_bins);
    out << (met_table ? render_table(r) : dump_json(to_json(r)) + "\n");
    if (!met_out.empty()) write_json(met_out, "metrics.json", to_json(r), ctx);
  });

  // calibrate fit / apply
  auto* cal = app.add_subcommand("calibrate", "Piece-wise linear calibration");
  cal->require_subcommand(1);
  std::string fit_scores, fit_out;
  std::vector<std::string> fit_labels;
  int fit_segments = 5, fit_bins = 50;
  auto* fit = cal->add_subcommand("fit", "Fit a mapping on dev scores");
  fit->add_option("--scores", fit_scores, "Dev score file")->required()->check(CLI::ExistingFile);
  fit->add_option("--labels", fit_labels, "from-corpus|from-pseudo <corpus.jsonl>")->required()->expected(2);
  fit->add_option("--segments", fit_segments, "Linear segments")->capture_default_str()->check(CLI::PositiveNumber);
  fit->add_option("--bins", fit_bins, "Histogram bins")->capture_default_str()->check(CLI::PositiveNumber);
  fit->add_option("--out", fit_out, "Output directory")->required();
  fit->callback([&] {
    const ScoreFile f = score_file_from_json(parse_json_file(fit_scores));
    const Corpus corpus = read_corpus(fit_labels[1]);
    const PwlMapping m = fit_pwlm(join_labels(f, corpus, label_source(fit_labels[0])), fit_segments, fit_bins);
    write_json(fit_out, "pwlm.json", to_json(m), ctx);
  });
  std::string app_map, app_scores, app_out;
  auto* apl = cal->add_subcommand("apply", "Map a score file through a fitted mapping");
  apl->add_option("--map", app_map, "pwlm.json")->required()->check(CLI::ExistingFile);
  apl->add_option("--scores", app_scores, "Score file")->required()->check(CLI::ExistingFile);
  apl->add_option("--out", app_out, "Output directory")->required();
  apl->callback([&] {
    const PwlMapping m = pwl_mapping_from_json(parse_json_file(app_map));
    ScoreFile f = score_file_from_json(parse_json_file(app_scores));
    for (auto& it : f.items) it.scores = apply_pwlm(m, it.scores);
    f.kind += "+pwlm";
    write_json(app_out, "scores.json", to_json(f), ctx);
  });

  // select
  std::string sel_scores, sel_corpus, sel_out;
  std::size_t sel_k = kDefaultSelectK;
  bool sel_pseudo = false;
  auto* sel = app.add_subcommand("select", "Bottom-k and top-k utterances by confidence, with their SERs");
  sel->add_option("--scores", sel_scores, "Utterance-level score file")->required()->check(CLI::ExistingFile);
  sel->add_option("--corpus", sel_corpus, "Corpus with references")->required()->check(CLI::ExistingFile);
  sel->add_option("--k", sel_k, "Utterances per side")->capture_default_str()->check(CLI::PositiveNumber);
  sel->add_flag("--pseudo", sel_pseudo, "Compute SER against pseudo_reference");
  sel->add_option("--out", sel_out, "Also write selection.json here");
  sel->callback([&] {
    const ScoreFile f = score_file_from_json(parse_json_file(sel_scores));
    if (f.level != "utterance") throw DataError("select needs utterance-level scores");
    const Corpus corpus = read_corpus(sel_corpus);
    std::map<std::string, const Utterance*> by_id;
    for (const auto& u : corpus.utterances) by_id[u.utt_id] = &u;
    std::vector<ScoredUtterance> su;
    for (const auto& it : f.items) {
      const auto u = by_id.find(it.utt_id);
      if (u == by_id.end()) throw DataError("scores: utterance '" + it.utt_id + "' not in corpus");
      const TokenSeq* ref = pick_reference(*u->second, sel_pseudo ? RefSource::kPseudo : RefSource::kGold);
      if (ref == nullptr) throw DataError("utterance '" + it.utt_id + "': no reference");
      if (it.scores.size() != 1) throw DataError("utterance '" + it.utt_id + "': needs one score");
      su.push_back(ScoredUtterance{it.utt_id, it.scores.front(), u->second->nbest.front().tokens, *ref});
    }
    const SelectionReport r = select_extremes(su, sel_k, sel_pseudo);
    out << dump_json(to_json(r)) << "\n";
    if (!sel_out.empty()) write_json(sel_out, "selection.json", to_json(r), ctx);
  });

  // experiment run
  auto* exp = app.add_subcommand("experiment", "Ablation experiments");
  exp->require_subcommand(1);
  std::string plan_path, exp_out;
  auto* run = exp->add_subcommand("run", "Run the ablation grid of a plan file");
  run->add_option("plan", plan_path, "Plan JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--out", exp_out, "Results directory")->required();
  run->callback([&] {
    ExperimentPlan plan = plan_from_json(parse_json_file(plan_path), fs::path(plan_path).parent_path());
    if (app.get_option("--seed")->count() > 0) plan.seed = seed;
    const AblationResult r = run_ablation(plan, [&](const std::string& msg, const json& f) { ctx.log(msg, f); });
    for (const auto& p : write_results(r, exp_out)) ctx.log("wrote", json{{"path", p.string()}});
    fs::create_directories(exp_out);
    write_file_atomic(fs::path(exp_out) / "plan.json", dump_json_pretty(to_json(plan)) + "\n");
    out << render_summary(r);
  });

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const json::exception& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace confkit
