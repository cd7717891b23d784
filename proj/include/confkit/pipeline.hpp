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

// Experiment orchestration: softmax baseline, training-set construction,
// scoring, and the 2x2 ablation grid over {pseudo-labelled OOD data,
// OOD language model}.

#ifndef CONFKIT_PIPELINE_HPP_
#define CONFKIT_PIPELINE_HPP_

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "confkit/calibrate.hpp"
#include "confkit/confidence_net.hpp"
#include "confkit/data_model.hpp"
#include "confkit/features.hpp"
#include "confkit/lm.hpp"
#include "confkit/metrics.hpp"
#include "confkit/select.hpp"
#include "confkit/simulate.hpp"

namespace confkit {

// ---------------------------------------------------------------------------
// Labels and scores

enum class RefSource { kGold, kPseudo, kGoldOrPseudo };

/// The reference used for labelling, or nullptr if the source is absent.
const TokenSeq* pick_reference(const Utterance& u, RefSource src);

/// Raw (unstandardized) training items from every n-best entry, labelled
/// against the chosen reference. Utterances without it are a DataError.
std::vector<TrainItem> make_train_items(const Corpus& corpus, const FeatureSchema& schema,
                                        const NGramModel* lm_in, const NGramModel* lm_ood,
                                        RefSource src);

void standardize_items(std::vector<TrainItem>& items, const FeatureStats& stats);

/// Scores of the 1-best hypothesis of each utterance.
struct UttScores {
  std::string utt_id;
  std::vector<double> scores;  // one per word, or a single utterance score
};

struct ScoreFile {
  std::string kind;   // "cem", "rebm", "softmax"
  std::string level;  // "word" or "utterance"
  std::vector<UttScores> items;
};

json to_json(const ScoreFile& f);
ScoreFile score_file_from_json(const json& j);

ScoreFile score_corpus(const ConfidenceModel& model, const Corpus& corpus,
                       const NGramModel* lm_in, const NGramModel* lm_ood);
ScoreFile softmax_scores(const Corpus& corpus, const std::string& level);

/// Pairs every score with the label of the matching 1-best word or
/// utterance, computed against the gold reference.
ScoredSet join_labels(const ScoreFile& scores, const Corpus& corpus,
                      RefSource src = RefSource::kGold);

// ---------------------------------------------------------------------------
// Baseline

struct LevelReports {
  MetricsReport word;
  MetricsReport utterance;
};

json to_json(const LevelReports& r);

/// Token confidence exp(log_posterior), word = min over its tokens,
/// utterance = exp(mean token log_posterior). Needs gold references.
LevelReports run_baseline_softmax(const Corpus& corpus, int ece_bins = 50);

// ---------------------------------------------------------------------------
// Ablation grid

struct ModelSpec {
  int hidden = 16;
  int layers = 1;
  TrainConfig train;
};

struct ExperimentPlan {
  std::uint64_t seed = 0;
  // Either an inline scenario (corpora generated in memory, roles name
  // scenario corpora/texts) or file paths.
  std::optional<Scenario> scenario;
  std::map<std::string, std::string> corpora;  // role -> name or path
  std::filesystem::path base_dir;              // for relative paths
  int lm_order = 3;
  ModelSpec cem;
  ModelSpec rebm;
  std::vector<std::pair<bool, bool>> grid{{false, false}, {true, false}, {false, true}, {true, true}};
  int ece_bins = 50;
  int pwlm_segments = 5;
  int pwlm_bins = 50;
  std::size_t select_k = kDefaultSelectK;
};

/// Roles: train, dev, test, ood_unlabeled, ood_dev, ood_test, in_text,
/// ood_text. `train` and at least one test set are required.
ExperimentPlan plan_from_json(const json& j, const std::filesystem::path& base_dir);
json to_json(const ExperimentPlan& p);
void validate(const ExperimentPlan& p);

struct EvalResult {
  MetricsReport word;
  std::optional<MetricsReport> word_calibrated;
  std::optional<PwlMapping> pwlm;
  MetricsReport utterance;
  std::optional<SelectionReport> selection;
  std::vector<ReliabilityBin> word_reliability;
  std::vector<ReliabilityBin> word_reliability_calibrated;
};

struct CellResult {
  bool use_pseudo = false;
  bool use_ood_lm = false;
  FeatureSchema schema;
  TrainReport cem_train;
  TrainReport rebm_train;
  std::map<std::string, EvalResult> evals;  // by test role
  ConfidenceModel cem;
  ConfidenceModel rebm;
};

struct AblationResult {
  std::map<std::string, LevelReports> baseline;         // by test role
  std::map<std::string, SelectionReport> oracle_selection;
  std::vector<CellResult> cells;
};

std::string cell_name(bool use_pseudo, bool use_ood_lm);

/// Optional progress callback (message, fields) for structured logging.
using LogFn = std::function<void(const std::string&, const json&)>;

AblationResult run_ablation(const ExperimentPlan& plan, const LogFn& log = {});

json to_json(const CellResult& c);
json to_json(const AblationResult& r);
std::string render_summary(const AblationResult& r);
std::string reliability_svg(const std::vector<ReliabilityBin>& bins, const std::string& title);

/// One JSON per cell, baseline.json, grid.json, summary.md and SVG
/// reliability diagrams. Returns the written paths.
std::vector<std::filesystem::path> write_results(const AblationResult& r,
                                                 const std::filesystem::path& out_dir);

}  // namespace confkit

#endif  // CONFKIT_PIPELINE_HPP_
