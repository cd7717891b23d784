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

#include "confkit/confidence_net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "confkit/error.hpp"
#include "confkit/rng.hpp"

namespace confkit {

namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using MapMat = Eigen::Map<Mat>;
using ConstMapMat = Eigen::Map<const Mat>;

constexpr double kClipLo = 1e-8;
constexpr double kClipHi = 1.0 - 1e-8;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& x) {
  return 1.0 / (1.0 + (-x).exp());
}

ConstMapMat view(const ConfidenceModel& m, std::size_t block) {
  const ParamBlock& b = m.blocks()[block];
  return ConstMapMat(m.params().data() + b.offset, b.rows, b.cols);
}

MapMat view(const ConfidenceModel& m, std::vector<double>& flat, std::size_t block) {
  const ParamBlock& b = m.blocks()[block];
  return MapMat(flat.data() + b.offset, b.rows, b.cols);
}

// Activations of one direction of one layer, one column per time step
// (indexed by position in the sequence, not by processing order).
struct DirCache {
  Mat z, r, n, hprev, rh, h;
};

struct LayerCache {
  Mat input;  // in x L
  DirCache dir[2];
  Mat out;    // 2H x L
};

void run_direction(const ConfidenceModel& model, int layer, int dir,
                   const Mat& x, DirCache& c) {
  const Eigen::Index H = model.hidden();
  const Eigen::Index L = x.cols();
  const auto W = view(model, model.w_block(layer, dir));
  const auto U = view(model, model.u_block(layer, dir));
  const auto b = view(model, model.b_block(layer, dir));

  Mat a = W * x;
  a.colwise() += b.col(0);
  c.z.resize(H, L);
  c.r.resize(H, L);
  c.n.resize(H, L);
  c.hprev.resize(H, L);
  c.rh.resize(H, L);
  c.h.resize(H, L);

  Vec h = Vec::Zero(H);
  Vec uzr(2 * H);
  Vec un(H);
  for (Eigen::Index s = 0; s < L; ++s) {
    const Eigen::Index t = dir == 0 ? s : L - 1 - s;
    c.hprev.col(t) = h;
    uzr.noalias() = U.topRows(2 * H) * h;
    c.z.col(t) = sigmoid((a.col(t).head(H) + uzr.head(H)).array()).matrix();
    c.r.col(t) = sigmoid((a.col(t).segment(H, H) + uzr.tail(H)).array()).matrix();
    c.rh.col(t) = c.r.col(t).cwiseProduct(h);
    un.noalias() = U.bottomRows(H) * c.rh.col(t);
    c.n.col(t) = (a.col(t).tail(H) + un).array().tanh().matrix();
    h = (1.0 - c.z.col(t).array()) * c.n.col(t).array() + c.z.col(t).array() * h.array();
    c.h.col(t) = h;
  }
}

// Runs the backbone and returns the top-layer states (2H x L).
std::vector<LayerCache> run_backbone(const ConfidenceModel& model, const FeatureMatrix& m) {
  if (m.cols() != model.input_width()) {
    throw DataError("feature width " + std::to_string(m.cols()) +
                    " does not match model input width " + std::to_string(model.input_width()));
  }
  const Eigen::Index H = model.hidden();
  std::vector<LayerCache> layers(static_cast<std::size_t>(model.layers()));
  // Row-major L x D has the memory layout of column-major D x L.
  layers[0].input = ConstMapMat(m.data(), m.cols(), m.rows());
  for (int l = 0; l < model.layers(); ++l) {
    LayerCache& lc = layers[static_cast<std::size_t>(l)];
    if (l > 0) lc.input = layers[static_cast<std::size_t>(l - 1)].out;
    run_direction(model, l, 0, lc.input, lc.dir[0]);
    run_direction(model, l, 1, lc.input, lc.dir[1]);
    lc.out.resize(2 * H, lc.input.cols());
    lc.out.topRows(H) = lc.dir[0].h;
    lc.out.bottomRows(H) = lc.dir[1].h;
  }
  return layers;
}

void backward_direction(const ConfidenceModel& model, int layer, int dir,
                        const LayerCache& lc, const Mat& dh_out, Mat& dx,
                        std::vector<double>& grad) {
  const DirCache& c = lc.dir[dir];
  const Eigen::Index H = model.hidden();
  const Eigen::Index L = lc.input.cols();
  const auto W = view(model, model.w_block(layer, dir));
  const auto U = view(model, model.u_block(layer, dir));

  Mat da(3 * H, L);
  Vec dh_next = Vec::Zero(H);
  Vec dh(H), dn(H), dz(H), dhp(H), dan(H), drh(H), dar(H), daz(H);
  for (Eigen::Index s = L - 1; s >= 0; --s) {
    const Eigen::Index t = dir == 0 ? s : L - 1 - s;
    const auto z = c.z.col(t).array();
    const auto r = c.r.col(t).array();
    const auto n = c.n.col(t).array();
    const auto hp = c.hprev.col(t).array();

    dh = dh_out.col(t) + dh_next;
    dn = (dh.array() * (1.0 - z)).matrix();
    dz = (dh.array() * (hp - n)).matrix();
    dhp = (dh.array() * z).matrix();
    dan = (dn.array() * (1.0 - n * n)).matrix();
    drh.noalias() = U.bottomRows(H).transpose() * dan;
    dar = (drh.array() * hp * r * (1.0 - r)).matrix();
    dhp.array() += drh.array() * r;
    daz = (dz.array() * z * (1.0 - z)).matrix();
    da.col(t).head(H) = daz;
    da.col(t).segment(H, H) = dar;
    da.col(t).tail(H) = dan;
    dhp.noalias() += U.topRows(2 * H).transpose() * da.col(t).head(2 * H);
    dh_next = dhp;
  }

  auto gW = view(model, grad, model.w_block(layer, dir));
  auto gU = view(model, grad, model.u_block(layer, dir));
  auto gb = view(model, grad, model.b_block(layer, dir));
  gW.noalias() += da * lc.input.transpose();
  gb.col(0) += da.rowwise().sum();
  gU.topRows(2 * H).noalias() += da.topRows(2 * H) * c.hprev.transpose();
  gU.bottomRows(H).noalias() += da.bottomRows(H) * c.rh.transpose();
  dx.noalias() += W.transpose() * da;
}

void backward_backbone(const ConfidenceModel& model, const std::vector<LayerCache>& layers,
                       Mat dy, std::vector<double>& grad) {
  const Eigen::Index H = model.hidden();
  for (int l = model.layers() - 1; l >= 0; --l) {
    const LayerCache& lc = layers[static_cast<std::size_t>(l)];
    Mat dx = Mat::Zero(lc.input.rows(), lc.input.cols());
    const Mat dh_f = dy.topRows(H);
    const Mat dh_b = dy.bottomRows(H);
    backward_direction(model, l, 0, lc, dh_f, dx, grad);
    backward_direction(model, l, 1, lc, dh_b, dx, grad);
    if (l > 0) dy = std::move(dx);
  }
}

double head_bias(const ConfidenceModel& model) {
  return model.params()[model.blocks()[model.head_b_block()].offset];
}

double bce(double score, int label) {
  const double s = std::clamp(score, kClipLo, kClipHi);
  return label ? -std::log(s) : -std::log(1.0 - s);
}

// d bce / d logit of the clipped score.
double bce_dlogit(double score, int label) {
  if (!(score > kClipLo && score < kClipHi)) return 0.0;
  return score - static_cast<double>(label);
}

void check_kind(const ConfidenceModel& model, ModelKind want, const char* op) {
  if (model.kind() != want) {
    throw UsageError(std::string(op) + " called on a " + to_string(model.kind()) + " model");
  }
}

// Shared by loss_and_gradients and batch_loss; grad may be null.
double accumulate(const ConfidenceModel& model, std::span<const TrainItem* const> batch,
                  std::vector<double>* grad) {
  const Eigen::Index H = model.hidden();
  const bool cem = model.kind() == ModelKind::kCem;
  double denom = 0.0;
  for (const TrainItem* item : batch) {
    const auto L = item->features.rows();
    if (cem && item->token_labels.size() != static_cast<std::size_t>(L)) {
      throw DataError("token label count does not match the feature rows");
    }
    if (L > 0) denom += cem ? static_cast<double>(L) : 1.0;
  }
  if (denom == 0.0) return 0.0;
  const double scale = 1.0 / denom;

  const auto w = view(model, model.head_w_block());
  const double b = head_bias(model);
  double loss = 0.0;
  for (const TrainItem* item : batch) {
    const auto L = item->features.rows();
    if (L == 0) continue;
    const auto layers = run_backbone(model, item->features);
    const Mat& y = layers.back().out;
    if (cem) {
      Eigen::RowVectorXd logits = w.col(0).transpose() * y;
      logits.array() += b;
      Eigen::RowVectorXd dlogit(L);
      for (Eigen::Index t = 0; t < L; ++t) {
        const double s = sigmoid(logits(t));
        const int label = item->token_labels[static_cast<std::size_t>(t)];
        loss += bce(s, label) * scale;
        dlogit(t) = bce_dlogit(s, label) * scale;
      }
      if (grad != nullptr) {
        auto gw = view(model, *grad, model.head_w_block());
        (*grad)[model.blocks()[model.head_b_block()].offset] += dlogit.sum();
        gw.col(0).noalias() += y * dlogit.transpose();
        Mat dy = w.col(0) * dlogit;
        backward_backbone(model, layers, std::move(dy), *grad);
      }
    } else {
      const Vec pooled = y.rowwise().mean();
      const double s = sigmoid(w.col(0).dot(pooled) + b);
      loss += bce(s, item->utterance_label) * scale;
      if (grad != nullptr) {
        const double dlogit = bce_dlogit(s, item->utterance_label) * scale;
        auto gw = view(model, *grad, model.head_w_block());
        (*grad)[model.blocks()[model.head_b_block()].offset] += dlogit;
        gw.col(0) += pooled * dlogit;
        const Vec dpooled = w.col(0) * (dlogit / static_cast<double>(L));
        Mat dy = dpooled.replicate(1, L);
        backward_backbone(model, layers, std::move(dy), *grad);
      }
    }
  }
  (void)H;
  return loss;
}

}  // namespace

std::string to_string(ModelKind kind) { return kind == ModelKind::kCem ? "cem" : "rebm"; }

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "cem") return ModelKind::kCem;
  if (s == "rebm") return ModelKind::kRebm;
  throw DataError("unknown model kind '" + s + "'");
}

ConfidenceModel::ConfidenceModel(ModelKind kind, int input_width, int hidden, int layers)
    : kind_(kind), input_width_(input_width), hidden_(hidden), layers_(layers) {
  if (input_width < 1 || hidden < 1 || layers < 1) {
    throw UsageError("model dimensions must be positive");
  }
  std::size_t offset = 0;
  auto add = [&](std::string name, Eigen::Index rows, Eigen::Index cols) {
    blocks_.push_back(ParamBlock{std::move(name), offset, rows, cols});
    offset += static_cast<std::size_t>(rows * cols);
  };
  const Eigen::Index H = hidden;
  for (int l = 0; l < layers; ++l) {
    const Eigen::Index in = l == 0 ? input_width : 2 * H;
    for (int d = 0; d < 2; ++d) {
      const std::string p = "gru." + std::to_string(l) + (d == 0 ? ".fwd" : ".bwd");
      add(p + ".W", 3 * H, in);
      add(p + ".U", 3 * H, H);
      add(p + ".b", 3 * H, 1);
    }
  }
  add("head.w", 2 * H, 1);
  add("head.b", 1, 1);
  params_.assign(offset, 0.0);
}

void ConfidenceModel::init_params(std::uint64_t seed) {
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_));
  for (double& p : params_) p = (2.0 * rng.uniform() - 1.0) * bound;
}

std::vector<double> forward_cem(const ConfidenceModel& model, const FeatureMatrix& m) {
  check_kind(model, ModelKind::kCem, "forward_cem");
  if (m.rows() == 0) {
    if (m.cols() != model.input_width() && m.cols() != 0) {
      throw DataError("feature width does not match model input width");
    }
    return {};
  }
  const auto layers = run_backbone(model, m);
  const auto w = view(model, model.head_w_block());
  const double b = head_bias(model);
  Eigen::RowVectorXd logits = w.col(0).transpose() * layers.back().out;
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index t = 0; t < m.rows(); ++t) out[static_cast<std::size_t>(t)] = sigmoid(logits(t) + b);
  return out;
}

double forward_rebm(const ConfidenceModel& model, const FeatureMatrix& m) {
  check_kind(model, ModelKind::kRebm, "forward_rebm");
  if (m.rows() == 0) return 0.0;
  const auto layers = run_backbone(model, m);
  const Vec pooled = layers.back().out.rowwise().mean();
  const auto w = view(model, model.head_w_block());
  return sigmoid(w.col(0).dot(pooled) + head_bias(model));
}

std::vector<double> word_confidence(std::span<const double> token_scores,
                                    const std::vector<bool>& word_start) {
  if (token_scores.size() != word_start.size()) {
    throw DataError("word_confidence: score and flag lengths differ");
  }
  if (!word_start.empty() && !word_start.front()) {
    throw DataError("word_confidence: first flag must be a word start");
  }
  std::vector<double> out;
  for (const auto& span : word_spans_from_flags(word_start)) {
    out.push_back(*std::min_element(token_scores.begin() + static_cast<std::ptrdiff_t>(span.begin),
                                    token_scores.begin() + static_cast<std::ptrdiff_t>(span.end)));
  }
  return out;
}

LossAndGrad loss_and_gradients(const ConfidenceModel& model,
                               std::span<const TrainItem* const> batch) {
  LossAndGrad out;
  out.grad.assign(model.params().size(), 0.0);
  out.loss = accumulate(model, batch, &out.grad);
  return out;
}

double batch_loss(const ConfidenceModel& model, std::span<const TrainItem* const> batch) {
  return accumulate(model, batch, nullptr);
}

// ---------------------------------------------------------------------------
// Training

json to_json(const TrainConfig& c) {
  return json{{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
              {"epochs", c.epochs},               {"seed", c.seed},
              {"ood_mix_ratio", c.ood_mix_ratio}, {"beta1", c.beta1},
              {"beta2", c.beta2},                 {"epsilon", c.epsilon},
              {"max_grad_norm", c.max_grad_norm}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  try {
    if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
    if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("ood_mix_ratio")) c.ood_mix_ratio = j["ood_mix_ratio"].get<double>();
    if (j.contains("beta1")) c.beta1 = j["beta1"].get<double>();
    if (j.contains("beta2")) c.beta2 = j["beta2"].get<double>();
    if (j.contains("epsilon")) c.epsilon = j["epsilon"].get<double>();
    if (j.contains("max_grad_norm")) c.max_grad_norm = j["max_grad_norm"].get<double>();
  } catch (const json::exception& e) {
    throw DataError(std::string("train config: ") + e.what());
  }
  return c;
}

TrainReport train(ConfidenceModel& model, std::span<const TrainItem> in_domain,
                  std::span<const TrainItem> ood, const TrainConfig& cfg) {
  if (in_domain.empty() && ood.empty()) throw DataError("train: no training data");
  if (cfg.batch_size < 1) throw UsageError("train: batch_size must be >= 1");
  if (cfg.epochs < 0) throw UsageError("train: epochs must be >= 0");
  if (!(cfg.ood_mix_ratio >= 0.0 && cfg.ood_mix_ratio <= 1.0)) {
    throw UsageError("train: ood_mix_ratio must lie in [0, 1]");
  }
  if (!(cfg.learning_rate > 0.0)) throw UsageError("train: learning_rate must be positive");

  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  std::size_t n_ood = ood.empty()
                          ? 0
                          : static_cast<std::size_t>(std::llround(cfg.ood_mix_ratio * static_cast<double>(batch)));
  n_ood = std::min(n_ood, batch);
  // With only OOD data, or a ratio that leaves no room for in-domain items,
  // the OOD list drives the epoch instead.
  const bool ood_only = in_domain.empty() || n_ood == batch;
  if (in_domain.empty()) n_ood = batch;
  const std::span<const TrainItem> primary = ood_only ? ood : in_domain;
  const std::size_t n_primary = ood_only ? batch : batch - n_ood;
  const std::size_t n_secondary = ood_only ? 0 : n_ood;

  TrainReport report;
  report.ood_per_batch = n_ood;
  {
    std::vector<const TrainItem*> all;
    for (const auto& it : primary) all.push_back(&it);
    report.initial_loss = batch_loss(model, all);
  }

  std::vector<double>& p = model.params();
  std::vector<double> m1(p.size(), 0.0);
  std::vector<double> m2(p.size(), 0.0);
  std::uint64_t step = 0;

  Rng order_rng = Rng::derive(cfg.seed, "train.order");
  Rng ood_rng = Rng::derive(cfg.seed, "train.ood");
  std::vector<std::size_t> ood_perm;
  std::size_t ood_pos = 0;
  auto next_ood = [&]() -> const TrainItem* {
    if (ood_pos == ood_perm.size()) {
      ood_perm.resize(ood.size());
      std::iota(ood_perm.begin(), ood_perm.end(), std::size_t{0});
      ood_rng.shuffle(ood_perm);
      ood_pos = 0;
    }
    return &ood[ood_perm[ood_pos++]];
  };

  std::vector<std::size_t> order(primary.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    order_rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t epoch_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += n_primary) {
      std::vector<const TrainItem*> items;
      const std::size_t stop = std::min(order.size(), start + n_primary);
      for (std::size_t i = start; i < stop; ++i) items.push_back(&primary[order[i]]);
      if (ood_only) {
        report.ood_draws += items.size();
      } else {
        report.in_domain_draws += items.size();
        for (std::size_t k = 0; k < n_secondary; ++k) items.push_back(next_ood());
        report.ood_draws += n_secondary;
      }

      LossAndGrad lg = loss_and_gradients(model, items);
      if (!std::isfinite(lg.loss)) throw NumericError("train: non-finite loss");
      epoch_loss += lg.loss;
      ++epoch_batches;
      ++report.batches;

      if (cfg.max_grad_norm > 0.0) {
        double norm = 0.0;
        for (double g : lg.grad) norm += g * g;
        norm = std::sqrt(norm);
        if (norm > cfg.max_grad_norm) {
          const double s = cfg.max_grad_norm / norm;
          for (double& g : lg.grad) g *= s;
        }
      }
      ++step;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double g = lg.grad[i];
        m1[i] = cfg.beta1 * m1[i] + (1.0 - cfg.beta1) * g;
        m2[i] = cfg.beta2 * m2[i] + (1.0 - cfg.beta2) * g * g;
        p[i] -= cfg.learning_rate * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + cfg.epsilon);
      }
    }
    report.epoch_loss.push_back(epoch_batches ? epoch_loss / static_cast<double>(epoch_batches) : 0.0);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Persistence

json to_json(const ConfidenceModel& model) {
  json params = json::array();
  for (const auto& b : model.blocks()) {
    std::vector<double> values(model.params().begin() + static_cast<std::ptrdiff_t>(b.offset),
                               model.params().begin() + static_cast<std::ptrdiff_t>(b.offset + b.size()));
    params.push_back(json{{"name", b.name}, {"shape", {b.rows, b.cols}}, {"values", values}});
  }
  return json{{"format_version", 1},
              {"kind", to_string(model.kind())},
              {"dims", {{"input_width", model.input_width()},
                        {"hidden", model.hidden()},
                        {"layers", model.layers()}}},
              {"schema", to_json(model.schema)},
              {"stats", to_json(model.stats)},
              {"params", params}};
}

ConfidenceModel model_from_json(const json& j) {
  try {
    if (j.at("format_version").get<int>() != 1) throw DataError("model: unsupported format_version");
    const json& dims = j.at("dims");
    ConfidenceModel model(model_kind_from_string(j.at("kind").get<std::string>()),
                          dims.at("input_width").get<int>(), dims.at("hidden").get<int>(),
                          dims.at("layers").get<int>());
    model.schema = schema_from_json(j.at("schema"));
    model.stats = stats_from_json(j.at("stats"));
    if (model.schema.width() != model.input_width()) throw DataError("model: schema width != input_width");
    const json& params = j.at("params");
    if (params.size() != model.blocks().size()) throw DataError("model: wrong number of parameter blocks");
    for (std::size_t i = 0; i < params.size(); ++i) {
      const ParamBlock& b = model.blocks()[i];
      const json& pj = params[i];
      if (pj.at("name").get<std::string>() != b.name) throw DataError("model: unexpected block " + pj.at("name").get<std::string>());
      const auto shape = pj.at("shape").get<std::vector<Eigen::Index>>();
      if (shape.size() != 2 || shape[0] != b.rows || shape[1] != b.cols) {
        throw DataError("model: shape mismatch for " + b.name);
      }
      const auto values = pj.at("values").get<std::vector<double>>();
      if (values.size() != b.size()) throw DataError("model: value count mismatch for " + b.name);
      std::copy(values.begin(), values.end(), model.params().begin() + static_cast<std::ptrdiff_t>(b.offset));
    }
    return model;
  } catch (const json::exception& e) {
    throw DataError(std::string("model: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(std::string("model: ") + e.what());
  }
}

void save_model(const ConfidenceModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, dump_json(to_json(model)) + "\n");
}

ConfidenceModel load_model(const std::filesystem::path& path) {
  return model_from_json(parse_json_file(path));
}

}  // namespace confkit
