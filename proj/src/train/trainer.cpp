#include "pcl/train/trainer.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "pcl/contrastive/loss.hpp"
#include "pcl/core/adam.hpp"

namespace pcl::train {

namespace {

constexpr Index kEvalChunk = 256;

enum SeedTag : std::uint64_t { kInitTag = 1, kShuffleTag = 2, kClassifierTag = 3 };

std::vector<Index> shuffled(std::vector<Index> v, Rng& rng) {
  std::shuffle(v.begin(), v.end(), rng);
  return v;
}

std::vector<Index> labels_of(const Dataset& d, std::span<const Index> rows) {
  std::vector<Index> out;
  out.reserve(rows.size());
  for (Index r : rows) out.push_back(d.labels[static_cast<std::size_t>(r)]);
  return out;
}

void require_labels(const Dataset& d, std::span<const Index> rows, const char* part) {
  for (Index r : rows) {
    if (d.labels[static_cast<std::size_t>(r)] < 0) {
      throw ContractError(std::string(part) + " record '" + d.manifest.records[static_cast<std::size_t>(r)].id +
                          "' has no label in the label set");
    }
  }
}

struct FoldRows {
  std::vector<Index> train, val, test;
};

FoldRows fold_rows(const Dataset& d, int fold) {
  const data::CvSplit split = data::make_cv_splits(d.manifest.sessions(), fold);
  return {d.indices_in_sessions(split.train), d.indices_in_sessions({split.val}), d.indices_in_sessions({split.test})};
}

/// Contrastive loss of one batch; with a recording tape the gradients land in the parameters.
double contrastive_batch(const Dataset& d, const PretrainConfig& cfg, std::vector<models::Encoder<float>>& enc,
                         std::vector<models::ProjectionHead<float>>& heads, std::span<const Index> rows, bool train) {
  Tape<float> tape(train);
  std::vector<Var<float>> z;
  for (std::size_t k = 0; k < cfg.views.size(); ++k) {
    Var<float> x = tape.constant(take_rows(d.view(cfg.views[k]), rows));
    z.push_back(heads[k].forward(tape, enc[k].forward(tape, x, train), train));
  }
  Var<float> loss = contrastive::pairwise_multiview_loss<float>(z, cfg.tau);
  if (train) tape.backward(loss);
  return static_cast<double>(loss.value()[0]);
}

}  // namespace

void write_history(std::ostream& os, const TrainHistory& h) {
  for (std::size_t e = 0; e < h.train.size(); ++e) {
    os << e + 1 << " train_" << h.train_metric << ' ' << models::format_hex(h.train[e]) << '\n';
    if (e < h.val.size()) os << e + 1 << " val_" << h.val_metric << ' ' << models::format_hex(h.val[e]) << '\n';
    if (e < h.lr.size()) os << e + 1 << " lr " << models::format_hex(h.lr[e]) << '\n';
  }
  os << "best_epoch " << h.best_epoch << '\n' << "stop_epoch " << h.stop_epoch << '\n';
}

void save_history(const std::string& path, const TrainHistory& h) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  write_history(os, h);
}

void PretrainConfig::validate() const {
  if (views.size() < 2) throw ContractError("pre-training needs at least two views");
  if (!(tau > 0.0)) throw ContractError("temperature must be positive");
  if (batch_size < 2) throw ContractError("contrastive batches need at least 2 instances");
  if (max_epochs < 1) throw ContractError("max_epochs must be at least 1");
  if (patience < 0 || patience > max_epochs) throw ContractError("patience must lie in [0, max_epochs]");
  if (!(lr > 0.0)) throw ContractError("learning rate must be positive");
}

PretrainResult pretrain_fold(const Dataset& d, int fold, const PretrainConfig& cfg) {
  cfg.validate();
  const FoldRows rows = fold_rows(d, fold);
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  if (batch > rows.train.size()) {
    throw ContractError("batch size " + std::to_string(batch) + " exceeds the " + std::to_string(rows.train.size()) +
                        " training records of fold " + std::to_string(fold));
  }
  if (rows.val.size() < 2) throw ContractError("validation session needs at least 2 records");

  Rng init(derive_seed(cfg.seed, {static_cast<std::uint64_t>(fold), kInitTag}));
  Rng order(derive_seed(cfg.seed, {static_cast<std::uint64_t>(fold), kShuffleTag}));
  std::vector<models::Encoder<float>> enc;
  std::vector<models::ProjectionHead<float>> heads;
  std::vector<Parameter<float>*> params;
  for (const auto& v : cfg.views) {
    enc.emplace_back(default_encoder_spec(d.manifest.view(v)), init);
    heads.emplace_back(enc.back().spec().output_dim, init);
  }
  for (std::size_t k = 0; k < enc.size(); ++k) {
    for (auto* p : models::parameter_ptrs(enc[k])) params.push_back(p);
    for (auto* p : heads[k].parameters()) params.push_back(p);
  }
  AdamState<float> adam(AdamConfig{.lr = cfg.lr});

  auto snapshot = [&](Index epoch) {
    models::Checkpoint c;
    for (std::size_t k = 0; k < enc.size(); ++k) models::store_encoder(c, enc[k]);
    for (std::size_t k = 0; k < enc.size(); ++k) models::store_projection(c, cfg.views[k], heads[k]);
    c.set_meta("tau", cfg.tau);
    c.set_meta("fold", fold);
    c.set_meta("seed", static_cast<double>(cfg.seed));
    c.set_meta("batch_size", static_cast<double>(cfg.batch_size));
    c.set_meta("epoch", static_cast<double>(epoch));
    return c;
  };

  PretrainResult out;
  out.fold = fold;
  const std::size_t val_chunk = std::min(batch, rows.val.size());
  double best = std::numeric_limits<double>::infinity();
  EarlyStopping stopper(cfg.patience);
  for (Index epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const std::vector<Index> perm = shuffled(rows.train, order);
    double train_loss = 0.0;
    std::size_t steps = 0;
    for (std::size_t s = 0; s + batch <= perm.size(); s += batch, ++steps) {
      train_loss += contrastive_batch(d, cfg, enc, heads, std::span(perm).subspan(s, batch), true);
      adam_step<float>(params, adam);
    }
    double val_loss = 0.0;
    std::size_t chunks = 0;
    for (std::size_t s = 0; s + val_chunk <= rows.val.size(); s += val_chunk, ++chunks) {
      val_loss += contrastive_batch(d, cfg, enc, heads, std::span(rows.val).subspan(s, val_chunk), false);
    }
    out.history.train.push_back(train_loss / static_cast<double>(steps));
    out.history.val.push_back(val_loss / static_cast<double>(chunks));
    out.history.lr.push_back(cfg.lr);
    out.history.stop_epoch = epoch;
    const bool improved = out.history.val.back() < best;
    if (improved) {
      best = out.history.val.back();
      out.history.best_epoch = epoch;
      out.checkpoint = snapshot(epoch);
    }
    if (stopper.observe(improved)) break;
  }
  out.checkpoint.set_meta("best_val_loss", best);
  return out;
}

std::vector<PretrainResult> pretrain(const Dataset& d, const std::vector<int>& folds, const PretrainConfig& cfg) {
  std::vector<PretrainResult> out(folds.size());
  parallel_for(static_cast<Index>(folds.size()),
               [&](Index i) { out[static_cast<std::size_t>(i)] = pretrain_fold(d, folds[static_cast<std::size_t>(i)], cfg); });
  return out;
}

void FinetuneConfig::validate() const {
  if (view.empty()) throw ContractError("fine-tuning needs a view");
  if (!(lr > 0.0)) throw ContractError("learning rate must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ContractError("lr decay must lie in (0, 1]");
  if (decay_patience < 1) throw ContractError("decay patience must be at least 1");
  if (max_epochs < 1) throw ContractError("max_epochs must be at least 1");
  if (patience < 0 || patience > max_epochs) throw ContractError("patience must lie in [0, max_epochs]");
  if (batch_size < 1) throw ContractError("batch size must be positive");
  if (!(label_fraction > 0.0 && label_fraction <= 1.0)) throw ContractError("label fraction must lie in (0, 1]");
}

models::Checkpoint FinetuneResult::checkpoint() {
  models::Checkpoint c;
  models::store_encoder(c, encoder);
  models::store_classifier(c, encoder.spec().view, classifier);
  c.set_meta("best_epoch", static_cast<double>(history.best_epoch));
  c.set_meta("val_uar", val.uar);
  return c;
}

TensorF encode_rows(models::Encoder<float>& encoder, const TensorF& inputs, std::span<const Index> rows) {
  TensorF out({static_cast<Index>(rows.size()), encoder.spec().output_dim});
  const auto chunk = static_cast<std::size_t>(kEvalChunk);
  for (std::size_t s = 0; s < rows.size(); s += chunk) {
    const std::size_t n = std::min(chunk, rows.size() - s);
    const TensorF reps = encoder.encode(take_rows(inputs, rows.subspan(s, n)));
    std::copy(reps.values().begin(), reps.values().end(), out.data() + static_cast<Index>(s) * encoder.spec().output_dim);
  }
  return out;
}

MetricsReport evaluate(models::Encoder<float>& encoder, models::ClassifierHead<float>& classifier, const Dataset& d,
                       std::span<const Index> rows) {
  require_labels(d, rows, "evaluation");
  const TensorF reps = encode_rows(encoder, d.view(encoder.spec().view), rows);
  const std::vector<Index> pred = argmax_rows(classifier.classify(reps));
  const std::vector<Index> truth = labels_of(d, rows);
  return metrics_from_predictions(truth, pred, classifier.classes());
}

FinetuneResult finetune(const Dataset& d, int fold, const FinetuneConfig& cfg, const models::Checkpoint* init) {
  cfg.validate();
  const FoldRows rows = fold_rows(d, fold);
  require_labels(d, rows.train, "training");
  require_labels(d, rows.val, "validation");
  require_labels(d, rows.test, "test");
  if (rows.train.empty() || rows.val.empty() || rows.test.empty()) throw EmptyDatasetError("fold has an empty partition");

  std::vector<Index> train_rows = rows.train;
  if (cfg.label_fraction < 1.0) {
    std::vector<data::UtteranceRecord> recs;
    for (Index r : rows.train) recs.push_back(d.manifest.records[static_cast<std::size_t>(r)]);
    const auto kept = data::sample_sparse_labels(recs, d.manifest.labels, cfg.label_fraction, cfg.label_seed);
    std::unordered_map<std::string, Index> by_id;
    for (Index r : rows.train) by_id[d.manifest.records[static_cast<std::size_t>(r)].id] = r;
    train_rows.clear();
    for (const auto& r : kept) train_rows.push_back(by_id.at(r.id));
  }

  const models::EncoderSpec spec = default_encoder_spec(d.manifest.view(cfg.view));
  Rng enc_rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(fold), kInitTag}));
  Rng clf_rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(fold), kClassifierTag}));
  Rng order(derive_seed(cfg.seed, {static_cast<std::uint64_t>(fold), kShuffleTag}));
  FinetuneResult out;
  out.encoder = models::Encoder<float>(spec, enc_rng);
  if (init != nullptr) models::restore_encoder(*init, out.encoder);
  out.classifier = models::ClassifierHead<float>(spec.output_dim, d.num_classes(), clf_rng);
  out.train_records = static_cast<Index>(train_rows.size());
  out.history.train_metric = "loss";
  out.history.val_metric = "uar";

  std::vector<Parameter<float>*> params = out.classifier.parameters();
  if (!cfg.freeze) {
    for (auto* p : models::parameter_ptrs(out.encoder)) params.push_back(p);
  }
  AdamState<float> adam(AdamConfig{.lr = cfg.lr});
  PlateauSchedule schedule(cfg.lr, cfg.lr_decay, cfg.decay_patience);
  EarlyStopping stopper(cfg.patience);

  const TensorF& inputs = d.view(cfg.view);
  // A frozen encoder is a fixed feature map, so its outputs are computed once.
  TensorF frozen_reps;
  std::vector<Index> frozen_slot(static_cast<std::size_t>(d.size()), -1);
  if (cfg.freeze) {
    frozen_reps = encode_rows(out.encoder, inputs, train_rows);
    for (std::size_t i = 0; i < train_rows.size(); ++i) frozen_slot[static_cast<std::size_t>(train_rows[i])] = static_cast<Index>(i);
  }

  models::Encoder<float> best_encoder = out.encoder;
  models::ClassifierHead<float> best_classifier = out.classifier;
  double best = -1.0;
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  for (Index epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const std::vector<Index> perm = shuffled(train_rows, order);
    double loss_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t s = 0; s < perm.size(); s += batch, ++steps) {
      const std::span<const Index> b = std::span(perm).subspan(s, std::min(batch, perm.size() - s));
      Tape<float> tape;
      Var<float> reps;
      if (cfg.freeze) {
        std::vector<Index> slots;
        for (Index r : b) slots.push_back(frozen_slot[static_cast<std::size_t>(r)]);
        reps = tape.constant(take_rows(frozen_reps, slots));
      } else {
        reps = out.encoder.forward(tape, tape.constant(take_rows(inputs, b)), true);
      }
      Var<float> loss = models::cross_entropy(out.classifier.logits(tape, reps, true), labels_of(d, b));
      tape.backward(loss);
      adam_step<float>(params, adam);
      loss_sum += static_cast<double>(loss.value()[0]);
    }
    const MetricsReport val = evaluate(out.encoder, out.classifier, d, rows.val);
    const bool improved = val.uar > best;
    if (improved) {
      best = val.uar;
      best_encoder = out.encoder;
      best_classifier = out.classifier;
      out.history.best_epoch = epoch;
    }
    adam.config.lr = schedule.observe(improved);
    out.history.train.push_back(loss_sum / static_cast<double>(steps));
    out.history.val.push_back(val.uar);
    out.history.lr.push_back(adam.config.lr);
    out.history.stop_epoch = epoch;
    if (stopper.observe(improved)) break;
  }
  out.encoder = std::move(best_encoder);
  out.classifier = std::move(best_classifier);
  out.val = evaluate(out.encoder, out.classifier, d, rows.val);
  out.test = evaluate(out.encoder, out.classifier, d, rows.test);
  out.val.fold = out.test.fold = fold;
  out.val.seed = out.test.seed = cfg.seed;
  return out;
}

}  // namespace pcl::train
