#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pcl/models/checkpoint.hpp"
#include "pcl/train/dataset.hpp"
#include "pcl/train/metrics.hpp"

namespace pcl::train {

/// Per-epoch trace of one training run. Epochs are 1-based; `lr[e-1]` is
/// the rate in effect after epoch e.
struct TrainHistory {
  std::string train_metric = "loss";
  std::string val_metric = "loss";
  std::vector<double> train;
  std::vector<double> val;
  std::vector<double> lr;
  Index best_epoch = 0;
  Index stop_epoch = 0;

  friend bool operator==(const TrainHistory&, const TrainHistory&) = default;
};

/// Line-oriented text: `epoch <metric> <value>` rows followed by
/// `best_epoch` and `stop_epoch` rows. Values are hex floats.
void write_history(std::ostream& os, const TrainHistory& h);
void save_history(const std::string& path, const TrainHistory& h);

/// Early-stopping counter: stop once `patience` epochs in a row failed to
/// improve, and at least one did.
class EarlyStopping {
 public:
  explicit EarlyStopping(Index patience) : patience_(patience) {}
  /// Returns true when training should stop after this epoch.
  bool observe(bool improved) {
    since_ = improved ? 0 : since_ + 1;
    return since_ > 0 && since_ >= patience_;
  }

 private:
  Index patience_;
  Index since_ = 0;
};

/// Multiplies the rate by `factor` after every `patience` consecutive
/// epochs without improvement.
class PlateauSchedule {
 public:
  PlateauSchedule(double lr, double factor, Index patience) : lr_(lr), factor_(factor), patience_(patience) {}
  double observe(bool improved) {
    since_ = improved ? 0 : since_ + 1;
    if (since_ == patience_) {
      lr_ *= factor_;
      since_ = 0;
    }
    return lr_;
  }
  double lr() const { return lr_; }

 private:
  double lr_;
  double factor_;
  Index patience_;
  Index since_ = 0;
};

struct PretrainConfig {
  std::vector<std::string> views;
  double tau = 0.5;
  Index batch_size = 128;
  Index max_epochs = 100;
  Index patience = 30;
  double lr = 1e-3;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PretrainResult {
  int fold = 0;
  /// Encoders and projection heads at the best validation epoch.
  models::Checkpoint checkpoint;
  TrainHistory history;
};

/// Contrastive pre-training on the training sessions of `fold`. Labels are
/// not read. The validation session drives early stopping; the test session
/// is never touched.
PretrainResult pretrain_fold(const Dataset& data, int fold, const PretrainConfig& cfg);

/// One run per fold, fanned out over the worker pool.
std::vector<PretrainResult> pretrain(const Dataset& data, const std::vector<int>& folds, const PretrainConfig& cfg);

struct FinetuneConfig {
  std::string view;
  bool freeze = false;
  double lr = 1e-3;
  double lr_decay = 0.9;
  Index decay_patience = 5;
  Index max_epochs = 100;
  Index patience = 20;
  Index batch_size = 32;
  /// Per-class share of training labels; 1 keeps them all.
  double label_fraction = 1.0;
  /// Initialization and shuffling.
  std::uint64_t seed = 0;
  /// Draw of the sparse label subset.
  std::uint64_t label_seed = 0;

  void validate() const;
};

struct FinetuneResult {
  models::Encoder<float> encoder;
  models::ClassifierHead<float> classifier;
  MetricsReport val;
  MetricsReport test;
  TrainHistory history;
  Index train_records = 0;

  /// Encoder and classifier of the best validation epoch.
  models::Checkpoint checkpoint();
};

/// Supervised training of encoder + classifier for one view. With `init`
/// the encoder starts from the pre-trained weights (projection heads are
/// ignored); otherwise it is freshly initialized. The best validation-UAR
/// epoch is evaluated on the test session.
FinetuneResult finetune(const Dataset& data, int fold, const FinetuneConfig& cfg,
                        const models::Checkpoint* init = nullptr);

/// Forward pass over `rows` of `data` in fixed chunks; returns [N, 128].
TensorF encode_rows(models::Encoder<float>& encoder, const TensorF& inputs, std::span<const Index> rows);

MetricsReport evaluate(models::Encoder<float>& encoder, models::ClassifierHead<float>& classifier, const Dataset& data,
                       std::span<const Index> rows);

}  // namespace pcl::train
