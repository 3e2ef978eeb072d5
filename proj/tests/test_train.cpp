#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "pcl/core/errors.hpp"
#include "pcl/data/synth.hpp"
#include "pcl/models/checkpoint.hpp"
#include "pcl/train/experiments.hpp"
#include "support.hpp"

using namespace pcl;
using namespace pcl::train;
namespace tc = pcl::testing;

namespace {

const std::vector<std::string> kViews = {"w2v2", "spec", "egemaps"};

PretrainConfig small_pretrain(std::uint64_t seed = 1) {
  PretrainConfig cfg;
  cfg.views = kViews;
  cfg.batch_size = 16;
  cfg.max_epochs = cfg.patience = 20;
  cfg.seed = seed;
  return cfg;
}

FinetuneConfig small_finetune(const std::string& view, bool freeze, std::uint64_t seed = 2) {
  FinetuneConfig cfg;
  cfg.view = view;
  cfg.freeze = freeze;
  cfg.max_epochs = cfg.patience = 8;
  cfg.batch_size = 16;
  cfg.seed = seed;
  return cfg;
}

std::string checkpoint_bytes(const models::Checkpoint& c, const tc::TempDir& dir, const std::string& name) {
  save_checkpoint(dir.str(name), c);
  const auto bytes = tc::file_bytes(dir.str(name));
  return {bytes.begin(), bytes.end()};
}

class TrainFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new tc::TempDir("train");
    manifest_ = new data::Manifest(data::synth_generate(tc::tiny_synth(20), 9, dir_->str()));
    data_ = new Dataset(load_dataset(*manifest_, kViews));
  }
  static void TearDownTestSuite() {
    delete data_;
    delete manifest_;
    delete dir_;
  }
  static const Dataset& data() { return *data_; }
  static const data::Manifest& manifest() { return *manifest_; }

 private:
  static inline tc::TempDir* dir_ = nullptr;
  static inline data::Manifest* manifest_ = nullptr;
  static inline Dataset* data_ = nullptr;
};

}  // namespace

TEST(Metrics, PerfectPredictions) {
  const std::vector<Index> truth = {0, 1, 2, 3, 0, 1};
  const MetricsReport m = metrics_from_predictions(truth, truth, 4);
  EXPECT_EQ(m.uar, 1.0);
  EXPECT_EQ(m.wa, 1.0);
  EXPECT_EQ(m.total(), 6);
}

TEST(Metrics, ConstantPredictorOnBalancedClasses) {
  const std::vector<Index> truth = {0, 1, 2, 3, 0, 1, 2, 3};
  const std::vector<Index> pred(8, 0);
  const MetricsReport m = metrics_from_predictions(truth, pred, 4);
  EXPECT_DOUBLE_EQ(m.uar, 0.25);
  EXPECT_DOUBLE_EQ(m.wa, 0.25);
}

TEST(Metrics, HandComputedConfusion) {
  const MetricsReport m = metrics_from_confusion({{2, 0}, {1, 1}});
  EXPECT_EQ(m.recalls, (std::vector<double>{1.0, 0.5}));
  EXPECT_DOUBLE_EQ(m.uar, 0.75);
  EXPECT_DOUBLE_EQ(m.wa, 0.75);
}

TEST(Metrics, AbsentClassIsExcluded) {
  const MetricsReport m = metrics_from_confusion({{3, 1, 0}, {0, 0, 0}, {0, 2, 2}});
  EXPECT_TRUE(std::isnan(m.recalls[1]));
  EXPECT_EQ(m.absent_classes, (std::vector<Index>{1}));
  EXPECT_DOUBLE_EQ(m.uar, (0.75 + 0.5) / 2.0);
  EXPECT_DOUBLE_EQ(m.wa, 5.0 / 8.0);
  EXPECT_EQ(metrics_csv_header(), "fold,seed,uar,wa,n,absent_classes");
}

TEST(Metrics, ArgmaxTakesFirstMaximum) {
  const TensorF scores({3, 3}, {0.2f, 0.5f, 0.5f, 1.0f, 0.0f, 0.0f, 0.1f, 0.1f, 0.3f});
  EXPECT_EQ(argmax_rows(scores), (std::vector<Index>{1, 0, 2}));
}

TEST(Schedule, PlateauTrace) {
  PlateauSchedule s(0.001, 0.9, 5);
  std::vector<double> trace;
  for (int e = 1; e <= 12; ++e) trace.push_back(s.observe(false));
  for (int e = 0; e < 4; ++e) EXPECT_EQ(trace[e], 0.001);
  EXPECT_DOUBLE_EQ(trace[4], 0.0009);
  EXPECT_DOUBLE_EQ(trace[8], 0.0009);
  EXPECT_DOUBLE_EQ(trace[9], 0.00081);
  EXPECT_DOUBLE_EQ(trace[11], 0.00081);
  for (std::size_t e = 1; e < trace.size(); ++e) EXPECT_LE(trace[e], trace[e - 1]);
}

TEST(Schedule, ImprovementResetsThePlateau) {
  PlateauSchedule s(1.0, 0.5, 3);
  s.observe(false);
  s.observe(false);
  s.observe(true);
  s.observe(false);
  s.observe(false);
  EXPECT_EQ(s.lr(), 1.0);
  EXPECT_EQ(s.observe(false), 0.5);
}

TEST(Schedule, EarlyStoppingPatience) {
  EarlyStopping zero(0);
  EXPECT_FALSE(zero.observe(true));
  EXPECT_TRUE(zero.observe(false));
  EarlyStopping three(3);
  EXPECT_FALSE(three.observe(false));
  EXPECT_FALSE(three.observe(false));
  EXPECT_FALSE(three.observe(true));
  EXPECT_FALSE(three.observe(false));
  EXPECT_FALSE(three.observe(false));
  EXPECT_TRUE(three.observe(false));
}

TEST(History, HexLines) {
  TrainHistory h;
  h.train = {1.5};
  h.val = {0.25};
  h.lr = {0.001};
  h.best_epoch = h.stop_epoch = 1;
  std::ostringstream os;
  write_history(os, h);
  EXPECT_EQ(os.str(), "1 train_loss " + models::format_hex(1.5) + "\n1 val_loss " + models::format_hex(0.25) +
                          "\n1 lr " + models::format_hex(0.001) + "\nbest_epoch 1\nstop_epoch 1\n");
}

TEST_F(TrainFixture, PretrainingLowersValidationLoss) {
  const PretrainResult r = pretrain_fold(data(), 0, small_pretrain());
  ASSERT_GE(r.history.val.size(), 2u);
  const double best = r.history.val[static_cast<std::size_t>(r.history.best_epoch - 1)];
  EXPECT_LT(best, r.history.val.front());
  for (double v : r.history.val) EXPECT_GE(v, best);
  EXPECT_LE(r.history.best_epoch, r.history.stop_epoch);
  EXPECT_EQ(r.checkpoint.meta_double("epoch"), static_cast<double>(r.history.best_epoch));
  for (const auto& v : kViews) {
    EXPECT_NE(r.checkpoint.find(v + "/projection/fc1.weight"), nullptr) << v;
  }
}

TEST_F(TrainFixture, PretrainingIsDeterministic) {
  tc::TempDir dir("ckpt");
  PretrainConfig cfg = small_pretrain(5);
  cfg.max_epochs = cfg.patience = 4;
  const PretrainResult a = pretrain_fold(data(), 1, cfg);
  const PretrainResult b = pretrain_fold(data(), 1, cfg);
  EXPECT_EQ(a.history, b.history);
  EXPECT_EQ(checkpoint_bytes(a.checkpoint, dir, "a"), checkpoint_bytes(b.checkpoint, dir, "b"));
  cfg.seed = 6;
  EXPECT_NE(pretrain_fold(data(), 1, cfg).history, a.history);
}

TEST_F(TrainFixture, PatienceZeroStopsAtFirstStall) {
  PretrainConfig cfg = small_pretrain();
  cfg.patience = 0;
  cfg.lr = 0.05;
  const PretrainResult r = pretrain_fold(data(), 0, cfg);
  const auto& val = r.history.val;
  for (std::size_t e = 1; e + 1 < val.size(); ++e) {
    double best = val[0];
    for (std::size_t k = 1; k < e; ++k) best = std::min(best, val[k]);
    EXPECT_LT(val[e], best) << "training continued past a stall at epoch " << e + 1;
  }
}

TEST_F(TrainFixture, PretrainContractErrors) {
  PretrainConfig cfg = small_pretrain();
  cfg.batch_size = 49;
  EXPECT_THROW(pretrain_fold(data(), 0, cfg), ContractError);
  cfg = small_pretrain();
  cfg.views = {"w2v2"};
  EXPECT_THROW(pretrain_fold(data(), 0, cfg), ContractError);
  cfg = small_pretrain();
  cfg.batch_size = 1;
  EXPECT_THROW(cfg.validate(), ContractError);
}

TEST_F(TrainFixture, FrozenEncoderIsBitIdentical) {
  PretrainConfig pc = small_pretrain();
  pc.max_epochs = pc.patience = 3;
  const models::Checkpoint ckpt = pretrain_fold(data(), 0, pc).checkpoint;
  for (const auto& view : kViews) {
    models::Encoder<float> before(models::find_encoder_spec(ckpt, view), std::uint64_t{0});
    models::restore_encoder(ckpt, before);
    FinetuneResult frozen = finetune(data(), 0, small_finetune(view, true), &ckpt);
    FinetuneResult tuned = finetune(data(), 0, small_finetune(view, false), &ckpt);
    bool tuned_moved = false;
    for (std::size_t p = 0; p < before.parameters().size(); ++p) {
      const auto& ref = before.parameters()[p].value.values();
      EXPECT_TRUE(std::equal(ref.begin(), ref.end(), frozen.encoder.parameters()[p].value.values().begin()))
          << view << " " << before.parameters()[p].name;
      tuned_moved = tuned_moved || !std::equal(ref.begin(), ref.end(), tuned.encoder.parameters()[p].value.values().begin());
    }
    EXPECT_TRUE(tuned_moved) << view;
  }
}

TEST_F(TrainFixture, FinetuneIsDeterministicAndBounded) {
  tc::TempDir dir("ckpt");
  FinetuneResult a = finetune(data(), 2, small_finetune("egemaps", false));
  FinetuneResult b = finetune(data(), 2, small_finetune("egemaps", false));
  EXPECT_EQ(a.history, b.history);
  EXPECT_EQ(checkpoint_bytes(a.checkpoint(), dir, "a"), checkpoint_bytes(b.checkpoint(), dir, "b"));
  EXPECT_EQ(a.test.uar, b.test.uar);
  EXPECT_GE(a.test.uar, 0.0);
  EXPECT_LE(a.test.uar, 1.0);
  EXPECT_EQ(a.test.fold, 2);
  EXPECT_EQ(a.val.uar, a.history.val[static_cast<std::size_t>(a.history.best_epoch - 1)]);
  for (double v : a.history.val) EXPECT_LE(v, a.val.uar);
}

TEST_F(TrainFixture, SparseFractionLimitsTrainingRecords) {
  FinetuneConfig cfg = small_finetune("egemaps", false);
  cfg.label_fraction = 0.25;
  EXPECT_EQ(finetune(data(), 0, cfg).train_records, 4 * 3);
  cfg.label_fraction = 1.0;
  EXPECT_EQ(finetune(data(), 0, cfg).train_records, 48);
}

TEST_F(TrainFixture, CheckpointSpecMismatchIsSchemaError) {
  PretrainConfig pc = small_pretrain();
  pc.max_epochs = pc.patience = 1;
  pc.views = {"spec", "egemaps"};
  const models::Checkpoint ckpt = pretrain_fold(data(), 0, pc).checkpoint;
  EXPECT_THROW(finetune(data(), 0, small_finetune("w2v2", false), &ckpt), SchemaError);
}

TEST_F(TrainFixture, TestLabelsNeverReachTheWeights) {
  tc::TempDir dir("iso");
  const int fold = 0;
  const int test_session = make_cv_splits(manifest(), fold).test;
  data::Manifest perturbed = manifest();
  for (auto& r : perturbed.records) {
    if (r.session == test_session) r.label = perturbed.labels[(perturbed.label_index(*r.label) + 1) % 4];
  }
  const Dataset other = load_dataset(perturbed, kViews);

  PretrainConfig pc = small_pretrain();
  pc.max_epochs = pc.patience = 3;
  const PretrainResult pa = pretrain_fold(data(), fold, pc);
  const PretrainResult pb = pretrain_fold(other, fold, pc);
  EXPECT_EQ(checkpoint_bytes(pa.checkpoint, dir, "pa"), checkpoint_bytes(pb.checkpoint, dir, "pb"));

  FinetuneResult fa = finetune(data(), fold, small_finetune("spec", false), &pa.checkpoint);
  FinetuneResult fb = finetune(other, fold, small_finetune("spec", false), &pb.checkpoint);
  EXPECT_EQ(checkpoint_bytes(fa.checkpoint(), dir, "fa"), checkpoint_bytes(fb.checkpoint(), dir, "fb"));
  EXPECT_EQ(fa.history, fb.history);
  EXPECT_NE(fa.test.uar, fb.test.uar);
}

TEST_F(TrainFixture, SparseExperimentSchema) {
  PretrainConfig pc = small_pretrain();
  pc.max_epochs = pc.patience = 2;
  const std::map<int, models::Checkpoint> pre = {{0, pretrain_fold(data(), 0, pc).checkpoint}};
  SparseConfig cfg;
  cfg.fractions = {0.25, 1.0};
  cfg.repeats = 3;
  cfg.finetune = small_finetune("egemaps", false);
  cfg.finetune.max_epochs = cfg.finetune.patience = 3;
  const SparseResult r = run_sparse_experiment(data(), cfg, pre);
  ASSERT_EQ(r.rows.size(), 4u);
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.n, 3);
    EXPECT_GE(row.ci_half_width, 0.0);
    EXPECT_TRUE(row.arm == kArmPretrained || row.arm == kArmScratch);
  }
  EXPECT_EQ(r.rows[0].test.p_value, r.rows[1].test.p_value);
  EXPECT_EQ(sparse_csv_header(), "fraction,arm,mean_uar,ci_half_width,n,p_value,method");
  EXPECT_EQ(run_sparse_experiment(data(), cfg, pre).uars, r.uars);

  cfg.folds = {1};
  EXPECT_THROW(run_sparse_experiment(data(), cfg, pre), ContractError);
}

TEST(Grid, SingleRowRanksAreOne) {
  std::vector<GridRow> rows(1);
  rows[0].cells["w2v2"] = {0.5, 0.6, 0.4, 0.45};
  assign_average_ranks(rows, {"w2v2"});
  EXPECT_EQ(rows[0].avg_rank_val, 1.0);
  EXPECT_EQ(rows[0].avg_rank_test, 1.0);
}

TEST(Grid, RanksAverageOverColumns) {
  std::vector<GridRow> rows(3);
  const double val[3] = {0.3, 0.1, 0.2};
  for (int i = 0; i < 3; ++i) rows[static_cast<std::size_t>(i)].cells["a"] = {val[i], val[i], 0.5, 0.5};
  assign_average_ranks(rows, {"a"});
  EXPECT_EQ(rows[0].avg_rank_val, 1.0);
  EXPECT_EQ(rows[1].avg_rank_val, 3.0);
  EXPECT_EQ(rows[2].avg_rank_val, 2.0);
  for (const auto& r : rows) EXPECT_EQ(r.avg_rank_test, 2.0);
}
