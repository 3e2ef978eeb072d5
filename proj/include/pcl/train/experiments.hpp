#pragma once

#include <map>
#include <string>
#include <vector>

#include "pcl/analysis/stats.hpp"
#include "pcl/train/trainer.hpp"

namespace pcl::train {

inline constexpr const char* kArmPretrained = "pretrained";
inline constexpr const char* kArmScratch = "scratch";

struct SparseConfig {
  std::vector<double> fractions = {0.02, 0.05, 0.10, 0.25};
  Index repeats = 10;
  std::vector<int> folds = {0};
  /// view, freeze and schedule; seeds are derived per repeat.
  FinetuneConfig finetune;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SparseRow {
  double fraction = 0.0;
  std::string arm;
  double mean_uar = 0.0;
  double ci_half_width = 0.0;
  Index n = 0;
  analysis::SignificanceResult test;
};

struct SparseResult {
  std::vector<SparseRow> rows;
  /// Test UAR per repeat (averaged over folds), keyed by (fraction index, arm).
  std::map<std::pair<std::size_t, std::string>, std::vector<double>> uars;
};

/// Both arms consume the same label subset and classifier seed for each
/// (fraction, repeat); only the encoder initialization differs. The
/// pre-trained arm needs a checkpoint for every fold in `cfg.folds`.
SparseResult run_sparse_experiment(const Dataset& data, const SparseConfig& cfg,
                                   const std::map<int, models::Checkpoint>& pretrained);

/// Header `fraction,arm,mean_uar,ci_half_width,n,p_value,method`.
std::string sparse_csv_header();
std::string sparse_csv_row(const SparseRow& row);
void write_sparse_csv(const std::string& path, const SparseResult& result);

struct GridConfig {
  std::vector<double> taus = {0.1, 0.25, 0.5, 1.0};
  std::vector<bool> freeze_options = {false, true};
  std::vector<int> folds = {0, 1, 2, 3, 4};
  /// Views fine-tuned and reported; every one of them is also pre-trained.
  std::vector<std::string> views;
  /// Adds the supervised-from-scratch reference row.
  bool include_supervised = true;
  PretrainConfig pretrain;
  FinetuneConfig finetune;

  void validate() const;
};

struct CellMetrics {
  double val_uar = 0.0;
  double val_wa = 0.0;
  double test_uar = 0.0;
  double test_wa = 0.0;
};

struct GridRow {
  std::string method;  // "supervised" or "pairwise-cl"
  double tau = 0.0;
  bool freeze = false;
  std::map<std::string, CellMetrics> cells;
  double avg_rank_val = 1.0;
  double avg_rank_test = 1.0;
};

/// Per-fold pre-training for each tau, fine-tuning of every view for each
/// freeze option, fold means, then average ranks over the val and test
/// metric columns.
std::vector<GridRow> run_temperature_grid(const Dataset& data, const GridConfig& cfg);

/// Fills avg_rank_val / avg_rank_test from the cells.
void assign_average_ranks(std::vector<GridRow>& rows, const std::vector<std::string>& views);

/// Rank columns are written only when there are at least two rows.
void write_grid_csv(const std::string& path, const std::vector<GridRow>& rows, const std::vector<std::string>& views);

}  // namespace pcl::train
