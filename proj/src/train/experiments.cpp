#include "pcl/train/experiments.hpp"

#include <fstream>
#include <sstream>

namespace pcl::train {

namespace {

enum SparseTag : std::uint64_t { kLabelTag = 11, kRunTag = 12 };

struct Job {
  std::size_t fraction;
  Index repeat;
  std::string arm;
  std::size_t fold;
};

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  os.precision(17);
  return os;
}

}  // namespace

void SparseConfig::validate() const {
  if (fractions.empty()) throw ContractError("sparse experiment needs at least one label fraction");
  for (double p : fractions) {
    if (!(p > 0.0 && p <= 1.0)) throw ContractError("label fractions must lie in (0, 1]");
  }
  if (repeats < 2) throw ContractError("sparse experiment needs at least 2 repeats");
  if (folds.empty()) throw ContractError("sparse experiment needs at least one fold");
  finetune.validate();
}

SparseResult run_sparse_experiment(const Dataset& d, const SparseConfig& cfg,
                                   const std::map<int, models::Checkpoint>& pretrained) {
  cfg.validate();
  for (int f : cfg.folds) {
    if (!pretrained.count(f)) throw ContractError("no pre-trained checkpoint for fold " + std::to_string(f));
  }
  std::vector<Job> jobs;
  for (std::size_t p = 0; p < cfg.fractions.size(); ++p) {
    for (Index r = 0; r < cfg.repeats; ++r) {
      for (const char* arm : {kArmPretrained, kArmScratch}) {
        for (std::size_t f = 0; f < cfg.folds.size(); ++f) jobs.push_back({p, r, arm, f});
      }
    }
  }
  std::vector<double> uar(jobs.size());
  parallel_for(static_cast<Index>(jobs.size()), [&](Index j) {
    const Job& job = jobs[static_cast<std::size_t>(j)];
    FinetuneConfig fc = cfg.finetune;
    fc.label_fraction = cfg.fractions[job.fraction];
    // Paired arms: seeds depend on (fraction, repeat) only.
    fc.label_seed = derive_seed(cfg.seed, {kLabelTag, job.fraction, static_cast<std::uint64_t>(job.repeat)});
    fc.seed = derive_seed(cfg.seed, {kRunTag, job.fraction, static_cast<std::uint64_t>(job.repeat)});
    const int fold = cfg.folds[job.fold];
    const models::Checkpoint* init = job.arm == kArmPretrained ? &pretrained.at(fold) : nullptr;
    uar[static_cast<std::size_t>(j)] = finetune(d, fold, fc, init).test.uar;
  });

  SparseResult out;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    auto& v = out.uars[{jobs[j].fraction, jobs[j].arm}];
    if (v.size() < static_cast<std::size_t>(cfg.repeats)) v.resize(static_cast<std::size_t>(cfg.repeats), 0.0);
    v[static_cast<std::size_t>(jobs[j].repeat)] += uar[j] / static_cast<double>(cfg.folds.size());
  }
  for (std::size_t p = 0; p < cfg.fractions.size(); ++p) {
    const auto& a = out.uars.at({p, kArmPretrained});
    const auto& b = out.uars.at({p, kArmScratch});
    const analysis::SignificanceResult sig = analysis::mann_whitney_u(a, b);
    for (const auto* arm : {&a, &b}) {
      const analysis::MeanCi ci = analysis::mean_ci95(*arm);
      out.rows.push_back({cfg.fractions[p], arm == &a ? kArmPretrained : kArmScratch, ci.mean, ci.half_width,
                          static_cast<Index>(arm->size()), sig});
    }
  }
  return out;
}

std::string sparse_csv_header() { return "fraction,arm,mean_uar,ci_half_width,n,p_value,method"; }

std::string sparse_csv_row(const SparseRow& r) {
  std::ostringstream os;
  os.precision(17);
  os << r.fraction << ',' << r.arm << ',' << r.mean_uar << ',' << r.ci_half_width << ',' << r.n << ','
     << r.test.p_value << ',' << analysis::to_string(r.test.method);
  return os.str();
}

void write_sparse_csv(const std::string& path, const SparseResult& result) {
  std::ofstream os = open_out(path);
  os << sparse_csv_header() << '\n';
  for (const auto& r : result.rows) os << sparse_csv_row(r) << '\n';
}

void GridConfig::validate() const {
  if (taus.empty() && !include_supervised) throw ContractError("temperature grid is empty");
  if (freeze_options.empty()) throw ContractError("grid needs at least one freeze option");
  if (folds.empty()) throw ContractError("grid needs at least one fold");
  if (views.empty()) throw ContractError("grid needs at least one view to fine-tune");
}

std::vector<GridRow> run_temperature_grid(const Dataset& d, const GridConfig& cfg) {
  cfg.validate();
  const std::size_t n_folds = cfg.folds.size();

  // Pre-training, one job per (tau, fold).
  std::vector<PretrainResult> pre(cfg.taus.size() * n_folds);
  parallel_for(static_cast<Index>(pre.size()), [&](Index j) {
    PretrainConfig pc = cfg.pretrain;
    pc.tau = cfg.taus[static_cast<std::size_t>(j) / n_folds];
    pre[static_cast<std::size_t>(j)] = pretrain_fold(d, cfg.folds[static_cast<std::size_t>(j) % n_folds], pc);
  });

  std::vector<GridRow> rows;
  struct Cell {
    std::size_t row;
    std::ptrdiff_t tau;  // -1 for supervised
  };
  std::vector<Cell> cells;
  if (cfg.include_supervised) {
    rows.push_back({"supervised", 0.0, false, {}, 1.0, 1.0});
    cells.push_back({0, -1});
  }
  for (std::size_t t = 0; t < cfg.taus.size(); ++t) {
    for (bool freeze : cfg.freeze_options) {
      rows.push_back({"pairwise-cl", cfg.taus[t], freeze, {}, 1.0, 1.0});
      cells.push_back({rows.size() - 1, static_cast<std::ptrdiff_t>(t)});
    }
  }

  // Fine-tuning, one job per (cell, view, fold).
  const std::size_t per_cell = cfg.views.size() * n_folds;
  std::vector<FinetuneResult> fine(cells.size() * per_cell);
  parallel_for(static_cast<Index>(fine.size()), [&](Index j) {
    const auto ju = static_cast<std::size_t>(j);
    const Cell& cell = cells[ju / per_cell];
    const std::size_t v = (ju % per_cell) / n_folds;
    const std::size_t f = ju % n_folds;
    FinetuneConfig fc = cfg.finetune;
    fc.view = cfg.views[v];
    fc.freeze = rows[cell.row].freeze;
    const models::Checkpoint* init =
        cell.tau < 0 ? nullptr : &pre[static_cast<std::size_t>(cell.tau) * n_folds + f].checkpoint;
    fine[ju] = finetune(d, cfg.folds[f], fc, init);
  });

  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (std::size_t v = 0; v < cfg.views.size(); ++v) {
      CellMetrics m;
      for (std::size_t f = 0; f < n_folds; ++f) {
        const FinetuneResult& r = fine[c * per_cell + v * n_folds + f];
        m.val_uar += r.val.uar / static_cast<double>(n_folds);
        m.val_wa += r.val.wa / static_cast<double>(n_folds);
        m.test_uar += r.test.uar / static_cast<double>(n_folds);
        m.test_wa += r.test.wa / static_cast<double>(n_folds);
      }
      rows[cells[c].row].cells[cfg.views[v]] = m;
    }
  }
  assign_average_ranks(rows, cfg.views);
  return rows;
}

void assign_average_ranks(std::vector<GridRow>& rows, const std::vector<std::string>& views) {
  std::vector<double> val(rows.size(), 0.0), test(rows.size(), 0.0);
  std::size_t val_cols = 0, test_cols = 0;
  auto add_column = [&](std::vector<double>& acc, std::size_t& cols, double CellMetrics::*field, const std::string& view) {
    std::vector<double> scores;
    for (const auto& r : rows) scores.push_back(r.cells.at(view).*field);
    const std::vector<double> ranks = analysis::average_ranks(scores);
    for (std::size_t i = 0; i < rows.size(); ++i) acc[i] += ranks[i];
    ++cols;
  };
  for (const auto& v : views) {
    add_column(val, val_cols, &CellMetrics::val_uar, v);
    add_column(val, val_cols, &CellMetrics::val_wa, v);
    add_column(test, test_cols, &CellMetrics::test_uar, v);
    add_column(test, test_cols, &CellMetrics::test_wa, v);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].avg_rank_val = val_cols ? val[i] / static_cast<double>(val_cols) : 1.0;
    rows[i].avg_rank_test = test_cols ? test[i] / static_cast<double>(test_cols) : 1.0;
  }
}

void write_grid_csv(const std::string& path, const std::vector<GridRow>& rows, const std::vector<std::string>& views) {
  std::ofstream os = open_out(path);
  const bool ranks = rows.size() >= 2;
  os << "method,tau,freeze";
  for (const auto& v : views) os << ',' << v << "_val_uar," << v << "_val_wa," << v << "_test_uar," << v << "_test_wa";
  if (ranks) os << ",avg_rank_val,avg_rank_test";
  os << '\n';
  for (const auto& r : rows) {
    os << r.method << ',';
    if (r.method == "supervised") {
      os << '-';
    } else {
      os << r.tau;
    }
    os << ',' << (r.freeze ? 1 : 0);
    for (const auto& v : views) {
      const CellMetrics& m = r.cells.at(v);
      os << ',' << m.val_uar << ',' << m.val_wa << ',' << m.test_uar << ',' << m.test_wa;
    }
    if (ranks) os << ',' << r.avg_rank_val << ',' << r.avg_rank_test;
    os << '\n';
  }
}

}  // namespace pcl::train
