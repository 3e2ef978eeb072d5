#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pcl/core/tensor.hpp"

namespace pcl::train {

struct MetricsReport {
  /// confusion[t][p]: records of true class t predicted as p.
  std::vector<std::vector<Index>> confusion;
  /// Per-class recall; NaN for a class with no true instances.
  std::vector<double> recalls;
  double uar = 0.0;
  double wa = 0.0;
  /// Classes without support, left out of the UAR mean.
  std::vector<Index> absent_classes;
  int fold = -1;
  std::uint64_t seed = 0;

  Index total() const;
};

MetricsReport metrics_from_confusion(std::vector<std::vector<Index>> confusion);
MetricsReport metrics_from_predictions(std::span<const Index> truth, std::span<const Index> predicted, Index classes);

/// Row-wise argmax of [N, C] scores; the first maximum wins.
std::vector<Index> argmax_rows(const TensorF& scores);

/// CSV header `fold,seed,uar,wa,n,absent_classes` and a matching row.
std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsReport& m);

}  // namespace pcl::train
