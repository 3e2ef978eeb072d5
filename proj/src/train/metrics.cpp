#include "pcl/train/metrics.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace pcl::train {

Index MetricsReport::total() const {
  Index n = 0;
  for (const auto& row : confusion) {
    for (Index v : row) n += v;
  }
  return n;
}

MetricsReport metrics_from_confusion(std::vector<std::vector<Index>> confusion) {
  const std::size_t c = confusion.size();
  for (const auto& row : confusion) {
    if (row.size() != c) throw ShapeError("confusion matrix must be square");
  }
  MetricsReport m;
  m.confusion = std::move(confusion);
  Index correct = 0, total = 0, present = 0;
  double recall_sum = 0.0;
  for (std::size_t t = 0; t < c; ++t) {
    Index support = 0;
    for (Index v : m.confusion[t]) support += v;
    total += support;
    correct += m.confusion[t][t];
    if (support == 0) {
      m.recalls.push_back(std::numeric_limits<double>::quiet_NaN());
      m.absent_classes.push_back(static_cast<Index>(t));
      continue;
    }
    const double r = static_cast<double>(m.confusion[t][t]) / static_cast<double>(support);
    m.recalls.push_back(r);
    recall_sum += r;
    ++present;
  }
  if (total == 0) throw ContractError("metrics need at least one labeled record");
  m.uar = recall_sum / static_cast<double>(present);
  m.wa = static_cast<double>(correct) / static_cast<double>(total);
  return m;
}

MetricsReport metrics_from_predictions(std::span<const Index> truth, std::span<const Index> predicted, Index classes) {
  if (truth.size() != predicted.size()) throw ShapeError("truth and predictions differ in length");
  std::vector<std::vector<Index>> conf(static_cast<std::size_t>(classes), std::vector<Index>(static_cast<std::size_t>(classes), 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= classes || predicted[i] < 0 || predicted[i] >= classes) {
      throw ContractError("class index outside [0, " + std::to_string(classes) + ")");
    }
    ++conf[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
  }
  return metrics_from_confusion(std::move(conf));
}

std::vector<Index> argmax_rows(const TensorF& scores) {
  const auto m = scores.rows_view();
  std::vector<Index> out(static_cast<std::size_t>(m.rows()));
  for (Index r = 0; r < m.rows(); ++r) {
    Index best = 0;
    for (Index c = 1; c < m.cols(); ++c) {
      if (m(r, c) > m(r, best)) best = c;
    }
    out[static_cast<std::size_t>(r)] = best;
  }
  return out;
}

std::string metrics_csv_header() { return "fold,seed,uar,wa,n,absent_classes"; }

std::string metrics_csv_row(const MetricsReport& m) {
  std::ostringstream os;
  os.precision(17);
  os << m.fold << ',' << m.seed << ',' << m.uar << ',' << m.wa << ',' << m.total() << ',';
  for (std::size_t i = 0; i < m.absent_classes.size(); ++i) os << (i ? ";" : "") << m.absent_classes[i];
  return os.str();
}

}  // namespace pcl::train
