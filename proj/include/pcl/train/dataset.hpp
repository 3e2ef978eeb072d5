#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pcl/data/manifest.hpp"
#include "pcl/models/encoders.hpp"

namespace pcl::train {

/// Manifest plus every requested view stacked in memory, row-aligned with
/// `manifest.records`.
struct Dataset {
  data::Manifest manifest;
  std::map<std::string, TensorF> views;
  /// Index into `manifest.labels`, or -1 for an unlabeled record or a label
  /// outside the label set.
  std::vector<Index> labels;

  Index size() const { return static_cast<Index>(manifest.records.size()); }
  Index num_classes() const { return static_cast<Index>(manifest.labels.size()); }
  const TensorF& view(const std::string& name) const;
  std::vector<Index> indices_in_sessions(const std::vector<int>& sessions) const;
  Index index_of(const std::string& id) const;
};

Dataset load_dataset(const data::Manifest& manifest, const std::vector<std::string>& views);

/// Rows `rows` of a [N, ...] tensor, in the given order.
TensorF take_rows(const TensorF& t, std::span<const Index> rows);

/// Encoder family implied by the view rank: 3 -> w2v2_pointwise,
/// 2 -> spec_cnn, 1 -> vector_mlp.
models::EncoderSpec default_encoder_spec(const data::ViewInfo& info);

/// Worker count from PCL_WORKERS, falling back to the hardware concurrency.
unsigned worker_count();

/// Runs fn(0..n-1) on a bounded pool. Results must be written to disjoint
/// slots; the first exception (lowest index) is rethrown.
void parallel_for(Index n, const std::function<void(Index)>& fn, unsigned workers = 0);

}  // namespace pcl::train
