#pragma once

#include <string>
#include <vector>

#include "pcl/core/tensor.hpp"

namespace pcl::data {

/// Utterance-level descriptor table: header `id,<name>...`, one row per
/// utterance. Used for externally extracted eGeMAPS-88 vectors and for the
/// built-in 42-feature paralinguistic vectors.
struct FeatureTable {
  std::vector<std::string> columns;
  std::vector<std::string> ids;
  std::vector<std::vector<float>> rows;
};

inline constexpr Index kEgemapsColumns = 88;

/// Parses a feature CSV. A positive `expected_columns` is enforced on the
/// header and on every row (SchemaError); values must parse and be finite
/// (FormatError).
FeatureTable read_feature_csv(const std::string& path, Index expected_columns = 0);

/// One rank-1 MVF per row at `<dir>/<id>.mvf`; returns the written paths.
std::vector<std::string> write_feature_vectors(const FeatureTable& table, const std::string& dir);

}  // namespace pcl::data
