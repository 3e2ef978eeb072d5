#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pcl/core/tensor.hpp"

namespace pcl::data {

struct ViewInfo {
  std::string name;
  Shape dims;

  friend bool operator==(const ViewInfo&, const ViewInfo&) = default;
};

struct UtteranceRecord {
  std::string id;
  int session = 0;
  std::string speaker;
  std::optional<std::string> label;
  std::map<std::string, std::string> view_paths;

  friend bool operator==(const UtteranceRecord&, const UtteranceRecord&) = default;
};

/// Dataset index. Text form, one entry per line:
///
///     # comment
///     view <name> <rank> <dims...>
///     labels <l1,l2,...>
///     <id>|<session>|<speaker>|<label or ->|<view>=<path>;<view>=<path>
///
/// Relative feature paths are resolved against the manifest's directory.
struct Manifest {
  std::vector<ViewInfo> views;
  std::vector<std::string> labels;
  std::vector<UtteranceRecord> records;
  std::string base_dir;

  const ViewInfo& view(const std::string& name) const;
  bool has_view(const std::string& name) const;
  std::vector<int> sessions() const;
  std::string resolve(const std::string& path) const;
  /// Index of `label` in `labels`; throws ContractError when absent.
  Index label_index(const std::string& label) const;
};

Manifest parse_manifest(const std::string& text, const std::string& base_dir);
std::string format_manifest(const Manifest& manifest);

/// Parses and validates the manifest: unique ids, declared views present on
/// every record, every feature file present with the cataloged dims.
Manifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const Manifest& manifest);

/// Total map from raw annotation to target class; raw labels outside the
/// mapping that are not themselves targets map to nothing.
struct LabelMap {
  std::map<std::string, std::string> mapping;
  std::vector<std::string> targets;

  std::optional<std::string> apply(const std::string& raw) const;

  /// neutral, angry, sad, happy with excited merged into happy.
  static LabelMap four_class();
};

/// Records whose (optionally mapped) label lies in `keep`.
Manifest filter_by_labels(const Manifest& manifest, const std::set<std::string>& keep,
                          const LabelMap* label_map = nullptr);

/// Replaces every record label by its mapped target (dropping records that
/// map to nothing) and sets `labels` to the target list.
Manifest apply_label_map(const Manifest& manifest, const LabelMap& label_map);

struct CvSplit {
  std::vector<int> train;
  int val = 0;
  int test = 0;
};

/// Leave-one-session-out fold: test = session[fold], validation =
/// session[(fold+1) mod S], training = the rest.
CvSplit make_cv_splits(const Manifest& manifest, int fold);
CvSplit make_cv_splits(const std::vector<int>& sessions, int fold);

std::vector<UtteranceRecord> records_in_sessions(const Manifest& manifest, const std::vector<int>& sessions);

struct SparseLabelConfig {
  double fraction = 1.0;
  std::vector<std::uint64_t> repeat_seeds;

  /// Fractions used when replicating the sparse-annotation study.
  static constexpr double kReplicationFractions[] = {0.02, 0.05, 0.10, 0.25};
};

/// Number of records kept from a class of `n` records: max(1, round(p n)).
Index sparse_count(double fraction, Index n);

/// Per-class uniform subset of `records` without replacement. Records are
/// ordered by id before the seeded shuffle; the result is sorted by id.
std::vector<UtteranceRecord> sample_sparse_labels(const std::vector<UtteranceRecord>& records,
                                                  const std::vector<std::string>& classes, double fraction,
                                                  std::uint64_t seed);

/// Stacks one view of `records` into [N, dims...], reading every MVF file.
TensorF load_view(const Manifest& manifest, const std::string& view, const std::vector<UtteranceRecord>& records);

}  // namespace pcl::data
