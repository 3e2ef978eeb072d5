#include "pcl/analysis/export.hpp"

#include <numeric>

#include "pcl/data/mvf.hpp"
#include "pcl/train/trainer.hpp"

namespace pcl::analysis {

TensorF export_representations(models::Encoder<float>& encoder, const data::Manifest& manifest, const std::string& path) {
  const TensorF inputs = data::load_view(manifest, encoder.spec().view, manifest.records);
  std::vector<Index> rows(manifest.records.size());
  std::iota(rows.begin(), rows.end(), Index{0});
  TensorF reps = train::encode_rows(encoder, inputs, rows);
  data::mvf_write(path, reps);
  return reps;
}

}  // namespace pcl::analysis
