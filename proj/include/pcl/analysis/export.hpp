#pragma once

#include <string>

#include "pcl/data/manifest.hpp"
#include "pcl/models/encoders.hpp"

namespace pcl::analysis {

/// Encodes every manifest record (manifest order) with `encoder` and writes
/// the [N, 128] result to `path` as MVF. Returns the written tensor.
TensorF export_representations(models::Encoder<float>& encoder, const data::Manifest& manifest, const std::string& path);

}  // namespace pcl::analysis
