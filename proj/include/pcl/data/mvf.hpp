#pragma once

#include <string>

#include "pcl/core/tensor.hpp"

namespace pcl::data {

/// Multi-view feature file: a self-describing little-endian f32 tensor.
///
///     bytes 0..3   magic "MVF1"
///     u32          dtype code (1 = f32)
///     u32          rank
///     u64 x rank   dims
///     f32 x prod(dims) row-major payload
inline constexpr char kMvfMagic[4] = {'M', 'V', 'F', '1'};
inline constexpr std::uint32_t kMvfDtypeF32 = 1;

void mvf_write(const std::string& path, const TensorF& tensor);
TensorF mvf_read(const std::string& path);

/// Reads and validates only the header; the file size must still match it.
Shape mvf_read_shape(const std::string& path);

}  // namespace pcl::data
