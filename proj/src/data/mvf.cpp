#include "pcl/data/mvf.hpp"

#include <filesystem>
#include <fstream>

#include "pcl/core/binary_io.hpp"

namespace pcl::data {

namespace {

Shape read_header(std::istream& is, const std::string& path) {
  char magic[4];
  if (!is.read(magic, 4) || !std::equal(magic, magic + 4, kMvfMagic)) {
    throw FormatError("'" + path + "' is not an MVF file (bad magic)");
  }
  try {
    const std::uint32_t dtype = io::read_u32_le(is);
    if (dtype != kMvfDtypeF32) throw FormatError("'" + path + "' has unsupported dtype code " + std::to_string(dtype));
    const std::uint32_t rank = io::read_u32_le(is);
    if (rank > 16) throw FormatError("'" + path + "' declares implausible rank " + std::to_string(rank));
    Shape shape(rank);
    for (Index& d : shape) {
      const std::uint64_t v = io::read_u64_le(is);
      if (v > (std::uint64_t{1} << 40)) throw FormatError("'" + path + "' declares implausible dimension");
      d = static_cast<Index>(v);
    }
    return shape;
  } catch (const FormatError& e) {
    throw FormatError("'" + path + "': truncated header (" + e.what() + ")");
  }
}

void check_size(const std::string& path, const Shape& shape) {
  const auto header = static_cast<std::uintmax_t>(12 + 8 * shape.size());
  const auto expected = header + static_cast<std::uintmax_t>(shape_numel(shape)) * 4;
  const auto actual = std::filesystem::file_size(path);
  if (actual != expected) {
    throw FormatError("'" + path + "' holds " + std::to_string(actual) + " bytes, header " + shape_str(shape) +
                      " requires " + std::to_string(expected));
  }
}

}  // namespace

void mvf_write(const std::string& path, const TensorF& tensor) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  os.write(kMvfMagic, 4);
  io::write_u32_le(os, kMvfDtypeF32);
  io::write_u32_le(os, static_cast<std::uint32_t>(tensor.rank()));
  for (Index d : tensor.shape()) io::write_u64_le(os, static_cast<std::uint64_t>(d));
  io::write_f32_le(os, tensor.values());
  if (!os) throw Error("failed writing '" + path + "'");
}

TensorF mvf_read(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open '" + path + "'");
  Shape shape = read_header(is, path);
  check_size(path, shape);
  TensorF t(std::move(shape));
  io::read_f32_le(is, t.values());
  return t;
}

Shape mvf_read_shape(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open '" + path + "'");
  Shape shape = read_header(is, path);
  check_size(path, shape);
  return shape;
}

}  // namespace pcl::data
