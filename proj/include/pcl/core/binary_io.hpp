#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include "pcl/core/errors.hpp"

namespace pcl::io {

inline void write_u32_le(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64_le(std::ostream& os, std::uint64_t v) {
  write_u32_le(os, static_cast<std::uint32_t>(v));
  write_u32_le(os, static_cast<std::uint32_t>(v >> 32));
}

inline std::uint32_t decode_u32_le(const unsigned char* b) {
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint32_t read_u32_le(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw FormatError("unexpected end of file");
  return decode_u32_le(b);
}

inline std::uint64_t read_u64_le(std::istream& is) {
  const std::uint64_t lo = read_u32_le(is);
  const std::uint64_t hi = read_u32_le(is);
  return lo | (hi << 32);
}

inline void write_f32_le(std::ostream& os, std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * 4));
  } else {
    for (float f : values) write_u32_le(os, std::bit_cast<std::uint32_t>(f));
  }
}

inline void read_f32_le(std::istream& is, std::span<float> out) {
  if (!is.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size() * 4))) {
    throw FormatError("payload truncated");
  }
  if constexpr (std::endian::native != std::endian::little) {
    for (float& f : out) {
      unsigned char b[4];
      std::memcpy(b, &f, 4);
      f = std::bit_cast<float>(decode_u32_le(b));
    }
  }
}

}  // namespace pcl::io
