#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pcl/models/encoders.hpp"

namespace pcl::models {

/// Named float parameters plus run metadata.
///
/// File layout (all integers decimal ASCII, all floats as exact hex-floats):
///
///     PCLCKPT 1
///     meta <key> <value>                 (zero or more, sorted by key)
///     encoder <view> <kind> <in dims,> <out> <channels,>
///     param <name> <rank> <dims...> <byte offset>
///     payload <bytes>
///     <raw little-endian f32 payload>
struct Checkpoint {
  std::vector<EncoderSpec> encoders;
  std::map<std::string, std::string> meta;
  std::vector<Parameter<float>> params;

  const Parameter<float>* find(const std::string& name) const;
  void set_meta(const std::string& key, double value);
  double meta_double(const std::string& key) const;

  friend bool operator==(const Checkpoint& a, const Checkpoint& b);
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

/// Exact round-trip text form of a double.
std::string format_hex(double v);
double parse_hex(const std::string& s);

/// Appends the encoder's parameters under "<view>/encoder/".
void store_encoder(Checkpoint& ckpt, const Encoder<float>& enc);
void store_projection(Checkpoint& ckpt, const std::string& view, ProjectionHead<float>& head);

/// Copies "<view>/encoder/" parameters into `enc`. Throws SchemaError when the
/// stored spec differs from `enc.spec()` or any tensor is missing or
/// mis-shaped.
void restore_encoder(const Checkpoint& ckpt, Encoder<float>& enc);
void restore_projection(const Checkpoint& ckpt, const std::string& view, ProjectionHead<float>& head);
void restore_classifier(const Checkpoint& ckpt, const std::string& view, ClassifierHead<float>& head);
void store_classifier(Checkpoint& ckpt, const std::string& view, ClassifierHead<float>& head);

const EncoderSpec& find_encoder_spec(const Checkpoint& ckpt, const std::string& view);

}  // namespace pcl::models
