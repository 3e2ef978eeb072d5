#include "pcl/models/encoders.hpp"

namespace pcl::models {

std::string to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::w2v2_pointwise: return "w2v2_pointwise";
    case EncoderKind::spec_cnn: return "spec_cnn";
    case EncoderKind::vector_mlp: return "vector_mlp";
  }
  return "unknown";
}

EncoderKind encoder_kind_from_string(const std::string& name) {
  if (name == "w2v2_pointwise") return EncoderKind::w2v2_pointwise;
  if (name == "spec_cnn") return EncoderKind::spec_cnn;
  if (name == "vector_mlp") return EncoderKind::vector_mlp;
  throw ContractError("unknown encoder kind '" + name + "'");
}

void EncoderSpec::validate() const {
  auto fail = [&](const std::string& why) { throw ContractError("encoder '" + view + "': " + why); };
  if (output_dim <= 0) fail("output dim must be positive");
  for (Index d : input_dims) {
    if (d <= 0) fail("input dims must be positive, got " + shape_str(input_dims));
  }
  switch (kind) {
    case EncoderKind::w2v2_pointwise:
      if (input_dims.size() != 3) fail("w2v2_pointwise expects {layers, frames, features}");
      break;
    case EncoderKind::spec_cnn: {
      if (input_dims.size() != 2) fail("spec_cnn expects {mels, frames}");
      if (channels.empty()) fail("spec_cnn needs at least one conv block");
      const Index need = Index{1} << channels.size();
      if (input_dims[0] < need || input_dims[1] < need) {
        fail("input " + shape_str(input_dims) + " too small for " + std::to_string(channels.size()) + " pooling stages");
      }
      for (Index c : channels) {
        if (c <= 0) fail("channel counts must be positive");
      }
      break;
    }
    case EncoderKind::vector_mlp:
      if (input_dims.size() != 1) fail("vector_mlp expects {features}");
      break;
  }
}

}  // namespace pcl::models
