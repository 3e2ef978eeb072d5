#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pcl/core/init.hpp"
#include "pcl/core/ops.hpp"

namespace pcl::models {

/// Width of every view-level representation and of the projection space.
inline constexpr Index kRepresentationDim = 128;

enum class EncoderKind { w2v2_pointwise, spec_cnn, vector_mlp };

std::string to_string(EncoderKind kind);
EncoderKind encoder_kind_from_string(const std::string& name);

/// Architecture of one view-level encoder.
///
/// `input_dims` is the per-instance input shape: {layers, frames, features}
/// for `w2v2_pointwise`, {mels, frames} for `spec_cnn` and {features} for
/// `vector_mlp`. `channels` is used by `spec_cnn` only.
struct EncoderSpec {
  std::string view;
  EncoderKind kind = EncoderKind::vector_mlp;
  Shape input_dims;
  Index output_dim = kRepresentationDim;
  std::vector<Index> channels = {16, 32, 64};

  void validate() const;
  friend bool operator==(const EncoderSpec&, const EncoderSpec&) = default;
};

/// Affine map x W + b with W [in, out].
template <typename Scalar>
struct Linear {
  Parameter<Scalar> weight;
  Parameter<Scalar> bias;

  Linear() = default;
  Linear(const std::string& name, Index in, Index out, Rng& rng)
      : weight(name + ".weight", fan_in_uniform<Scalar>({in, out}, in, rng)), bias(name + ".bias", Tensor<Scalar>({out})) {}

  Var<Scalar> operator()(Tape<Scalar>& tape, Var<Scalar> x, bool trainable) {
    return add_bias(matmul(x, bind(tape, weight, trainable)), bind(tape, bias, trainable));
  }

  static Var<Scalar> bind(Tape<Scalar>& tape, Parameter<Scalar>& p, bool trainable) {
    return trainable ? tape.parameter(p) : tape.constant(p.value);
  }
};

namespace detail {

template <typename Scalar>
Var<Scalar> bind(Tape<Scalar>& tape, Parameter<Scalar>& p, bool trainable) {
  return Linear<Scalar>::bind(tape, p, trainable);
}

inline void check_batch(const EncoderSpec& spec, const Shape& batch) {
  Shape expected{batch.empty() ? 0 : batch.front()};
  expected.insert(expected.end(), spec.input_dims.begin(), spec.input_dims.end());
  if (batch != expected) {
    throw ShapeError("encoder '" + spec.view + "' expects [N]+" + shape_str(spec.input_dims) + ", got " + shape_str(batch));
  }
}

}  // namespace detail

/// View-level encoder f_i mapping one view's inputs to [N, 128].
template <typename Scalar>
class Encoder {
 public:
  Encoder() = default;

  Encoder(EncoderSpec spec, Rng& rng) : spec_(std::move(spec)) {
    spec_.validate();
    const Index out = spec_.output_dim;
    switch (spec_.kind) {
      case EncoderKind::w2v2_pointwise: {
        const Index layers = spec_.input_dims[0];
        const Index feat = spec_.input_dims[2];
        params_.emplace_back("layer_logits", Tensor<Scalar>({layers}));
        add_linear("pointwise1", feat, out, rng);
        add_linear("pointwise2", out, out, rng);
        break;
      }
      case EncoderKind::spec_cnn: {
        Index in_ch = 1;
        for (std::size_t b = 0; b < spec_.channels.size(); ++b) {
          const Index co = spec_.channels[b];
          const std::string name = "conv" + std::to_string(b + 1);
          params_.emplace_back(name + ".weight", fan_in_uniform<Scalar>({co, in_ch, 3, 3}, in_ch * 9, rng));
          params_.emplace_back(name + ".bias", Tensor<Scalar>({co}));
          in_ch = co;
        }
        add_linear("fc", in_ch, out, rng);
        break;
      }
      case EncoderKind::vector_mlp:
        add_linear("fc1", spec_.input_dims[0], 256, rng);
        add_linear("fc2", 256, out, rng);
        break;
    }
  }

  Encoder(EncoderSpec spec, std::uint64_t seed) : Encoder(std::move(spec), seeded(seed)) {}

  const EncoderSpec& spec() const noexcept { return spec_; }
  std::vector<Parameter<Scalar>>& parameters() noexcept { return params_; }
  const std::vector<Parameter<Scalar>>& parameters() const noexcept { return params_; }

  Index parameter_count() const {
    Index n = 0;
    for (const auto& p : params_) n += p.size();
    return n;
  }

  /// Softmax-normalized layer weights of a `w2v2_pointwise` encoder.
  Tensor<Scalar> layer_weights() const {
    if (spec_.kind != EncoderKind::w2v2_pointwise) throw ContractError("layer weights exist only for w2v2_pointwise");
    Tape<Scalar> tape(false);
    return softmax_rows(tape.constant(params_[0].value)).value();
  }

  /// [N, input_dims...] -> [N, output_dim]. Frozen encoders (`trainable` false)
  /// enter the tape as constants.
  Var<Scalar> forward(Tape<Scalar>& tape, Var<Scalar> batch, bool trainable = true) {
    detail::check_batch(spec_, batch.shape());
    auto p = [&](std::size_t i) { return detail::bind(tape, params_[i], trainable); };
    switch (spec_.kind) {
      case EncoderKind::w2v2_pointwise: {
        Var<Scalar> mixed = weighted_layer_sum(batch, softmax_rows(p(0)));
        Var<Scalar> h = relu(conv_pointwise_1d(mixed, p(1), p(2)));
        h = conv_pointwise_1d(h, p(3), p(4));
        return mean_over_time(h);
      }
      case EncoderKind::spec_cnn: {
        const Index n = batch.dim(0);
        Var<Scalar> h = reshape(batch, {n, 1, spec_.input_dims[0], spec_.input_dims[1]});
        std::size_t i = 0;
        for (; i < spec_.channels.size(); ++i) h = maxpool2d(relu(conv2d(h, p(2 * i), p(2 * i + 1), Index{1})), Index{2});
        h = global_avg_pool2d(h);
        return add_bias(matmul(h, p(2 * i)), p(2 * i + 1));
      }
      case EncoderKind::vector_mlp: {
        Var<Scalar> h = relu(add_bias(matmul(batch, p(0)), p(1)));
        return add_bias(matmul(h, p(2)), p(3));
      }
    }
    throw ContractError("unknown encoder kind");
  }

  Tensor<Scalar> encode(const Tensor<Scalar>& batch) {
    Tape<Scalar> tape(false);
    return forward(tape, tape.constant(batch), false).value();
  }

 private:
  static Rng& seeded(std::uint64_t seed) {
    thread_local Rng rng;
    rng.seed(seed);
    return rng;
  }

  void add_linear(const std::string& name, Index in, Index out, Rng& rng) {
    params_.emplace_back(name + ".weight", fan_in_uniform<Scalar>({in, out}, in, rng));
    params_.emplace_back(name + ".bias", Tensor<Scalar>({out}));
  }

  EncoderSpec spec_;
  std::vector<Parameter<Scalar>> params_;
};

/// g_i: 128 -> 256 -> 128 with ReLU after the first layer. Used only while
/// pre-training.
template <typename Scalar>
class ProjectionHead {
 public:
  ProjectionHead() = default;
  ProjectionHead(Index in, Rng& rng) : fc1_("fc1", in, 256, rng), fc2_("fc2", 256, kRepresentationDim, rng) {}

  Var<Scalar> forward(Tape<Scalar>& tape, Var<Scalar> reps, bool trainable = true) {
    if (reps.value().rank() != 2 || reps.dim(1) != fc1_.weight.value.dim(0)) {
      throw ShapeError("projection head expects [N," + std::to_string(fc1_.weight.value.dim(0)) + "], got " +
                       shape_str(reps.shape()));
    }
    return fc2_(tape, relu(fc1_(tape, reps, trainable)), trainable);
  }

  Tensor<Scalar> project(const Tensor<Scalar>& reps) {
    Tape<Scalar> tape(false);
    return forward(tape, tape.constant(reps), false).value();
  }

  std::vector<Parameter<Scalar>*> parameters() {
    return {&fc1_.weight, &fc1_.bias, &fc2_.weight, &fc2_.bias};
  }

 private:
  Linear<Scalar> fc1_;
  Linear<Scalar> fc2_;
};

/// Linear layer to C classes followed by softmax.
template <typename Scalar>
class ClassifierHead {
 public:
  ClassifierHead() = default;
  ClassifierHead(Index in, Index classes, Rng& rng) : fc_("classifier", in, classes, rng) {}

  Index classes() const { return fc_.bias.value.dim(0); }

  Var<Scalar> logits(Tape<Scalar>& tape, Var<Scalar> reps, bool trainable = true) {
    if (reps.value().rank() != 2 || reps.dim(1) != fc_.weight.value.dim(0)) {
      throw ShapeError("classifier expects [N," + std::to_string(fc_.weight.value.dim(0)) + "], got " +
                       shape_str(reps.shape()));
    }
    return fc_(tape, reps, trainable);
  }

  /// Class probabilities [N, C]; rows sum to one.
  Tensor<Scalar> classify(const Tensor<Scalar>& reps) {
    Tape<Scalar> tape(false);
    return softmax_rows(logits(tape, tape.constant(reps), false)).value();
  }

  std::vector<Parameter<Scalar>*> parameters() { return {&fc_.weight, &fc_.bias}; }

 private:
  Linear<Scalar> fc_;
};

/// Mean cross-entropy of integer labels under softmax(logits).
template <typename Scalar>
Var<Scalar> cross_entropy(Var<Scalar> logits, const std::vector<Index>& labels) {
  return mean(sub(log_sum_exp_rows(logits), pick_per_row(logits, labels)));
}

template <typename Scalar>
std::vector<Parameter<Scalar>*> parameter_ptrs(Encoder<Scalar>& enc) {
  std::vector<Parameter<Scalar>*> out;
  for (auto& p : enc.parameters()) out.push_back(&p);
  return out;
}

}  // namespace pcl::models
