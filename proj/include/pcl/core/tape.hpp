#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "pcl/core/tensor.hpp"

namespace pcl {

/// Trainable tensor with a gradient slot of the same shape.
template <typename Scalar>
struct Parameter {
  std::string name;
  Tensor<Scalar> value;
  Tensor<Scalar> grad;

  Parameter() = default;
  Parameter(std::string n, Tensor<Scalar> v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { std::fill(grad.values().begin(), grad.values().end(), Scalar(0)); }
  Index size() const { return value.size(); }
};

template <typename Scalar>
class Tape;

/// Handle to a node recorded on a tape.
template <typename Scalar>
struct Var {
  Tape<Scalar>* tape = nullptr;
  Index id = -1;

  const Tensor<Scalar>& value() const { return tape->value(*this); }
  const Shape& shape() const { return value().shape(); }
  Index dim(Index axis) const { return value().dim(axis); }
};

/// Reverse-mode differentiation tape.
///
/// Nodes are appended in evaluation order, so reverse iteration is a valid
/// topological order for the backward sweep. A tape is single-use: build the
/// graph, call backward once, discard.
template <typename Scalar>
class Tape {
 public:
  using TensorT = Tensor<Scalar>;
  using VarT = Var<Scalar>;
  using BackwardFn = std::function<void(Tape&, const TensorT& out, const TensorT& grad_out)>;

  Tape() = default;
  explicit Tape(bool grad_enabled) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const noexcept { return grad_enabled_; }

  VarT constant(TensorT value) { return push(std::move(value), false, nullptr, nullptr); }

  VarT parameter(Parameter<Scalar>& p) {
    // Leaves keep a copy of the value; parameters are not mutated while a tape is alive.
    VarT v = push(p.value, grad_enabled_, nullptr, &p);
    if (grad_enabled_) params_.push_back(v.id);
    return v;
  }

  /// Appends the result of a primitive. `fn` is kept only when some input
  /// requires a gradient.
  VarT record(TensorT value, std::initializer_list<VarT> inputs, BackwardFn fn) {
    bool needs = false;
    for (const VarT& in : inputs) needs = needs || requires_grad(in);
    return push(std::move(value), needs, needs ? std::move(fn) : nullptr, nullptr);
  }

  VarT record(TensorT value, const std::vector<VarT>& inputs, BackwardFn fn) {
    bool needs = false;
    for (const VarT& in : inputs) needs = needs || requires_grad(in);
    return push(std::move(value), needs, needs ? std::move(fn) : nullptr, nullptr);
  }

  const TensorT& value(VarT v) const { return node(v).value; }
  bool requires_grad(VarT v) const { return node(v).requires_grad; }

  /// Gradient buffer of `v`, zero-initialized on first access. Only valid
  /// for nodes that require a gradient.
  TensorT& grad(VarT v) {
    Node& n = node(v);
    if (n.grad.shape() != n.value.shape()) n.grad = TensorT(n.value.shape());
    return n.grad;
  }

  void accumulate(VarT v, const TensorT& g) {
    if (!requires_grad(v)) return;
    TensorT& slot = grad(v);
    if (g.size() != slot.size()) throw ShapeError("gradient shape mismatch in backward sweep");
    slot.vector() += g.vector();
  }

  /// Writes d(out)/d(param) into every parameter registered on this tape.
  void backward(VarT out) {
    if (out.tape != this) throw ContractError("backward called with a node from another tape");
    if (value(out).size() != 1) {
      throw ContractError("backward requires a scalar output, got shape " + shape_str(value(out).shape()));
    }
    for (Index id : params_) nodes_[static_cast<std::size_t>(id)].param->zero_grad();
    if (!requires_grad(out)) return;
    grad(out)[0] = Scalar(1);
    for (Index id = out.id; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (!n.requires_grad || n.grad.empty()) continue;
      if (n.backward) {
        n.backward(*this, n.value, n.grad);
      } else if (n.param != nullptr) {
        n.param->grad.vector() += n.grad.vector();
      }
    }
  }

  Index size() const noexcept { return static_cast<Index>(nodes_.size()); }

 private:
  struct Node {
    TensorT value;
    TensorT grad;
    BackwardFn backward;
    Parameter<Scalar>* param = nullptr;
    bool requires_grad = false;
  };

  VarT push(TensorT value, bool needs_grad, BackwardFn fn, Parameter<Scalar>* param) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = grad_enabled_ && needs_grad;
    if (n.requires_grad) n.backward = std::move(fn);
    n.param = param;
    nodes_.push_back(std::move(n));
    return VarT{this, static_cast<Index>(nodes_.size()) - 1};
  }

  const Node& node(VarT v) const {
    if (v.tape != this || v.id < 0 || v.id >= size()) throw ContractError("variable does not belong to this tape");
    return nodes_[static_cast<std::size_t>(v.id)];
  }
  Node& node(VarT v) {
    if (v.tape != this || v.id < 0 || v.id >= size()) throw ContractError("variable does not belong to this tape");
    return nodes_[static_cast<std::size_t>(v.id)];
  }

  std::vector<Node> nodes_;
  std::vector<Index> params_;
  bool grad_enabled_ = true;
};

}  // namespace pcl
