#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "pcl/core/tape.hpp"

namespace pcl {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment estimates, one pair per parameter in registration order.
template <typename Scalar>
struct AdamState {
  AdamConfig config;
  Index step = 0;
  std::vector<Tensor<Scalar>> m;
  std::vector<Tensor<Scalar>> v;

  AdamState() = default;
  explicit AdamState(AdamConfig cfg) : config(cfg) {}
};

/// One bias-corrected Adam update over `params` using their current grads.
/// The step counter is incremented before the bias correction is computed.
template <typename Scalar>
void adam_step(std::span<Parameter<Scalar>* const> params, AdamState<Scalar>& state) {
  if (state.m.empty()) {
    for (const Parameter<Scalar>* p : params) {
      state.m.emplace_back(p->value.shape());
      state.v.emplace_back(p->value.shape());
    }
  }
  if (state.m.size() != params.size()) throw ContractError("adam_step: parameter list changed between steps");
  ++state.step;
  const AdamConfig& c = state.config;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(c.beta1, t);
  const double bias2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter<Scalar>& p = *params[i];
    Tensor<Scalar>& m = state.m[i];
    Tensor<Scalar>& v = state.v[i];
    if (m.shape() != p.value.shape()) throw ShapeError("adam_step: moment shape mismatch for " + p.name);
    for (Index k = 0; k < p.value.size(); ++k) {
      const double g = static_cast<double>(p.grad[k]);
      const double mk = c.beta1 * static_cast<double>(m[k]) + (1.0 - c.beta1) * g;
      const double vk = c.beta2 * static_cast<double>(v[k]) + (1.0 - c.beta2) * g * g;
      m[k] = static_cast<Scalar>(mk);
      v[k] = static_cast<Scalar>(vk);
      const double m_hat = mk / bias1;
      const double v_hat = vk / bias2;
      p.value[k] = static_cast<Scalar>(static_cast<double>(p.value[k]) - c.lr * m_hat / (std::sqrt(v_hat) + c.eps));
    }
  }
}

}  // namespace pcl
