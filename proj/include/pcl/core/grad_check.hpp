#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "pcl/core/init.hpp"
#include "pcl/core/tape.hpp"

namespace pcl {

struct GradCheckReport {
  double max_rel_error = 0.0;
  Index probed = 0;
  /// Probed entries whose central differences at h and 2h disagree by more
  /// than `smooth_tol` (relative), i.e. the stencil straddles a kink.
  Index nonsmooth = 0;
};

struct GradCheckOptions {
  double h = 1e-4;
  /// Entries probed per parameter; 0 probes all of them.
  Index per_param = 0;
  std::uint64_t sample_seed = 0;
  /// Also evaluate at +-2h and count non-smooth stencils.
  bool check_smoothness = false;
  double smooth_tol = 1e-5;
};

/// Compares analytic gradients of `fn` with central differences. `fn` must
/// rebuild the graph from the current parameter values on each call and
/// return a scalar. The error of an entry is
/// |analytic - numeric| / max(1e-8, |numeric|).
template <typename Scalar>
GradCheckReport grad_check_report(const std::function<Var<Scalar>(Tape<Scalar>&)>& fn,
                                  std::span<Parameter<Scalar>* const> params, const GradCheckOptions& opt) {
  if (!(opt.h > 0.0)) throw ContractError("grad_check: step must be positive");
  {
    Tape<Scalar> tape;
    Var<Scalar> out = fn(tape);
    tape.backward(out);
  }
  auto evaluate = [&]() {
    Tape<Scalar> tape(false);
    const Var<Scalar> out = fn(tape);
    if (out.value().size() != 1) throw ContractError("grad_check: function must return a scalar");
    return static_cast<double>(out.value()[0]);
  };
  auto central = [&](Parameter<Scalar>& p, Index k, double step) {
    const Scalar saved = p.value[k];
    p.value[k] = static_cast<Scalar>(static_cast<double>(saved) + step);
    const double up = evaluate();
    p.value[k] = static_cast<Scalar>(static_cast<double>(saved) - step);
    const double down = evaluate();
    p.value[k] = saved;
    return (up - down) / (2.0 * step);
  };
  Rng rng(opt.sample_seed);
  GradCheckReport report;
  for (Parameter<Scalar>* p : params) {
    const Tensor<Scalar> analytic = p->grad;
    std::vector<Index> entries(static_cast<std::size_t>(p->value.size()));
    std::iota(entries.begin(), entries.end(), Index{0});
    if (opt.per_param > 0 && opt.per_param < p->value.size()) {
      std::shuffle(entries.begin(), entries.end(), rng);
      entries.resize(static_cast<std::size_t>(opt.per_param));
    }
    for (Index k : entries) {
      const double numeric = central(*p, k, opt.h);
      const double err = std::abs(static_cast<double>(analytic[k]) - numeric) / std::max(1e-8, std::abs(numeric));
      report.max_rel_error = std::max(report.max_rel_error, err);
      ++report.probed;
      if (opt.check_smoothness) {
        const double wide = central(*p, k, 2.0 * opt.h);
        if (std::abs(wide - numeric) > opt.smooth_tol * std::max(std::abs(numeric), 1e-6)) ++report.nonsmooth;
      }
    }
    p->grad = analytic;
  }
  return report;
}

/// Largest relative error over every entry of `params`; see
/// `grad_check_report`.
template <typename Scalar>
double grad_check(const std::function<Var<Scalar>(Tape<Scalar>&)>& fn, std::span<Parameter<Scalar>* const> params,
                  double h) {
  GradCheckOptions opt;
  opt.h = h;
  return grad_check_report<Scalar>(fn, params, opt).max_rel_error;
}

}  // namespace pcl
