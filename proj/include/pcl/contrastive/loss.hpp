#pragma once

#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "pcl/core/ops.hpp"

namespace pcl::contrastive {

/// Temperature grid explored when replicating the temperature study.
inline constexpr double kTemperatureGrid[] = {0.1, 0.25, 0.5, 1.0};

struct ContrastiveConfig {
  double temperature = 0.5;

  void validate() const {
    if (!(temperature > 0.0)) throw ContractError("temperature must be positive, got " + std::to_string(temperature));
  }
};

/// Per-view projected representations [N, D], row l of every view belonging
/// to instance l.
template <typename Scalar>
struct ProjectedBatch {
  std::vector<Tensor<Scalar>> views;

  Index instances() const { return views.empty() ? 0 : views.front().dim(0); }

  void validate() const {
    for (const auto& v : views) {
      if (v.rank() != 2 || v.shape() != views.front().shape()) {
        throw ShapeError("projected views must share [N, D]; got " + shape_str(v.shape()) + " vs " +
                         shape_str(views.front().shape()));
      }
    }
  }
};

namespace detail {

template <typename Scalar>
void check_pair(const Var<Scalar>& zi, const Var<Scalar>& zj) {
  if (zi.value().rank() != 2 || zi.shape() != zj.shape()) {
    throw ShapeError("view pair shapes differ: " + shape_str(zi.shape()) + " vs " + shape_str(zj.shape()));
  }
}

inline void check_tau(double tau) {
  if (!(tau > 0.0)) throw ContractError("temperature must be positive, got " + std::to_string(tau));
}

inline std::vector<Index> diagonal_index(Index n) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  return idx;
}

}  // namespace detail

/// S[a,b] = cos(zi[a], zj[b]); rows are normalized with the 1e-8 norm guard.
template <typename Scalar>
Var<Scalar> cosine_similarity_matrix(Var<Scalar> zi, Var<Scalar> zj) {
  detail::check_pair(zi, zj);
  return matmul(l2_normalize_rows(zi), transpose(l2_normalize_rows(zj)));
}

/// Per-anchor loss with view i as anchor: the positive is row l of view j and
/// the candidates are all N rows of view j (no same-view negatives). -> [N]
template <typename Scalar>
Var<Scalar> nt_xent_directed(Var<Scalar> zi, Var<Scalar> zj, double tau) {
  detail::check_pair(zi, zj);
  detail::check_tau(tau);
  const Index n = zi.dim(0);
  Var<Scalar> logits = scale(cosine_similarity_matrix(zi, zj), static_cast<Scalar>(1.0 / tau));
  return sub(log_sum_exp_rows(logits), pick_per_row(logits, detail::diagonal_index(n)));
}

/// (1/N) sum_l (l_l^{i->j} + l_l^{j->i}) -> [1]
template <typename Scalar>
Var<Scalar> pair_loss(Var<Scalar> zi, Var<Scalar> zj, double tau) {
  const Index n = zi.value().rank() == 2 ? zi.dim(0) : 0;
  Var<Scalar> both = add(nt_xent_directed(zi, zj, tau), nt_xent_directed(zj, zi, tau));
  return scale(sum(both), static_cast<Scalar>(1.0 / static_cast<double>(n)));
}

/// Sum of pair losses over all ordered view pairs (k != k'), divided by the
/// number of unordered pairs K(K-1)/2. -> [1]
template <typename Scalar>
Var<Scalar> pairwise_multiview_loss(std::span<const Var<Scalar>> views, double tau) {
  const Index k = static_cast<Index>(views.size());
  if (k < 2) throw ContractError("pairwise multi-view loss needs at least two views, got " + std::to_string(k));
  std::vector<Var<Scalar>> terms;
  terms.reserve(static_cast<std::size_t>(k * (k - 1)));
  for (Index a = 0; a < k; ++a) {
    for (Index b = 0; b < k; ++b) {
      if (a != b) terms.push_back(pair_loss(views[a], views[b], tau));
    }
  }
  Var<Scalar> total = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) total = add(total, terms[i]);
  const double pairs = static_cast<double>(k * (k - 1)) / 2.0;
  return scale(total, static_cast<Scalar>(1.0 / pairs));
}

// Value-only conveniences over plain tensors.

template <typename Scalar>
Tensor<Scalar> cosine_similarity_matrix(const Tensor<Scalar>& zi, const Tensor<Scalar>& zj) {
  Tape<Scalar> tape(false);
  return cosine_similarity_matrix(tape.constant(zi), tape.constant(zj)).value();
}

template <typename Scalar>
Tensor<Scalar> nt_xent_directed(const Tensor<Scalar>& zi, const Tensor<Scalar>& zj, double tau) {
  Tape<Scalar> tape(false);
  return nt_xent_directed(tape.constant(zi), tape.constant(zj), tau).value();
}

template <typename Scalar>
Scalar pair_loss(const Tensor<Scalar>& zi, const Tensor<Scalar>& zj, double tau) {
  Tape<Scalar> tape(false);
  return pair_loss(tape.constant(zi), tape.constant(zj), tau).value()[0];
}

template <typename Scalar>
Scalar pairwise_multiview_loss(const ProjectedBatch<Scalar>& batch, double tau) {
  batch.validate();
  Tape<Scalar> tape(false);
  std::vector<Var<Scalar>> vars;
  for (const auto& v : batch.views) vars.push_back(tape.constant(v));
  return pairwise_multiview_loss(std::span<const Var<Scalar>>(vars), tau).value()[0];
}

}  // namespace pcl::contrastive
