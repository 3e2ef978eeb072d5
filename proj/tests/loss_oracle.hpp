#pragma once

// Scalar reference implementation of the contrastive objective, written
// with plain loops in long double and no shared code with the engine.

#include <cmath>
#include <vector>

namespace pcl::testing::oracle {

using Rows = std::vector<std::vector<double>>;

inline long double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  long double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<long double>(a[i]) * b[i];
    na += static_cast<long double>(a[i]) * a[i];
    nb += static_cast<long double>(b[i]) * b[i];
  }
  const long double da = std::max(std::sqrt(na), 1e-8L);
  const long double db = std::max(std::sqrt(nb), 1e-8L);
  return dot / (da * db);
}

/// -log(exp(s_ll / tau) / sum_k exp(s_lk / tau)) for every anchor l of zi.
inline std::vector<double> directed(const Rows& zi, const Rows& zj, double tau) {
  const std::size_t n = zi.size();
  std::vector<double> out(n);
  for (std::size_t l = 0; l < n; ++l) {
    std::vector<long double> logits(n);
    long double peak = -INFINITY;
    for (std::size_t k = 0; k < n; ++k) {
      logits[k] = cosine(zi[l], zj[k]) / tau;
      peak = std::max(peak, logits[k]);
    }
    long double denom = 0;
    for (long double v : logits) denom += std::exp(v - peak);
    out[l] = static_cast<double>(-(logits[l] - peak - std::log(denom)));
  }
  return out;
}

inline double pair(const Rows& zi, const Rows& zj, double tau) {
  const auto a = directed(zi, zj, tau);
  const auto b = directed(zj, zi, tau);
  long double acc = 0;
  for (std::size_t l = 0; l < a.size(); ++l) acc += static_cast<long double>(a[l]) + b[l];
  return static_cast<double>(acc / a.size());
}

inline double multiview(const std::vector<Rows>& views, double tau) {
  const std::size_t k = views.size();
  long double acc = 0;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b)
      if (a != b) acc += pair(views[a], views[b], tau);
  return static_cast<double>(acc / (k * (k - 1) / 2.0L));
}

}  // namespace pcl::testing::oracle
