#pragma once

#include <cmath>
#include <initializer_list>
#include <random>

#include "pcl/core/tensor.hpp"

namespace pcl {

/// Deterministic generator used for every seeded draw in the engine.
using Rng = std::mt19937_64;

/// Uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)) weights.
template <typename Scalar>
Tensor<Scalar> fan_in_uniform(Shape shape, Index fan_in, Rng& rng) {
  Tensor<Scalar> t(std::move(shape));
  const double bound = std::sqrt(1.0 / static_cast<double>(std::max<Index>(fan_in, 1)));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Scalar& v : t.values()) v = static_cast<Scalar>(dist(rng));
  return t;
}

template <typename Scalar>
Tensor<Scalar> gaussian(Shape shape, double stddev, Rng& rng) {
  Tensor<Scalar> t(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (Scalar& v : t.values()) v = static_cast<Scalar>(dist(rng));
  return t;
}

}  // namespace pcl

namespace pcl {

/// SplitMix64 finalizer over `base` and each tag in turn; used to give every
/// component of a run its own reproducible stream.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
  auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(base);
  for (std::uint64_t t : tags) h = mix(h ^ t);
  return h;
}

}  // namespace pcl
