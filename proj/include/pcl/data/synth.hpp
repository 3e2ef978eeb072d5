#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcl/data/manifest.hpp"

namespace pcl::data {

/// One generated view. Rank 1 dims give a vector view, rank 2 {features,
/// frames} a spectrogram-like view and rank 3 {layers, frames, features} a
/// layer-stack sequence view.
struct SynthView {
  std::string name;
  Shape dims;
};

/// Desk-scale multi-view corpus with known class structure.
///
/// Each utterance has a shared latent z = class mean + speaker offset +
/// noise. Every view observes tanh(A [z; u] + b) plus white noise, where u is
/// a view-private nuisance latent and A a seeded view-specific mixing matrix.
/// Sequence views modulate the latent per frame with seeded jitter.
struct SynthConfig {
  Index n_per_class = 50;
  Index n_classes = 4;
  Index latent_dim = 8;
  Index nuisance_dim = 32;
  Index n_speakers = 10;
  Index n_sessions = 5;
  std::vector<SynthView> views = {{"w2v2", {5, 8, 64}}, {"spec", {16, 12}}, {"egemaps", {42}}};
  double noise_sigma = 0.7;
  /// Minimum distance between class means, in units of noise_sigma.
  double class_separation = 1.6;
  double speaker_sigma = 0.3;
  double nuisance_scale = 1.0;
  double observation_sigma = 0.3;
  double temporal_jitter = 0.1;

  void validate() const;
};

std::vector<std::string> synth_class_names(Index n_classes);

/// Writes one MVF file per record and view under `out_dir/features/<view>/`
/// plus `out_dir/manifest.txt`, and returns the loaded manifest.
Manifest synth_generate(const SynthConfig& cfg, std::uint64_t seed, const std::string& out_dir);

}  // namespace pcl::data
