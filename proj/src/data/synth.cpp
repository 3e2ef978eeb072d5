#include "pcl/data/synth.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "pcl/core/init.hpp"
#include "pcl/data/mvf.hpp"

namespace pcl::data {

namespace fs = std::filesystem;

void SynthConfig::validate() const {
  if (n_per_class <= 0 || n_classes <= 0 || latent_dim <= 0 || nuisance_dim < 0 || n_speakers <= 0 || n_sessions <= 0) {
    throw ContractError("synthetic corpus sizes must be positive");
  }
  if (noise_sigma < 0 || speaker_sigma < 0 || nuisance_scale < 0 || observation_sigma < 0 || temporal_jitter < 0) {
    throw ContractError("synthetic noise scales must be non-negative");
  }
  if (views.empty()) throw ContractError("synthetic corpus needs at least one view");
  for (const auto& v : views) {
    if (v.dims.empty() || v.dims.size() > 3) throw ContractError("view '" + v.name + "' must have rank 1, 2 or 3");
    for (Index d : v.dims) {
      if (d <= 0) throw ContractError("view '" + v.name + "' has a non-positive dim");
    }
  }
}

std::vector<std::string> synth_class_names(Index n_classes) {
  static const char* kNames[] = {"neutral", "angry", "sad", "happy"};
  std::vector<std::string> out;
  for (Index c = 0; c < n_classes; ++c) {
    out.push_back(n_classes <= 4 ? kNames[c] : "class" + std::to_string(c));
  }
  return out;
}

namespace {

struct Mixing {
  RowMatrix<double> weight;  // [features, latent + nuisance]
  Vector<double> bias;
};

Mixing make_mixing(Index features, Index inputs, Rng& rng) {
  Mixing m;
  std::normal_distribution<double> g(0.0, 1.0 / std::sqrt(static_cast<double>(inputs)));
  std::normal_distribution<double> b(0.0, 0.1);
  m.weight.resize(features, inputs);
  for (Index i = 0; i < m.weight.size(); ++i) m.weight.data()[i] = g(rng);
  m.bias.resize(features);
  for (Index i = 0; i < features; ++i) m.bias(i) = b(rng);
  return m;
}

Vector<double> gaussian_vector(Index n, double sigma, Rng& rng) {
  std::normal_distribution<double> g(0.0, sigma);
  Vector<double> v(n);
  for (Index i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

std::string record_id(Index i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "utt%05lld", static_cast<long long>(i));
  return buf;
}

}  // namespace

Manifest synth_generate(const SynthConfig& cfg, std::uint64_t seed, const std::string& out_dir) {
  cfg.validate();
  Rng structure(seed * 0x9E3779B97F4A7C15ULL + 1);
  Rng draws(seed * 0x9E3779B97F4A7C15ULL + 2);

  const Index latent = cfg.latent_dim;
  const Index aug = latent + cfg.nuisance_dim;

  // Class means with a guaranteed minimum pairwise distance.
  const double min_dist = cfg.class_separation * cfg.noise_sigma;
  const double mean_sigma = std::max(min_dist, 1e-3);
  std::vector<Vector<double>> means;
  for (int attempt = 0; attempt < 10000 && static_cast<Index>(means.size()) < cfg.n_classes; ++attempt) {
    Vector<double> mu = gaussian_vector(latent, mean_sigma, structure);
    bool ok = true;
    for (const auto& other : means) ok = ok && (mu - other).norm() >= min_dist;
    if (ok) means.push_back(std::move(mu));
  }
  if (static_cast<Index>(means.size()) < cfg.n_classes) throw ContractError("could not place separated class means");

  std::vector<Vector<double>> speakers;
  for (Index s = 0; s < cfg.n_speakers; ++s) speakers.push_back(gaussian_vector(latent, cfg.speaker_sigma, structure));

  // One mixing per view, or per layer for layer-stack views.
  std::vector<std::vector<Mixing>> mixing;
  for (const auto& v : cfg.views) {
    std::vector<Mixing> per;
    const Index layers = v.dims.size() == 3 ? v.dims[0] : 1;
    const Index features = v.dims.size() == 3 ? v.dims[2] : v.dims[0];
    for (Index l = 0; l < layers; ++l) per.push_back(make_mixing(features, aug, structure));
    mixing.push_back(std::move(per));
  }

  const auto classes = synth_class_names(cfg.n_classes);
  Manifest m;
  m.labels = classes;
  for (const auto& v : cfg.views) m.views.push_back({v.name, v.dims});
  for (const auto& v : cfg.views) fs::create_directories(fs::path(out_dir) / "features" / v.name);

  std::normal_distribution<double> unit(0.0, 1.0);
  const Index total = cfg.n_per_class * cfg.n_classes;
  for (Index i = 0; i < total; ++i) {
    const Index cls = i % cfg.n_classes;
    const Index spk = (i / cfg.n_classes) % cfg.n_speakers;
    UtteranceRecord r;
    r.id = record_id(i);
    r.session = static_cast<int>(spk % cfg.n_sessions) + 1;
    char spk_name[32];
    std::snprintf(spk_name, sizeof(spk_name), "spk%02lld", static_cast<long long>(spk));
    r.speaker = spk_name;
    r.label = classes[static_cast<std::size_t>(cls)];

    const Vector<double> z = means[static_cast<std::size_t>(cls)] + speakers[static_cast<std::size_t>(spk)] +
                             gaussian_vector(latent, cfg.noise_sigma, draws);
    for (std::size_t k = 0; k < cfg.views.size(); ++k) {
      const SynthView& view = cfg.views[k];
      Vector<double> a(aug);
      a.head(latent) = z;
      if (cfg.nuisance_dim > 0) a.tail(cfg.nuisance_dim) = gaussian_vector(cfg.nuisance_dim, cfg.nuisance_scale, draws);

      TensorF out(view.dims);
      auto observe = [&](const Mixing& mix, const Vector<double>& input, Index features, auto&& store) {
        const Vector<double> h = (mix.weight * input + mix.bias).array().tanh();
        for (Index f = 0; f < features; ++f) store(f, h(f) + cfg.observation_sigma * unit(draws));
      };
      if (view.dims.size() == 1) {
        observe(mixing[k][0], a, view.dims[0], [&](Index f, double v) { out[f] = static_cast<float>(v); });
      } else {
        const bool stack = view.dims.size() == 3;
        const Index layers = stack ? view.dims[0] : 1;
        const Index frames = stack ? view.dims[1] : view.dims[1];
        const Index features = stack ? view.dims[2] : view.dims[0];
        for (Index t = 0; t < frames; ++t) {
          Vector<double> at = a * (1.0 + cfg.temporal_jitter * unit(draws));
          for (Index l = 0; l < layers; ++l) {
            observe(mixing[k][static_cast<std::size_t>(l)], at, features, [&](Index f, double v) {
              // layer stacks are [L, T, F]; spectrogram-like views are [F, T].
              const Index idx = stack ? (l * frames + t) * features + f : f * frames + t;
              out[idx] = static_cast<float>(v);
            });
          }
        }
      }
      const fs::path rel = fs::path("features") / view.name / (r.id + ".mvf");
      mvf_write((fs::path(out_dir) / rel).string(), out);
      r.view_paths[view.name] = rel.string();
    }
    m.records.push_back(std::move(r));
  }
  const std::string manifest_path = (fs::path(out_dir) / "manifest.txt").string();
  save_manifest(manifest_path, m);
  return load_manifest(manifest_path);
}

}  // namespace pcl::data
