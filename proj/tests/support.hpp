#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "pcl/core/init.hpp"
#include "pcl/core/tensor.hpp"
#include "pcl/data/synth.hpp"

namespace pcl::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("pcl_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& rel = "") const { return rel.empty() ? path_.string() : (path_ / rel).string(); }

 private:
  std::filesystem::path path_;
};

inline std::vector<char> file_bytes(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

template <typename Scalar>
Tensor<Scalar> random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  return gaussian<Scalar>(std::move(shape), scale, rng);
}

/// Small three-view corpus that trains in well under a second per run.
inline data::SynthConfig tiny_synth(Index per_class = 20) {
  data::SynthConfig cfg;
  cfg.n_per_class = per_class;
  cfg.views = {{"w2v2", {3, 4, 16}}, {"spec", {8, 8}}, {"egemaps", {12}}};
  return cfg;
}

}  // namespace pcl::testing
