#include "pcl/train/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <thread>

namespace pcl::train {

const TensorF& Dataset::view(const std::string& name) const {
  auto it = views.find(name);
  if (it == views.end()) throw ContractError("dataset has no loaded view '" + name + "'");
  return it->second;
}

std::vector<Index> Dataset::indices_in_sessions(const std::vector<int>& sessions) const {
  std::vector<Index> out;
  for (Index i = 0; i < size(); ++i) {
    const int s = manifest.records[static_cast<std::size_t>(i)].session;
    if (std::find(sessions.begin(), sessions.end(), s) != sessions.end()) out.push_back(i);
  }
  return out;
}

Index Dataset::index_of(const std::string& id) const {
  for (Index i = 0; i < size(); ++i) {
    if (manifest.records[static_cast<std::size_t>(i)].id == id) return i;
  }
  throw ContractError("dataset has no record '" + id + "'");
}

Dataset load_dataset(const data::Manifest& manifest, const std::vector<std::string>& views) {
  Dataset d;
  d.manifest = manifest;
  for (const auto& v : views) {
    if (!manifest.has_view(v)) throw ContractError("manifest does not declare view '" + v + "'");
    d.views[v] = data::load_view(manifest, v, manifest.records);
  }
  for (const auto& r : manifest.records) {
    Index label = -1;
    if (r.label) {
      auto it = std::find(manifest.labels.begin(), manifest.labels.end(), *r.label);
      if (it != manifest.labels.end()) label = static_cast<Index>(it - manifest.labels.begin());
    }
    d.labels.push_back(label);
  }
  return d;
}

TensorF take_rows(const TensorF& t, std::span<const Index> rows) {
  if (t.rank() < 1) throw ShapeError("take_rows needs a tensor with a leading axis");
  Shape shape = t.shape();
  const Index n = shape[0];
  const Index stride = n == 0 ? 0 : t.size() / n;
  shape[0] = static_cast<Index>(rows.size());
  TensorF out(shape);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= n) throw ContractError("row " + std::to_string(rows[i]) + " out of range");
    std::copy_n(t.data() + rows[i] * stride, stride, out.data() + static_cast<Index>(i) * stride);
  }
  return out;
}

models::EncoderSpec default_encoder_spec(const data::ViewInfo& info) {
  models::EncoderSpec spec;
  spec.view = info.name;
  spec.input_dims = info.dims;
  switch (info.dims.size()) {
    case 3: spec.kind = models::EncoderKind::w2v2_pointwise; break;
    case 2: spec.kind = models::EncoderKind::spec_cnn; break;
    case 1: spec.kind = models::EncoderKind::vector_mlp; break;
    default: throw ContractError("no encoder family for view '" + info.name + "' of rank " + std::to_string(info.dims.size()));
  }
  spec.validate();
  return spec;
}

unsigned worker_count() {
  if (const char* env = std::getenv("PCL_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(Index n, const std::function<void(Index)>& fn, unsigned workers) {
  if (n <= 0) return;
  if (workers == 0) workers = worker_count();
  workers = static_cast<unsigned>(std::min<Index>(workers, n));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::atomic<Index> next{0};
  auto run = [&] {
    for (Index i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace pcl::train
