#include "pcl/data/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "pcl/data/mvf.hpp"

namespace pcl::data {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(s);
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_line(std::size_t lineno, const std::string& why) {
  throw FormatError("manifest line " + std::to_string(lineno) + ": " + why);
}

}  // namespace

const ViewInfo& Manifest::view(const std::string& name) const {
  for (const auto& v : views) {
    if (v.name == name) return v;
  }
  throw ContractError("manifest has no view '" + name + "'");
}

bool Manifest::has_view(const std::string& name) const {
  return std::any_of(views.begin(), views.end(), [&](const ViewInfo& v) { return v.name == name; });
}

std::vector<int> Manifest::sessions() const {
  std::set<int> s;
  for (const auto& r : records) s.insert(r.session);
  return {s.begin(), s.end()};
}

std::string Manifest::resolve(const std::string& path) const {
  const fs::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p.string();
  return (fs::path(base_dir) / p).string();
}

Index Manifest::label_index(const std::string& label) const {
  auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw ContractError("label '" + label + "' is not in the manifest label set");
  return static_cast<Index>(it - labels.begin());
}

Manifest parse_manifest(const std::string& text, const std::string& base_dir) {
  Manifest m;
  m.base_dir = base_dir;
  std::istringstream is(text);
  std::string raw;
  std::size_t lineno = 0;
  std::set<std::string> ids;
  while (std::getline(is, raw)) {
    ++lineno;
    const std::string line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.rfind("view ", 0) == 0) {
      std::istringstream ls(line.substr(5));
      ViewInfo v;
      Index rank = 0;
      ls >> v.name >> rank;
      if (!ls || rank <= 0) bad_line(lineno, "malformed view declaration");
      v.dims.resize(static_cast<std::size_t>(rank));
      for (Index& d : v.dims) ls >> d;
      if (!ls) bad_line(lineno, "view '" + v.name + "' lists fewer dims than its rank");
      if (m.has_view(v.name)) bad_line(lineno, "duplicate view '" + v.name + "'");
      m.views.push_back(std::move(v));
    } else if (line.rfind("labels ", 0) == 0) {
      for (const auto& l : split(trim(line.substr(7)), ',')) {
        const std::string t = trim(l);
        if (!t.empty()) m.labels.push_back(t);
      }
    } else {
      const auto fields = split(line, '|');
      if (fields.size() != 5) bad_line(lineno, "record needs 5 '|'-separated fields");
      UtteranceRecord r;
      r.id = trim(fields[0]);
      if (r.id.empty()) bad_line(lineno, "empty record id");
      try {
        r.session = std::stoi(fields[1]);
      } catch (const std::exception&) {
        bad_line(lineno, "bad session '" + fields[1] + "'");
      }
      r.speaker = trim(fields[2]);
      const std::string label = trim(fields[3]);
      if (!label.empty() && label != "-") r.label = label;
      for (const auto& kv : split(fields[4], ';')) {
        const std::string entry = trim(kv);
        if (entry.empty()) continue;
        const auto eq = entry.find('=');
        if (eq == std::string::npos) bad_line(lineno, "view path '" + entry + "' lacks '='");
        r.view_paths[trim(entry.substr(0, eq))] = trim(entry.substr(eq + 1));
      }
      if (!ids.insert(r.id).second) bad_line(lineno, "duplicate record id '" + r.id + "'");
      m.records.push_back(std::move(r));
    }
  }
  return m;
}

std::string format_manifest(const Manifest& m) {
  std::ostringstream os;
  for (const auto& v : m.views) {
    os << "view " << v.name << ' ' << v.dims.size();
    for (Index d : v.dims) os << ' ' << d;
    os << '\n';
  }
  if (!m.labels.empty()) {
    os << "labels ";
    for (std::size_t i = 0; i < m.labels.size(); ++i) os << (i ? "," : "") << m.labels[i];
    os << '\n';
  }
  for (const auto& r : m.records) {
    os << r.id << '|' << r.session << '|' << r.speaker << '|' << r.label.value_or("-") << '|';
    bool first = true;
    for (const auto& [view, path] : r.view_paths) {
      os << (first ? "" : ";") << view << '=' << path;
      first = false;
    }
    os << '\n';
  }
  return os.str();
}

Manifest load_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open manifest '" + path + "'");
  std::stringstream buf;
  buf << is.rdbuf();
  Manifest m = parse_manifest(buf.str(), fs::path(path).parent_path().string());
  for (const auto& r : m.records) {
    for (const auto& v : m.views) {
      auto it = r.view_paths.find(v.name);
      if (it == r.view_paths.end()) throw MissingViewError(r.id, v.name, "no path listed");
      const std::string file = m.resolve(it->second);
      if (!fs::exists(file)) throw MissingViewError(r.id, v.name, file);
      const Shape shape = mvf_read_shape(file);
      if (shape != v.dims) {
        throw SchemaError("record '" + r.id + "' view '" + v.name + "' holds " + shape_str(shape) + ", catalog declares " +
                          shape_str(v.dims));
      }
    }
  }
  return m;
}

void save_manifest(const std::string& path, const Manifest& manifest) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  os << format_manifest(manifest);
}

std::optional<std::string> LabelMap::apply(const std::string& raw) const {
  auto it = mapping.find(raw);
  if (it != mapping.end()) return it->second;
  if (std::find(targets.begin(), targets.end(), raw) != targets.end()) return raw;
  return std::nullopt;
}

LabelMap LabelMap::four_class() {
  LabelMap m;
  m.targets = {"neutral", "angry", "sad", "happy"};
  m.mapping = {{"excited", "happy"}};
  return m;
}

Manifest filter_by_labels(const Manifest& manifest, const std::set<std::string>& keep, const LabelMap* label_map) {
  if (keep.empty()) throw ContractError("filter_by_labels: keep set is empty");
  Manifest out = manifest;
  out.records.clear();
  for (const auto& r : manifest.records) {
    if (!r.label) continue;
    const std::optional<std::string> l = label_map ? label_map->apply(*r.label) : r.label;
    if (l && keep.count(*l)) out.records.push_back(r);
  }
  if (out.records.empty()) throw EmptyDatasetError("no records carry any of the requested labels");
  return out;
}

Manifest apply_label_map(const Manifest& manifest, const LabelMap& label_map) {
  Manifest out = manifest;
  out.records.clear();
  out.labels = label_map.targets;
  for (auto r : manifest.records) {
    if (!r.label) continue;
    r.label = label_map.apply(*r.label);
    if (r.label) out.records.push_back(std::move(r));
  }
  return out;
}

CvSplit make_cv_splits(const std::vector<int>& sessions, int fold) {
  const int s = static_cast<int>(sessions.size());
  if (s < 3) throw ContractError("leave-one-session-out needs at least 3 sessions, got " + std::to_string(s));
  if (fold < 0 || fold >= s) throw ContractError("fold " + std::to_string(fold) + " outside [0, " + std::to_string(s) + ")");
  CvSplit split;
  split.test = sessions[static_cast<std::size_t>(fold)];
  split.val = sessions[static_cast<std::size_t>((fold + 1) % s)];
  for (int session : sessions) {
    if (session != split.test && session != split.val) split.train.push_back(session);
  }
  return split;
}

CvSplit make_cv_splits(const Manifest& manifest, int fold) { return make_cv_splits(manifest.sessions(), fold); }

std::vector<UtteranceRecord> records_in_sessions(const Manifest& manifest, const std::vector<int>& sessions) {
  std::vector<UtteranceRecord> out;
  for (const auto& r : manifest.records) {
    if (std::find(sessions.begin(), sessions.end(), r.session) != sessions.end()) out.push_back(r);
  }
  return out;
}

Index sparse_count(double fraction, Index n) {
  return std::max<Index>(1, static_cast<Index>(std::llround(fraction * static_cast<double>(n))));
}

std::vector<UtteranceRecord> sample_sparse_labels(const std::vector<UtteranceRecord>& records,
                                                  const std::vector<std::string>& classes, double fraction,
                                                  std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ContractError("label fraction must lie in (0, 1]");
  std::vector<const UtteranceRecord*> sorted;
  for (const auto& r : records) {
    if (!r.label) throw ContractError("record '" + r.id + "' has no label");
    sorted.push_back(&r);
  }
  std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) { return a->id < b->id; });
  std::mt19937_64 rng(seed);
  std::vector<UtteranceRecord> out;
  for (const auto& cls : classes) {
    std::vector<const UtteranceRecord*> members;
    for (const auto* r : sorted) {
      if (*r->label == cls) members.push_back(r);
    }
    if (members.empty()) throw EmptyClassError("class '" + cls + "' has no training records");
    std::shuffle(members.begin(), members.end(), rng);
    const Index keep = sparse_count(fraction, static_cast<Index>(members.size()));
    for (Index i = 0; i < keep; ++i) out.push_back(*members[static_cast<std::size_t>(i)]);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

TensorF load_view(const Manifest& manifest, const std::string& view, const std::vector<UtteranceRecord>& records) {
  const ViewInfo& info = manifest.view(view);
  Shape shape{static_cast<Index>(records.size())};
  shape.insert(shape.end(), info.dims.begin(), info.dims.end());
  TensorF out(shape);
  const Index stride = shape_numel(info.dims);
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto it = records[i].view_paths.find(view);
    if (it == records[i].view_paths.end()) throw MissingViewError(records[i].id, view, "no path listed");
    const TensorF t = mvf_read(manifest.resolve(it->second));
    if (t.shape() != info.dims) {
      throw SchemaError("record '" + records[i].id + "' view '" + view + "' holds " + shape_str(t.shape()) +
                        ", catalog declares " + shape_str(info.dims));
    }
    std::copy(t.values().begin(), t.values().end(), out.data() + static_cast<Index>(i) * stride);
  }
  return out;
}

}  // namespace pcl::data
