#include "pcl/models/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "pcl/core/binary_io.hpp"

namespace pcl::models {

namespace {

constexpr const char* kMagic = "PCLCKPT 1";

std::string join(const std::vector<Index>& dims) {
  if (dims.empty()) return "-";
  std::string s;
  for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? "," : "") + std::to_string(dims[i]);
  return s;
}

std::vector<Index> split_dims(const std::string& s) {
  std::vector<Index> out;
  if (s == "-") return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoll(item));
    } catch (const std::exception&) {
      throw FormatError("bad dimension list '" + s + "'");
    }
  }
  return out;
}

void check_name(const std::string& name) {
  if (name.empty() || name.find_first_of(" \t\n") != std::string::npos) {
    throw ContractError("checkpoint names must be non-empty and free of whitespace: '" + name + "'");
  }
}

void copy_into(const Checkpoint& ckpt, const std::string& name, Parameter<float>& dst) {
  const Parameter<float>* src = ckpt.find(name);
  if (src == nullptr) throw SchemaError("checkpoint has no parameter '" + name + "'");
  if (src->value.shape() != dst.value.shape()) {
    throw SchemaError("parameter '" + name + "' has shape " + shape_str(src->value.shape()) + ", model expects " +
                      shape_str(dst.value.shape()));
  }
  dst.value = src->value;
  dst.zero_grad();
}

std::string prefix(const std::string& view, const char* part) { return view + "/" + part + "/"; }

}  // namespace

const Parameter<float>* Checkpoint::find(const std::string& name) const {
  for (const auto& p : params) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

void Checkpoint::set_meta(const std::string& key, double value) { meta[key] = format_hex(value); }

double Checkpoint::meta_double(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end()) throw SchemaError("checkpoint metadata has no key '" + key + "'");
  return parse_hex(it->second);
}

bool operator==(const Checkpoint& a, const Checkpoint& b) {
  if (a.encoders != b.encoders || a.meta != b.meta || a.params.size() != b.params.size()) return false;
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    if (a.params[i].name != b.params[i].name || !(a.params[i].value == b.params[i].value)) return false;
  }
  return true;
}

std::string format_hex(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::hex);
  if (ec != std::errc()) throw ContractError("cannot format value");
  return std::string(buf, end);
}

double parse_hex(const std::string& s) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::hex);
  if (ec != std::errc() || end != s.data() + s.size()) throw FormatError("bad hex float '" + s + "'");
  return v;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ostringstream header;
  header << kMagic << '\n';
  for (const auto& [key, value] : ckpt.meta) {
    check_name(key);
    if (value.find('\n') != std::string::npos) throw ContractError("metadata values must be single-line");
    header << "meta " << key << ' ' << value << '\n';
  }
  for (const auto& spec : ckpt.encoders) {
    check_name(spec.view);
    header << "encoder " << spec.view << ' ' << to_string(spec.kind) << ' ' << join(spec.input_dims) << ' '
           << spec.output_dim << ' ' << join(spec.channels) << '\n';
  }
  std::uint64_t offset = 0;
  for (const auto& p : ckpt.params) {
    check_name(p.name);
    header << "param " << p.name << ' ' << p.value.rank();
    for (Index d : p.value.shape()) header << ' ' << d;
    header << ' ' << offset << '\n';
    offset += static_cast<std::uint64_t>(p.value.size()) * 4;
  }
  header << "payload " << offset << '\n';

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  const std::string h = header.str();
  os.write(h.data(), static_cast<std::streamsize>(h.size()));
  for (const auto& p : ckpt.params) io::write_f32_le(os, p.value.values());
  if (!os) throw Error("failed writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open checkpoint '" + path + "'");
  std::string line;
  if (!std::getline(is, line) || line != kMagic) throw FormatError("'" + path + "' is not a checkpoint");
  Checkpoint ckpt;
  std::vector<std::uint64_t> offsets;
  std::uint64_t payload = 0;
  bool have_payload = false;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "meta") {
      std::string key;
      ls >> key;
      std::string value;
      std::getline(ls, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      ckpt.meta[key] = value;
    } else if (tag == "encoder") {
      EncoderSpec spec;
      std::string kind, dims, channels;
      ls >> spec.view >> kind >> dims >> spec.output_dim >> channels;
      if (!ls) throw FormatError("malformed encoder line in '" + path + "'");
      spec.kind = encoder_kind_from_string(kind);
      spec.input_dims = split_dims(dims);
      spec.channels = split_dims(channels);
      ckpt.encoders.push_back(std::move(spec));
    } else if (tag == "param") {
      std::string name;
      Index rank = 0;
      ls >> name >> rank;
      if (!ls || rank < 0 || rank > 8) throw FormatError("malformed param line in '" + path + "'");
      Shape shape(static_cast<std::size_t>(rank));
      for (Index& d : shape) ls >> d;
      std::uint64_t off = 0;
      ls >> off;
      if (!ls) throw FormatError("malformed param line in '" + path + "'");
      ckpt.params.emplace_back(name, Tensor<float>(shape));
      offsets.push_back(off);
    } else if (tag == "payload") {
      ls >> payload;
      if (!ls) throw FormatError("malformed payload line in '" + path + "'");
      have_payload = true;
      break;
    } else {
      throw FormatError("unknown header line '" + line + "' in '" + path + "'");
    }
  }
  if (!have_payload) throw FormatError("checkpoint '" + path + "' has no payload marker");
  std::uint64_t expected = 0;
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    if (offsets[i] != expected) throw FormatError("parameter offsets are not contiguous in '" + path + "'");
    expected += static_cast<std::uint64_t>(ckpt.params[i].value.size()) * 4;
  }
  if (expected != payload) throw FormatError("payload size does not match parameter table in '" + path + "'");
  try {
    for (auto& p : ckpt.params) io::read_f32_le(is, p.value.values());
  } catch (const FormatError&) {
    throw FormatError("checkpoint '" + path + "' is truncated");
  }
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after payload in '" + path + "'");
  return ckpt;
}

const EncoderSpec& find_encoder_spec(const Checkpoint& ckpt, const std::string& view) {
  for (const auto& s : ckpt.encoders) {
    if (s.view == view) return s;
  }
  throw SchemaError("checkpoint has no encoder for view '" + view + "'");
}

void store_encoder(Checkpoint& ckpt, const Encoder<float>& enc) {
  ckpt.encoders.push_back(enc.spec());
  for (const auto& p : enc.parameters()) ckpt.params.emplace_back(prefix(enc.spec().view, "encoder") + p.name, p.value);
}

void store_projection(Checkpoint& ckpt, const std::string& view, ProjectionHead<float>& head) {
  for (auto* p : head.parameters()) ckpt.params.emplace_back(prefix(view, "projection") + p->name, p->value);
}

void store_classifier(Checkpoint& ckpt, const std::string& view, ClassifierHead<float>& head) {
  for (auto* p : head.parameters()) ckpt.params.emplace_back(prefix(view, "classifier") + p->name, p->value);
}

void restore_encoder(const Checkpoint& ckpt, Encoder<float>& enc) {
  const EncoderSpec& stored = find_encoder_spec(ckpt, enc.spec().view);
  if (!(stored == enc.spec())) {
    throw SchemaError("checkpoint encoder for view '" + stored.view + "' (" + to_string(stored.kind) + " " +
                      shape_str(stored.input_dims) + ") does not match the requested " + to_string(enc.spec().kind) +
                      " " + shape_str(enc.spec().input_dims));
  }
  for (auto& p : enc.parameters()) copy_into(ckpt, prefix(stored.view, "encoder") + p.name, p);
}

void restore_projection(const Checkpoint& ckpt, const std::string& view, ProjectionHead<float>& head) {
  for (auto* p : head.parameters()) copy_into(ckpt, prefix(view, "projection") + p->name, *p);
}

void restore_classifier(const Checkpoint& ckpt, const std::string& view, ClassifierHead<float>& head) {
  for (auto* p : head.parameters()) copy_into(ckpt, prefix(view, "classifier") + p->name, *p);
}

}  // namespace pcl::models
