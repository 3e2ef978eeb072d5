#include "pcl/data/feature_csv.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pcl/data/mvf.hpp"

namespace pcl::data {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(line);
  while (std::getline(ss, item, ',')) {
    while (!item.empty() && (item.back() == '\r' || item.back() == ' ')) item.pop_back();
    while (!item.empty() && item.front() == ' ') item.erase(0, 1);
    out.push_back(item);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

FeatureTable read_feature_csv(const std::string& path, Index expected_columns) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open feature table '" + path + "'");
  std::string line;
  if (!std::getline(is, line)) throw FormatError("feature table '" + path + "' is empty");
  FeatureTable t;
  std::vector<std::string> header = split_csv(line);
  if (header.size() < 2) throw FormatError("feature table '" + path + "' needs an id column and at least one value");
  t.columns.assign(header.begin() + 1, header.end());
  const auto width = static_cast<Index>(t.columns.size());
  if (expected_columns > 0 && width != expected_columns) {
    throw SchemaError("'" + path + "' has " + std::to_string(width) + " value columns, expected " +
                      std::to_string(expected_columns));
  }
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> cells = split_csv(line);
    if (static_cast<Index>(cells.size()) != width + 1) {
      throw SchemaError("'" + path + "' line " + std::to_string(lineno) + " has " + std::to_string(cells.size() - 1) +
                        " values, expected " + std::to_string(width));
    }
    std::vector<float> row;
    row.reserve(static_cast<std::size_t>(width));
    for (std::size_t c = 1; c < cells.size(); ++c) {
      float v = 0.0f;
      const std::string& s = cells[c];
      auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v)) {
        throw FormatError("'" + path + "' line " + std::to_string(lineno) + ": bad value '" + s + "'");
      }
      row.push_back(v);
    }
    t.ids.push_back(cells[0]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<std::string> write_feature_vectors(const FeatureTable& table, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> paths;
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    const std::string p = (std::filesystem::path(dir) / (table.ids[i] + ".mvf")).string();
    mvf_write(p, TensorF({static_cast<Index>(table.rows[i].size())}, table.rows[i]));
    paths.push_back(p);
  }
  return paths;
}

}  // namespace pcl::data
