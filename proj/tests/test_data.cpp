#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <cstring>
#include <set>

#include "pcl/core/errors.hpp"
#include "pcl/data/feature_csv.hpp"
#include "pcl/data/manifest.hpp"
#include "pcl/data/mvf.hpp"
#include "pcl/data/synth.hpp"
#include "support.hpp"

using namespace pcl;
using namespace pcl::data;
namespace tc = pcl::testing;
namespace fs = std::filesystem;

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  os << text;
}

void truncate_by(const std::string& path, std::uintmax_t bytes) {
  fs::resize_file(path, fs::file_size(path) - bytes);
}

UtteranceRecord labeled(std::string id, std::string label, int session = 1) {
  UtteranceRecord r;
  r.id = std::move(id);
  r.session = session;
  r.speaker = "s";
  r.label = std::move(label);
  return r;
}

std::vector<UtteranceRecord> balanced(Index per_class, const std::vector<std::string>& classes) {
  std::vector<UtteranceRecord> out;
  for (const auto& c : classes) {
    for (Index i = 0; i < per_class; ++i) out.push_back(labeled(c + std::to_string(1000 + i), c));
  }
  return out;
}

const std::vector<std::string> kFour = {"neutral", "angry", "sad", "happy"};

}  // namespace

TEST(Mvf, RoundTripIsBitExact) {
  tc::TempDir dir("mvf");
  const TensorF t({3, 2}, {1.5f, -2.25f, 0.0f, 3.0e-8f, 1e30f, -0.0f});
  mvf_write(dir.str("a.mvf"), t);
  const TensorF back = mvf_read(dir.str("a.mvf"));
  EXPECT_EQ(back.shape(), t.shape());
  EXPECT_EQ(std::memcmp(back.data(), t.data(), sizeof(float) * 6), 0);
  EXPECT_EQ(mvf_read_shape(dir.str("a.mvf")), (Shape{3, 2}));
  EXPECT_EQ(fs::file_size(dir.str("a.mvf")), 4u + 4u + 4u + 2u * 8u + 6u * 4u);
}

TEST(Mvf, LayerStackPayloadSize) {
  tc::TempDir dir("mvf");
  const TensorF t({13, 749, 768});
  mvf_write(dir.str("w.mvf"), t);
  EXPECT_EQ(fs::file_size(dir.str("w.mvf")), 12u + 3u * 8u + 13u * 749u * 768u * 4u);
  EXPECT_EQ(mvf_read_shape(dir.str("w.mvf")), (Shape{13, 749, 768}));
}

TEST(Mvf, TruncatedPayloadIsFormatError) {
  tc::TempDir dir("mvf");
  mvf_write(dir.str("t.mvf"), TensorF({4, 4}));
  truncate_by(dir.str("t.mvf"), 4);
  EXPECT_THROW(mvf_read(dir.str("t.mvf")), FormatError);
  EXPECT_THROW(mvf_read_shape(dir.str("t.mvf")), FormatError);
}

TEST(Mvf, TruncatedHeaderAndBadMagic) {
  tc::TempDir dir("mvf");
  mvf_write(dir.str("h.mvf"), TensorF({4, 4}));
  fs::resize_file(dir.str("h.mvf"), 10);
  EXPECT_THROW(mvf_read(dir.str("h.mvf")), FormatError);
  write_text(dir.str("bad.mvf"), "NOPE0000000000000000");
  EXPECT_THROW(mvf_read(dir.str("bad.mvf")), FormatError);
}

class ManifestFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    for (const char* v : {"w2v2", "spec", "egemaps"}) fs::create_directories(dir.path() / v);
    for (int i = 0; i < 4; ++i) {
      const std::string id = "u" + std::to_string(i);
      mvf_write(dir.str("w2v2/" + id + ".mvf"), TensorF({2, 3, 4}));
      mvf_write(dir.str("spec/" + id + ".mvf"), TensorF({5, 6}));
      mvf_write(dir.str("egemaps/" + id + ".mvf"), TensorF({42}));
    }
  }

  std::string text(int records = 4) const {
    std::string s = "# toy\nview w2v2 3 2 3 4\nview spec 2 5 6\nview egemaps 1 42\nlabels neutral,angry\n";
    for (int i = 0; i < records; ++i) {
      const std::string id = "u" + std::to_string(i);
      s += id + "|" + std::to_string(i + 1) + "|spk" + std::to_string(i % 2) + "|" + (i == 3 ? "-" : "angry") +
           "|w2v2=w2v2/" + id + ".mvf;spec=spec/" + id + ".mvf;egemaps=egemaps/" + id + ".mvf\n";
    }
    return s;
  }

  tc::TempDir dir{"manifest"};
};

TEST_F(ManifestFixture, ParsesAndLoads) {
  write_text(dir.str("manifest.txt"), text());
  const Manifest m = load_manifest(dir.str("manifest.txt"));
  ASSERT_EQ(m.records.size(), 4u);
  ASSERT_EQ(m.views.size(), 3u);
  EXPECT_EQ(m.view("spec").dims, (Shape{5, 6}));
  EXPECT_EQ(m.labels, (std::vector<std::string>{"neutral", "angry"}));
  EXPECT_EQ(m.records[0].label, std::optional<std::string>("angry"));
  EXPECT_FALSE(m.records[3].label.has_value());
  EXPECT_EQ(m.sessions(), (std::vector<int>{1, 2, 3, 4}));
  EXPECT_EQ(m.label_index("angry"), 1);
  EXPECT_THROW(m.label_index("sad"), ContractError);
  EXPECT_TRUE(fs::exists(m.resolve(m.records[2].view_paths.at("egemaps"))));
}

TEST_F(ManifestFixture, FormatRoundTrip) {
  const Manifest m = parse_manifest(text(), dir.str());
  const Manifest again = parse_manifest(format_manifest(m), dir.str());
  EXPECT_EQ(again.views, m.views);
  EXPECT_EQ(again.labels, m.labels);
  EXPECT_EQ(again.records, m.records);
}

TEST_F(ManifestFixture, MissingFileIsMissingViewError) {
  write_text(dir.str("manifest.txt"), text());
  fs::remove(dir.str("spec/u2.mvf"));
  try {
    load_manifest(dir.str("manifest.txt"));
    FAIL() << "expected MissingViewError";
  } catch (const MissingViewError& e) {
    EXPECT_NE(std::string(e.what()).find("u2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("spec"), std::string::npos);
  }
}

TEST_F(ManifestFixture, MissingPathIsMissingViewError) {
  std::string s = text();
  s.replace(s.find(";egemaps=egemaps/u1.mvf"), std::string(";egemaps=egemaps/u1.mvf").size(), "");
  write_text(dir.str("manifest.txt"), s);
  EXPECT_THROW(load_manifest(dir.str("manifest.txt")), MissingViewError);
}

TEST_F(ManifestFixture, DimMismatchIsSchemaError) {
  write_text(dir.str("manifest.txt"), text());
  mvf_write(dir.str("egemaps/u1.mvf"), TensorF({40}));
  EXPECT_THROW(load_manifest(dir.str("manifest.txt")), SchemaError);
}

TEST_F(ManifestFixture, MalformedLinesAreFormatErrors) {
  EXPECT_THROW(parse_manifest("view spec two 5 6\n", dir.str()), FormatError);
  EXPECT_THROW(parse_manifest(text() + "u9|x|s|-|spec=spec/u0.mvf\n", dir.str()), FormatError);
  EXPECT_THROW(parse_manifest(text() + text(1), dir.str()), FormatError);
}

TEST(CvSplits, FoldZeroAndLast) {
  const std::vector<int> sessions = {1, 2, 3, 4, 5};
  const CvSplit f0 = make_cv_splits(sessions, 0);
  EXPECT_EQ(f0.test, 1);
  EXPECT_EQ(f0.val, 2);
  EXPECT_EQ(f0.train, (std::vector<int>{3, 4, 5}));
  const CvSplit f4 = make_cv_splits(sessions, 4);
  EXPECT_EQ(f4.test, 5);
  EXPECT_EQ(f4.val, 1);
  EXPECT_EQ(f4.train, (std::vector<int>{2, 3, 4}));
}

TEST(CvSplits, EveryFoldPartitionsTheSessions) {
  for (int s = 3; s <= 7; ++s) {
    std::vector<int> sessions;
    for (int i = 1; i <= s; ++i) sessions.push_back(i);
    std::multiset<int> tested;
    for (int fold = 0; fold < s; ++fold) {
      const CvSplit split = make_cv_splits(sessions, fold);
      std::multiset<int> all(split.train.begin(), split.train.end());
      all.insert(split.val);
      all.insert(split.test);
      EXPECT_EQ(all, std::multiset<int>(sessions.begin(), sessions.end()));
      EXPECT_NE(split.val, split.test);
      tested.insert(split.test);
    }
    EXPECT_EQ(tested, std::multiset<int>(sessions.begin(), sessions.end()));
  }
}

TEST(CvSplits, RejectsTooFewSessionsAndBadFold) {
  EXPECT_THROW(make_cv_splits(std::vector<int>{1, 2}, 0), ContractError);
  EXPECT_THROW(make_cv_splits(std::vector<int>{1, 2, 3}, 3), ContractError);
  EXPECT_THROW(make_cv_splits(std::vector<int>{1, 2, 3}, -1), ContractError);
}

TEST(SparseLabels, CountRule) {
  EXPECT_EQ(sparse_count(0.02, 100), 2);
  EXPECT_EQ(sparse_count(0.02, 10), 1);
  EXPECT_EQ(sparse_count(0.05, 10), 1);
  EXPECT_EQ(sparse_count(0.25, 10), 3);
  EXPECT_EQ(sparse_count(1.0, 7), 7);
}

TEST(SparseLabels, PerClassSubsetWithoutReplacement) {
  const auto records = balanced(100, kFour);
  const auto picked = sample_sparse_labels(records, kFour, 0.02, 1);
  ASSERT_EQ(picked.size(), 8u);
  std::map<std::string, int> per_class;
  std::set<std::string> ids;
  for (const auto& r : picked) {
    ++per_class[*r.label];
    ids.insert(r.id);
  }
  for (const auto& c : kFour) EXPECT_EQ(per_class[c], 2);
  EXPECT_EQ(ids.size(), picked.size());
  EXPECT_TRUE(std::is_sorted(picked.begin(), picked.end(), [](const auto& a, const auto& b) { return a.id < b.id; }));
}

TEST(SparseLabels, DeterministicAndOrderIndependent) {
  auto records = balanced(50, kFour);
  std::set<std::vector<std::string>> distinct;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto a = sample_sparse_labels(records, kFour, 0.1, seed);
    auto shuffled = records;
    std::reverse(shuffled.begin(), shuffled.end());
    const auto b = sample_sparse_labels(shuffled, kFour, 0.1, seed);
    EXPECT_EQ(a, b);
    std::vector<std::string> ids;
    for (const auto& r : a) ids.push_back(r.id);
    distinct.insert(ids);
  }
  EXPECT_GT(distinct.size(), 1u);
}

TEST(SparseLabels, Errors) {
  const auto records = balanced(10, {"neutral", "angry"});
  EXPECT_THROW(sample_sparse_labels(records, kFour, 0.5, 0), EmptyClassError);
  EXPECT_THROW(sample_sparse_labels(records, {"neutral"}, 0.0, 0), ContractError);
  EXPECT_THROW(sample_sparse_labels(records, {"neutral"}, 1.5, 0), ContractError);
}

TEST(LabelFilter, KeepsMatchingRecords) {
  Manifest m;
  m.labels = kFour;
  for (const char* l : {"neutral", "angry", "excited", "sad", "frustrated", "happy", "neutral"})
    m.records.push_back(labeled(std::string("r") + std::to_string(m.records.size()), l));
  m.records.push_back(labeled("unlabeled", ""));
  m.records.back().label.reset();

  const std::set<std::string> all(kFour.begin(), kFour.end());
  const LabelMap map = LabelMap::four_class();
  EXPECT_EQ(filter_by_labels(m, all, &map).records.size(), 6u);
  EXPECT_EQ(filter_by_labels(m, all).records.size(), 5u);
  EXPECT_EQ(filter_by_labels(m, {"neutral"}).records.size(), 2u);

  const auto a = filter_by_labels(m, {"neutral", "angry"}, &map).records.size();
  const auto b = filter_by_labels(m, {"sad", "happy"}, &map).records.size();
  EXPECT_EQ(a + b, 6u);
  EXPECT_THROW(filter_by_labels(m, {"surprised"}), EmptyDatasetError);

  const Manifest mapped = apply_label_map(m, map);
  EXPECT_EQ(mapped.records.size(), 6u);
  EXPECT_EQ(mapped.records[2].label, std::optional<std::string>("happy"));
}

TEST(Synth, BalancedAndDeterministic) {
  tc::TempDir a("synth"), b("synth");
  SynthConfig cfg = tc::tiny_synth(50);
  const Manifest ma = synth_generate(cfg, 4, a.str());
  const Manifest mb = synth_generate(cfg, 4, b.str());
  ASSERT_EQ(ma.records.size(), 200u);
  std::map<std::string, int> per_class;
  for (const auto& r : ma.records) ++per_class[*r.label];
  for (const auto& c : kFour) EXPECT_EQ(per_class[c], 50);
  EXPECT_EQ(ma.sessions().size(), 5u);
  for (std::size_t i = 0; i < ma.records.size(); i += 17) {
    for (const auto& v : ma.views) {
      const auto& rel = ma.records[i].view_paths.at(v.name);
      EXPECT_EQ(tc::file_bytes(ma.resolve(rel)), tc::file_bytes(mb.resolve(rel)));
    }
  }
}

TEST(Synth, ClassesAreLinearlySeparableAcrossSessions) {
  tc::TempDir dir("synth");
  SynthConfig cfg = tc::tiny_synth(100);
  const Manifest m = synth_generate(cfg, 5, dir.str());
  std::vector<UtteranceRecord> train = records_in_sessions(m, {2, 3, 4, 5});
  std::vector<UtteranceRecord> test = records_in_sessions(m, {1});
  auto features = [&](const std::vector<UtteranceRecord>& rs) {
    Eigen::MatrixXd x(static_cast<Index>(rs.size()), 0);
    for (const auto& v : m.views) {
      const TensorF t = load_view(m, v.name, rs);
      const Index width = t.size() / t.dim(0);
      Eigen::MatrixXd block(t.dim(0), width);
      for (Index r = 0; r < t.dim(0); ++r)
        for (Index c = 0; c < width; ++c) block(r, c) = t[r * width + c];
      Eigen::MatrixXd joined(x.rows(), x.cols() + width);
      joined << x, block;
      x = joined;
    }
    Eigen::MatrixXd with_bias(x.rows(), x.cols() + 1);
    with_bias << x, Eigen::VectorXd::Ones(x.rows());
    return with_bias;
  };
  const Eigen::MatrixXd xtr = features(train), xte = features(test);
  Eigen::MatrixXd ytr = Eigen::MatrixXd::Zero(xtr.rows(), 4);
  for (std::size_t i = 0; i < train.size(); ++i) ytr(static_cast<Index>(i), m.label_index(*train[i].label)) = 1.0;
  const Eigen::MatrixXd gram = xtr.transpose() * xtr + 1.0 * Eigen::MatrixXd::Identity(xtr.cols(), xtr.cols());
  const Eigen::MatrixXd w = gram.ldlt().solve(xtr.transpose() * ytr);
  const Eigen::MatrixXd scores = xte * w;
  std::vector<int> hit(4, 0), seen(4, 0);
  for (std::size_t i = 0; i < test.size(); ++i) {
    Index pred;
    scores.row(static_cast<Index>(i)).maxCoeff(&pred);
    const Index truth = m.label_index(*test[i].label);
    ++seen[truth];
    hit[truth] += pred == truth;
  }
  double uar = 0.0;
  for (int c = 0; c < 4; ++c) uar += static_cast<double>(hit[c]) / seen[c] / 4.0;
  EXPECT_GT(uar, 0.6);
}

TEST(Synth, RejectsBadConfig) {
  SynthConfig cfg;
  cfg.n_per_class = 0;
  EXPECT_THROW(cfg.validate(), ContractError);
}

class FeatureCsv : public ::testing::Test {
 protected:
  std::string header(Index width) const {
    std::string s = "id";
    for (Index c = 0; c < width; ++c) s += ",f" + std::to_string(c);
    return s + "\n";
  }
  std::string row(const std::string& id, Index width, double base) const {
    std::string s = id;
    for (Index c = 0; c < width; ++c) s += "," + std::to_string(base + 0.25 * static_cast<double>(c));
    return s + "\n";
  }
  tc::TempDir dir{"csv"};
};

TEST_F(FeatureCsv, ReadsEightyEightColumns) {
  write_text(dir.str("e.csv"), header(88) + row("a", 88, 0.0) + row("b", 88, -3.0));
  const FeatureTable t = read_feature_csv(dir.str("e.csv"), kEgemapsColumns);
  EXPECT_EQ(t.columns.size(), 88u);
  EXPECT_EQ(t.ids, (std::vector<std::string>{"a", "b"}));
  EXPECT_FLOAT_EQ(t.rows[1][4], -2.0f);
}

TEST_F(FeatureCsv, WrongWidthIsSchemaError) {
  write_text(dir.str("h.csv"), header(87) + row("a", 87, 0.0));
  EXPECT_THROW(read_feature_csv(dir.str("h.csv"), kEgemapsColumns), SchemaError);
  write_text(dir.str("r.csv"), header(88) + row("a", 87, 0.0));
  EXPECT_THROW(read_feature_csv(dir.str("r.csv"), kEgemapsColumns), SchemaError);
}

TEST_F(FeatureCsv, NonFiniteOrGarbageIsFormatError) {
  std::string bad = row("a", 88, 0.0);
  bad.replace(bad.find(",0.250000"), 9, ",nan");
  write_text(dir.str("n.csv"), header(88) + bad);
  EXPECT_THROW(read_feature_csv(dir.str("n.csv"), kEgemapsColumns), FormatError);
  std::string junk = row("a", 88, 0.0);
  junk.replace(junk.find(",0.250000"), 9, ",x1");
  write_text(dir.str("j.csv"), header(88) + junk);
  EXPECT_THROW(read_feature_csv(dir.str("j.csv"), kEgemapsColumns), FormatError);
}

TEST_F(FeatureCsv, MvfTwinIsValueIdentical) {
  write_text(dir.str("e.csv"), header(88) + row("a", 88, 1.0) + row("b", 88, 2.0));
  const FeatureTable t = read_feature_csv(dir.str("e.csv"), kEgemapsColumns);
  const auto paths = write_feature_vectors(t, dir.str("vec"));
  ASSERT_EQ(paths.size(), 2u);
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const TensorF v = mvf_read(paths[i]);
    ASSERT_EQ(v.shape(), (Shape{88}));
    for (Index c = 0; c < 88; ++c) EXPECT_EQ(v[c], t.rows[i][static_cast<std::size_t>(c)]);
  }
}
