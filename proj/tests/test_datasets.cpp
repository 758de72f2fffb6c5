#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "lgc/datasets.hpp"
#include "lgc/error.hpp"
#include "support.hpp"

namespace lgc {
namespace {

using test::TempDir;
using test::write_text;

TEST(Xor, TruthTableWithoutSplit) {
  const Dataset d = xor_dataset();
  ASSERT_EQ(d.size(), 4u);
  EXPECT_EQ(d.inputs.cols(), 2u);
  EXPECT_EQ(d.targets.cols(), 1u);
  EXPECT_TRUE(d.test.empty());
  EXPECT_EQ(d.train.size(), 4u);
  EXPECT_FALSE(d.standardization.has_value());
  for (std::size_t r = 0; r < 4; ++r) {
    const bool a = d.inputs(r, 0) == 1.0, b = d.inputs(r, 1) == 1.0;
    EXPECT_EQ(d.targets(r, 0), (a != b) ? 1.0 : 0.0);
  }
}

TEST(Split, Sizes) {
  auto s = split_80_20(150, 1);
  EXPECT_EQ(s.train.size(), 120u);
  EXPECT_EQ(s.test.size(), 30u);
  s = split_80_20(920, 1);
  EXPECT_EQ(s.train.size(), 736u);
  EXPECT_EQ(s.test.size(), 184u);
  EXPECT_EQ(split_80_20(5, 0).train.size(), 4u);
  EXPECT_THROW(split_80_20(4, 0), DataError);
}

TEST(Split, DeterministicDisjointAndCovering) {
  for (std::size_t n : {5u, 17u, 150u, 1000u}) {
    const auto a = split_80_20(n, 77), b = split_80_20(n, 77);
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.test, b.test);
    std::set<std::size_t> all(a.train.begin(), a.train.end());
    for (auto i : a.test) EXPECT_TRUE(all.insert(i).second) << "index in both splits";
    EXPECT_EQ(all.size(), n);
    EXPECT_EQ(*all.rbegin(), n - 1);
    EXPECT_EQ(a.train.size(), static_cast<std::size_t>(std::llround(0.8 * n)));
  }
  EXPECT_NE(split_80_20(150, 1).train, split_80_20(150, 2).train);
}

void expect_standardized(const Dataset& d) {
  ASSERT_TRUE(d.standardization.has_value());
  const auto& skipped = d.standardization->skipped_columns;
  for (std::size_t c = 0; c < d.inputs.cols(); ++c) {
    if (std::find(skipped.begin(), skipped.end(), c) != skipped.end()) continue;
    double mean = 0, var = 0;
    for (auto i : d.train) mean += d.inputs(i, c);
    mean /= d.train.size();
    for (auto i : d.train) var += std::pow(d.inputs(i, c) - mean, 2);
    EXPECT_LT(std::abs(mean), 1e-9) << "column " << c;
    EXPECT_NEAR(std::sqrt(var / d.train.size()), 1.0, 1e-9) << "column " << c;
  }
}

TEST(Standardize, TrainStatisticsOnly) {
  Matrix X(10, 2), T(10, 1);
  for (std::size_t r = 0; r < 10; ++r) {
    X(r, 0) = static_cast<double>(r * r);
    X(r, 1) = 5.0;  // constant
  }
  const Dataset d = prepare_dataset("t", X, T, {3, std::nullopt});
  expect_standardized(d);
  ASSERT_EQ(d.standardization->skipped_columns, std::vector<std::size_t>{1});
  EXPECT_FALSE(d.warnings.empty());
  // The test split uses the training mean and sd, so its values are not centred.
  for (std::size_t r = 0; r < 10; ++r) EXPECT_EQ(d.inputs(r, 1), 5.0);
  const double mean = d.standardization->mean[0], sd = d.standardization->stddev[0];
  for (auto i : d.test) EXPECT_NEAR(d.inputs(i, 0), (double(i * i) - mean) / sd, 1e-12);
}

TEST(Standardize, HandComputedZScores) {
  // Train values {1,2,3,4}: mean 2.5, population sd sqrt(1.25).
  Matrix X(5, 1), T(5, 1);
  for (std::size_t r = 0; r < 5; ++r) X(r, 0) = 0.0;
  Dataset probe = prepare_dataset("p", X, T, {11, std::nullopt}, true, false);
  double v = 1.0;
  for (auto i : probe.train) X(i, 0) = v++;
  X(probe.test[0], 0) = 100.0;
  const Dataset d = prepare_dataset("p", X, T, {11, std::nullopt});
  const double sd = std::sqrt(1.25);
  std::vector<double> z;
  for (auto i : d.train) z.push_back(d.inputs(i, 0));
  std::sort(z.begin(), z.end());
  EXPECT_NEAR(z[0], -1.5 / sd, 1e-12);
  EXPECT_NEAR(z[1], -0.5 / sd, 1e-12);
  EXPECT_NEAR(z[2], 0.5 / sd, 1e-12);
  EXPECT_NEAR(z[3], 1.5 / sd, 1e-12);
  EXPECT_NEAR(z[0], -z[3], 1e-15);
  EXPECT_NEAR(d.inputs(d.test[0], 0), 97.5 / sd, 1e-12);
}

const char* kIrisHead = "sepal_length,sepal_width,petal_length,petal_width,species\n";

std::string small_iris(int per_class) {
  std::string s = kIrisHead;
  const char* names[] = {"setosa", "versicolor", "virginica"};
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < per_class; ++i)
      s += std::to_string(4.0 + c + 0.1 * i) + "," + std::to_string(3.0 - 0.05 * i) + "," +
           std::to_string(1.0 + 2 * c + 0.07 * i) + "," + std::to_string(0.2 + c * 0.8 + 0.03 * i) + "," + names[c] +
           "\n";
  return s;
}

CsvSchema iris_schema() {
  CsvSchema s;
  s.name = "iris";
  s.label_column = std::string("species");
  s.encoding = TargetEncoding::OneHot;
  s.classes = {"setosa", "versicolor", "virginica"};
  return s;
}

TEST(LoadCsv, IrisShapedFixture) {
  TempDir dir("csv");
  write_text(dir / "iris.csv", small_iris(50));
  const Dataset d = load_csv(dir / "iris.csv", iris_schema(), {1, std::nullopt});
  EXPECT_EQ(d.size(), 150u);
  EXPECT_EQ(d.inputs.cols(), 4u);
  EXPECT_EQ(d.targets.cols(), 3u);
  EXPECT_EQ(d.train.size(), 120u);
  EXPECT_EQ(d.test.size(), 30u);
  for (std::size_t r = 0; r < d.size(); ++r) {
    double sum = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_TRUE(d.targets(r, k) == 0.0 || d.targets(r, k) == 1.0);
      sum += d.targets(r, k);
    }
    EXPECT_EQ(sum, 1.0);
  }
  expect_standardized(d);
}

TEST(LoadCsv, RealIrisFileWhenPresent) {
  const auto path = std::filesystem::path(LGC_SOURCE_DIR) / "data" / "iris.csv";
  if (!std::filesystem::exists(path)) GTEST_SKIP() << "no data/iris.csv";
  const Dataset d = load_csv(path, iris_schema(), {1, std::nullopt});
  EXPECT_EQ(d.size(), 150u);
  EXPECT_EQ(d.inputs.cols(), 4u);
  EXPECT_EQ(d.targets.cols(), 3u);
  expect_standardized(d);
}

// Heart-shaped fixture: 920 rows, 32 inputs, binary label, an id column dropped.
TEST(LoadCsv, BinaryEncodingAndDroppedColumns) {
  TempDir dir("heart");
  std::string s = "id";
  for (int c = 0; c < 32; ++c) s += ",f" + std::to_string(c);
  s += ",target\n";
  for (int r = 0; r < 920; ++r) {
    s += std::to_string(r);
    for (int c = 0; c < 32; ++c) s += "," + std::to_string((r * 7 + c * 13) % 17 + 0.5 * c);
    s += (r % 3 == 0) ? ",1\n" : ",0\n";
  }
  write_text(dir / "heart.csv", s);
  write_text(dir / "heart.schema.json",
             R"({"name": "heart", "label_column": "target", "encoding": "binary", "drop_columns": ["id"]})");
  const Dataset d = load_csv(dir / "heart.csv", CsvSchema::from_file(dir / "heart.schema.json"));
  EXPECT_EQ(d.name, "heart");
  EXPECT_EQ(d.size(), 920u);
  EXPECT_EQ(d.inputs.cols(), 32u);
  EXPECT_EQ(d.targets.cols(), 1u);
  EXPECT_EQ(d.train.size(), 736u);
  EXPECT_EQ(d.test.size(), 184u);
  for (std::size_t r = 0; r < d.size(); ++r) EXPECT_EQ(d.targets(r, 0), r % 3 == 0 ? 1.0 : 0.0);
}

TEST(LoadCsv, IndexedColumnsWithoutHeader) {
  TempDir dir("nohdr");
  write_text(dir / "x.csv", "1;0.5;a\n2;0.1;b\n3;0.3;a\n4;0.9;b\n5;0.7;a\n6;0.2;b\n");
  CsvSchema s;
  s.has_header = false;
  s.delimiter = ';';
  s.label_column = std::size_t{2};
  s.encoding = TargetEncoding::OneHot;
  const Dataset d = load_csv(dir / "x.csv", s);
  EXPECT_EQ(d.inputs.cols(), 2u);
  EXPECT_EQ(d.targets.cols(), 2u);  // classes in sorted order: a, b
  EXPECT_EQ(d.targets(0, 0), 1.0);
  EXPECT_EQ(d.targets(1, 1), 1.0);
}

void expect_data_error_mentioning(const std::filesystem::path& p, const CsvSchema& s, const std::string& what) {
  try {
    load_csv(p, s);
    FAIL() << "expected DataError for " << what;
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(what), std::string::npos) << e.what();
  }
}

TEST(LoadCsv, ErrorsCarryLineNumbers) {
  TempDir dir("bad");
  const auto schema = iris_schema();
  std::string base = small_iris(3);
  write_text(dir / "a.csv", base + "1,2,3,x,setosa\n");
  expect_data_error_mentioning(dir / "a.csv", schema, ":11:");
  write_text(dir / "b.csv", base + "1,2,3,4,daisy\n");
  expect_data_error_mentioning(dir / "b.csv", schema, "unknown label 'daisy'");
  write_text(dir / "c.csv", base + "1,2,3,setosa\n");
  expect_data_error_mentioning(dir / "c.csv", schema, ":11:");
  write_text(dir / "d.csv", base + "1,,3,4,setosa\n");
  expect_data_error_mentioning(dir / "d.csv", schema, "missing value");
  write_text(dir / "e.csv", base + "1,NA,3,4,setosa\n");
  expect_data_error_mentioning(dir / "e.csv", schema, "missing value");
  write_text(dir / "f.csv", kIrisHead);
  EXPECT_THROW(load_csv(dir / "f.csv", schema), DataError);
  EXPECT_THROW(load_csv(dir / "missing.csv", schema), DataError);
  CsvSchema wrong = schema;
  wrong.label_column = std::string("kind");
  write_text(dir / "g.csv", base);
  expect_data_error_mentioning(dir / "g.csv", wrong, "kind");
}

TEST(LoadCsv, SchemaFileErrors) {
  TempDir dir("schema");
  write_text(dir / "a.json", R"({"encoding": "onehot"})");
  EXPECT_THROW(CsvSchema::from_file(dir / "a.json"), DataError);
  write_text(dir / "b.json", R"({"label_column": 0, "encoding": "ordinal"})");
  EXPECT_THROW(CsvSchema::from_file(dir / "b.json"), DataError);
  write_text(dir / "c.json", "{not json");
  EXPECT_THROW(CsvSchema::from_file(dir / "c.json"), DataError);
  EXPECT_THROW(CsvSchema::from_file(dir / "none.json"), DataError);
}

IdxImages synthetic_images(std::size_t n) {
  IdxImages img;
  img.rows = 28;
  img.cols = 28;
  img.pixels.resize(n * 28 * 28);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>((i * 31 + i / 7) % 256);
  return img;
}

TEST(Idx, RoundTripPlainAndGzip) {
  TempDir dir("idx");
  const auto img = synthetic_images(50);
  std::vector<std::uint8_t> labels(50);
  for (std::size_t i = 0; i < 50; ++i) labels[i] = static_cast<std::uint8_t>(i % 10);
  for (const std::string ext : {"", ".gz"}) {
    const auto ip = dir / ("img" + ext), lp = dir / ("lab" + ext);
    write_idx_images(ip, img);
    write_idx_labels(lp, labels);
    const auto back = read_idx_images(ip);
    EXPECT_EQ(back.rows, 28u);
    EXPECT_EQ(back.cols, 28u);
    EXPECT_EQ(back.pixels, img.pixels);
    EXPECT_EQ(read_idx_labels(lp), labels);
  }
  EXPECT_LT(std::filesystem::file_size(dir / "lab.gz"), std::filesystem::file_size(dir / "img"));
}

TEST(Idx, LoadGivesFlattenedOneHot) {
  TempDir dir("idxload");
  const auto img = synthetic_images(50);
  std::vector<std::uint8_t> labels(50, 3);
  labels[0] = 7;
  write_idx_images(dir / "i", img);
  write_idx_labels(dir / "l", labels);
  const Dataset d = load_idx(dir / "i", dir / "l");
  EXPECT_EQ(d.size(), 50u);
  EXPECT_EQ(d.inputs.cols(), 784u);
  EXPECT_EQ(d.targets.cols(), 10u);
  for (std::size_t k = 0; k < 10; ++k) EXPECT_EQ(d.targets(0, k), k == 7 ? 1.0 : 0.0);
  expect_standardized(d);
  const Dataset raw = prepare_dataset("raw", d.inputs, d.targets, {}, false, false);
  EXPECT_EQ(raw.inputs(0, 0), d.inputs(0, 0));
}

TEST(Idx, CorruptFilesRejected) {
  TempDir dir("idxbad");
  const auto img = synthetic_images(5);
  write_idx_images(dir / "i", img);
  write_idx_labels(dir / "l", std::vector<std::uint8_t>(5, 1));
  write_idx_labels(dir / "l4", std::vector<std::uint8_t>(4, 1));
  EXPECT_THROW(read_idx_images(dir / "l"), DataError);  // label magic in an image file
  EXPECT_THROW(read_idx_labels(dir / "i"), DataError);
  EXPECT_THROW(load_idx(dir / "i", dir / "l4"), DataError);
  auto bytes = test::read_bytes(dir / "i");
  write_text(dir / "trunc", bytes.substr(0, bytes.size() - 10));
  EXPECT_THROW(read_idx_images(dir / "trunc"), DataError);
  write_text(dir / "short", bytes.substr(0, 6));
  EXPECT_THROW(read_idx_images(dir / "short"), DataError);
  EXPECT_THROW(read_idx_images(dir / "absent"), DataError);
}

TEST(Mnist, DirectoryLoaderAppendsTestPairAndSubsamples) {
  TempDir dir("mnistdir");
  write_idx_images(dir / "train-images-idx3-ubyte.gz", synthetic_images(30));
  write_idx_labels(dir / "train-labels-idx1-ubyte.gz", std::vector<std::uint8_t>(30, 2));
  EXPECT_EQ(load_mnist_dir(dir.path()).size(), 30u);
  write_idx_images(dir / "t10k-images-idx3-ubyte", synthetic_images(10));
  write_idx_labels(dir / "t10k-labels-idx1-ubyte", std::vector<std::uint8_t>(10, 4));
  EXPECT_EQ(load_mnist_dir(dir.path()).size(), 40u);
  const Dataset sub = load_mnist_dir(dir.path(), {5, 20});
  EXPECT_EQ(sub.size(), 20u);
  EXPECT_EQ(sub.train.size(), 16u);
  const Dataset again = load_mnist_dir(dir.path(), {5, 20});
  EXPECT_TRUE(sub.inputs == again.inputs);
  TempDir empty("mnistempty");
  EXPECT_THROW(load_mnist_dir(empty.path()), DataError);
}

TEST(Gather, SelectsRows) {
  const Dataset d = xor_dataset();
  const std::vector<std::size_t> idx{3, 1};
  const Batch b = gather(d, idx);
  ASSERT_EQ(b.size(), 2u);
  EXPECT_EQ(b.inputs(0, 0), 1.0);
  EXPECT_EQ(b.targets(0, 0), 0.0);
  EXPECT_EQ(b.targets(1, 0), 1.0);
  const std::vector<std::size_t> bad{9};
  EXPECT_THROW(gather(d, bad), ShapeError);
}

}  // namespace
}  // namespace lgc
