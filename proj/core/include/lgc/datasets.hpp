#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lgc/matrix.hpp"
#include "lgc/nn.hpp"

namespace lgc {

/// z-score statistics computed on the training split (population standard deviation).
struct Standardization {
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<std::size_t> skipped_columns;  // constant on the training split
};

struct Dataset {
  std::string name;
  Matrix inputs;
  Matrix targets;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;  // empty when every pattern is used for training
  std::optional<Standardization> standardization;
  std::uint64_t split_seed = 0;
  std::vector<std::string> warnings;

  std::size_t size() const { return inputs.rows(); }
  bool has_test() const { return !test.empty(); }
};

/// The four XOR patterns, all used for training, inputs left unstandardised.
Dataset xor_dataset();

/// Seeded uniform shuffle of [0, n); the first round(0.8 n) indices are training.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};
Split split_80_20(std::size_t n, std::uint64_t seed);

enum class TargetEncoding { Binary, OneHot };

/// Column roles for CSV ingestion. Columns can be named (needs a header) or given as
/// zero-based indices. Every column that is neither the label nor dropped is an input.
struct CsvSchema {
  using ColumnRef = std::variant<std::size_t, std::string>;

  std::string name = "csv";
  bool has_header = true;
  char delimiter = ',';
  ColumnRef label_column = std::size_t{0};
  TargetEncoding encoding = TargetEncoding::OneHot;
  // One-hot: output order. Binary: {negative, positive}. Empty: one-hot classes are
  // taken in sorted order of appearance; binary labels must then be "0" and "1".
  std::vector<std::string> classes;
  std::vector<ColumnRef> drop_columns;

  /// Reads a schema from a JSON file.
  static CsvSchema from_file(const std::filesystem::path& path);
};

struct PrepareOptions {
  std::uint64_t split_seed = 0;
  std::optional<std::size_t> subsample;  // keep a seeded random subset of this many patterns
};

/// Parses a CSV file, encodes targets, splits 80/20 and standardises inputs with
/// training-split statistics. Malformed rows, missing values and unknown labels raise
/// DataError carrying the line number.
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema,
                 const PrepareOptions& options = {});

struct IdxImages {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols, row-major per image

  std::size_t count() const { return rows * cols == 0 ? 0 : pixels.size() / (rows * cols); }
};

// Big-endian IDX files; gzip-compressed files are detected and inflated transparently.
IdxImages read_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path);
// Writes gzip when the path ends in ".gz".
void write_idx_images(const std::filesystem::path& path, const IdxImages& images);
void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels);

/// Flattened images (row-major) with one-hot digit targets, split and standardised.
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 const PrepareOptions& options = {});

/// MNIST from a directory holding train-{images-idx3,labels-idx1}-ubyte[.gz] and, when
/// present, the t10k pair, which is appended (70000 patterns for the full set).
Dataset load_mnist_dir(const std::filesystem::path& dir, const PrepareOptions& options = {});

/// Splits (unless the dataset is XOR-like and `split` is false) and standardises.
Dataset prepare_dataset(std::string name, Matrix inputs, Matrix targets, const PrepareOptions& options,
                        bool split = true, bool standardize = true);

Batch gather(const Dataset& data, std::span<const std::size_t> indices);

}  // namespace lgc
