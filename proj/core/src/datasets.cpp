#include "lgc/datasets.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lgc/error.hpp"
#include "lgc/rng.hpp"

namespace lgc {

namespace {
constexpr std::uint64_t kSplitSalt = 0x73706c69;      // "spli"
constexpr std::uint64_t kSubsampleSalt = 0x73756273;  // "subs"

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}
}  // namespace

Dataset xor_dataset() {
  Dataset d;
  d.name = "xor";
  d.inputs = Matrix(4, 2);
  d.targets = Matrix(4, 1);
  const double patterns[4][3] = {{0, 0, 0}, {0, 1, 1}, {1, 0, 1}, {1, 1, 0}};
  for (std::size_t p = 0; p < 4; ++p) {
    d.inputs(p, 0) = patterns[p][0];
    d.inputs(p, 1) = patterns[p][1];
    d.targets(p, 0) = patterns[p][2];
  }
  d.train = {0, 1, 2, 3};
  return d;
}

Split split_80_20(std::size_t n, std::uint64_t seed) {
  if (n < 5) throw DataError("an 80/20 split needs at least 5 patterns, got " + std::to_string(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(stream_seed(seed, 0, kSplitSalt));
  shuffle(order, rng);
  const auto n_train = static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(n)));
  Split s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return s;
}

Dataset prepare_dataset(std::string name, Matrix inputs, Matrix targets, const PrepareOptions& options,
                        bool split, bool standardize) {
  if (inputs.rows() != targets.rows()) throw DataError("inputs and targets differ in pattern count");
  Dataset d;
  d.name = std::move(name);
  d.split_seed = options.split_seed;

  if (options.subsample && *options.subsample < inputs.rows()) {
    std::vector<std::size_t> order(inputs.rows());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(stream_seed(options.split_seed, 0, kSubsampleSalt));
    shuffle(order, rng);
    order.resize(*options.subsample);
    std::sort(order.begin(), order.end());
    Matrix in(order.size(), inputs.cols()), tg(order.size(), targets.cols());
    for (std::size_t r = 0; r < order.size(); ++r) {
      std::copy_n(inputs.row(order[r]).begin(), inputs.cols(), in.row(r).begin());
      std::copy_n(targets.row(order[r]).begin(), targets.cols(), tg.row(r).begin());
    }
    inputs = std::move(in);
    targets = std::move(tg);
  }
  d.inputs = std::move(inputs);
  d.targets = std::move(targets);

  if (split) {
    Split s = split_80_20(d.size(), options.split_seed);
    d.train = std::move(s.train);
    d.test = std::move(s.test);
  } else {
    d.train.resize(d.size());
    std::iota(d.train.begin(), d.train.end(), 0);
  }

  if (standardize) {
    const std::size_t cols = d.inputs.cols();
    Standardization st{std::vector<double>(cols, 0.0), std::vector<double>(cols, 1.0), {}};
    const double n_train = static_cast<double>(d.train.size());
    for (std::size_t c = 0; c < cols; ++c) {
      double mean = 0.0;
      for (std::size_t idx : d.train) mean += d.inputs(idx, c);
      mean /= n_train;
      double var = 0.0;
      for (std::size_t idx : d.train) var += (d.inputs(idx, c) - mean) * (d.inputs(idx, c) - mean);
      const double sd = std::sqrt(var / n_train);
      st.mean[c] = mean;
      if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
        st.stddev[c] = 1.0;
        st.skipped_columns.push_back(c);
        continue;
      }
      st.stddev[c] = sd;
      for (std::size_t r = 0; r < d.size(); ++r) d.inputs(r, c) = (d.inputs(r, c) - mean) / sd;
    }
    if (!st.skipped_columns.empty()) {
      d.warnings.push_back(std::to_string(st.skipped_columns.size()) +
                           " input column(s) constant on the training split; standardisation skipped");
    }
    d.standardization = std::move(st);
  }
  return d;
}

Batch gather(const Dataset& data, std::span<const std::size_t> indices) {
  Batch b{Matrix(indices.size(), data.inputs.cols()), Matrix(indices.size(), data.targets.cols())};
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= data.size()) throw ShapeError("pattern index out of range");
    std::copy_n(data.inputs.row(indices[r]).begin(), data.inputs.cols(), b.inputs.row(r).begin());
    std::copy_n(data.targets.row(indices[r]).begin(), data.targets.cols(), b.targets.row(r).begin());
  }
  return b;
}

// ---------------------------------------------------------------------------------
// CSV

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == delim) {
      out.push_back(trim(field));
      field.clear();
    } else {
      field += ch;
    }
  }
  out.push_back(trim(field));
  return out;
}

CsvSchema::ColumnRef column_ref_from_json(const nlohmann::json& j) {
  if (j.is_number_unsigned() || j.is_number_integer()) {
    if (j.get<long long>() < 0) throw DataError("schema column index must be non-negative");
    return static_cast<std::size_t>(j.get<long long>());
  }
  if (j.is_string()) return j.get<std::string>();
  throw DataError("schema column must be a name or a zero-based index");
}

std::size_t resolve_column(const CsvSchema::ColumnRef& ref, const std::vector<std::string>& header,
                           std::size_t n_cols) {
  if (const auto* idx = std::get_if<std::size_t>(&ref)) {
    if (*idx >= n_cols) throw DataError("schema column index " + std::to_string(*idx) + " out of range");
    return *idx;
  }
  const auto& name = std::get<std::string>(ref);
  if (header.empty()) throw DataError("schema names column '" + name + "' but the file has no header");
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw DataError("column '" + name + "' not found in CSV header");
  return static_cast<std::size_t>(it - header.begin());
}

double parse_number(const std::string& s, std::size_t line_no, const std::filesystem::path& path) {
  if (s.empty() || s == "?" || s == "NA" || s == "nan")
    throw DataError(path.string() + ":" + std::to_string(line_no) + ": missing value");
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || !std::isfinite(v))
    throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed number '" + s + "'");
  return v;
}

}  // namespace

CsvSchema CsvSchema::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open schema file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("schema " + path.string() + ": " + e.what());
  }
  CsvSchema s;
  try {
    s.name = j.value("name", path.stem().string());
    s.has_header = j.value("has_header", true);
    const std::string delim = j.value("delimiter", std::string(","));
    if (delim.size() != 1) throw DataError("schema delimiter must be a single character");
    s.delimiter = delim[0];
    if (!j.contains("label_column")) throw DataError("schema " + path.string() + " lacks label_column");
    s.label_column = column_ref_from_json(j.at("label_column"));
    const std::string enc = j.value("encoding", std::string("onehot"));
    if (enc == "onehot" || enc == "one_hot")
      s.encoding = TargetEncoding::OneHot;
    else if (enc == "binary")
      s.encoding = TargetEncoding::Binary;
    else
      throw DataError("schema encoding must be 'onehot' or 'binary', got '" + enc + "'");
    if (j.contains("classes")) s.classes = j.at("classes").get<std::vector<std::string>>();
    if (j.contains("drop_columns"))
      for (const auto& c : j.at("drop_columns")) s.drop_columns.push_back(column_ref_from_json(c));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("schema " + path.string() + ": " + e.what());
  }
  return s;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema, const PrepareOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CSV file " + path.string());

  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line, schema.delimiter);
    if (schema.has_header && header.empty()) {
      header = std::move(fields);
      continue;
    }
    const std::size_t expected = header.empty() ? (rows.empty() ? fields.size() : rows.front().size()) : header.size();
    if (fields.size() != expected)
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(expected) +
                      " fields, found " + std::to_string(fields.size()));
    rows.push_back(std::move(fields));
    line_numbers.push_back(line_no);
  }
  if (rows.empty()) throw DataError("CSV file " + path.string() + " has no data rows");

  const std::size_t n_cols = rows.front().size();
  const std::size_t label = resolve_column(schema.label_column, header, n_cols);
  std::set<std::size_t> dropped;
  for (const auto& ref : schema.drop_columns) dropped.insert(resolve_column(ref, header, n_cols));
  std::vector<std::size_t> input_cols;
  for (std::size_t c = 0; c < n_cols; ++c)
    if (c != label && !dropped.count(c)) input_cols.push_back(c);
  if (input_cols.empty()) throw DataError("CSV schema leaves no input columns");

  std::vector<std::string> classes = schema.classes;
  if (classes.empty()) {
    if (schema.encoding == TargetEncoding::Binary) {
      classes = {"0", "1"};
    } else {
      std::set<std::string> seen;
      for (const auto& r : rows) seen.insert(r[label]);
      classes.assign(seen.begin(), seen.end());
    }
  }
  if (schema.encoding == TargetEncoding::Binary && classes.size() != 2)
    throw DataError("binary encoding needs exactly two classes");
  std::map<std::string, std::size_t> class_index;
  for (std::size_t k = 0; k < classes.size(); ++k) class_index[classes[k]] = k;

  const std::size_t n_out = schema.encoding == TargetEncoding::Binary ? 1 : classes.size();
  Matrix inputs(rows.size(), input_cols.size());
  Matrix targets(rows.size(), n_out);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < input_cols.size(); ++c)
      inputs(r, c) = parse_number(rows[r][input_cols[c]], line_numbers[r], path);
    const auto it = class_index.find(rows[r][label]);
    if (it == class_index.end())
      throw DataError(path.string() + ":" + std::to_string(line_numbers[r]) + ": unknown label '" +
                      rows[r][label] + "'");
    if (schema.encoding == TargetEncoding::Binary)
      targets(r, 0) = static_cast<double>(it->second);
    else
      targets(r, it->second) = 1.0;
  }
  return prepare_dataset(schema.name, std::move(inputs), std::move(targets), options);
}

// ---------------------------------------------------------------------------------
// IDX

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

// gzread passes uncompressed files through unchanged.
std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (!f) throw DataError("cannot open IDX file " + path.string());
  std::vector<std::uint8_t> data;
  std::uint8_t buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof buf)) > 0) data.insert(data.end(), buf, buf + n);
  int err = 0;
  const char* msg = gzerror(f, &err);
  const std::string message = msg ? msg : "";
  gzclose(f);
  if (n < 0 || (err != Z_OK && err != Z_STREAM_END))
    throw DataError("error reading " + path.string() + ": " + message);
  return data;
}

void write_all(const std::filesystem::path& path, const std::vector<std::uint8_t>& data) {
  const bool gz = path.extension() == ".gz";
  if (gz) {
    gzFile f = gzopen(path.string().c_str(), "wb");
    if (!f) throw Error("cannot write " + path.string());
    const int n = gzwrite(f, data.data(), static_cast<unsigned>(data.size()));
    gzclose(f);
    if (n != static_cast<int>(data.size())) throw Error("short write to " + path.string());
  } else {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw Error("cannot write " + path.string());
  }
}

std::uint32_t be32(const std::vector<std::uint8_t>& d, std::size_t off) {
  return (std::uint32_t{d[off]} << 24) | (std::uint32_t{d[off + 1]} << 16) | (std::uint32_t{d[off + 2]} << 8) |
         std::uint32_t{d[off + 3]};
}

void put_be32(std::vector<std::uint8_t>& d, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) d.push_back(static_cast<std::uint8_t>(v >> s));
}

}  // namespace

IdxImages read_idx_images(const std::filesystem::path& path) {
  const auto d = read_all(path);
  if (d.size() < 16) throw DataError(path.string() + ": truncated IDX header");
  if (be32(d, 0) != kImageMagic)
    throw DataError(path.string() + ": bad IDX image magic number");
  const std::size_t count = be32(d, 4);
  IdxImages img;
  img.rows = be32(d, 8);
  img.cols = be32(d, 12);
  const std::size_t expected = count * img.rows * img.cols;
  if (d.size() - 16 < expected)
    throw DataError(path.string() + ": truncated IDX image data (" + std::to_string(count) + " images declared)");
  img.pixels.assign(d.begin() + 16, d.begin() + 16 + static_cast<std::ptrdiff_t>(expected));
  return img;
}

std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path) {
  const auto d = read_all(path);
  if (d.size() < 8) throw DataError(path.string() + ": truncated IDX header");
  if (be32(d, 0) != kLabelMagic) throw DataError(path.string() + ": bad IDX label magic number");
  const std::size_t count = be32(d, 4);
  if (d.size() - 8 < count) throw DataError(path.string() + ": truncated IDX label data");
  return {d.begin() + 8, d.begin() + 8 + static_cast<std::ptrdiff_t>(count)};
}

void write_idx_images(const std::filesystem::path& path, const IdxImages& images) {
  std::vector<std::uint8_t> d;
  put_be32(d, kImageMagic);
  put_be32(d, static_cast<std::uint32_t>(images.count()));
  put_be32(d, static_cast<std::uint32_t>(images.rows));
  put_be32(d, static_cast<std::uint32_t>(images.cols));
  d.insert(d.end(), images.pixels.begin(), images.pixels.end());
  write_all(path, d);
}

void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels) {
  std::vector<std::uint8_t> d;
  put_be32(d, kLabelMagic);
  put_be32(d, static_cast<std::uint32_t>(labels.size()));
  d.insert(d.end(), labels.begin(), labels.end());
  write_all(path, d);
}

namespace {

void append_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                std::vector<double>& pixels, std::vector<std::uint8_t>& labels, std::size_t& dim) {
  const IdxImages img = read_idx_images(images_path);
  const auto lab = read_idx_labels(labels_path);
  if (img.count() != lab.size())
    throw DataError("IDX count mismatch: " + std::to_string(img.count()) + " images vs " +
                    std::to_string(lab.size()) + " labels");
  const std::size_t this_dim = img.rows * img.cols;
  if (dim != 0 && dim != this_dim) throw DataError("IDX image sizes differ between files");
  dim = this_dim;
  for (auto l : lab)
    if (l > 9) throw DataError(labels_path.string() + ": label " + std::to_string(l) + " outside 0..9");
  pixels.insert(pixels.end(), img.pixels.begin(), img.pixels.end());
  labels.insert(labels.end(), lab.begin(), lab.end());
}

Dataset idx_to_dataset(const std::vector<double>& pixels, const std::vector<std::uint8_t>& labels, std::size_t dim,
                       const PrepareOptions& options) {
  Matrix inputs(labels.size(), dim);
  std::copy(pixels.begin(), pixels.end(), inputs.flat().begin());
  Matrix targets(labels.size(), 10);
  for (std::size_t r = 0; r < labels.size(); ++r) targets(r, labels[r]) = 1.0;
  return prepare_dataset("mnist", std::move(inputs), std::move(targets), options);
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 const PrepareOptions& options) {
  std::vector<double> pixels;
  std::vector<std::uint8_t> labels;
  std::size_t dim = 0;
  append_idx(images_path, labels_path, pixels, labels, dim);
  return idx_to_dataset(pixels, labels, dim, options);
}

Dataset load_mnist_dir(const std::filesystem::path& dir, const PrepareOptions& options) {
  auto find = [&](const std::string& stem) -> std::optional<std::filesystem::path> {
    for (const char* ext : {"", ".gz"}) {
      auto p = dir / (stem + ext);
      if (std::filesystem::exists(p)) return p;
    }
    return std::nullopt;
  };
  const auto train_images = find("train-images-idx3-ubyte");
  const auto train_labels = find("train-labels-idx1-ubyte");
  if (!train_images || !train_labels)
    throw DataError("MNIST files train-images-idx3-ubyte and train-labels-idx1-ubyte not found in " + dir.string());
  std::vector<double> pixels;
  std::vector<std::uint8_t> labels;
  std::size_t dim = 0;
  append_idx(*train_images, *train_labels, pixels, labels, dim);
  const auto test_images = find("t10k-images-idx3-ubyte");
  const auto test_labels = find("t10k-labels-idx1-ubyte");
  if (test_images && test_labels) append_idx(*test_images, *test_labels, pixels, labels, dim);
  return idx_to_dataset(pixels, labels, dim, options);
}

}  // namespace lgc
