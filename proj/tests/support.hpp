#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <unistd.h>

#include "lgc/matrix.hpp"
#include "lgc/nn.hpp"

namespace lgc::test {

// Reference network evaluated straight from the documented weight layout, without
// any of the library's forward/backward code.
inline double ref_activation(Activation a, double x) {
  switch (a) {
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::TanH: return std::tanh(x);
    case Activation::ReLU: return x > 0 ? x : 0.0;
    case Activation::ELU: return x > 0 ? x : std::exp(x) - 1.0;
  }
  return 0.0;
}

inline double ref_loss(const MlpSpec& s, std::span<const double> w, const Matrix& X, const Matrix& T) {
  const std::size_t I = s.n_input, H = s.n_hidden, O = s.n_output;
  double total = 0.0;
  for (std::size_t p = 0; p < X.rows(); ++p) {
    std::vector<double> h(H);
    for (std::size_t j = 0; j < H; ++j) {
      double net = w[j * (I + 1) + I];
      for (std::size_t i = 0; i < I; ++i) net += w[j * (I + 1) + i] * X(p, i);
      h[j] = ref_activation(s.hidden, net);
    }
    const std::size_t base = H * (I + 1);
    for (std::size_t k = 0; k < O; ++k) {
      double net = w[base + k * (H + 1) + H];
      for (std::size_t j = 0; j < H; ++j) net += w[base + k * (H + 1) + j] * h[j];
      double o = ref_activation(Activation::Sigmoid, net);
      o = std::min(std::max(o, 1e-12), 1.0 - 1e-12);
      const double t = T(p, k);
      total -= t * std::log(o) + (1.0 - t) * std::log(1.0 - o);
    }
  }
  return total / static_cast<double>(X.rows());
}

inline std::vector<double> fd_gradient(const MlpSpec& s, std::vector<double> w, const Matrix& X, const Matrix& T,
                                       double h = 1e-6) {
  std::vector<double> g(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double w0 = w[j];
    w[j] = w0 + h;
    const double up = ref_loss(s, w, X, T);
    w[j] = w0 - h;
    const double down = ref_loss(s, w, X, T);
    w[j] = w0;
    g[j] = (up - down) / (2.0 * h);
  }
  return g;
}

inline Matrix random_matrix(std::size_t r, std::size_t c, double lo, double hi, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> d(lo, hi);
  Matrix m(r, c);
  for (auto& v : m.flat()) v = d(gen);
  return m;
}

inline Matrix random_binary(std::size_t r, std::size_t c, std::mt19937_64& gen) {
  std::bernoulli_distribution d(0.5);
  Matrix m(r, c);
  for (auto& v : m.flat()) v = d(gen) ? 1.0 : 0.0;
  return m;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("lgc_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
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
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

inline std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace lgc::test
