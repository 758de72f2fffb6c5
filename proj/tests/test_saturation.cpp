#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "lgc/error.hpp"
#include "lgc/saturation.hpp"

namespace lgc {
namespace {

Matrix filled(std::size_t r, std::size_t c, std::vector<double> values) {
  Matrix m(r, c);
  std::copy(values.begin(), values.end(), m.flat().begin());
  return m;
}

TEST(SigmaH, Anchors) {
  EXPECT_EQ(sigma_h(filled(2, 2, {1, -1, -1, 1}), -1, 1).value, 1.0);
  EXPECT_EQ(sigma_h(Matrix(3, 4, 0.0), -1, 1).value, 0.0);
  EXPECT_EQ(sigma_h(filled(1, 2, {0, 1}), 0, 1).value, 1.0);
  EXPECT_EQ(sigma_h(Matrix(2, 2, 0.5), 0, 1).value, 0.0);
  EXPECT_EQ(sigma_h(Matrix(1, 1, 0.0), -1, 1).method, SaturationMethod::BoundedSigma);
}

TEST(SigmaH, UniformSamplesGiveOneHalf) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Matrix m(1000, 100);
  for (auto& v : m.flat()) v = d(gen);
  EXPECT_NEAR(sigma_h(m, -1, 1).value, 0.5, 0.01);
}

TEST(SigmaH, Errors) {
  EXPECT_THROW(sigma_h(Matrix(0, 3), -1, 1), DataError);
  EXPECT_THROW(sigma_h(Matrix(1, 1, 1.5), -1, 1), DataError);
  EXPECT_THROW(sigma_h(Matrix(1, 1, 0.0), 1, 1), UsageError);
}

TEST(SigmaH, AffineInvariant) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    Matrix m(5, 4);
    for (auto& v : m.flat()) v = d(gen);
    const double alpha = (t % 2 ? -1.0 : 1.0) * std::exp(d(gen) * 3), beta = d(gen) * 10;
    Matrix mapped(5, 4);
    std::transform(m.flat().begin(), m.flat().end(), mapped.flat().begin(),
                   [&](double a) { return alpha * a + beta; });
    double lo = alpha * -1 + beta, hi = alpha * 1 + beta;
    if (lo > hi) std::swap(lo, hi);
    EXPECT_NEAR(sigma_h(mapped, lo, hi).value, sigma_h(m, -1, 1).value, 1e-12);
  }
}

TEST(SigmaH, PermutationInvariantAndMonotone) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Matrix m(6, 5);
  for (auto& v : m.flat()) v = d(gen);
  const double base = sigma_h(m, -1, 1).value;
  Matrix p(5, 6);
  auto vals = std::vector<double>(m.flat().begin(), m.flat().end());
  std::shuffle(vals.begin(), vals.end(), gen);
  std::copy(vals.begin(), vals.end(), p.flat().begin());
  EXPECT_NEAR(sigma_h(p, -1, 1).value, base, 1e-12);
  for (std::size_t i = 0; i < m.flat().size(); ++i) {
    Matrix q = m;
    double& a = q.flat()[i];
    a = a >= 0 ? a + (1 - a) * 0.5 : a - (1 + a) * 0.5;  // halfway to the nearer endpoint
    EXPECT_GE(sigma_h(q, -1, 1).value, base);
  }
}

TEST(ReluZeroFraction, Counts) {
  EXPECT_EQ(relu_zero_fraction(Matrix(2, 3, 0.0)).value, 1.0);
  EXPECT_EQ(relu_zero_fraction(Matrix(2, 3, 0.7)).value, 0.0);
  EXPECT_EQ(relu_zero_fraction(filled(2, 2, {0, 2, 3, 0})).value, 0.5);
  EXPECT_EQ(relu_zero_fraction(filled(1, 2, {1e-300, 0})).value, 0.5);
  EXPECT_EQ(relu_zero_fraction(Matrix(1, 1)).method, SaturationMethod::ReluZeroFraction);
  EXPECT_THROW(relu_zero_fraction(Matrix(0, 0)), DataError);
}

TEST(MeasureSaturation, PerActivation) {
  const Matrix m = filled(1, 2, {0.0, 1.0});
  EXPECT_EQ(measure_saturation(Activation::TanH, m)->value, 0.5);
  EXPECT_EQ(measure_saturation(Activation::Sigmoid, m)->value, 1.0);
  EXPECT_EQ(measure_saturation(Activation::ReLU, m)->value, 0.5);
  EXPECT_FALSE(measure_saturation(Activation::ELU, m).has_value());
}

TEST(SaturationMethod, NamesRoundTrip) {
  for (auto m : {SaturationMethod::BoundedSigma, SaturationMethod::ReluZeroFraction})
    EXPECT_EQ(parse_saturation_method(to_string(m)), m);
}

}  // namespace
}  // namespace lgc
