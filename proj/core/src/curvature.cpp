#include "lgc/curvature.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lgc/error.hpp"

namespace lgc {

std::string_view to_string(CurvatureClass c) {
  switch (c) {
    case CurvatureClass::Convex: return "convex";
    case CurvatureClass::Concave: return "concave";
    case CurvatureClass::Saddle: return "saddle";
    case CurvatureClass::Singular: return "singular";
  }
  return "?";
}

CurvatureClass parse_curvature(std::string_view name) {
  if (name == "convex") return CurvatureClass::Convex;
  if (name == "concave") return CurvatureClass::Concave;
  if (name == "saddle") return CurvatureClass::Saddle;
  // "indefinite" and "flat" are used interchangeably with singular.
  if (name == "singular" || name == "indefinite" || name == "flat") return CurvatureClass::Singular;
  throw DataError("unknown curvature class '" + std::string(name) + "'");
}

Curvature classify(std::span<const double> eigenvalues, const ZeroThresholds& thresholds) {
  double largest = 0.0;
  for (double v : eigenvalues) largest = std::max(largest, std::abs(v));
  const double zero_band = std::max(thresholds.abs, thresholds.rel * largest);

  Curvature c;
  for (double v : eigenvalues) {
    if (std::abs(v) <= zero_band)
      ++c.n_zero;
    else if (v > 0)
      ++c.n_pos;
    else
      ++c.n_neg;
  }
  if (c.n_zero > 0)
    c.kind = CurvatureClass::Singular;
  else if (c.n_neg == 0)
    c.kind = CurvatureClass::Convex;
  else if (c.n_pos == 0)
    c.kind = CurvatureClass::Concave;
  else
    c.kind = CurvatureClass::Saddle;
  return c;
}

Hessian hessian_fd(const GradientFn& gradient, std::span<const double> w) {
  const std::size_t m = w.size();
  Hessian out{Matrix(m, m), 0.0};
  std::vector<double> probe(w.begin(), w.end());
  for (std::size_t j = 0; j < m; ++j) {
    const double h = hessian_step(w[j]);
    probe[j] = w[j] + h;
    const std::vector<double> plus = gradient(probe);
    probe[j] = w[j] - h;
    const std::vector<double> minus = gradient(probe);
    probe[j] = w[j];
    if (plus.size() != m || minus.size() != m) throw ShapeError("gradient length does not match dimension");
    for (std::size_t i = 0; i < m; ++i) out.matrix(i, j) = (plus[i] - minus[i]) / (2.0 * h);
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const double a = out.matrix(i, j);
      const double b = out.matrix(j, i);
      out.max_asymmetry = std::max(out.max_asymmetry, std::abs(a - b) / std::max(1.0, std::abs(a)));
      const double s = 0.5 * (a + b);
      out.matrix(i, j) = s;
      out.matrix(j, i) = s;
    }
  }
  return out;
}

std::variant<Hessian, HessianSkipped> hessian(const MlpSpec& spec, std::span<const double> w,
                                              const Batch& batch, std::size_t cap) {
  const std::size_t m = spec.param_count();
  if (m > cap) return HessianSkipped{m, cap};
  if (w.size() != m) throw ShapeError("weight vector does not match architecture");
  return hessian_fd([&](std::span<const double> x) { return gradient(spec, x, batch); }, w);
}

bool kink_adjacent(const MlpSpec& spec, std::span<const double> w, const Matrix& inputs) {
  if (spec.hidden != Activation::ReLU) return false;
  const ForwardResult fwd = forward(spec, w, inputs);
  for (std::size_t p = 0; p < inputs.rows(); ++p) {
    const auto x = inputs.row(p);
    for (std::size_t k = 0; k < spec.n_hidden; ++k) {
      // Largest single-coordinate perturbation of this neuron's net input.
      double reach = hessian_step(w[hidden_weight_index(spec, k, spec.n_input)]);
      for (std::size_t i = 0; i < spec.n_input; ++i)
        reach = std::max(reach, hessian_step(w[hidden_weight_index(spec, k, i)]) * std::abs(x[i]));
      if (std::abs(fwd.hidden_net(p, k)) <= reach) return true;
    }
  }
  return false;
}

}  // namespace lgc
