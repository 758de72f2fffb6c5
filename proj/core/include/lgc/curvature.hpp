#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "lgc/matrix.hpp"
#include "lgc/nn.hpp"

namespace lgc {

enum class CurvatureClass { Convex, Concave, Saddle, Singular };

std::string_view to_string(CurvatureClass c);
CurvatureClass parse_curvature(std::string_view name);

struct Curvature {
  CurvatureClass kind = CurvatureClass::Singular;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::size_t n_zero = 0;

  friend bool operator==(const Curvature&, const Curvature&) = default;
};

/// An eigenvalue counts as zero iff |lambda| <= max(abs, rel * max|lambda|).
struct ZeroThresholds {
  double abs = 1e-8;
  double rel = 1e-6;
};

Curvature classify(std::span<const double> eigenvalues, const ZeroThresholds& thresholds = {});

using GradientFn = std::function<std::vector<double>(std::span<const double>)>;

struct Hessian {
  Matrix matrix;              // exactly symmetric
  double max_asymmetry = 0.0; // max |H_ij - H_ji| / max(1, |H_ij|) before symmetrisation
};

/// Hessian by central differences of an analytic gradient: column j is
/// (g(w + h_j e_j) - g(w - h_j e_j)) / (2 h_j) with h_j = 1e-5 * max(1, |w_j|),
/// then symmetrised as (H + H^T) / 2.
Hessian hessian_fd(const GradientFn& gradient, std::span<const double> w);

inline double hessian_step(double wj) { return 1e-5 * std::max(1.0, wj < 0 ? -wj : wj); }

struct HessianSkipped {
  std::size_t dimension = 0;
  std::size_t cap = 0;
};

inline constexpr std::size_t kDefaultHessianCap = 1000;

/// Hessian of the cross-entropy loss of a network over a batch, or a skip marker when
/// the parameter count exceeds `cap`.
std::variant<Hessian, HessianSkipped> hessian(const MlpSpec& spec, std::span<const double> w,
                                              const Batch& batch,
                                              std::size_t cap = kDefaultHessianCap);

/// True when the finite-difference stencil of hessian() pushes some ReLU hidden
/// net input across zero for some pattern, so a Hessian entry averages both sides
/// of the kink. Always false for smooth activations.
bool kink_adjacent(const MlpSpec& spec, std::span<const double> w, const Matrix& inputs);

}  // namespace lgc
