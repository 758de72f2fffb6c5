#pragma once

#include <optional>
#include <string_view>

#include "lgc/matrix.hpp"
#include "lgc/nn.hpp"

namespace lgc {

enum class SaturationMethod { BoundedSigma, ReluZeroFraction };

std::string_view to_string(SaturationMethod m);
SaturationMethod parse_saturation_method(std::string_view name);

struct SaturationReading {
  double value = 0.0;  // in [0, 1]
  SaturationMethod method = SaturationMethod::BoundedSigma;

  friend bool operator==(const SaturationReading&, const SaturationReading&) = default;
};

/// Saturation of a bounded activation: mean over all activations of |a - c| / r with
/// c the range midpoint and r the half-width. 0 when everything sits at the midpoint,
/// 0.5 for activations spread uniformly over the range, 1 when every activation is
/// on an asymptote. Throws DataError on an empty set or an activation outside the range.
SaturationReading sigma_h(const Matrix& hidden_activations, double range_lo, double range_hi);

/// Fraction of hidden activations exactly equal to zero.
SaturationReading relu_zero_fraction(const Matrix& hidden_activations);

/// Measure used for a hidden activation kind: sigma_h on [-1,1] for TanH and [0,1]
/// for Sigmoid, zero fraction for ReLU, nothing for ELU.
std::optional<SaturationReading> measure_saturation(Activation hidden, const Matrix& hidden_activations);

}  // namespace lgc
