#include "lgc/saturation.hpp"

#include <cmath>
#include <string>

#include "lgc/error.hpp"

namespace lgc {

std::string_view to_string(SaturationMethod m) {
  return m == SaturationMethod::BoundedSigma ? "bounded_sigma" : "relu_zero_fraction";
}

SaturationMethod parse_saturation_method(std::string_view name) {
  if (name == "bounded_sigma") return SaturationMethod::BoundedSigma;
  if (name == "relu_zero_fraction") return SaturationMethod::ReluZeroFraction;
  throw DataError("unknown saturation method '" + std::string(name) + "'");
}

SaturationReading sigma_h(const Matrix& hidden_activations, double range_lo, double range_hi) {
  if (hidden_activations.empty()) throw DataError("saturation of an empty activation set");
  if (!(range_hi > range_lo)) throw UsageError("saturation range must have positive width");
  const double centre = 0.5 * (range_lo + range_hi);
  const double half_width = 0.5 * (range_hi - range_lo);
  double total = 0.0;
  for (double a : hidden_activations.flat()) {
    if (!(a >= range_lo && a <= range_hi))
      throw DataError("activation " + std::to_string(a) + " outside saturation range");
    total += std::abs(a - centre) / half_width;
  }
  const double value = total / static_cast<double>(hidden_activations.flat().size());
  return {std::min(value, 1.0), SaturationMethod::BoundedSigma};
}

SaturationReading relu_zero_fraction(const Matrix& hidden_activations) {
  if (hidden_activations.empty()) throw DataError("saturation of an empty activation set");
  std::size_t zeros = 0;
  for (double a : hidden_activations.flat())
    if (a == 0.0) ++zeros;
  return {static_cast<double>(zeros) / static_cast<double>(hidden_activations.flat().size()),
          SaturationMethod::ReluZeroFraction};
}

std::optional<SaturationReading> measure_saturation(Activation hidden, const Matrix& hidden_activations) {
  switch (hidden) {
    case Activation::TanH: return sigma_h(hidden_activations, -1.0, 1.0);
    case Activation::Sigmoid: return sigma_h(hidden_activations, 0.0, 1.0);
    case Activation::ReLU: return relu_zero_fraction(hidden_activations);
    case Activation::ELU: return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace lgc
