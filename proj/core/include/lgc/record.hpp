#pragma once

#include <cstddef>
#include <optional>

#include "lgc/curvature.hpp"
#include "lgc/saturation.hpp"

namespace lgc {

/// One point of a loss-gradient cloud.
struct StepRecord {
  std::size_t walk_id = 0;
  std::size_t step = 0;
  double e_train = 0.0;
  std::optional<double> e_gen;         // absent when the problem has no test split
  double grad_norm = 0.0;              // Euclidean norm of the training gradient
  std::optional<Curvature> curvature;  // absent means the Hessian was skipped
  std::optional<SaturationReading> saturation;
  bool kink_adjacent = false;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

}  // namespace lgc
