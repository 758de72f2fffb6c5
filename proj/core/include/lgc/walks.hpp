#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "lgc/nn.hpp"
#include "lgc/rng.hpp"

namespace lgc {

enum class StepRegime { Micro, Macro };

std::string_view to_string(StepRegime regime);
StepRegime parse_regime(std::string_view name);

/// Sampling parameters for one progressive gradient walk.
///
/// The maximum step is a fraction of the initialisation range width: 1% for micro
/// walks (1000 steps) and 10% for macro walks (100 steps). A [-1,1] micro walk
/// therefore steps at most 0.02 per coordinate, a [-10,10] macro walk at most 2.
struct WalkConfig {
  double init_bound = 1.0;  // positions start uniform on [-init_bound, init_bound]
  StepRegime regime = StepRegime::Micro;
  double max_step = 0.02;
  std::size_t n_steps = 1000;
  std::uint64_t seed = 0;

  static WalkConfig make(double init_bound, StepRegime regime, std::uint64_t seed);

  void validate() const;
};

double default_max_step(double init_bound, StepRegime regime);
std::size_t default_step_count(StepRegime regime);

/// bits[j] == 0 iff gradient component j is strictly positive.
struct GradientMask {
  std::vector<std::uint8_t> bits;

  std::size_t size() const { return bits.size(); }
};

/// Coordinates drawn i.i.d. uniform on [-bound, bound].
WeightVector init_position(std::size_t m, double bound, Rng& rng);

GradientMask mask_from_gradient(std::span<const double> gradient);

/// Progressive random walk step: |dx_j| uniform on [0, max_step], negative where the
/// mask bit is 0 and non-negative where it is 1.
std::vector<double> prw_step(const GradientMask& mask, double max_step, Rng& rng);

/// Number of independent walks per experiment cell: ten per dimension.
std::size_t experiment_walk_count(std::size_t m);

/// Random stream for one walk, derived from (master seed, walk id) only.
Rng walk_rng(std::uint64_t master_seed, std::size_t walk_id);

/// Loss and gradient at position x on step l; l lets the caller rotate minibatches.
using WalkGradientFn = std::function<LossGradient(std::span<const double> x, std::size_t step)>;

/// Called once per visited position, before the walk moves on.
using WalkObserver =
    std::function<void(std::size_t step, std::span<const double> x, const LossGradient& at_x)>;

/// Called with each displacement dx drawn at step l (x_{l+1} = x_l + dx).
using WalkMoveObserver = std::function<void(std::size_t step, std::span<const double> gradient,
                                            std::span<const double> dx)>;

/// Runs a progressive gradient walk of config.n_steps positions starting from a
/// random point of the initialisation range. Positions are never clipped. Throws
/// NumericalError (with step index and position) on a non-finite loss or gradient.
/// Returns the last visited position.
WeightVector run_gradient_walk(std::size_t m, const WalkConfig& config, std::size_t walk_id,
                               const WalkGradientFn& evaluate, const WalkObserver& observe,
                               const WalkMoveObserver& on_move = {});

}  // namespace lgc
