#include "lgc/walks.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "lgc/error.hpp"

namespace lgc {

namespace {
constexpr std::uint64_t kWalkSalt = 0x7761'6c6b;  // "walk"
}

std::string_view to_string(StepRegime regime) {
  return regime == StepRegime::Micro ? "micro" : "macro";
}

StepRegime parse_regime(std::string_view name) {
  if (name == "micro" || name == "Micro") return StepRegime::Micro;
  if (name == "macro" || name == "Macro") return StepRegime::Macro;
  throw UsageError("unknown step regime '" + std::string(name) + "' (expected micro or macro)");
}

double default_max_step(double init_bound, StepRegime regime) {
  const double width = 2.0 * init_bound;
  return (regime == StepRegime::Micro ? 0.01 : 0.1) * width;
}

std::size_t default_step_count(StepRegime regime) {
  return regime == StepRegime::Micro ? 1000 : 100;
}

WalkConfig WalkConfig::make(double init_bound, StepRegime regime, std::uint64_t seed) {
  WalkConfig c;
  c.init_bound = init_bound;
  c.regime = regime;
  c.max_step = default_max_step(init_bound, regime);
  c.n_steps = default_step_count(regime);
  c.seed = seed;
  return c;
}

void WalkConfig::validate() const {
  if (!(init_bound > 0.0) || !std::isfinite(init_bound))
    throw UsageError("initialisation bound must be positive and finite");
  if (!(max_step > 0.0) || !std::isfinite(max_step))
    throw UsageError("maximum step size must be positive and finite");
  if (n_steps < 1) throw UsageError("a walk needs at least one step");
}

WeightVector init_position(std::size_t m, double bound, Rng& rng) {
  if (m == 0) throw UsageError("cannot initialise a walk in a zero-dimensional space");
  WeightVector x(m);
  for (auto& v : x) v = rng.uniform(-bound, bound);
  return x;
}

GradientMask mask_from_gradient(std::span<const double> gradient) {
  GradientMask mask;
  mask.bits.resize(gradient.size());
  std::transform(gradient.begin(), gradient.end(), mask.bits.begin(),
                 [](double g) { return static_cast<std::uint8_t>(g > 0.0 ? 0 : 1); });
  return mask;
}

std::vector<double> prw_step(const GradientMask& mask, double max_step, Rng& rng) {
  std::vector<double> dx(mask.size());
  for (std::size_t j = 0; j < dx.size(); ++j) {
    const double magnitude = max_step * rng.uniform01();
    dx[j] = mask.bits[j] == 0 ? -magnitude : magnitude;
  }
  return dx;
}

std::size_t experiment_walk_count(std::size_t m) {
  if (m == 0) throw UsageError("dimensionality must be positive");
  return 10 * m;
}

Rng walk_rng(std::uint64_t master_seed, std::size_t walk_id) {
  return Rng(stream_seed(master_seed, walk_id, kWalkSalt));
}

namespace {

[[noreturn]] void non_finite(std::size_t step, std::size_t walk_id, std::span<const double> x,
                             std::string_view what) {
  std::ostringstream os;
  os.precision(17);
  os << "walk " << walk_id << ": non-finite " << what << " at step " << step << ", position [";
  for (std::size_t j = 0; j < x.size() && j < 16; ++j) os << (j ? ", " : "") << x[j];
  if (x.size() > 16) os << ", ...";
  os << "]";
  throw NumericalError(os.str());
}

}  // namespace

WeightVector run_gradient_walk(std::size_t m, const WalkConfig& config, std::size_t walk_id,
                               const WalkGradientFn& evaluate, const WalkObserver& observe,
                               const WalkMoveObserver& on_move) {
  config.validate();
  Rng rng = walk_rng(config.seed, walk_id);
  WeightVector x = init_position(m, config.init_bound, rng);

  for (std::size_t step = 0; step < config.n_steps; ++step) {
    const LossGradient at_x = evaluate(x, step);
    if (!std::isfinite(at_x.loss)) non_finite(step, walk_id, x, "loss");
    if (at_x.gradient.size() != m) throw ShapeError("gradient length does not match walk dimension");
    if (!std::all_of(at_x.gradient.begin(), at_x.gradient.end(), [](double g) { return std::isfinite(g); }))
      non_finite(step, walk_id, x, "gradient");

    if (observe) observe(step, x, at_x);
    if (step + 1 == config.n_steps) break;

    const std::vector<double> dx = prw_step(mask_from_gradient(at_x.gradient), config.max_step, rng);
    if (on_move) on_move(step, at_x.gradient, dx);
    for (std::size_t j = 0; j < m; ++j) x[j] += dx[j];
  }
  return x;
}

}  // namespace lgc
