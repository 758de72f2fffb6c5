#include "lgc/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lgc/eigen_symmetric.hpp"
#include "lgc/error.hpp"
#include "lgc/rng.hpp"
#include "lgc/saturation.hpp"

namespace lgc {

namespace {
constexpr std::uint64_t kBatchSalt = 0x62617463;  // "batc"
constexpr std::uint64_t kTestSalt = 0x74657374;   // "test"

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}
}  // namespace

double euclidean_norm(std::span<const double> v) {
  // Scaled accumulation keeps large gradients from overflowing.
  double scale = 0.0, ssq = 1.0;
  for (double x : v) {
    if (x == 0.0) continue;
    const double a = std::abs(x);
    if (scale < a) {
      ssq = 1.0 + ssq * (scale / a) * (scale / a);
      scale = a;
    } else {
      ssq += (a / scale) * (a / scale);
    }
  }
  return scale * std::sqrt(ssq);
}

BatchSource BatchSource::full_batch(const Dataset& data) {
  if (data.train.empty()) throw DataError("dataset has no training patterns");
  BatchSource s;
  s.data_ = &data;
  s.full_train_ = std::make_shared<const Batch>(gather(data, data.train));
  if (data.has_test()) s.test_ = std::make_shared<const Batch>(gather(data, data.test));
  return s;
}

BatchSource BatchSource::minibatch(const Dataset& data, std::size_t batch_size, std::size_t test_size,
                                   std::uint64_t seed, std::size_t walk_id) {
  if (batch_size == 0) throw UsageError("batch size must be positive");
  if (data.train.empty()) throw DataError("dataset has no training patterns");
  BatchSource s;
  s.data_ = &data;
  s.batch_size_ = std::min(batch_size, data.train.size());
  s.order_ = data.train;
  Rng rng(stream_seed(seed, walk_id, kBatchSalt));
  shuffle(s.order_, rng);
  if (data.has_test()) {
    std::vector<std::size_t> test = data.test;
    Rng trng(stream_seed(seed, 0, kTestSalt));
    shuffle(test, trng);
    test.resize(std::min(test.size(), test_size));
    std::sort(test.begin(), test.end());
    s.test_ = std::make_shared<const Batch>(gather(data, test));
  }
  return s;
}

const Batch& BatchSource::train_batch(std::size_t step) {
  if (is_full_batch()) return *full_train_;
  if (step != current_step_) {
    std::vector<std::size_t> idx(batch_size_);
    const std::size_t start = (step * batch_size_) % order_.size();
    for (std::size_t i = 0; i < batch_size_; ++i) idx[i] = order_[(start + i) % order_.size()];
    current_ = gather(*data_, idx);
    current_step_ = step;
  }
  return current_;
}

WalkTrace pgw_run(const MlpSpec& spec, BatchSource& batches, const WalkConfig& config, std::size_t walk_id,
                  const AnalysisOptions& options, std::string cell) {
  spec.validate();
  if (options.hessian_stride == 0) throw UsageError("hessian stride must be positive");
  WalkTrace trace;
  trace.walk_id = walk_id;
  trace.cell = std::move(cell);
  trace.records.reserve(config.n_steps);
  if (options.keep_positions) trace.positions.reserve(config.n_steps);

  const auto evaluate = [&](std::span<const double> x, std::size_t step) {
    return loss_and_gradient(spec, x, batches.train_batch(step));
  };
  const auto observe = [&](std::size_t step, std::span<const double> x, const LossGradient& at_x) {
    const Batch& train = batches.train_batch(step);
    StepRecord r;
    r.walk_id = walk_id;
    r.step = step;
    r.e_train = at_x.loss;
    r.grad_norm = euclidean_norm(at_x.gradient);
    if (const Batch* test = batches.test_batch()) r.e_gen = loss(spec, x, *test);

    if (options.hessian && step % options.hessian_stride == 0) {
      auto h = hessian(spec, x, train, options.hessian_cap);
      if (const auto* hm = std::get_if<Hessian>(&h)) {
        r.curvature = classify(eigenvalues_symmetric(hm->matrix), options.zero_thresholds);
        r.kink_adjacent = kink_adjacent(spec, x, train.inputs);
      }
    }
    if (options.saturation) r.saturation = measure_saturation(spec.hidden, forward(spec, x, train.inputs).hidden);

    if (!std::isfinite(r.e_gen.value_or(0.0)))
      throw NumericalError("walk " + std::to_string(walk_id) + ": non-finite generalisation loss at step " +
                           std::to_string(step));
    trace.records.push_back(r);
    if (options.keep_positions) trace.positions.emplace_back(x.begin(), x.end());
  };

  run_gradient_walk(spec.param_count(), config, walk_id, evaluate, observe);
  return trace;
}

}  // namespace lgc
