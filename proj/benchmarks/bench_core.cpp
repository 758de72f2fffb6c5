#include <benchmark/benchmark.h>

#include <variant>

#include "lgc/curvature.hpp"
#include "lgc/eigen_symmetric.hpp"
#include "lgc/nn.hpp"
#include "lgc/rng.hpp"
#include "lgc/walks.hpp"

namespace {

lgc::Batch random_batch(const lgc::MlpSpec& spec, std::size_t n, lgc::Rng& rng) {
  lgc::Batch b{lgc::Matrix(n, spec.n_input), lgc::Matrix(n, spec.n_output)};
  for (auto& v : b.inputs.flat()) v = rng.uniform(-1.0, 1.0);
  for (std::size_t r = 0; r < n; ++r) b.targets(r, rng.below(spec.n_output)) = 1.0;
  return b;
}

lgc::MlpSpec spec_for(std::int64_t problem) {
  switch (problem) {
    case 0: return lgc::xor_spec(lgc::Activation::TanH);
    case 1: return lgc::iris_spec(lgc::Activation::TanH);
    case 2: return lgc::heart_spec(lgc::Activation::TanH);
    default: return lgc::mnist_spec(lgc::Activation::TanH);
  }
}

// Arg 0: architecture (0 xor, 1 iris, 2 heart, 3 mnist); arg 1: batch size.
void BM_LossAndGradient(benchmark::State& state) {
  const auto spec = spec_for(state.range(0));
  lgc::Rng rng(1);
  const auto batch = random_batch(spec, static_cast<std::size_t>(state.range(1)), rng);
  const auto w = lgc::init_position(spec.param_count(), 1.0, rng);
  for (auto _ : state) benchmark::DoNotOptimize(lgc::loss_and_gradient(spec, w, batch));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_LossAndGradient)->Args({0, 4})->Args({1, 120})->Args({2, 736})->Args({3, 100});

void BM_Hessian(benchmark::State& state) {
  const auto spec = spec_for(state.range(0));
  lgc::Rng rng(2);
  const auto batch = random_batch(spec, static_cast<std::size_t>(state.range(1)), rng);
  const auto w = lgc::init_position(spec.param_count(), 1.0, rng);
  for (auto _ : state) benchmark::DoNotOptimize(lgc::hessian(spec, w, batch));
}
BENCHMARK(BM_Hessian)->Args({0, 4})->Args({1, 120})->Args({2, 736})->Unit(benchmark::kMillisecond);

void BM_EigenSymmetric(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  lgc::Rng rng(3);
  lgc::Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) a(i, j) = a(j, i) = rng.uniform(-1.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(lgc::eigenvalues_symmetric(a));
}
BENCHMARK(BM_EigenSymmetric)->Arg(9)->Arg(35)->Arg(341)->Unit(benchmark::kMicrosecond);

void BM_WalkStep(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  lgc::Rng rng(4);
  const auto g = lgc::init_position(m, 1.0, rng);
  const auto mask = lgc::mask_from_gradient(g);
  for (auto _ : state) benchmark::DoNotOptimize(lgc::prw_step(mask, 0.01, rng));
}
BENCHMARK(BM_WalkStep)->Arg(35)->Arg(7960);

}  // namespace

BENCHMARK_MAIN();
