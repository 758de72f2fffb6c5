#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "lgc/curvature.hpp"
#include "lgc/datasets.hpp"
#include "lgc/nn.hpp"
#include "lgc/record.hpp"
#include "lgc/walks.hpp"

namespace lgc {

/// Supplies the training batch used at each walk step and the batch for E_g.
class BatchSource {
 public:
  /// Every step sees the whole training split; E_g uses the whole test split.
  static BatchSource full_batch(const Dataset& data);

  /// Minibatches of `batch_size` taken cyclically from a per-walk seeded shuffle of
  /// the training split, one per step. E_g uses a fixed subset of at most
  /// `test_size` test patterns chosen from `seed` alone, shared by every walk.
  static BatchSource minibatch(const Dataset& data, std::size_t batch_size, std::size_t test_size,
                               std::uint64_t seed, std::size_t walk_id);

  const Batch& train_batch(std::size_t step);
  const Batch* test_batch() const { return test_.get(); }
  bool is_full_batch() const { return batch_size_ == 0; }

 private:
  BatchSource() = default;

  const Dataset* data_ = nullptr;
  std::shared_ptr<const Batch> full_train_;
  std::shared_ptr<const Batch> test_;
  std::vector<std::size_t> order_;
  std::size_t batch_size_ = 0;
  std::size_t current_step_ = static_cast<std::size_t>(-1);
  Batch current_;
};

struct AnalysisOptions {
  bool hessian = true;
  std::size_t hessian_stride = 1;  // Hessian at steps that are multiples of this
  std::size_t hessian_cap = kDefaultHessianCap;
  ZeroThresholds zero_thresholds;
  bool saturation = true;
  bool keep_positions = false;
};

struct WalkTrace {
  std::size_t walk_id = 0;
  std::string cell;
  std::vector<WeightVector> positions;  // filled only with AnalysisOptions::keep_positions
  std::vector<StepRecord> records;
};

/// Progressive gradient walk over a network's weight space. Each visited position is
/// recorded with its training loss and gradient norm, the test loss when a test batch
/// exists, the Hessian curvature class and the hidden-layer saturation (both measured
/// on the step's training batch).
WalkTrace pgw_run(const MlpSpec& spec, BatchSource& batches, const WalkConfig& config, std::size_t walk_id,
                  const AnalysisOptions& options = {}, std::string cell = {});

double euclidean_norm(std::span<const double> v);

}  // namespace lgc
