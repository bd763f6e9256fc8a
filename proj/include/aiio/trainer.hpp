#pragma once

#include "aiio/velocity_net.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace aiio::net {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::size_t epochs = 50;
  double huber_delta = 1.0;  // [m/s]
  /// Switch to the NLL phase after this many epochs without a relative
  /// Huber improvement of at least `min_improvement`.
  std::size_t patience = 10;
  double min_improvement = 0.01;
  /// Epochs kept for the NLL phase even if the Huber loss is still
  /// improving (0 disables the forced switch).
  std::size_t nll_reserve_epochs = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 1;
  /// Worker threads for per-batch gradients; reduction order is fixed.
  std::size_t threads = 1;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double huber = 0.0;     // mean over predictions during the epoch
  double nll = 0.0;
  LossKind phase = LossKind::huber;
};

struct TrainResult {
  NetParams params;
  std::vector<EpochRecord> history;
  std::size_t switch_epoch = 0;  // first NLL epoch, 0 if never switched
};

/// Per-parameter adaptive moment steps.
class AdamOptimizer {
 public:
  AdamOptimizer(const NetParams& shape, double learning_rate, double beta1, double beta2,
                double epsilon);
  void step(NetParams& params, const NetParams& grad);
  void set_learning_rate(double lr) { lr_ = lr; }

 private:
  NetParams m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

/// Sum of per-sample gradients over `batch` (indices into `data`) and the
/// summed losses; independent of the thread count. When `per_sample`
/// is given (sized like `data`) each sample's loss is stored at its index.
LossValues batch_gradient(std::span<const Sample> data, std::span<const std::size_t> batch,
                          const NetParams& params, LossKind kind, double huber_delta,
                          NetParams& grad_sum, std::size_t threads = 1,
                          std::vector<LossValues>* per_sample = nullptr);

/// Huber phase, then NLL phase; throws DivergenceDetected on a non-finite loss.
TrainResult train(std::span<const Sample> data, const TrainConfig& cfg, NetParams init);
TrainResult train(std::span<const Sample> data, const TrainConfig& cfg, const NetConfig& net);

}  // namespace aiio::net
