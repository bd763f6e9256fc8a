#pragma once

#include "aiio/aerodynamics.hpp"
#include "aiio/velocity_net.hpp"

#include <deque>
#include <span>

namespace aiio::net {

/// Running mean/variance of the rotor channel (Welford updates).
///
/// The warm start acts as `prior_count` pseudo-observations with the given
/// mean and standard deviation, so statistics drift toward the live stream
/// at a rate set by that weight.
class RotorNormalizer {
 public:
  static constexpr double kDefaultPriorCount = 20000.0;

  RotorNormalizer(double mean, double stddev, double prior_count = kDefaultPriorCount);

  /// mean = hover rotor speed, stddev = 10% of it.
  static RotorNormalizer from_coefficients(const aero::AeroCoefficients& c,
                                           double prior_count = kDefaultPriorCount);

  /// Folds `omega_m` into the statistics, then standardises it.
  double update(double omega_m);
  double normalize(double omega_m) const;

  double mean() const { return mean_; }
  double stddev() const;
  double count() const { return count_; }

  double initial_mean() const { return initial_mean_; }
  double initial_stddev() const { return initial_stddev_; }
  double prior_count() const { return prior_count_; }

 private:
  double initial_mean_;
  double initial_stddev_;
  double prior_count_;
  double count_;
  double mean_;
  double m2_;
};

inline constexpr double kAccelScale = 9.81;

/// One input row: gyro (rad/s), accel / 9.81, then the rotor channel(s).
/// Updates the normaliser with this frame's rotor speed.
Eigen::RowVectorXd encode_frame(const SensorFrame& frame, RotorNormalizer& normalizer,
                                const NetConfig& config);

/// Encodes frames in order, updating the running statistics.
WindowTensor normalize_window(std::span<const SensorFrame> frames, RotorNormalizer& normalizer,
                              const NetConfig& config);

/// Fixed-capacity buffer of encoded rows for streaming inference.
class SlidingWindow {
 public:
  explicit SlidingWindow(std::size_t capacity) : capacity_(capacity) {}

  void push(const Eigen::RowVectorXd& row);
  bool full() const { return rows_.size() == capacity_; }
  std::size_t size() const { return rows_.size(); }
  std::size_t capacity() const { return capacity_; }
  WindowTensor tensor() const;
  void clear() { rows_.clear(); }

 private:
  std::size_t capacity_;
  std::deque<Eigen::RowVectorXd> rows_;
};

}  // namespace aiio::net
