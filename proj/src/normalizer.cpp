#include "aiio/normalizer.hpp"

#include <algorithm>
#include <cmath>

namespace aiio::net {

RotorNormalizer::RotorNormalizer(double mean, double stddev, double prior_count)
    : initial_mean_(mean),
      initial_stddev_(stddev),
      prior_count_(prior_count),
      count_(prior_count),
      mean_(mean),
      m2_(prior_count * stddev * stddev) {
  if (!(prior_count > 0.0) || !(stddev > 0.0) || !std::isfinite(mean)) {
    throw InvalidArgument("rotor normaliser needs a positive prior count and stddev");
  }
}

RotorNormalizer RotorNormalizer::from_coefficients(const aero::AeroCoefficients& c,
                                                   double prior_count) {
  const double hover = std::sqrt(c.hover_omega_sq());
  return RotorNormalizer(hover, 0.1 * hover, prior_count);
}

double RotorNormalizer::update(double omega_m) {
  count_ += 1.0;
  const double delta = omega_m - mean_;
  mean_ += delta / count_;
  m2_ += delta * (omega_m - mean_);
  return normalize(omega_m);
}

double RotorNormalizer::stddev() const { return std::sqrt(std::max(m2_ / count_, 0.0)); }

double RotorNormalizer::normalize(double omega_m) const { return (omega_m - mean_) / stddev(); }

Eigen::RowVectorXd encode_frame(const SensorFrame& frame, RotorNormalizer& normalizer,
                                const NetConfig& config) {
  Eigen::RowVectorXd row(config.input_channels());
  row.head<3>() = frame.gyro.transpose();
  row.segment<3>(3) = frame.accel.transpose() / kAccelScale;
  const double omega_m = std::sqrt(aero::mean_sq_rotor_speed(frame.rotor));
  const double normalized = normalizer.update(omega_m);
  if (config.use_rotor) {
    if (config.four_rotor_channels) {
      for (int i = 0; i < 4; ++i) row(6 + i) = normalizer.normalize(frame.rotor[static_cast<std::size_t>(i)]);
    } else {
      row(6) = normalized;
    }
  }
  return row;
}

WindowTensor normalize_window(std::span<const SensorFrame> frames, RotorNormalizer& normalizer,
                              const NetConfig& config) {
  WindowTensor w;
  w.data.resize(static_cast<Eigen::Index>(frames.size()), config.input_channels());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    w.data.row(static_cast<Eigen::Index>(i)) = encode_frame(frames[i], normalizer, config);
  }
  return w;
}

void SlidingWindow::push(const Eigen::RowVectorXd& row) {
  if (capacity_ == 0) return;
  if (rows_.size() == capacity_) rows_.pop_front();
  rows_.push_back(row);
}

WindowTensor SlidingWindow::tensor() const {
  WindowTensor w;
  if (rows_.empty()) return w;
  w.data.resize(static_cast<Eigen::Index>(rows_.size()), rows_.front().size());
  Eigen::Index r = 0;
  for (const auto& row : rows_) w.data.row(r++) = row;
  return w;
}

}  // namespace aiio::net
