#pragma once

#include "aiio/aerodynamics.hpp"
#include "aiio/eskf.hpp"
#include "aiio/normalizer.hpp"
#include "aiio/rng.hpp"
#include "aiio/sensor_sim.hpp"
#include "aiio/velocity_net.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

namespace aiio::eskf {

/// Body-frame velocity with per-axis variance [m^2/s^2].
struct VelocityMeasurement {
  Vec3 v = Vec3::Zero();
  Vec3 variance = Vec3::Ones();
};

/// Streaming velocity source. observe() sees every frame in order;
/// measure() is asked for the latest observed frame when an update is due.
/// Returning nullopt or throwing aiio::Error skips that update.
class VelocitySource {
 public:
  virtual ~VelocitySource() = default;
  virtual void observe(std::size_t index, const SensorFrame& frame) = 0;
  virtual std::optional<VelocityMeasurement> measure(std::size_t index) = 0;
  virtual std::string name() const = 0;
};

/// Test mode: ground-truth body velocity plus optional Gaussian noise.
class TruthVelocitySource final : public VelocitySource {
 public:
  TruthVelocitySource(std::vector<sim::GroundTruthState> truth, double noise_sigma,
                      double reported_sigma, std::uint64_t seed = 1);
  void observe(std::size_t, const SensorFrame&) override {}
  std::optional<VelocityMeasurement> measure(std::size_t index) override;
  std::string name() const override { return "truth"; }

 private:
  std::vector<sim::GroundTruthState> truth_;
  double noise_sigma_;
  double reported_var_;
  Rng rng_;
};

/// Analytic inversion of the drag model. Each frame is inverted on its own;
/// a straight line fitted through the last `fit_frames` velocities is read
/// at the newest frame. Variance per axis is the accelerometer noise mapped
/// through the local drag slope and the line fit, plus `model_sigma`^2.
class AeroVelocitySource final : public VelocitySource {
 public:
  struct Options {
    aero::ModelOptions model{};
    std::size_t fit_frames = 40;
    double accel_sigma = 0.1;   // per-sample accelerometer noise [m/s^2]
    double model_sigma = 0.02;  // unmodelled error floor [m/s]
  };

  AeroVelocitySource(const aero::AeroCoefficients& c, const Options& options);
  void observe(std::size_t index, const SensorFrame& frame) override;
  std::optional<VelocityMeasurement> measure(std::size_t index) override;
  std::string name() const override { return "aero"; }

 private:
  struct Inverted {
    double t;
    Vec3 v;
    Vec3 slope;
    bool ok;
  };
  aero::AeroCoefficients c_;
  Options options_;
  std::deque<Inverted> recent_;
};

/// Learned regressor over a sliding window of encoded frames.
class NetVelocitySource final : public VelocitySource {
 public:
  NetVelocitySource(net::NetParams params, net::RotorNormalizer normalizer);
  void observe(std::size_t index, const SensorFrame& frame) override;
  std::optional<VelocityMeasurement> measure(std::size_t index) override;
  std::string name() const override { return "net"; }

 private:
  net::NetParams params_;
  net::RotorNormalizer normalizer_;
  net::SlidingWindow window_;
};

struct FilterConfig {
  double update_rate = 20.0;  // [Hz], 0 disables updates
  std::size_t window = 200;   // frames buffered before the first update
  ProcessNoise noise{};
  double init_attitude_var = 1e-2;
  double init_velocity_var = 1e-1;
  double init_position_var = 1e-4;
  double init_accel_bias_var = 1e-3;
  double init_gyro_bias_var = 1e-4;
  double gate = kDefaultGate;  // <= 0 disables gating
  bool keep_covariance = true;

  Covariance initial_covariance() const;
  void validate() const;
};

struct TrackPoint {
  double t = 0.0;
  NavState x;
  Covariance P;  // zero when keep_covariance is false
};

struct FilterStats {
  std::size_t applied = 0;
  std::size_t rejected = 0;  // innovation gate
  std::size_t skipped = 0;   // source had nothing or failed
  std::vector<std::string> messages;  // first few skip reasons
};

struct FilterRun {
  std::vector<TrackPoint> track;  // one point per input frame
  FilterStats stats;
};

/// Roll and pitch from the first accelerometer sample, yaw 0, everything
/// else zero.
NavState initial_state(const SensorFrame& first);

/// Propagates at the IMU rate (intervals longer than 0.05 s are split),
/// updating at `update_rate` once `window` frames have been seen. A null
/// source gives pure dead reckoning.
FilterRun run_filter(const sim::SequenceLog& seq, VelocitySource* source, const FilterConfig& cfg);
FilterRun run_filter(const sim::SequenceLog& seq, VelocitySource* source, const FilterConfig& cfg,
                     const NavState& x0, const Covariance& P0);

}  // namespace aiio::eskf
