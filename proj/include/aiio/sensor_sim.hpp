#pragma once

#include "aiio/aerodynamics.hpp"
#include "aiio/common.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace aiio::sim {

enum class TrajectoryKind { hover, circle, figure_eight, updown_circle, updown_eight, random_smooth };

std::string to_string(TrajectoryKind kind);
TrajectoryKind trajectory_kind_from_string(const std::string& name);

struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::circle;
  double duration = 60.0;      // [s]
  double sample_rate = 200.0;  // [Hz]
  double height = 1.5;         // base altitude [m]
  double radius = 2.0;         // circle / figure-eight size [m]
  double period = 8.0;         // planar loop period [s]
  double vertical_amplitude = 0.5;  // updown kinds [m]
  double vertical_period = 4.0;     // updown kinds [s]
  double max_speed = 3.0;           // random_smooth horizontal speed scale [m/s]
  double max_yaw = 0.5;             // random_smooth yaw amplitude bound [rad], <= pi/4
  std::uint64_t seed = 1;           // random_smooth only

  void validate() const;
  std::size_t sample_count() const;
};

struct GroundTruthState {
  double t = 0.0;
  Mat3 R = Mat3::Identity();  // body to world
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 omega_body = Vec3::Zero();
  Vec3 a_world = Vec3::Zero();

  Vec3 body_velocity() const { return R.transpose() * v; }
};

/// Flatness-style attitude: body z along a - g and zero yaw (random_smooth
/// adds a seeded yaw sinusoid). omega_body is the forward difference
/// Log(R_k^T R_{k+1}) / dt, so integrating the gyro reproduces the attitude
/// sequence exactly. Rejects sample rates below 50 Hz.
std::vector<GroundTruthState> generate_trajectory(const TrajectorySpec& spec);

/// Same trajectory, but roll and pitch are solved so that the kinematic
/// specific force R^T (a - g) equals the drag-plus-thrust model exactly
/// (without the rotating-frame term). Throws ThrustInfeasible when the
/// required thrust direction points below the horizon.
std::vector<GroundTruthState> generate_trajectory(const TrajectorySpec& spec,
                                                  const aero::AeroCoefficients& drag_aware);

struct NoiseConfig {
  double sigma_g = 0.0;   // gyro white noise per sample [rad/s]
  double sigma_a = 0.0;   // accel white noise per sample [m/s^2]
  double sigma_bg = 0.0;  // gyro bias random walk [rad/s/sqrt(s)]
  double sigma_ba = 0.0;  // accel bias random walk [m/s^2/sqrt(s)]
  Vec3 initial_bias_g = Vec3::Zero();
  Vec3 initial_bias_a = Vec3::Zero();
  std::uint64_t seed = 0;

  void validate() const;
  static NoiseConfig noiseless() { return {}; }
};

enum class SensorMode {
  model_consistent,  // accelerometer from the aerodynamic model
  kinematic,         // accelerometer as R^T (a - g)
};

struct SynthesisOptions {
  SensorMode mode = SensorMode::model_consistent;
  /// The rotating-frame term is off by default: with it the accelerometer no
  /// longer matches R^T (a - g), so inertial integration drifts.
  aero::ModelOptions model{.with_coriolis = false};
  double rotor_spread = 0.02;  // per-rotor multiplicative jitter bound
};

/// A sensor stream plus its ground truth on the same clock.
struct SequenceLog {
  std::vector<SensorFrame> frames;
  std::vector<GroundTruthState> truth;  // empty when no ground truth is available
  std::map<std::string, std::string> metadata;

  /// Throws MonotonicityViolation / InvalidArgument on broken invariants.
  void validate() const;
  bool has_truth() const { return !truth.empty(); }
};

/// Bias state and clean signals are exposed for tests.
struct SynthesisTrace {
  std::vector<Vec3> clean_accel;
  std::vector<Vec3> bias_a;
  std::vector<Vec3> bias_g;
  std::vector<double> omega_m_sq;
};

/// IMU + rotor synthesis. Per frame the mean-square rotor speed is solved
/// from the z axis (thrust minus z drag equals the kinematic z specific
/// force), then the accelerometer is the model prediction (or kinematic in
/// SensorMode::kinematic), then bias random walk b_{k+1} = b_k + s sqrt(dt) xi
/// and white noise are added. Rotor speeds are w_m (1 + d_i) renormalised so
/// their mean square is exact. Throws ThrustInfeasible for negative thrust.
SequenceLog synthesize_sensors(const std::vector<GroundTruthState>& truth,
                               const aero::AeroCoefficients& c, const NoiseConfig& noise,
                               const SynthesisOptions& options = {},
                               SynthesisTrace* trace = nullptr);

/// Convenience: drag-aware trajectory followed by synthesis, with metadata.
SequenceLog simulate(const TrajectorySpec& spec, const aero::AeroCoefficients& c,
                     const NoiseConfig& noise, const SynthesisOptions& options = {});

}  // namespace aiio::sim
