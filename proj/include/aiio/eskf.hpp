#pragma once

// Error-state EKF over {R, v, p, b_a, b_g}.
//
// Error state (15): [dtheta, dv, dp, db_a, db_g], with the attitude error on
// the left: R_true = Exp(dtheta) * R_est. Euclidean parts are additive.
//
// Discrete error propagation for one IMU step (w = gyro - b_g, a = accel -
// b_a, R' = R Exp(w dt), Jr = right Jacobian of w dt):
//
//   dtheta' = dtheta - R' Jr dt db_g           - R' Jr dt n_g
//   dv'     = dv - [R a]x dt dtheta - R dt db_a   - R dt n_a
//   dp'     = dp + dt dv - 1/2 [R a]x dt^2 dtheta - 1/2 R dt^2 db_a - 1/2 R dt^2 n_a
//   db_a'   = db_a + n_ba,  db_g' = db_g + n_bg
//
// Noise enters through B with the continuous densities W scaled by dt, so
// B maps n = [n_a, n_g, n_ba, n_bg] with blocks -R, -R' Jr, -1/2 R dt, I, I.
//
// The two-sample step replaces R a by the interval mean (R a0 + R' a1) / 2
// for velocity and by (2 R a0 + R' a1) / 3 for position; the b_a blocks
// become the matching mixes of R and R', and since R' a1 depends on b_g a
// small b_g coupling (R' [a1]x Jr dt, weighted 1/2 and 1/3) appears in the
// velocity and position rows.

#include "aiio/common.hpp"

#include <Eigen/Core>

namespace aiio::eskf {

inline constexpr int kTheta = 0;
inline constexpr int kVel = 3;
inline constexpr int kPos = 6;
inline constexpr int kAccBias = 9;
inline constexpr int kGyroBias = 12;
inline constexpr int kErrorDim = 15;

using ErrorState = Eigen::Matrix<double, 15, 1>;
using Covariance = Eigen::Matrix<double, 15, 15>;
using Transition = Eigen::Matrix<double, 15, 15>;
using NoiseMap = Eigen::Matrix<double, 15, 12>;
using NoiseMatrix = Eigen::Matrix<double, 12, 12>;

struct NavState {
  Mat3 R = Mat3::Identity();
  Vec3 v = Vec3::Zero();
  Vec3 p = Vec3::Zero();
  Vec3 b_a = Vec3::Zero();
  Vec3 b_g = Vec3::Zero();
};

/// Continuous-time noise densities (squared) for the 12 noise inputs.
struct ProcessNoise {
  double accel = 0.0;       // [(m/s^2)^2 s]
  double gyro = 0.0;        // [(rad/s)^2 s]
  double accel_bias = 0.0;  // [(m/s^2)^2 / s]
  double gyro_bias = 0.0;   // [(rad/s)^2 / s]

  /// From per-sample white-noise sigmas at sample period `dt` and
  /// random-walk sigmas per sqrt(s).
  static ProcessNoise from_discrete(double sigma_a, double sigma_g, double sigma_ba,
                                    double sigma_bg, double dt);
  NoiseMatrix matrix() const;
  void validate() const;
};

/// Mean propagation with one IMU sample held over `dt`.
NavState propagate_state(const NavState& x, const SensorFrame& imu, double dt);

/// Two-sample form: gyro held at `imu`, specific force linear in the world
/// frame from `imu` to `next`. Velocity error per step drops from O(dt^2)
/// to O(dt^3) on smooth motion.
NavState propagate_state(const NavState& x, const SensorFrame& imu, const SensorFrame& next,
                         double dt);

struct Jacobians {
  Transition A;
  NoiseMap B;
};

/// Error-state transition and noise map linearised at `x`.
Jacobians error_jacobians(const NavState& x, const SensorFrame& imu, double dt);
Jacobians error_jacobians(const NavState& x, const SensorFrame& imu, const SensorFrame& next,
                          double dt);

struct Propagated {
  NavState state;
  Covariance P;
};

/// P <- A P A^T + B (W dt) B^T, then symmetrised. Requires 0 < dt <= 0.05
/// and finite IMU data.
Propagated propagate(const NavState& x, const Covariance& P, const SensorFrame& imu, double dt,
                     const ProcessNoise& noise);
Propagated propagate(const NavState& x, const Covariance& P, const SensorFrame& imu,
                     const SensorFrame& next, double dt, const ProcessNoise& noise);

/// x (+) dx: R <- Exp(dtheta) R, others additive.
NavState inject(const NavState& x, const ErrorState& dx);

/// truth (-) estimate, consistent with inject.
ErrorState difference(const NavState& truth, const NavState& estimate);

inline constexpr double kDefaultGate = 16.27;  // chi-square(3), p = 0.999

struct UpdateResult {
  NavState state;
  Covariance P;
  bool accepted = true;
  double nis = 0.0;  // y^T S^-1 y
  Vec3 innovation = Vec3::Zero();
};

/// Body-frame velocity update with measurement covariance `sigma`
/// (diagonal, positive). Joseph-form covariance. When `gate` > 0 and the
/// NIS exceeds it the measurement is dropped and the input is returned with
/// accepted = false.
UpdateResult try_update_velocity(const NavState& x, const Covariance& P, const Vec3& v_meas,
                                 const Mat3& sigma, double gate = kDefaultGate);

/// As try_update_velocity, but a gated measurement throws
/// InnovationGateRejected.
Propagated update_velocity(const NavState& x, const Covariance& P, const Vec3& v_meas,
                           const Mat3& sigma, double gate = kDefaultGate);

/// Measurement Jacobian (3 x 15) of h(x) = R^T v.
Eigen::Matrix<double, 3, 15> velocity_jacobian(const NavState& x);

}  // namespace aiio::eskf
