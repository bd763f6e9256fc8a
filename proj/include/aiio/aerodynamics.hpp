#pragma once

// Quadrotor specific-force model with rotor-induced drag, parasitic drag and
// thrust, expressed in the body frame:
//
//   a_x = -lambda_x w2 v_x - k1 v_x - k2 v_x |v_x|
//   a_y = -lambda_y w2 v_y - k3 v_y - k4 v_y |v_y|
//   a_z = 4 alpha w2        - k5 v_z - k6 v_z |v_z|
//
// where w2 is the mean of the squared rotor speeds. An optional rotating-frame
// term -2 omega x v is added on top. The model is linear in the nine
// coefficients, which is what fit_coefficients exploits.

#include "aiio/common.hpp"

#include <array>
#include <span>

namespace aiio::aero {

struct AeroCoefficients {
  double k1 = 0.0;  // linear drag x [1/s]
  double k2 = 0.0;  // quadratic drag x [1/m]
  double k3 = 0.0;
  double k4 = 0.0;
  double k5 = 0.0;
  double k6 = 0.0;
  double lambda_x = 0.0;  // induced drag [s/rad^2]
  double lambda_y = 0.0;
  double alpha = 0.0;  // thrust per unit mean-square rotor speed

  /// Small racing-quad values: hover near 1500 rad/s per rotor.
  static AeroCoefficients defaults();

  /// Throws InvalidArgument unless every entry is finite, >= 0 and alpha > 0.
  void validate() const;

  /// Mean-square rotor speed that balances gravity at zero velocity.
  double hover_omega_sq() const;

  /// Order: k1..k6, lambda_x, lambda_y, alpha.
  std::array<double, 9> to_array() const;
  static AeroCoefficients from_array(const std::array<double, 9>& values);

  static const std::array<const char*, 9>& names();
};

struct BodyKinematics {
  Vec3 v = Vec3::Zero();      // body-frame velocity [m/s]
  Vec3 omega = Vec3::Zero();  // body rate [rad/s]
  double omega_m_sq = 0.0;    // mean squared rotor speed [rad^2/s^2]
};

enum class DragForm {
  signed_square,   // -k v |v|, opposes motion in both directions
  literal_square,  // -k v^2, kept for comparison
};

struct ModelOptions {
  bool with_coriolis = true;
  DragForm drag = DragForm::signed_square;
};

/// (w1^2 + w2^2 + w3^2 + w4^2) / 4; rejects negative speeds.
double mean_sq_rotor_speed(double w1, double w2, double w3, double w4);
double mean_sq_rotor_speed(const std::array<double, 4>& rotor);

/// Noise- and bias-free accelerometer prediction.
Vec3 predict_specific_force(const BodyKinematics& kin, const AeroCoefficients& c,
                            const ModelOptions& options = {});

/// Body velocity that reproduces `a_meas` under the model.
///
/// Each axis is a scalar equation, quadratic in |v|, solved in closed form on
/// the physical branch. The rotating-frame term couples the axes; it is
/// resolved by Newton iteration on the 3-D system seeded with the axis-wise
/// solution. Throws NoRealRoot for an inconsistent measurement and Degenerate
/// when an axis has no drag at all.
Vec3 invert_velocity(const Vec3& a_meas, const Vec3& omega, double omega_m_sq,
                     const AeroCoefficients& c, const ModelOptions& options = {});

struct AeroSample {
  Vec3 accel = Vec3::Zero();
  BodyKinematics kin;
};

struct FitResult {
  AeroCoefficients coefficients;
  Vec3 rms_residual = Vec3::Zero();  // per axis [m/s^2]
  double condition_number = 0.0;     // of the column-equilibrated design matrix
  std::size_t samples = 0;
};

inline constexpr double kMaxConditionNumber = 1e10;

/// Linear least squares for all nine coefficients. Estimates are returned
/// unclamped. Throws RankDeficient when the design matrix is ill-conditioned
/// (e.g. hover-only data) and InvalidArgument for fewer than 9 samples.
FitResult fit_coefficients(std::span<const AeroSample> samples, const ModelOptions& options = {});

}  // namespace aiio::aero
