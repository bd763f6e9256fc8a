#pragma once

#include <Eigen/Core>

#include <array>
#include <stdexcept>
#include <string>

namespace aiio {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// World-frame gravity, z axis up.
inline const Vec3 kGravity{0.0, 0.0, -9.81};
inline constexpr double kGravityNorm = 9.81;

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define AIIO_DEFINE_ERROR(Name)              \
  class Name : public Error {                \
   public:                                   \
    using Error::Error;                      \
  }

AIIO_DEFINE_ERROR(InvalidArgument);
AIIO_DEFINE_ERROR(NotARotation);
AIIO_DEFINE_ERROR(NoRealRoot);
AIIO_DEFINE_ERROR(Degenerate);
AIIO_DEFINE_ERROR(RankDeficient);
AIIO_DEFINE_ERROR(ThrustInfeasible);
AIIO_DEFINE_ERROR(DivergenceDetected);
AIIO_DEFINE_ERROR(ParseError);
AIIO_DEFINE_ERROR(MonotonicityViolation);
AIIO_DEFINE_ERROR(AlignmentFailure);
AIIO_DEFINE_ERROR(InnovationGateRejected);

#undef AIIO_DEFINE_ERROR

/// One time-stamped IMU + rotor telemetry sample. Rotor speeds in rad/s.
struct SensorFrame {
  double t = 0.0;
  Vec3 gyro = Vec3::Zero();
  Vec3 accel = Vec3::Zero();
  std::array<double, 4> rotor{0.0, 0.0, 0.0, 0.0};
};

inline bool all_finite(const Vec3& v) { return v.allFinite(); }

}  // namespace aiio
