#include "aiio/geometry.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace aiio::geometry {

Mat3 hat(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Vec3 vee(const Mat3& m) {
  return 0.5 * Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
}

Mat3 exp_map(const Vec3& theta) {
  const double angle = theta.norm();
  const Mat3 k = hat(theta);
  if (angle < 1e-6) {
    return Mat3::Identity() + k + 0.5 * k * k;
  }
  const double a = std::sin(angle) / angle;
  const double b = (1.0 - std::cos(angle)) / (angle * angle);
  return Mat3::Identity() + a * k + b * k * k;
}

namespace {

// Axis of a rotation close to a half turn, taken from the symmetric part
// R_sym = cos(a) I + (1 - cos(a)) n n^T.
Vec3 half_turn_axis(const Mat3& r, double cos_angle) {
  const Mat3 sym = 0.5 * (r + r.transpose());
  const Mat3 nnt = (sym - cos_angle * Mat3::Identity()) / (1.0 - cos_angle);
  Eigen::Index i = 0;
  nnt.diagonal().maxCoeff(&i);
  Vec3 axis = nnt.col(i) / std::sqrt(std::max(nnt(i, i), 1e-300));
  return axis.normalized();
}

}  // namespace

Vec3 log_map(const Mat3& rotation) {
  if (!rotation.allFinite() || orthogonality_residual(rotation) > 1e-6 ||
      rotation.determinant() < 0.0) {
    throw NotARotation("log_map: input is not a rotation matrix");
  }
  const Vec3 s = vee(rotation);  // sin(angle) * axis
  const double sin_angle = s.norm();
  const double cos_angle = std::clamp(0.5 * (rotation.trace() - 1.0), -1.0, 1.0);
  const double angle = std::atan2(sin_angle, cos_angle);

  if (angle < 1e-6) {
    // angle / sin(angle) = 1 + angle^2 / 6 + O(angle^4)
    return (1.0 + angle * angle / 6.0) * s;
  }
  if (std::numbers::pi - angle > 1e-3) {
    return (angle / sin_angle) * s;
  }

  Vec3 axis = half_turn_axis(rotation, cos_angle);
  const double alignment = axis.dot(s);
  if (std::abs(alignment) > 1e-14) {
    if (alignment < 0.0) axis = -axis;
  } else {
    Eigen::Index i = 0;
    axis.cwiseAbs().maxCoeff(&i);
    if (axis(i) < 0.0) axis = -axis;
  }
  return angle * axis;
}

Mat3 right_jacobian(const Vec3& phi) {
  const double angle = phi.norm();
  const Mat3 k = hat(phi);
  if (angle < 1e-5) {
    return Mat3::Identity() - 0.5 * k + (1.0 / 6.0) * k * k;
  }
  const double a2 = angle * angle;
  return Mat3::Identity() - ((1.0 - std::cos(angle)) / a2) * k +
         ((angle - std::sin(angle)) / (a2 * angle)) * k * k;
}

double orthogonality_residual(const Mat3& rotation) {
  return (rotation.transpose() * rotation - Mat3::Identity()).norm();
}

Mat3 orthonormalize(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) = -u.col(2);
  return u * v.transpose();
}

Mat3 maybe_orthonormalize(const Mat3& rotation, double tolerance) {
  return orthogonality_residual(rotation) > tolerance ? orthonormalize(rotation) : rotation;
}

bool is_rotation(const Mat3& m, double tolerance) {
  return m.allFinite() && orthogonality_residual(m) <= tolerance &&
         std::abs(m.determinant() - 1.0) <= tolerance;
}

Eigen::Quaterniond to_quaternion(const Mat3& rotation) {
  Eigen::Quaterniond q(rotation);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return q;
}

Mat3 from_quaternion(const Eigen::Quaterniond& q) { return q.normalized().toRotationMatrix(); }

Mat3 level_from_accel(const Vec3& specific_force) {
  if (!specific_force.allFinite() || specific_force.norm() < 1e-9) {
    throw InvalidArgument("level_from_accel: specific force must be finite and non-zero");
  }
  // At rest the specific force is R^T (0, 0, g); solve R = Ry(pitch) Rx(roll).
  const Vec3 f = specific_force.normalized();
  const double roll = std::atan2(f.y(), f.z());
  const double pitch = std::atan2(-f.x(), std::sqrt(f.y() * f.y() + f.z() * f.z()));
  const Mat3 rx = Eigen::AngleAxisd(roll, Vec3::UnitX()).toRotationMatrix();
  const Mat3 ry = Eigen::AngleAxisd(pitch, Vec3::UnitY()).toRotationMatrix();
  return ry * rx;
}

}  // namespace aiio::geometry
