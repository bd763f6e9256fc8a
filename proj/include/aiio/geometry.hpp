#pragma once

// SO(3) helpers. Rotations are plain 3x3 matrices mapping body to world.

#include "aiio/common.hpp"

#include <Eigen/Geometry>

namespace aiio::geometry {

/// Cross-product matrix: hat(v) * w == v.cross(w).
Mat3 hat(const Vec3& v);

/// Inverse of hat for an antisymmetric matrix (uses the antisymmetric part).
Vec3 vee(const Mat3& m);

/// Rodrigues formula; second-order Taylor expansion below 1e-6 rad.
Mat3 exp_map(const Vec3& theta);

/// Rotation vector with norm in [0, pi].
///
/// At exactly pi the axis is ambiguous up to sign; the returned vector has
/// its largest-magnitude component positive (so a half turn about z gives
/// (0, 0, pi)). Throws NotARotation when ||R^T R - I|| exceeds 1e-6 or the
/// determinant is not +1.
Vec3 log_map(const Mat3& rotation);

/// Right Jacobian of SO(3): Exp(phi + d) ~= Exp(phi) Exp(Jr(phi) d).
Mat3 right_jacobian(const Vec3& phi);

/// Frobenius norm of R^T R - I.
double orthogonality_residual(const Mat3& rotation);

/// Nearest rotation in the Frobenius sense (SVD projection).
Mat3 orthonormalize(const Mat3& m);

/// Re-project only when the orthogonality residual exceeds `tolerance`.
Mat3 maybe_orthonormalize(const Mat3& rotation, double tolerance = 1e-9);

bool is_rotation(const Mat3& m, double tolerance = 1e-9);

Eigen::Quaterniond to_quaternion(const Mat3& rotation);
Mat3 from_quaternion(const Eigen::Quaterniond& q);

/// Roll/pitch that align body z with the measured specific force; yaw = 0.
Mat3 level_from_accel(const Vec3& specific_force);

}  // namespace aiio::geometry
