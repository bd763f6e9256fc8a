#include "aiio/eskf.hpp"

#include "aiio/geometry.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace aiio::eskf {

using geometry::exp_map;
using geometry::hat;

ProcessNoise ProcessNoise::from_discrete(double sigma_a, double sigma_g, double sigma_ba,
                                         double sigma_bg, double dt) {
  ProcessNoise w;
  w.accel = sigma_a * sigma_a * dt;
  w.gyro = sigma_g * sigma_g * dt;
  w.accel_bias = sigma_ba * sigma_ba;
  w.gyro_bias = sigma_bg * sigma_bg;
  return w;
}

NoiseMatrix ProcessNoise::matrix() const {
  NoiseMatrix w = NoiseMatrix::Zero();
  w.diagonal().segment<3>(0).setConstant(accel);
  w.diagonal().segment<3>(3).setConstant(gyro);
  w.diagonal().segment<3>(6).setConstant(accel_bias);
  w.diagonal().segment<3>(9).setConstant(gyro_bias);
  return w;
}

void ProcessNoise::validate() const {
  for (double d : {accel, gyro, accel_bias, gyro_bias}) {
    if (!(d >= 0.0) || !std::isfinite(d)) throw InvalidArgument("process noise must be non-negative");
  }
}

namespace {

// One interval with the gyro held at `imu` and the specific force either held
// (next == nullptr) or varying linearly in the world frame up to `next`.
// Velocity uses the interval mean of R a, position the weights 2/3, 1/3.
struct Interval {
  Vec3 rate_dt;
  Mat3 r_next;
  Mat3 jr;
  Vec3 a_vel;   // world specific force averaged for the velocity step
  Vec3 a_pos;   // weighted for the position step (times dt^2 / 2)
  Mat3 dvel_dba, dpos_dba;
  Mat3 dvel_dbg, dpos_dbg;
  Mat3 noise_vel, noise_pos;
};

Interval make_interval(const NavState& x, const SensorFrame& imu, const SensorFrame* next,
                       double dt) {
  Interval in;
  in.rate_dt = (imu.gyro - x.b_g) * dt;
  in.r_next = x.R * exp_map(in.rate_dt);
  in.jr = geometry::right_jacobian(in.rate_dt);
  const Vec3 a0 = imu.accel - x.b_a;
  if (next == nullptr) {
    in.a_vel = x.R * a0;
    in.a_pos = in.a_vel;
    in.dvel_dba = -x.R;
    in.dpos_dba = -x.R;
    in.dvel_dbg.setZero();
    in.dpos_dbg.setZero();
    in.noise_vel = -x.R;
    in.noise_pos = -x.R;
    return in;
  }
  const Vec3 a1 = next->accel - x.b_a;
  const Vec3 w0 = x.R * a0;
  const Vec3 w1 = in.r_next * a1;
  in.a_vel = 0.5 * (w0 + w1);
  in.a_pos = (2.0 / 3.0) * w0 + (1.0 / 3.0) * w1;
  in.dvel_dba = -0.5 * (x.R + in.r_next);
  in.dpos_dba = -((2.0 / 3.0) * x.R + (1.0 / 3.0) * in.r_next);
  // R' depends on b_g through Exp((w - b_g) dt).
  const Mat3 d_w1_dbg = in.r_next * hat(a1) * in.jr * dt;
  in.dvel_dbg = 0.5 * d_w1_dbg;
  in.dpos_dbg = (1.0 / 3.0) * d_w1_dbg;
  in.noise_vel = in.dvel_dba;
  in.noise_pos = in.dpos_dba;
  return in;
}

NavState step_state(const NavState& x, const Interval& in, double dt) {
  NavState out = x;
  out.R = geometry::maybe_orthonormalize(in.r_next);
  out.v = x.v + kGravity * dt + in.a_vel * dt;
  out.p = x.p + x.v * dt + 0.5 * (kGravity + in.a_pos) * dt * dt;
  return out;
}

Jacobians step_jacobians(const Interval& in, double dt) {
  Jacobians j;
  j.A.setIdentity();
  j.A.block<3, 3>(kTheta, kGyroBias) = -in.r_next * in.jr * dt;
  j.A.block<3, 3>(kVel, kTheta) = -hat(in.a_vel) * dt;
  j.A.block<3, 3>(kVel, kAccBias) = in.dvel_dba * dt;
  j.A.block<3, 3>(kVel, kGyroBias) = in.dvel_dbg * dt;
  j.A.block<3, 3>(kPos, kTheta) = -0.5 * hat(in.a_pos) * dt * dt;
  j.A.block<3, 3>(kPos, kVel) = Mat3::Identity() * dt;
  j.A.block<3, 3>(kPos, kAccBias) = 0.5 * in.dpos_dba * dt * dt;
  j.A.block<3, 3>(kPos, kGyroBias) = 0.5 * in.dpos_dbg * dt * dt;

  j.B.setZero();
  j.B.block<3, 3>(kVel, 0) = in.noise_vel;
  j.B.block<3, 3>(kPos, 0) = 0.5 * in.noise_pos * dt;
  j.B.block<3, 3>(kTheta, 3) = -in.r_next * in.jr;
  j.B.block<3, 3>(kAccBias, 6) = Mat3::Identity();
  j.B.block<3, 3>(kGyroBias, 9) = Mat3::Identity();
  return j;
}

void check_step(const SensorFrame& imu, double dt) {
  if (!(dt > 0.0) || dt > 0.05) throw InvalidArgument("propagate: dt must be in (0, 0.05] s");
  if (!imu.accel.allFinite() || !imu.gyro.allFinite()) {
    throw InvalidArgument("propagate: non-finite IMU sample");
  }
}

Propagated propagate_impl(const NavState& x, const Covariance& P, const SensorFrame& imu,
                          const SensorFrame* next, double dt, const ProcessNoise& noise) {
  check_step(imu, dt);
  if (next != nullptr) check_step(*next, dt);
  const Interval in = make_interval(x, imu, next, dt);
  const Jacobians j = step_jacobians(in, dt);
  Propagated out;
  out.state = step_state(x, in, dt);
  out.P = j.A * P * j.A.transpose() + j.B * (noise.matrix() * dt) * j.B.transpose();
  out.P = 0.5 * (out.P + out.P.transpose()).eval();
  return out;
}

}  // namespace

NavState propagate_state(const NavState& x, const SensorFrame& imu, double dt) {
  return step_state(x, make_interval(x, imu, nullptr, dt), dt);
}

NavState propagate_state(const NavState& x, const SensorFrame& imu, const SensorFrame& next,
                         double dt) {
  return step_state(x, make_interval(x, imu, &next, dt), dt);
}

Jacobians error_jacobians(const NavState& x, const SensorFrame& imu, double dt) {
  return step_jacobians(make_interval(x, imu, nullptr, dt), dt);
}

Jacobians error_jacobians(const NavState& x, const SensorFrame& imu, const SensorFrame& next,
                          double dt) {
  return step_jacobians(make_interval(x, imu, &next, dt), dt);
}

Propagated propagate(const NavState& x, const Covariance& P, const SensorFrame& imu, double dt,
                     const ProcessNoise& noise) {
  return propagate_impl(x, P, imu, nullptr, dt, noise);
}

Propagated propagate(const NavState& x, const Covariance& P, const SensorFrame& imu,
                     const SensorFrame& next, double dt, const ProcessNoise& noise) {
  return propagate_impl(x, P, imu, &next, dt, noise);
}

NavState inject(const NavState& x, const ErrorState& dx) {
  NavState out;
  out.R = geometry::maybe_orthonormalize(exp_map(dx.segment<3>(kTheta)) * x.R);
  out.v = x.v + dx.segment<3>(kVel);
  out.p = x.p + dx.segment<3>(kPos);
  out.b_a = x.b_a + dx.segment<3>(kAccBias);
  out.b_g = x.b_g + dx.segment<3>(kGyroBias);
  return out;
}

ErrorState difference(const NavState& truth, const NavState& estimate) {
  ErrorState dx;
  dx.segment<3>(kTheta) = geometry::log_map(truth.R * estimate.R.transpose());
  dx.segment<3>(kVel) = truth.v - estimate.v;
  dx.segment<3>(kPos) = truth.p - estimate.p;
  dx.segment<3>(kAccBias) = truth.b_a - estimate.b_a;
  dx.segment<3>(kGyroBias) = truth.b_g - estimate.b_g;
  return dx;
}

Eigen::Matrix<double, 3, 15> velocity_jacobian(const NavState& x) {
  Eigen::Matrix<double, 3, 15> h = Eigen::Matrix<double, 3, 15>::Zero();
  h.block<3, 3>(0, kTheta) = x.R.transpose() * hat(x.v);
  h.block<3, 3>(0, kVel) = x.R.transpose();
  return h;
}

UpdateResult try_update_velocity(const NavState& x, const Covariance& P, const Vec3& v_meas,
                                 const Mat3& sigma, double gate) {
  if (!v_meas.allFinite()) throw InvalidArgument("update_velocity: non-finite measurement");
  const bool diagonal = (sigma - Mat3(sigma.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
  if (!diagonal || !(sigma.diagonal().array() > 0.0).all() || !sigma.allFinite()) {
    throw InvalidArgument("update_velocity: measurement covariance must be diagonal and positive");
  }

  const Eigen::Matrix<double, 3, 15> h = velocity_jacobian(x);
  const Vec3 innovation = v_meas - x.R.transpose() * x.v;
  const Mat3 s = h * P * h.transpose() + sigma;
  const Eigen::LDLT<Mat3> s_ldlt(s);
  const double nis = innovation.dot(s_ldlt.solve(innovation));

  UpdateResult out;
  out.innovation = innovation;
  out.nis = nis;
  if (gate > 0.0 && !(nis <= gate)) {
    out.state = x;
    out.P = P;
    out.accepted = false;
    return out;
  }

  // K = P H^T S^-1, computed as (S^-1 H P)^T since S and P are symmetric.
  const Eigen::Matrix<double, 15, 3> k = s_ldlt.solve(h * P).transpose();
  const ErrorState dx = k * innovation;
  const Covariance i_kh = Covariance::Identity() - k * h;
  out.P = i_kh * P * i_kh.transpose() + k * sigma * k.transpose();
  out.P = 0.5 * (out.P + out.P.transpose()).eval();
  out.state = inject(x, dx);
  return out;
}

Propagated update_velocity(const NavState& x, const Covariance& P, const Vec3& v_meas,
                           const Mat3& sigma, double gate) {
  UpdateResult r = try_update_velocity(x, P, v_meas, sigma, gate);
  if (!r.accepted) {
    throw InnovationGateRejected("velocity innovation rejected, NIS = " + std::to_string(r.nis));
  }
  return {r.state, r.P};
}

}  // namespace aiio::eskf
