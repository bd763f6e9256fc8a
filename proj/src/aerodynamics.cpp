#include "aiio/aerodynamics.hpp"

#include "aiio/geometry.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>

namespace aiio::aero {

AeroCoefficients AeroCoefficients::defaults() {
  AeroCoefficients c;
  c.k1 = 0.12;
  c.k2 = 0.025;
  c.k3 = 0.14;
  c.k4 = 0.03;
  c.k5 = 0.08;
  c.k6 = 0.015;
  c.lambda_x = 1.6e-7;
  c.lambda_y = 1.8e-7;
  c.alpha = kGravityNorm / (4.0 * 1500.0 * 1500.0);
  return c;
}

const std::array<const char*, 9>& AeroCoefficients::names() {
  static const std::array<const char*, 9> kNames{"k1", "k2", "k3", "k4", "k5",
                                                 "k6", "lambda_x", "lambda_y", "alpha"};
  return kNames;
}

std::array<double, 9> AeroCoefficients::to_array() const {
  return {k1, k2, k3, k4, k5, k6, lambda_x, lambda_y, alpha};
}

AeroCoefficients AeroCoefficients::from_array(const std::array<double, 9>& x) {
  AeroCoefficients c;
  c.k1 = x[0];
  c.k2 = x[1];
  c.k3 = x[2];
  c.k4 = x[3];
  c.k5 = x[4];
  c.k6 = x[5];
  c.lambda_x = x[6];
  c.lambda_y = x[7];
  c.alpha = x[8];
  return c;
}

void AeroCoefficients::validate() const {
  const auto values = to_array();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || values[i] < 0.0) {
      throw InvalidArgument(std::string("aero coefficient ") + names()[i] +
                            " must be finite and non-negative");
    }
  }
  if (alpha <= 0.0) throw InvalidArgument("aero coefficient alpha must be positive");
}

double AeroCoefficients::hover_omega_sq() const { return kGravityNorm / (4.0 * alpha); }

double mean_sq_rotor_speed(double w1, double w2, double w3, double w4) {
  if (w1 < 0.0 || w2 < 0.0 || w3 < 0.0 || w4 < 0.0) {
    throw InvalidArgument("rotor speeds must be non-negative");
  }
  return (w1 * w1 + w2 * w2 + w3 * w3 + w4 * w4) / 4.0;
}

double mean_sq_rotor_speed(const std::array<double, 4>& rotor) {
  return mean_sq_rotor_speed(rotor[0], rotor[1], rotor[2], rotor[3]);
}

namespace {

// Per-axis drag written as -linear * v - quadratic * g(v).
struct AxisDrag {
  double linear = 0.0;
  double quadratic = 0.0;
};

std::array<AxisDrag, 3> axis_drag(const AeroCoefficients& c, double omega_m_sq) {
  return {AxisDrag{c.lambda_x * omega_m_sq + c.k1, c.k2},
          AxisDrag{c.lambda_y * omega_m_sq + c.k3, c.k4},
          AxisDrag{c.k5, c.k6}};
}

double square_term(double v, DragForm form) {
  return form == DragForm::signed_square ? v * std::abs(v) : v * v;
}

double square_term_derivative(double v, DragForm form) {
  return form == DragForm::signed_square ? 2.0 * std::abs(v) : 2.0 * v;
}

Vec3 drag_only(const Vec3& v, const std::array<AxisDrag, 3>& drag, DragForm form) {
  Vec3 a;
  for (int i = 0; i < 3; ++i) {
    a(i) = -drag[i].linear * v(i) - drag[i].quadratic * square_term(v(i), form);
  }
  return a;
}

// Solves -b v - q g(v) = target for one axis on the branch through v = 0.
double solve_axis(double target, const AxisDrag& d, DragForm form, int axis) {
  const double b = d.linear;
  const double q = d.quadratic;
  if (b == 0.0 && q == 0.0) {
    throw Degenerate("velocity unobservable on axis " + std::to_string(axis) +
                     ": all drag coefficients are zero");
  }
  if (target == 0.0) return 0.0;

  if (form == DragForm::signed_square) {
    // |v| solves q u^2 + b u - |target| = 0, sign(v) = -sign(target).
    const double m = std::abs(target);
    const double u = 2.0 * m / (b + std::sqrt(b * b + 4.0 * q * m));
    return target > 0.0 ? -u : u;
  }

  // q v^2 + b v + target = 0; keep the smaller-magnitude root.
  if (q == 0.0) return -target / b;
  const double disc = b * b - 4.0 * q * target;
  if (disc < 0.0) {
    throw NoRealRoot("no real velocity on axis " + std::to_string(axis) +
                     " (negative discriminant)");
  }
  const double root = std::sqrt(disc);
  if (b > 0.0) return -2.0 * target / (b + root);
  return root / (2.0 * q);  // b == 0: v^2 = -target / q, positive branch
}

}  // namespace

Vec3 predict_specific_force(const BodyKinematics& kin, const AeroCoefficients& c,
                            const ModelOptions& options) {
  const auto drag = axis_drag(c, kin.omega_m_sq);
  Vec3 a = drag_only(kin.v, drag, options.drag);
  a.z() += 4.0 * c.alpha * kin.omega_m_sq;
  if (options.with_coriolis) a += -2.0 * kin.omega.cross(kin.v);
  return a;
}

Vec3 invert_velocity(const Vec3& a_meas, const Vec3& omega, double omega_m_sq,
                     const AeroCoefficients& c, const ModelOptions& options) {
  if (!(omega_m_sq > 0.0) || !std::isfinite(omega_m_sq)) {
    throw InvalidArgument("invert_velocity: mean-square rotor speed must be positive");
  }
  if (!a_meas.allFinite() || !omega.allFinite()) {
    throw InvalidArgument("invert_velocity: non-finite input");
  }
  const auto drag = axis_drag(c, omega_m_sq);
  Vec3 target = a_meas;
  target.z() -= 4.0 * c.alpha * omega_m_sq;

  Vec3 v;
  for (int i = 0; i < 3; ++i) v(i) = solve_axis(target(i), drag[i], options.drag, i);

  if (!options.with_coriolis || omega.squaredNorm() == 0.0) return v;

  // Newton on F(v) = drag(v) - 2 omega x v - target.
  const Mat3 coriolis_jac = -2.0 * geometry::hat(omega);
  const double scale = 1.0 + target.norm();
  for (int iter = 0; iter < 50; ++iter) {
    const Vec3 residual = drag_only(v, drag, options.drag) - 2.0 * omega.cross(v) - target;
    Mat3 jac = coriolis_jac;
    for (int i = 0; i < 3; ++i) {
      jac(i, i) -= drag[i].linear + drag[i].quadratic * square_term_derivative(v(i), options.drag);
    }
    const Vec3 step = jac.partialPivLu().solve(residual);
    if (!step.allFinite()) break;
    v -= step;
    if (step.norm() <= 1e-14 * (1.0 + v.norm()) && residual.norm() <= 1e-12 * scale) return v;
  }
  const Vec3 residual = drag_only(v, drag, options.drag) - 2.0 * omega.cross(v) - target;
  if (v.allFinite() && residual.norm() <= 1e-10 * scale) return v;
  throw NoRealRoot("invert_velocity: rotating-frame iteration did not converge");
}

FitResult fit_coefficients(std::span<const AeroSample> samples, const ModelOptions& options) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  if (n < 9) throw InvalidArgument("fit_coefficients: at least 9 samples required");

  // Unknown order matches AeroCoefficients::to_array.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3 * n, 9);
  Eigen::VectorXd y(3 * n);
  for (Eigen::Index s = 0; s < n; ++s) {
    const auto& sample = samples[static_cast<std::size_t>(s)];
    const Vec3& v = sample.kin.v;
    const double w2 = sample.kin.omega_m_sq;
    Vec3 rhs = sample.accel;
    if (options.with_coriolis) rhs -= -2.0 * sample.kin.omega.cross(v);

    const Eigen::Index rx = 3 * s, ry = 3 * s + 1, rz = 3 * s + 2;
    a(rx, 0) = -v.x();
    a(rx, 1) = -square_term(v.x(), options.drag);
    a(rx, 6) = -w2 * v.x();
    a(ry, 2) = -v.y();
    a(ry, 3) = -square_term(v.y(), options.drag);
    a(ry, 7) = -w2 * v.y();
    a(rz, 4) = -v.z();
    a(rz, 5) = -square_term(v.z(), options.drag);
    a(rz, 8) = 4.0 * w2;
    y.segment<3>(rx) = rhs;
  }

  Eigen::VectorXd col_scale = a.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < 9; ++j) {
    if (!(col_scale(j) > 0.0) || !std::isfinite(col_scale(j))) {
      throw RankDeficient(std::string("fit_coefficients: no excitation for ") +
                          AeroCoefficients::names()[static_cast<std::size_t>(j)] +
                          " (condition number infinite)");
    }
  }
  const Eigen::MatrixXd scaled = a * col_scale.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1)
                                              : std::numeric_limits<double>::infinity();
  if (!(cond <= kMaxConditionNumber)) {
    throw RankDeficient("fit_coefficients: design matrix condition number " +
                        std::to_string(cond) + " exceeds 1e10 (insufficient excitation)");
  }
  const Eigen::VectorXd x = svd.solve(y).cwiseQuotient(col_scale);

  std::array<double, 9> values{};
  for (std::size_t j = 0; j < 9; ++j) values[j] = x(static_cast<Eigen::Index>(j));

  FitResult result;
  result.coefficients = AeroCoefficients::from_array(values);
  result.condition_number = cond;
  result.samples = samples.size();
  const Eigen::VectorXd r = a * x - y;
  for (Eigen::Index s = 0; s < n; ++s) {
    result.rms_residual += r.segment<3>(3 * s).cwiseAbs2();
  }
  result.rms_residual = (result.rms_residual / static_cast<double>(n)).cwiseSqrt();
  return result;
}

}  // namespace aiio::aero
