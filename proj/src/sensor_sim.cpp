#include "aiio/sensor_sim.hpp"

#include "aiio/geometry.hpp"
#include "aiio/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace aiio::sim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string format_double(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

struct Sinusoid {
  double amplitude = 0.0;
  double omega = 0.0;  // [rad/s]
  double phase = 0.0;
};

struct FlatOutput {
  Vec3 p, v, a;
  double yaw = 0.0;
};

// Seeded parameters of the random_smooth kind.
struct RandomSmooth {
  std::array<std::array<Sinusoid, 5>, 3> axes;
  Sinusoid yaw;
};

RandomSmooth make_random_smooth(const TrajectorySpec& spec) {
  Rng rng(spec.seed * 0x9E3779B97F4A7C15ULL + 17);
  RandomSmooth r;
  for (int axis = 0; axis < 3; ++axis) {
    // Velocity amplitudes sum to at most max_speed (half of it vertically).
    const double scale = (axis == 2 ? 0.5 : 1.0) * spec.max_speed / 5.0;
    for (auto& s : r.axes[static_cast<std::size_t>(axis)]) {
      const double period = rng.uniform(2.0, 20.0);
      s.omega = kTwoPi / period;
      s.amplitude = rng.uniform(0.3, 1.0) * scale / s.omega;
      s.phase = rng.uniform(0.0, kTwoPi);
    }
  }
  r.yaw.amplitude = rng.uniform(0.5, 1.0) * std::min(spec.max_yaw, std::numbers::pi / 4.0);
  r.yaw.omega = kTwoPi / rng.uniform(8.0, 20.0);
  r.yaw.phase = rng.uniform(0.0, kTwoPi);
  return r;
}

double sin_value(const Sinusoid& s, double t) { return s.amplitude * std::sin(s.omega * t + s.phase); }
double sin_rate(const Sinusoid& s, double t) { return s.amplitude * s.omega * std::cos(s.omega * t + s.phase); }
double sin_accel(const Sinusoid& s, double t) {
  return -s.amplitude * s.omega * s.omega * std::sin(s.omega * t + s.phase);
}

FlatOutput evaluate(const TrajectorySpec& spec, const RandomSmooth& rs, double t) {
  FlatOutput out;
  out.p = Vec3(0.0, 0.0, spec.height);
  out.v = Vec3::Zero();
  out.a = Vec3::Zero();
  const double w = kTwoPi / spec.period;
  const double r = spec.radius;

  const bool circle = spec.kind == TrajectoryKind::circle || spec.kind == TrajectoryKind::updown_circle;
  const bool eight = spec.kind == TrajectoryKind::figure_eight || spec.kind == TrajectoryKind::updown_eight;
  if (circle) {
    out.p.head<2>() << r * std::cos(w * t), r * std::sin(w * t);
    out.v.head<2>() << -r * w * std::sin(w * t), r * w * std::cos(w * t);
    out.a.head<2>() << -r * w * w * std::cos(w * t), -r * w * w * std::sin(w * t);
  } else if (eight) {
    // x = r sin(wt), y = (r/2) sin(2wt)
    out.p.head<2>() << r * std::sin(w * t), 0.5 * r * std::sin(2.0 * w * t);
    out.v.head<2>() << r * w * std::cos(w * t), r * w * std::cos(2.0 * w * t);
    out.a.head<2>() << -r * w * w * std::sin(w * t), -2.0 * r * w * w * std::sin(2.0 * w * t);
  } else if (spec.kind == TrajectoryKind::random_smooth) {
    for (int axis = 0; axis < 3; ++axis) {
      for (const auto& s : rs.axes[static_cast<std::size_t>(axis)]) {
        out.p(axis) += sin_value(s, t);
        out.v(axis) += sin_rate(s, t);
        out.a(axis) += sin_accel(s, t);
      }
    }
    out.yaw = sin_value(rs.yaw, t);
  }
  if (spec.kind == TrajectoryKind::updown_circle || spec.kind == TrajectoryKind::updown_eight) {
    const Sinusoid vz{spec.vertical_amplitude, kTwoPi / spec.vertical_period, 0.0};
    out.p.z() += sin_value(vz, t);
    out.v.z() += sin_rate(vz, t);
    out.a.z() += sin_accel(vz, t);
  }
  return out;
}

Mat3 attitude_from_thrust_axis(const Vec3& thrust_dir, double yaw) {
  const Vec3 z_b = thrust_dir.normalized();
  const Vec3 x_c(std::cos(yaw), std::sin(yaw), 0.0);
  const Vec3 y_b = z_b.cross(x_c).normalized();
  const Vec3 x_b = y_b.cross(z_b);
  Mat3 r;
  r.col(0) = x_b;
  r.col(1) = y_b;
  r.col(2) = z_b;
  return r;
}

void check_thrust_direction(const Vec3& u, double t) {
  if (!(u.z() > 0.0)) {
    throw ThrustInfeasible("required thrust points below the horizon at t=" + format_double(t));
  }
}

// Roll/pitch such that R^T (a - g) = drag(R^T v) + T e_z.
Mat3 drag_aware_attitude(const FlatOutput& f, const aero::AeroCoefficients& c, double t) {
  const Vec3 specific_force = f.a - kGravity;
  check_thrust_direction(specific_force, t);
  Mat3 r = attitude_from_thrust_axis(specific_force, f.yaw);
  const aero::ModelOptions no_coriolis{false, aero::DragForm::signed_square};
  for (int iter = 0; iter < 200; ++iter) {
    // Thrust magnitude from the current attitude fixes the induced-drag gain.
    const Vec3 v_b = r.transpose() * f.v;
    aero::BodyKinematics kin{v_b, Vec3::Zero(), 0.0};
    const Vec3 f_b = r.transpose() * specific_force;
    const double drag_z = -c.k5 * v_b.z() - c.k6 * v_b.z() * std::abs(v_b.z());
    kin.omega_m_sq = std::max(0.0, (f_b.z() - drag_z) / (4.0 * c.alpha));
    Vec3 drag = aero::predict_specific_force(kin, c, no_coriolis);
    drag.z() -= 4.0 * c.alpha * kin.omega_m_sq;

    const Vec3 u = specific_force - r * drag;
    check_thrust_direction(u, t);
    const Mat3 next = attitude_from_thrust_axis(u, f.yaw);
    const double change = (next - r).norm();
    r = next;
    if (change < 1e-15) break;
  }
  return r;
}

std::vector<GroundTruthState> build(const TrajectorySpec& spec,
                                    const aero::AeroCoefficients* drag_aware) {
  spec.validate();
  if (drag_aware) drag_aware->validate();
  const RandomSmooth rs = make_random_smooth(spec);
  const std::size_t n = spec.sample_count();
  const double dt = 1.0 / spec.sample_rate;

  std::vector<FlatOutput> flat(n + 1);
  std::vector<Mat3> attitude(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * dt;
    flat[k] = evaluate(spec, rs, t);
    attitude[k] = drag_aware ? drag_aware_attitude(flat[k], *drag_aware, t)
                             : [&] {
                                 const Vec3 u = flat[k].a - kGravity;
                                 check_thrust_direction(u, t);
                                 return attitude_from_thrust_axis(u, flat[k].yaw);
                               }();
  }

  std::vector<GroundTruthState> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    auto& s = out[k];
    s.t = static_cast<double>(k) * dt;
    s.R = attitude[k];
    s.p = flat[k].p;
    s.v = flat[k].v;
    s.a_world = flat[k].a;
    s.omega_body = geometry::log_map(attitude[k].transpose() * attitude[k + 1]) / dt;
  }
  return out;
}

}  // namespace

std::string to_string(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::hover: return "hover";
    case TrajectoryKind::circle: return "circle";
    case TrajectoryKind::figure_eight: return "figure_eight";
    case TrajectoryKind::updown_circle: return "updown_circle";
    case TrajectoryKind::updown_eight: return "updown_eight";
    case TrajectoryKind::random_smooth: return "random_smooth";
  }
  return "unknown";
}

TrajectoryKind trajectory_kind_from_string(const std::string& name) {
  for (auto kind : {TrajectoryKind::hover, TrajectoryKind::circle, TrajectoryKind::figure_eight,
                    TrajectoryKind::updown_circle, TrajectoryKind::updown_eight,
                    TrajectoryKind::random_smooth}) {
    if (to_string(kind) == name) return kind;
  }
  throw InvalidArgument("unknown trajectory kind '" + name + "'");
}

void TrajectorySpec::validate() const {
  if (!(duration > 0.0)) throw InvalidArgument("trajectory duration must be positive");
  if (!(sample_rate > 0.0)) throw InvalidArgument("trajectory sample_rate must be positive");
  if (sample_rate < 50.0) {
    throw InvalidArgument("trajectory sample_rate below 50 Hz makes attitude differencing inaccurate");
  }
  if (!(period > 0.0) || !(vertical_period > 0.0)) {
    throw InvalidArgument("trajectory periods must be positive");
  }
  if (radius < 0.0 || max_speed < 0.0 || max_yaw < 0.0) {
    throw InvalidArgument("trajectory amplitudes must be non-negative");
  }
}

std::size_t TrajectorySpec::sample_count() const {
  return static_cast<std::size_t>(std::llround(duration * sample_rate));
}

std::vector<GroundTruthState> generate_trajectory(const TrajectorySpec& spec) {
  return build(spec, nullptr);
}

std::vector<GroundTruthState> generate_trajectory(const TrajectorySpec& spec,
                                                  const aero::AeroCoefficients& drag_aware) {
  return build(spec, &drag_aware);
}

void NoiseConfig::validate() const {
  for (double s : {sigma_g, sigma_a, sigma_bg, sigma_ba}) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw InvalidArgument("noise sigmas must be non-negative");
  }
  if (!initial_bias_g.allFinite() || !initial_bias_a.allFinite()) {
    throw InvalidArgument("initial biases must be finite");
  }
}

void SequenceLog::validate() const {
  for (std::size_t k = 1; k < frames.size(); ++k) {
    if (!(frames[k].t > frames[k - 1].t)) {
      throw MonotonicityViolation("frame timestamps not strictly increasing at index " +
                                  std::to_string(k));
    }
  }
  for (const auto& f : frames) {
    for (double w : f.rotor) {
      if (w < 0.0) throw InvalidArgument("negative rotor speed at t=" + format_double(f.t));
    }
  }
  if (!truth.empty()) {
    if (truth.size() != frames.size()) {
      throw InvalidArgument("truth and frames must share the timeline");
    }
    for (std::size_t k = 0; k < truth.size(); ++k) {
      if (truth[k].t != frames[k].t) {
        throw InvalidArgument("truth timestamp differs from frame timestamp at index " +
                              std::to_string(k));
      }
    }
  }
}

SequenceLog synthesize_sensors(const std::vector<GroundTruthState>& truth,
                               const aero::AeroCoefficients& c, const NoiseConfig& noise,
                               const SynthesisOptions& options, SynthesisTrace* trace) {
  if (truth.empty()) throw InvalidArgument("synthesize_sensors: empty trajectory");
  c.validate();
  noise.validate();

  Rng rotor_rng(noise.seed * 0xD1B54A32D192ED03ULL + 1);
  Rng white_rng(noise.seed * 0xD1B54A32D192ED03ULL + 2);
  Rng walk_rng(noise.seed * 0xD1B54A32D192ED03ULL + 3);

  SequenceLog log;
  log.truth = truth;
  log.frames.reserve(truth.size());
  if (trace) *trace = {};

  Vec3 bias_a = noise.initial_bias_a;
  Vec3 bias_g = noise.initial_bias_g;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const auto& s = truth[k];
    const Vec3 v_b = s.body_velocity();
    const Vec3 kinematic = s.R.transpose() * (s.a_world - kGravity);

    const double drag_z = options.model.drag == aero::DragForm::signed_square
                              ? -c.k5 * v_b.z() - c.k6 * v_b.z() * std::abs(v_b.z())
                              : -c.k5 * v_b.z() - c.k6 * v_b.z() * v_b.z();
    const double omega_m_sq = (kinematic.z() - drag_z) / (4.0 * c.alpha);
    if (omega_m_sq < 0.0) {
      throw ThrustInfeasible("required mean-square rotor speed is negative at t=" +
                             format_double(s.t));
    }

    Vec3 clean;
    if (options.mode == SensorMode::model_consistent) {
      clean = aero::predict_specific_force({v_b, s.omega_body, omega_m_sq}, c, options.model);
    } else {
      clean = kinematic;
    }

    SensorFrame f;
    f.t = s.t;
    const double omega_m = std::sqrt(omega_m_sq);
    std::array<double, 4> jitter{};
    double mean_sq = 0.0;
    for (auto& j : jitter) {
      j = 1.0 + rotor_rng.uniform(-options.rotor_spread, options.rotor_spread);
      mean_sq += j * j / 4.0;
    }
    const double norm = std::sqrt(mean_sq);
    for (std::size_t i = 0; i < 4; ++i) f.rotor[i] = omega_m * jitter[i] / norm;

    Vec3 n_a, n_g;
    for (int i = 0; i < 3; ++i) n_a(i) = white_rng.normal() * noise.sigma_a;
    for (int i = 0; i < 3; ++i) n_g(i) = white_rng.normal() * noise.sigma_g;
    f.accel = clean + bias_a + n_a;
    f.gyro = s.omega_body + bias_g + n_g;
    log.frames.push_back(f);

    if (trace) {
      trace->clean_accel.push_back(clean);
      trace->bias_a.push_back(bias_a);
      trace->bias_g.push_back(bias_g);
      trace->omega_m_sq.push_back(omega_m_sq);
    }

    if (k + 1 < truth.size()) {
      const double sqrt_dt = std::sqrt(truth[k + 1].t - s.t);
      for (int i = 0; i < 3; ++i) bias_a(i) += noise.sigma_ba * sqrt_dt * walk_rng.normal();
      for (int i = 0; i < 3; ++i) bias_g(i) += noise.sigma_bg * sqrt_dt * walk_rng.normal();
    }
  }

  auto& md = log.metadata;
  md["unit"] = "rad/s";
  const auto values = c.to_array();
  for (std::size_t i = 0; i < values.size(); ++i) {
    md[std::string("aero.") + aero::AeroCoefficients::names()[i]] = format_double(values[i]);
  }
  md["noise.sigma_g"] = format_double(noise.sigma_g);
  md["noise.sigma_a"] = format_double(noise.sigma_a);
  md["noise.sigma_bg"] = format_double(noise.sigma_bg);
  md["noise.sigma_ba"] = format_double(noise.sigma_ba);
  md["noise.seed"] = std::to_string(noise.seed);
  md["sim.mode"] = options.mode == SensorMode::model_consistent ? "model_consistent" : "kinematic";
  md["sim.coriolis"] = options.model.with_coriolis ? "1" : "0";
  md["sim.drag"] = options.model.drag == aero::DragForm::signed_square ? "signed" : "literal";
  return log;
}

SequenceLog simulate(const TrajectorySpec& spec, const aero::AeroCoefficients& c,
                     const NoiseConfig& noise, const SynthesisOptions& options) {
  const auto truth = options.mode == SensorMode::model_consistent ? generate_trajectory(spec, c)
                                                                   : generate_trajectory(spec);
  SequenceLog log = synthesize_sensors(truth, c, noise, options);
  auto& md = log.metadata;
  md["trajectory.kind"] = to_string(spec.kind);
  md["trajectory.duration"] = format_double(spec.duration);
  md["trajectory.sample_rate"] = format_double(spec.sample_rate);
  md["trajectory.seed"] = std::to_string(spec.seed);
  return log;
}

}  // namespace aiio::sim
