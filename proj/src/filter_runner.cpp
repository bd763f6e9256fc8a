#include "aiio/filter_runner.hpp"

#include "aiio/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace aiio::eskf {

TruthVelocitySource::TruthVelocitySource(std::vector<sim::GroundTruthState> truth,
                                         double noise_sigma, double reported_sigma,
                                         std::uint64_t seed)
    : truth_(std::move(truth)),
      noise_sigma_(noise_sigma),
      reported_var_(reported_sigma * reported_sigma),
      rng_(seed) {
  if (!(noise_sigma >= 0.0) || !(reported_sigma > 0.0)) {
    throw InvalidArgument("truth source: sigmas must be positive");
  }
}

std::optional<VelocityMeasurement> TruthVelocitySource::measure(std::size_t index) {
  if (index >= truth_.size()) return std::nullopt;
  VelocityMeasurement m;
  m.v = truth_[index].body_velocity();
  if (noise_sigma_ > 0.0) {
    for (int i = 0; i < 3; ++i) m.v[i] += noise_sigma_ * rng_.normal();
  }
  m.variance.setConstant(reported_var_);
  return m;
}

AeroVelocitySource::AeroVelocitySource(const aero::AeroCoefficients& c, const Options& options)
    : c_(c), options_(options) {
  c_.validate();
  if (options_.fit_frames < 2) throw InvalidArgument("aero source: need at least 2 fit frames");
  if (!(options_.accel_sigma >= 0.0) || !(options_.model_sigma >= 0.0)) {
    throw InvalidArgument("aero source: sigmas must be non-negative");
  }
}

void AeroVelocitySource::observe(std::size_t, const SensorFrame& frame) {
  Inverted inv{frame.t, Vec3::Zero(), Vec3::Zero(), false};
  try {
    const double wm2 = aero::mean_sq_rotor_speed(frame.rotor);
    inv.v = aero::invert_velocity(frame.accel, frame.gyro, wm2, c_, options_.model);
    const bool literal = options_.model.drag == aero::DragForm::literal_square;
    const auto quad = [&](double k, double v) { return 2.0 * k * (literal ? v : std::abs(v)); };
    inv.slope = Vec3(c_.lambda_x * wm2 + c_.k1 + quad(c_.k2, inv.v.x()),
                     c_.lambda_y * wm2 + c_.k3 + quad(c_.k4, inv.v.y()),
                     c_.k5 + quad(c_.k6, inv.v.z()));
    inv.ok = inv.v.allFinite();
  } catch (const Error&) {
    inv.ok = false;
  }
  recent_.push_back(inv);
  if (recent_.size() > options_.fit_frames) recent_.pop_front();
}

std::optional<VelocityMeasurement> AeroVelocitySource::measure(std::size_t) {
  std::vector<const Inverted*> good;
  for (const auto& r : recent_) {
    if (r.ok) good.push_back(&r);
  }
  if (good.size() < std::max<std::size_t>(2, recent_.size() / 2)) return std::nullopt;

  // Least-squares line per axis through (t, v), read at the newest frame.
  const double t_end = recent_.back().t;
  const double n = static_cast<double>(good.size());
  double t_mean = 0.0;
  Vec3 v_mean = Vec3::Zero();
  for (const auto* r : good) {
    t_mean += r->t;
    v_mean += r->v;
  }
  t_mean /= n;
  v_mean /= n;
  double stt = 0.0;
  Vec3 stv = Vec3::Zero();
  for (const auto* r : good) {
    stt += (r->t - t_mean) * (r->t - t_mean);
    stv += (r->t - t_mean) * (r->v - v_mean);
  }
  if (!(stt > 0.0)) return std::nullopt;

  VelocityMeasurement m;
  m.v = v_mean + stv / stt * (t_end - t_mean);
  const double leverage = 1.0 / n + (t_end - t_mean) * (t_end - t_mean) / stt;
  const Vec3 slope = good.back()->slope;
  for (int i = 0; i < 3; ++i) {
    const double per_frame = options_.accel_sigma / std::max(slope[i], 1e-6);
    m.variance[i] = per_frame * per_frame * leverage + options_.model_sigma * options_.model_sigma;
    if (!(m.variance[i] > 0.0)) m.variance[i] = 1e-12;
  }
  return m;
}

NetVelocitySource::NetVelocitySource(net::NetParams params, net::RotorNormalizer normalizer)
    : params_(std::move(params)),
      normalizer_(normalizer),
      window_(static_cast<std::size_t>(params_.config.window)) {
  params_.config.validate();
}

void NetVelocitySource::observe(std::size_t, const SensorFrame& frame) {
  window_.push(net::encode_frame(frame, normalizer_, params_.config));
}

std::optional<VelocityMeasurement> NetVelocitySource::measure(std::size_t) {
  if (!window_.full()) return std::nullopt;
  const net::VelocityPrediction pred = net::forward(window_.tensor(), params_);
  if (!pred.v_hat.allFinite() || !pred.sigma_hat.allFinite()) return std::nullopt;
  return VelocityMeasurement{pred.v_hat, pred.sigma_hat};
}

Covariance FilterConfig::initial_covariance() const {
  Covariance p = Covariance::Zero();
  p.diagonal().segment<3>(kTheta).setConstant(init_attitude_var);
  p.diagonal().segment<3>(kVel).setConstant(init_velocity_var);
  p.diagonal().segment<3>(kPos).setConstant(init_position_var);
  p.diagonal().segment<3>(kAccBias).setConstant(init_accel_bias_var);
  p.diagonal().segment<3>(kGyroBias).setConstant(init_gyro_bias_var);
  return p;
}

void FilterConfig::validate() const {
  if (!(update_rate >= 0.0)) throw InvalidArgument("update rate must be non-negative");
  if (window == 0) throw InvalidArgument("window must be positive");
  noise.validate();
  for (double v : {init_attitude_var, init_velocity_var, init_position_var, init_accel_bias_var,
                   init_gyro_bias_var}) {
    if (!(v >= 0.0)) throw InvalidArgument("initial variances must be non-negative");
  }
}

NavState initial_state(const SensorFrame& first) {
  NavState x;
  x.R = geometry::level_from_accel(first.accel);
  return x;
}

FilterRun run_filter(const sim::SequenceLog& seq, VelocitySource* source,
                     const FilterConfig& cfg) {
  if (seq.frames.empty()) throw InvalidArgument("run_filter: empty sequence");
  return run_filter(seq, source, cfg, initial_state(seq.frames.front()), cfg.initial_covariance());
}

FilterRun run_filter(const sim::SequenceLog& seq, VelocitySource* source, const FilterConfig& cfg,
                     const NavState& x0, const Covariance& P0) {
  cfg.validate();
  seq.validate();
  const auto& frames = seq.frames;
  const std::size_t n = frames.size();
  if (n == 0) throw InvalidArgument("run_filter: empty sequence");

  std::size_t stride = 0;
  if (cfg.update_rate > 0.0 && n > 1) {
    const double rate = static_cast<double>(n - 1) / (frames.back().t - frames.front().t);
    stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(rate / cfg.update_rate)));
  }

  constexpr double kMaxStep = 0.05;
  constexpr std::size_t kMaxMessages = 20;

  FilterRun run;
  run.track.reserve(n);
  NavState x = x0;
  Covariance P = P0;

  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0) {
      const double dt = frames[k].t - frames[k - 1].t;
      const int pieces = static_cast<int>(std::ceil(dt / kMaxStep));
      const double h = dt / pieces;
      // Gyro held at the earlier frame, accelerometer interpolated linearly.
      auto at = [&](int s) {
        SensorFrame f = frames[k - 1];
        const double u = static_cast<double>(s) / pieces;
        f.accel = (1.0 - u) * frames[k - 1].accel + u * frames[k].accel;
        return f;
      };
      for (int s = 0; s < pieces; ++s) {
        const Propagated next = propagate(x, P, at(s), at(s + 1), h, cfg.noise);
        x = next.state;
        P = next.P;
      }
    }
    if (source != nullptr) source->observe(k, frames[k]);

    const bool due = stride > 0 && k + 1 >= cfg.window && (k + 1 - cfg.window) % stride == 0;
    if (due && source != nullptr) {
      std::optional<VelocityMeasurement> m;
      std::string reason = "no measurement";
      try {
        m = source->measure(k);
      } catch (const Error& e) {
        reason = e.what();
      }
      if (m && m->v.allFinite() && (m->variance.array() > 0.0).all() && m->variance.allFinite()) {
        const UpdateResult u = try_update_velocity(x, P, m->v, m->variance.asDiagonal(), cfg.gate);
        if (u.accepted) {
          x = u.state;
          P = u.P;
          ++run.stats.applied;
        } else {
          ++run.stats.rejected;
        }
      } else {
        ++run.stats.skipped;
        if (run.stats.messages.size() < kMaxMessages) {
          run.stats.messages.push_back("t=" + std::to_string(frames[k].t) + ": " + reason);
        }
      }
    }

    TrackPoint tp;
    tp.t = frames[k].t;
    tp.x = x;
    if (cfg.keep_covariance) {
      tp.P = P;
    } else {
      tp.P.setZero();
    }
    run.track.push_back(tp);
  }
  return run;
}

}  // namespace aiio::eskf
