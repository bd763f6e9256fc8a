// Acceptance checks, one line per criterion. Exit status is the number of
// failed criteria.

#include "aiio/aerodynamics.hpp"
#include "aiio/eskf.hpp"
#include "aiio/filter_runner.hpp"
#include "aiio/geometry.hpp"
#include "aiio/metrics.hpp"
#include "aiio/rng.hpp"
#include "aiio/sensor_sim.hpp"
#include "aiio/sequence_io.hpp"
#include "aiio/trainer.hpp"
#include "aiio/velocity_net.hpp"
#include "aiio/windows.hpp"
#include "gradcheck.hpp"

#include <Eigen/Eigenvalues>

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <array>
#include <numbers>
#include <string>
#include <vector>

using namespace aiio;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Vec3 random_vec(Rng& rng, double scale) { return Vec3(rng.normal(), rng.normal(), rng.normal()) * scale; }

aero::AeroCoefficients random_coefficients(Rng& rng) {
  const auto d = aero::AeroCoefficients::defaults();
  auto a = d.to_array();
  for (std::size_t i = 0; i < 8; ++i) a[i] *= rng.uniform(0.5, 1.5);
  a[8] *= rng.uniform(0.8, 1.2);
  return aero::AeroCoefficients::from_array(a);
}

double max_relative_error(const aero::AeroCoefficients& est, const aero::AeroCoefficients& truth) {
  const auto e = est.to_array();
  const auto t = truth.to_array();
  double worst = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) worst = std::max(worst, std::abs(e[i] - t[i]) / std::abs(t[i]));
  return worst;
}

std::vector<aero::AeroSample> samples_from(const sim::SequenceLog& seq) {
  std::vector<aero::AeroSample> out;
  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    const auto& f = seq.frames[k];
    out.push_back({f.accel, {seq.truth[k].body_velocity(), f.gyro, aero::mean_sq_rotor_speed(f.rotor)}});
  }
  return out;
}

// 1 ------------------------------------------------------------------------

Outcome aero_round_trip() {
  const auto t0 = Clock::now();
  Rng rng(1);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const auto c = random_coefficients(rng);
    const Vec3 v(rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-20, 20));
    const Vec3 w(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    const double wm2 = c.hover_omega_sq() * rng.uniform(0.5, 1.5);
    const aero::ModelOptions opt{.with_coriolis = (i % 2) == 1};
    const Vec3 a = aero::predict_specific_force({v, w, wm2}, c, opt);
    worst = std::max(worst, (aero::invert_velocity(a, w, wm2, c, opt) - v).cwiseAbs().maxCoeff());
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-9 && secs < 1.0, fmt("max axis error %.3g m/s (< 1e-9), %.3f s (< 1 s)", worst, secs)};
}

// 2 ------------------------------------------------------------------------

Outcome identification() {
  const auto t0 = Clock::now();
  const auto c = aero::AeroCoefficients::defaults();
  const aero::ModelOptions model{.with_coriolis = false};
  sim::TrajectorySpec spec;
  spec.kind = sim::TrajectoryKind::random_smooth;
  // An aggressive flight: the vertical quadratic term needs vertical speed.
  spec.duration = 60.0;
  spec.max_speed = 8.0;
  spec.seed = 5;
  const auto clean = sim::simulate(spec, c, sim::NoiseConfig::noiseless());
  const double noiseless = max_relative_error(aero::fit_coefficients(samples_from(clean), model).coefficients, c);

  const auto truth = sim::generate_trajectory(spec, c);
  std::array<double, 9> mean_err{};
  constexpr int kSeeds = 20;
  for (int s = 0; s < kSeeds; ++s) {
    sim::NoiseConfig n;
    n.sigma_a = 0.1;
    n.seed = 100 + static_cast<std::uint64_t>(s);
    const auto log = sim::synthesize_sensors(truth, c, n);
    const auto e = aero::fit_coefficients(samples_from(log), model).coefficients.to_array();
    const auto t = c.to_array();
    for (std::size_t i = 0; i < 9; ++i) mean_err[i] += std::abs(e[i] - t[i]) / t[i] / kSeeds;
  }
  const auto worst = std::max_element(mean_err.begin(), mean_err.end());
  const double noisy = *worst;
  const char* name = aero::AeroCoefficients::names()[static_cast<std::size_t>(worst - mean_err.begin())];
  const double secs = seconds_since(t0);
  return {noiseless < 1e-8 && noisy < 0.10 && secs < 10.0,
          fmt("noiseless max rel err %.3g (< 1e-8), sigma 0.1 worst mean rel err %.3g at %s (< 0.1), %.2f s (< 10 s)",
              noiseless, noisy, name, secs)};
}

// 3 ------------------------------------------------------------------------

Outcome linearization() {
  Rng rng(9);
  double lo = 1e300, hi = 0.0;
  for (int i = 0; i < 100; ++i) {
    eskf::NavState x;
    x.R = geometry::exp_map(random_vec(rng, 1.0));
    x.v = random_vec(rng, 2.0);
    x.p = random_vec(rng, 5.0);
    x.b_a = random_vec(rng, 0.1);
    x.b_g = random_vec(rng, 0.01);
    SensorFrame f, g;
    f.gyro = random_vec(rng, 0.5);
    f.accel = Vec3(0, 0, 9.81) + random_vec(rng, 2.0);
    g.gyro = random_vec(rng, 0.5);
    g.accel = Vec3(0, 0, 9.81) + random_vec(rng, 2.0);
    eskf::ErrorState dir;
    for (int k = 0; k < 15; ++k) dir[k] = rng.normal();
    dir.normalize();
    const double dt = 0.005;
    const auto j = eskf::error_jacobians(x, f, g, dt);
    const auto y = eskf::propagate_state(x, f, g, dt);
    auto residual = [&](double eps) {
      const auto yt = eskf::propagate_state(eskf::inject(x, dir * eps), f, g, dt);
      return (eskf::difference(yt, y) - j.A * dir * eps).norm();
    };
    const double ratio = residual(1e-3) / residual(1e-4);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }

  sim::TrajectorySpec spec;
  spec.kind = sim::TrajectoryKind::random_smooth;
  spec.duration = 50.1;  // just over 10,000 propagate/update cycles
  spec.seed = 2;
  sim::NoiseConfig n;
  n.sigma_a = 0.05;
  n.sigma_g = 1e-3;
  n.seed = 2;
  const auto log = sim::simulate(spec, aero::AeroCoefficients::defaults(), n);
  const auto noise = eskf::ProcessNoise::from_discrete(0.05, 1e-3, 1e-3, 1e-4, 0.005);
  eskf::NavState x{log.truth[0].R, log.truth[0].v, log.truth[0].p};
  eskf::Covariance P = eskf::FilterConfig{}.initial_covariance();
  double asym = 0.0, min_eig = 1e300;
  std::size_t cycles = 0;
  for (std::size_t k = 1; k < log.frames.size(); ++k, ++cycles) {
    const auto prop = eskf::propagate(x, P, log.frames[k - 1], log.frames[k], 0.005, noise);
    const Vec3 z = log.truth[k].body_velocity() + random_vec(rng, 0.05);
    const auto upd = eskf::try_update_velocity(prop.state, prop.P, z, Mat3::Identity() * 0.0025, 0.0);
    x = upd.state;
    P = upd.P;
    asym = std::max(asym, (P - P.transpose()).cwiseAbs().maxCoeff());
    min_eig = std::min(
        min_eig, Eigen::SelfAdjointEigenSolver<eskf::Covariance>(P, Eigen::EigenvaluesOnly).eigenvalues()(0));
  }
  const bool pass = lo >= 50.0 && hi <= 200.0 && cycles >= 10000 && asym < 1e-9 && min_eig >= -1e-10;
  return {pass, fmt("ratio range [%.1f, %.1f] (in [50, 200]); %zu cycles, max asym %.2g, min eig %.3g", lo, hi,
                    cycles, asym, min_eig)};
}

// 4 ------------------------------------------------------------------------

Outcome consistency() {
  sim::TrajectorySpec spec;
  spec.kind = sim::TrajectoryKind::random_smooth;
  spec.duration = 60.0;
  spec.seed = 3;
  const auto c = aero::AeroCoefficients::defaults();
  const auto truth = sim::generate_trajectory(spec, c);
  eskf::FilterConfig cfg;
  cfg.noise = eskf::ProcessNoise::from_discrete(0.05, 1e-3, 1e-3, 1e-4, 0.005);
  // Small initial uncertainty keeps the first updates in the linear regime.
  cfg.init_attitude_var = 1e-4;
  cfg.init_velocity_var = 1e-3;
  cfg.init_position_var = 1e-6;
  cfg.init_accel_bias_var = 1e-5;
  cfg.init_gyro_bias_var = 1e-6;
  const eskf::Covariance P0 = cfg.initial_covariance();
  constexpr int kRuns = 50;
  constexpr std::size_t kStride = 10;
  const std::size_t epochs = (truth.size() + kStride - 1) / kStride;
  std::vector<double> sum(epochs, 0.0);
  for (int r = 0; r < kRuns; ++r) {
    Rng rng(1000 + static_cast<std::uint64_t>(r));
    sim::NoiseConfig n;
    n.sigma_a = 0.05;
    n.sigma_g = 1e-3;
    n.sigma_ba = 1e-3;
    n.sigma_bg = 1e-4;
    n.initial_bias_a = random_vec(rng, std::sqrt(cfg.init_accel_bias_var));
    n.initial_bias_g = random_vec(rng, std::sqrt(cfg.init_gyro_bias_var));
    n.seed = 2000 + static_cast<std::uint64_t>(r);
    sim::SynthesisTrace trace;
    const auto log = sim::synthesize_sensors(truth, c, n, {}, &trace);
    const eskf::NavState xt{truth[0].R, truth[0].v, truth[0].p, trace.bias_a[0], trace.bias_g[0]};
    eskf::ErrorState e0;
    for (int i = 0; i < 15; ++i) e0[i] = rng.normal() * std::sqrt(P0(i, i));
    eskf::TruthVelocitySource src(truth, 0.05, 0.05, 3000 + static_cast<std::uint64_t>(r));
    const auto run = eskf::run_filter(log, &src, cfg, eskf::inject(xt, -e0), P0);
    for (std::size_t k = 0, j = 0; k < run.track.size(); k += kStride, ++j) {
      const eskf::NavState tk{truth[k].R, truth[k].v, truth[k].p, trace.bias_a[k], trace.bias_g[k]};
      const eskf::ErrorState e = eskf::difference(tk, run.track[k].x);
      sum[j] += e.dot(run.track[k].P.ldlt().solve(e));
    }
  }
  const boost::math::chi_squared dist(15.0 * kRuns);
  const double lo = boost::math::quantile(dist, 0.025) / kRuns;
  const double hi = boost::math::quantile(dist, 0.975) / kRuns;
  double mean = 0.0;
  std::size_t inside = 0;
  for (double s : sum) {
    const double anees = s / kRuns;
    mean += anees / static_cast<double>(epochs);
    inside += (anees >= lo && anees <= hi) ? 1 : 0;
  }
  return {mean >= lo && mean <= hi,
          fmt("ANEES %.2f in [%.2f, %.2f]; %.0f%% of %zu epochs inside the band", mean, lo, hi,
              100.0 * static_cast<double>(inside) / static_cast<double>(epochs), epochs)};
}

// 5 ------------------------------------------------------------------------

Outcome fusion_vs_dead_reckoning() {
  const auto t0 = Clock::now();
  sim::TrajectorySpec spec;
  spec.kind = sim::TrajectoryKind::random_smooth;
  spec.duration = 60.0;
  spec.seed = 3;
  sim::NoiseConfig n;
  n.sigma_a = 0.05;
  n.sigma_g = 1e-3;
  n.sigma_ba = 1e-3;
  n.sigma_bg = 1e-4;
  n.seed = 3;
  const auto c = aero::AeroCoefficients::defaults();
  const auto seq = sim::simulate(spec, c, n);
  eskf::FilterConfig cfg;
  cfg.noise = eskf::ProcessNoise::from_discrete(n.sigma_a, n.sigma_g, n.sigma_ba, n.sigma_bg, 0.005);
  const eskf::NavState x0{seq.truth[0].R, seq.truth[0].v, seq.truth[0].p};
  const auto gt = metrics::to_track(io::trajectory_from_truth(seq.truth));
  auto ate = [&](eskf::VelocitySource* src) {
    const auto run = eskf::run_filter(seq, src, cfg, x0, cfg.initial_covariance());
    return metrics::compute_metrics(metrics::to_track(io::trajectory_from_run(run)), gt).ate;
  };
  eskf::AeroVelocitySource::Options o;
  o.accel_sigma = n.sigma_a;
  o.model.with_coriolis = false;
  eskf::AeroVelocitySource aero_src(c, o);
  const double fused = ate(&aero_src);
  const double dead = ate(nullptr);
  const double secs = seconds_since(t0);
  return {fused <= 0.1 * dead && secs < 30.0,
          fmt("ATE aero %.3f m vs dead reckoning %.3f m, ratio %.3f (<= 0.1), %.2f s (< 30 s)", fused, dead,
              fused / dead, secs)};
}

// 6, 9 ---------------------------------------------------------------------

// Sequences for the rotor ablation. The thrust coefficient changes from one
// sequence to the next (payload), so the hover rotor speed is not a function
// of the accelerometer alone; vertical oscillation adds within-sequence
// variation on top.
sim::SequenceLog ablation_sequence(int index, double thrust_scale) {
  sim::TrajectorySpec s;
  s.kind = index % 2 ? sim::TrajectoryKind::updown_eight : sim::TrajectoryKind::updown_circle;
  s.duration = 30.0;
  s.sample_rate = 50.0;
  s.radius = 1.0 + 0.37 * (index % 5);
  s.period = 6.0 + 1.3 * (index % 4);
  s.vertical_period = 2.0 + 0.45 * (index % 3);
  s.vertical_amplitude = 0.3 * (s.vertical_period / 2.0) * (s.vertical_period / 2.0) * (0.8 + 0.1 * (index % 3));
  sim::NoiseConfig n;
  n.sigma_a = 0.05;
  n.sigma_g = 1e-3;
  n.seed = 7 + static_cast<std::uint64_t>(index);
  auto c = aero::AeroCoefficients::defaults();
  c.alpha /= thrust_scale;
  return sim::simulate(s, c, n);
}

struct AblationData {
  std::vector<sim::SequenceLog> train, test;
  double w2_lo = 1e300, w2_hi = 0.0;  // relative to the nominal hover value
};

AblationData ablation_data() {
  AblationData d;
  for (int i = 0; i < 14; ++i) d.train.push_back(ablation_sequence(i, 0.7 + 0.1 * (i % 7)));
  for (int i = 0; i < 2; ++i) d.test.push_back(ablation_sequence(1000 + i, 0.875 + 0.25 * i));
  const double hover = aero::AeroCoefficients::defaults().hover_omega_sq();
  for (const auto& q : d.train) {
    for (const auto& f : q.frames) {
      const double w2 = aero::mean_sq_rotor_speed(f.rotor) / hover;
      d.w2_lo = std::min(d.w2_lo, w2);
      d.w2_hi = std::max(d.w2_hi, w2);
    }
  }
  return d;
}

constexpr int kAblationWindow = 50;

std::vector<net::Sample> windows_of(const std::vector<sim::SequenceLog>& seqs, const net::WindowOptions& wo,
                                    const net::NetConfig& nc) {
  const auto norm = net::RotorNormalizer::from_coefficients(aero::AeroCoefficients::defaults());
  std::vector<net::Sample> out;
  for (const auto& q : seqs) {
    auto w = net::make_windows(q, wo, norm, nc);
    out.insert(out.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
  }
  return out;
}

net::TrainConfig ablation_training(std::uint64_t seed) {
  net::TrainConfig tc;
  tc.epochs = 40;
  tc.learning_rate = 3e-3;
  tc.patience = tc.epochs;  // the whole budget goes to the velocity loss
  tc.seed = seed;
  return tc;
}

// RMS body-velocity error over every target row of every sample.
double held_out_ave(const std::vector<net::Sample>& samples, const net::NetParams& p) {
  double se = 0.0;
  std::size_t n = 0;
  for (const auto& s : samples) {
    const auto pred = net::forward_rows(s.input, p, s.rows);
    for (std::size_t r = 0; r < s.rows.size(); ++r) {
      se += (pred[r].v_hat - s.targets[r]).squaredNorm();
      ++n;
    }
  }
  return std::sqrt(se / static_cast<double>(n));
}

struct AblationResult {
  Outcome outcome;
  net::NetParams online_model;  // 7-channel, first seed
  double online_ave = 0.0;
};

AblationResult rotor_ablation(const AblationData& d) {
  const auto t0 = Clock::now();
  net::WindowOptions train_wo;
  train_wo.length = kAblationWindow;
  train_wo.online_stride = 5;
  net::WindowOptions test_wo = train_wo;
  test_wo.online_stride = 1;

  AblationResult out;
  double sum7 = 0.0, sum6 = 0.0;
  std::string per_seed;
  for (std::uint64_t seed : {1, 2, 3}) {
    double ave[2] = {0.0, 0.0};
    for (bool rotor : {true, false}) {
      net::NetConfig nc;
      nc.window = kAblationWindow;
      nc.use_rotor = rotor;
      const auto train = windows_of(d.train, train_wo, nc);
      const auto test = windows_of(d.test, test_wo, nc);
      const auto res = net::train(train, ablation_training(seed), nc);
      ave[rotor ? 0 : 1] = held_out_ave(test, res.params);
      if (rotor && seed == 1) {
        out.online_model = res.params;
        out.online_ave = ave[0];
      }
    }
    sum7 += ave[0];
    sum6 += ave[1];
    per_seed += fmt(" %.3f/%.3f", ave[0], ave[1]);
  }
  const double reduction = 1.0 - sum7 / sum6;
  const double secs = seconds_since(t0);
  out.outcome = {reduction >= 0.20 && secs < 900.0,
                 fmt("held-out AVE 7ch %.3f vs 6ch %.3f m/s, %.1f%% lower (>= 20%%); per seed 7ch/6ch%s; "
                     "rotor w2 spans %.2f..%.2f of hover; %.0f s (< 900 s)",
                     sum7 / 3.0, sum6 / 3.0, 100.0 * reduction, per_seed.c_str(), d.w2_lo, d.w2_hi, secs)};
  return out;
}

Outcome windowing(const AblationData& d, double online_ave) {
  const int L = kAblationWindow;
  net::NetConfig nc;
  nc.window = L;
  const auto norm = net::RotorNormalizer::from_coefficients(aero::AeroCoefficients::defaults());
  bool exact = true;
  std::string counts;
  for (const auto& q : d.test) {
    const std::size_t n = q.frames.size();
    net::WindowOptions on;
    on.length = static_cast<std::size_t>(L);
    net::WindowOptions off = on;
    off.mode = net::WindowMode::offline;
    const auto a = net::make_windows(q, on, norm, nc);
    const auto b = net::make_windows(q, off, norm, nc);
    exact &= a.size() == n - static_cast<std::size_t>(L) + 1 && b.size() == n / static_cast<std::size_t>(L);
    counts += fmt(" N=%zu: %zu online, %zu offline;", n, a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::size_t end = i + static_cast<std::size_t>(L) - 1;
      exact &= a[i].end_frame == end && a[i].rows.size() == 1 && a[i].rows[0] == L - 1 &&
               a[i].targets[0] == q.truth[end].body_velocity();
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
      const std::size_t start = i * static_cast<std::size_t>(L);
      exact &= b[i].end_frame == start + static_cast<std::size_t>(L) - 1 &&
               b[i].rows.size() == static_cast<std::size_t>(L);
      for (int r = 0; r < L && exact; ++r) {
        exact &= b[i].rows[static_cast<std::size_t>(r)] == r &&
                 b[i].targets[static_cast<std::size_t>(r)] == q.truth[start + static_cast<std::size_t>(r)].body_velocity();
      }
    }
  }

  // Trend report only: offline-trained and evaluated vs online.
  net::WindowOptions off;
  off.mode = net::WindowMode::offline;
  off.length = static_cast<std::size_t>(L);
  const auto train = windows_of(d.train, off, nc);
  const auto res = net::train(train, ablation_training(1), nc);
  const double offline_ave = held_out_ave(windows_of(d.test, off, nc), res.params);
  return {exact, fmt("counts and targets %s;%s offline AVE %.3f vs online %.3f m/s (%s, not gated)",
                     exact ? "exact" : "WRONG", counts.c_str(), offline_ave, online_ave,
                     offline_ave <= online_ave ? "offline <= online" : "offline > online")};
}

// 7 ------------------------------------------------------------------------

Outcome gradients() {
  net::NetConfig nc;
  nc.window = 16;
  const auto p = net::NetParams::initialize(nc, 3);
  const auto s = gradcheck::random_sample(16, nc.input_channels(), 5);
  double worst = 0.0;
  std::string where;
  for (auto kind : {net::LossKind::huber, net::LossKind::nll}) {
    for (const auto& [name, err] : gradcheck::relative_errors(s, p, kind, 1.0)) {
      if (err > worst) worst = err, where = name;
    }
  }
  return {worst < 1e-5, fmt("max relative error %.3g (< 1e-5) at %s", worst, where.c_str())};
}

// 8 ------------------------------------------------------------------------

Outcome loss_values() {
  const double e = std::numbers::e;
  const double got[] = {
      net::huber_loss(Vec3(0.1, 0, 0), Vec3::Zero(), 1.0),
      net::huber_loss(Vec3(2, 0, 0), Vec3::Zero(), 1.0),
      net::huber_loss(Vec3(1, 0, 0), Vec3::Zero(), 1.0),
      net::nll_loss(Vec3(1, 0, 0), Vec3::Zero(), Vec3::Ones()),
      net::nll_loss(Vec3::Zero(), Vec3::Zero(), Vec3(e, e, e)),
  };
  const double want[] = {0.005, 1.5, 0.5, 1.0, 3.0};
  double worst = 0.0;
  for (int i = 0; i < 5; ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
  return {worst < 1e-12, fmt("huber %.15g %.15g %.15g, nll %.15g %.15g, max deviation %.3g (< 1e-12)", got[0],
                             got[1], got[2], got[3], got[4], worst)};
}

// 10 -----------------------------------------------------------------------

Outcome latency() {
  const net::NetConfig nc;
  const auto p = net::NetParams::initialize(nc, 1);
  Rng rng(2);
  net::WindowTensor w;
  w.data.resize(nc.window, nc.input_channels());
  for (Eigen::Index i = 0; i < w.data.size(); ++i) w.data.data()[i] = rng.normal();
  double sink = 0.0;
  for (int i = 0; i < 5; ++i) sink += net::forward(w, p).v_hat.x();
  std::vector<double> ms;
  for (int i = 0; i < 101; ++i) {
    const auto t0 = Clock::now();
    sink += net::forward(w, p).v_hat.x();
    ms.push_back(1e3 * seconds_since(t0));
  }
  std::nth_element(ms.begin(), ms.begin() + 50, ms.end());
  const double median = ms[50];
  return {median < 10.0 && std::isfinite(sink), fmt("median forward %.3f ms (< 10 ms), L = %d", median, nc.window)};
}

// 11 -----------------------------------------------------------------------

metrics::Track line_track(std::initializer_list<double> times) {
  metrics::Track t;
  for (double s : times) t.push_back({s, Vec3(s, 0, 0), Vec3(1, 0, 0)});
  return t;
}

Outcome metric_fixtures() {
  const auto t = line_track({0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  const auto zero = metrics::compute_metrics(t, t);
  const bool zero_ok = zero.ate == 0.0 && zero.rte == 0.0 && zero.ave == 0.0 && zero.rve == 0.0;

  auto shifted = t;
  for (auto& s : shifted) {
    s.p += Vec3(0.3, -0.4, 0.0);
    s.v += Vec3(0.0, 0.0, 2.0);
  }
  const auto off = metrics::compute_metrics(shifted, t);
  const bool offset_ok = std::abs(off.ate - 0.5) < 1e-15 && std::abs(off.ave - 2.0) < 1e-15 &&
                         std::abs(off.rte) < 1e-15 && std::abs(off.rve) < 1e-15;

  // Samples at 0, 5, 10 s; interval errors (1/3, 0, 0) and (0, 1, 0).
  const auto gt = line_track({0, 5, 10});
  auto est = gt;
  est[1].p += Vec3(1.0 / 3.0, 0, 0);
  est[2].p += Vec3(1.0 / 3.0, 1, 0);
  const auto toy = metrics::compute_metrics(est, gt);
  const bool toy_ok = toy.interval == 5.0 && toy.intervals == 2 && std::abs(toy.rte - 0.745356) < 1e-6;
  return {zero_ok && offset_ok && toy_ok,
          fmt("zero %s, offset ATE %.17g AVE %.17g, toy RTE %.7f over %zu x %.0f s intervals (0.745356)",
              zero_ok ? "exact" : "WRONG", off.ate, off.ave, toy.rte, toy.intervals, toy.interval)};
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int id, const char* title, const Outcome& o) {
    std::printf("criterion %2d %-32s %s  %s\n", id, title, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  };
  report(1, "aerodynamic round trip", aero_round_trip());
  report(2, "coefficient identification", identification());
  report(3, "filter linearization", linearization());
  report(4, "filter consistency (NEES)", consistency());
  report(5, "fusion vs dead reckoning", fusion_vs_dead_reckoning());
  const AblationData data = ablation_data();
  const AblationResult ablation = rotor_ablation(data);
  report(6, "rotor-speed ablation", ablation.outcome);
  report(7, "gradient check", gradients());
  report(8, "loss unit values", loss_values());
  report(9, "online/offline windowing", windowing(data, ablation.online_ave));
  report(10, "inference latency", latency());
  report(11, "metric fixtures", metric_fixtures());
  std::printf("%d of 11 criteria failed\n", failed);
  return failed;
}
