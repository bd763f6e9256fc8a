#include "aiio/eskf.hpp"
#include "aiio/filter_runner.hpp"
#include "aiio/geometry.hpp"
#include "aiio/metrics.hpp"
#include "aiio/sequence_io.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>

using namespace aiio;
using namespace aiio::eskf;

namespace {

Vec3 random_vec(Rng& rng, double scale) { return Vec3(rng.normal(), rng.normal(), rng.normal()) * scale; }

NavState random_state(Rng& rng) {
  NavState x;
  x.R = geometry::exp_map(random_vec(rng, 1.0));
  x.v = random_vec(rng, 2.0);
  x.p = random_vec(rng, 5.0);
  x.b_a = random_vec(rng, 0.1);
  x.b_g = random_vec(rng, 0.01);
  return x;
}

SensorFrame random_imu(Rng& rng) {
  SensorFrame f;
  f.gyro = random_vec(rng, 0.5);
  f.accel = Vec3(0, 0, 9.81) + random_vec(rng, 2.0);
  return f;
}

Covariance random_covariance(Rng& rng) {
  Eigen::Matrix<double, 15, 15> m;
  for (int i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m * m.transpose() * 1e-2 + Covariance::Identity() * 1e-6;
}

oracle::Nav to_oracle(const NavState& x) { return {x.R, x.v, x.p, x.b_a, x.b_g}; }

double min_eigenvalue(const Covariance& P) {
  return Eigen::SelfAdjointEigenSolver<Covariance>(P, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

ProcessNoise some_noise() { return ProcessNoise::from_discrete(0.05, 1e-3, 1e-3, 1e-4, 0.005); }

sim::SequenceLog stationary(std::size_t n) {
  sim::SequenceLog log;
  for (std::size_t k = 0; k < n; ++k) {
    SensorFrame f;
    f.t = 0.005 * static_cast<double>(k);
    f.accel = Vec3(0, 0, 9.81);
    f.rotor = {1500, 1500, 1500, 1500};
    log.frames.push_back(f);
  }
  return log;
}

}  // namespace

TEST(ProcessNoise, FromDiscrete) {
  const auto w = ProcessNoise::from_discrete(0.1, 0.01, 0.2, 0.02, 0.005);
  EXPECT_DOUBLE_EQ(w.accel, 0.01 * 0.005);
  EXPECT_DOUBLE_EQ(w.gyro, 1e-4 * 0.005);
  EXPECT_DOUBLE_EQ(w.accel_bias, 0.04);
  EXPECT_DOUBLE_EQ(w.gyro_bias, 4e-4);
  ProcessNoise bad;
  bad.gyro = -1.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(Propagate, HoverLeavesStateUnchanged) {
  NavState x;
  x.p = Vec3(1, 2, 3);
  SensorFrame hover;
  hover.accel = Vec3(0, 0, 9.81);
  Covariance P = Covariance::Identity() * 1e-3;
  for (int i = 0; i < 1000; ++i) {
    const double before = P.trace();
    const auto out = propagate(x, P, hover, 0.005, some_noise());
    EXPECT_GT(out.P.trace(), before);
    x = out.state;
    P = out.P;
  }
  EXPECT_EQ(x.R, Mat3::Identity());
  EXPECT_EQ(x.v, Vec3::Zero());
  EXPECT_EQ(x.p, Vec3(1, 2, 3));
}

TEST(Propagate, MatchesIndependentIntegrator) {
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    const NavState x = random_state(rng);
    const SensorFrame f = random_imu(rng);
    const double dt = rng.uniform(0.001, 0.05);
    const auto y = propagate_state(x, f, dt);
    const auto o = oracle::integrate(to_oracle(x), f.gyro, f.accel, dt);
    EXPECT_LT((y.R - o.R).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((y.v - o.v).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((y.p - o.p).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(y.b_a, x.b_a);
    EXPECT_EQ(y.b_g, x.b_g);

    const SensorFrame g = random_imu(rng);
    const auto y2 = propagate_state(x, f, g, dt);
    const auto o2 = oracle::integrate_linear(to_oracle(x), f.gyro, f.accel, g.accel, dt);
    EXPECT_LT((y2.v - o2.v).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((y2.p - o2.p).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Propagate, RejectsBadInput) {
  SensorFrame f;
  const Covariance P = Covariance::Identity();
  EXPECT_THROW(propagate(NavState{}, P, f, 0.0, some_noise()), InvalidArgument);
  EXPECT_THROW(propagate(NavState{}, P, f, 0.06, some_noise()), InvalidArgument);
  f.gyro.x() = std::nan("");
  EXPECT_THROW(propagate(NavState{}, P, f, 0.005, some_noise()), InvalidArgument);
}

TEST(Propagate, LinearizationResidualIsSecondOrder) {
  Rng rng(9);
  for (int i = 0; i < 100; ++i) {
    const NavState x = random_state(rng);
    const SensorFrame f = random_imu(rng);
    const SensorFrame g = random_imu(rng);
    ErrorState dir;
    for (int k = 0; k < 15; ++k) dir[k] = rng.normal();
    dir.normalize();
    for (bool two_sample : {false, true}) {
      const double dt = 0.005;
      const Jacobians j = two_sample ? error_jacobians(x, f, g, dt) : error_jacobians(x, f, dt);
      auto residual = [&](double eps) {
        const NavState xt = inject(x, dir * eps);
        const NavState yt = two_sample ? propagate_state(xt, f, g, dt) : propagate_state(xt, f, dt);
        const NavState y = two_sample ? propagate_state(x, f, g, dt) : propagate_state(x, f, dt);
        return (difference(yt, y) - j.A * dir * eps).norm();
      };
      const double ratio = residual(1e-3) / residual(1e-4);
      EXPECT_GE(ratio, 50.0) << i;
      EXPECT_LE(ratio, 200.0) << i;
    }
  }
}

TEST(Update, ZeroInnovation) {
  Rng rng(3);
  const NavState x = random_state(rng);
  const Covariance P = random_covariance(rng);
  const auto out = update_velocity(x, P, x.R.transpose() * x.v, Mat3::Identity() * 0.01);
  EXPECT_LT((out.state.v - x.v).norm(), 1e-15);
  EXPECT_LT((out.state.p - x.p).norm(), 1e-15);
  EXPECT_LT((out.state.R - x.R).norm(), 1e-15);
  EXPECT_LT(out.P.trace(), P.trace());
}

TEST(Update, LargeSigmaGivesNoCorrection) {
  Rng rng(4);
  const NavState x = random_state(rng);
  const Covariance P = random_covariance(rng);
  const Vec3 z = x.R.transpose() * x.v + Vec3(0.2, -0.1, 0.05);
  auto change = [&](double scale) {
    const auto out = update_velocity(x, P, z, Mat3::Identity() * scale, 0.0);
    return difference(out.state, x).norm();
  };
  EXPECT_LT(change(1e9), 1e-6 * change(1.0));
}

TEST(Update, ScalarKalmanOracle) {
  NavState x;
  x.v = Vec3(1.5, 0, 0);
  Covariance P = Covariance::Zero();
  const double p = 0.4, r = 0.1;
  P(kVel, kVel) = p;
  const double z = 1.9;
  const auto out = update_velocity(x, P, Vec3(z, 0, 0), Mat3::Identity() * r);
  // Scalar filter by hand.
  const double k = p / (p + r);
  EXPECT_NEAR(out.state.v.x(), 1.5 + k * (z - 1.5), 1e-12);
  EXPECT_NEAR(out.P(kVel, kVel), (1 - k) * p * (1 - k) + k * r * k, 1e-12);
  EXPECT_NEAR(out.P(kVel, kVel), p * r / (p + r), 1e-12);
  EXPECT_NEAR(out.P.norm(), out.P(kVel, kVel), 1e-12);
}

TEST(Update, JosephTraceNeverIncreases) {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const NavState x = random_state(rng);
    const Covariance P = random_covariance(rng);
    const Vec3 sigma(rng.uniform(1e-4, 1.0), rng.uniform(1e-4, 1.0), rng.uniform(1e-4, 1.0));
    const auto out = try_update_velocity(x, P, x.R.transpose() * x.v + random_vec(rng, 0.01),
                                         sigma.asDiagonal(), 0.0);
    EXPECT_LE(out.P.trace(), P.trace());
    EXPECT_GE(min_eigenvalue(out.P), -1e-10);
  }
}

TEST(Update, GateRejects) {
  NavState x;
  const Covariance P = Covariance::Identity() * 1e-4;
  const Vec3 z(5, 0, 0);
  EXPECT_THROW(update_velocity(x, P, z, Mat3::Identity() * 1e-2), InnovationGateRejected);
  const auto soft = try_update_velocity(x, P, z, Mat3::Identity() * 1e-2);
  EXPECT_FALSE(soft.accepted);
  EXPECT_GT(soft.nis, kDefaultGate);
  EXPECT_EQ(soft.state.v, x.v);
  EXPECT_EQ(soft.P, P);
  EXPECT_TRUE(try_update_velocity(x, P, z, Mat3::Identity() * 1e-2, 0.0).accepted);
}

TEST(Update, RejectsBadSigma) {
  Mat3 s = Mat3::Identity();
  s(0, 1) = 0.1;
  EXPECT_THROW(update_velocity(NavState{}, Covariance::Identity(), Vec3::Zero(), s), InvalidArgument);
  EXPECT_THROW(update_velocity(NavState{}, Covariance::Identity(), Vec3::Zero(), Mat3::Zero()),
               InvalidArgument);
}

TEST(Inject, DifferenceIsItsInverse) {
  Rng rng(6);
  for (int i = 0; i < 50; ++i) {
    const NavState x = random_state(rng);
    ErrorState d;
    for (int k = 0; k < 15; ++k) d[k] = rng.normal() * 0.1;
    EXPECT_LT((difference(inject(x, d), x) - d).norm(), 1e-12);
  }
}

TEST(Covariance, StaysSymmetricPsdOverManyCycles) {
  sim::TrajectorySpec spec;
  spec.kind = sim::TrajectoryKind::random_smooth;
  spec.duration = 50.0;
  spec.seed = 2;
  const auto c = aero::AeroCoefficients::defaults();
  sim::NoiseConfig n;
  n.sigma_a = 0.05;
  n.sigma_g = 1e-3;
  n.seed = 2;
  const auto log = sim::simulate(spec, c, n);
  ASSERT_EQ(log.frames.size(), 10000u);
  Rng rng(1);
  NavState x{log.truth[0].R, log.truth[0].v, log.truth[0].p};
  Covariance P = FilterConfig{}.initial_covariance();
  for (std::size_t k = 1; k < log.frames.size(); ++k) {
    const auto prop = propagate(x, P, log.frames[k - 1], log.frames[k], 0.005, some_noise());
    const Vec3 z = log.truth[k].body_velocity() + random_vec(rng, 0.05);
    const auto upd = try_update_velocity(prop.state, prop.P, z, Mat3::Identity() * 0.0025, 0.0);
    x = upd.state;
    P = upd.P;
    ASSERT_LT((P - P.transpose()).cwiseAbs().maxCoeff(), 1e-9) << k;
    if (k % 100 == 0) ASSERT_GE(min_eigenvalue(P), -1e-10) << k;
  }
  EXPECT_GE(min_eigenvalue(P), -1e-10);
}

TEST(RunFilter, StationaryHasNoDrift) {
  const auto log = stationary(2000);
  FilterConfig cfg;
  cfg.noise = some_noise();
  const auto run = run_filter(log, nullptr, cfg);
  for (const auto& tp : run.track) {
    EXPECT_EQ(tp.x.v, Vec3::Zero());
    EXPECT_EQ(tp.x.p, Vec3::Zero());
  }
}

TEST(RunFilter, TruthPredictorTracksNoiselessFlight) {
  sim::TrajectorySpec spec;
  spec.kind = sim::TrajectoryKind::figure_eight;
  spec.duration = 60.0;
  const auto log = sim::simulate(spec, aero::AeroCoefficients::defaults(), sim::NoiseConfig::noiseless());
  FilterConfig cfg;
  cfg.noise = ProcessNoise::from_discrete(1e-3, 1e-4, 1e-5, 1e-6, 0.005);
  cfg.init_attitude_var = cfg.init_velocity_var = cfg.init_position_var = 1e-8;
  cfg.init_accel_bias_var = 1e-8;
  cfg.init_gyro_bias_var = 1e-10;
  TruthVelocitySource src(log.truth, 0.0, 1e-3);
  const NavState x0{log.truth[0].R, log.truth[0].v, log.truth[0].p};
  const auto run = run_filter(log, &src, cfg, x0, cfg.initial_covariance());
  EXPECT_LT((run.track.back().x.p - log.truth.back().p).norm(), 1e-3);
  EXPECT_EQ(run.stats.rejected, 0u);
  EXPECT_EQ(run.track.size(), log.frames.size());
}

TEST(RunFilter, FrequentUpdatesBeatRareOnes) {
  sim::TrajectorySpec spec;
  spec.kind = sim::TrajectoryKind::random_smooth;
  spec.duration = 60.0;
  spec.seed = 3;
  const auto c = aero::AeroCoefficients::defaults();
  double ate_fast = 0.0, ate_slow = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    sim::NoiseConfig n;
    n.sigma_a = 0.05;
    n.sigma_g = 1e-3;
    n.sigma_ba = 1e-3;
    n.sigma_bg = 1e-4;
    n.seed = seed;
    const auto log = sim::simulate(spec, c, n);
    const NavState x0{log.truth[0].R, log.truth[0].v, log.truth[0].p};
    FilterConfig cfg;
    cfg.noise = ProcessNoise::from_discrete(0.05, 1e-3, 1e-3, 1e-4, 0.005);
    const auto gt = metrics::to_track(io::trajectory_from_truth(log.truth));
    for (double rate : {20.0, 0.1}) {
      cfg.update_rate = rate;
      TruthVelocitySource src(log.truth, 0.05, 0.05, seed);
      const auto run = run_filter(log, &src, cfg, x0, cfg.initial_covariance());
      const double ate =
          metrics::compute_metrics(metrics::to_track(io::trajectory_from_run(run)), gt).ate;
      (rate > 1.0 ? ate_fast : ate_slow) += ate;
    }
  }
  EXPECT_GT(ate_slow, ate_fast);
}

TEST(RunFilter, DeadReckoningDiverges) {
  sim::TrajectorySpec spec;
  spec.kind = sim::TrajectoryKind::circle;
  spec.duration = 30.0;
  sim::NoiseConfig n;
  n.sigma_a = 0.05;
  n.sigma_g = 1e-3;
  n.sigma_ba = 1e-3;
  n.sigma_bg = 1e-4;
  n.seed = 4;
  const auto log = sim::simulate(spec, aero::AeroCoefficients::defaults(), n);
  const NavState x0{log.truth[0].R, log.truth[0].v, log.truth[0].p};
  FilterConfig cfg;
  const auto run = run_filter(log, nullptr, cfg, x0, cfg.initial_covariance());
  auto err = [&](std::size_t k) { return (run.track[k].x.p - log.truth[k].p).norm(); };
  // Superlinear growth: the second half adds far more than the first.
  EXPECT_GT(err(5999), 3.0 * err(2999));
}

TEST(RunFilter, NeesWithinChiSquareBand) {
  sim::TrajectorySpec spec;
  spec.kind = sim::TrajectoryKind::random_smooth;
  spec.duration = 30.0;
  spec.seed = 3;
  const auto c = aero::AeroCoefficients::defaults();
  const auto truth = sim::generate_trajectory(spec, c);
  FilterConfig cfg;
  cfg.noise = ProcessNoise::from_discrete(0.05, 1e-3, 1e-3, 1e-4, 0.005);
  cfg.init_attitude_var = 1e-4;
  cfg.init_velocity_var = 1e-3;
  cfg.init_position_var = 1e-6;
  cfg.init_accel_bias_var = 1e-5;
  cfg.init_gyro_bias_var = 1e-6;
  const Covariance P0 = cfg.initial_covariance();
  const int runs = 20;
  double total = 0.0;
  std::size_t count = 0;
  for (int r = 0; r < runs; ++r) {
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
    const NavState xt{truth[0].R, truth[0].v, truth[0].p, trace.bias_a[0], trace.bias_g[0]};
    ErrorState e0;
    for (int i = 0; i < 15; ++i) e0[i] = rng.normal() * std::sqrt(P0(i, i));
    TruthVelocitySource src(truth, 0.05, 0.05, 3000 + static_cast<std::uint64_t>(r));
    const auto run = run_filter(log, &src, cfg, inject(xt, -e0), P0);
    for (std::size_t k = 0; k < run.track.size(); k += 10) {
      const NavState tk{truth[k].R, truth[k].v, truth[k].p, trace.bias_a[k], trace.bias_g[k]};
      const ErrorState e = difference(tk, run.track[k].x);
      total += e.dot(run.track[k].P.ldlt().solve(e));
      ++count;
    }
  }
  const double anees = total / static_cast<double>(count);
  const boost::math::chi_squared band(15.0 * runs);
  const double lo = boost::math::quantile(band, 0.025) / runs;
  const double hi = boost::math::quantile(band, 0.975) / runs;
  EXPECT_GT(anees, lo);
  EXPECT_LT(anees, hi);
}
