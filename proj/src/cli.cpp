#include "aiio/cli.hpp"

#include "aiio/config.hpp"
#include "aiio/filter_runner.hpp"
#include "aiio/metrics.hpp"
#include "aiio/params_io.hpp"
#include "aiio/plot.hpp"
#include "aiio/sequence_io.hpp"
#include "aiio/trainer.hpp"
#include "aiio/windows.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <memory>
#include <ostream>

namespace aiio::cli {

namespace fs = std::filesystem;

namespace {

std::optional<config::ConfigFile> maybe_config(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return config::load_config(path);
}

aero::ModelOptions model_from_metadata(const std::map<std::string, std::string>& md) {
  aero::ModelOptions m;
  if (auto it = md.find("sim.coriolis"); it != md.end()) m.with_coriolis = it->second != "0";
  if (auto it = md.find("sim.drag"); it != md.end()) {
    m.drag = it->second == "literal" ? aero::DragForm::literal_square : aero::DragForm::signed_square;
  }
  return m;
}

double mean_period(const sim::SequenceLog& seq) {
  if (seq.frames.size() < 2) throw InvalidArgument("sequence needs at least two frames");
  return (seq.frames.back().t - seq.frames.front().t) / static_cast<double>(seq.frames.size() - 1);
}

struct SimulateArgs {
  std::string spec, coeffs, noise, out;
  std::uint64_t seed = 1;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  const auto spec_file = config::load_config(a.spec);
  sim::TrajectorySpec spec = config::read_trajectory(spec_file);
  const sim::SynthesisOptions options = config::read_synthesis(spec_file);
  const aero::AeroCoefficients c =
      a.coeffs.empty() ? aero::AeroCoefficients::defaults() : config::read_aero(config::load_config(a.coeffs));
  sim::NoiseConfig noise = a.noise.empty() ? sim::NoiseConfig{} : config::read_noise(config::load_config(a.noise));
  spec.seed = a.seed;
  noise.seed = a.seed;
  const sim::SequenceLog log = sim::simulate(spec, c, noise, options);
  io::save_sequence(log, a.out);
  out << "wrote " << log.frames.size() << " frames to " << a.out << '\n';
  return 0;
}

struct IdentifyArgs {
  std::string in, out;
};

int cmd_identify(const IdentifyArgs& a, std::ostream& out) {
  const sim::SequenceLog seq = io::load_sequence(a.in);
  if (!seq.has_truth()) throw InvalidArgument(a.in + ": identification needs ground-truth velocity");
  std::vector<aero::AeroSample> samples;
  samples.reserve(seq.frames.size());
  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    const auto& f = seq.frames[k];
    samples.push_back({f.accel, {seq.truth[k].body_velocity(), f.gyro, aero::mean_sq_rotor_speed(f.rotor)}});
  }
  const aero::FitResult fit = aero::fit_coefficients(samples, model_from_metadata(seq.metadata));
  const auto values = fit.coefficients.to_array();
  for (std::size_t i = 0; i < values.size(); ++i) {
    out << aero::AeroCoefficients::names()[i] << " = " << io::format_number(values[i]) << '\n';
  }
  out << "rms residual [m/s^2] = " << io::format_number(fit.rms_residual.x()) << ' '
      << io::format_number(fit.rms_residual.y()) << ' ' << io::format_number(fit.rms_residual.z())
      << '\n';
  out << "condition number = " << io::format_number(fit.condition_number) << '\n';
  out << "samples = " << fit.samples << '\n';
  io::write_atomic(a.out, config::format_aero(fit.coefficients));
  return 0;
}

struct TrainArgs {
  std::string data, config, out, history;
  bool no_rotor = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const config::ConfigFile cfg = a.config.empty() ? config::ConfigFile{} : config::load_config(a.config);
  net::NetConfig net_cfg = config::read_net(cfg);
  if (a.no_rotor) net_cfg.use_rotor = false;
  const net::TrainConfig train_cfg = config::read_train(cfg);
  net::WindowOptions wopt = config::read_windows(cfg);
  wopt.length = static_cast<std::size_t>(net_cfg.window);

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(a.data)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InvalidArgument(a.data + ": no .csv sequences found");

  std::vector<sim::SequenceLog> sequences;
  for (const auto& f : files) sequences.push_back(io::load_sequence(f));

  std::optional<net::RotorNormalizer> norm;
  if (cfg.has("aero")) {
    norm = net::RotorNormalizer::from_coefficients(config::read_aero(cfg));
  } else if (sequences.front().metadata.count("aero.alpha")) {
    norm = net::RotorNormalizer::from_coefficients(config::aero_from_metadata(sequences.front().metadata));
  } else {
    double sum = 0.0, sum_sq = 0.0, n = 0.0;
    for (const auto& s : sequences) {
      for (const auto& f : s.frames) {
        const double w = std::sqrt(aero::mean_sq_rotor_speed(f.rotor));
        sum += w;
        sum_sq += w * w;
        n += 1.0;
      }
    }
    const double mean = sum / n;
    norm = net::RotorNormalizer(mean, std::sqrt(std::max(sum_sq / n - mean * mean, 1e-12)));
  }

  std::vector<net::Sample> data;
  for (const auto& s : sequences) {
    auto w = net::make_windows(s, wopt, *norm, net_cfg);
    std::move(w.begin(), w.end(), std::back_inserter(data));
  }
  if (data.empty()) throw InvalidArgument("sequences are shorter than the window");

  const net::TrainResult result = net::train(data, train_cfg, net_cfg);
  io::save_params({result.params, *norm}, a.out);
  const std::string history = a.history.empty() ? a.out + ".loss.csv" : a.history;
  io::save_loss_history(result.history, history);
  out << "trained on " << data.size() << " windows from " << sequences.size() << " sequences\n";
  if (!result.history.empty()) {
    out << "final huber = " << io::format_number(result.history.back().huber)
        << ", nll = " << io::format_number(result.history.back().nll) << '\n';
  }
  if (result.switch_epoch > 0) {
    out << "nll phase from epoch " << result.switch_epoch << '\n';
  } else {
    out << "nll phase not reached\n";
  }
  return 0;
}

struct RunArgs {
  std::string in, estimator, params, coeffs, config, out;
  std::string init = "auto";
};

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err) {
  const sim::SequenceLog seq = io::load_sequence(a.in);
  if (seq.frames.empty()) throw InvalidArgument(a.in + ": no samples");
  const auto cfg = maybe_config(a.config);
  config::FilterSettings settings = cfg ? config::read_filter(*cfg) : config::FilterSettings{};
  const sim::NoiseConfig noise = (cfg && cfg->has("noise")) ? config::read_noise(*cfg)
                                                            : config::noise_from_metadata(seq.metadata);
  settings.filter.noise = eskf::ProcessNoise::from_discrete(noise.sigma_a, noise.sigma_g, noise.sigma_ba,
                                                            noise.sigma_bg, mean_period(seq));

  std::unique_ptr<eskf::VelocitySource> source;
  if (a.estimator == "truth") {
    if (!seq.has_truth()) throw InvalidArgument(a.in + ": truth estimator needs ground truth");
    source = std::make_unique<eskf::TruthVelocitySource>(seq.truth, 0.0, settings.truth_sigma);
  } else if (a.estimator == "aero") {
    const aero::AeroCoefficients c = a.coeffs.empty() ? config::aero_from_metadata(seq.metadata)
                                                      : config::read_aero(config::load_config(a.coeffs));
    settings.aero.model = model_from_metadata(seq.metadata);
    settings.aero.accel_sigma = noise.sigma_a;
    source = std::make_unique<eskf::AeroVelocitySource>(c, settings.aero);
  } else if (a.estimator == "net") {
    if (a.params.empty()) throw InvalidArgument("--params is required for the net estimator");
    io::ModelBundle bundle = io::load_params(a.params);
    settings.filter.window = static_cast<std::size_t>(bundle.params.config.window);
    source = std::make_unique<eskf::NetVelocitySource>(std::move(bundle.params), bundle.normalizer);
  } else if (a.estimator != "none") {
    throw InvalidArgument("unknown estimator '" + a.estimator + "'");
  }

  // Starting mid-flight from a level, motionless guess puts the first
  // innovations far outside the gate, so logs with ground truth start from
  // its first pose and velocity unless told otherwise.
  std::string init = a.init;
  if (init == "auto") init = seq.has_truth() ? "truth" : "accel";
  eskf::NavState x0;
  if (init == "truth") {
    if (!seq.has_truth()) throw InvalidArgument(a.in + ": --init truth needs ground truth");
    x0 = {seq.truth.front().R, seq.truth.front().v, seq.truth.front().p};
  } else if (init == "accel") {
    x0 = eskf::initial_state(seq.frames.front());
  } else {
    throw InvalidArgument("unknown --init '" + a.init + "'");
  }
  const eskf::FilterRun run =
      eskf::run_filter(seq, source.get(), settings.filter, x0, settings.filter.initial_covariance());
  io::save_trajectory(io::trajectory_from_run(run), a.out);
  out << "updates applied " << run.stats.applied << ", rejected " << run.stats.rejected
      << ", skipped " << run.stats.skipped << '\n';
  for (const auto& m : run.stats.messages) err << "skipped update: " << m << '\n';
  return 0;
}

struct EvaluateArgs {
  std::vector<std::string> est, gt;
  double interval = metrics::kDefaultInterval;
  std::string csv, rve = "delta";
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  if (a.est.size() != a.gt.size()) throw InvalidArgument("--est and --gt must be given in pairs");
  metrics::MetricsOptions opt;
  opt.interval = a.interval;
  if (a.rve == "mean") {
    opt.rve = metrics::RelativeVelocity::interval_mean;
  } else if (a.rve != "delta") {
    throw InvalidArgument("--rve must be delta or mean");
  }
  std::vector<metrics::NamedReport> reports;
  std::vector<metrics::MetricsReport> plain;
  for (std::size_t i = 0; i < a.est.size(); ++i) {
    const auto est = metrics::to_track(io::load_trajectory(a.est[i]));
    const auto gt = metrics::to_track(io::load_trajectory(a.gt[i]));
    reports.push_back({fs::path(a.est[i]).stem().string(), metrics::compute_metrics(est, gt, opt)});
    plain.push_back(reports.back().report);
  }
  const metrics::MetricsReport total = metrics::aggregate(plain);
  const std::string csv = metrics::format_csv(reports, total);
  out << metrics::format_table(reports, total) << '\n' << csv;
  if (!a.csv.empty()) io::write_atomic(a.csv, csv);
  return 0;
}

struct PlotArgs {
  std::string est, gt, out;
};

int cmd_plot(const PlotArgs& a, std::ostream& out) {
  const auto est = io::load_trajectory(a.est);
  const auto gt = io::load_trajectory(a.gt);
  io::write_atomic(a.out, plot::render_svg(est, gt));
  out << "wrote " << a.out << '\n';
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Aerodynamics-aided inertial odometry toolkit", "aiio"};
  app.require_subcommand(1);

  SimulateArgs sim_a;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic flight log");
  sim_cmd->add_option("--spec", sim_a.spec, "Trajectory config ([trajectory], [sim])")->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("--coeffs", sim_a.coeffs, "Aerodynamic coefficients ([aero])")->check(CLI::ExistingFile);
  sim_cmd->add_option("--noise", sim_a.noise, "Sensor noise ([noise])")->check(CLI::ExistingFile);
  sim_cmd->add_option("--seed", sim_a.seed, "Seed for trajectory and noise");
  sim_cmd->add_option("--out", sim_a.out, "Output CSV")->required();

  IdentifyArgs id_a;
  auto* id_cmd = app.add_subcommand("identify", "Fit aerodynamic coefficients from a log with ground truth");
  id_cmd->add_option("--in", id_a.in, "Input CSV")->required()->check(CLI::ExistingFile);
  id_cmd->add_option("--out", id_a.out, "Output coefficients file")->required();

  TrainArgs tr_a;
  auto* tr_cmd = app.add_subcommand("train", "Train the velocity network");
  tr_cmd->add_option("--data", tr_a.data, "Directory of CSV logs")->required()->check(CLI::ExistingDirectory);
  tr_cmd->add_option("--config", tr_a.config, "Training config ([net], [train], [windows])")->check(CLI::ExistingFile);
  tr_cmd->add_option("--out", tr_a.out, "Output params file")->required();
  tr_cmd->add_option("--history", tr_a.history, "Loss history CSV (default <out>.loss.csv)");
  tr_cmd->add_flag("--no-rotor", tr_a.no_rotor, "Drop the rotor-speed channel");

  RunArgs run_a;
  auto* run_cmd = app.add_subcommand("run", "Run the filter over a log");
  run_cmd->add_option("--in", run_a.in, "Input CSV")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--estimator", run_a.estimator, "net | aero | truth | none")->required();
  run_cmd->add_option("--params", run_a.params, "Network params (net)")->check(CLI::ExistingFile);
  run_cmd->add_option("--coeffs", run_a.coeffs, "Coefficients (aero; default from log metadata)")->check(CLI::ExistingFile);
  run_cmd->add_option("--config", run_a.config, "Filter config ([filter], [noise])")->check(CLI::ExistingFile);
  run_cmd->add_option("--out", run_a.out, "Output trajectory CSV")->required();
  run_cmd->add_option("--init", run_a.init, "Initial state: truth | accel | auto (truth when the log has it)");

  EvaluateArgs ev_a;
  auto* ev_cmd = app.add_subcommand("evaluate", "Compute ATE/RTE/AVE/RVE");
  ev_cmd->add_option("--est", ev_a.est, "Estimated trajectory CSV (repeatable)")->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("--gt", ev_a.gt, "Reference trajectory or log CSV (repeatable)")->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("--interval", ev_a.interval, "Relative-metric interval [s]");
  ev_cmd->add_option("--csv", ev_a.csv, "Also write the metrics CSV here");
  ev_cmd->add_option("--rve", ev_a.rve, "Relative velocity: delta | mean");

  PlotArgs pl_a;
  auto* pl_cmd = app.add_subcommand("plot", "Render an SVG comparison");
  pl_cmd->add_option("--est", pl_a.est, "Estimated trajectory CSV")->required()->check(CLI::ExistingFile);
  pl_cmd->add_option("--gt", pl_a.gt, "Reference trajectory or log CSV")->required()->check(CLI::ExistingFile);
  pl_cmd->add_option("--out", pl_a.out, "Output SVG")->required();

  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.emplace_back("aiio");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (sim_cmd->parsed()) return cmd_simulate(sim_a, out);
    if (id_cmd->parsed()) return cmd_identify(id_a, out);
    if (tr_cmd->parsed()) return cmd_train(tr_a, out);
    if (run_cmd->parsed()) return cmd_run(run_a, out, err);
    if (ev_cmd->parsed()) return cmd_evaluate(ev_a, out);
    if (pl_cmd->parsed()) return cmd_plot(pl_a, out);
  } catch (const RankDeficient& e) {
    err << "error: RankDeficient: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
  return 1;
}

}  // namespace aiio::cli
