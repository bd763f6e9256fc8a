#pragma once

// Plain-text key-value configuration ("INI" style). Sections used:
//
//   [aero]        k1..k6, lambda_x, lambda_y, alpha
//   [noise]       sigma_g, sigma_a, sigma_bg, sigma_ba, bias_g, bias_a, seed
//   [trajectory]  kind, duration, sample_rate, height, radius, period,
//                 vertical_amplitude, vertical_period, max_speed, max_yaw, seed
//   [sim]         mode, coriolis, drag, rotor_spread
//   [net]         window, use_rotor, four_rotor_channels, conv1_channels,
//                 model_dim, kernel, heads, ff_hidden
//   [train]       learning_rate, batch_size, epochs, huber_delta, patience,
//                 min_improvement, nll_reserve_epochs, seed, threads
//   [windows]     mode (online|offline), stride
//   [filter]      update_rate, window, gate, init_attitude_var, ...
//
// Vector values (bias_g, bias_a) are three space-separated numbers. Unknown
// keys inside a known section are rejected so typos do not pass silently.

#include "aiio/aerodynamics.hpp"
#include "aiio/filter_runner.hpp"
#include "aiio/sensor_sim.hpp"
#include "aiio/trainer.hpp"
#include "aiio/windows.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

namespace aiio::config {

struct ConfigFile {
  std::string source;
  std::map<std::string, std::map<std::string, std::string>> sections;

  bool has(const std::string& section) const { return sections.count(section) != 0; }
};

ConfigFile load_config(const std::filesystem::path& path);
ConfigFile parse_config(std::istream& in, const std::string& source_name);

/// All nine keys required.
aero::AeroCoefficients read_aero(const ConfigFile& cfg);
std::string format_aero(const aero::AeroCoefficients& c);

/// Coefficients stored as "aero.*" metadata by the simulator.
aero::AeroCoefficients aero_from_metadata(const std::map<std::string, std::string>& metadata);
sim::NoiseConfig noise_from_metadata(const std::map<std::string, std::string>& metadata);

sim::NoiseConfig read_noise(const ConfigFile& cfg, sim::NoiseConfig base = {});
sim::TrajectorySpec read_trajectory(const ConfigFile& cfg, sim::TrajectorySpec base = {});
sim::SynthesisOptions read_synthesis(const ConfigFile& cfg, sim::SynthesisOptions base = {});
net::NetConfig read_net(const ConfigFile& cfg, net::NetConfig base = {});
net::TrainConfig read_train(const ConfigFile& cfg, net::TrainConfig base = {});
net::WindowOptions read_windows(const ConfigFile& cfg, net::WindowOptions base = {});

/// Filter settings plus per-source options.
struct FilterSettings {
  eskf::FilterConfig filter{};
  eskf::AeroVelocitySource::Options aero{};
  double truth_sigma = 0.05;  // reported sigma for the truth source [m/s]
};
FilterSettings read_filter(const ConfigFile& cfg, FilterSettings base = {});

}  // namespace aiio::config
