#pragma once

// CSV sequence and trajectory files.
//
// Sequence layout: optional "# key=value" metadata lines, one header line,
// then one row per frame:
//
//   t, gx, gy, gz, ax, ay, az, w1, w2, w3, w4,
//   gt_px, gt_py, gt_pz, gt_qw, gt_qx, gt_qy, gt_qz, gt_vx, gt_vy, gt_vz,
//   gt_wx, gt_wy, gt_wz, gt_awx, gt_awy, gt_awz
//
// Columns are found by header name, so order is free and the gt_* block is
// optional. Common alternative names are accepted (see column_aliases).
// A "unit=rpm" metadata line means rotor speeds are in rev/min and are
// converted to rad/s on load.

#include "aiio/filter_runner.hpp"
#include "aiio/sensor_sim.hpp"

#include <Eigen/Geometry>

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace aiio::io {

/// Shortest text that parses back to the same double (at most 17 digits).
std::string format_number(double x);

/// Parses a full field as a double; throws ParseError mentioning `where`.
double parse_number(const std::string& field, const std::string& where);

/// Writes via a sibling temporary file and renames it into place.
void write_atomic(const std::filesystem::path& path,
                  const std::function<void(std::ostream&)>& writer);
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Canonical column name -> accepted alternatives.
const std::map<std::string, std::vector<std::string>>& column_aliases();

sim::SequenceLog load_sequence(const std::filesystem::path& path);
sim::SequenceLog parse_sequence(std::istream& in, const std::string& source_name);
void save_sequence(const sim::SequenceLog& log, const std::filesystem::path& path);
void write_sequence(const sim::SequenceLog& log, std::ostream& out);

/// One row of an estimated (or reference) trajectory.
struct TrajectoryRow {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
  std::array<double, 15> stddev{};  // sqrt(diag P); zeros when unknown
};

std::vector<TrajectoryRow> trajectory_from_run(const eskf::FilterRun& run);
std::vector<TrajectoryRow> trajectory_from_truth(const std::vector<sim::GroundTruthState>& truth);

/// t, px, py, pz, vx, vy, vz, qw, qx, qy, qz, then std_* for the 15 error
/// states.
void save_trajectory(const std::vector<TrajectoryRow>& rows, const std::filesystem::path& path);
void write_trajectory(const std::vector<TrajectoryRow>& rows, std::ostream& out);

/// Reads a trajectory file, or the gt_* block of a sequence file.
std::vector<TrajectoryRow> load_trajectory(const std::filesystem::path& path);

}  // namespace aiio::io
