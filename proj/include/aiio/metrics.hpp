#pragma once

// Trajectory error metrics.
//
// Estimates are matched to the nearest reference sample in time, within half
// the median reference period. ATE / AVE are RMSEs of position / velocity
// error over matched samples. RTE / RVE use non-overlapping intervals
// anchored at the first matched sample: the error of the displacement (or
// velocity change) over each interval. When the sequence is shorter than one
// interval, a single interval spanning it is used.

#include "aiio/common.hpp"
#include "aiio/sequence_io.hpp"

#include <string>
#include <vector>

namespace aiio::metrics {

inline constexpr double kDefaultInterval = 5.0;  // [s]

struct TrackSample {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
};
using Track = std::vector<TrackSample>;

Track to_track(const std::vector<io::TrajectoryRow>& rows);

enum class RelativeVelocity {
  delta,          // v(end) - v(start)
  interval_mean,  // mean velocity inside the interval
};

struct MetricsOptions {
  double interval = kDefaultInterval;
  RelativeVelocity rve = RelativeVelocity::delta;
  double min_match_fraction = 0.5;
};

struct MetricsReport {
  double ate = 0.0;  // [m]
  double rte = 0.0;  // [m]
  double ave = 0.0;  // [m/s]
  double rve = 0.0;  // [m/s]
  double interval = kDefaultInterval;

  // Sums behind the RMSEs, kept so reports can be pooled.
  double sse_position = 0.0;
  double sse_velocity = 0.0;
  double sse_rel_position = 0.0;
  double sse_rel_velocity = 0.0;
  std::size_t matched = 0;
  std::size_t intervals = 0;
};

/// Throws AlignmentFailure when fewer than `min_match_fraction` of the
/// estimates find a reference sample.
MetricsReport compute_metrics(const Track& est, const Track& gt, const MetricsOptions& options = {});

/// Pooled RMSEs over several sequences (independent of their order).
MetricsReport aggregate(const std::vector<MetricsReport>& reports);

struct NamedReport {
  std::string name;
  MetricsReport report;
};

/// Aligned text table, one line per sequence plus an aggregate line.
std::string format_table(const std::vector<NamedReport>& reports, const MetricsReport& total);

/// sequence,ate,rte,ave,rve,interval
std::string format_csv(const std::vector<NamedReport>& reports, const MetricsReport& total);

}  // namespace aiio::metrics
