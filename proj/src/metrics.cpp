#include "aiio/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <tuple>

namespace aiio::metrics {

namespace {

struct Pair {
  double t;
  Vec3 pe, pg, ve, vg;
};

double median_period(const Track& gt) {
  std::vector<double> dts;
  dts.reserve(gt.size());
  for (std::size_t k = 1; k < gt.size(); ++k) dts.push_back(gt[k].t - gt[k - 1].t);
  std::nth_element(dts.begin(), dts.begin() + static_cast<std::ptrdiff_t>(dts.size() / 2), dts.end());
  return dts[dts.size() / 2];
}

std::size_t nearest(const Track& track, double t) {
  auto it = std::lower_bound(track.begin(), track.end(), t,
                             [](const TrackSample& s, double x) { return s.t < x; });
  if (it == track.end()) return track.size() - 1;
  const std::size_t i = static_cast<std::size_t>(it - track.begin());
  if (i > 0 && t - track[i - 1].t <= track[i].t - t) return i - 1;
  return i;
}

std::size_t nearest_pair(const std::vector<Pair>& pairs, double t) {
  auto it = std::lower_bound(pairs.begin(), pairs.end(), t,
                             [](const Pair& s, double x) { return s.t < x; });
  if (it == pairs.end()) return pairs.size() - 1;
  const std::size_t i = static_cast<std::size_t>(it - pairs.begin());
  if (i > 0 && t - pairs[i - 1].t <= pairs[i].t - t) return i - 1;
  return i;
}

std::string fixed(double x, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, x);
  return buf;
}

}  // namespace

Track to_track(const std::vector<io::TrajectoryRow>& rows) {
  Track t;
  t.reserve(rows.size());
  for (const auto& r : rows) t.push_back({r.t, r.p, r.v});
  return t;
}

MetricsReport compute_metrics(const Track& est, const Track& gt, const MetricsOptions& options) {
  if (!(options.interval > 0.0)) throw InvalidArgument("metrics interval must be positive");
  if (est.empty()) throw AlignmentFailure("no estimates to evaluate");
  if (gt.size() < 2) throw AlignmentFailure("reference trajectory needs at least two samples");
  for (std::size_t k = 1; k < gt.size(); ++k) {
    if (!(gt[k].t > gt[k - 1].t)) throw MonotonicityViolation("reference timestamps not increasing");
  }
  for (std::size_t k = 1; k < est.size(); ++k) {
    if (!(est[k].t > est[k - 1].t)) throw MonotonicityViolation("estimate timestamps not increasing");
  }

  const double tolerance = 0.5 * median_period(gt) * (1.0 + 1e-9);
  std::vector<Pair> pairs;
  pairs.reserve(est.size());
  for (const auto& e : est) {
    const TrackSample& g = gt[nearest(gt, e.t)];
    if (std::abs(g.t - e.t) <= tolerance) pairs.push_back({e.t, e.p, g.p, e.v, g.v});
  }
  if (static_cast<double>(pairs.size()) < options.min_match_fraction * static_cast<double>(est.size()) ||
      pairs.empty()) {
    throw AlignmentFailure("only " + std::to_string(pairs.size()) + " of " +
                           std::to_string(est.size()) + " estimates matched the reference");
  }

  MetricsReport r;
  r.interval = options.interval;
  r.matched = pairs.size();
  for (const auto& p : pairs) {
    r.sse_position += (p.pe - p.pg).squaredNorm();
    r.sse_velocity += (p.ve - p.vg).squaredNorm();
  }

  // Interval boundaries, as indices into `pairs`.
  const double t0 = pairs.front().t;
  const double span = pairs.back().t - t0;
  const auto full = static_cast<std::size_t>(std::floor(span / options.interval + 1e-9));
  std::vector<std::size_t> bounds;
  if (full == 0) {
    bounds = {0, pairs.size() - 1};
  } else {
    for (std::size_t j = 0; j <= full; ++j) {
      bounds.push_back(nearest_pair(pairs, t0 + static_cast<double>(j) * options.interval));
    }
  }

  for (std::size_t j = 0; j + 1 < bounds.size(); ++j) {
    const Pair& s = pairs[bounds[j]];
    const Pair& e = pairs[bounds[j + 1]];
    r.sse_rel_position += ((e.pe - s.pe) - (e.pg - s.pg)).squaredNorm();
    if (options.rve == RelativeVelocity::delta) {
      r.sse_rel_velocity += ((e.ve - s.ve) - (e.vg - s.vg)).squaredNorm();
    } else {
      Vec3 mean_e = Vec3::Zero(), mean_g = Vec3::Zero();
      const std::size_t last = (j + 2 == bounds.size()) ? bounds[j + 1] + 1 : bounds[j + 1];
      for (std::size_t k = bounds[j]; k < last; ++k) {
        mean_e += pairs[k].ve;
        mean_g += pairs[k].vg;
      }
      const double n = static_cast<double>(std::max<std::size_t>(last - bounds[j], 1));
      r.sse_rel_velocity += ((mean_e - mean_g) / n).squaredNorm();
    }
    ++r.intervals;
  }

  const double m = static_cast<double>(r.matched);
  r.ate = std::sqrt(r.sse_position / m);
  r.ave = std::sqrt(r.sse_velocity / m);
  const double q = static_cast<double>(std::max<std::size_t>(r.intervals, 1));
  r.rte = std::sqrt(r.sse_rel_position / q);
  r.rve = std::sqrt(r.sse_rel_velocity / q);
  return r;
}

MetricsReport aggregate(const std::vector<MetricsReport>& reports) {
  if (reports.empty()) throw InvalidArgument("nothing to aggregate");
  // Sum in a canonical order so the result ignores how sequences are listed.
  std::vector<MetricsReport> sorted = reports;
  std::sort(sorted.begin(), sorted.end(), [](const MetricsReport& a, const MetricsReport& b) {
    return std::tie(a.sse_position, a.sse_velocity, a.sse_rel_position, a.sse_rel_velocity,
                    a.matched, a.intervals) < std::tie(b.sse_position, b.sse_velocity,
                                                       b.sse_rel_position, b.sse_rel_velocity,
                                                       b.matched, b.intervals);
  });
  MetricsReport total;
  total.interval = sorted.front().interval;
  for (const auto& r : sorted) {
    total.sse_position += r.sse_position;
    total.sse_velocity += r.sse_velocity;
    total.sse_rel_position += r.sse_rel_position;
    total.sse_rel_velocity += r.sse_rel_velocity;
    total.matched += r.matched;
    total.intervals += r.intervals;
  }
  const double m = static_cast<double>(std::max<std::size_t>(total.matched, 1));
  const double q = static_cast<double>(std::max<std::size_t>(total.intervals, 1));
  total.ate = std::sqrt(total.sse_position / m);
  total.ave = std::sqrt(total.sse_velocity / m);
  total.rte = std::sqrt(total.sse_rel_position / q);
  total.rve = std::sqrt(total.sse_rel_velocity / q);
  return total;
}

std::string format_table(const std::vector<NamedReport>& reports, const MetricsReport& total) {
  std::size_t width = 9;
  for (const auto& r : reports) width = std::max(width, r.name.size());
  std::ostringstream os;
  auto pad = [&](const std::string& s) { return s + std::string(width - s.size(), ' '); };
  auto cell = [](const std::string& s) { return std::string(12 - std::min<std::size_t>(12, s.size()), ' ') + s; };
  os << pad("sequence") << cell("ATE [m]") << cell("RTE [m]") << cell("AVE [m/s]") << cell("RVE [m/s]")
     << '\n';
  auto line = [&](const std::string& name, const MetricsReport& r) {
    os << pad(name) << cell(fixed(r.ate, 6)) << cell(fixed(r.rte, 6)) << cell(fixed(r.ave, 6))
       << cell(fixed(r.rve, 6)) << '\n';
  };
  for (const auto& r : reports) line(r.name, r.report);
  if (reports.size() > 1) line("aggregate", total);
  os << "interval: " << fixed(total.interval, 3) << " s\n";
  return os.str();
}

std::string format_csv(const std::vector<NamedReport>& reports, const MetricsReport& total) {
  std::ostringstream os;
  os << "sequence,ate,rte,ave,rve,interval\n";
  auto line = [&](const std::string& name, const MetricsReport& r) {
    os << name << ',' << io::format_number(r.ate) << ',' << io::format_number(r.rte) << ','
       << io::format_number(r.ave) << ',' << io::format_number(r.rve) << ','
       << io::format_number(r.interval) << '\n';
  };
  for (const auto& r : reports) line(r.name, r.report);
  line("aggregate", total);
  return os.str();
}

}  // namespace aiio::metrics
