#include "aiio/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>

namespace aiio::plot {

namespace {

constexpr double kPanel = 480.0;
constexpr double kMargin = 40.0;
constexpr double kVelHeight = 140.0;
constexpr double kVelWidth = 520.0;
constexpr std::size_t kMaxPoints = 4000;

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", x);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double x) {
    if (!std::isfinite(x)) return;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  void pad() {
    if (!(hi >= lo)) lo = -1.0, hi = 1.0;
    if (hi - lo < 1e-9) lo -= 0.5, hi += 0.5;
    const double m = 0.05 * (hi - lo);
    lo -= m;
    hi += m;
  }
};

// Polyline through at most kMaxPoints evenly strided samples.
std::string polyline(const std::vector<io::TrajectoryRow>& rows,
                     const std::function<std::pair<double, double>(const io::TrajectoryRow&)>& xy,
                     const std::string& colour) {
  if (rows.empty()) return {};
  const std::size_t step = std::max<std::size_t>(1, rows.size() / kMaxPoints);
  std::ostringstream os;
  os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.2\" points=\"";
  for (std::size_t k = 0; k < rows.size(); k += step) {
    const auto [x, y] = xy(rows[k]);
    if (std::isfinite(x) && std::isfinite(y)) os << num(x) << ',' << num(y) << ' ';
  }
  os << "\"/>\n";
  return os.str();
}

std::string frame(double x, double y, double w, double h, const std::string& title) {
  std::ostringstream os;
  os << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w) << "\" height=\""
     << num(h) << "\" fill=\"none\" stroke=\"#888\"/>\n";
  os << "<text x=\"" << num(x + 4) << "\" y=\"" << num(y - 6) << "\" font-size=\"12\">" << title
     << "</text>\n";
  return os.str();
}

}  // namespace

std::string render_svg(const std::vector<io::TrajectoryRow>& est,
                       const std::vector<io::TrajectoryRow>& gt) {
  const double width = kMargin * 3 + kPanel + kVelWidth;
  const double height = kMargin * 2 + std::max(kPanel, 3 * kVelHeight + 2 * kMargin);
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\""
     << num(height) << "\" font-family=\"sans-serif\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Top-down track, equal scale on both axes.
  Range rx, ry;
  for (const auto* rows : {&est, &gt}) {
    for (const auto& r : *rows) {
      rx.add(r.p.x());
      ry.add(r.p.y());
    }
  }
  rx.pad();
  ry.pad();
  const double span = std::max(rx.hi - rx.lo, ry.hi - ry.lo);
  const double cx = 0.5 * (rx.lo + rx.hi), cy = 0.5 * (ry.lo + ry.hi);
  const double x0 = kMargin, y0 = kMargin;
  auto track_xy = [&](const io::TrajectoryRow& r) {
    return std::pair{x0 + (r.p.x() - cx + 0.5 * span) / span * kPanel,
                     y0 + kPanel - (r.p.y() - cy + 0.5 * span) / span * kPanel};
  };
  os << frame(x0, y0, kPanel, kPanel, "x-y track [m], span " + num(span));
  os << polyline(gt, track_xy, "black");
  os << polyline(est, track_xy, "#1f5fbf");

  // Velocity panels.
  Range rt;
  for (const auto* rows : {&est, &gt}) {
    for (const auto& r : *rows) rt.add(r.t);
  }
  if (!(rt.hi > rt.lo)) rt.lo = 0.0, rt.hi = 1.0;
  const char* names[3] = {"vx [m/s]", "vy [m/s]", "vz [m/s]"};
  for (int axis = 0; axis < 3; ++axis) {
    Range rv;
    for (const auto* rows : {&est, &gt}) {
      for (const auto& r : *rows) rv.add(r.v[axis]);
    }
    rv.pad();
    const double px = 2 * kMargin + kPanel;
    const double py = kMargin + axis * (kVelHeight + kMargin);
    auto vel_xy = [&](const io::TrajectoryRow& r) {
      return std::pair{px + (r.t - rt.lo) / (rt.hi - rt.lo) * kVelWidth,
                       py + kVelHeight - (r.v[axis] - rv.lo) / (rv.hi - rv.lo) * kVelHeight};
    };
    os << frame(px, py, kVelWidth, kVelHeight,
                std::string(names[axis]) + " in [" + num(rv.lo) + ", " + num(rv.hi) + "]");
    os << polyline(gt, vel_xy, "black");
    os << polyline(est, vel_xy, "#1f5fbf");
  }
  os << "<text x=\"" << num(kMargin) << "\" y=\"" << num(height - 10)
     << "\" font-size=\"12\">black: reference, blue: estimate, t in [" << num(rt.lo) << ", "
     << num(rt.hi) << "] s</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace aiio::plot
