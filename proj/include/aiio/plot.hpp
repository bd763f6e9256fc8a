#pragma once

#include "aiio/sequence_io.hpp"

#include <string>
#include <vector>

namespace aiio::plot {

/// Static SVG: top-down x/y track on the left, per-axis velocity against
/// time on the right. Estimate in blue, reference in black.
std::string render_svg(const std::vector<io::TrajectoryRow>& est,
                       const std::vector<io::TrajectoryRow>& gt);

}  // namespace aiio::plot
