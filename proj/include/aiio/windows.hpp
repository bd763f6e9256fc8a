#pragma once

#include "aiio/normalizer.hpp"
#include "aiio/sensor_sim.hpp"
#include "aiio/velocity_net.hpp"

#include <vector>

namespace aiio::net {

enum class WindowMode {
  online,   // stride 1, one target: body velocity at the window's last frame
  offline,  // stride L, a target at every frame of the window
};

struct WindowOptions {
  WindowMode mode = WindowMode::online;
  std::size_t length = 200;
  /// Keep every n-th online window (training subsampling); 1 keeps all.
  std::size_t online_stride = 1;
};

/// Encodes the whole sequence as a stream (running rotor statistics advance
/// frame by frame, starting from `normalizer`), then cuts windows.
/// Online yields N - L + 1 windows, offline floor(N / L).
std::vector<Sample> make_windows(const sim::SequenceLog& seq, const WindowOptions& options,
                                 const RotorNormalizer& normalizer, const NetConfig& config);

}  // namespace aiio::net
