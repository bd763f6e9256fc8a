#pragma once

// Network parameter files.
//
//   "AIIO" | u32 version | u32 tensor count |
//   per tensor: u32 name length, name bytes, u32 rank, u64 dims[rank],
//               f64 values (row-major)
//
// All integers and floats little-endian. Besides the weights, the file
// carries two rank-1 tensors: "meta.config" (network shape) and
// "meta.normalizer" (rotor statistics warm start).

#include "aiio/normalizer.hpp"
#include "aiio/trainer.hpp"
#include "aiio/velocity_net.hpp"

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace aiio::io {

inline constexpr std::uint32_t kParamsVersion = 1;

struct ModelBundle {
  net::NetParams params;
  net::RotorNormalizer normalizer{0.0, 1.0};
};

void write_params(const ModelBundle& bundle, std::ostream& out);
ModelBundle read_params(std::istream& in);

void save_params(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_params(const std::filesystem::path& path);

/// epoch,huber,nll
void save_loss_history(const std::vector<net::EpochRecord>& history,
                       const std::filesystem::path& path);
void write_loss_history(const std::vector<net::EpochRecord>& history, std::ostream& out);

}  // namespace aiio::io
