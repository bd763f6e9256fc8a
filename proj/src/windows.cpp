#include "aiio/windows.hpp"

namespace aiio::net {

std::vector<Sample> make_windows(const sim::SequenceLog& seq, const WindowOptions& options,
                                 const RotorNormalizer& normalizer, const NetConfig& config) {
  const std::size_t n = seq.frames.size();
  const std::size_t len = options.length;
  if (len == 0) throw InvalidArgument("window length must be positive");
  if (n < len) throw InvalidArgument("sequence shorter than the window length");
  if (!seq.has_truth()) throw InvalidArgument("windows need ground-truth velocity targets");
  if (options.online_stride == 0) throw InvalidArgument("online stride must be positive");

  RotorNormalizer stats = normalizer;
  const WindowTensor stream = normalize_window(seq.frames, stats, config);
  const auto L = static_cast<Eigen::Index>(len);

  std::vector<Sample> out;
  auto cut = [&](std::size_t start) {
    Sample s;
    s.input.data = stream.data.middleRows(static_cast<Eigen::Index>(start), L);
    s.end_frame = start + len - 1;
    return s;
  };

  if (options.mode == WindowMode::online) {
    out.reserve((n - len) / options.online_stride + 1);
    for (std::size_t start = 0; start + len <= n; start += options.online_stride) {
      Sample s = cut(start);
      s.rows = {L - 1};
      s.targets = {seq.truth[s.end_frame].body_velocity()};
      out.push_back(std::move(s));
    }
  } else {
    out.reserve(n / len);
    for (std::size_t start = 0; start + len <= n; start += len) {
      Sample s = cut(start);
      s.rows.resize(len);
      s.targets.resize(len);
      for (std::size_t i = 0; i < len; ++i) {
        s.rows[i] = static_cast<Eigen::Index>(i);
        s.targets[i] = seq.truth[start + i].body_velocity();
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace aiio::net
