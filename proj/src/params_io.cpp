#include "aiio/params_io.hpp"

#include "aiio/sequence_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <ostream>

namespace aiio::io {

namespace {

constexpr char kMagic[4] = {'A', 'I', 'I', 'O'};
constexpr std::uint32_t kMaxNameLength = 256;
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 28;

template <class U>
void put_le(std::ostream& out, U value) {
  char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  out.write(bytes, sizeof(U));
}

template <class U>
U get_le(std::istream& in) {
  unsigned char bytes[sizeof(U)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(U));
  if (!in) throw ParseError("params file truncated");
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

void put_tensor(std::ostream& out, const std::string& name, const Eigen::MatrixXd& m, bool vector) {
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  if (vector) {
    put_le<std::uint32_t>(out, 1);
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.size()));
  } else {
    put_le<std::uint32_t>(out, 2);
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(m(r, c)));
  }
}

struct RawTensor {
  std::vector<std::uint64_t> dims;
  std::vector<double> values;
};

RawTensor get_tensor(std::istream& in, std::string& name) {
  const auto len = get_le<std::uint32_t>(in);
  if (len == 0 || len > kMaxNameLength) throw ParseError("params file: bad tensor name length");
  name.assign(len, '\0');
  in.read(name.data(), len);
  if (!in) throw ParseError("params file truncated");
  RawTensor t;
  const auto rank = get_le<std::uint32_t>(in);
  if (rank == 0 || rank > 2) throw ParseError("params file: unsupported rank for " + name);
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    t.dims.push_back(get_le<std::uint64_t>(in));
    count *= t.dims.back();
    if (count > kMaxElements) throw ParseError("params file: tensor too large: " + name);
  }
  t.values.resize(count);
  for (auto& v : t.values) v = std::bit_cast<double>(get_le<std::uint64_t>(in));
  return t;
}

Eigen::MatrixXd config_vector(const net::NetConfig& c) {
  Eigen::MatrixXd m(1, 8);
  m << c.window, c.use_rotor ? 1.0 : 0.0, c.four_rotor_channels ? 1.0 : 0.0, c.conv1_channels,
      c.model_dim, c.kernel, c.heads, c.ff_hidden;
  return m;
}

net::NetConfig config_from(const RawTensor& t) {
  if (t.values.size() != 8) throw ParseError("params file: bad meta.config");
  net::NetConfig c;
  c.window = static_cast<int>(t.values[0]);
  c.use_rotor = t.values[1] != 0.0;
  c.four_rotor_channels = t.values[2] != 0.0;
  c.conv1_channels = static_cast<int>(t.values[3]);
  c.model_dim = static_cast<int>(t.values[4]);
  c.kernel = static_cast<int>(t.values[5]);
  c.heads = static_cast<int>(t.values[6]);
  c.ff_hidden = static_cast<int>(t.values[7]);
  c.validate();
  return c;
}

}  // namespace

void write_params(const ModelBundle& bundle, std::ostream& out) {
  out.write(kMagic, 4);
  put_le<std::uint32_t>(out, kParamsVersion);
  std::uint32_t count = 2;
  bundle.params.for_each([&](const char*, const Eigen::MatrixXd&) { ++count; });
  put_le<std::uint32_t>(out, count);

  put_tensor(out, "meta.config", config_vector(bundle.params.config), true);
  Eigen::MatrixXd norm(1, 3);
  norm << bundle.normalizer.initial_mean(), bundle.normalizer.initial_stddev(),
      bundle.normalizer.prior_count();
  put_tensor(out, "meta.normalizer", norm, true);
  bundle.params.for_each(
      [&](const char* name, const Eigen::MatrixXd& m) { put_tensor(out, name, m, false); });
}

ModelBundle read_params(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw ParseError("params file: bad magic");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kParamsVersion) {
    throw ParseError("params file: unsupported version " + std::to_string(version));
  }
  const auto count = get_le<std::uint32_t>(in);

  std::map<std::string, RawTensor> tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name;
    RawTensor t = get_tensor(in, name);
    if (!tensors.emplace(name, std::move(t)).second) {
      throw ParseError("params file: duplicate tensor " + name);
    }
  }
  auto take = [&](const std::string& name) -> const RawTensor& {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw ParseError("params file: missing tensor " + name);
    return it->second;
  };

  ModelBundle bundle;
  const net::NetConfig config = config_from(take("meta.config"));
  bundle.params = net::NetParams::initialize(config, 0);
  const RawTensor& norm = take("meta.normalizer");
  if (norm.values.size() != 3) throw ParseError("params file: bad meta.normalizer");
  bundle.normalizer = net::RotorNormalizer(norm.values[0], norm.values[1], norm.values[2]);

  bundle.params.for_each([&](const char* name, Eigen::MatrixXd& m) {
    const RawTensor& t = take(name);
    if (t.dims.size() != 2 || t.dims[0] != static_cast<std::uint64_t>(m.rows()) ||
        t.dims[1] != static_cast<std::uint64_t>(m.cols())) {
      throw ParseError(std::string("params file: shape mismatch for ") + name);
    }
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = t.values[k++];
    }
  });
  std::uint32_t expected = 2;
  bundle.params.for_each([&](const char*, const Eigen::MatrixXd&) { ++expected; });
  if (count != expected) {
    throw ParseError("params file: unexpected tensors");
  }
  return bundle;
}

void save_params(const ModelBundle& bundle, const std::filesystem::path& path) {
  write_atomic(path, [&](std::ostream& out) { write_params(bundle, out); });
}

ModelBundle load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  return read_params(in);
}

void write_loss_history(const std::vector<net::EpochRecord>& history, std::ostream& out) {
  out << "epoch,huber,nll\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << format_number(r.huber) << ',' << format_number(r.nll) << '\n';
  }
}

void save_loss_history(const std::vector<net::EpochRecord>& history,
                       const std::filesystem::path& path) {
  write_atomic(path, [&](std::ostream& out) { write_loss_history(history, out); });
}

}  // namespace aiio::io
