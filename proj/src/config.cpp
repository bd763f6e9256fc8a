#include "aiio/config.hpp"

#include "aiio/sequence_io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace aiio::config {

namespace {

// Reads typed values from one section and rejects keys nobody asked for.
class Section {
 public:
  Section(const ConfigFile& cfg, const std::string& name) : name_(name), source_(cfg.source) {
    if (auto it = cfg.sections.find(name); it != cfg.sections.end()) values_ = &it->second;
  }

  bool present() const { return values_ != nullptr; }

  const std::string* raw(const std::string& key) {
    known_.insert(key);
    if (!values_) return nullptr;
    auto it = values_->find(key);
    return it == values_->end() ? nullptr : &it->second;
  }

  std::string where(const std::string& key) const { return source_ + ": [" + name_ + "] " + key; }

  double number(const std::string& key, double fallback) {
    const std::string* v = raw(key);
    return v ? io::parse_number(*v, where(key)) : fallback;
  }

  double required(const std::string& key) {
    const std::string* v = raw(key);
    if (!v) throw ParseError(source_ + ": missing [" + name_ + "] " + key);
    return io::parse_number(*v, where(key));
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    const double x = number(key, static_cast<double>(fallback));
    if (!(x >= 0.0) || x != std::floor(x)) throw ParseError(where(key) + ": expected a non-negative integer");
    return static_cast<std::size_t>(x);
  }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
    const std::string* v = raw(key);
    if (!v) return fallback;
    try {
      std::size_t pos = 0;
      const unsigned long long s = std::stoull(*v, &pos);
      if (pos != v->size()) throw std::invalid_argument("trailing");
      return s;
    } catch (const std::exception&) {
      throw ParseError(where(key) + ": expected an unsigned integer");
    }
  }

  bool flag(const std::string& key, bool fallback) {
    const std::string* v = raw(key);
    if (!v) return fallback;
    if (*v == "1" || *v == "true" || *v == "yes" || *v == "on") return true;
    if (*v == "0" || *v == "false" || *v == "no" || *v == "off") return false;
    throw ParseError(where(key) + ": expected a boolean");
  }

  std::string text(const std::string& key, const std::string& fallback) {
    const std::string* v = raw(key);
    return v ? *v : fallback;
  }

  Vec3 vec3(const std::string& key, const Vec3& fallback) {
    const std::string* v = raw(key);
    if (!v) return fallback;
    std::istringstream is(*v);
    std::string a, b, c, extra;
    if (!(is >> a >> b >> c) || (is >> extra)) throw ParseError(where(key) + ": expected three numbers");
    return {io::parse_number(a, where(key)), io::parse_number(b, where(key)),
            io::parse_number(c, where(key))};
  }

  void finish() const {
    if (!values_) return;
    for (const auto& [key, value] : *values_) {
      if (!known_.count(key)) throw ParseError(source_ + ": unknown key [" + name_ + "] " + key);
    }
  }

 private:
  std::string name_;
  std::string source_;
  const std::map<std::string, std::string>* values_ = nullptr;
  std::set<std::string> known_;
};

}  // namespace

ConfigFile parse_config(std::istream& in, const std::string& source_name) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(source_name + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  ConfigFile cfg;
  cfg.source = source_name;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ParseError(source_name + ": key '" + section + "' outside a section");
    auto& dst = cfg.sections[section];
    for (const auto& [key, value] : body) dst[key] = value.get_value<std::string>();
  }
  return cfg;
}

ConfigFile load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return parse_config(in, path.string());
}

aero::AeroCoefficients read_aero(const ConfigFile& cfg) {
  Section s(cfg, "aero");
  if (!s.present()) throw ParseError(cfg.source + ": missing [aero] section");
  std::array<double, 9> values{};
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = s.required(aero::AeroCoefficients::names()[i]);
  s.finish();
  auto c = aero::AeroCoefficients::from_array(values);
  c.validate();
  return c;
}

std::string format_aero(const aero::AeroCoefficients& c) {
  std::ostringstream os;
  os << "[aero]\n";
  const auto values = c.to_array();
  for (std::size_t i = 0; i < values.size(); ++i) {
    os << aero::AeroCoefficients::names()[i] << " = " << io::format_number(values[i]) << '\n';
  }
  return os.str();
}

aero::AeroCoefficients aero_from_metadata(const std::map<std::string, std::string>& metadata) {
  std::array<double, 9> values{};
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::string key = std::string("aero.") + aero::AeroCoefficients::names()[i];
    auto it = metadata.find(key);
    if (it == metadata.end()) throw ParseError("sequence metadata lacks " + key);
    values[i] = io::parse_number(it->second, key);
  }
  auto c = aero::AeroCoefficients::from_array(values);
  c.validate();
  return c;
}

sim::NoiseConfig noise_from_metadata(const std::map<std::string, std::string>& metadata) {
  sim::NoiseConfig n;
  auto get = [&](const std::string& key, double& dst) {
    if (auto it = metadata.find("noise." + key); it != metadata.end()) {
      dst = io::parse_number(it->second, "noise." + key);
    }
  };
  get("sigma_g", n.sigma_g);
  get("sigma_a", n.sigma_a);
  get("sigma_bg", n.sigma_bg);
  get("sigma_ba", n.sigma_ba);
  return n;
}

sim::NoiseConfig read_noise(const ConfigFile& cfg, sim::NoiseConfig base) {
  Section s(cfg, "noise");
  base.sigma_g = s.number("sigma_g", base.sigma_g);
  base.sigma_a = s.number("sigma_a", base.sigma_a);
  base.sigma_bg = s.number("sigma_bg", base.sigma_bg);
  base.sigma_ba = s.number("sigma_ba", base.sigma_ba);
  base.initial_bias_g = s.vec3("bias_g", base.initial_bias_g);
  base.initial_bias_a = s.vec3("bias_a", base.initial_bias_a);
  base.seed = s.seed("seed", base.seed);
  s.finish();
  base.validate();
  return base;
}

sim::TrajectorySpec read_trajectory(const ConfigFile& cfg, sim::TrajectorySpec base) {
  Section s(cfg, "trajectory");
  if (const std::string* k = s.raw("kind")) base.kind = sim::trajectory_kind_from_string(*k);
  base.duration = s.number("duration", base.duration);
  base.sample_rate = s.number("sample_rate", base.sample_rate);
  base.height = s.number("height", base.height);
  base.radius = s.number("radius", base.radius);
  base.period = s.number("period", base.period);
  base.vertical_amplitude = s.number("vertical_amplitude", base.vertical_amplitude);
  base.vertical_period = s.number("vertical_period", base.vertical_period);
  base.max_speed = s.number("max_speed", base.max_speed);
  base.max_yaw = s.number("max_yaw", base.max_yaw);
  base.seed = s.seed("seed", base.seed);
  s.finish();
  base.validate();
  return base;
}

sim::SynthesisOptions read_synthesis(const ConfigFile& cfg, sim::SynthesisOptions base) {
  Section s(cfg, "sim");
  const std::string mode = s.text("mode", base.mode == sim::SensorMode::model_consistent
                                              ? "model_consistent"
                                              : "kinematic");
  if (mode == "model_consistent") {
    base.mode = sim::SensorMode::model_consistent;
  } else if (mode == "kinematic") {
    base.mode = sim::SensorMode::kinematic;
  } else {
    throw ParseError(s.where("mode") + ": expected model_consistent or kinematic");
  }
  base.model.with_coriolis = s.flag("coriolis", base.model.with_coriolis);
  const std::string drag =
      s.text("drag", base.model.drag == aero::DragForm::signed_square ? "signed" : "literal");
  if (drag == "signed") {
    base.model.drag = aero::DragForm::signed_square;
  } else if (drag == "literal") {
    base.model.drag = aero::DragForm::literal_square;
  } else {
    throw ParseError(s.where("drag") + ": expected signed or literal");
  }
  base.rotor_spread = s.number("rotor_spread", base.rotor_spread);
  s.finish();
  if (!(base.rotor_spread >= 0.0 && base.rotor_spread < 1.0)) {
    throw ParseError(s.where("rotor_spread") + ": must be in [0, 1)");
  }
  return base;
}

net::NetConfig read_net(const ConfigFile& cfg, net::NetConfig base) {
  Section s(cfg, "net");
  base.window = static_cast<int>(s.count("window", static_cast<std::size_t>(base.window)));
  base.use_rotor = s.flag("use_rotor", base.use_rotor);
  base.four_rotor_channels = s.flag("four_rotor_channels", base.four_rotor_channels);
  base.conv1_channels = static_cast<int>(s.count("conv1_channels", static_cast<std::size_t>(base.conv1_channels)));
  base.model_dim = static_cast<int>(s.count("model_dim", static_cast<std::size_t>(base.model_dim)));
  base.kernel = static_cast<int>(s.count("kernel", static_cast<std::size_t>(base.kernel)));
  base.heads = static_cast<int>(s.count("heads", static_cast<std::size_t>(base.heads)));
  base.ff_hidden = static_cast<int>(s.count("ff_hidden", static_cast<std::size_t>(base.ff_hidden)));
  s.finish();
  base.validate();
  return base;
}

net::TrainConfig read_train(const ConfigFile& cfg, net::TrainConfig base) {
  Section s(cfg, "train");
  base.learning_rate = s.number("learning_rate", base.learning_rate);
  base.batch_size = s.count("batch_size", base.batch_size);
  base.epochs = s.count("epochs", base.epochs);
  base.huber_delta = s.number("huber_delta", base.huber_delta);
  base.patience = s.count("patience", base.patience);
  base.min_improvement = s.number("min_improvement", base.min_improvement);
  base.nll_reserve_epochs = s.count("nll_reserve_epochs", base.nll_reserve_epochs);
  base.seed = s.seed("seed", base.seed);
  base.threads = s.count("threads", base.threads);
  s.finish();
  base.validate();
  return base;
}

net::WindowOptions read_windows(const ConfigFile& cfg, net::WindowOptions base) {
  Section s(cfg, "windows");
  const std::string mode = s.text("mode", base.mode == net::WindowMode::online ? "online" : "offline");
  if (mode == "online") {
    base.mode = net::WindowMode::online;
  } else if (mode == "offline") {
    base.mode = net::WindowMode::offline;
  } else {
    throw ParseError(s.where("mode") + ": expected online or offline");
  }
  base.online_stride = s.count("stride", base.online_stride);
  s.finish();
  if (base.online_stride == 0) throw ParseError(s.where("stride") + ": must be positive");
  return base;
}

FilterSettings read_filter(const ConfigFile& cfg, FilterSettings base) {
  Section s(cfg, "filter");
  auto& f = base.filter;
  f.update_rate = s.number("update_rate", f.update_rate);
  f.window = s.count("window", f.window);
  f.gate = s.number("gate", f.gate);
  f.init_attitude_var = s.number("init_attitude_var", f.init_attitude_var);
  f.init_velocity_var = s.number("init_velocity_var", f.init_velocity_var);
  f.init_position_var = s.number("init_position_var", f.init_position_var);
  f.init_accel_bias_var = s.number("init_accel_bias_var", f.init_accel_bias_var);
  f.init_gyro_bias_var = s.number("init_gyro_bias_var", f.init_gyro_bias_var);
  base.aero.fit_frames = s.count("aero_fit_frames", base.aero.fit_frames);
  base.aero.model_sigma = s.number("aero_model_sigma", base.aero.model_sigma);
  base.truth_sigma = s.number("truth_sigma", base.truth_sigma);
  s.finish();
  f.validate();
  return base;
}

}  // namespace aiio::config
