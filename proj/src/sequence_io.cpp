#include "aiio/sequence_io.hpp"

#include "aiio/geometry.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace aiio::io {

namespace fs = std::filesystem;

std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  if (res.ec != std::errc()) throw InvalidArgument("cannot format number");
  return std::string(buf, res.ptr);
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Parsed CSV: metadata comments, header index, numeric rows with line numbers.
struct CsvTable {
  std::map<std::string, std::string> metadata;
  std::map<std::string, std::size_t> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> line_numbers;
  std::string source;

  std::optional<std::size_t> find(const std::string& canonical) const {
    if (auto it = columns.find(canonical); it != columns.end()) return it->second;
    const auto& aliases = column_aliases();
    if (auto a = aliases.find(canonical); a != aliases.end()) {
      for (const auto& alt : a->second) {
        if (auto it = columns.find(alt); it != columns.end()) return it->second;
      }
    }
    return std::nullopt;
  }

  std::size_t require(const std::string& canonical) const {
    if (auto c = find(canonical)) return *c;
    throw ParseError(source + ": missing column '" + canonical + "'");
  }
};

CsvTable read_table(std::istream& in, const std::string& source) {
  CsvTable table;
  table.source = source;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      if (have_header) continue;
      const std::string body = trim(t.substr(1));
      const auto eq = body.find('=');
      if (eq != std::string::npos) {
        table.metadata[trim(body.substr(0, eq))] = trim(body.substr(eq + 1));
      }
      continue;
    }
    const auto fields = split_csv(t);
    if (!have_header) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        const std::string name = lower(fields[i]);
        if (name.empty()) throw ParseError(source + ":" + std::to_string(line_no) + ": empty column name");
        if (!table.columns.emplace(name, i).second) {
          throw ParseError(source + ":" + std::to_string(line_no) + ": duplicate column '" + name + "'");
        }
      }
      have_header = true;
      continue;
    }
    if (fields.size() != table.columns.size()) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(table.columns.size()) + " fields, found " +
                       std::to_string(fields.size()));
    }
    std::vector<double> row(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      row[i] = parse_number(fields[i], source + ":" + std::to_string(line_no));
    }
    table.rows.push_back(std::move(row));
    table.line_numbers.push_back(line_no);
  }
  if (!have_header) throw ParseError(source + ": no header line");
  return table;
}

void check_increasing(const CsvTable& table, std::size_t t_col) {
  for (std::size_t k = 1; k < table.rows.size(); ++k) {
    if (!(table.rows[k][t_col] > table.rows[k - 1][t_col])) {
      throw MonotonicityViolation(table.source + ":" + std::to_string(table.line_numbers[k]) +
                                  ": timestamp " + format_number(table.rows[k][t_col]) +
                                  " does not increase");
    }
  }
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return in;
}

const char* const kStdNames[15] = {"std_rx",  "std_ry",  "std_rz",  "std_vx",  "std_vy",
                                   "std_vz",  "std_px",  "std_py",  "std_pz",  "std_bax",
                                   "std_bay", "std_baz", "std_bgx", "std_bgy", "std_bgz"};

}  // namespace

double parse_number(const std::string& field, const std::string& where) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last || field.empty()) {
    throw ParseError(where + ": cannot parse number '" + field + "'");
  }
  return value;
}

void write_atomic(const fs::path& path, const std::function<void(std::ostream&)>& writer) {
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write " + tmp.string());
    try {
      writer(out);
      out.flush();
      if (!out) throw InvalidArgument("write failed for " + path.string());
    } catch (...) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw;
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw InvalidArgument("cannot move output into place: " + path.string());
  }
}

void write_atomic(const fs::path& path, const std::string& content) {
  write_atomic(path, [&](std::ostream& out) { out << content; });
}

const std::map<std::string, std::vector<std::string>>& column_aliases() {
  static const std::map<std::string, std::vector<std::string>> aliases = {
      {"t", {"timestamp", "time", "t_s"}},
      {"gx", {"gyro_x", "omega_x", "ang_vel_x"}},
      {"gy", {"gyro_y", "omega_y", "ang_vel_y"}},
      {"gz", {"gyro_z", "omega_z", "ang_vel_z"}},
      {"ax", {"acc_x", "accel_x", "lin_acc_x"}},
      {"ay", {"acc_y", "accel_y", "lin_acc_y"}},
      {"az", {"acc_z", "accel_z", "lin_acc_z"}},
      {"w1", {"motor1", "motor_1", "rotor1", "rotor_1", "rpm1", "rpm_1"}},
      {"w2", {"motor2", "motor_2", "rotor2", "rotor_2", "rpm2", "rpm_2"}},
      {"w3", {"motor3", "motor_3", "rotor3", "rotor_3", "rpm3", "rpm_3"}},
      {"w4", {"motor4", "motor_4", "rotor4", "rotor_4", "rpm4", "rpm_4"}},
      {"gt_px", {"pos_x", "p_x"}},
      {"gt_py", {"pos_y", "p_y"}},
      {"gt_pz", {"pos_z", "p_z"}},
      {"gt_qw", {"quat_w", "q_w"}},
      {"gt_qx", {"quat_x", "q_x"}},
      {"gt_qy", {"quat_y", "q_y"}},
      {"gt_qz", {"quat_z", "q_z"}},
      {"gt_vx", {"vel_x", "v_x"}},
      {"gt_vy", {"vel_y", "v_y"}},
      {"gt_vz", {"vel_z", "v_z"}},
  };
  return aliases;
}

sim::SequenceLog parse_sequence(std::istream& in, const std::string& source_name) {
  const CsvTable table = read_table(in, source_name);
  const std::size_t c_t = table.require("t");
  check_increasing(table, c_t);

  std::array<std::size_t, 3> c_g{}, c_a{};
  std::array<std::size_t, 4> c_w{};
  for (int i = 0; i < 3; ++i) {
    c_g[i] = table.require(std::string("g") + "xyz"[i]);
    c_a[i] = table.require(std::string("a") + "xyz"[i]);
  }
  for (int i = 0; i < 4; ++i) c_w[i] = table.require("w" + std::to_string(i + 1));

  sim::SequenceLog log;
  log.metadata = table.metadata;
  double rotor_scale = 1.0;
  if (auto it = log.metadata.find("unit"); it != log.metadata.end()) {
    const std::string unit = lower(it->second);
    if (unit == "rpm") {
      rotor_scale = 2.0 * std::numbers::pi / 60.0;
      log.metadata["unit.source"] = "rpm";
      it->second = "rad/s";
    } else if (unit != "rad/s") {
      throw ParseError(source_name + ": unknown rotor unit '" + it->second + "'");
    }
  }

  const bool has_truth = table.find("gt_px").has_value();
  std::array<std::size_t, 3> c_p{}, c_v{};
  std::array<std::size_t, 4> c_q{};
  std::array<std::optional<std::size_t>, 3> c_wb{}, c_aw{};
  if (has_truth) {
    for (int i = 0; i < 3; ++i) {
      c_p[i] = table.require(std::string("gt_p") + "xyz"[i]);
      c_v[i] = table.require(std::string("gt_v") + "xyz"[i]);
      c_wb[i] = table.find(std::string("gt_w") + "xyz"[i]);
      c_aw[i] = table.find(std::string("gt_aw") + "xyz"[i]);
    }
    for (int i = 0; i < 4; ++i) c_q[i] = table.require(std::string("gt_q") + "wxyz"[i]);
  }

  log.frames.reserve(table.rows.size());
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    const auto& r = table.rows[k];
    SensorFrame f;
    f.t = r[c_t];
    for (int i = 0; i < 3; ++i) {
      f.gyro[i] = r[c_g[i]];
      f.accel[i] = r[c_a[i]];
    }
    for (int i = 0; i < 4; ++i) {
      f.rotor[static_cast<std::size_t>(i)] = r[c_w[i]] * rotor_scale;
      if (f.rotor[static_cast<std::size_t>(i)] < 0.0) {
        throw ParseError(source_name + ":" + std::to_string(table.line_numbers[k]) +
                         ": negative rotor speed");
      }
    }
    log.frames.push_back(f);

    if (has_truth) {
      sim::GroundTruthState s;
      s.t = f.t;
      const Eigen::Quaterniond q(r[c_q[0]], r[c_q[1]], r[c_q[2]], r[c_q[3]]);
      if (!(q.norm() > 0.5)) {
        throw ParseError(source_name + ":" + std::to_string(table.line_numbers[k]) +
                         ": ground-truth quaternion is not unit length");
      }
      s.R = geometry::from_quaternion(q);
      for (int i = 0; i < 3; ++i) {
        s.p[i] = r[c_p[i]];
        s.v[i] = r[c_v[i]];
        s.omega_body[i] = c_wb[i] ? r[*c_wb[i]] : 0.0;
        s.a_world[i] = c_aw[i] ? r[*c_aw[i]] : 0.0;
      }
      log.truth.push_back(s);
    }
  }
  log.validate();
  return log;
}

sim::SequenceLog load_sequence(const fs::path& path) {
  auto in = open_input(path);
  return parse_sequence(in, path.string());
}

void write_sequence(const sim::SequenceLog& log, std::ostream& out) {
  log.validate();
  for (const auto& [key, value] : log.metadata) out << "# " << key << '=' << value << '\n';
  out << "t,gx,gy,gz,ax,ay,az,w1,w2,w3,w4";
  const bool truth = log.has_truth();
  if (truth) {
    out << ",gt_px,gt_py,gt_pz,gt_qw,gt_qx,gt_qy,gt_qz,gt_vx,gt_vy,gt_vz"
           ",gt_wx,gt_wy,gt_wz,gt_awx,gt_awy,gt_awz";
  }
  out << '\n';
  for (std::size_t k = 0; k < log.frames.size(); ++k) {
    const auto& f = log.frames[k];
    out << format_number(f.t);
    for (int i = 0; i < 3; ++i) out << ',' << format_number(f.gyro[i]);
    for (int i = 0; i < 3; ++i) out << ',' << format_number(f.accel[i]);
    for (double w : f.rotor) out << ',' << format_number(w);
    if (truth) {
      const auto& s = log.truth[k];
      const Eigen::Quaterniond q = geometry::to_quaternion(s.R);
      for (int i = 0; i < 3; ++i) out << ',' << format_number(s.p[i]);
      out << ',' << format_number(q.w()) << ',' << format_number(q.x()) << ','
          << format_number(q.y()) << ',' << format_number(q.z());
      for (int i = 0; i < 3; ++i) out << ',' << format_number(s.v[i]);
      for (int i = 0; i < 3; ++i) out << ',' << format_number(s.omega_body[i]);
      for (int i = 0; i < 3; ++i) out << ',' << format_number(s.a_world[i]);
    }
    out << '\n';
  }
}

void save_sequence(const sim::SequenceLog& log, const fs::path& path) {
  write_atomic(path, [&](std::ostream& out) { write_sequence(log, out); });
}

std::vector<TrajectoryRow> trajectory_from_run(const eskf::FilterRun& run) {
  std::vector<TrajectoryRow> rows;
  rows.reserve(run.track.size());
  for (const auto& tp : run.track) {
    TrajectoryRow r;
    r.t = tp.t;
    r.p = tp.x.p;
    r.v = tp.x.v;
    r.q = geometry::to_quaternion(tp.x.R);
    for (int i = 0; i < 15; ++i) r.stddev[static_cast<std::size_t>(i)] = std::sqrt(std::max(tp.P(i, i), 0.0));
    rows.push_back(r);
  }
  return rows;
}

std::vector<TrajectoryRow> trajectory_from_truth(const std::vector<sim::GroundTruthState>& truth) {
  std::vector<TrajectoryRow> rows;
  rows.reserve(truth.size());
  for (const auto& s : truth) {
    TrajectoryRow r;
    r.t = s.t;
    r.p = s.p;
    r.v = s.v;
    r.q = geometry::to_quaternion(s.R);
    rows.push_back(r);
  }
  return rows;
}

void write_trajectory(const std::vector<TrajectoryRow>& rows, std::ostream& out) {
  out << "t,px,py,pz,vx,vy,vz,qw,qx,qy,qz";
  for (const char* n : kStdNames) out << ',' << n;
  out << '\n';
  for (const auto& r : rows) {
    out << format_number(r.t);
    for (int i = 0; i < 3; ++i) out << ',' << format_number(r.p[i]);
    for (int i = 0; i < 3; ++i) out << ',' << format_number(r.v[i]);
    out << ',' << format_number(r.q.w()) << ',' << format_number(r.q.x()) << ','
        << format_number(r.q.y()) << ',' << format_number(r.q.z());
    for (double s : r.stddev) out << ',' << format_number(s);
    out << '\n';
  }
}

void save_trajectory(const std::vector<TrajectoryRow>& rows, const fs::path& path) {
  write_atomic(path, [&](std::ostream& out) { write_trajectory(rows, out); });
}

std::vector<TrajectoryRow> load_trajectory(const fs::path& path) {
  auto in = open_input(path);
  const CsvTable table = read_table(in, path.string());
  if (!table.columns.count("px")) {
    // A sequence file: use its ground truth.
    std::ifstream again = open_input(path);
    const sim::SequenceLog log = parse_sequence(again, path.string());
    if (!log.has_truth()) throw ParseError(path.string() + ": no trajectory or ground-truth columns");
    return trajectory_from_truth(log.truth);
  }
  const std::size_t c_t = table.require("t");
  check_increasing(table, c_t);
  std::array<std::size_t, 3> c_p{}, c_v{};
  for (int i = 0; i < 3; ++i) {
    c_p[i] = table.require(std::string("p") + "xyz"[i]);
    c_v[i] = table.require(std::string("v") + "xyz"[i]);
  }
  std::array<std::optional<std::size_t>, 4> c_q{};
  for (int i = 0; i < 4; ++i) c_q[i] = table.find(std::string("q") + "wxyz"[i]);
  std::array<std::optional<std::size_t>, 15> c_s{};
  for (std::size_t i = 0; i < 15; ++i) c_s[i] = table.find(kStdNames[i]);

  std::vector<TrajectoryRow> rows;
  rows.reserve(table.rows.size());
  for (const auto& r : table.rows) {
    TrajectoryRow row;
    row.t = r[c_t];
    for (int i = 0; i < 3; ++i) {
      row.p[i] = r[c_p[i]];
      row.v[i] = r[c_v[i]];
    }
    if (c_q[0] && c_q[1] && c_q[2] && c_q[3]) {
      row.q = Eigen::Quaterniond(r[*c_q[0]], r[*c_q[1]], r[*c_q[2]], r[*c_q[3]]);
    }
    for (std::size_t i = 0; i < 15; ++i) row.stddev[i] = c_s[i] ? r[*c_s[i]] : 0.0;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace aiio::io
