#include "legfg/trajectory_log.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "legfg/config.hpp"

namespace legfg {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> splitWhitespace(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

template <typename Fn>
void forEachLine(const std::string& text, const std::string& origin, Fn&& fn) {
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    fn(splitWhitespace(line), origin + ":" + std::to_string(lineno));
  }
}

}  // namespace

Vector3 parseVector3(const std::string& text, const std::string& field) {
  const auto tok = splitWhitespace(text);
  if (tok.size() != 3) throw ValidationError("field '" + field + "' needs three numbers");
  return Vector3(parseDouble(tok[0], field), parseDouble(tok[1], field), parseDouble(tok[2], field));
}

std::string formatVector3(const Vector3& v) {
  return formatDouble(v.x()) + " " + formatDouble(v.y()) + " " + formatDouble(v.z());
}

void writeTextFile(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << content;
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::string readTextFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double TrajectoryLog::duration() const {
  if (imu.empty()) return 0.0;
  return joints.empty() ? imu.back().t - imu.front().t : joints.back().t - joints.front().t;
}

JointAngles TrajectoryLog::anglesAt(std::size_t sample) const {
  const JointSample& s = joints.at(sample);
  JointAngles out;
  for (std::size_t i = 0; i < joint_names.size(); ++i) out[joint_names[i]] = s.angles.at(i);
  return out;
}

std::size_t TrajectoryLog::sampleIndexAt(double t, double tolerance) const {
  auto it = std::lower_bound(joints.begin(), joints.end(), t,
                             [](const JointSample& s, double v) { return s.t < v; });
  std::size_t best = joints.size();
  double best_dt = tolerance;
  for (auto cand : {it, it == joints.begin() ? it : it - 1}) {
    if (cand == joints.end()) continue;
    const double d = std::abs(cand->t - t);
    if (d <= best_dt) {
      best_dt = d;
      best = static_cast<std::size_t>(cand - joints.begin());
    }
  }
  if (best == joints.size()) {
    throw ValidationError("no joint sample within " + formatDouble(tolerance) + " s of t=" + formatDouble(t));
  }
  return best;
}

Vector3 TrajectoryLog::initialVelocity() const {
  auto it = meta.find("init_velocity");
  return it == meta.end() ? Vector3::Zero() : parseVector3(it->second, "init_velocity");
}

ImuBias TrajectoryLog::trueBias() const {
  ImuBias b;
  if (auto it = meta.find("true_gyro_bias"); it != meta.end()) b.gyro = parseVector3(it->second, it->first);
  if (auto it = meta.find("true_accel_bias"); it != meta.end()) b.accel = parseVector3(it->second, it->first);
  return b;
}

std::string formatTum(const Trajectory& trajectory) {
  std::ostringstream os;
  for (const auto& s : trajectory) {
    const Eigen::Quaterniond q = s.pose.quaternion();
    const Vector3& p = s.pose.translation();
    os << formatDouble(s.t) << ' ' << formatDouble(p.x()) << ' ' << formatDouble(p.y()) << ' '
       << formatDouble(p.z()) << ' ' << formatDouble(q.x()) << ' ' << formatDouble(q.y()) << ' '
       << formatDouble(q.z()) << ' ' << formatDouble(q.w()) << '\n';
  }
  return os.str();
}

void writeTum(const Trajectory& trajectory, const std::string& path) {
  writeTextFile(path, formatTum(trajectory));
}

Trajectory parseTum(const std::string& text, const std::string& origin) {
  Trajectory out;
  forEachLine(text, origin, [&out](const std::vector<std::string>& tok, const std::string& where) {
    if (tok.size() != 8) throw ValidationError(where + ": expected 8 columns (t x y z qx qy qz qw)");
    double v[8];
    for (int i = 0; i < 8; ++i) v[i] = parseDouble(tok[i], where);
    const Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
    if (!(q.norm() > 1e-9)) throw ValidationError(where + ": zero quaternion");
    out.push_back({v[0], Pose::FromQuaternion(q, Vector3(v[1], v[2], v[3]))});
  });
  return out;
}

Trajectory readTum(const std::string& path) { return parseTum(readTextFile(path), path); }

void writeLog(const TrajectoryLog& log, const std::string& directory, bool with_feet) {
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw IoError("cannot create directory '" + directory + "': " + ec.message());
  const fs::path dir(directory);

  {
    std::ostringstream os;
    for (const auto& s : log.imu) {
      os << formatDouble(s.t);
      for (int i = 0; i < 3; ++i) os << ' ' << formatDouble(s.omega[i]);
      for (int i = 0; i < 3; ++i) os << ' ' << formatDouble(s.accel[i]);
      os << '\n';
    }
    writeTextFile((dir / "imu.txt").string(), os.str());
  }
  {
    std::ostringstream os;
    for (const auto& s : log.joints) {
      os << formatDouble(s.t);
      for (std::size_t i = 0; i < log.joint_names.size(); ++i) {
        os << ' ' << log.joint_names[i] << ':' << formatDouble(s.angles.at(i));
      }
      os << '\n';
    }
    writeTextFile((dir / "joints.txt").string(), os.str());
  }
  {
    std::ostringstream os;
    for (const auto& s : log.contacts) {
      os << formatDouble(s.t);
      for (auto f : s.in_contact) os << ' ' << (f ? 1 : 0);
      os << '\n';
    }
    writeTextFile((dir / "contacts.txt").string(), os.str());
  }
  writeTum(log.ground_truth, (dir / "groundtruth.txt").string());
  if (with_feet && !log.true_foot_poses.empty()) {
    std::ostringstream os;
    for (std::size_t s = 0; s < log.true_foot_poses.size() && s < log.joints.size(); ++s) {
      os << formatDouble(log.joints[s].t);
      for (const Pose& p : log.true_foot_poses[s]) {
        const Eigen::Quaterniond q = p.quaternion();
        os << ' ' << formatVector3(p.translation()) << ' ' << formatDouble(q.x()) << ' ' << formatDouble(q.y())
           << ' ' << formatDouble(q.z()) << ' ' << formatDouble(q.w());
      }
      os << '\n';
    }
    writeTextFile((dir / "feet.txt").string(), os.str());
  }
  {
    std::ostringstream os;
    for (const auto& [k, v] : log.meta) os << k << '=' << v << '\n';
    writeTextFile((dir / "meta.txt").string(), os.str());
  }
}

TrajectoryLog readLog(const std::string& directory) {
  const fs::path dir(directory);
  if (!fs::is_directory(dir)) throw IoError("log directory '" + directory + "' does not exist");
  TrajectoryLog log;

  const std::string imu_path = (dir / "imu.txt").string();
  forEachLine(readTextFile(imu_path), imu_path, [&log](const auto& tok, const std::string& where) {
    if (tok.size() != 7) throw ValidationError(where + ": expected 7 columns (t wx wy wz ax ay az)");
    ImuSample s;
    s.t = parseDouble(tok[0], where);
    for (int i = 0; i < 3; ++i) s.omega[i] = parseDouble(tok[1 + i], where);
    for (int i = 0; i < 3; ++i) s.accel[i] = parseDouble(tok[4 + i], where);
    if (!log.imu.empty() && !(s.t > log.imu.back().t)) {
      throw ValidationError(where + ": IMU timestamps must be strictly increasing");
    }
    log.imu.push_back(s);
  });

  const std::string joints_path = (dir / "joints.txt").string();
  forEachLine(readTextFile(joints_path), joints_path, [&log](const auto& tok, const std::string& where) {
    if (tok.empty()) return;
    JointSample s;
    s.t = parseDouble(tok[0], where);
    std::vector<std::string> names;
    for (std::size_t i = 1; i < tok.size(); ++i) {
      const auto colon = tok[i].rfind(':');
      if (colon == std::string::npos) throw ValidationError(where + ": expected name:angle, got '" + tok[i] + "'");
      names.push_back(tok[i].substr(0, colon));
      s.angles.push_back(parseDouble(tok[i].substr(colon + 1), where));
    }
    if (log.joint_names.empty()) {
      log.joint_names = names;
    } else if (names != log.joint_names) {
      throw ValidationError(where + ": joint ordering differs from the first line");
    }
    log.joints.push_back(std::move(s));
  });

  const std::string contacts_path = (dir / "contacts.txt").string();
  forEachLine(readTextFile(contacts_path), contacts_path, [&log](const auto& tok, const std::string& where) {
    ContactSample s;
    s.t = parseDouble(tok.at(0), where);
    for (std::size_t i = 1; i < tok.size(); ++i) {
      if (tok[i] != "0" && tok[i] != "1") throw ValidationError(where + ": contact flags must be 0 or 1");
      s.in_contact.push_back(tok[i] == "1" ? 1 : 0);
    }
    log.contacts.push_back(std::move(s));
  });

  log.ground_truth = readTum((dir / "groundtruth.txt").string());

  const std::string feet_path = (dir / "feet.txt").string();
  if (fs::exists(feet_path)) {
    forEachLine(readTextFile(feet_path), feet_path, [&log](const auto& tok, const std::string& where) {
      if (tok.size() % 7 != 1) throw ValidationError(where + ": expected t then 7 numbers per foot");
      std::vector<Pose> feet;
      for (std::size_t i = 1; i < tok.size(); i += 7) {
        double v[7];
        for (int j = 0; j < 7; ++j) v[j] = parseDouble(tok[i + static_cast<std::size_t>(j)], where);
        feet.push_back(Pose::FromQuaternion(Eigen::Quaterniond(v[6], v[3], v[4], v[5]), Vector3(v[0], v[1], v[2])));
      }
      log.true_foot_poses.push_back(std::move(feet));
    });
  }

  const std::string meta_path = (dir / "meta.txt").string();
  const KeyValueConfig meta = KeyValueConfig::Parse(readTextFile(meta_path), meta_path);
  log.meta = meta.entries();
  return log;
}

}  // namespace legfg
