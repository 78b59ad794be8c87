#pragma once

#include <map>
#include <string>
#include <vector>

#include "legfg/contact.hpp"
#include "legfg/imu_preint.hpp"
#include "legfg/lie.hpp"
#include "legfg/robot_model.hpp"

namespace legfg {

struct StampedPose {
  double t = 0.0;
  Pose pose;
};
using Trajectory = std::vector<StampedPose>;

struct JointSample {
  double t = 0.0;
  std::vector<double> angles;  ///< ordered as TrajectoryLog::joint_names
};

/// Measurement streams plus ground truth for one run. Only the fields marked
/// persisted survive a write/read round trip.
struct TrajectoryLog {
  // persisted
  std::vector<std::string> joint_names;
  std::vector<ImuSample> imu;          ///< each sample held until the next one
  std::vector<JointSample> joints;
  std::vector<ContactSample> contacts;
  Trajectory ground_truth;             ///< keyframe rate
  std::map<std::string, std::string> meta;
  std::vector<std::vector<Pose>> true_foot_poses;  ///< [sample][leg], world frame; optional

  // in memory only
  std::vector<Vector3> ground_truth_velocity;  ///< parallel to ground_truth

  double duration() const;
  JointAngles anglesAt(std::size_t sample) const;
  /// Index of the joint/contact sample nearest to t; throws when none lies
  /// within `tolerance`.
  std::size_t sampleIndexAt(double t, double tolerance = 1e-6) const;

  Vector3 initialVelocity() const;
  ImuBias trueBias() const;
};

/// Directory layout: imu.txt, joints.txt, contacts.txt, groundtruth.txt, meta.txt.
/// `with_feet` adds feet.txt (true foot poses) when the log has them.
void writeLog(const TrajectoryLog& log, const std::string& directory, bool with_feet = false);
TrajectoryLog readLog(const std::string& directory);

/// `t x y z qx qy qz qw` per line.
void writeTum(const Trajectory& trajectory, const std::string& path);
std::string formatTum(const Trajectory& trajectory);
Trajectory readTum(const std::string& path);
Trajectory parseTum(const std::string& text, const std::string& origin = "trajectory");

/// Three space-separated numbers, as stored in meta.txt.
Vector3 parseVector3(const std::string& text, const std::string& field);
std::string formatVector3(const Vector3& v);

void writeTextFile(const std::string& path, const std::string& content);
std::string readTextFile(const std::string& path);

}  // namespace legfg
