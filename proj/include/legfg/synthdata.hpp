#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "legfg/config.hpp"
#include "legfg/imu_preint.hpp"
#include "legfg/lie.hpp"
#include "legfg/robot_model.hpp"
#include "legfg/trajectory_log.hpp"

namespace legfg {

enum class GaitType { Trot, Walk, Stand };
enum class PathShape { Straight, Diagonal, Turn, ZigZag };

std::string toString(GaitType gait);
std::string toString(PathShape shape);
GaitType gaitFromString(const std::string& text);
PathShape shapeFromString(const std::string& text);

/// Measurement corruption applied by the generator.
struct SynthNoise {
  double gyro_density = 1.7e-4;   ///< rad/s/√Hz
  double accel_density = 2e-3;    ///< m/s²/√Hz
  double joint_sigma = 1e-3;      ///< rad
  double contact_flip_probability = 0.0;
  Vector3 gyro_bias = Vector3::Zero();
  Vector3 accel_bias = Vector3::Zero();
  bool bias_random_walk = false;
  double gyro_bias_walk = 1e-5;   ///< rad/s²/√Hz
  double accel_bias_walk = 1e-4;  ///< m/s³/√Hz

  static SynthNoise Zero();
};

struct GaitSpec {
  std::string model = "quadruped";  ///< built-in name or description file path
  GaitType gait = GaitType::Trot;
  PathShape shape = PathShape::Straight;
  double stance_duration = 0.3;  ///< s
  double swing_duration = 0.3;   ///< s
  double step_length = 0.15;     ///< base travel per gait cycle at cruise speed (m)
  double step_height = 0.06;     ///< m
  double base_height = 0.28;     ///< m
  double duration = 10.0;        ///< s
  double ramp_time = 1.0;        ///< speed ramp at each end (s)
  double diagonal_angle = 45.0;  ///< deg, heading of the diagonal path
  double turn_angle = 90.0;      ///< deg, total heading change of the turn
  int zigzag_segments = 4;
  double zigzag_angle = 30.0;    ///< deg, heading magnitude of each leg of the zig-zag
  double sway_roll = 1.0;        ///< deg, body roll oscillation at cruise speed
  double sway_pitch = 1.0;       ///< deg
  double sway_height = 0.0;      ///< m, vertical bob at twice the gait frequency
  std::uint64_t seed = 1;
  double imu_rate = 200.0;       ///< Hz, also the joint and contact rate
  double keyframe_rate = 50.0;   ///< Hz, ground-truth rate
  SynthNoise noise;

  /// Defaults for a built-in robot ("quadruped" or "biped").
  static GaitSpec Defaults(const std::string& model);
  /// Reads flat keys ("gait", "shape", ..., "noise.gyro_density", ...) over
  /// the defaults of the selected model. Unknown keys are rejected.
  static GaitSpec FromConfig(const KeyValueConfig& config);
  /// Every field, fully expanded, in the form FromConfig reads.
  KeyValueConfig toConfig() const;

  double cycleTime() const { return stance_duration + swing_duration; }
  double dutyFactor() const { return stance_duration / cycleTime(); }
  double cruiseSpeed() const;
  void validate() const;
};

/// Commanded base motion: speed ramps at both ends, heading as a function of
/// travelled distance, optional sway scaled by speed. Stationary outside
/// [0, duration].
class BaseCurve {
 public:
  struct Sample {
    Vector3 position;
    Vector3 velocity;
    Vector3 acceleration;
    double yaw = 0.0;
    double yaw_rate = 0.0;
    double roll = 0.0;
    double pitch = 0.0;
    Pose pose() const { return Pose::FromRpy(roll, pitch, yaw, position); }
  };

  explicit BaseCurve(const GaitSpec& spec);

  Sample evaluate(double t) const;
  double speed(double t) const;
  double distance(double t) const;
  double totalDistance() const { return distance(duration_); }
  /// Heading of the path tangent at travelled distance d.
  double heading(double d) const;

 private:
  double headingRate(double d) const;  // dψ/dd
  double bodyYaw(double d) const;
  Vector3 planarPosition(double d) const;

  PathShape shape_;
  double duration_;
  double ramp_;
  double cruise_;
  double height_;
  double diagonal_;
  double turn_;
  int segments_;
  double zigzag_;
  double sway_roll_;
  double sway_pitch_;
  double sway_height_;
  double sway_omega_;
  double total_;
  double panel_;
  std::vector<Vector3> panel_positions_;  // planar position at panel boundaries
};

/// Foot placement schedule in integer sample units.
struct LegSchedule {
  int period = 0;   ///< samples per gait cycle
  int stance = 0;   ///< stance samples per cycle
  int offset = 0;   ///< start of the first stance (samples, in [0, period))

  bool inStance(long sample) const;
  /// First sample of the stance that contains `sample`, or of the next one.
  long stanceStart(long sample) const;
};

std::vector<LegSchedule> gaitSchedule(const GaitSpec& spec, int leg_count);

/// Closed-form inverse kinematics of a hip-abduction / thigh / calf leg.
class ThreeJointLegIk {
 public:
  /// Throws ValidationError if the chain does not have that topology.
  ThreeJointLegIk(const RobotModel& model, int leg);
  /// Joint angles placing the foot at `foot_in_base`; knee-backward branch.
  /// Throws ValidationError (naming t and the leg) when out of reach.
  Vector3 solve(const Vector3& foot_in_base, double t) const;

 private:
  std::string foot_;
  Vector3 hip_point_;
  double pivot_drop_ = 0.0;  // thigh axis height above the hip axis
  double lateral_ = 0.0;   // hip axis → thigh plane offset along y
  double forward_ = 0.0;   // hip axis → thigh axis offset along x
  double thigh_ = 0.0;
  double shank_ = 0.0;
};

/// Damped Newton inverse kinematics on the full foot pose for any chain.
Eigen::VectorXd solveChainIk(const RobotModel& model, int leg, const Pose& foot_in_base,
                             const Eigen::VectorXd& initial, double t);

/// Generates a complete log: ground truth, IMU, joints, contacts.
TrajectoryLog synthesize(const GaitSpec& spec, const RobotModel& model);

/// Loads a built-in model by name or a description file by path.
RobotModel resolveModel(const std::string& name_or_path);
/// Text of a built-in model, or empty when `name` is not built in.
std::string builtinModelText(const std::string& name);

}  // namespace legfg
