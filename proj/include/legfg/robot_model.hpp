#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "legfg/factor_graph.hpp"
#include "legfg/lie.hpp"

namespace legfg {

enum class JointType { Revolute, Fixed };
enum class FootType { Point, Flat };

std::string toString(FootType type);
FootType footTypeFromString(const std::string& text);

/// A joint exactly as declared in the description document.
struct Joint {
  std::string name;
  JointType type = JointType::Fixed;
  std::string parent;
  std::string child;
  Vector3 origin_xyz = Vector3::Zero();
  Vector3 origin_rpy = Vector3::Zero();
  Vector3 axis = Vector3::UnitX();  ///< unit, revolute only

  Pose origin() const;
};

/// Revolute joint of a leg chain with neighbouring fixed joints folded in.
/// The child-link pose relative to the parent link is home · exp(screw · q).
struct ChainJoint {
  std::string name;
  std::string child_link;
  Pose home;
  Twist screw = Twist::Zero();  ///< expressed in the child frame at q = 0
};

struct LegChain {
  std::string foot_link;
  FootType foot_type = FootType::Point;
  std::vector<ChainJoint> joints;  ///< base → foot
};

/// Joint name → angle (rad).
using JointAngles = std::map<std::string, double>;

struct FootSpec {
  std::string link;
  FootType type = FootType::Point;
};

class RobotModel {
 public:
  /// Parses the supported description subset: robot, link, joint
  /// (revolute | continuous | fixed), origin, axis, parent, child, plus
  /// `<foot link=".." type="point|flat"/>` entries naming the leg ends.
  /// `feet`, when non-empty, replaces the document's foot entries. Ignored
  /// elements are reported through `warnings`.
  static RobotModel Parse(const std::string& text, const std::vector<FootSpec>& feet = {},
                          std::vector<std::string>* warnings = nullptr);
  static RobotModel Load(const std::string& path, std::vector<std::string>* warnings = nullptr);

  /// Deterministic text form that reparses to an identical model.
  std::string serialize() const;

  const std::string& name() const { return name_; }
  const std::string& baseLink() const { return base_link_; }
  const std::vector<std::string>& links() const { return links_; }
  const std::vector<Joint>& joints() const { return joints_; }
  const std::vector<LegChain>& legs() const { return legs_; }
  const LegChain& leg(int f) const { return legs_.at(static_cast<std::size_t>(f)); }
  int legCount() const { return static_cast<int>(legs_.size()); }
  /// Joint names of all chains, leg by leg, base to foot.
  std::vector<std::string> chainJointNames() const;

  bool operator==(const RobotModel& other) const;

 private:
  std::string name_;
  std::string base_link_;
  std::vector<std::string> links_;
  std::vector<Joint> joints_;
  std::vector<FootSpec> feet_;
  std::vector<LegChain> legs_;
};

/// home · exp(screw · q).
Pose jointTransform(const ChainJoint& joint, double q);

/// Base → foot transform of leg f. Throws ValidationError on a missing angle.
Pose fkChain(const RobotModel& model, int leg, const JointAngles& angles);
/// Base → child-link transforms of every joint of leg f.
std::vector<Pose> fkChainLinks(const RobotModel& model, int leg, const JointAngles& angles);

/// Log(T(q)⁻¹ · parent⁻¹ · child); zero when child = parent · T(q).
Twist fkFactorError(const Pose& parent, const Pose& child, const ChainJoint& joint, double q);

/// One kinematic link-to-link constraint measured through a joint encoder.
class JointFkFactor : public Factor {
 public:
  JointFkFactor(Key parent, Key child, ChainJoint joint, double q, GaussianNoise noise);

  Eigen::VectorXd error(const Values& values) const override;
  std::vector<Eigen::MatrixXd> jacobians(const Values& values) const override;
  bool hasAnalyticJacobians() const override { return true; }
  std::string name() const override { return "JointFkFactor"; }

 private:
  ChainJoint joint_;
  double q_;
  Pose measured_inverse_;
};

/// Analytic Jacobians of r = Log(Z⁻¹ A⁻¹ B) under right-perturbation
/// retraction, shared by the pose-to-pose kinematic factors.
void relativePoseJacobians(const Pose& a, const Pose& b, const Twist& r, Eigen::MatrixXd& Ha,
                           Eigen::MatrixXd& Hb);

/// Joint names and per-joint measurement index helpers.
std::vector<double> chainAngles(const LegChain& chain, const JointAngles& angles);

}  // namespace legfg
