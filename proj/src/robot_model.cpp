#include "legfg/robot_model.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <iomanip>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

namespace legfg {

namespace pt = boost::property_tree;

std::string toString(FootType type) { return type == FootType::Flat ? "flat" : "point"; }

FootType footTypeFromString(const std::string& text) {
  if (text == "point") return FootType::Point;
  if (text == "flat") return FootType::Flat;
  throw ValidationError("unknown foot type '" + text + "' (expected point or flat)");
}

Pose Joint::origin() const {
  return Pose::FromRpy(origin_rpy.x(), origin_rpy.y(), origin_rpy.z(), origin_xyz);
}

namespace {

double parseNumber(const std::string& token, const std::string& context) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != token.size()) {
    throw ValidationError("malformed number '" + token + "' in " + context);
  }
  return v;
}

Vector3 parseTriple(const std::string& text, const std::string& context) {
  std::istringstream is(text);
  std::vector<std::string> tokens;
  std::string tok;
  while (is >> tok) tokens.push_back(tok);
  if (tokens.size() != 3) {
    throw ValidationError("expected three numbers in " + context + ", got '" + text + "'");
  }
  return Vector3(parseNumber(tokens[0], context), parseNumber(tokens[1], context),
                 parseNumber(tokens[2], context));
}

std::string attribute(const pt::ptree& node, const std::string& name, const std::string& context) {
  auto v = node.get_optional<std::string>("<xmlattr>." + name);
  if (!v) throw ValidationError(context + " is missing attribute '" + name + "'");
  return *v;
}

std::string formatTriple(const Vector3& v) {
  std::ostringstream os;
  os << std::setprecision(17) << v.x() << ' ' << v.y() << ' ' << v.z();
  return os.str();
}

}  // namespace

RobotModel RobotModel::Parse(const std::string& text, const std::vector<FootSpec>& feet,
                             std::vector<std::string>* warnings) {
  pt::ptree doc;
  try {
    std::istringstream is(text);
    pt::read_xml(is, doc, pt::xml_parser::trim_whitespace);
  } catch (const pt::xml_parser_error& e) {
    throw ValidationError(std::string("malformed robot description: ") + e.what());
  }
  auto robot_node = doc.get_child_optional("robot");
  if (!robot_node) throw ValidationError("robot description has no <robot> element");

  auto warn = [warnings](const std::string& msg) {
    if (warnings) warnings->push_back(msg);
  };

  RobotModel model;
  model.name_ = robot_node->get<std::string>("<xmlattr>.name", "robot");
  std::vector<FootSpec> declared_feet;

  for (const auto& [tag, node] : *robot_node) {
    if (tag == "<xmlattr>" || tag == "<xmlcomment>") continue;
    if (tag == "link") {
      const std::string name = attribute(node, "name", "link");
      if (std::find(model.links_.begin(), model.links_.end(), name) != model.links_.end()) {
        throw ValidationError("duplicate link '" + name + "'");
      }
      model.links_.push_back(name);
      for (const auto& [child_tag, child] : node) {
        if (child_tag == "<xmlattr>" || child_tag == "<xmlcomment>") continue;
        warn("ignored element <" + child_tag + "> in link '" + name + "'");
      }
    } else if (tag == "joint") {
      Joint j;
      j.name = attribute(node, "name", "joint");
      const std::string context = "joint '" + j.name + "'";
      const std::string type = attribute(node, "type", context);
      if (type == "revolute" || type == "continuous") {
        j.type = JointType::Revolute;
      } else if (type == "fixed") {
        j.type = JointType::Fixed;
      } else {
        throw ValidationError(context + " has unsupported type '" + type + "'");
      }
      bool has_axis = false;
      for (const auto& [child_tag, child] : node) {
        if (child_tag == "<xmlattr>" || child_tag == "<xmlcomment>") continue;
        if (child_tag == "parent") {
          j.parent = attribute(child, "link", context + " <parent>");
        } else if (child_tag == "child") {
          j.child = attribute(child, "link", context + " <child>");
        } else if (child_tag == "origin") {
          j.origin_xyz = parseTriple(child.get<std::string>("<xmlattr>.xyz", "0 0 0"), context);
          j.origin_rpy = parseTriple(child.get<std::string>("<xmlattr>.rpy", "0 0 0"), context);
        } else if (child_tag == "axis") {
          j.axis = parseTriple(attribute(child, "xyz", context + " <axis>"), context);
          has_axis = true;
        } else {
          warn("ignored element <" + child_tag + "> in " + context);
        }
      }
      if (j.parent.empty()) throw ValidationError(context + " has no parent link");
      if (j.child.empty()) throw ValidationError(context + " has no child link");
      if (j.type == JointType::Revolute) {
        if (!has_axis) j.axis = Vector3::UnitX();
        const double n = j.axis.norm();
        if (!(n > 1e-12)) throw ValidationError(context + " has a zero axis");
        j.axis /= n;
      } else {
        j.axis = Vector3::UnitX();
      }
      for (const auto& other : model.joints_) {
        if (other.name == j.name) throw ValidationError("duplicate joint '" + j.name + "'");
      }
      model.joints_.push_back(std::move(j));
    } else if (tag == "foot") {
      FootSpec f;
      f.link = attribute(node, "link", "foot");
      f.type = footTypeFromString(node.get<std::string>("<xmlattr>.type", "point"));
      declared_feet.push_back(f);
    } else {
      warn("ignored element <" + tag + ">");
    }
  }

  // Link/joint graph validation.
  const std::set<std::string> link_set(model.links_.begin(), model.links_.end());
  std::map<std::string, const Joint*> parent_joint;
  for (const auto& j : model.joints_) {
    if (!link_set.count(j.parent)) {
      throw ValidationError("joint '" + j.name + "' references unknown parent link '" + j.parent + "'");
    }
    if (!link_set.count(j.child)) {
      throw ValidationError("joint '" + j.name + "' references unknown child link '" + j.child + "'");
    }
  }
  {
    // Directed cycle search over parent → child edges; the back edge names the joint.
    std::map<std::string, std::vector<const Joint*>> children;
    for (const auto& j : model.joints_) children[j.parent].push_back(&j);
    std::map<std::string, int> state;  // 0 unvisited, 1 on stack, 2 done
    std::function<void(const std::string&)> visit = [&](const std::string& link) {
      state[link] = 1;
      for (const Joint* j : children[link]) {
        if (state[j->child] == 1) throw ValidationError("kinematic cycle through joint '" + j->name + "'");
        if (state[j->child] == 0) visit(j->child);
      }
      state[link] = 2;
    };
    for (const auto& l : model.links_) {
      if (state[l] == 0) visit(l);
    }
  }
  for (const auto& j : model.joints_) {
    auto [it, inserted] = parent_joint.emplace(j.child, &j);
    if (!inserted) {
      throw ValidationError("link '" + j.child + "' has two parent joints ('" + it->second->name +
                            "' and '" + j.name + "')");
    }
  }
  std::vector<std::string> roots;
  for (const auto& l : model.links_) {
    if (!parent_joint.count(l)) roots.push_back(l);
  }
  if (roots.empty()) throw ValidationError("robot description has no links");
  if (roots.size() > 1) {
    throw ValidationError("robot description is not a single tree (roots '" + roots[0] + "' and '" +
                          roots[1] + "')");
  }
  model.base_link_ = roots.front();

  model.feet_ = feet.empty() ? declared_feet : feet;
  if (model.feet_.empty()) throw ValidationError("no foot links configured");

  for (const FootSpec& foot : model.feet_) {
    if (!link_set.count(foot.link)) throw ValidationError("missing foot link '" + foot.link + "'");
    std::vector<const Joint*> path;
    for (std::string link = foot.link; link != model.base_link_;) {
      const Joint* j = parent_joint.at(link);
      path.push_back(j);
      link = j->parent;
    }
    std::reverse(path.begin(), path.end());

    LegChain chain;
    chain.foot_link = foot.link;
    chain.foot_type = foot.type;
    Pose pending;
    for (const Joint* j : path) {
      if (j->type == JointType::Fixed) {
        pending = pending * j->origin();
        continue;
      }
      ChainJoint cj;
      cj.name = j->name;
      cj.child_link = j->child;
      cj.home = pending * j->origin();
      cj.screw << j->axis, Vector3::Zero();
      chain.joints.push_back(cj);
      pending = Pose();
    }
    if (chain.joints.empty()) {
      throw ValidationError("leg ending at '" + foot.link + "' has no revolute joints");
    }
    // Trailing fixed joints move into the last revolute joint's frame.
    ChainJoint& last = chain.joints.back();
    last.home = last.home * pending;
    last.screw = pending.inverse().adjoint() * last.screw;
    last.child_link = foot.link;
    model.legs_.push_back(std::move(chain));
  }
  return model;
}

RobotModel RobotModel::Load(const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw IoError("robot description file not found or unreadable: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return Parse(ss.str(), {}, warnings);
}

std::string RobotModel::serialize() const {
  std::ostringstream os;
  os << "<?xml version=\"1.0\"?>\n";
  os << "<robot name=\"" << name_ << "\">\n";
  for (const auto& l : links_) os << "  <link name=\"" << l << "\"/>\n";
  for (const auto& j : joints_) {
    os << "  <joint name=\"" << j.name << "\" type=\""
       << (j.type == JointType::Revolute ? "revolute" : "fixed") << "\">\n";
    os << "    <parent link=\"" << j.parent << "\"/>\n";
    os << "    <child link=\"" << j.child << "\"/>\n";
    os << "    <origin xyz=\"" << formatTriple(j.origin_xyz) << "\" rpy=\""
       << formatTriple(j.origin_rpy) << "\"/>\n";
    if (j.type == JointType::Revolute) os << "    <axis xyz=\"" << formatTriple(j.axis) << "\"/>\n";
    os << "  </joint>\n";
  }
  for (const auto& f : feet_) {
    os << "  <foot link=\"" << f.link << "\" type=\"" << toString(f.type) << "\"/>\n";
  }
  os << "</robot>\n";
  return os.str();
}

std::vector<std::string> RobotModel::chainJointNames() const {
  std::vector<std::string> names;
  for (const auto& leg : legs_) {
    for (const auto& j : leg.joints) names.push_back(j.name);
  }
  return names;
}

bool RobotModel::operator==(const RobotModel& other) const {
  if (name_ != other.name_ || base_link_ != other.base_link_ || links_ != other.links_ ||
      joints_.size() != other.joints_.size() || feet_.size() != other.feet_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    const Joint& a = joints_[i];
    const Joint& b = other.joints_[i];
    if (a.name != b.name || a.type != b.type || a.parent != b.parent || a.child != b.child ||
        a.origin_xyz != b.origin_xyz || a.origin_rpy != b.origin_rpy || a.axis != b.axis) {
      return false;
    }
  }
  for (std::size_t i = 0; i < feet_.size(); ++i) {
    if (feet_[i].link != other.feet_[i].link || feet_[i].type != other.feet_[i].type) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

Pose jointTransform(const ChainJoint& joint, double q) { return joint.home * expSE3(joint.screw * q); }

std::vector<double> chainAngles(const LegChain& chain, const JointAngles& angles) {
  std::vector<double> q;
  q.reserve(chain.joints.size());
  for (const auto& j : chain.joints) {
    auto it = angles.find(j.name);
    if (it == angles.end()) throw ValidationError("missing angle for joint '" + j.name + "'");
    q.push_back(it->second);
  }
  return q;
}

std::vector<Pose> fkChainLinks(const RobotModel& model, int leg, const JointAngles& angles) {
  const LegChain& chain = model.leg(leg);
  const std::vector<double> q = chainAngles(chain, angles);
  std::vector<Pose> out;
  Pose T;
  for (std::size_t i = 0; i < chain.joints.size(); ++i) {
    T = T * jointTransform(chain.joints[i], q[i]);
    out.push_back(T);
  }
  return out;
}

Pose fkChain(const RobotModel& model, int leg, const JointAngles& angles) {
  return fkChainLinks(model, leg, angles).back();
}

Twist fkFactorError(const Pose& parent, const Pose& child, const ChainJoint& joint, double q) {
  return logSE3(jointTransform(joint, q).inverse() * (parent.inverse() * child));
}

void relativePoseJacobians(const Pose& a, const Pose& b, const Twist& r, Eigen::MatrixXd& Ha,
                           Eigen::MatrixXd& Hb) {
  const Matrix6 JrInv = rightJacobianInverseSE3(r);
  Hb = JrInv;
  Ha = -JrInv * (b.inverse() * a).adjoint();
}

JointFkFactor::JointFkFactor(Key parent, Key child, ChainJoint joint, double q, GaussianNoise noise)
    : Factor({parent, child}, std::move(noise)),
      joint_(std::move(joint)),
      q_(q),
      measured_inverse_(jointTransform(joint_, q_).inverse()) {
  if (this->noise().dim() != 6) throw ValidationError("kinematic factor needs a 6-D noise model");
}

Eigen::VectorXd JointFkFactor::error(const Values& values) const {
  const Pose& parent = values.pose(keys()[0]);
  const Pose& child = values.pose(keys()[1]);
  return logSE3(measured_inverse_ * (parent.inverse() * child));
}

std::vector<Eigen::MatrixXd> JointFkFactor::jacobians(const Values& values) const {
  const Pose& parent = values.pose(keys()[0]);
  const Pose& child = values.pose(keys()[1]);
  const Twist r = logSE3(measured_inverse_ * (parent.inverse() * child));
  Eigen::MatrixXd Ha, Hb;
  relativePoseJacobians(parent, child, r, Ha, Hb);
  return {Ha, Hb};
}

}  // namespace legfg
