#include "legfg/synthdata.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "legfg/errors.hpp"

namespace legfg {

namespace detail {
extern const char* const kQuadrupedUrdf;
extern const char* const kBipedUrdf;
}  // namespace detail

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

// Quintic smoothstep and its integral / derivatives on [0, 1].
double smooth(double x) { return x * x * x * (10.0 + x * (-15.0 + 6.0 * x)); }
double smoothIntegral(double x) { return x * x * x * x * (2.5 + x * (-3.0 + x)); }
double smoothD1(double x) { return 30.0 * x * x * (1.0 - x) * (1.0 - x); }
double smoothD2(double x) { return 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x); }

// 8-point Gauss-Legendre nodes and weights on [-1, 1].
constexpr std::array<double, 8> kGlNodes = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                            -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                            0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGlWeights = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                              0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                              0.2223810344533745, 0.1012285362903763};

void requirePositive(double v, const std::string& field) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ValidationError("field '" + field + "' must be positive, got " + formatDouble(v));
  }
}

void requireNonNegative(double v, const std::string& field) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw ValidationError("field '" + field + "' must be non-negative, got " + formatDouble(v));
  }
}

bool nearInteger(double v, double tol = 1e-6) { return std::abs(v - std::round(v)) < tol; }

}  // namespace

std::string toString(GaitType gait) {
  switch (gait) {
    case GaitType::Trot: return "trot";
    case GaitType::Walk: return "walk";
    case GaitType::Stand: return "stand";
  }
  return "?";
}

std::string toString(PathShape shape) {
  switch (shape) {
    case PathShape::Straight: return "straight";
    case PathShape::Diagonal: return "diagonal";
    case PathShape::Turn: return "turn";
    case PathShape::ZigZag: return "zigzag";
  }
  return "?";
}

GaitType gaitFromString(const std::string& text) {
  if (text == "trot") return GaitType::Trot;
  if (text == "walk") return GaitType::Walk;
  if (text == "stand") return GaitType::Stand;
  throw ValidationError("field 'gait': unknown gait '" + text + "' (expected trot, walk or stand)");
}

PathShape shapeFromString(const std::string& text) {
  if (text == "straight") return PathShape::Straight;
  if (text == "diagonal") return PathShape::Diagonal;
  if (text == "turn") return PathShape::Turn;
  if (text == "zigzag" || text == "zig-zag") return PathShape::ZigZag;
  throw ValidationError("field 'shape': unknown shape '" + text + "' (expected straight, diagonal, turn or zigzag)");
}

SynthNoise SynthNoise::Zero() {
  SynthNoise n;
  n.gyro_density = 0.0;
  n.accel_density = 0.0;
  n.joint_sigma = 0.0;
  n.contact_flip_probability = 0.0;
  n.gyro_bias_walk = 0.0;
  n.accel_bias_walk = 0.0;
  return n;
}

// ---------------------------------------------------------------------------
// GaitSpec

GaitSpec GaitSpec::Defaults(const std::string& model) {
  GaitSpec s;
  s.model = model;
  if (model == "biped") {
    s.gait = GaitType::Walk;
    s.stance_duration = 0.6;
    s.swing_duration = 0.4;
    s.step_length = 0.3;
    s.step_height = 0.05;
    s.base_height = 0.8;
    s.keyframe_rate = 100.0;
  }
  return s;
}

double GaitSpec::cruiseSpeed() const {
  if (gait == GaitType::Stand) return 0.0;
  return step_length / cycleTime();
}

GaitSpec GaitSpec::FromConfig(const KeyValueConfig& config) {
  GaitSpec s = Defaults(config.getString("model", "quadruped"));
  std::set<std::string> known;
  auto take = [&](const std::string& key) {
    known.insert(key);
    return config.find(key);
  };
  auto number = [&](const std::string& key, double& out) {
    if (auto v = take(key)) out = parseDouble(*v, key);
  };
  auto vec = [&](const std::string& key, Vector3& out) {
    if (auto v = take(key)) out = parseVector3(*v, key);
  };

  take("model");
  if (auto v = take("gait")) s.gait = gaitFromString(*v);
  if (auto v = take("shape")) s.shape = shapeFromString(*v);
  number("stance_duration", s.stance_duration);
  number("swing_duration", s.swing_duration);

  // Alternative timing parameterization.
  const auto cycle = take("cycle_time");
  const auto duty = take("duty_factor");
  if (cycle || duty) {
    const double c = cycle ? parseDouble(*cycle, "cycle_time") : s.cycleTime();
    const double d = duty ? parseDouble(*duty, "duty_factor") : s.dutyFactor();
    if (!(d > 0.0 && d < 1.0)) {
      throw ValidationError("field 'duty_factor' must lie in (0, 1), got " + formatDouble(d));
    }
    requirePositive(c, "cycle_time");
    s.stance_duration = d * c;
    s.swing_duration = c - s.stance_duration;
  }

  number("step_length", s.step_length);
  number("step_height", s.step_height);
  number("base_height", s.base_height);
  number("duration", s.duration);
  number("ramp_time", s.ramp_time);
  number("diagonal_angle", s.diagonal_angle);
  number("turn_angle", s.turn_angle);
  number("zigzag_angle", s.zigzag_angle);
  number("sway_roll", s.sway_roll);
  number("sway_pitch", s.sway_pitch);
  number("sway_height", s.sway_height);
  if (auto v = take("zigzag_segments")) s.zigzag_segments = config.getInt("zigzag_segments", 0);
  if (auto v = take("seed")) s.seed = config.getUint64("seed", 0);
  number("imu_rate", s.imu_rate);
  number("keyframe_rate", s.keyframe_rate);

  if (auto v = take("noise.enabled"); v && !config.getBool("noise.enabled", true)) {
    const SynthNoise zero = SynthNoise::Zero();
    s.noise.gyro_density = zero.gyro_density;
    s.noise.accel_density = zero.accel_density;
    s.noise.joint_sigma = zero.joint_sigma;
    s.noise.contact_flip_probability = zero.contact_flip_probability;
    s.noise.gyro_bias_walk = zero.gyro_bias_walk;
    s.noise.accel_bias_walk = zero.accel_bias_walk;
  }
  number("noise.gyro_density", s.noise.gyro_density);
  number("noise.accel_density", s.noise.accel_density);
  number("noise.joint_sigma", s.noise.joint_sigma);
  number("noise.contact_flip_probability", s.noise.contact_flip_probability);
  vec("noise.gyro_bias", s.noise.gyro_bias);
  vec("noise.accel_bias", s.noise.accel_bias);
  if (take("noise.bias_random_walk")) s.noise.bias_random_walk = config.getBool("noise.bias_random_walk", false);
  number("noise.gyro_bias_walk", s.noise.gyro_bias_walk);
  number("noise.accel_bias_walk", s.noise.accel_bias_walk);

  for (const auto& [key, value] : config.entries()) {
    if (!known.count(key)) throw ValidationError("unknown gait spec field '" + key + "'");
  }
  s.validate();
  return s;
}

KeyValueConfig GaitSpec::toConfig() const {
  KeyValueConfig c;
  c.set("model", model);
  c.set("gait", toString(gait));
  c.set("shape", toString(shape));
  c.set("stance_duration", formatDouble(stance_duration));
  c.set("swing_duration", formatDouble(swing_duration));
  c.set("step_length", formatDouble(step_length));
  c.set("step_height", formatDouble(step_height));
  c.set("base_height", formatDouble(base_height));
  c.set("duration", formatDouble(duration));
  c.set("ramp_time", formatDouble(ramp_time));
  c.set("diagonal_angle", formatDouble(diagonal_angle));
  c.set("turn_angle", formatDouble(turn_angle));
  c.set("zigzag_segments", std::to_string(zigzag_segments));
  c.set("zigzag_angle", formatDouble(zigzag_angle));
  c.set("sway_roll", formatDouble(sway_roll));
  c.set("sway_pitch", formatDouble(sway_pitch));
  c.set("sway_height", formatDouble(sway_height));
  c.set("seed", std::to_string(seed));
  c.set("imu_rate", formatDouble(imu_rate));
  c.set("keyframe_rate", formatDouble(keyframe_rate));
  c.set("noise.gyro_density", formatDouble(noise.gyro_density));
  c.set("noise.accel_density", formatDouble(noise.accel_density));
  c.set("noise.joint_sigma", formatDouble(noise.joint_sigma));
  c.set("noise.contact_flip_probability", formatDouble(noise.contact_flip_probability));
  c.set("noise.gyro_bias", formatVector3(noise.gyro_bias));
  c.set("noise.accel_bias", formatVector3(noise.accel_bias));
  c.set("noise.bias_random_walk", noise.bias_random_walk ? "true" : "false");
  c.set("noise.gyro_bias_walk", formatDouble(noise.gyro_bias_walk));
  c.set("noise.accel_bias_walk", formatDouble(noise.accel_bias_walk));
  return c;
}

void GaitSpec::validate() const {
  requirePositive(stance_duration, "stance_duration");
  requirePositive(swing_duration, "swing_duration");
  if (!(dutyFactor() > 0.0 && dutyFactor() < 1.0)) {
    throw ValidationError("field 'duty_factor' must lie in (0, 1), got " + formatDouble(dutyFactor()));
  }
  requireNonNegative(step_length, "step_length");
  requireNonNegative(step_height, "step_height");
  requirePositive(base_height, "base_height");
  requirePositive(duration, "duration");
  requirePositive(ramp_time, "ramp_time");
  if (ramp_time > duration / 2.0) {
    throw ValidationError("field 'ramp_time' must not exceed half the duration");
  }
  if (zigzag_segments < 1) throw ValidationError("field 'zigzag_segments' must be at least 1");
  requireNonNegative(sway_height, "sway_height");
  requirePositive(imu_rate, "imu_rate");
  requirePositive(keyframe_rate, "keyframe_rate");
  if (keyframe_rate > imu_rate || !nearInteger(imu_rate / keyframe_rate)) {
    throw ValidationError("field 'keyframe_rate' must divide imu_rate");
  }
  if (!nearInteger(duration * imu_rate)) {
    throw ValidationError("field 'duration' must be a whole number of IMU periods");
  }
  if (!nearInteger(duration * keyframe_rate)) {
    throw ValidationError("field 'duration' must be a whole number of keyframe periods");
  }
  if (std::lround(stance_duration * imu_rate) < 1 || std::lround(swing_duration * imu_rate) < 1) {
    throw ValidationError("stance and swing must each last at least one sample");
  }
  requireNonNegative(noise.gyro_density, "noise.gyro_density");
  requireNonNegative(noise.accel_density, "noise.accel_density");
  requireNonNegative(noise.joint_sigma, "noise.joint_sigma");
  requireNonNegative(noise.gyro_bias_walk, "noise.gyro_bias_walk");
  requireNonNegative(noise.accel_bias_walk, "noise.accel_bias_walk");
  if (!(noise.contact_flip_probability >= 0.0 && noise.contact_flip_probability <= 1.0)) {
    throw ValidationError("field 'noise.contact_flip_probability' must lie in [0, 1]");
  }
  if (!noise.gyro_bias.allFinite() || !noise.accel_bias.allFinite()) {
    throw ValidationError("bias values must be finite");
  }
}

// ---------------------------------------------------------------------------
// BaseCurve

BaseCurve::BaseCurve(const GaitSpec& spec)
    : shape_(spec.shape),
      duration_(spec.duration),
      ramp_(spec.ramp_time),
      cruise_(spec.cruiseSpeed()),
      height_(spec.base_height),
      diagonal_(spec.diagonal_angle * kDeg),
      turn_(spec.turn_angle * kDeg),
      segments_(spec.zigzag_segments),
      zigzag_(spec.zigzag_angle * kDeg),
      sway_roll_(spec.sway_roll * kDeg),
      sway_pitch_(spec.sway_pitch * kDeg),
      sway_height_(spec.sway_height),
      sway_omega_(2.0 * kPi / spec.cycleTime()) {
  total_ = cruise_ * (duration_ - ramp_);
  const int panels = std::max(1, static_cast<int>(std::ceil(total_ / 0.01)));
  panel_ = total_ / panels;
  panel_positions_.assign(1, Vector3::Zero());
  for (int i = 0; i < panels; ++i) {
    const double a = i * panel_, b = (i + 1) * panel_;
    Vector3 sum = Vector3::Zero();
    for (std::size_t g = 0; g < kGlNodes.size(); ++g) {
      const double u = 0.5 * (a + b) + 0.5 * (b - a) * kGlNodes[g];
      const double psi = heading(u);
      sum += kGlWeights[g] * Vector3(std::cos(psi), std::sin(psi), 0.0);
    }
    panel_positions_.push_back(panel_positions_.back() + 0.5 * (b - a) * sum);
  }
}

double BaseCurve::speed(double t) const {
  if (t <= 0.0 || t >= duration_) return 0.0;
  if (t < ramp_) return cruise_ * smooth(t / ramp_);
  if (t > duration_ - ramp_) return cruise_ * smooth((duration_ - t) / ramp_);
  return cruise_;
}

double BaseCurve::distance(double t) const {
  if (t <= 0.0) return 0.0;
  if (t >= duration_) return total_;
  if (t < ramp_) return cruise_ * ramp_ * smoothIntegral(t / ramp_);
  if (t > duration_ - ramp_) return total_ - cruise_ * ramp_ * smoothIntegral((duration_ - t) / ramp_);
  return cruise_ * (0.5 * ramp_ + (t - ramp_));
}

double BaseCurve::heading(double d) const {
  switch (shape_) {
    case PathShape::Straight: return 0.0;
    case PathShape::Diagonal: return diagonal_;
    case PathShape::Turn: return total_ > 0.0 ? turn_ * std::clamp(d, 0.0, total_) / total_ : 0.0;
    case PathShape::ZigZag: {
      if (total_ <= 0.0) return zigzag_;
      const double seg = total_ / segments_;
      const double half = 0.2 * seg;
      auto segHeading = [this](int i) { return (i % 2 == 0) ? zigzag_ : -zigzag_; };
      const int j = static_cast<int>(std::lround(d / seg));
      if (j >= 1 && j < segments_ && std::abs(d - j * seg) < half) {
        const double u = (d - j * seg + half) / (2.0 * half);
        return segHeading(j - 1) + (segHeading(j) - segHeading(j - 1)) * smooth(u);
      }
      return segHeading(std::clamp(static_cast<int>(std::floor(d / seg)), 0, segments_ - 1));
    }
  }
  return 0.0;
}

double BaseCurve::headingRate(double d) const {
  switch (shape_) {
    case PathShape::Straight:
    case PathShape::Diagonal: return 0.0;
    case PathShape::Turn: return (total_ > 0.0 && d > 0.0 && d < total_) ? turn_ / total_ : 0.0;
    case PathShape::ZigZag: {
      if (total_ <= 0.0) return 0.0;
      const double seg = total_ / segments_;
      const double half = 0.2 * seg;
      const int j = static_cast<int>(std::lround(d / seg));
      if (j >= 1 && j < segments_ && std::abs(d - j * seg) < half) {
        const double u = (d - j * seg + half) / (2.0 * half);
        const double jump = (j % 2 == 0) ? 2.0 * zigzag_ : -2.0 * zigzag_;
        return jump * smoothD1(u) / (2.0 * half);
      }
      return 0.0;
    }
  }
  return 0.0;
}

double BaseCurve::bodyYaw(double d) const {
  return (shape_ == PathShape::Turn || shape_ == PathShape::ZigZag) ? heading(d) : 0.0;
}

Vector3 BaseCurve::planarPosition(double d) const {
  if (total_ <= 0.0) return Vector3::Zero();
  d = std::clamp(d, 0.0, total_);
  const int n = static_cast<int>(panel_positions_.size()) - 1;
  const int i = std::clamp(static_cast<int>(std::floor(d / panel_)), 0, n - 1);
  const double a = i * panel_;
  Vector3 sum = Vector3::Zero();
  for (std::size_t g = 0; g < kGlNodes.size(); ++g) {
    const double u = 0.5 * (a + d) + 0.5 * (d - a) * kGlNodes[g];
    const double psi = heading(u);
    sum += kGlWeights[g] * Vector3(std::cos(psi), std::sin(psi), 0.0);
  }
  return panel_positions_[static_cast<std::size_t>(i)] + 0.5 * (d - a) * sum;
}

BaseCurve::Sample BaseCurve::evaluate(double t) const {
  Sample s;
  const double d = distance(t);
  const double v = speed(t);
  double vdot = 0.0, vddot = 0.0;
  if (t > 0.0 && t < duration_) {
    if (t < ramp_) {
      vdot = cruise_ * smoothD1(t / ramp_) / ramp_;
      vddot = cruise_ * smoothD2(t / ramp_) / (ramp_ * ramp_);
    } else if (t > duration_ - ramp_) {
      vdot = -cruise_ * smoothD1((duration_ - t) / ramp_) / ramp_;
      vddot = cruise_ * smoothD2((duration_ - t) / ramp_) / (ramp_ * ramp_);
    }
  }
  const double psi = heading(d);
  const double psi_rate = headingRate(d);
  const Vector3 u(std::cos(psi), std::sin(psi), 0.0);
  const Vector3 n(-std::sin(psi), std::cos(psi), 0.0);

  // Sway scales with the speed fraction so the base is at rest at both ends.
  const double frac = cruise_ > 0.0 ? v / cruise_ : 0.0;
  const double frac_dot = cruise_ > 0.0 ? vdot / cruise_ : 0.0;
  const double frac_ddot = cruise_ > 0.0 ? vddot / cruise_ : 0.0;
  const double w2 = 2.0 * sway_omega_;
  const double sz = std::sin(w2 * t), cz = std::cos(w2 * t);
  const double z = sway_height_ * frac * sz;
  const double zdot = sway_height_ * (frac_dot * sz + frac * w2 * cz);
  const double zddot = sway_height_ * (frac_ddot * sz + 2.0 * frac_dot * w2 * cz - frac * w2 * w2 * sz);

  s.position = planarPosition(d) + Vector3(0.0, 0.0, height_ + z);
  s.velocity = v * u + Vector3(0.0, 0.0, zdot);
  s.acceleration = vdot * u + v * v * psi_rate * n + Vector3(0.0, 0.0, zddot);
  s.yaw = bodyYaw(d);
  s.yaw_rate = (shape_ == PathShape::Turn || shape_ == PathShape::ZigZag) ? psi_rate * v : 0.0;
  s.roll = sway_roll_ * frac * std::sin(sway_omega_ * t);
  s.pitch = sway_pitch_ * frac * std::cos(sway_omega_ * t);
  return s;
}

// ---------------------------------------------------------------------------
// Schedule

bool LegSchedule::inStance(long sample) const {
  const long phase = ((sample - offset) % period + period) % period;
  return phase < stance;
}

long LegSchedule::stanceStart(long sample) const {
  const long phase = ((sample - offset) % period + period) % period;
  return phase < stance ? sample - phase : sample - phase + period;
}

std::vector<LegSchedule> gaitSchedule(const GaitSpec& spec, int leg_count) {
  const int period = static_cast<int>(std::lround(spec.cycleTime() * spec.imu_rate));
  const int stance = static_cast<int>(std::lround(spec.stance_duration * spec.imu_rate));
  std::vector<double> fractions(static_cast<std::size_t>(leg_count), 0.0);
  if (spec.gait != GaitType::Stand) {
    if (leg_count == 4 && spec.gait == GaitType::Trot) {
      fractions = {0.0, 0.5, 0.5, 0.0};  // FL+RR, FR+RL
    } else if (leg_count == 4) {
      fractions = {0.0, 0.5, 0.75, 0.25};  // FL, RR, FR, RL
    } else {
      for (int f = 0; f < leg_count; ++f) fractions[static_cast<std::size_t>(f)] = static_cast<double>(f) / leg_count;
    }
  }
  std::vector<LegSchedule> out;
  for (int f = 0; f < leg_count; ++f) {
    LegSchedule s;
    s.period = period;
    s.stance = spec.gait == GaitType::Stand ? period : stance;
    s.offset = static_cast<int>(std::lround(fractions[static_cast<std::size_t>(f)] * period)) % period;
    out.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Inverse kinematics

namespace {

struct AxisLine {
  Vector3 direction;
  Vector3 point;
};

AxisLine axisInBase(const Pose& child_at_zero, const Twist& screw) {
  const Vector3 w = screw.head<3>();
  const Vector3 v = screw.tail<3>();
  return {child_at_zero.rotation() * w, child_at_zero * w.cross(v)};
}

}  // namespace

ThreeJointLegIk::ThreeJointLegIk(const RobotModel& model, int leg) {
  const LegChain& chain = model.leg(leg);
  foot_ = chain.foot_link;
  if (chain.joints.size() != 3) {
    throw ValidationError("closed-form leg IK needs 3 joints, leg '" + foot_ + "' has " +
                          std::to_string(chain.joints.size()));
  }
  const Pose T0 = chain.joints[0].home;
  const Pose T1 = T0 * chain.joints[1].home;
  const Pose T2 = T1 * chain.joints[2].home;
  const AxisLine hip = axisInBase(T0, chain.joints[0].screw);
  const AxisLine thigh = axisInBase(T1, chain.joints[1].screw);
  const AxisLine calf = axisInBase(T2, chain.joints[2].screw);
  const Vector3 foot = T2.translation();

  constexpr double tol = 1e-9;
  auto fail = [this](const std::string& why) {
    throw ValidationError("closed-form leg IK does not support leg '" + foot_ + "': " + why);
  };
  if ((hip.direction - Vector3::UnitX()).norm() > tol) fail("hip axis must be +x");
  if ((thigh.direction - Vector3::UnitY()).norm() > tol) fail("thigh axis must be +y");
  if ((calf.direction - Vector3::UnitY()).norm() > tol) fail("calf axis must be +y");
  if (std::abs(calf.point.x() - thigh.point.x()) > tol || calf.point.z() > thigh.point.z()) {
    fail("calf axis must lie straight below the thigh axis at zero angles");
  }
  if (std::abs(foot.x() - calf.point.x()) > tol || foot.z() > calf.point.z()) {
    fail("foot must lie straight below the calf axis at zero angles");
  }
  hip_point_ = hip.point;
  lateral_ = foot.y() - hip.point.y();
  forward_ = thigh.point.x();
  thigh_ = thigh.point.z() - calf.point.z();
  shank_ = calf.point.z() - foot.z();
  pivot_drop_ = thigh.point.z() - hip.point.z();
}

Vector3 ThreeJointLegIk::solve(const Vector3& p, double t) const {
  auto unreachable = [&]() {
    std::ostringstream os;
    os << "foot target of leg '" << foot_ << "' unreachable at t=" << formatDouble(t) << " s";
    return ValidationError(os.str());
  };
  const double ry = p.y() - hip_point_.y();
  const double rz = p.z() - hip_point_.z();
  const double d = lateral_;
  const double L2 = ry * ry + rz * rz - d * d;
  if (L2 < 0.0) throw unreachable();
  const double L = std::sqrt(L2);
  const double q1 = std::atan2(L * ry + d * rz, d * ry - L * rz);

  const double X = p.x() - forward_;
  const double Z = -L - pivot_drop_;
  const double D = (X * X + Z * Z - thigh_ * thigh_ - shank_ * shank_) / (2.0 * thigh_ * shank_);
  if (D < -1.0 || D > 1.0) throw unreachable();
  const double q3 = -std::acos(D);
  const double q2 = std::atan2(-X, -Z) - std::atan2(shank_ * std::sin(q3), thigh_ + shank_ * std::cos(q3));
  return Vector3(q1, q2, q3);
}

Eigen::VectorXd solveChainIk(const RobotModel& model, int leg, const Pose& foot_in_base,
                             const Eigen::VectorXd& initial, double t) {
  const LegChain& chain = model.leg(leg);
  const int n = static_cast<int>(chain.joints.size());
  auto fk = [&chain](const Eigen::VectorXd& q) {
    Pose T;
    for (std::size_t i = 0; i < chain.joints.size(); ++i) {
      T = T * jointTransform(chain.joints[i], q[static_cast<Eigen::Index>(i)]);
    }
    return T;
  };
  Eigen::VectorXd q = initial;
  Twist e = logSE3(fk(q).inverse() * foot_in_base);
  for (int it = 0; it < 100 && e.norm() > 1e-14; ++it) {
    Eigen::MatrixXd J(6, n);
    for (int c = 0; c < n; ++c) {
      Eigen::VectorXd dq = q;
      dq[c] += 1e-7;
      Eigen::VectorXd dm = q;
      dm[c] -= 1e-7;
      J.col(c) = (logSE3(fk(dq).inverse() * foot_in_base) - logSE3(fk(dm).inverse() * foot_in_base)) / 2e-7;
    }
    const Eigen::MatrixXd H = J.transpose() * J + 1e-12 * Eigen::MatrixXd::Identity(n, n);
    const Eigen::VectorXd step = -H.ldlt().solve(J.transpose() * e);
    // Backtrack on the error norm.
    double alpha = 1.0;
    Twist trial_e;
    Eigen::VectorXd trial;
    do {
      trial = q + alpha * step;
      trial_e = logSE3(fk(trial).inverse() * foot_in_base);
      alpha *= 0.5;
    } while (trial_e.norm() > e.norm() && alpha > 1e-6);
    if (trial_e.norm() >= e.norm()) break;
    q = trial;
    e = trial_e;
  }
  if (e.norm() > 1e-10) {
    throw ValidationError("foot target of leg '" + chain.foot_link + "' unreachable at t=" + formatDouble(t) + " s");
  }
  return q;
}

// ---------------------------------------------------------------------------
// Synthesis

namespace {

/// World pose of a foot from the schedule at one sample.
struct FootPlanner {
  const GaitSpec& spec;
  const BaseCurve& curve;
  LegSchedule schedule;
  Vector3 nominal;  // foot position in the base frame at rest (z ignored)

  Pose foothold(long stance_start) const {
    const double t_mid = (static_cast<double>(stance_start) + 0.5 * schedule.stance) / spec.imu_rate;
    const BaseCurve::Sample b = curve.evaluate(t_mid);
    const Vector3 p = b.position + rotZ(b.yaw) * Vector3(nominal.x(), nominal.y(), 0.0);
    return Pose(rotZ(b.yaw), Vector3(p.x(), p.y(), 0.0));
  }

  Pose footAt(long sample) const {
    const long next = schedule.stanceStart(sample);
    if (schedule.inStance(sample)) return foothold(next);
    const long prev = next - schedule.period;
    const double lift = static_cast<double>(prev + schedule.stance);
    const double tau = (static_cast<double>(sample) - lift) / (static_cast<double>(next) - lift);
    const Pose a = foothold(prev);
    const Pose b = foothold(next);
    const double h = tau - std::sin(2.0 * kPi * tau) / (2.0 * kPi);
    const double yaw_a = yawOf(a.rotation());
    double yaw_b = yawOf(b.rotation());
    yaw_b = yaw_a + std::remainder(yaw_b - yaw_a, 2.0 * kPi);
    Vector3 p = a.translation() + h * (b.translation() - a.translation());
    p.z() = spec.step_height * 0.5 * (1.0 - std::cos(2.0 * kPi * tau));
    return Pose(rotZ(yaw_a + h * (yaw_b - yaw_a)), p);
  }
};

}  // namespace

TrajectoryLog synthesize(const GaitSpec& spec, const RobotModel& model) {
  spec.validate();
  const int legs = model.legCount();
  if (legs == 0) throw ValidationError("model has no legs");
  const double rate = spec.imu_rate;
  const double dt = 1.0 / rate;
  const long N = std::lround(spec.duration * rate);
  const long stride = std::lround(rate / spec.keyframe_rate);
  const Vector3 gravity(0.0, 0.0, -9.81);

  const BaseCurve curve(spec);

  // Base states consistent with held IMU samples: rotation and velocity follow
  // the commanded curve at every sample; position is the exact integral of the
  // held specific force that reproduces those velocities.
  std::vector<Pose> base(static_cast<std::size_t>(N + 1));
  std::vector<Vector3> velocity(static_cast<std::size_t>(N + 1));
  std::vector<ImuSample> clean_imu(static_cast<std::size_t>(N));
  for (long k = 0; k <= N; ++k) {
    const BaseCurve::Sample c = curve.evaluate(static_cast<double>(k) / rate);
    base[static_cast<std::size_t>(k)] = Pose(Pose::FromRpy(c.roll, c.pitch, c.yaw, Vector3::Zero()).rotation(),
                                             c.position);
    velocity[static_cast<std::size_t>(k)] = c.velocity;
  }
  for (long k = 0; k < N; ++k) {
    const auto i = static_cast<std::size_t>(k);
    const Matrix3& Ri = base[i].rotation();
    const Vector3 phi = logSO3(Ri.transpose() * base[i + 1].rotation());
    const HeldSampleIntegrals g = heldSampleIntegrals(phi, Vector3::Zero());
    const Vector3 a = g.G1.lu().solve(Ri.transpose() * (velocity[i + 1] - velocity[i] - gravity * dt)) / dt;
    base[i + 1].translation() =
        base[i].translation() + velocity[i] * dt + 0.5 * gravity * dt * dt + Ri * g.G2 * a * dt * dt;
    base[i + 1].rotation() = orthonormalize(Ri * expSO3(phi));
    clean_imu[i].t = static_cast<double>(k) / rate;
    clean_imu[i].omega = phi / dt;
    clean_imu[i].accel = a;
  }

  TrajectoryLog log;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  // IMU with bias and white noise.
  const double sg = spec.noise.gyro_density / std::sqrt(dt);
  const double sa = spec.noise.accel_density / std::sqrt(dt);
  const double wg = spec.noise.gyro_bias_walk * std::sqrt(dt);
  const double wa = spec.noise.accel_bias_walk * std::sqrt(dt);
  Vector3 bg = spec.noise.gyro_bias;
  Vector3 ba = spec.noise.accel_bias;
  for (const ImuSample& c : clean_imu) {
    ImuSample s = c;
    for (int j = 0; j < 3; ++j) s.omega[j] += bg[j] + sg * normal(rng);
    for (int j = 0; j < 3; ++j) s.accel[j] += ba[j] + sa * normal(rng);
    if (spec.noise.bias_random_walk) {
      for (int j = 0; j < 3; ++j) bg[j] += wg * normal(rng);
      for (int j = 0; j < 3; ++j) ba[j] += wa * normal(rng);
    }
    log.imu.push_back(s);
  }

  // Legs.
  const std::vector<LegSchedule> schedule = gaitSchedule(spec, legs);
  JointAngles zero;
  for (const auto& name : model.chainJointNames()) zero[name] = 0.0;
  std::vector<FootPlanner> planners;
  for (int f = 0; f < legs; ++f) {
    planners.push_back({spec, curve, schedule[static_cast<std::size_t>(f)], fkChain(model, f, zero).translation()});
  }
  std::vector<std::optional<ThreeJointLegIk>> closed_form(static_cast<std::size_t>(legs));
  std::vector<Eigen::VectorXd> warm(static_cast<std::size_t>(legs));
  for (int f = 0; f < legs; ++f) {
    const LegChain& chain = model.leg(f);
    if (chain.joints.size() == 3 && chain.foot_type == FootType::Point) {
      closed_form[static_cast<std::size_t>(f)].emplace(model, f);
    } else if (chain.joints.size() < 6) {
      throw ValidationError("leg '" + chain.foot_link + "' needs 3 joints (point foot) or at least 6 joints");
    } else {
      // Bent-knee starting guess: pitch joints share the bend.
      Eigen::VectorXd q = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(chain.joints.size()));
      int pitch = 0;
      for (std::size_t j = 0; j < chain.joints.size(); ++j) {
        if (std::abs(chain.joints[j].screw[1]) > 0.99) {
          const double bend[] = {-0.4, 0.8, -0.4};
          q[static_cast<Eigen::Index>(j)] = bend[std::min(pitch, 2)];
          ++pitch;
        }
      }
      warm[static_cast<std::size_t>(f)] = q;
    }
  }

  log.joint_names = model.chainJointNames();
  log.true_foot_poses.resize(static_cast<std::size_t>(N + 1));
  for (long s = 0; s <= N; ++s) {
    const double t = static_cast<double>(s) / rate;
    const Pose& B = base[static_cast<std::size_t>(s)];
    const Pose B_inv = B.inverse();
    JointAngles angles;
    auto& feet = log.true_foot_poses[static_cast<std::size_t>(s)];
    for (int f = 0; f < legs; ++f) {
      const auto fi = static_cast<std::size_t>(f);
      const LegChain& chain = model.leg(f);
      const Pose target = planners[fi].footAt(s);
      if (closed_form[fi]) {
        const Vector3 q = closed_form[fi]->solve(B_inv * target.translation(), t);
        for (int j = 0; j < 3; ++j) angles[chain.joints[static_cast<std::size_t>(j)].name] = q[j];
      } else {
        warm[fi] = solveChainIk(model, f, B_inv * target, warm[fi], t);
        for (std::size_t j = 0; j < chain.joints.size(); ++j) {
          angles[chain.joints[j].name] = warm[fi][static_cast<Eigen::Index>(j)];
        }
      }
      const Pose foot = B * fkChain(model, f, angles);
      if ((foot.translation() - target.translation()).norm() > 1e-9) {
        throw SolverError("inverse kinematics self-check failed for leg '" + chain.foot_link + "' at t=" +
                          formatDouble(t) + " s");
      }
      feet.push_back(foot);
    }
    JointSample js;
    js.t = t;
    for (const auto& name : log.joint_names) js.angles.push_back(angles.at(name));
    log.joints.push_back(std::move(js));
  }
  for (auto& js : log.joints) {
    for (double& q : js.angles) q += spec.noise.joint_sigma * normal(rng);
  }

  for (long s = 0; s <= N; ++s) {
    ContactSample c;
    c.t = static_cast<double>(s) / rate;
    for (int f = 0; f < legs; ++f) {
      bool on = schedule[static_cast<std::size_t>(f)].inStance(s);
      if (spec.noise.contact_flip_probability > 0.0 && uniform(rng) < spec.noise.contact_flip_probability) on = !on;
      c.in_contact.push_back(on ? 1 : 0);
    }
    log.contacts.push_back(std::move(c));
  }

  for (long s = 0; s <= N; s += stride) {
    log.ground_truth.push_back({static_cast<double>(s) / rate, base[static_cast<std::size_t>(s)]});
    log.ground_truth_velocity.push_back(velocity[static_cast<std::size_t>(s)]);
  }

  log.meta = spec.toConfig().entries();
  log.meta["init_velocity"] = formatVector3(velocity.front());
  log.meta["true_gyro_bias"] = formatVector3(spec.noise.gyro_bias);
  log.meta["true_accel_bias"] = formatVector3(spec.noise.accel_bias);
  std::string feet;
  for (int f = 0; f < legs; ++f) feet += (f ? "," : "") + model.leg(f).foot_link;
  log.meta["legs"] = feet;
  return log;
}

// ---------------------------------------------------------------------------
// Models

std::string builtinModelText(const std::string& name) {
  if (name == "quadruped") return detail::kQuadrupedUrdf;
  if (name == "biped") return detail::kBipedUrdf;
  return {};
}

RobotModel resolveModel(const std::string& name_or_path) {
  const std::string text = builtinModelText(name_or_path);
  if (!text.empty()) return RobotModel::Parse(text);
  return RobotModel::Load(name_or_path);
}

}  // namespace legfg
