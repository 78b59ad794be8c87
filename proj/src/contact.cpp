#include "legfg/contact.hpp"

#include <algorithm>

namespace legfg {

void SegmentationConfig::validate() const {
  if (debounce_on < 1) throw ValidationError("debounce_on must be at least 1");
  if (debounce_off < 1) throw ValidationError("debounce_off must be at least 1");
  if (min_phase_keyframes < 1) throw ValidationError("min_phase_keyframes must be at least 1");
}

std::vector<ContactPhase> segmentPhases(const std::vector<ContactSample>& samples,
                                        const std::vector<double>& keyframe_times, int leg_count,
                                        const SegmentationConfig& config) {
  config.validate();
  if (samples.empty()) throw ValidationError("contact stream is empty");
  for (const auto& s : samples) {
    if (static_cast<int>(s.in_contact.size()) != leg_count) {
      throw ValidationError("contact sample at t=" + std::to_string(s.t) + " has " +
                            std::to_string(s.in_contact.size()) + " flags, expected " +
                            std::to_string(leg_count));
    }
  }

  constexpr double kTimeTol = 1e-9;
  std::vector<ContactPhase> phases;
  for (int leg = 0; leg < leg_count; ++leg) {
    // Time intervals of debounced stance.
    std::vector<std::pair<double, double>> intervals;
    bool on = false;
    int run_on = 0;
    int run_off = 0;
    double start = 0.0;
    double last_on = 0.0;
    for (std::size_t s = 0; s < samples.size(); ++s) {
      const bool raw = samples[s].in_contact[leg] != 0;
      if (raw) {
        ++run_on;
        run_off = 0;
        last_on = samples[s].t;
        if (!on && run_on >= config.debounce_on) {
          on = true;
          start = samples[s + 1 - run_on].t;
        }
      } else {
        ++run_off;
        run_on = 0;
        if (on && run_off >= config.debounce_off) {
          on = false;
          intervals.emplace_back(start, last_on);
        }
      }
    }
    if (on) intervals.emplace_back(start, last_on);

    for (const auto& [t0, t1] : intervals) {
      const auto first = std::lower_bound(keyframe_times.begin(), keyframe_times.end(), t0 - kTimeTol);
      const auto last = std::upper_bound(keyframe_times.begin(), keyframe_times.end(), t1 + kTimeTol);
      const int count = static_cast<int>(last - first);
      if (count < config.min_phase_keyframes) continue;
      ContactPhase p;
      p.leg = leg;
      p.start_keyframe = static_cast<int>(first - keyframe_times.begin());
      p.end_keyframe = p.start_keyframe + count - 1;
      phases.push_back(p);
    }
  }
  for (std::size_t i = 0; i < phases.size(); ++i) phases[i].landmark = static_cast<int>(i);
  return phases;
}

Eigen::VectorXd contactFactorError(const Pose& foot_world, const Variable& landmark, FootType type) {
  if (type == FootType::Point) {
    const auto* c = std::get_if<Vector3>(&landmark);
    if (!c) throw ValidationError("point-foot contact needs a 3-vector landmark");
    return foot_world.translation() - *c;
  }
  const auto* c = std::get_if<Pose>(&landmark);
  if (!c) throw ValidationError("flat-foot contact needs a pose landmark");
  return logSE3(c->inverse() * foot_world);
}

PointContactFactor::PointContactFactor(Key foot, Key landmark, GaussianNoise noise)
    : Factor({foot, landmark}, std::move(noise)) {
  if (this->noise().dim() != 3) throw ValidationError("point contact needs a 3-D noise model");
}

Eigen::VectorXd PointContactFactor::error(const Values& values) const {
  return values.pose(keys()[0]).translation() - values.vector3(keys()[1]);
}

std::vector<Eigen::MatrixXd> PointContactFactor::jacobians(const Values& values) const {
  Eigen::MatrixXd Hf = Eigen::MatrixXd::Zero(3, 6);
  Hf.rightCols<3>() = values.pose(keys()[0]).rotation();
  return {Hf, -Eigen::MatrixXd::Identity(3, 3)};
}

FlatContactFactor::FlatContactFactor(Key foot, Key landmark, GaussianNoise noise)
    : Factor({foot, landmark}, std::move(noise)) {
  if (this->noise().dim() != 6) throw ValidationError("flat contact needs a 6-D noise model");
}

Eigen::VectorXd FlatContactFactor::error(const Values& values) const {
  return logSE3(values.pose(keys()[1]).inverse() * values.pose(keys()[0]));
}

std::vector<Eigen::MatrixXd> FlatContactFactor::jacobians(const Values& values) const {
  const Pose& foot = values.pose(keys()[0]);
  const Pose& landmark = values.pose(keys()[1]);
  const Twist r = logSE3(landmark.inverse() * foot);
  Eigen::MatrixXd Hl, Hf;
  relativePoseJacobians(landmark, foot, r, Hl, Hf);
  return {Hf, Hl};
}

}  // namespace legfg
