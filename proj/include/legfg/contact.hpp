#pragma once

#include <cstdint>
#include <vector>

#include "legfg/factor_graph.hpp"
#include "legfg/robot_model.hpp"

namespace legfg {

struct ContactSample {
  double t = 0.0;
  std::vector<std::uint8_t> in_contact;  ///< one flag per leg
};

/// A stance phase of one leg, expressed in keyframe indices (inclusive).
struct ContactPhase {
  int leg = 0;
  int start_keyframe = 0;
  int end_keyframe = 0;
  int landmark = 0;

  bool contains(int k) const { return k >= start_keyframe && k <= end_keyframe; }
  int length() const { return end_keyframe - start_keyframe + 1; }
};

struct SegmentationConfig {
  int debounce_on = 2;   ///< consecutive in-contact samples that open a phase
  int debounce_off = 2;  ///< consecutive off samples that close it
  int min_phase_keyframes = 2;

  void validate() const;
};

/// Debounced stance phases for every leg. A phase extends from the first to
/// the last raw in-contact sample of a debounced run and keeps the keyframes
/// inside that interval. Landmark ids are assigned in (leg, start) order.
/// Throws ValidationError on an empty stream or a flag-count mismatch.
std::vector<ContactPhase> segmentPhases(const std::vector<ContactSample>& samples,
                                        const std::vector<double>& keyframe_times, int leg_count,
                                        const SegmentationConfig& config = {});

/// Point foot: foot translation − landmark. Flat foot: Log(C⁻¹ · foot).
Eigen::VectorXd contactFactorError(const Pose& foot_world, const Variable& landmark, FootType type);

class PointContactFactor : public Factor {
 public:
  PointContactFactor(Key foot, Key landmark, GaussianNoise noise);

  Eigen::VectorXd error(const Values& values) const override;
  std::vector<Eigen::MatrixXd> jacobians(const Values& values) const override;
  bool hasAnalyticJacobians() const override { return true; }
  std::string name() const override { return "PointContactFactor"; }
};

class FlatContactFactor : public Factor {
 public:
  FlatContactFactor(Key foot, Key landmark, GaussianNoise noise);

  Eigen::VectorXd error(const Values& values) const override;
  std::vector<Eigen::MatrixXd> jacobians(const Values& values) const override;
  bool hasAnalyticJacobians() const override { return true; }
  std::string name() const override { return "FlatContactFactor"; }
};

}  // namespace legfg
