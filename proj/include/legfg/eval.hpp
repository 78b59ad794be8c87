#pragma once

#include <string>
#include <vector>

#include "legfg/config.hpp"
#include "legfg/lie.hpp"
#include "legfg/trajectory_log.hpp"

namespace legfg {

/// Planar rigid alignment applied to the estimate, plus the z means that were
/// subtracted from each trajectory.
struct Alignment {
  double yaw = 0.0;
  double x = 0.0;
  double y = 0.0;
  double reference_z_mean = 0.0;
  double estimate_z_mean = 0.0;

  /// Rz(yaw) with translation (x, y, 0).
  Pose planarTransform() const;
};

struct AlignedPair {
  Trajectory reference;
  Trajectory estimate;  ///< aligned, 1:1 with reference
  Alignment alignment;
  std::size_t unmatched_reference = 0;
  std::size_t unmatched_estimate = 0;
};

struct EvalConfig {
  double rpe_delta = 1.0;             ///< s
  bool translation_only = false;      ///< APE/RPE on the translation block only
  double max_time_offset = 0.0;       ///< 0: half the median reference interval

  static EvalConfig FromConfig(const KeyValueConfig& config);
  KeyValueConfig toConfig() const;
  void validate() const;
};

/// Nearest-neighbour timestamp matching, each reference sample used at most once.
AlignedPair associate(const Trajectory& reference, const Trajectory& estimate, double max_time_offset = 0.0);

/// Closed-form (x, y, yaw) alignment of the estimate onto the reference, then
/// independent z-mean removal. Throws ValidationError below two matches.
AlignedPair align(const Trajectory& reference, const Trajectory& estimate, double max_time_offset = 0.0);
/// Alignment of an already associated pair.
Alignment planarAlignment(const Trajectory& reference, const Trajectory& estimate);

/// ‖P⁻¹ P̂ − I‖_F; translation_only uses ‖t̂ − t‖.
double poseDeviation(const Pose& reference, const Pose& estimate, bool translation_only = false);

struct MetricSeries {
  std::vector<double> times;
  std::vector<double> values;
  double rmse = 0.0;
  double mean = 0.0;
  double max = 0.0;

  std::size_t size() const { return values.size(); }
};

MetricSeries summarize(std::vector<double> times, std::vector<double> values);

MetricSeries ape(const AlignedPair& pair, bool translation_only = false);
/// Pairs spaced by `delta` seconds of wall-clock time. Throws
/// ValidationError when the trajectory is not longer than delta.
MetricSeries rpe(const AlignedPair& pair, double delta = 1.0, bool translation_only = false);

struct MetricReport {
  AlignedPair pair;
  MetricSeries ape;
  MetricSeries rpe;
  EvalConfig config;

  std::string toText() const;
  /// "ape t value" and "rpe t value" lines.
  std::string seriesText() const;
};

MetricReport evaluateTrajectories(const Trajectory& reference, const Trajectory& estimate,
                                  const EvalConfig& config = {});

}  // namespace legfg
