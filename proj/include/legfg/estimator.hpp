#pragma once

#include <string>
#include <vector>

#include "legfg/config.hpp"
#include "legfg/contact.hpp"
#include "legfg/factor_graph.hpp"
#include "legfg/imu_preint.hpp"
#include "legfg/robot_model.hpp"
#include "legfg/trajectory_log.hpp"

namespace legfg {

enum class EstimatorMode { Proposed, Baseline };
std::string toString(EstimatorMode mode);
EstimatorMode modeFromString(const std::string& text);

struct EstimatorConfig {
  EstimatorMode mode = EstimatorMode::Proposed;
  /// 0 selects the log's keyframe_rate, or 50 Hz when the log has none.
  double keyframe_rate = 0.0;
  ImuNoiseParams imu;

  double fk_rot_sigma = 0.002;    ///< per joint factor (rad)
  double fk_trans_sigma = 0.001;  ///< per joint factor (m)
  double baseline_rot_sigma = 0.004;
  double baseline_trans_sigma = 0.003;
  /// Baseline covariance composed from the per-joint noise at the measured
  /// configuration instead of the fixed sigmas.
  bool baseline_calibrated = false;

  double contact_sigma = 0.01;      ///< m
  double contact_rot_sigma = 0.05;  ///< rad, flat feet

  bool prior_enabled = true;
  double prior_pose_sigma = 1e-4;
  double prior_velocity_sigma = 0.1;
  double prior_bias_sigma = 0.05;

  /// One bias variable per keyframe linked by random-walk factors.
  bool bias_chain = false;

  /// Solve growing prefixes of the log (doubling from `incremental_window`
  /// keyframes), re-predicting the remainder from each solution, before the
  /// full solve. 0 disables.
  int incremental_window = 25;

  SegmentationConfig segmentation;
  LmConfig lm;

  /// Keys as written by toConfig; unknown keys are rejected.
  static EstimatorConfig FromConfig(const KeyValueConfig& config);
  KeyValueConfig toConfig() const;
  void validate() const;
};

/// One keyframe of the estimate.
struct RobotState {
  double t = 0.0;
  Pose pose;
  Vector3 velocity = Vector3::Zero();
  ImuBias bias;
};

struct EstimatedLandmark {
  int id = 0;
  int leg = 0;
  int start_keyframe = 0;
  int end_keyframe = 0;
  Variable value;
};

/// Everything derived from the log before optimization.
struct EstimationProblem {
  std::vector<double> keyframe_times;
  std::vector<std::size_t> keyframe_samples;  ///< joint/contact sample index per keyframe
  std::vector<ContactPhase> phases;
  /// phase index per (keyframe, leg), or -1 in swing.
  std::vector<std::vector<int>> phase_at;
  std::vector<PreintegratedImu> preintegrations;  ///< per keyframe interval
  FactorGraph graph;
  Values initial;
  NavState prior_state;
  ImuBias prior_bias;
  double preintegrated_time = 0.0;  ///< Σ Δt over all IMU factors

  int keyframeCount() const { return static_cast<int>(keyframe_times.size()); }
};

struct EstimatedTrajectory {
  EstimatorMode mode = EstimatorMode::Proposed;
  std::vector<RobotState> states;
  std::vector<EstimatedLandmark> landmarks;
  ConvergenceReport report;
  std::size_t factor_count = 0;
  std::size_t variable_count = 0;

  bool converged() const { return report.status == LmStatus::Converged; }
  Trajectory trajectory() const;
};

/// Builds graph and initial values. Throws ValidationError on an empty log,
/// a joint missing from the log, or a log without any stance phase.
EstimationProblem buildProblem(const TrajectoryLog& log, const RobotModel& model, const EstimatorConfig& config);

/// Dead-reckoned base states from the prior mean, link poses from FK at the
/// measured angles, landmarks from each phase's first keyframe.
Values initializeValues(const TrajectoryLog& log, const RobotModel& model, const EstimatorConfig& config,
                        const EstimationProblem& problem);

/// Values for the problem's variables given base states per keyframe; link
/// poses and landmarks follow from the measured angles.
Values valuesFromStates(const TrajectoryLog& log, const RobotModel& model, const EstimatorConfig& config,
                        const EstimationProblem& problem, const std::vector<NavState>& states,
                        const ImuBias& bias);

/// Ground-truth values for a synthetic log (needs in-memory truth velocities).
Values groundTruthValues(const TrajectoryLog& log, const RobotModel& model, const EstimatorConfig& config,
                         const EstimationProblem& problem);

EstimatedTrajectory estimate(const TrajectoryLog& log, const RobotModel& model, const EstimatorConfig& config);

/// Warm start for the full solve, see EstimatorConfig::incremental_window.
Values incrementalInitialization(const TrajectoryLog& log, const RobotModel& model, const EstimatorConfig& config,
                                 const EstimationProblem& problem);

/// Extracts states and landmarks from optimized values.
EstimatedTrajectory extractEstimate(const EstimationProblem& problem, const EstimatorConfig& config,
                                    const Values& values);

/// estimate.txt (TUM), report.txt, convergence.txt, landmarks.txt, config.txt.
void writeEstimate(const EstimatedTrajectory& result, const EstimatorConfig& config, const std::string& directory);
std::string formatReport(const EstimatedTrajectory& result);

}  // namespace legfg
