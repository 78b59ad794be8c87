#pragma once

#include "legfg/estimator.hpp"

namespace legfg {

/// Log(fk⁻¹ · X⁻¹ · foot) with fk the full base → foot chain at the measured angles.
Twist baselineFkFactorError(const Pose& base, const Pose& foot, const Pose& fk);

/// Single base → foot kinematic constraint with one composite noise model.
class LumpedFkFactor : public Factor {
 public:
  LumpedFkFactor(Key base, Key foot, Pose fk, GaussianNoise noise);

  Eigen::VectorXd error(const Values& values) const override;
  std::vector<Eigen::MatrixXd> jacobians(const Values& values) const override;
  bool hasAnalyticJacobians() const override { return true; }
  std::string name() const override { return "LumpedFkFactor"; }

 private:
  Pose fk_;
};

/// First-order covariance of the lumped residual implied by independent
/// per-joint factors: Σ = Σ_j Ad(S_j⁻¹) Σ_FK Ad(S_j⁻¹)ᵀ, with S_j the chain
/// transform after joint j.
Matrix6 composedChainCovariance(const LegChain& chain, const std::vector<double>& angles, const Matrix6& per_joint);

/// estimate() with mode forced to Baseline.
EstimatedTrajectory estimateBaseline(const TrajectoryLog& log, const RobotModel& model, EstimatorConfig config);

}  // namespace legfg
