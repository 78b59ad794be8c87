#include "legfg/baseline.hpp"

namespace legfg {

Twist baselineFkFactorError(const Pose& base, const Pose& foot, const Pose& fk) {
  return logSE3(fk.inverse() * (base.inverse() * foot));
}

LumpedFkFactor::LumpedFkFactor(Key base, Key foot, Pose fk, GaussianNoise noise)
    : Factor({base, foot}, std::move(noise)), fk_(std::move(fk)) {
  if (dim() != 6) throw ValidationError("lumped FK noise must be 6-dimensional");
}

Eigen::VectorXd LumpedFkFactor::error(const Values& values) const {
  return baselineFkFactorError(values.pose(keys()[0]), values.pose(keys()[1]), fk_);
}

std::vector<Eigen::MatrixXd> LumpedFkFactor::jacobians(const Values& values) const {
  const Pose& a = values.pose(keys()[0]);
  const Pose& b = values.pose(keys()[1]);
  const Twist r = baselineFkFactorError(a, b, fk_);
  Eigen::MatrixXd Ha, Hb;
  relativePoseJacobians(a, b, r, Ha, Hb);
  return {Ha, Hb};
}

Matrix6 composedChainCovariance(const LegChain& chain, const std::vector<double>& angles, const Matrix6& per_joint) {
  if (angles.size() != chain.joints.size()) throw ValidationError("angle count differs from the chain length");
  Matrix6 cov = Matrix6::Zero();
  Pose after;  // chain transform following joint j
  for (std::size_t j = chain.joints.size(); j-- > 0;) {
    const Matrix6 A = after.inverse().adjoint();
    cov += A * per_joint * A.transpose();
    after = jointTransform(chain.joints[j], angles[j]) * after;
  }
  return 0.5 * (cov + cov.transpose());
}

EstimatedTrajectory estimateBaseline(const TrajectoryLog& log, const RobotModel& model, EstimatorConfig config) {
  config.mode = EstimatorMode::Baseline;
  return estimate(log, model, config);
}

}  // namespace legfg
