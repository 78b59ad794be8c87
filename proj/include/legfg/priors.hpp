#pragma once

#include "legfg/factor_graph.hpp"

namespace legfg {

/// Prior on a pose: [Log(R₀ᵀR); R₀ᵀ(t − t₀)].
class PosePriorFactor : public Factor {
 public:
  PosePriorFactor(Key key, Pose mean, GaussianNoise noise);

  Eigen::VectorXd error(const Values& values) const override;
  std::vector<Eigen::MatrixXd> jacobians(const Values& values) const override;
  bool hasAnalyticJacobians() const override { return true; }
  std::string name() const override { return "PosePriorFactor"; }

  const Pose& mean() const { return mean_; }

 private:
  Pose mean_;
};

/// Prior on a Euclidean variable (velocity, bias, point landmark).
class VectorPriorFactor : public Factor {
 public:
  VectorPriorFactor(Key key, Eigen::VectorXd mean, GaussianNoise noise);

  Eigen::VectorXd error(const Values& values) const override;
  std::vector<Eigen::MatrixXd> jacobians(const Values& values) const override;
  bool hasAnalyticJacobians() const override { return true; }
  std::string name() const override { return "VectorPriorFactor"; }

 private:
  Eigen::VectorXd mean_;
};

/// Relative pose measurement: Log(Z⁻¹ · Tᵢ⁻¹ Tⱼ).
class BetweenPoseFactor : public Factor {
 public:
  BetweenPoseFactor(Key key_i, Key key_j, Pose measured, GaussianNoise noise);

  Eigen::VectorXd error(const Values& values) const override;
  std::string name() const override { return "BetweenPoseFactor"; }

 private:
  Pose measured_;
};

}  // namespace legfg
