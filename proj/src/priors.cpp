#include "legfg/priors.hpp"

namespace legfg {

PosePriorFactor::PosePriorFactor(Key key, Pose mean, GaussianNoise noise)
    : Factor({key}, std::move(noise)), mean_(std::move(mean)) {
  if (this->noise().dim() != 6) throw ValidationError("pose prior needs a 6-D noise model");
}

Eigen::VectorXd PosePriorFactor::error(const Values& values) const {
  return mean_.localCoordinates(values.pose(keys()[0]));
}

std::vector<Eigen::MatrixXd> PosePriorFactor::jacobians(const Values& values) const {
  const Pose& T = values.pose(keys()[0]);
  const Vector3 e = logSO3(mean_.rotation().transpose() * T.rotation());
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(6, 6);
  H.topLeftCorner<3, 3>() = rightJacobianInverseSO3(e);
  H.bottomRightCorner<3, 3>() = mean_.rotation().transpose() * T.rotation();
  return {H};
}

VectorPriorFactor::VectorPriorFactor(Key key, Eigen::VectorXd mean, GaussianNoise noise)
    : Factor({key}, std::move(noise)), mean_(std::move(mean)) {
  if (this->noise().dim() != mean_.size()) throw ValidationError("prior mean/noise size mismatch");
}

Eigen::VectorXd VectorPriorFactor::error(const Values& values) const {
  return std::visit(
      [this](const auto& x) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Pose>) {
          throw ValidationError("vector prior attached to a pose variable");
        } else {
          if (x.size() != mean_.size()) throw ValidationError("vector prior dimension mismatch");
          return x - mean_;
        }
      },
      values.at(keys()[0]));
}

std::vector<Eigen::MatrixXd> VectorPriorFactor::jacobians(const Values&) const {
  return {Eigen::MatrixXd::Identity(mean_.size(), mean_.size())};
}

BetweenPoseFactor::BetweenPoseFactor(Key key_i, Key key_j, Pose measured, GaussianNoise noise)
    : Factor({key_i, key_j}, std::move(noise)), measured_(std::move(measured)) {}

Eigen::VectorXd BetweenPoseFactor::error(const Values& values) const {
  const Pose& Ti = values.pose(keys()[0]);
  const Pose& Tj = values.pose(keys()[1]);
  return logSE3(measured_.inverse() * (Ti.inverse() * Tj));
}

}  // namespace legfg
