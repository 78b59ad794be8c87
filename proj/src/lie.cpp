#include "legfg/lie.hpp"

#include <cmath>

namespace legfg {

namespace {
constexpr double kNearPi = 1e-3;
}

Matrix3 skew(const Vector3& v) {
  Matrix3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Vector3 vee(const Matrix3& m) { return Vector3(m(2, 1), m(0, 2), m(1, 0)); }

Matrix3 expSO3(const Vector3& omega) {
  const double theta2 = omega.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Matrix3 K = skew(omega);
  if (theta < kSmallAngle) {
    return Matrix3::Identity() + K + 0.5 * K * K;
  }
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / theta2;
  return Matrix3::Identity() + a * K + b * K * K;
}

Vector3 logSO3(const Matrix3& R) {
  const Vector3 w = vee(R - R.transpose());  // 2 sin(θ) a
  const double s = 0.5 * w.norm();
  const double c = 0.5 * (R.trace() - 1.0);
  const double theta = std::atan2(s, c);

  if (theta < kSmallAngle) {
    return 0.5 * (1.0 + theta * theta / 6.0) * w;
  }
  if (M_PI - theta < kNearPi) {
    // Symmetric part is cosθ I + (1 - cosθ) a aᵀ; take its dominant column.
    const Matrix3 S = 0.5 * (R + R.transpose()) - c * Matrix3::Identity();
    int col = 0;
    S.diagonal().maxCoeff(&col);
    Vector3 axis = S.col(col).normalized();
    if (axis.dot(w) < 0.0) axis = -axis;
    return theta * axis;
  }
  return (0.5 * theta / s) * w;
}

Matrix3 rightJacobianSO3(const Vector3& omega) {
  const double theta2 = omega.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Matrix3 K = skew(omega);
  if (theta < kSmallAngle) {
    return Matrix3::Identity() - 0.5 * K + K * K / 6.0;
  }
  const double a = (1.0 - std::cos(theta)) / theta2;
  const double b = (theta - std::sin(theta)) / (theta2 * theta);
  return Matrix3::Identity() - a * K + b * K * K;
}

Matrix3 rightJacobianInverseSO3(const Vector3& omega) {
  const double theta2 = omega.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Matrix3 K = skew(omega);
  if (theta < kSmallAngle) {
    return Matrix3::Identity() + 0.5 * K + K * K / 12.0;
  }
  const double c = 1.0 / theta2 - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  return Matrix3::Identity() + 0.5 * K + c * K * K;
}

Matrix3 leftJacobianSO3(const Vector3& omega) { return rightJacobianSO3(-omega); }

Matrix3 leftJacobianInverseSO3(const Vector3& omega) { return rightJacobianInverseSO3(-omega); }

Matrix3 orthonormalize(const Matrix3& R) {
  Eigen::Quaterniond q(R);
  q.normalize();
  return q.toRotationMatrix();
}

Pose Pose::FromMatrix(const Matrix4& T) {
  return Pose(T.topLeftCorner<3, 3>(), T.topRightCorner<3, 1>());
}

Pose Pose::FromQuaternion(const Eigen::Quaterniond& q, const Vector3& t) {
  return Pose(q.normalized().toRotationMatrix(), t);
}

Pose Pose::FromRpy(double roll, double pitch, double yaw, const Vector3& t) {
  // URDF convention: R = Rz(yaw) Ry(pitch) Rx(roll).
  const Matrix3 R = (Eigen::AngleAxisd(yaw, Vector3::UnitZ()) *
                     Eigen::AngleAxisd(pitch, Vector3::UnitY()) *
                     Eigen::AngleAxisd(roll, Vector3::UnitX()))
                        .toRotationMatrix();
  return Pose(R, t);
}

Eigen::Quaterniond Pose::quaternion() const {
  Eigen::Quaterniond q(R_);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return q;
}

Matrix4 Pose::matrix() const {
  Matrix4 T = Matrix4::Identity();
  T.topLeftCorner<3, 3>() = R_;
  T.topRightCorner<3, 1>() = t_;
  return T;
}

Pose Pose::inverse() const {
  const Matrix3 Rt = R_.transpose();
  return Pose(Rt, -(Rt * t_));
}

Pose Pose::operator*(const Pose& other) const {
  return Pose(R_ * other.R_, R_ * other.t_ + t_);
}

Matrix6 Pose::adjoint() const {
  Matrix6 A = Matrix6::Zero();
  A.topLeftCorner<3, 3>() = R_;
  A.bottomRightCorner<3, 3>() = R_;
  A.bottomLeftCorner<3, 3>() = skew(t_) * R_;
  return A;
}

Pose Pose::retract(const Twist& delta) const {
  const Matrix3 R = orthonormalize(R_ * expSO3(delta.head<3>()));
  return Pose(R, t_ + R_ * delta.tail<3>());
}

Twist Pose::localCoordinates(const Pose& other) const {
  Twist d;
  d.head<3>() = logSO3(R_.transpose() * other.R_);
  d.tail<3>() = R_.transpose() * (other.t_ - t_);
  return d;
}

bool Pose::isApprox(const Pose& other, double tol) const {
  return (R_ - other.R_).cwiseAbs().maxCoeff() <= tol &&
         (t_ - other.t_).cwiseAbs().maxCoeff() <= tol;
}

Pose expSE3(const Twist& xi) {
  const Vector3 omega = xi.head<3>();
  return Pose(expSO3(omega), leftJacobianSO3(omega) * xi.tail<3>());
}

Twist logSE3(const Pose& T) {
  Twist xi;
  const Vector3 omega = logSO3(T.rotation());
  xi.head<3>() = omega;
  xi.tail<3>() = leftJacobianInverseSO3(omega) * T.translation();
  return xi;
}

namespace {

// Off-diagonal block of the SE(3) left Jacobian.
Matrix3 se3CouplingBlock(const Vector3& omega, const Vector3& v) {
  const double t2 = omega.squaredNorm();
  const double t = std::sqrt(t2);
  double a, b, c;
  if (t < 1e-2) {
    const double t4 = t2 * t2;
    a = 1.0 / 6.0 - t2 / 120.0 + t4 / 5040.0;
    b = 1.0 / 24.0 - t2 / 720.0 + t4 / 40320.0;
    c = 1.0 / 120.0 - t2 / 2520.0 + t4 / 120960.0;
  } else {
    const double s = std::sin(t);
    const double co = std::cos(t);
    a = (t - s) / (t2 * t);
    b = (t2 + 2.0 * co - 2.0) / (2.0 * t2 * t2);
    c = (2.0 * t - 3.0 * s + t * co) / (2.0 * t2 * t2 * t);
  }
  const Matrix3 W = skew(omega);
  const Matrix3 V = skew(v);
  const Matrix3 WV = W * V;
  const Matrix3 VW = V * W;
  const Matrix3 WVW = WV * W;
  return 0.5 * V + a * (WV + VW + WVW) + b * (W * WV + VW * W - 3.0 * WVW) +
         c * (WVW * W + W * WVW);
}

}  // namespace

Matrix6 leftJacobianSE3(const Twist& xi) {
  const Vector3 omega = xi.head<3>();
  const Matrix3 Jl = leftJacobianSO3(omega);
  Matrix6 J = Matrix6::Zero();
  J.topLeftCorner<3, 3>() = Jl;
  J.bottomRightCorner<3, 3>() = Jl;
  J.bottomLeftCorner<3, 3>() = se3CouplingBlock(omega, xi.tail<3>());
  return J;
}

Matrix6 rightJacobianSE3(const Twist& xi) { return leftJacobianSE3(-xi); }

Matrix6 rightJacobianInverseSE3(const Twist& xi) {
  const Twist m = -xi;
  const Vector3 omega = m.head<3>();
  const Matrix3 JlInv = leftJacobianInverseSO3(omega);
  const Matrix3 Q = se3CouplingBlock(omega, m.tail<3>());
  Matrix6 J = Matrix6::Zero();
  J.topLeftCorner<3, 3>() = JlInv;
  J.bottomRightCorner<3, 3>() = JlInv;
  J.bottomLeftCorner<3, 3>() = -JlInv * Q * JlInv;
  return J;
}

Matrix3 rotZ(double yaw) { return Eigen::AngleAxisd(yaw, Vector3::UnitZ()).toRotationMatrix(); }

double yawOf(const Matrix3& R) { return std::atan2(R(1, 0), R(0, 0)); }

}  // namespace legfg
