#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace legfg {

using Vector3 = Eigen::Vector3d;
using Vector6 = Eigen::Matrix<double, 6, 1>;
using Vector9 = Eigen::Matrix<double, 9, 1>;
using Matrix3 = Eigen::Matrix3d;
using Matrix4 = Eigen::Matrix4d;
using Matrix6 = Eigen::Matrix<double, 6, 6>;
using Matrix9 = Eigen::Matrix<double, 9, 9>;

/// se(3) element ordered [angular; linear].
using Twist = Vector6;

/// Below this angle the exponential/logarithm and Jacobians use series expansions.
inline constexpr double kSmallAngle = 1e-8;

Matrix3 skew(const Vector3& v);
Vector3 vee(const Matrix3& m);

/// Rotation matrix exp(ω^).
Matrix3 expSO3(const Vector3& omega);

/// Rotation vector of R. Angles at or near π use the symmetric-part axis
/// extraction, so the result is well defined on all of SO(3).
Vector3 logSO3(const Matrix3& R);

/// Jr(ω): exp(ω + δ) ≈ exp(ω) exp(Jr(ω) δ).
Matrix3 rightJacobianSO3(const Vector3& omega);
Matrix3 rightJacobianInverseSO3(const Vector3& omega);
/// Jl(ω) = Jr(-ω); also the V matrix of the SE(3) exponential.
Matrix3 leftJacobianSO3(const Vector3& omega);
Matrix3 leftJacobianInverseSO3(const Vector3& omega);

/// Projects a near-rotation back onto SO(3).
Matrix3 orthonormalize(const Matrix3& R);

/// Rigid transform in SE(3). Maps points from the child frame into the parent
/// frame: p_parent = R p_child + t.
class Pose {
 public:
  Pose() : R_(Matrix3::Identity()), t_(Vector3::Zero()) {}
  Pose(const Matrix3& R, const Vector3& t) : R_(R), t_(t) {}

  static Pose Identity() { return Pose(); }
  static Pose FromMatrix(const Matrix4& T);
  static Pose FromQuaternion(const Eigen::Quaterniond& q, const Vector3& t);
  static Pose FromRpy(double roll, double pitch, double yaw, const Vector3& t);

  const Matrix3& rotation() const { return R_; }
  const Vector3& translation() const { return t_; }
  Matrix3& rotation() { return R_; }
  Vector3& translation() { return t_; }

  Eigen::Quaterniond quaternion() const;
  Matrix4 matrix() const;

  Pose inverse() const;
  Pose operator*(const Pose& other) const;
  Vector3 operator*(const Vector3& point) const { return R_ * point + t_; }

  /// Ad_T acting on [angular; linear] twists.
  Matrix6 adjoint() const;

  /// Right-perturbation retraction used by the optimizer:
  /// R' = R Exp(δω), t' = t + R δv, followed by re-orthonormalization.
  Pose retract(const Twist& delta) const;
  /// Inverse of retract to first order.
  Twist localCoordinates(const Pose& other) const;

  bool isApprox(const Pose& other, double tol) const;

 private:
  Matrix3 R_;
  Vector3 t_;
};

Pose expSE3(const Twist& xi);
Twist logSE3(const Pose& T);

/// SE(3) Jacobians for [angular; linear] twists:
/// exp(ξ + δ) ≈ exp(ξ) exp(Jr(ξ) δ) and Jl(ξ) = Jr(−ξ).
Matrix6 leftJacobianSE3(const Twist& xi);
Matrix6 rightJacobianSE3(const Twist& xi);
Matrix6 rightJacobianInverseSE3(const Twist& xi);

/// Rotation about the world z axis.
Matrix3 rotZ(double yaw);
/// Yaw of the x axis projected onto the world xy plane.
double yawOf(const Matrix3& R);

}  // namespace legfg
