#pragma once

#include <vector>

#include "legfg/factor_graph.hpp"
#include "legfg/lie.hpp"

namespace legfg {

struct ImuSample {
  double t = 0.0;
  Vector3 omega = Vector3::Zero();  ///< body angular velocity (rad/s)
  Vector3 accel = Vector3::Zero();  ///< body specific force (m/s²)
};

struct ImuBias {
  Vector3 gyro = Vector3::Zero();
  Vector3 accel = Vector3::Zero();

  Vector6 vector() const;
  static ImuBias FromVector(const Vector6& v);
};

struct ImuNoiseParams {
  double gyro_density = 1.7e-4;        ///< rad/s/√Hz
  double accel_density = 2e-3;         ///< m/s²/√Hz
  double gyro_bias_walk = 1e-5;        ///< rad/s²/√Hz
  double accel_bias_walk = 1e-4;       ///< m/s³/√Hz
  Vector3 gravity = Vector3(0.0, 0.0, -9.81);

  void validate() const;
};

/// Navigation state used for prediction and residuals.
struct NavState {
  Pose pose;
  Vector3 velocity = Vector3::Zero();
};

/// Summarized motion between two keyframes. Each sample is held constant over
/// its interval and integrated in closed form; covariance and bias Jacobians
/// follow the first-order error recursion.
class PreintegratedImu {
 public:
  PreintegratedImu() = default;
  PreintegratedImu(const ImuNoiseParams& noise, const ImuBias& bias_linearization);

  /// Integrates one sample held for dt seconds. Throws ValidationError when dt ≤ 0.
  void integrate(const ImuSample& sample, double dt);

  const Matrix3& deltaR() const { return dR_; }
  const Vector3& deltaV() const { return dv_; }
  const Vector3& deltaP() const { return dp_; }
  double deltaT() const { return dt_; }
  const Matrix9& covariance() const { return cov_; }
  const ImuBias& biasLinearization() const { return bias_; }
  const ImuNoiseParams& noise() const { return noise_; }

  const Matrix3& dRdBg() const { return dR_dbg_; }
  const Matrix3& dVdBg() const { return dv_dbg_; }
  const Matrix3& dVdBa() const { return dv_dba_; }
  const Matrix3& dPdBg() const { return dp_dbg_; }
  const Matrix3& dPdBa() const { return dp_dba_; }

  /// Deltas corrected to first order for a bias different from the
  /// linearization point.
  Matrix3 correctedDeltaR(const ImuBias& bias) const;
  Vector3 correctedDeltaV(const ImuBias& bias) const;
  Vector3 correctedDeltaP(const ImuBias& bias) const;

  /// [rotation; velocity; position] residual of the relative-motion constraint.
  Vector9 residual(const NavState& i, const NavState& j, const ImuBias& bias) const;

  /// State at j implied by the measurements, the inverse of residual().
  NavState predict(const NavState& i, const ImuBias& bias) const;

 private:
  ImuNoiseParams noise_;
  ImuBias bias_;
  Matrix3 dR_ = Matrix3::Identity();
  Vector3 dv_ = Vector3::Zero();
  Vector3 dp_ = Vector3::Zero();
  double dt_ = 0.0;
  Matrix9 cov_ = Matrix9::Zero();
  Matrix3 dR_dbg_ = Matrix3::Zero();
  Matrix3 dv_dbg_ = Matrix3::Zero();
  Matrix3 dv_dba_ = Matrix3::Zero();
  Matrix3 dp_dbg_ = Matrix3::Zero();
  Matrix3 dp_dba_ = Matrix3::Zero();
};

/// Integrals of the held sample over one interval: with φ = ω dt,
/// G1 = Σ φ^n/(n+1)! and G2 = Σ φ^n/(n+2)! (φ as a skew matrix).
struct HeldSampleIntegrals {
  Matrix3 G1;
  Matrix3 G2;
  Vector3 G1a;   ///< G1 · a
  Vector3 G2a;   ///< G2 · a
  Matrix3 dG1a;  ///< ∂(G1 a)/∂φ
  Matrix3 dG2a;  ///< ∂(G2 a)/∂φ
};
HeldSampleIntegrals heldSampleIntegrals(const Vector3& phi, const Vector3& accel);

/// Preintegrated IMU factor over (pose_i, vel_i, pose_j, vel_j, bias) with
/// analytic Jacobians.
class ImuFactor : public Factor {
 public:
  ImuFactor(Key pose_i, Key vel_i, Key pose_j, Key vel_j, Key bias, PreintegratedImu pim);

  Eigen::VectorXd error(const Values& values) const override;
  std::vector<Eigen::MatrixXd> jacobians(const Values& values) const override;
  bool hasAnalyticJacobians() const override { return true; }
  std::string name() const override { return "ImuFactor"; }

  const PreintegratedImu& preintegrated() const { return pim_; }

 private:
  PreintegratedImu pim_;
};

/// Bias random walk between consecutive bias variables.
class BiasWalkFactor : public Factor {
 public:
  BiasWalkFactor(Key bias_i, Key bias_j, const ImuNoiseParams& noise, double dt);

  Eigen::VectorXd error(const Values& values) const override;
  std::vector<Eigen::MatrixXd> jacobians(const Values& values) const override;
  bool hasAnalyticJacobians() const override { return true; }
  std::string name() const override { return "BiasWalkFactor"; }
};

}  // namespace legfg
