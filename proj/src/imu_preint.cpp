#include "legfg/imu_preint.hpp"

#include <cmath>

namespace legfg {

Vector6 ImuBias::vector() const {
  Vector6 v;
  v << gyro, accel;
  return v;
}

ImuBias ImuBias::FromVector(const Vector6& v) { return {v.head<3>(), v.tail<3>()}; }

void ImuNoiseParams::validate() const {
  if (!(gyro_density >= 0.0) || !(accel_density >= 0.0) || !(gyro_bias_walk >= 0.0) ||
      !(accel_bias_walk >= 0.0)) {
    throw ValidationError("IMU noise densities must be non-negative");
  }
  if (!gravity.allFinite()) throw ValidationError("gravity must be finite");
}

HeldSampleIntegrals heldSampleIntegrals(const Vector3& phi, const Vector3& accel) {
  HeldSampleIntegrals out;
  out.G1.setZero();
  out.G2.setZero();
  out.G1a.setZero();
  out.G2a.setZero();
  out.dG1a.setZero();
  out.dG2a.setZero();

  const Matrix3 K = skew(phi);
  const double theta = phi.norm();
  Matrix3 M = Matrix3::Identity();  // K^n
  Vector3 u = accel;                 // K^n a
  Matrix3 du = Matrix3::Zero();      // ∂(K^n a)/∂φ
  double c1 = 1.0;                   // 1/(n+1)!
  double c2 = 0.5;                   // 1/(n+2)!
  double power = 1.0;                // θ^n
  for (int n = 0; n < 60; ++n) {
    out.G1 += c1 * M;
    out.G2 += c2 * M;
    out.G1a += c1 * u;
    out.G2a += c2 * u;
    out.dG1a += c1 * du;
    out.dG2a += c2 * du;
    if (n >= 2 && power * c1 < 1e-18) break;
    du = -skew(u) + K * du;
    u = phi.cross(u);
    M = K * M;
    power *= theta;
    c1 /= (n + 2);
    c2 /= (n + 3);
  }
  return out;
}

PreintegratedImu::PreintegratedImu(const ImuNoiseParams& noise, const ImuBias& bias_linearization)
    : noise_(noise), bias_(bias_linearization) {}

void PreintegratedImu::integrate(const ImuSample& sample, double dt) {
  if (!(dt > 0.0)) throw ValidationError("integration interval must be positive");
  const Vector3 w = sample.omega - bias_.gyro;
  const Vector3 a = sample.accel - bias_.accel;
  const Vector3 phi = w * dt;
  const Matrix3 dRk = expSO3(phi);
  const Matrix3 Jr = rightJacobianSO3(phi);
  const HeldSampleIntegrals I = heldSampleIntegrals(phi, a);
  const double dt2 = dt * dt;

  // Error-state propagation (δφ, δv, δp).
  Matrix9 A = Matrix9::Identity();
  A.block<3, 3>(0, 0) = dRk.transpose();
  A.block<3, 3>(3, 0) = -dR_ * skew(I.G1a) * dt;
  A.block<3, 3>(6, 0) = -dR_ * skew(I.G2a) * dt2;
  A.block<3, 3>(6, 3) = Matrix3::Identity() * dt;
  Eigen::Matrix<double, 9, 3> Bg = Eigen::Matrix<double, 9, 3>::Zero();
  Eigen::Matrix<double, 9, 3> Ba = Eigen::Matrix<double, 9, 3>::Zero();
  Bg.block<3, 3>(0, 0) = Jr * dt;
  Ba.block<3, 3>(3, 0) = dR_ * I.G1 * dt;
  Ba.block<3, 3>(6, 0) = dR_ * I.G2 * dt2;
  const double qg = noise_.gyro_density * noise_.gyro_density / dt;
  const double qa = noise_.accel_density * noise_.accel_density / dt;
  cov_ = A * cov_ * A.transpose() + qg * Bg * Bg.transpose() + qa * Ba * Ba.transpose();
  cov_ = 0.5 * (cov_ + cov_.transpose());

  // Bias Jacobians, exact derivatives of the recursion below.
  dp_dba_ += dv_dba_ * dt - dR_ * I.G2 * dt2;
  dp_dbg_ += dv_dbg_ * dt - (dR_ * skew(I.G2a) * dR_dbg_ + dR_ * I.dG2a * dt) * dt2;
  dv_dba_ -= dR_ * I.G1 * dt;
  dv_dbg_ -= (dR_ * skew(I.G1a) * dR_dbg_ + dR_ * I.dG1a * dt) * dt;
  dR_dbg_ = dRk.transpose() * dR_dbg_ - Jr * dt;

  // Deltas, using the pre-update rotation and velocity.
  dp_ += dv_ * dt + dR_ * I.G2a * dt2;
  dv_ += dR_ * I.G1a * dt;
  dR_ = orthonormalize(dR_ * dRk);
  dt_ += dt;
}

Matrix3 PreintegratedImu::correctedDeltaR(const ImuBias& bias) const {
  return dR_ * expSO3(dR_dbg_ * (bias.gyro - bias_.gyro));
}

Vector3 PreintegratedImu::correctedDeltaV(const ImuBias& bias) const {
  return dv_ + dv_dbg_ * (bias.gyro - bias_.gyro) + dv_dba_ * (bias.accel - bias_.accel);
}

Vector3 PreintegratedImu::correctedDeltaP(const ImuBias& bias) const {
  return dp_ + dp_dbg_ * (bias.gyro - bias_.gyro) + dp_dba_ * (bias.accel - bias_.accel);
}

Vector9 PreintegratedImu::residual(const NavState& i, const NavState& j, const ImuBias& bias) const {
  const Matrix3& Ri = i.pose.rotation();
  const Matrix3& Rj = j.pose.rotation();
  const Vector3& g = noise_.gravity;
  Vector9 r;
  r.segment<3>(0) = logSO3(correctedDeltaR(bias).transpose() * Ri.transpose() * Rj);
  r.segment<3>(3) = Ri.transpose() * (j.velocity - i.velocity - g * dt_) - correctedDeltaV(bias);
  r.segment<3>(6) = Ri.transpose() * (j.pose.translation() - i.pose.translation() -
                                      i.velocity * dt_ - 0.5 * g * dt_ * dt_) -
                    correctedDeltaP(bias);
  return r;
}

NavState PreintegratedImu::predict(const NavState& i, const ImuBias& bias) const {
  const Matrix3& Ri = i.pose.rotation();
  const Vector3& g = noise_.gravity;
  NavState j;
  j.pose = Pose(orthonormalize(Ri * correctedDeltaR(bias)),
                i.pose.translation() + i.velocity * dt_ + 0.5 * g * dt_ * dt_ +
                    Ri * correctedDeltaP(bias));
  j.velocity = i.velocity + g * dt_ + Ri * correctedDeltaV(bias);
  return j;
}

// ---------------------------------------------------------------------------

ImuFactor::ImuFactor(Key pose_i, Key vel_i, Key pose_j, Key vel_j, Key bias, PreintegratedImu pim)
    : Factor({pose_i, vel_i, pose_j, vel_j, bias}, GaussianNoise::FromCovariance(pim.covariance())),
      pim_(std::move(pim)) {}

namespace {
struct ImuInputs {
  NavState i, j;
  ImuBias bias;
};

ImuInputs gather(const Values& values, const std::vector<Key>& keys) {
  ImuInputs in;
  in.i.pose = values.pose(keys[0]);
  in.i.velocity = values.vector3(keys[1]);
  in.j.pose = values.pose(keys[2]);
  in.j.velocity = values.vector3(keys[3]);
  in.bias = ImuBias::FromVector(values.vector6(keys[4]));
  return in;
}
}  // namespace

Eigen::VectorXd ImuFactor::error(const Values& values) const {
  const ImuInputs in = gather(values, keys());
  return pim_.residual(in.i, in.j, in.bias);
}

std::vector<Eigen::MatrixXd> ImuFactor::jacobians(const Values& values) const {
  const ImuInputs in = gather(values, keys());
  const Matrix3& Ri = in.i.pose.rotation();
  const Matrix3& Rj = in.j.pose.rotation();
  const Vector3& pi = in.i.pose.translation();
  const Vector3& pj = in.j.pose.translation();
  const Vector3& g = pim_.noise().gravity;
  const double T = pim_.deltaT();

  const Vector3 dbg = in.bias.gyro - pim_.biasLinearization().gyro;
  const Vector3 bias_rot = pim_.dRdBg() * dbg;
  const Vector3 rR = logSO3(pim_.correctedDeltaR(in.bias).transpose() * Ri.transpose() * Rj);
  const Matrix3 JrInv = rightJacobianInverseSO3(rR);
  const Vector3 vel_term = Ri.transpose() * (in.j.velocity - in.i.velocity - g * T);
  const Vector3 pos_term = Ri.transpose() * (pj - pi - in.i.velocity * T - 0.5 * g * T * T);

  Eigen::MatrixXd Hpi = Eigen::MatrixXd::Zero(9, 6);
  Hpi.block<3, 3>(0, 0) = -JrInv * Rj.transpose() * Ri;
  Hpi.block<3, 3>(3, 0) = skew(vel_term);
  Hpi.block<3, 3>(6, 0) = skew(pos_term);
  Hpi.block<3, 3>(6, 3) = -Matrix3::Identity();

  Eigen::MatrixXd Hvi = Eigen::MatrixXd::Zero(9, 3);
  Hvi.block<3, 3>(3, 0) = -Ri.transpose();
  Hvi.block<3, 3>(6, 0) = -Ri.transpose() * T;

  Eigen::MatrixXd Hpj = Eigen::MatrixXd::Zero(9, 6);
  Hpj.block<3, 3>(0, 0) = JrInv;
  Hpj.block<3, 3>(6, 3) = Ri.transpose() * Rj;

  Eigen::MatrixXd Hvj = Eigen::MatrixXd::Zero(9, 3);
  Hvj.block<3, 3>(3, 0) = Ri.transpose();

  Eigen::MatrixXd Hb = Eigen::MatrixXd::Zero(9, 6);
  Hb.block<3, 3>(0, 0) =
      -JrInv * expSO3(rR).transpose() * rightJacobianSO3(bias_rot) * pim_.dRdBg();
  Hb.block<3, 3>(3, 0) = -pim_.dVdBg();
  Hb.block<3, 3>(3, 3) = -pim_.dVdBa();
  Hb.block<3, 3>(6, 0) = -pim_.dPdBg();
  Hb.block<3, 3>(6, 3) = -pim_.dPdBa();

  return {Hpi, Hvi, Hpj, Hvj, Hb};
}

// ---------------------------------------------------------------------------

namespace {
GaussianNoise biasWalkNoise(const ImuNoiseParams& noise, double dt) {
  if (!(dt > 0.0)) throw ValidationError("bias walk interval must be positive");
  Eigen::VectorXd sigmas(6);
  sigmas.head<3>().setConstant(noise.gyro_bias_walk * std::sqrt(dt));
  sigmas.tail<3>().setConstant(noise.accel_bias_walk * std::sqrt(dt));
  return GaussianNoise::FromSigmas(sigmas);
}
}  // namespace

BiasWalkFactor::BiasWalkFactor(Key bias_i, Key bias_j, const ImuNoiseParams& noise, double dt)
    : Factor({bias_i, bias_j}, biasWalkNoise(noise, dt)) {}

Eigen::VectorXd BiasWalkFactor::error(const Values& values) const {
  return values.vector6(keys()[1]) - values.vector6(keys()[0]);
}

std::vector<Eigen::MatrixXd> BiasWalkFactor::jacobians(const Values&) const {
  return {-Eigen::MatrixXd::Identity(6, 6), Eigen::MatrixXd::Identity(6, 6)};
}

}  // namespace legfg
