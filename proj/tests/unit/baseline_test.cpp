#include <gtest/gtest.h>

#include <random>

#include "legfg/baseline.hpp"
#include "legfg/eval.hpp"
#include "legfg/synthdata.hpp"
#include "test_util.hpp"

using namespace legfg;
using legfg::testing::maxJacobianMismatch;
using legfg::testing::randomPose;
using legfg::testing::randomVector6;

namespace {

std::vector<double> randomAngles(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  std::vector<double> q(n);
  for (auto& v : q) v = u(rng);
  return q;
}

Pose chainPose(const LegChain& chain, const std::vector<double>& q) {
  Pose T;
  for (std::size_t j = 0; j < q.size(); ++j) T = T * jointTransform(chain.joints[j], q[j]);
  return T;
}

GaitSpec lowNoiseSpec(double duration, double scale) {
  GaitSpec s = GaitSpec::Defaults("quadruped");
  s.duration = duration;
  s.noise.gyro_density *= scale;
  s.noise.accel_density *= scale;
  s.noise.joint_sigma *= scale;
  s.seed = 11;
  return s;
}

}  // namespace

TEST(Baseline, ResidualVanishesOnKinematicChain) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const Pose base = randomPose(rng), fk = randomPose(rng, 1.0, 0.4);
    EXPECT_LT(baselineFkFactorError(base, base * fk, fk).norm(), 1e-12);
  }
}

TEST(Baseline, MatchesProposedChainAtNoiselessPoint) {
  const RobotModel model = resolveModel("quadruped");
  std::mt19937_64 rng(5);
  const LegChain& chain = model.leg(2);
  const auto q = randomAngles(rng, chain.joints.size());
  const Pose base = randomPose(rng);
  Pose link = base;
  for (std::size_t j = 0; j < q.size(); ++j) {
    const Pose child = link * jointTransform(chain.joints[j], q[j]);
    EXPECT_LT(fkFactorError(link, child, chain.joints[j], q[j]).norm(), 1e-12);
    link = child;
  }
  EXPECT_LT(baselineFkFactorError(base, link, chainPose(chain, q)).norm(), 1e-12);
}

TEST(Baseline, LumpedJacobiansMatchFiniteDifferences) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    Values v;
    v.insert(basePoseKey(0), randomPose(rng, 2.0, 2.0));
    v.insert(linkKey(0, 0, 3), randomPose(rng, 2.0, 2.0));
    const LumpedFkFactor f(basePoseKey(0), linkKey(0, 0, 3), randomPose(rng, 1.0, 0.5),
                           GaussianNoise::Isotropic(6, 0.01));
    EXPECT_LT(maxJacobianMismatch(f, v), 1e-5);
  }
}

TEST(Baseline, ComposedCovarianceOfSingleJointIsPerJoint) {
  const RobotModel model = RobotModel::Parse(R"(<robot name="one">
    <link name="base"/><link name="tip"/>
    <joint name="j" type="revolute"><origin xyz="0.1 0.2 0.3" rpy="0.1 0 0"/>
      <parent link="base"/><child link="tip"/><axis xyz="0 0 1"/></joint>
    <foot link="tip" type="point"/></robot>)");
  Matrix6 per = Matrix6::Zero();
  per.diagonal() << 1, 2, 3, 4, 5, 6;
  EXPECT_TRUE(composedChainCovariance(model.leg(0), {0.4}, per).isApprox(per, 1e-14));
}

TEST(Baseline, ComposedCovarianceMatchesMonteCarlo) {
  // foot = T1 Exp(e1) T2 Exp(e2) T3 Exp(e3); residual Log(fk⁻¹ foot).
  const RobotModel model = resolveModel("quadruped");
  const LegChain& chain = model.leg(0);
  std::mt19937_64 rng(17);
  const auto q = randomAngles(rng, chain.joints.size());
  const double sr = 2e-3, st = 1e-3;
  Matrix6 per = Matrix6::Zero();
  per.diagonal() << sr * sr, sr * sr, sr * sr, st * st, st * st, st * st;
  const Matrix6 composed = composedChainCovariance(chain, q, per);

  const Pose fk = chainPose(chain, q);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix6 sample = Matrix6::Zero();
  const int N = 40000;
  for (int i = 0; i < N; ++i) {
    Pose T;
    for (std::size_t j = 0; j < q.size(); ++j) {
      Vector6 e;
      e << sr * n(rng), sr * n(rng), sr * n(rng), st * n(rng), st * n(rng), st * n(rng);
      T = T * jointTransform(chain.joints[j], q[j]) * expSE3(e);
    }
    const Vector6 r = logSE3(fk.inverse() * T);
    sample += r * r.transpose();
  }
  sample /= N;
  const double scale = composed.diagonal().maxCoeff();
  EXPECT_LT((sample - composed).cwiseAbs().maxCoeff() / scale, 0.05);
}

TEST(Baseline, EstimateBaselineForcesMode) {
  const RobotModel model = resolveModel("quadruped");
  GaitSpec spec = lowNoiseSpec(1.0, 0.0);
  spec.ramp_time = 0.25;
  spec.noise = SynthNoise::Zero();
  const TrajectoryLog log = synthesize(spec, model);
  EstimatorConfig c;
  c.mode = EstimatorMode::Proposed;
  const EstimatedTrajectory est = estimateBaseline(log, model, c);
  EXPECT_EQ(est.mode, EstimatorMode::Baseline);
}

TEST(Baseline, CalibratedLumpedNoiseAgreesWithProposed) {
  const RobotModel model = resolveModel("quadruped");
  const TrajectoryLog log = synthesize(lowNoiseSpec(5.0, 0.1), model);
  EstimatorConfig c;
  const double proposed = evaluateTrajectories(log.ground_truth, estimate(log, model, c).trajectory()).ape.rmse;
  c.baseline_calibrated = true;
  const double baseline = evaluateTrajectories(log.ground_truth, estimateBaseline(log, model, c).trajectory()).ape.rmse;
  EXPECT_LT(std::abs(proposed - baseline), 1e-4);
}

TEST(Baseline, DiffersStructurallyOnNoisyData) {
  const RobotModel model = resolveModel("quadruped");
  const TrajectoryLog log = synthesize(lowNoiseSpec(2.0, 1.0), model);
  EstimatorConfig c;
  const EstimatedTrajectory p = estimate(log, model, c);
  const EstimatedTrajectory b = estimateBaseline(log, model, c);
  EXPECT_NE(p.report.final_objective, b.report.final_objective);
  EXPECT_GT(std::abs(p.report.final_objective - b.report.final_objective), 1e-6 * p.report.final_objective);
}
