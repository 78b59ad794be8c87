#include <gtest/gtest.h>

#include <filesystem>

#include "legfg/baseline.hpp"
#include "legfg/estimator.hpp"
#include "legfg/eval.hpp"
#include "legfg/synthdata.hpp"

using namespace legfg;

namespace {

// One leg, three revolute joints, point foot.
const char* kOneLeg = R"(<robot name="oneleg">
  <link name="base"/>
  <link name="hip"/>
  <link name="thigh"/>
  <link name="shank"/>
  <joint name="j1" type="revolute">
    <origin xyz="0.2 0 0" rpy="0 0 0"/>
    <parent link="base"/>
    <child link="hip"/>
    <axis xyz="1 0 0"/>
  </joint>
  <joint name="j2" type="revolute">
    <origin xyz="0 0.05 0" rpy="0 0 0"/>
    <parent link="hip"/>
    <child link="thigh"/>
    <axis xyz="0 1 0"/>
  </joint>
  <joint name="j3" type="revolute">
    <origin xyz="0 0 -0.2" rpy="0 0 0"/>
    <parent link="thigh"/>
    <child link="shank"/>
    <axis xyz="0 1 0"/>
  </joint>
  <foot link="shank" type="point"/>
</robot>)";

// Standing still for two keyframes at 100 Hz, joints and IMU at 200 Hz.
TrajectoryLog standingLog() {
  TrajectoryLog log;
  log.joint_names = {"j1", "j2", "j3"};
  for (int s = 0; s <= 2; ++s) {
    const double t = 0.005 * s;
    log.imu.push_back({t, Vector3::Zero(), Vector3(0, 0, 9.81)});
    log.joints.push_back({t, {0.1, 0.6, -1.2}});
    log.contacts.push_back({t, {1}});
  }
  log.ground_truth.push_back({0.0, Pose(Matrix3::Identity(), Vector3(0, 0, 0.3))});
  log.meta["keyframe_rate"] = "100";
  return log;
}

EstimatorConfig toyConfig(EstimatorMode mode) {
  EstimatorConfig c;
  c.mode = mode;
  c.segmentation.debounce_on = 1;
  c.segmentation.debounce_off = 1;
  return c;
}

GaitSpec zeroNoiseSpec(const std::string& model, double duration, PathShape shape = PathShape::Straight) {
  GaitSpec s = GaitSpec::Defaults(model);
  s.duration = duration;
  s.ramp_time = std::min(1.0, duration / 4);
  s.shape = shape;
  s.noise = SynthNoise::Zero();
  return s;
}

double apeOf(const TrajectoryLog& log, const EstimatedTrajectory& est) {
  return evaluateTrajectories(log.ground_truth, est.trajectory()).ape.rmse;
}

std::size_t countFactors(const FactorGraph& g, const std::string& name) {
  std::size_t n = 0;
  for (const auto& f : g) n += f->name() == name;
  return n;
}

}  // namespace

TEST(Estimator, ToyGraphCountsProposed) {
  const RobotModel model = RobotModel::Parse(kOneLeg);
  const EstimationProblem p = buildProblem(standingLog(), model, toyConfig(EstimatorMode::Proposed));
  EXPECT_EQ(p.keyframeCount(), 2);
  ASSERT_EQ(p.phases.size(), 1u);
  EXPECT_EQ(countFactors(p.graph, "ImuFactor"), 1u);
  EXPECT_EQ(countFactors(p.graph, "JointFkFactor"), 6u);
  EXPECT_EQ(countFactors(p.graph, "PointContactFactor"), 2u);
  // The first-state prior is split into pose, velocity and bias factors.
  EXPECT_EQ(p.graph.size(), 3u + 1u + 6u + 2u);
  // 2 poses, 2 velocities, 1 bias, 6 link poses, 1 landmark.
  EXPECT_EQ(p.initial.size(), 12u);
}

TEST(Estimator, ToyGraphCountsBaseline) {
  const RobotModel model = RobotModel::Parse(kOneLeg);
  const EstimationProblem p = buildProblem(standingLog(), model, toyConfig(EstimatorMode::Baseline));
  EXPECT_EQ(countFactors(p.graph, "LumpedFkFactor"), 2u);
  EXPECT_EQ(countFactors(p.graph, "JointFkFactor"), 0u);
  EXPECT_EQ(p.graph.size(), 3u + 1u + 2u + 2u);
  EXPECT_EQ(p.initial.size(), 8u);
}

TEST(Estimator, ToyStandingSolvesToRest) {
  const RobotModel model = RobotModel::Parse(kOneLeg);
  const TrajectoryLog log = standingLog();
  for (auto mode : {EstimatorMode::Proposed, EstimatorMode::Baseline}) {
    const EstimatedTrajectory est = estimate(log, model, toyConfig(mode));
    ASSERT_TRUE(est.converged());
    ASSERT_EQ(est.states.size(), 2u);
    EXPECT_LT((est.states[1].pose.translation() - Vector3(0, 0, 0.3)).norm(), 1e-9);
    EXPECT_LT(est.states[1].velocity.norm(), 1e-9);
    EXPECT_LT(est.report.final_objective, 1e-15);
  }
}

TEST(Estimator, EmptyLogIsRejected) {
  const RobotModel model = RobotModel::Parse(kOneLeg);
  TrajectoryLog log = standingLog();
  log.imu.clear();
  EXPECT_THROW(buildProblem(log, model, toyConfig(EstimatorMode::Proposed)), ValidationError);
}

TEST(Estimator, MissingJointIsNamed) {
  const RobotModel model = RobotModel::Parse(kOneLeg);
  TrajectoryLog log = standingLog();
  log.joint_names = {"j1", "j2", "other"};
  try {
    buildProblem(log, model, toyConfig(EstimatorMode::Proposed));
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("'j3'"), std::string::npos) << e.what();
  }
}

TEST(Estimator, NoContactsIsRejected) {
  const RobotModel model = RobotModel::Parse(kOneLeg);
  TrajectoryLog log = standingLog();
  for (auto& c : log.contacts) c.in_contact = {0};
  try {
    buildProblem(log, model, toyConfig(EstimatorMode::Proposed));
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("stance"), std::string::npos) << e.what();
  }
}

TEST(Estimator, KeyframeRateMustDivideSampleRate) {
  const RobotModel model = RobotModel::Parse(kOneLeg);
  EstimatorConfig c = toyConfig(EstimatorMode::Proposed);
  c.keyframe_rate = 30;
  EXPECT_THROW(buildProblem(standingLog(), model, c), ValidationError);
}

TEST(Estimator, PreintegratedTimeCoversLog) {
  const RobotModel model = resolveModel("quadruped");
  const TrajectoryLog log = synthesize(zeroNoiseSpec("quadruped", 2.0), model);
  const EstimationProblem p = buildProblem(log, model, EstimatorConfig{});
  EXPECT_NEAR(p.preintegrated_time, p.keyframe_times.back() - p.keyframe_times.front(), 1e-9);
  EXPECT_EQ(p.preintegrations.size(), static_cast<std::size_t>(p.keyframeCount() - 1));
}

TEST(Estimator, GroundTruthIsAZeroObjectivePoint) {
  const RobotModel model = resolveModel("quadruped");
  const TrajectoryLog log = synthesize(zeroNoiseSpec("quadruped", 2.0, PathShape::Turn), model);
  for (auto mode : {EstimatorMode::Proposed, EstimatorMode::Baseline}) {
    EstimatorConfig c;
    c.mode = mode;
    const EstimationProblem p = buildProblem(log, model, c);
    const Values truth = groundTruthValues(log, model, c, p);
    EXPECT_LT(p.graph.objective(truth), 1e-12) << toString(mode);
  }
}

TEST(Estimator, ZeroNoiseRecoveryQuadruped) {
  const RobotModel model = resolveModel("quadruped");
  const TrajectoryLog log = synthesize(zeroNoiseSpec("quadruped", 3.0, PathShape::ZigZag), model);
  for (auto mode : {EstimatorMode::Proposed, EstimatorMode::Baseline}) {
    EstimatorConfig c;
    c.mode = mode;
    const EstimatedTrajectory est = estimate(log, model, c);
    EXPECT_TRUE(est.converged());
    EXPECT_LT(apeOf(log, est), 1e-6) << toString(mode);
    EXPECT_LT(est.report.final_objective, 1e-12);
  }
}

TEST(Estimator, ZeroNoiseRecoveryBipedFlatFeet) {
  const RobotModel model = resolveModel("biped");
  const TrajectoryLog log = synthesize(zeroNoiseSpec("biped", 3.0), model);
  for (auto mode : {EstimatorMode::Proposed, EstimatorMode::Baseline}) {
    EstimatorConfig c;
    c.mode = mode;
    const EstimatedTrajectory est = estimate(log, model, c);
    EXPECT_TRUE(est.converged());
    EXPECT_LT(apeOf(log, est), 1e-6) << toString(mode);
    for (const auto& l : est.landmarks) EXPECT_TRUE(std::holds_alternative<Pose>(l.value));
  }
}

TEST(Estimator, RepeatedRunsAreBitwiseIdentical) {
  const RobotModel model = resolveModel("quadruped");
  GaitSpec spec = zeroNoiseSpec("quadruped", 2.0);
  spec.noise = SynthNoise{};
  const TrajectoryLog log = synthesize(spec, model);
  const EstimatedTrajectory a = estimate(log, model, EstimatorConfig{});
  const EstimatedTrajectory b = estimate(log, model, EstimatorConfig{});
  ASSERT_EQ(a.states.size(), b.states.size());
  for (std::size_t i = 0; i < a.states.size(); ++i) {
    EXPECT_EQ(a.states[i].pose.matrix(), b.states[i].pose.matrix());
    EXPECT_EQ(a.states[i].velocity, b.states[i].velocity);
  }
  EXPECT_EQ(a.report.final_objective, b.report.final_objective);
}

TEST(Estimator, BaselineHasFewerVariables) {
  const RobotModel model = resolveModel("quadruped");
  const TrajectoryLog log = synthesize(zeroNoiseSpec("quadruped", 2.0), model);
  EstimatorConfig c;
  const EstimationProblem proposed = buildProblem(log, model, c);
  c.mode = EstimatorMode::Baseline;
  const EstimationProblem baseline = buildProblem(log, model, c);
  EXPECT_LT(baseline.initial.size(), proposed.initial.size());
  EXPECT_LT(baseline.graph.size(), proposed.graph.size());
}

TEST(Estimator, BiasChainAddsWalkFactors) {
  const RobotModel model = RobotModel::Parse(kOneLeg);
  EstimatorConfig c = toyConfig(EstimatorMode::Proposed);
  c.bias_chain = true;
  const EstimationProblem p = buildProblem(standingLog(), model, c);
  EXPECT_EQ(countFactors(p.graph, "BiasWalkFactor"), 1u);
  EXPECT_TRUE(p.initial.contains(biasKey(1)));
}

TEST(Estimator, ConfigRoundTripAndUnknownKeys) {
  EstimatorConfig c;
  c.mode = EstimatorMode::Baseline;
  c.fk_rot_sigma = 0.003;
  c.lm.max_iterations = 7;
  c.segmentation.debounce_on = 3;
  const EstimatorConfig back = EstimatorConfig::FromConfig(c.toConfig());
  EXPECT_EQ(back.toConfig().toText(), c.toConfig().toText());

  KeyValueConfig bad;
  bad.set("fk.rot_sigmaa", "0.1");
  EXPECT_THROW(EstimatorConfig::FromConfig(bad), ValidationError);
  KeyValueConfig negative;
  negative.set("contact.sigma", "-1");
  EXPECT_THROW(EstimatorConfig::FromConfig(negative), ValidationError);
  KeyValueConfig mode;
  mode.set("mode", "ekf");
  EXPECT_THROW(EstimatorConfig::FromConfig(mode), ValidationError);
}

TEST(Estimator, WritesOutputFiles) {
  const RobotModel model = RobotModel::Parse(kOneLeg);
  const EstimatedTrajectory est = estimate(standingLog(), model, toyConfig(EstimatorMode::Proposed));
  const auto dir = std::filesystem::temp_directory_path() / "legfg_estimator_test_out";
  std::filesystem::remove_all(dir);
  writeEstimate(est, toyConfig(EstimatorMode::Proposed), dir.string());
  for (const char* f : {"estimate.txt", "report.txt", "convergence.txt", "config.txt", "landmarks.txt"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  const Trajectory back = readTum((dir / "estimate.txt").string());
  ASSERT_EQ(back.size(), 2u);
  EXPECT_TRUE(back[1].pose.isApprox(est.states[1].pose, 1e-15));
  const std::string report = readTextFile((dir / "report.txt").string());
  EXPECT_NE(report.find("converged=true"), std::string::npos);
  std::filesystem::remove_all(dir);
}
