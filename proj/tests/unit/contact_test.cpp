#include <gtest/gtest.h>

#include <cmath>

#include "legfg/contact.hpp"
#include "legfg/priors.hpp"
#include "test_util.hpp"

using namespace legfg;
using legfg::testing::maxJacobianMismatch;
using legfg::testing::randomPose;
using legfg::testing::randomVector3;

namespace {

std::vector<double> keyframeTimes(int n, double dt) {
  std::vector<double> t;
  for (int i = 0; i < n; ++i) t.push_back(i * dt);
  return t;
}

/// Trot-like schedule at 200 Hz: leg f is in stance during the first half of
/// each 0.6 s cycle shifted by offset[f].
std::vector<ContactSample> trotSchedule(double duration) {
  const int period = 120, stance = 60;
  const int offsets[4] = {0, 60, 60, 0};
  std::vector<ContactSample> out;
  const int n = static_cast<int>(std::lround(duration * 200));
  for (int s = 0; s <= n; ++s) {
    ContactSample c;
    c.t = s / 200.0;
    for (int f = 0; f < 4; ++f) c.in_contact.push_back(((s + period - offsets[f]) % period) < stance ? 1 : 0);
    out.push_back(c);
  }
  return out;
}

}  // namespace

TEST(Contact, AlwaysInContactIsOnePhase) {
  std::vector<ContactSample> samples;
  for (int i = 0; i < 40; ++i) samples.push_back({i * 0.005, {1}});
  const auto phases = segmentPhases(samples, keyframeTimes(10, 0.02), 1, {});
  ASSERT_EQ(phases.size(), 1u);
  EXPECT_EQ(phases[0].start_keyframe, 0);
  EXPECT_EQ(phases[0].end_keyframe, 9);
  EXPECT_EQ(phases[0].length(), 10);
}

TEST(Contact, AlternatingFlagsAreSuppressed) {
  std::vector<ContactSample> samples;
  for (int i = 0; i < 200; ++i) samples.push_back({i * 0.005, {static_cast<uint8_t>(i % 2)}});
  EXPECT_TRUE(segmentPhases(samples, keyframeTimes(50, 0.02), 1, {}).empty());
}

TEST(Contact, TrotScheduleGivesTenPhasesPerLeg) {
  const auto samples = trotSchedule(6.0);
  const auto phases = segmentPhases(samples, keyframeTimes(301, 0.02), 4, {});
  int count[4] = {0, 0, 0, 0};
  for (const auto& p : phases) ++count[p.leg];
  for (int f = 0; f < 4; ++f) EXPECT_EQ(count[f], 10) << "leg " << f;
  // Oracle: stance of leg 0 is [0.6 c, 0.6 c + 0.295] s, i.e. keyframes 30c .. 30c + 14.
  int c = 0;
  for (const auto& p : phases) {
    if (p.leg != 0) continue;
    EXPECT_EQ(p.start_keyframe, 30 * c);
    EXPECT_EQ(p.end_keyframe, 30 * c + 14);
    ++c;
  }
  for (std::size_t i = 0; i < phases.size(); ++i) EXPECT_EQ(phases[i].landmark, static_cast<int>(i));
}

TEST(Contact, InsensitiveToSingleSampleFlips) {
  const auto clean = trotSchedule(6.0);
  const auto kf = keyframeTimes(301, 0.02);
  const auto expected = segmentPhases(clean, kf, 4, {});
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> pick(2, static_cast<int>(clean.size()) - 3);
  for (int trial = 0; trial < 50; ++trial) {
    auto noisy = clean;
    for (int k = 0; k < 20; ++k) {
      const int s = pick(rng);
      const int f = k % 4;
      // Only isolated flips away from transitions.
      const auto flag = clean[s].in_contact[f];
      if (clean[s - 2].in_contact[f] != flag || clean[s + 2].in_contact[f] != flag) continue;
      if (noisy[s - 1].in_contact[f] != flag || noisy[s + 1].in_contact[f] != flag) continue;
      noisy[s].in_contact[f] = flag ? 0 : 1;
    }
    const auto got = segmentPhases(noisy, kf, 4, {});
    ASSERT_EQ(got.size(), expected.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].leg, expected[i].leg);
      EXPECT_EQ(got[i].start_keyframe, expected[i].start_keyframe);
      EXPECT_EQ(got[i].end_keyframe, expected[i].end_keyframe);
    }
  }
}

TEST(Contact, ShortPhasesDropped) {
  std::vector<ContactSample> samples;
  for (int i = 0; i < 40; ++i) samples.push_back({i * 0.005, {static_cast<uint8_t>(i >= 10 && i < 14)}});
  SegmentationConfig cfg;
  EXPECT_TRUE(segmentPhases(samples, keyframeTimes(10, 0.02), 1, cfg).empty());
  cfg.min_phase_keyframes = 1;
  EXPECT_EQ(segmentPhases(samples, keyframeTimes(10, 0.02), 1, cfg).size(), 1u);
}

TEST(Contact, SegmentationErrors) {
  EXPECT_THROW(segmentPhases({}, {0.0}, 1, {}), ValidationError);
  EXPECT_THROW(segmentPhases({{0.0, {1, 0}}}, {0.0}, 1, {}), ValidationError);
  SegmentationConfig bad;
  bad.debounce_on = 0;
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(Contact, FactorErrors) {
  const Pose foot(Matrix3::Identity(), Vector3(1, 2, 0.01));
  EXPECT_LT(contactFactorError(foot, Vector3(1, 2, 0.01), FootType::Point).norm(), 1e-15);
  EXPECT_LT((contactFactorError(foot, Vector3(1, 2, 0), FootType::Point) - Vector3(0, 0, 0.01)).norm(), 1e-15);

  const Pose landmark(Matrix3::Identity(), Vector3(1, 2, 0));
  const Pose yawed(rotZ(0.1), Vector3(1, 2, 0));
  const Eigen::VectorXd r = contactFactorError(yawed, landmark, FootType::Flat);
  EXPECT_NEAR(r[2], 0.1, 1e-9);
  EXPECT_LT(r.tail<3>().norm(), 1e-12);
  EXPECT_THROW(contactFactorError(yawed, Vector3(0, 0, 0), FootType::Flat), ValidationError);
}

TEST(Contact, FactorJacobians) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 50; ++trial) {
    Values values;
    values.insert(linkKey(0, 0, 3), randomPose(rng));
    values.insert(landmarkKey(0), randomVector3(rng));
    values.insert(landmarkKey(1), randomPose(rng));
    const PointContactFactor point(linkKey(0, 0, 3), landmarkKey(0), GaussianNoise::Isotropic(3, 0.01));
    const FlatContactFactor flat(linkKey(0, 0, 3), landmarkKey(1), GaussianNoise::Isotropic(6, 0.01));
    EXPECT_LT(maxJacobianMismatch(point, values), 1e-5);
    EXPECT_LT(maxJacobianMismatch(flat, values), 1e-5);
  }
}

TEST(Contact, StationaryFootSubgraphIsConsistent) {
  std::mt19937_64 rng(33);
  const Pose foot = randomPose(rng);
  FactorGraph graph;
  Values init;
  init.insert(landmarkKey(0), Vector3(foot.translation() + randomVector3(rng, 0.05)));
  for (int k = 0; k < 6; ++k) {
    graph.emplace<PosePriorFactor>(linkKey(k, 0, 3), foot, GaussianNoise::Isotropic(6, 0.01));
    graph.emplace<PointContactFactor>(linkKey(k, 0, 3), landmarkKey(0), GaussianNoise::Isotropic(3, 0.01));
    init.insert(linkKey(k, 0, 3), foot.retract(legfg::testing::randomVector6(rng, 0.02)));
  }
  const LmResult res = optimize(graph, init);
  for (const auto& f : graph) {
    if (f->name() == "PointContactFactor") EXPECT_LT(f->error(res.values).norm(), 1e-9);
  }
}
