#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "legfg/lie.hpp"
#include "test_util.hpp"

using namespace legfg;
using legfg::testing::randomPose;
using legfg::testing::randomVector3;
using legfg::testing::randomVector6;

namespace {

constexpr double kPi = std::numbers::pi;

Matrix3 seriesExp(const Matrix3& A) {
  Matrix3 sum = Matrix3::Identity();
  Matrix3 term = Matrix3::Identity();
  for (int n = 1; n <= 30; ++n) {
    term = term * A / n;
    sum += term;
  }
  return sum;
}

}  // namespace

TEST(Lie, ExpZeroIsIdentity) { EXPECT_TRUE(expSO3(Vector3::Zero()).isApprox(Matrix3::Identity())); }

TEST(Lie, ExpQuarterTurnAboutZ) {
  const Matrix3 R = expSO3(Vector3(0, 0, kPi / 2));
  EXPECT_LT((R * Vector3::UnitX() - Vector3::UnitY()).norm(), 1e-15);
  EXPECT_LT((R * Vector3::UnitY() + Vector3::UnitX()).norm(), 1e-15);
}

TEST(Lie, ExpMatchesPowerSeries) {
  const Vector3 w(0.1, 0.2, 0.3);
  EXPECT_LT((expSO3(w) - seriesExp(skew(w))).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Lie, LogIdentityAndRoundTrip) {
  EXPECT_EQ(logSO3(Matrix3::Identity()), Vector3::Zero());
  const Vector3 w(0.3, -0.1, 0.2);
  EXPECT_LT((logSO3(expSO3(w)) - w).norm(), 1e-10);
}

TEST(Lie, LogNearPi) {
  const double angle = kPi - 1e-6;
  Matrix3 R;
  R << 1, 0, 0, 0, std::cos(angle), -std::sin(angle), 0, std::sin(angle), std::cos(angle);
  const Vector3 w = logSO3(R);
  // Oracle: quaternion extraction of the same matrix.
  const Eigen::AngleAxisd aa{Eigen::Quaterniond(R)};
  EXPECT_NEAR(w.norm(), aa.angle(), 1e-6);
  EXPECT_NEAR(w.norm(), angle, 1e-6);
  EXPECT_LT((w.normalized() - Vector3::UnitX()).norm(), 1e-6);
}

TEST(Lie, LogAtPiIsValidRotation) {
  for (const Vector3& axis : {Vector3(1, 0, 0), Vector3(0, 1, 1).normalized(), Vector3(1, -2, 3).normalized()}) {
    const Matrix3 R = Eigen::AngleAxisd(kPi, axis).toRotationMatrix();
    const Vector3 w = logSO3(R);
    EXPECT_NEAR(w.norm(), kPi, 1e-9);
    EXPECT_LT((expSO3(w) - R).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Lie, So3RoundTripProperty) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    Vector3 w = randomVector3(rng, 2.0);
    if (w.norm() > kPi - 1e-3) w *= (kPi - 1e-3) / w.norm();
    EXPECT_LT((logSO3(expSO3(w)) - w).norm(), 1e-9);
  }
}

TEST(Lie, SmallAnglesStayAccurate) {
  for (double s : {1e-12, 1e-9, 1e-7, 1e-5}) {
    const Vector3 w = Vector3(1, -2, 0.5).normalized() * s;
    EXPECT_LT((logSO3(expSO3(w)) - w).norm(), 1e-15);
    EXPECT_LT((expSO3(w) - seriesExp(skew(w))).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Lie, Se3ZeroAndTranslation) {
  EXPECT_TRUE(expSE3(Twist::Zero()).isApprox(Pose::Identity(), 0.0));
  Twist xi;
  xi << 0, 0, 0, 1, 2, 3;
  const Pose T = expSE3(xi);
  EXPECT_TRUE(T.rotation().isApprox(Matrix3::Identity()));
  EXPECT_LT((T.translation() - Vector3(1, 2, 3)).norm(), 1e-15);
}

TEST(Lie, Se3MatchesMatrixExponential) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 50; ++i) {
    const Twist xi = randomVector6(rng, 0.8);
    Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
    A.topLeftCorner<3, 3>() = skew(xi.head<3>());
    A.topRightCorner<3, 1>() = xi.tail<3>();
    Eigen::Matrix4d sum = Eigen::Matrix4d::Identity(), term = Eigen::Matrix4d::Identity();
    for (int n = 1; n <= 30; ++n) {
      term = term * A / n;
      sum += term;
    }
    EXPECT_LT((expSE3(xi).matrix() - sum).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Lie, Se3RoundTripProperty) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    Twist xi = randomVector6(rng, 1.0);
    xi.head<3>() = xi.head<3>().normalized() * 0.7;
    EXPECT_LT((logSE3(expSE3(xi)) - xi).norm(), 1e-10);
  }
}

TEST(Lie, RightJacobianIdentityAtZero) {
  EXPECT_TRUE(rightJacobianSO3(Vector3::Zero()).isApprox(Matrix3::Identity()));
}

TEST(Lie, RightJacobianFiniteDifference) {
  const Vector3 w(0.2, 0.1, -0.3);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 20; ++i) {
    const Vector3 d = randomVector3(rng).normalized() * 1e-4;
    const Vector3 lhs = logSO3(expSO3(w).transpose() * expSO3(w + d));
    EXPECT_LT((lhs - rightJacobianSO3(w) * d).norm(), 1e-6);
  }
}

TEST(Lie, RightJacobianClosedForm) {
  const Vector3 w(kPi / 2, 0, 0);
  const double th = w.norm();
  const Matrix3 W = skew(w);
  const Matrix3 expected = Matrix3::Identity() - (1 - std::cos(th)) / (th * th) * W +
                           (th - std::sin(th)) / (th * th * th) * W * W;
  EXPECT_LT((rightJacobianSO3(w) - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Lie, JacobianInverses) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const Vector3 w = randomVector3(rng, 1.5);
    EXPECT_LT((rightJacobianSO3(w) * rightJacobianInverseSO3(w) - Matrix3::Identity()).norm(), 1e-12);
    EXPECT_LT((leftJacobianSO3(w) * leftJacobianInverseSO3(w) - Matrix3::Identity()).norm(), 1e-12);
    const Twist xi = randomVector6(rng, 1.0);
    EXPECT_LT((rightJacobianSE3(xi) * rightJacobianInverseSE3(xi) - Matrix6::Identity()).norm(), 1e-11);
  }
}

TEST(Lie, Se3JacobiansFiniteDifference) {
  std::mt19937_64 rng(6);
  for (double scale : {1.0, 1e-3}) {
    for (int i = 0; i < 20; ++i) {
      const Twist xi = randomVector6(rng, scale);
      const Matrix6 Jr = rightJacobianSE3(xi);
      const Matrix6 Jl = leftJacobianSE3(xi);
      Matrix6 fdr, fdl;
      const double h = 1e-6;
      for (int c = 0; c < 6; ++c) {
        Twist d = Twist::Zero();
        d[c] = h;
        fdr.col(c) = (logSE3(expSE3(xi).inverse() * expSE3(xi + d)) -
                      logSE3(expSE3(xi).inverse() * expSE3(xi - d))) / (2 * h);
        fdl.col(c) = (logSE3(expSE3(xi + d) * expSE3(xi).inverse()) -
                      logSE3(expSE3(xi - d) * expSE3(xi).inverse())) / (2 * h);
      }
      EXPECT_LT((Jr - fdr).cwiseAbs().maxCoeff(), 1e-7);
      EXPECT_LT((Jl - fdl).cwiseAbs().maxCoeff(), 1e-7);
    }
  }
}

TEST(Lie, AdjointConjugatesTwists) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    const Pose T = randomPose(rng);
    const Twist xi = randomVector6(rng, 0.5);
    const Pose lhs = T * expSE3(xi) * T.inverse();
    EXPECT_TRUE(lhs.isApprox(expSE3(T.adjoint() * xi), 1e-12));
  }
}

TEST(Lie, PoseGroupAxioms) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 100; ++i) {
    const Pose a = randomPose(rng), b = randomPose(rng), c = randomPose(rng);
    EXPECT_TRUE(((a * b) * c).isApprox(a * (b * c), 1e-12));
    EXPECT_TRUE((a * a.inverse()).isApprox(Pose::Identity(), 1e-9));
    const Twist d = randomVector6(rng, 0.3);
    EXPECT_LT((a.localCoordinates(a.retract(d)) - d).norm(), 1e-9);
  }
}

TEST(Lie, SameAxisCompositionDoubles) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 100; ++i) {
    const Vector3 w = randomVector3(rng).normalized() * 1.2;
    EXPECT_LT((logSO3(expSO3(w) * expSO3(w)) - 2 * w).norm(), 1e-9);
  }
}

TEST(Lie, RepeatedCompositionStaysOrthonormal) {
  const Matrix3 step = expSO3(Vector3(1e-3, -2e-3, 0.5e-3));
  Matrix3 R = Matrix3::Identity();
  for (int i = 0; i < 1000000; ++i) R = orthonormalize(R * step);
  EXPECT_LT((R * R.transpose() - Matrix3::Identity()).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_NEAR(R.determinant(), 1.0, 1e-6);
}

TEST(Lie, RpyAndYaw) {
  const Pose T = Pose::FromRpy(0.0, 0.0, 0.4, Vector3::Zero());
  EXPECT_NEAR(yawOf(T.rotation()), 0.4, 1e-15);
  EXPECT_TRUE(rotZ(0.4).isApprox(T.rotation()));
  const Pose U = Pose::FromRpy(0.1, -0.2, 0.3, Vector3::Zero());
  const Matrix3 expected = (Eigen::AngleAxisd(0.3, Vector3::UnitZ()) * Eigen::AngleAxisd(-0.2, Vector3::UnitY()) *
                            Eigen::AngleAxisd(0.1, Vector3::UnitX())).toRotationMatrix();
  EXPECT_LT((U.rotation() - expected).cwiseAbs().maxCoeff(), 1e-15);
}
