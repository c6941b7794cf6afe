#include "quadmimic/kinematics.hpp"

#include "quadmimic/rng.hpp"

#include <gtest/gtest.h>

namespace quadmimic {
namespace {

TEST(Morphology, Defaults) {
  const RobotMorphology m = RobotMorphology::defaults();
  EXPECT_DOUBLE_EQ(m.leg_reach(), 0.5);
  EXPECT_EQ(m.hip_positions[kForeLeft], Vec3(0.3, 0.15, 0.0));
  EXPECT_EQ(m.hip_positions[kForeRight], Vec3(0.3, -0.15, 0.0));
  EXPECT_EQ(m.hip_positions[kHindLeft], Vec3(-0.3, 0.15, 0.0));
  EXPECT_EQ(m.hip_positions[kHindRight], Vec3(-0.3, -0.15, 0.0));
  for (int j = 0; j < kNumJoints; ++j) EXPECT_LT(m.joint_limits[j].lo, m.joint_limits[j].hi);
}

TEST(LegFk, ZeroPoseHangsStraightDown) {
  const RobotMorphology m = RobotMorphology::defaults();
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const Vec3 toe = leg_forward_kinematics(Vec3::Zero(), leg, m);
    const Vec3 expected = m.hip_positions[leg] +
                          Vec3(0.0, leg_side(leg) * m.hip_offset, -m.leg_reach());
    EXPECT_LT((toe - expected).norm(), 1e-12) << "leg " << leg;
  }
}

TEST(LegFk, KneeBendShortensReach) {
  const RobotMorphology m = RobotMorphology::defaults();
  // knee at -pi/2: shank perpendicular to thigh
  const Vec3 toe = leg_forward_kinematics(Vec3(0.0, 0.0, -M_PI / 2.0), kForeLeft, m);
  const Vec3 mount = m.hip_positions[kForeLeft] + Vec3(0.0, m.hip_offset, 0.0);
  const double dist = (toe - mount).norm();
  EXPECT_NEAR(dist, std::hypot(m.thigh_length, m.shank_length), 1e-12);
}

TEST(LegFk, KneeSitsOnThigh) {
  const RobotMorphology m = RobotMorphology::defaults();
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const Vec3 q(rng.uniform(-0.8, 0.8), rng.uniform(-1.6, 1.6), rng.uniform(-2.6, 0.0));
    for (int leg = 0; leg < kNumLegs; ++leg) {
      const Vec3 knee = leg_knee_position(q, leg, m);
      const Vec3 mount =
          m.hip_positions[leg] +
          Eigen::AngleAxisd(q[0], Vec3::UnitX()) * Vec3(0.0, leg_side(leg) * m.hip_offset, 0.0);
      EXPECT_NEAR((knee - mount).norm(), m.thigh_length, 1e-12);
      const Vec3 toe = leg_forward_kinematics(q, leg, m);
      EXPECT_NEAR((toe - knee).norm(), m.shank_length, 1e-12);
    }
  }
}

TEST(LegIk, RoundTripRandomReachableTargets) {
  const RobotMorphology m = RobotMorphology::defaults();
  Rng rng(42);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    int solved = 0;
    for (int i = 0; i < 1000; ++i) {
      // draw a pose inside the limits, FK it, demand IK reproduce the toe
      const Vec3 q(rng.uniform(-0.75, 0.75), rng.uniform(-1.5, 1.5), rng.uniform(-2.5, -0.1));
      const Vec3 target = leg_forward_kinematics(q, leg, m);
      const LegIkResult ik = leg_ik(target, leg, m);
      ASSERT_TRUE(ik.reachable);
      const Vec3 toe = leg_forward_kinematics(ik.angles, leg, m);
      ASSERT_LT((toe - target).norm(), 1e-6) << "leg " << leg << " sample " << i;
      ++solved;
    }
    EXPECT_EQ(solved, 1000);
  }
}

TEST(LegIk, PicksFootBelowSolution) {
  const RobotMorphology m = RobotMorphology::defaults();
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    for (int leg = 0; leg < kNumLegs; ++leg) {
      const Vec3 target = m.hip_positions[leg] +
                          Vec3(rng.uniform(-0.2, 0.2),
                               leg_side(leg) * m.hip_offset + rng.uniform(-0.1, 0.1),
                               rng.uniform(-0.45, -0.2));
      const LegIkResult ik = leg_ik(target, leg, m);
      if (!ik.reachable) continue;
      // knee solution must keep the toe below the hip, not folded above
      const Vec3 toe = leg_forward_kinematics(ik.angles, leg, m);
      EXPECT_LT(toe.z(), m.hip_positions[leg].z());
      EXPECT_LE(ik.angles[2], 1e-12);  // knee bends one way only
    }
  }
}

TEST(LegIk, UnreachableTargetClampedToShell) {
  const RobotMorphology m = RobotMorphology::defaults();
  const Vec3 far = m.hip_positions[kForeLeft] + Vec3(0.0, m.hip_offset, -2.0);
  const LegIkResult ik = leg_ik(far, kForeLeft, m);
  EXPECT_FALSE(ik.reachable);
  const Vec3 toe = leg_forward_kinematics(ik.angles, kForeLeft, m);
  const Vec3 mount = m.hip_positions[kForeLeft] + Vec3(0.0, m.hip_offset, 0.0);
  EXPECT_NEAR((toe - mount).norm(), m.leg_reach(), 1e-9);
}

TEST(LegIk, LimitFlagReflectsJointLimits) {
  const RobotMorphology m = RobotMorphology::defaults();
  const Vec3 ok = m.hip_positions[kForeLeft] + Vec3(0.0, m.hip_offset, -0.38);
  EXPECT_TRUE(leg_ik(ok, kForeLeft, m).within_limits);
}

TEST(LegJacobian, MatchesFiniteDifferences) {
  const RobotMorphology m = RobotMorphology::defaults();
  Rng rng(3);
  const double h = 1e-7;
  for (int i = 0; i < 50; ++i) {
    const Vec3 q(rng.uniform(-0.7, 0.7), rng.uniform(-1.4, 1.4), rng.uniform(-2.4, -0.1));
    for (int leg = 0; leg < kNumLegs; ++leg) {
      const Mat3 jac = leg_jacobian(q, leg, m);
      for (int j = 0; j < 3; ++j) {
        Vec3 qp = q, qm = q;
        qp[j] += h;
        qm[j] -= h;
        const Vec3 fd = (leg_forward_kinematics(qp, leg, m) -
                         leg_forward_kinematics(qm, leg, m)) /
                        (2.0 * h);
        EXPECT_LT((jac.col(j) - fd).norm(), 1e-6) << "leg " << leg << " col " << j;
      }
    }
  }
}

TEST(FullFk, WorldTransformApplied) {
  const RobotMorphology m = RobotMorphology::defaults();
  const Vec3 base(1.0, -2.0, 0.5);
  const Quat rot(Eigen::AngleAxisd(0.3, Vec3::UnitZ()));
  Vec12 q = Vec12::Zero();
  const auto toes = forward_kinematics(base, rot, q, m);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const Vec3 local = leg_forward_kinematics(q.segment<3>(3 * leg), leg, m);
    EXPECT_LT((toes[leg] - (base + rot * local)).norm(), 1e-12);
  }
}

}  // namespace
}  // namespace quadmimic
