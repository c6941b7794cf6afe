#include "quadmimic/rewards.hpp"

#include "quadmimic/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace quadmimic {
namespace {

RobotState random_state(Rng& rng) {
  RobotState s;
  s.base_position = Vec3(rng.normal(), rng.normal(), 0.38 + 0.05 * rng.normal());
  s.base_orientation = Quat(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  s.base_orientation.normalize();
  s.base_linear_velocity = Vec3(rng.normal(), rng.normal(), rng.normal());
  s.base_angular_velocity = Vec3(rng.normal(), rng.normal(), rng.normal());
  for (int j = 0; j < kNumJoints; ++j) {
    s.joint_angles[j] = rng.uniform(-1.5, 1.5);
    s.joint_velocities[j] = rng.normal() * 2.0;
  }
  for (int leg = 0; leg < kNumLegs; ++leg) {
    s.toe_positions[leg] = Vec3(rng.normal(), rng.normal(), 0.05 * rng.uniform());
  }
  return s;
}

ReferencePose random_ref(Rng& rng) {
  ReferencePose r;
  r.base_position = Vec3(rng.normal(), rng.normal(), 0.38 + 0.05 * rng.normal());
  r.base_orientation = Quat(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  r.base_orientation.normalize();
  r.base_linear_velocity = Vec3(rng.normal(), rng.normal(), rng.normal());
  r.base_angular_velocity = Vec3(rng.normal(), rng.normal(), rng.normal());
  for (int j = 0; j < kNumJoints; ++j) {
    r.joint_angles[j] = rng.uniform(-1.5, 1.5);
    r.joint_velocities[j] = rng.normal() * 2.0;
  }
  for (int leg = 0; leg < kNumLegs; ++leg) {
    r.end_effector_positions[leg] = Vec3(rng.normal(), rng.normal(), 0.05 * rng.uniform());
  }
  return r;
}

ReferencePose ref_equal_to(const RobotState& s) {
  ReferencePose r;
  r.base_position = s.base_position;
  r.base_orientation = s.base_orientation;
  r.base_linear_velocity = s.base_linear_velocity;
  r.base_angular_velocity = s.base_angular_velocity;
  r.joint_angles = s.joint_angles;
  r.joint_velocities = s.joint_velocities;
  r.end_effector_positions = s.toe_positions;
  return r;
}

// Straight transcription of the definitions, no shared code with the library.
struct Oracle {
  double jpos, jvel, epos, bpose, bvel, total;
};

Oracle oracle_reward(const RobotState& s, const ReferencePose& r) {
  Oracle o{};
  double sq = 0.0;
  for (int j = 0; j < 12; ++j) {
    const double d = r.joint_angles[j] - s.joint_angles[j];
    sq += d * d;
  }
  o.jpos = std::exp(-sq);

  sq = 0.0;
  for (int j = 0; j < 12; ++j) {
    const double d = r.joint_velocities[j] - s.joint_velocities[j];
    sq += d * d;
  }
  o.jvel = std::exp(-0.1 * sq);

  sq = 0.0;
  for (int leg = 0; leg < 4; ++leg) {
    sq += (r.end_effector_positions[leg] - s.toe_positions[leg]).squaredNorm();
  }
  o.epos = std::exp(-40.0 * sq);

  const double pos_err = (r.base_position - s.base_position).squaredNorm();
  const double dot = std::min(1.0, std::abs(r.base_orientation.coeffs().dot(
                                       s.base_orientation.coeffs())));
  const double ang = 2.0 * std::acos(dot);
  o.bpose = std::exp(-20.0 * pos_err - 10.0 * ang);

  const double lin = (r.base_linear_velocity - s.base_linear_velocity).squaredNorm();
  const double angv = (r.base_angular_velocity - s.base_angular_velocity).squaredNorm();
  o.bvel = std::exp(-2.0 * lin - 0.2 * angv);

  o.total = 0.6 * o.jpos + 0.05 * o.jvel + 0.1 * o.epos + 0.15 * o.bpose + 0.1 * o.bvel;
  return o;
}

TEST(ImitationReward, WeightsSumToOne) {
  const ImitationWeights w;
  EXPECT_NEAR(w.joint_pose + w.joint_velocity + w.end_effector + w.base_pose +
                  w.base_velocity,
              1.0, 1e-15);
}

TEST(ImitationReward, PerfectTrackingScoresOne) {
  Rng rng(21);
  for (int i = 0; i < 10; ++i) {
    const RobotState s = random_state(rng);
    const RewardBreakdown r = imitation_reward(s, ref_equal_to(s));
    EXPECT_NEAR(r.joint_pose, 1.0, 1e-12);
    EXPECT_NEAR(r.joint_velocity, 1.0, 1e-12);
    EXPECT_NEAR(r.end_effector, 1.0, 1e-12);
    EXPECT_NEAR(r.base_pose, 1.0, 1e-12);
    EXPECT_NEAR(r.base_velocity, 1.0, 1e-12);
    EXPECT_NEAR(r.total, 1.0, 1e-12);
  }
}

TEST(ImitationReward, MatchesOracleOnRandomPairs) {
  Rng rng(99);
  for (int i = 0; i < 20; ++i) {
    const RobotState s = random_state(rng);
    const ReferencePose ref = random_ref(rng);
    const RewardBreakdown got = imitation_reward(s, ref);
    const Oracle want = oracle_reward(s, ref);
    EXPECT_NEAR(got.joint_pose, want.jpos, 1e-12) << i;
    EXPECT_NEAR(got.joint_velocity, want.jvel, 1e-12) << i;
    EXPECT_NEAR(got.end_effector, want.epos, 1e-12) << i;
    EXPECT_NEAR(got.base_pose, want.bpose, 1e-12) << i;
    EXPECT_NEAR(got.base_velocity, want.bvel, 1e-12) << i;
    EXPECT_NEAR(got.total, want.total, 1e-12) << i;
  }
}

TEST(ImitationReward, OrientationErrorInsensitiveToQuaternionSign) {
  Rng rng(5);
  const RobotState s = random_state(rng);
  ReferencePose ref = ref_equal_to(s);
  ref.base_orientation.coeffs() *= -1.0;  // same rotation, opposite sign
  const RewardBreakdown r = imitation_reward(s, ref);
  EXPECT_NEAR(r.base_pose, 1.0, 1e-12);
}

TEST(CommandReward, EncodeRelativeHeading) {
  Command c;
  c.target_speed = 0.9;
  c.target_yaw = M_PI / 3.0;
  const Vec3 e = c.encode(M_PI / 6.0);
  EXPECT_NEAR(e[0], std::cos(M_PI / 6.0), 1e-12);
  EXPECT_NEAR(e[1], std::sin(M_PI / 6.0), 1e-12);
  EXPECT_DOUBLE_EQ(e[2], 0.9);
  // wrap-around: -pi and pi describe the same error
  Command w;
  w.target_yaw = M_PI - 0.1;
  const Vec3 ew = w.encode(-M_PI + 0.1);
  EXPECT_NEAR(ew[1], std::sin(-0.2), 1e-12);
}

TEST(CommandReward, MatchesFormula) {
  Rng rng(13);
  for (int i = 0; i < 20; ++i) {
    RobotState s;
    s.base_orientation = Quat(Eigen::AngleAxisd(rng.uniform(-M_PI, M_PI), Vec3::UnitZ()));
    s.base_linear_velocity = Vec3(rng.normal(), rng.normal(), rng.normal());
    Command c;
    c.target_speed = rng.uniform(0.0, 1.5);
    c.target_yaw = rng.uniform(-M_PI, M_PI);

    const Vec3 heading(std::cos(c.target_yaw), std::sin(c.target_yaw), 0.0);
    const double v_t = heading.dot(s.base_linear_velocity);
    const double yaw_err = std::remainder(c.target_yaw - quat_yaw(s.base_orientation),
                                          2.0 * M_PI);
    const double want =
        std::exp(-std::abs(c.target_speed - v_t)) * std::exp(5.0 * (std::cos(yaw_err) - 1.0));
    EXPECT_NEAR(command_reward(s, c), want, 1e-12) << i;
  }
}

TEST(CommandReward, PerfectTrackingScoresOne) {
  RobotState s;
  s.base_orientation = Quat(Eigen::AngleAxisd(0.4, Vec3::UnitZ()));
  Command c;
  c.target_yaw = 0.4;
  c.target_speed = 1.1;
  s.base_linear_velocity = 1.1 * Vec3(std::cos(0.4), std::sin(0.4), 0.0);
  EXPECT_NEAR(command_reward(s, c), 1.0, 1e-12);
}

TEST(StairPenalty, BruteForceGridTakesOnlyQuarterSteps) {
  TerrainParams p;
  p.stair_step_height = 0.16;
  p.stair_step_depth = 0.32;
  p.stair_step_count = 3;
  const TerrainField field(TerrainKind::StairUp, p, 0);

  std::array<Vec3, kNumLegs> toes;
  std::array<bool, kNumLegs> contact;
  for (double x0 = -0.1; x0 <= 0.7; x0 += 0.01) {
    for (int mask = 0; mask < 16; ++mask) {
      for (int leg = 0; leg < kNumLegs; ++leg) {
        toes[leg] = Vec3(x0 + 0.05 * leg, 0.1 * leg, 0.0);
        contact[leg] = (mask >> leg) & 1;
      }
      const double pen = stair_edge_penalty(toes, contact, field);
      // expected: -0.25 per toe in contact strictly inside 5 cm of an edge
      int expected = 0;
      for (int leg = 0; leg < kNumLegs; ++leg) {
        if (!contact[leg]) continue;
        if (field.nearest_stair_edge_distance(toes[leg].x(), toes[leg].y()) <
            kStairEdgeMargin) {
          ++expected;
        }
      }
      EXPECT_NEAR(pen, kStairEdgePenaltyPerToe * expected, 1e-12);
      EXPECT_GE(pen, -1.0 - 1e-12);
      EXPECT_LE(pen, 0.0);
      // quantized to multiples of 0.25
      EXPECT_NEAR(std::remainder(pen, 0.25), 0.0, 1e-12);
    }
  }
}

TEST(StairPenalty, ZeroAwayFromStairs) {
  const TerrainField plane;
  std::array<Vec3, kNumLegs> toes{};
  std::array<bool, kNumLegs> contact{true, true, true, true};
  EXPECT_DOUBLE_EQ(stair_edge_penalty(toes, contact, plane), 0.0);
}

}  // namespace
}  // namespace quadmimic
