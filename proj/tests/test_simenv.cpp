#include "quadmimic/simenv.hpp"

#include "quadmimic/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace quadmimic {
namespace {

SimConfig quiet_config() {
  SimConfig cfg;
  cfg.randomize_domain = false;  // nominal domain, no perception noise
  return cfg;
}

RobotState airborne_state(double z) {
  SimConfig cfg;
  RobotState s = SimEnv::standing_state(cfg, TerrainField(), 0.0, 0.0, 0.0);
  s.base_position.z() = z;
  for (int leg = 0; leg < kNumLegs; ++leg) s.toe_positions[leg].z() += z - 0.38;
  return s;
}

TEST(PdTorque, ClampsToLimitAndFlags) {
  bool clamped = false;
  EXPECT_DOUBLE_EQ(pd_torque(10.0, 0.0, 0.0, 55.0, 0.8, 20.0, &clamped), 20.0);
  EXPECT_TRUE(clamped);
  EXPECT_DOUBLE_EQ(pd_torque(-10.0, 0.0, 0.0, 55.0, 0.8, 20.0, &clamped), -20.0);
  EXPECT_TRUE(clamped);
  EXPECT_DOUBLE_EQ(pd_torque(0.1, 0.0, 0.0, 55.0, 0.8, 20.0, &clamped), 5.5);
  EXPECT_FALSE(clamped);
  // damping term opposes velocity
  EXPECT_DOUBLE_EQ(pd_torque(0.0, 0.0, 2.0, 55.0, 0.8, 20.0, nullptr), -1.6);
}

TEST(DomainParams, SampleRangesAndDrawOrder) {
  for (uint64_t seed : {1ull, 7ull, 912ull}) {
    Rng rng(seed);
    const DomainParams p = DomainParams::sample(rng);
    EXPECT_GE(p.friction, 0.5);
    EXPECT_LE(p.friction, 1.2);
    EXPECT_GE(p.torque_limit, 16.0);
    EXPECT_LE(p.torque_limit, 23.0);
    EXPECT_GE(p.base_mass_scale, 0.7);
    EXPECT_LE(p.base_mass_scale, 1.3);
    EXPECT_DOUBLE_EQ(p.perception_noise_std, kPerceptionNoiseStd);
    EXPECT_LE(p.com_offset.cwiseAbs().maxCoeff(), 0.01);

    // draw order is part of the determinism contract
    Rng replay(seed);
    EXPECT_DOUBLE_EQ(p.friction, replay.uniform(0.5, 1.2));
    EXPECT_DOUBLE_EQ(p.torque_limit, replay.uniform(16.0, 23.0));
    EXPECT_DOUBLE_EQ(p.base_mass_scale, replay.uniform(0.7, 1.3));
    EXPECT_DOUBLE_EQ(p.com_offset.x(), replay.uniform(-0.01, 0.01));
    EXPECT_DOUBLE_EQ(p.com_offset.y(), replay.uniform(-0.01, 0.01));
    EXPECT_DOUBLE_EQ(p.com_offset.z(), replay.uniform(-0.01, 0.01));
  }
  EXPECT_DOUBLE_EQ(DomainParams::nominal().friction, 0.85);
  EXPECT_DOUBLE_EQ(DomainParams::nominal().perception_noise_std, 0.0);
}

TEST(Proprio, LayoutOracle) {
  std::array<ProprioFrame, kProprioHistory> hist;
  for (int f = 0; f < kProprioHistory; ++f) {
    hist[f].linear_velocity = Vec3(f + 0.1, f + 0.2, f + 0.3);
    hist[f].angular_velocity = Vec3(f + 0.4, f + 0.5, f + 0.6);
    for (int j = 0; j < kNumJoints; ++j) {
      hist[f].joint_angles[j] = 10 * f + j;
      hist[f].joint_velocities[j] = 100 * f + j;
      hist[f].last_action[j] = 1000 * f + j;
    }
    hist[f].orientation = Quat::Identity();
  }
  hist[1].orientation = Quat(Eigen::AngleAxisd(M_PI / 2.0, Vec3::UnitX()));

  const Vec3 g(0, 0, -kGravity);
  const VecX o = assemble_proprio(hist, g);
  ASSERT_EQ(o.size(), kProprioDim);
  for (int f = 0; f < kProprioHistory; ++f) {
    const int at = f * kProprioFrameDim;
    EXPECT_DOUBLE_EQ(o[at + 0], f + 0.1);
    EXPECT_DOUBLE_EQ(o[at + 2], f + 0.3);
    EXPECT_DOUBLE_EQ(o[at + 3], f + 0.4);
    EXPECT_DOUBLE_EQ(o[at + 6], 10 * f + 0);
    EXPECT_DOUBLE_EQ(o[at + 17], 10 * f + 11);
    EXPECT_DOUBLE_EQ(o[at + 18], 100 * f + 0);
    EXPECT_DOUBLE_EQ(o[at + 30], 1000 * f + 0);
    EXPECT_DOUBLE_EQ(o[at + 41], 1000 * f + 11);
  }
  // gravity expressed in each frame's base frame
  EXPECT_NEAR(o[42 + 2], -kGravity, 1e-12);  // identity frame: still -z
  // +90 deg roll maps world -z into -y of the base frame
  EXPECT_NEAR(o[kProprioFrameDim + 42 + 1], -kGravity, 1e-12);
  EXPECT_NEAR(o[kProprioFrameDim + 42 + 2], 0.0, 1e-12);
}

TEST(BodyPoints, CornersAndKnees) {
  SimConfig cfg;
  RobotState s;
  s.base_position = Vec3(1.0, 2.0, 0.5);
  s.base_orientation = Quat::Identity();
  const auto pts = body_sample_points(s, cfg);
  // 8 corners of the 0.6 x 0.3 x 0.15 box
  double zmin = 1e9, zmax = -1e9;
  for (int i = 0; i < 8; ++i) {
    EXPECT_NEAR(std::abs(pts[i].x() - 1.0), 0.3, 1e-12);
    EXPECT_NEAR(std::abs(pts[i].y() - 2.0), 0.15, 1e-12);
    zmin = std::min(zmin, pts[i].z());
    zmax = std::max(zmax, pts[i].z());
  }
  EXPECT_NEAR(zmin, 0.5 - 0.075, 1e-12);
  EXPECT_NEAR(zmax, 0.5 + 0.075, 1e-12);
  // knees for the zero pose hang straight below the thigh mounts
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const Vec3 knee = pts[8 + leg] - s.base_position;
    EXPECT_NEAR(knee.z(), -cfg.morphology.thigh_length, 1e-12);
  }
}

TEST(Termination, OrderRollPitchContactTime) {
  SimConfig cfg;
  const TerrainField flat;

  RobotState ok = SimEnv::standing_state(cfg, flat, 0, 0, 0);
  EXPECT_EQ(check_termination(ok, flat, cfg, 0), TerminationReason::None);
  EXPECT_EQ(check_termination(ok, flat, cfg, cfg.max_episode_steps),
            TerminationReason::TimeLimit);

  // roll and pitch both over their limits: roll wins
  RobotState tilted = ok;
  tilted.base_position.z() = 2.0;  // keep the box off the ground
  tilted.base_orientation = Quat(Eigen::AngleAxisd(1.3, Vec3::UnitY()) *
                                 Eigen::AngleAxisd(0.9, Vec3::UnitX()));
  ASSERT_GT(std::abs(quat_roll(tilted.base_orientation)), cfg.roll_limit);
  ASSERT_GT(std::abs(quat_pitch(tilted.base_orientation)), cfg.pitch_limit);
  EXPECT_EQ(check_termination(tilted, flat, cfg, 0), TerminationReason::RollLimit);

  RobotState pitched = ok;
  pitched.base_position.z() = 2.0;
  pitched.base_orientation = Quat(Eigen::AngleAxisd(1.3, Vec3::UnitY()));
  EXPECT_EQ(check_termination(pitched, flat, cfg, 0), TerminationReason::PitchLimit);

  // box touching the floor beats the time limit
  RobotState low = ok;
  low.base_position.z() = 0.05;
  EXPECT_EQ(check_termination(low, flat, cfg, cfg.max_episode_steps),
            TerminationReason::BodyContact);
}

TEST(SimEnv, BallisticFallMatchesClosedForm) {
  SimConfig cfg = quiet_config();
  SimEnv env(cfg);
  const RobotState init = airborne_state(2.0);
  env.reset(TerrainField(), 3, init);

  const Vec12 hold = init.joint_angles;  // zero PD torque
  const int policy_steps = 5;
  for (int i = 0; i < policy_steps; ++i) {
    EXPECT_EQ(env.step(hold), TerminationReason::None);
  }
  const int n = policy_steps * cfg.substeps;
  const double dt = cfg.physics_dt();
  // semi-implicit Euler from rest: z = z0 - g dt^2 n(n+1)/2, vz = -g n dt
  const double want_z = 2.0 - kGravity * dt * dt * n * (n + 1) / 2.0;
  EXPECT_NEAR(env.state().base_position.z(), want_z, 1e-9);
  EXPECT_NEAR(env.state().base_linear_velocity.z(), -kGravity * n * dt, 1e-9);
  EXPECT_NEAR(env.state().base_position.x(), 0.0, 1e-12);
  EXPECT_NEAR(env.state().base_position.y(), 0.0, 1e-12);
  EXPECT_LT(quat_angle(env.state().base_orientation, init.base_orientation), 1e-12);
  EXPECT_LT((env.state().joint_angles - init.joint_angles).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SimEnv, StandingHoldsForFullEpisode) {
  SimConfig cfg = quiet_config();
  SimEnv env(cfg);
  const TerrainField flat;
  const RobotState init = SimEnv::standing_state(cfg, flat, 0, 0, 0);
  env.reset(flat, 11, init);

  const Vec12 hold = init.joint_angles;
  TerminationReason term = TerminationReason::None;
  int steps = 0;
  while (term == TerminationReason::None) {
    term = env.step(hold);
    ++steps;
    const double z = env.state().base_position.z();
    ASSERT_GT(z, 0.30) << "sagged at step " << steps;
    ASSERT_LT(z, 0.42) << "bounced at step " << steps;
  }
  EXPECT_EQ(term, TerminationReason::TimeLimit);
  EXPECT_EQ(steps, cfg.max_episode_steps);
  EXPECT_EQ(env.steps_taken(), cfg.max_episode_steps);
  EXPECT_NEAR(env.time(), cfg.max_episode_steps * cfg.policy_dt, 1e-12);
  for (int leg = 0; leg < kNumLegs; ++leg) EXPECT_TRUE(env.state().toe_contacts[leg]);
  // the ground carries the weight
  EXPECT_LT(env.state().base_linear_velocity.norm(), 0.05);
}

TEST(SimEnv, StandingStartHasContacts) {
  SimConfig cfg = quiet_config();
  SimEnv env(cfg);
  const TerrainField flat;
  env.reset(flat, 0, SimEnv::standing_state(cfg, flat, 0.3, -0.2, 0.7));
  for (int leg = 0; leg < kNumLegs; ++leg) {
    EXPECT_TRUE(env.state().toe_contacts[leg]);
    EXPECT_NEAR(env.state().toe_positions[leg].z(), 0.0, 1e-9);
  }
}

TEST(SimEnv, ExteroIsNoiselessUnderNominalDomain) {
  SimConfig cfg = quiet_config();
  SimEnv env(cfg);
  const TerrainField flat;
  env.reset(flat, 5, SimEnv::standing_state(cfg, flat, 0, 0, 0));
  const auto& h = env.observation().extero.heights;
  // flat ground, zero noise: every cell is exactly ground minus base height
  EXPECT_DOUBLE_EQ(h.minCoeff(), h.maxCoeff());
  EXPECT_NEAR(h(0, 0), -cfg.standing_height, 1e-12);
}

TEST(SimEnv, HistoryShiftsNewestLast) {
  SimConfig cfg = quiet_config();
  SimEnv env(cfg);
  const TerrainField flat;
  const RobotState init = SimEnv::standing_state(cfg, flat, 0, 0, 0);
  env.reset(flat, 2, init);

  // at reset the history is the same frame three times
  const VecX& o0 = env.observation().proprio;
  for (int f = 1; f < kProprioHistory; ++f) {
    EXPECT_TRUE(o0.segment(f * kProprioFrameDim, kProprioFrameDim)
                    .isApprox(o0.segment(0, kProprioFrameDim)));
  }

  Vec12 action = init.joint_angles;
  action[2] += 0.05;
  env.step(action);
  const VecX& o1 = env.observation().proprio;
  // oldest two frames still carry the reset action, newest carries ours
  EXPECT_DOUBLE_EQ(o1[30 + 2], init.joint_angles[2]);
  EXPECT_DOUBLE_EQ(o1[kProprioFrameDim + 30 + 2], init.joint_angles[2]);
  EXPECT_DOUBLE_EQ(o1[2 * kProprioFrameDim + 30 + 2], action[2]);
}

TEST(SimEnv, BitwiseDeterminism) {
  SimConfig cfg;  // randomized domain on purpose
  cfg.randomize_domain = true;
  TerrainParams tp;
  tp.block_size = 0.1;
  tp.block_max_height = 0.05;
  const TerrainField field(TerrainKind::Blocks, tp, 77);

  auto run = [&](SimEnv& env) {
    env.reset(field, 42, SimEnv::standing_state(cfg, field, 0, 0, 0));
    Rng arng(9);
    for (int i = 0; i < 50 && env.termination() == TerminationReason::None; ++i) {
      Vec12 a = env.state().joint_angles;
      for (int j = 0; j < kNumJoints; ++j) a[j] += 0.02 * arng.normal();
      env.step(a);
    }
  };
  SimEnv a(cfg), b(cfg);
  run(a);
  run(b);
  EXPECT_TRUE(a.state().base_position == b.state().base_position);
  EXPECT_TRUE(a.state().joint_angles == b.state().joint_angles);
  EXPECT_TRUE(a.state().joint_velocities == b.state().joint_velocities);
  EXPECT_TRUE(a.observation().proprio == b.observation().proprio);
  EXPECT_TRUE(a.observation().extero.heights == b.observation().extero.heights);
  EXPECT_DOUBLE_EQ(a.domain().friction, b.domain().friction);
}

TEST(SimEnv, AppliedTorqueRespectsDomainLimit) {
  SimConfig cfg = quiet_config();
  SimEnv env(cfg);
  const TerrainField flat;
  const RobotState init = SimEnv::standing_state(cfg, flat, 0, 0, 0);
  env.reset(flat, 1, init);

  Vec12 a = init.joint_angles;
  a[4] += 2.0;  // far target: torque must clamp at the nominal 20 Nm
  env.step(a);
  EXPECT_LE(env.applied_torque().cwiseAbs().maxCoeff(),
            env.domain().torque_limit + 1e-12);
  EXPECT_TRUE(env.torque_clamped()[4]);
}

TEST(SimEnv, ResetRejectsBodyBelowTerrain) {
  SimConfig cfg = quiet_config();
  SimEnv env(cfg);
  const TerrainField flat;
  RobotState buried = SimEnv::standing_state(cfg, flat, 0, 0, 0);
  buried.base_position.z() = 0.05;
  EXPECT_THROW(env.reset(flat, 0, buried), ValidationError);
}

TEST(SimEnv, StateErrors) {
  SimConfig cfg = quiet_config();
  {
    SimEnv env(cfg);
    EXPECT_THROW(env.step(Vec12::Zero()), StateError);
  }
  {
    cfg.max_episode_steps = 1;
    SimEnv env(cfg);
    const TerrainField flat;
    const RobotState init = SimEnv::standing_state(cfg, flat, 0, 0, 0);
    env.reset(flat, 0, init);
    EXPECT_EQ(env.step(init.joint_angles), TerminationReason::TimeLimit);
    EXPECT_THROW(env.step(init.joint_angles), StateError);
    // reset revives the environment
    env.reset(flat, 0, init);
    EXPECT_EQ(env.termination(), TerminationReason::None);
    EXPECT_EQ(env.steps_taken(), 0);
  }
}

TEST(SimEnv, BadConfigRejected) {
  SimConfig cfg;
  cfg.substeps = 0;
  EXPECT_THROW(SimEnv{cfg}, ValidationError);
}

TEST(StateFromReference, ToeTwistMatchesFiniteDifference) {
  const RobotMorphology morph = RobotMorphology::defaults();
  ReferencePose ref;
  ref.base_position = Vec3(0.3, -0.1, 0.41);
  ref.base_orientation = Quat(Eigen::AngleAxisd(0.4, Vec3(0.2, 0.3, 0.9).normalized()));
  ref.base_linear_velocity = Vec3(0.5, 0.1, -0.05);
  ref.base_angular_velocity = Vec3(0.2, -0.4, 0.3);
  for (int j = 0; j < kNumJoints; ++j) {
    ref.joint_angles[j] = 0.1 * (j % 3 == 2 ? -4 : 1) * ((j % 5) + 1);
    ref.joint_velocities[j] = 0.3 * ((j % 4) - 1.5);
  }
  const RobotState s = SimEnv::state_from_reference(ref, morph);

  const double h = 1e-7;
  const Vec3 pos1 = ref.base_position + h * ref.base_linear_velocity;
  const Quat rot1 = quat_exp(h * ref.base_angular_velocity) * ref.base_orientation;
  const Vec12 q1 = ref.joint_angles + h * ref.joint_velocities;
  const auto toes0 = forward_kinematics(ref.base_position, ref.base_orientation,
                                        ref.joint_angles, morph);
  const auto toes1 = forward_kinematics(pos1, rot1, q1, morph);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    EXPECT_LT((s.toe_positions[leg] - toes0[leg]).norm(), 1e-12);
    const Vec3 fd = (toes1[leg] - toes0[leg]) / h;
    EXPECT_LT((s.toe_velocities[leg] - fd).norm(), 1e-5) << "leg " << leg;
  }
}

}  // namespace
}  // namespace quadmimic
