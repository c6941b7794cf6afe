#include "quadmimic/pointmass.hpp"

#include "quadmimic/checkpoint.hpp"
#include "quadmimic/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace quadmimic {
namespace {

// unicycle reward from scratch: speed along the commanded heading and the
// heading error itself
double toy_reward(double v, double yaw, const Command& c) {
  const double dyaw = std::remainder(c.target_yaw - yaw, 2.0 * M_PI);
  const double vhat = v * std::cos(yaw - c.target_yaw);
  return std::exp(-std::abs(vhat - c.target_speed)) *
         std::exp(5.0 * (std::cos(dyaw) - 1.0));
}

Vec12 action2(double accel, double turn) {
  Vec12 a = Vec12::Zero();
  a[0] = accel;
  a[1] = turn;
  return a;
}

TEST(PointMass, DynamicsFollowClosedForm) {
  PointMassEnv env(3);
  env.begin_episode();
  const Command cmd = env.command();

  double v = 0.0, yaw = 0.0;
  const double accels[] = {0.5, 2.0, -0.3, -5.0, 1.0};
  const double turns[] = {0.0, 1.0, -2.0, 0.25, -1.0};
  for (int i = 0; i < 5; ++i) {
    const StepOut out = env.step(action2(accels[i], turns[i]));
    v += 0.1 * std::clamp(accels[i], -1.0, 1.0);
    yaw += 0.2 * std::clamp(turns[i], -1.0, 1.0);
    EXPECT_NEAR(env.speed(), v, 1e-15);
    EXPECT_NEAR(env.yaw(), yaw, 1e-15);
    EXPECT_NEAR(out.reward, toy_reward(v, yaw, cmd), 1e-12);
    EXPECT_FALSE(out.done);
  }
}

TEST(PointMass, ObservationLayout) {
  PointMassEnv env(4);
  env.begin_episode();

  // command conditioning: heading error direction plus target speed
  const Command cmd = env.command();
  ASSERT_EQ(env.cond().size(), 3);
  EXPECT_DOUBLE_EQ(env.cond()[0], std::cos(cmd.target_yaw));
  EXPECT_DOUBLE_EQ(env.cond()[1], std::sin(cmd.target_yaw));
  EXPECT_DOUBLE_EQ(env.cond()[2], cmd.target_speed);

  ASSERT_EQ(env.proprio().size(), kProprioDim);
  ASSERT_EQ(env.extero().size(), kExteroDim);
  EXPECT_TRUE((env.extero().array() == 0.0).all());
  EXPECT_EQ(env.gate_alpha(), 0.0);

  const Vec12 a = action2(0.7, -0.4);
  env.step(a);
  const int frame = kProprioDim / 3;
  for (int k = 0; k < 3; ++k) {
    const int at = k * frame;
    EXPECT_DOUBLE_EQ(env.proprio()[at + 0], env.speed());   // body-frame forward
    EXPECT_DOUBLE_EQ(env.proprio()[at + 1], 0.0);
    EXPECT_TRUE((env.proprio().segment(at + 3, 3).array() == 0.0).all());   // angvel
    EXPECT_TRUE((env.proprio().segment(at + 6, 24).array() == 0.0).all());  // q, qd
    EXPECT_TRUE((env.proprio().segment(at + 30, 12).array() == a.array()).all());
    EXPECT_DOUBLE_EQ(env.proprio()[at + 42], 0.0);  // yaw-only tilt keeps gravity on -z
    EXPECT_DOUBLE_EQ(env.proprio()[at + 43], 0.0);
    EXPECT_DOUBLE_EQ(env.proprio()[at + 44], -kGravity);
  }
}

TEST(PointMass, EpisodeLifecycleAndDeterminism) {
  PointMassEnv env(5, 4);
  env.begin_episode();
  double total = 0.0;
  for (int i = 0; i < 3; ++i) {
    const StepOut out = env.step(action2(1.0, 0.0));
    total += out.reward;
    EXPECT_FALSE(out.done);
  }
  const StepOut out = env.step(action2(1.0, 0.0));
  total += out.reward;
  EXPECT_TRUE(out.done);
  const std::vector<double> fin = env.take_finished_returns();
  ASSERT_EQ(fin.size(), 1u);
  EXPECT_DOUBLE_EQ(fin[0], total);
  EXPECT_TRUE(env.take_finished_returns().empty());

  // reset zeroes the motion state and draws a fresh command
  const Command first = env.command();
  env.begin_episode();
  EXPECT_DOUBLE_EQ(env.speed(), 0.0);
  EXPECT_DOUBLE_EQ(env.yaw(), 0.0);
  EXPECT_NE(env.command().target_speed, first.target_speed);

  // same seed, same actions: identical commands and rewards
  PointMassEnv a(9, 10), b(9, 10);
  a.begin_episode();
  b.begin_episode();
  EXPECT_DOUBLE_EQ(a.command().target_speed, b.command().target_speed);
  EXPECT_DOUBLE_EQ(a.command().target_yaw, b.command().target_yaw);
  for (int i = 0; i < 10; ++i) {
    const StepOut sa = a.step(action2(0.3, 0.1));
    const StepOut sb = b.step(action2(0.3, 0.1));
    EXPECT_EQ(sa.reward, sb.reward);
  }

  PointMassEnv c(10, 10);
  c.begin_episode();
  EXPECT_NE(c.command().target_speed, a.command().target_speed);
}

TEST(PointMass, CommandRangesRespected) {
  PointMassEnv env(11, 1);
  for (int ep = 0; ep < 50; ++ep) {
    env.begin_episode();
    EXPECT_GE(env.command().target_speed, 0.3);
    EXPECT_LE(env.command().target_speed, 1.5);
    EXPECT_LE(std::abs(env.command().target_yaw), M_PI / 4.0);
  }
}

TEST(PointMass, ToyTrainingSmoke) {
  PpoConfig cfg;
  cfg.num_envs = 4;
  cfg.horizon = 8;
  cfg.epochs = 2;
  cfg.minibatch_size = 16;
  cfg.updates = 3;
  cfg.seed = 5;

  NetworkSizes sizes;
  sizes.encoder_hidden = {16};
  sizes.controller_hidden = {16};
  sizes.value_hidden = {16};
  sizes.extero_embed = 8;

  const TrainResult r = train_command_toy(cfg, sizes, "/tmp");
  ASSERT_EQ(r.curve.size(), 3u);
  double best = -1e300;
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(r.curve[i].update, i);
    EXPECT_EQ(r.curve[i].stage, 2);
    best = std::max(best, r.curve[i].mean_step_reward);
    // 100-step episodes never finish inside these short rollouts
    EXPECT_TRUE(std::isnan(r.curve[i].mean_return));
  }
  EXPECT_DOUBLE_EQ(r.baseline_step_reward, r.curve[0].mean_step_reward);
  EXPECT_DOUBLE_EQ(r.best_step_reward, best);
  EXPECT_DOUBLE_EQ(r.final_step_reward, r.curve[2].mean_step_reward);
  EXPECT_EQ(r.checkpoint.train_step, 3u * 4u * 8u);
  EXPECT_EQ(r.checkpoint.policy.stage(), Stage::Adaptation);
  EXPECT_FALSE(r.checkpoint.policy.controller_frozen);

  // deterministic evaluation on the trained policy
  const EpisodeRunner runner = make_toy_runner(r.checkpoint);
  const EpisodeOutcome e1 = runner(TerrainKind::Plane, 123);
  const EpisodeOutcome e2 = runner(TerrainKind::Plane, 123);
  EXPECT_EQ(e1.total_return, e2.total_return);
  EXPECT_EQ(e1.steps, 100);
  EXPECT_DOUBLE_EQ(e1.total_return, e1.return_no_penalty);
  const EpisodeOutcome e3 = runner(TerrainKind::Plane, 124);
  EXPECT_NE(e3.total_return, e1.total_return);

  Checkpoint stage1;
  stage1.policy = Policy(Stage::Imitation, sizes, kWindowFeatureDim, 1);
  EXPECT_THROW(make_toy_runner(stage1), ValidationError);
}

}  // namespace
}  // namespace quadmimic
