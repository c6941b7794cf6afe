#include "quadmimic/pointmass.hpp"

#include "quadmimic/robot_state.hpp"

#include <algorithm>
#include <cmath>

namespace quadmimic {

PointMassEnv::PointMassEnv(uint64_t seed, int episode_steps)
    : rng_(hash_combine(seed, 0x504D4153ull)), episode_steps_(episode_steps) {}

void PointMassEnv::begin_episode() {
  x_ = 0.0;
  y_ = 0.0;
  v_ = 0.0;
  yaw_ = 0.0;
  steps_ = 0;
  last_action_.setZero();
  episode_return_ = 0.0;
  command_.target_speed = rng_.uniform(0.3, 1.5);
  command_.target_yaw = rng_.uniform(-M_PI / 4.0, M_PI / 4.0);
  refresh_obs();
}

void PointMassEnv::refresh_obs() {
  cond_ = command_.encode(yaw_);
  std::array<ProprioFrame, kProprioHistory> hist;
  ProprioFrame f;
  f.linear_velocity = Vec3(v_, 0.0, 0.0);  // body frame
  f.angular_velocity = Vec3::Zero();
  f.joint_angles = Vec12::Zero();
  f.joint_velocities = Vec12::Zero();
  f.last_action = last_action_;
  f.orientation = Quat(Eigen::AngleAxisd(yaw_, Vec3::UnitZ()));
  hist.fill(f);
  proprio_ = assemble_proprio(hist, Vec3(0, 0, -kGravity));
}

StepOut PointMassEnv::step(const Vec12& action) {
  v_ += 0.1 * std::clamp(action[0], -1.0, 1.0);
  yaw_ += 0.2 * std::clamp(action[1], -1.0, 1.0);
  x_ += v_ * std::cos(yaw_) * kPolicyDt;
  y_ += v_ * std::sin(yaw_) * kPolicyDt;
  last_action_ = action;
  ++steps_;

  RobotState s;
  s.base_orientation = Quat(Eigen::AngleAxisd(yaw_, Vec3::UnitZ()));
  s.base_linear_velocity = Vec3(v_ * std::cos(yaw_), v_ * std::sin(yaw_), 0.0);
  StepOut out;
  out.reward = command_reward(s, command_);
  out.done = steps_ >= episode_steps_;
  episode_return_ += out.reward;
  if (out.done) finished_.push_back(episode_return_);
  refresh_obs();
  return out;
}

std::vector<double> PointMassEnv::take_finished_returns() {
  std::vector<double> out;
  out.swap(finished_);
  return out;
}

}  // namespace quadmimic
