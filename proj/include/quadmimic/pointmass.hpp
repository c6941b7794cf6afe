#pragma once

#include "quadmimic/rewards.hpp"
#include "quadmimic/rng.hpp"
#include "quadmimic/trainer.hpp"
#include "quadmimic/types.hpp"

namespace quadmimic {

// Planar unicycle toy task scored by the real command reward. Action channel
// 0 accelerates, channel 1 turns; the exteroceptive block is all zeros so
// the adaptation gate stays closed.
class PointMassEnv : public RolloutEnv {
 public:
  explicit PointMassEnv(uint64_t seed, int episode_steps = 100);

  void begin_episode() override;
  const VecX& cond() const override { return cond_; }
  const VecX& proprio() const override { return proprio_; }
  const VecX& extero() const override { return extero_; }
  double gate_alpha() const override { return 0.0; }
  StepOut step(const Vec12& action) override;
  std::vector<double> take_finished_returns() override;

  const Command& command() const { return command_; }
  double speed() const { return v_; }
  double yaw() const { return yaw_; }

 private:
  void refresh_obs();

  Rng rng_;
  int episode_steps_;
  int steps_ = 0;
  double x_ = 0.0, y_ = 0.0, yaw_ = 0.0, v_ = 0.0;
  Vec12 last_action_ = Vec12::Zero();
  Command command_;
  VecX cond_ = VecX::Zero(kCommandDim);
  VecX proprio_ = VecX::Zero(kProprioDim);
  VecX extero_ = VecX::Zero(kExteroDim);
  double episode_return_ = 0.0;
  std::vector<double> finished_;
};

}  // namespace quadmimic
