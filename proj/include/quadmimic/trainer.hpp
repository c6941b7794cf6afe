#pragma once

#include "quadmimic/checkpoint.hpp"
#include "quadmimic/gaitmetrics.hpp"
#include "quadmimic/mocap.hpp"
#include "quadmimic/policy.hpp"
#include "quadmimic/rewards.hpp"
#include "quadmimic/rng.hpp"
#include "quadmimic/simenv.hpp"
#include "quadmimic/terrain.hpp"

#include <array>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace quadmimic {

struct PpoConfig {
  int num_envs = 16;
  int horizon = 128;
  int epochs = 4;
  int minibatch_size = 512;
  double discount = 0.95;
  double gae_lambda = 0.95;
  double clip_epsilon = 0.2;
  double learning_rate = 3e-4;
  double value_coeff = 0.5;
  double entropy_coeff = 0.0;
  double kl_beta = 0.03;      // weight of the KL-to-prior penalty
  double max_grad_norm = 1.0; // 0 disables clipping
  int updates = 200;
  bool normalize_advantages = true;
  uint64_t seed = 0;

  // episode generation (adaptation stage)
  double command_speed_min = 0.3;
  double command_speed_max = 1.5;
  double heading_error_range = M_PI / 4.0;
  int curriculum_streak = 3;
  double success_threshold = 0.5;   // mean command reward for a success
  double stair_penalty_weight = 1.0;

  void validate() const;
};

struct StepOut {
  double reward = 0.0;
  bool done = false;
};

// What the rollout collector needs from an environment.
class RolloutEnv {
 public:
  virtual ~RolloutEnv() = default;
  virtual void begin_episode() = 0;
  virtual const VecX& cond() const = 0;     // encoder conditioning
  virtual const VecX& proprio() const = 0;  // 135
  virtual const VecX& extero() const = 0;   // 1024
  virtual double gate_alpha() const = 0;    // adaptation gate, 0 in stage 1
  virtual StepOut step(const Vec12& action) = 0;
  virtual int terrain_kind_index() const { return -1; }
  // returns of episodes finished since the last call
  virtual std::vector<double> take_finished_returns() { return {}; }
};

// Flat rollout storage; column t * num_envs + e.
struct TrajectoryBatch {
  int num_envs = 0;
  int horizon = 0;
  MatX cond, proprio, extero;
  MatX latent, action;             // sampled values
  VecX logp_latent, logp_action;   // at sampling time
  VecX alpha;                      // gate per transition
  VecX reward, value, done;
  VecX next_value;                 // bootstrap per env
  VecX advantage, ret;

  int size() const { return num_envs * horizon; }
  int index(int t, int e) const { return t * num_envs + e; }
};

// Lockstep stochastic rollout across envs; finished envs restart in place.
TrajectoryBatch collect_rollouts(const Policy& policy, std::vector<RolloutEnv*>& envs,
                                 int horizon, Rng& sample_rng);

// Generalized advantage estimation; fills advantage and ret in place.
void compute_gae(TrajectoryBatch& batch, double discount, double lambda);

class Adam {
 public:
  Adam(Policy& p, double lr);
  // applies grads; tensors of a frozen controller are skipped
  void step(Policy& p, PolicyGrads& grads);
  double lr() const { return lr_; }

 private:
  double lr_;
  int64_t t_ = 0;
  std::vector<VecX> m_, v_;
};

struct UpdateStats {
  double total_loss = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double kl_prior = 0.0;   // mean KL of the latent posterior to N(0, I)
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double grad_norm = 0.0;
  double mean_reward = 0.0;  // mean per-step reward of the batch
};

// One PPO update over the batch: clipped surrogate + value MSE + entropy
// bonus + kl_beta * KL(posterior || prior). Throws NumericError (with a
// diagnostic dump under dump_dir) on a non-finite loss.
UpdateStats ppo_update(Policy& policy, const TrajectoryBatch& batch, const PpoConfig& cfg,
                       Adam& adam, Rng& shuffle_rng, const std::string& dump_dir);

// Imitation episodes: track a reference clip on its capture terrain.
class ImitationEnv : public RolloutEnv {
 public:
  ImitationEnv(std::vector<MotionClip> clips, const SimConfig& cfg, uint64_t seed);
  void begin_episode() override;
  const VecX& cond() const override { return cond_; }
  const VecX& proprio() const override { return sim_.observation().proprio; }
  const VecX& extero() const override { return sim_.observation().extero.heights; }
  double gate_alpha() const override { return 0.0; }
  StepOut step(const Vec12& action) override;
  std::vector<double> take_finished_returns() override;

  const SimEnv& sim() const { return sim_; }
  double reference_time() const { return t_ref_; }
  const MotionClip& active_clip() const { return clips_[clip_index_]; }

 private:
  void refresh_cond();

  std::vector<MotionClip> clips_;
  SimEnv sim_;
  Rng rng_;
  Vec12 nominal_pose_;
  size_t clip_index_ = 0;
  double t_ref_ = 0.0;
  VecX cond_;
  double episode_return_ = 0.0;
  std::vector<double> finished_;
};

// Command-following episodes on one terrain kind with curriculum feedback.
class CommandEnv : public RolloutEnv {
 public:
  CommandEnv(TerrainKind kind, const SimConfig& cfg, const PpoConfig& ppo,
             std::array<CurriculumState, kNumTerrainKinds>* curricula, uint64_t seed);
  void begin_episode() override;
  const VecX& cond() const override { return cond_; }
  const VecX& proprio() const override { return sim_.observation().proprio; }
  const VecX& extero() const override { return sim_.observation().extero.heights; }
  double gate_alpha() const override { return alpha_; }
  StepOut step(const Vec12& action) override;
  int terrain_kind_index() const override;
  std::vector<double> take_finished_returns() override;

  const SimEnv& sim() const { return sim_; }
  const Command& command() const { return command_; }

 private:
  void refresh_obs_derived();

  TerrainKind kind_;
  SimConfig sim_cfg_;
  PpoConfig ppo_;
  std::array<CurriculumState, kNumTerrainKinds>* curricula_;
  SimEnv sim_;
  Rng rng_;
  Vec12 nominal_pose_;
  Command command_;
  VecX cond_;
  double alpha_ = 0.0;
  double episode_return_ = 0.0;
  double command_reward_sum_ = 0.0;
  std::vector<double> finished_;
};

struct CurvePoint {
  int update = 0;
  int stage = 1;
  double mean_step_reward = 0.0;
  double mean_return = std::numeric_limits<double>::quiet_NaN();
  std::array<double, kNumTerrainKinds> terrain_return{};  // NaN when unseen
  double kl_prior = 0.0;
  double clip_fraction = 0.0;
  std::array<double, kNumCurriculumParams> curriculum{};  // NaN in stage 1
};

void write_curve_csv(const std::vector<CurvePoint>& curve, std::ostream& out);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<CurvePoint> curve;
  double baseline_step_reward = 0.0;  // update-0 batch mean
  double best_step_reward = 0.0;
  double final_step_reward = 0.0;
};

// Stage 1: reference-motion imitation from a clip dataset.
TrainResult train_imitation(const std::vector<MotionClip>& clips, const PpoConfig& ppo,
                            const NetworkSizes& sizes, const SimConfig& sim_cfg,
                            const std::string& dump_dir);

// Stage 2: terrain adaptation on top of a frozen stage-1 controller.
TrainResult train_adaptation(const Checkpoint& stage1, const PpoConfig& ppo,
                             const SimConfig& sim_cfg, const std::string& dump_dir);

// Same machinery on the point-mass toy task; exercises the full stage-2
// policy stack with the controller left trainable.
TrainResult train_command_toy(const PpoConfig& ppo, const NetworkSizes& sizes,
                              const std::string& dump_dir);

// Deterministic evaluation episodes (mean latent, mean action) for a stage-2
// checkpoint on generated terrain.
EpisodeRunner make_sim_runner(const Checkpoint& ck, const SimConfig& sim_cfg,
                              const PpoConfig& ppo,
                              std::vector<TrajectoryRecord>* first_episode_dump = nullptr);

// Point-mass evaluation episodes for any stage-2-shaped checkpoint.
EpisodeRunner make_toy_runner(const Checkpoint& ck);

}  // namespace quadmimic
