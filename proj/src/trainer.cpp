#include "quadmimic/trainer.hpp"

#include "quadmimic/errors.hpp"
#include "quadmimic/pointmass.hpp"
#include "quadmimic/rewards.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace quadmimic {

void PpoConfig::validate() const {
  if (num_envs < 1 || horizon < 1 || epochs < 1 || minibatch_size < 1 || updates < 1) {
    throw ValidationError("ppo config: counts must be positive");
  }
  if (discount <= 0.0 || discount > 1.0 || gae_lambda < 0.0 || gae_lambda > 1.0) {
    throw ValidationError("ppo config: discount/lambda out of range");
  }
  if (clip_epsilon <= 0.0 || clip_epsilon >= 1.0) {
    throw ValidationError("ppo config: clip epsilon must lie in (0, 1)");
  }
  if (learning_rate <= 0.0) throw ValidationError("ppo config: learning rate must be positive");
  if (value_coeff < 0.0 || entropy_coeff < 0.0 || kl_beta < 0.0 || max_grad_norm < 0.0) {
    throw ValidationError("ppo config: coefficients must be non-negative");
  }
  if (command_speed_min > command_speed_max) {
    throw ValidationError("ppo config: command speed range inverted");
  }
  if (curriculum_streak < 1) throw ValidationError("ppo config: curriculum streak must be >= 1");
}

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5 * log(2*pi)

VecX clamped_log_std(const VecX& raw) {
  return raw.array().min(kLogStdMax).max(kLogStdMin).matrix();
}

}  // namespace

TrajectoryBatch collect_rollouts(const Policy& policy, std::vector<RolloutEnv*>& envs,
                                 int horizon, Rng& sample_rng) {
  if (envs.empty()) throw ValidationError("collect_rollouts: no environments");
  const int ne = static_cast<int>(envs.size());
  const int cd = policy.cond_dim();
  if (envs[0]->cond().size() != cd) {
    throw ValidationError("collect_rollouts: env conditioning width " +
                          std::to_string(envs[0]->cond().size()) + ", policy expects " +
                          std::to_string(cd));
  }
  const int n = ne * horizon;

  TrajectoryBatch b;
  b.num_envs = ne;
  b.horizon = horizon;
  b.cond.resize(cd, n);
  b.proprio.resize(kProprioDim, n);
  b.extero.resize(kExteroDim, n);
  b.latent.resize(kLatentDim, n);
  b.action.resize(kActionDim, n);
  b.logp_latent.resize(n);
  b.logp_action.resize(n);
  b.alpha.resize(n);
  b.reward.resize(n);
  b.value.resize(n);
  b.done.resize(n);
  b.next_value.resize(ne);
  b.advantage = VecX::Zero(n);
  b.ret = VecX::Zero(n);

  const VecX log_std = clamped_log_std(policy.action_log_std);
  const VecX sigma_a = log_std.array().exp().matrix();

  MatX cond(cd, ne), o_p(kProprioDim, ne), o_e(kExteroDim, ne);
  for (int t = 0; t < horizon; ++t) {
    for (int e = 0; e < ne; ++e) {
      cond.col(e) = envs[e]->cond();
      o_p.col(e) = envs[e]->proprio();
      o_e.col(e) = envs[e]->extero();
    }

    auto [mu, sd] = policy.encode_batch(cond, o_p);
    MatX z(kLatentDim, ne);
    VecX lpz(ne);
    for (int e = 0; e < ne; ++e) {
      GaussianLatent g;
      g.mean = mu.col(e);
      g.std = sd.col(e);
      auto [ze, lp] = sample_latent(g, sample_rng);
      z.col(e) = ze;
      lpz[e] = lp;
    }

    MatX mean_a = policy.controller.forward(z, o_p, o_e);
    VecX alpha(ne);
    for (int e = 0; e < ne; ++e) alpha[e] = envs[e]->gate_alpha();
    if (policy.has_adapter() && (alpha.array() != 0.0).any()) {
      const MatX offset = policy.adapter.forward(z, o_p, o_e).array().tanh().matrix();
      for (int e = 0; e < ne; ++e) {
        if (alpha[e] != 0.0) mean_a.col(e) += alpha[e] * offset.col(e);
      }
    }

    const MatX values = policy.value_net.forward(cond, o_p, o_e);

    for (int e = 0; e < ne; ++e) {
      const int i = b.index(t, e);
      b.cond.col(i) = cond.col(e);
      b.proprio.col(i) = o_p.col(e);
      b.extero.col(i) = o_e.col(e);
      b.latent.col(i) = z.col(e);
      b.logp_latent[i] = lpz[e];
      b.alpha[i] = alpha[e];
      b.value[i] = values(0, e);

      Vec12 a;
      double lpa = -kActionDim * kHalfLog2Pi;
      for (int j = 0; j < kActionDim; ++j) {
        const double eps = sample_rng.normal();
        a[j] = mean_a(j, e) + sigma_a[j] * eps;
        lpa += -0.5 * eps * eps - log_std[j];
      }
      b.action.col(i) = a;
      b.logp_action[i] = lpa;

      const StepOut out = envs[e]->step(a);
      b.reward[i] = out.reward;
      b.done[i] = out.done ? 1.0 : 0.0;
      if (out.done) envs[e]->begin_episode();
    }
  }

  // bootstrap values of the post-rollout observations
  for (int e = 0; e < ne; ++e) {
    cond.col(e) = envs[e]->cond();
    o_p.col(e) = envs[e]->proprio();
    o_e.col(e) = envs[e]->extero();
  }
  const MatX values = policy.value_net.forward(cond, o_p, o_e);
  for (int e = 0; e < ne; ++e) b.next_value[e] = values(0, e);
  return b;
}

void compute_gae(TrajectoryBatch& b, double discount, double lambda) {
  for (int e = 0; e < b.num_envs; ++e) {
    double acc = 0.0;
    for (int t = b.horizon - 1; t >= 0; --t) {
      const int i = b.index(t, e);
      const double nonterminal = 1.0 - b.done[i];
      const double next_v =
          t + 1 < b.horizon ? b.value[b.index(t + 1, e)] : b.next_value[e];
      const double delta =
          b.reward[i] + discount * next_v * nonterminal - b.value[i];
      acc = delta + discount * lambda * nonterminal * acc;
      b.advantage[i] = acc;
      b.ret[i] = acc + b.value[i];
    }
  }
}

Adam::Adam(Policy& p, double lr) : lr_(lr) {
  for (const auto& t : p.tensor_refs()) {
    m_.push_back(VecX::Zero(t.size));
    v_.push_back(VecX::Zero(t.size));
  }
}

void Adam::step(Policy& p, PolicyGrads& grads) {
  const auto prefs = p.tensor_refs();
  const auto grefs = grads.tensor_refs();
  if (prefs.size() != grefs.size() || prefs.size() != m_.size()) {
    throw ValidationError("adam: tensor structure mismatch");
  }
  ++t_;
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (size_t k = 0; k < prefs.size(); ++k) {
    if (p.controller_frozen && prefs[k].name.rfind("controller.", 0) == 0) continue;
    Eigen::Map<VecX> param(prefs[k].data, prefs[k].size);
    Eigen::Map<const VecX> g(grefs[k].data, grefs[k].size);
    m_[k] = b1 * m_[k] + (1.0 - b1) * g;
    v_[k] = (b2 * v_[k].array() + (1.0 - b2) * g.array().square()).matrix();
    param.array() -=
        lr_ * (m_[k].array() / bc1) / ((v_[k].array() / bc2).sqrt() + eps);
  }
}

namespace {

void dump_diagnostics(const std::string& dump_dir, const TrajectoryBatch& b,
                      const UpdateStats& stats, int epoch, int minibatch,
                      const std::string& reason, std::string* path_out) {
  namespace fs = std::filesystem;
  fs::create_directories(dump_dir.empty() ? "." : dump_dir);
  const std::string path =
      (fs::path(dump_dir.empty() ? "." : dump_dir) / "ppo_diagnostics.json").string();
  nlohmann::ordered_json j;
  j["reason"] = reason;
  j["epoch"] = epoch;
  j["minibatch"] = minibatch;
  j["batch_size"] = b.size();
  j["reward_mean"] = b.reward.mean();
  j["reward_min"] = b.reward.minCoeff();
  j["reward_max"] = b.reward.maxCoeff();
  j["value_mean"] = b.value.mean();
  j["advantage_min"] = b.advantage.minCoeff();
  j["advantage_max"] = b.advantage.maxCoeff();
  j["logp_action_min"] = b.logp_action.minCoeff();
  j["logp_latent_min"] = b.logp_latent.minCoeff();
  j["stats"] = {{"policy_loss", stats.policy_loss},
                {"value_loss", stats.value_loss},
                {"kl_prior", stats.kl_prior},
                {"entropy", stats.entropy}};
  std::ofstream out(path);
  out << j.dump(2) << "\n";
  if (path_out) *path_out = path;
}

MatX gather_cols(const MatX& src, const std::vector<int>& idx, int lo, int hi) {
  MatX out(src.rows(), hi - lo);
  for (int k = lo; k < hi; ++k) out.col(k - lo) = src.col(idx[k]);
  return out;
}

VecX gather(const VecX& src, const std::vector<int>& idx, int lo, int hi) {
  VecX out(hi - lo);
  for (int k = lo; k < hi; ++k) out[k - lo] = src[idx[k]];
  return out;
}

}  // namespace

UpdateStats ppo_update(Policy& policy, const TrajectoryBatch& batch, const PpoConfig& cfg,
                       Adam& adam, Rng& shuffle_rng, const std::string& dump_dir) {
  const int n_total = batch.size();
  if (n_total < 1) throw ValidationError("ppo_update: empty batch");

  VecX adv = batch.advantage;
  if (cfg.normalize_advantages && n_total > 1) {
    const double mean = adv.mean();
    const double std = std::sqrt((adv.array() - mean).square().sum() / n_total);
    adv = (adv.array() - mean) / (std + 1e-8);
  }

  UpdateStats stats;
  stats.mean_reward = batch.reward.mean();
  int passes = 0;

  PolicyGrads grads = PolicyGrads::zeros_like(policy);
  std::vector<int> order(n_total);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates on the deterministic stream
    for (int i = n_total - 1; i > 0; --i) {
      const int j = shuffle_rng.uniform_int(0, i);
      std::swap(order[i], order[j]);
    }
    const int mb = std::min(cfg.minibatch_size, n_total);
    for (int lo = 0; lo + mb <= n_total; lo += mb) {
      const int hi = lo + mb;
      const int n = mb;

      const MatX cond = gather_cols(batch.cond, order, lo, hi);
      const MatX o_p = gather_cols(batch.proprio, order, lo, hi);
      const MatX o_e = gather_cols(batch.extero, order, lo, hi);
      const MatX z = gather_cols(batch.latent, order, lo, hi);
      const MatX a = gather_cols(batch.action, order, lo, hi);
      const VecX lp_old =
          gather(batch.logp_latent, order, lo, hi) + gather(batch.logp_action, order, lo, hi);
      const VecX alpha = gather(batch.alpha, order, lo, hi);
      const VecX adv_mb = gather(adv, order, lo, hi);
      const VecX ret_mb = gather(batch.ret, order, lo, hi);

      // encoder forward, latent log-probs
      MatX joined(cond.rows() + o_p.rows(), n);
      joined.topRows(cond.rows()) = cond;
      joined.bottomRows(o_p.rows()) = o_p;
      MlpCache enc_cache;
      const MatX enc_out = policy.encoder.forward(joined, &enc_cache);
      const MatX mu = enc_out.topRows(kLatentDim);
      const MatX raw_ls = enc_out.bottomRows(kLatentDim);
      const MatX ls = raw_ls.array().min(kLogStdMax).max(kLogStdMin).matrix();
      const MatX sd = ls.array().exp().matrix();
      const MatX u_z = (z - mu).cwiseQuotient(sd);
      const VecX lp_z = ((-0.5 * u_z.array().square() - ls.array()).colwise().sum() -
                         kLatentDim * kHalfLog2Pi)
                            .matrix()
                            .transpose();

      // action mean through controller (+ gated adapter)
      const bool train_controller = !policy.controller_frozen;
      PerceptiveCache ctrl_cache;
      MatX mean_a = policy.controller.forward(z, o_p, o_e,
                                              train_controller ? &ctrl_cache : nullptr);
      PerceptiveCache ta_cache;
      MatX tanh_ta;
      const bool use_adapter = policy.has_adapter() && (alpha.array() != 0.0).any();
      if (use_adapter) {
        tanh_ta = policy.adapter.forward(z, o_p, o_e, &ta_cache).array().tanh().matrix();
        for (int i = 0; i < n; ++i) {
          if (alpha[i] != 0.0) mean_a.col(i) += alpha[i] * tanh_ta.col(i);
        }
      }

      const VecX ls_a = clamped_log_std(policy.action_log_std);
      const VecX sd_a = ls_a.array().exp().matrix();
      const MatX u_a = ((a - mean_a).array().colwise() / sd_a.array()).matrix();
      const VecX lp_a = ((-0.5 * u_a.array().square()).colwise().sum() -
                         (ls_a.sum() + kActionDim * kHalfLog2Pi))
                            .matrix()
                            .transpose();

      // clipped surrogate
      const VecX ratio = (lp_z + lp_a - lp_old).array().exp().matrix();
      const VecX surr1 = ratio.cwiseProduct(adv_mb);
      const VecX surr2 =
          (ratio.array().min(1.0 + cfg.clip_epsilon).max(1.0 - cfg.clip_epsilon) *
           adv_mb.array())
              .matrix();
      const double policy_loss = -surr1.cwiseMin(surr2).mean();

      // value loss
      PerceptiveCache val_cache;
      const MatX v = policy.value_net.forward(cond, o_p, o_e, &val_cache);
      const VecX v_err = v.row(0).transpose() - ret_mb;
      const double value_loss = v_err.array().square().mean();

      // entropy and KL to the latent prior
      const double ent_z = ls.sum() / n + kLatentDim * (0.5 + kHalfLog2Pi);
      const double ent_a = ls_a.sum() + kActionDim * (0.5 + kHalfLog2Pi);
      const double entropy = ent_z + ent_a;
      const double kl_prior =
          (0.5 * (sd.array().square() + mu.array().square() - 1.0) - ls.array()).sum() / n;

      const double total_loss = policy_loss + cfg.value_coeff * value_loss -
                                cfg.entropy_coeff * entropy + cfg.kl_beta * kl_prior;
      if (!std::isfinite(total_loss)) {
        stats.policy_loss = policy_loss;
        stats.value_loss = value_loss;
        stats.kl_prior = kl_prior;
        stats.entropy = entropy;
        std::string dump_path;
        dump_diagnostics(dump_dir, batch, stats, epoch, lo / mb, "non-finite loss",
                         &dump_path);
        throw NumericError("ppo_update: non-finite loss", dump_path);
      }

      // d loss / d logp per sample: only the unclipped branch carries gradient
      VecX d_lp = VecX::Zero(n);
      for (int i = 0; i < n; ++i) {
        if (surr1[i] <= surr2[i]) d_lp[i] = -adv_mb[i] * ratio[i] / n;
      }

      // encoder head gradients
      MatX d_mu =
          (u_z.cwiseQuotient(sd).array().rowwise() * d_lp.transpose().array()).matrix();
      d_mu += (cfg.kl_beta / n) * mu;
      MatX d_ls =
          ((u_z.array().square() - 1.0).rowwise() * d_lp.transpose().array()).matrix();
      d_ls += (cfg.kl_beta / n) * (sd.array().square() - 1.0).matrix();
      d_ls.array() -= cfg.entropy_coeff / n;
      // gradient passes the clamp only where it was inactive
      d_ls.array() *=
          ((raw_ls.array() > kLogStdMin) && (raw_ls.array() < kLogStdMax)).cast<double>();
      MatX d_enc(2 * kLatentDim, n);
      d_enc.topRows(kLatentDim) = d_mu;
      d_enc.bottomRows(kLatentDim) = d_ls;

      // action mean gradient
      const MatX d_mean_a = ((u_a.array().colwise() / sd_a.array()).rowwise() *
                             d_lp.transpose().array())
                                .matrix();

      // action log-std parameter gradient
      VecX d_ls_a = ((u_a.array().square() - 1.0).rowwise() * d_lp.transpose().array())
                        .rowwise()
                        .sum()
                        .matrix();
      d_ls_a.array() -= cfg.entropy_coeff;
      for (int j = 0; j < kActionDim; ++j) {
        if (policy.action_log_std[j] <= kLogStdMin || policy.action_log_std[j] >= kLogStdMax) {
          d_ls_a[j] = 0.0;
        }
      }

      // value gradient
      const MatX d_v = (2.0 * cfg.value_coeff / n) * v_err.transpose();

      grads.setZero();
      policy.encoder.backward(enc_cache, d_enc, &grads.encoder);
      if (train_controller) {
        policy.controller.backward(ctrl_cache, d_mean_a, &grads.controller);
      }
      if (use_adapter) {
        MatX d_ta = d_mean_a.cwiseProduct((1.0 - tanh_ta.array().square()).matrix());
        d_ta = (d_ta.array().rowwise() * alpha.transpose().array()).matrix();
        policy.adapter.backward(ta_cache, d_ta, &grads.adapter);
      }
      policy.value_net.backward(val_cache, d_v, &grads.value_net);
      grads.action_log_std = d_ls_a;

      // global gradient norm (and optional clip)
      double sq = 0.0;
      for (const auto& t : grads.tensor_refs()) {
        Eigen::Map<const VecX> g(t.data, t.size);
        sq += g.squaredNorm();
      }
      const double gnorm = std::sqrt(sq);
      if (cfg.max_grad_norm > 0.0 && gnorm > cfg.max_grad_norm) {
        const double scale = cfg.max_grad_norm / (gnorm + 1e-8);
        for (auto& t : grads.tensor_refs()) {
          Eigen::Map<VecX> g(t.data, t.size);
          g *= scale;
        }
      }

      adam.step(policy, grads);

      stats.total_loss += total_loss;
      stats.policy_loss += policy_loss;
      stats.value_loss += value_loss;
      stats.entropy += entropy;
      stats.kl_prior += kl_prior;
      stats.approx_kl += (lp_old - lp_z - lp_a).mean();
      stats.clip_fraction +=
          ((ratio.array() - 1.0).abs() > cfg.clip_epsilon).cast<double>().mean();
      stats.grad_norm += gnorm;
      ++passes;
    }
  }

  if (passes > 0) {
    stats.total_loss /= passes;
    stats.policy_loss /= passes;
    stats.value_loss /= passes;
    stats.entropy /= passes;
    stats.kl_prior /= passes;
    stats.approx_kl /= passes;
    stats.clip_fraction /= passes;
    stats.grad_norm /= passes;
  }
  return stats;
}

// ---------------------------------------------------------------------------
// environments

namespace {

TerrainKind kind_for_clip(ClipTerrainTag tag) {
  switch (tag) {
    case ClipTerrainTag::Plane: return TerrainKind::Plane;
    case ClipTerrainTag::StairUp: return TerrainKind::StairUp;
    case ClipTerrainTag::StairDown: return TerrainKind::StairDown;
    case ClipTerrainTag::SlopeUp: return TerrainKind::SlopeUp;
    case ClipTerrainTag::SlopeDown: return TerrainKind::SlopeDown;
  }
  return TerrainKind::Plane;
}

// capture-scene terrain matching clip_terrain_height()
TerrainField scene_field(ClipTerrainTag tag) {
  TerrainParams p;
  p.slope_inclination = kSceneSlopeRad;
  p.stair_step_height = kSceneStairHeight;
  p.stair_step_depth = kSceneStairDepth;
  p.stair_step_count = kSceneStairCount;
  return TerrainField(kind_for_clip(tag), p, 0);
}

Vec12 standing_pose(const SimConfig& cfg) {
  Vec12 q;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const Vec3 target =
        cfg.morphology.hip_positions[leg] +
        Vec3(0.0, leg_side(leg) * cfg.morphology.hip_offset, -cfg.standing_height);
    q.segment<3>(3 * leg) = leg_ik(target, leg, cfg.morphology).angles;
  }
  return q;
}

}  // namespace

ImitationEnv::ImitationEnv(std::vector<MotionClip> clips, const SimConfig& cfg,
                           uint64_t seed)
    : clips_(std::move(clips)), sim_(cfg), rng_(hash_combine(seed, 0x494D4954ull)) {
  if (clips_.empty()) throw ValidationError("imitation env: no clips");
  for (const MotionClip& c : clips_) c.validate();
  nominal_pose_ = standing_pose(cfg);
  cond_ = VecX::Zero(kWindowFeatureDim);
}

void ImitationEnv::refresh_cond() {
  const MotionClip& clip = clips_[clip_index_];
  const ReferenceWindow w = future_targets(clip, std::min(t_ref_, clip.duration()));
  cond_ = window_features(w, sim_.state().base_position,
                          quat_yaw(sim_.state().base_orientation));
}

void ImitationEnv::begin_episode() {
  for (int attempt = 0;; ++attempt) {
    clip_index_ = static_cast<size_t>(rng_.uniform_int(0, static_cast<int>(clips_.size()) - 1));
    const MotionClip& clip = clips_[clip_index_];
    const double dur = clip.duration();
    t_ref_ = dur > 1.2 ? rng_.uniform(0.0, dur - 1.0) : 0.0;
    const TerrainField field = scene_field(clip.terrain_tag);
    const RobotState init = SimEnv::state_from_reference(sample_pose(clip, t_ref_),
                                                         sim_.config().morphology);
    try {
      sim_.reset(field, rng_.next_u64(), init);
      break;
    } catch (const ValidationError&) {
      if (attempt >= 10) throw;
    }
  }
  episode_return_ = 0.0;
  refresh_cond();
}

StepOut ImitationEnv::step(const Vec12& action) {
  const MotionClip& clip = clips_[clip_index_];
  const Vec12 target = nominal_pose_ + action;
  const TerminationReason term = sim_.step(target);
  t_ref_ += sim_.config().policy_dt;

  const double dur = clip.duration();
  const ReferencePose ref = sample_pose(clip, std::min(t_ref_, dur));
  StepOut out;
  out.reward = imitation_reward(sim_.state(), ref).total;
  out.done = term != TerminationReason::None || t_ref_ >= dur - 1e-9;
  episode_return_ += out.reward;
  if (out.done) finished_.push_back(episode_return_);
  refresh_cond();
  return out;
}

std::vector<double> ImitationEnv::take_finished_returns() {
  std::vector<double> out;
  out.swap(finished_);
  return out;
}

CommandEnv::CommandEnv(TerrainKind kind, const SimConfig& cfg, const PpoConfig& ppo,
                       std::array<CurriculumState, kNumTerrainKinds>* curricula,
                       uint64_t seed)
    : kind_(kind), sim_cfg_(cfg), ppo_(ppo), curricula_(curricula), sim_(cfg),
      rng_(hash_combine(seed, 0x434D4421ull)) {
  if (!curricula_) throw ValidationError("command env: null curricula");
  nominal_pose_ = standing_pose(cfg);
  cond_ = VecX::Zero(kCommandDim);
}

int CommandEnv::terrain_kind_index() const { return static_cast<int>(kind_); }

void CommandEnv::refresh_obs_derived() {
  cond_ = command_.encode(quat_yaw(sim_.state().base_orientation));
  alpha_ = patch_std_gate(sim_.observation().extero).alpha;
}

void CommandEnv::begin_episode() {
  CurriculumState& cur = (*curricula_)[static_cast<int>(kind_)];
  const TerrainParams params = cur.params_for_episode(kind_, rng_);
  const TerrainField field(kind_, params, rng_.next_u64());

  const bool approach = kind_ != TerrainKind::Plane && kind_ != TerrainKind::Blocks &&
                        kind_ != TerrainKind::Hills;
  const double x0 = approach ? -0.6 : 0.0;
  const double yaw0 = rng_.uniform(-ppo_.heading_error_range, ppo_.heading_error_range);
  command_.target_speed = rng_.uniform(ppo_.command_speed_min, ppo_.command_speed_max);
  command_.target_yaw = 0.0;

  const RobotState init = SimEnv::standing_state(sim_cfg_, field, x0, 0.0, yaw0);
  sim_.reset(field, rng_.next_u64(), init);
  episode_return_ = 0.0;
  command_reward_sum_ = 0.0;
  refresh_obs_derived();
}

StepOut CommandEnv::step(const Vec12& action) {
  const Vec12 target = nominal_pose_ + action;
  const TerminationReason term = sim_.step(target);

  const double cmd_r = command_reward(sim_.state(), command_);
  const double pen = ppo_.stair_penalty_weight *
                     stair_edge_penalty(sim_.state().toe_positions,
                                        sim_.state().toe_contacts, sim_.terrain());
  StepOut out;
  out.reward = cmd_r + pen;
  out.done = term != TerminationReason::None;
  command_reward_sum_ += cmd_r;
  episode_return_ += out.reward;

  if (out.done) {
    const double mean_cmd = command_reward_sum_ / sim_.steps_taken();
    const bool success =
        term == TerminationReason::TimeLimit && mean_cmd >= ppo_.success_threshold;
    CurriculumState& cur = (*curricula_)[static_cast<int>(kind_)];
    cur = curriculum_step(cur, success, ppo_.curriculum_streak);
    finished_.push_back(episode_return_);
  }
  refresh_obs_derived();
  return out;
}

std::vector<double> CommandEnv::take_finished_returns() {
  std::vector<double> out;
  out.swap(finished_);
  return out;
}

// ---------------------------------------------------------------------------
// training loops

namespace {

struct LoopSinks {
  std::array<CurriculumState, kNumTerrainKinds>* curricula = nullptr;
};

TrainResult run_training_loop(Policy& policy, std::vector<RolloutEnv*>& envs,
                              const PpoConfig& cfg, int stage, const LoopSinks& sinks,
                              const std::string& dump_dir) {
  Rng sample_rng(hash_combine(cfg.seed, 1));
  Rng shuffle_rng(hash_combine(cfg.seed, 2));
  Adam adam(policy, cfg.learning_rate);

  for (RolloutEnv* e : envs) e->begin_episode();

  TrainResult result;
  result.baseline_step_reward = 0.0;
  result.best_step_reward = -std::numeric_limits<double>::infinity();

  for (int update = 0; update < cfg.updates; ++update) {
    TrajectoryBatch batch = collect_rollouts(policy, envs, cfg.horizon, sample_rng);
    compute_gae(batch, cfg.discount, cfg.gae_lambda);
    const UpdateStats stats = ppo_update(policy, batch, cfg, adam, shuffle_rng, dump_dir);

    CurvePoint pt;
    pt.update = update;
    pt.stage = stage;
    pt.mean_step_reward = stats.mean_reward;
    pt.kl_prior = stats.kl_prior;
    pt.clip_fraction = stats.clip_fraction;
    pt.terrain_return.fill(std::numeric_limits<double>::quiet_NaN());
    pt.curriculum.fill(std::numeric_limits<double>::quiet_NaN());

    std::array<double, kNumTerrainKinds> sums{};
    std::array<int, kNumTerrainKinds> counts{};
    double all_sum = 0.0;
    int all_count = 0;
    for (RolloutEnv* e : envs) {
      const auto rets = e->take_finished_returns();
      const int k = e->terrain_kind_index();
      for (double r : rets) {
        all_sum += r;
        ++all_count;
        if (k >= 0) {
          sums[k] += r;
          ++counts[k];
        }
      }
    }
    if (all_count > 0) pt.mean_return = all_sum / all_count;
    for (int k = 0; k < kNumTerrainKinds; ++k) {
      if (counts[k] > 0) pt.terrain_return[k] = sums[k] / counts[k];
    }
    if (sinks.curricula) {
      const auto& cur = *sinks.curricula;
      const int slope_kind = static_cast<int>(TerrainKind::SlopeUp);
      const int stair_kind = static_cast<int>(TerrainKind::StairUp);
      const int block_kind = static_cast<int>(TerrainKind::Blocks);
      const int hill_kind = static_cast<int>(TerrainKind::Hills);
      pt.curriculum[kCurSlope] = cur[slope_kind].value(kCurSlope);
      pt.curriculum[kCurStairHeight] = cur[stair_kind].value(kCurStairHeight);
      pt.curriculum[kCurStairDepth] = cur[stair_kind].value(kCurStairDepth);
      pt.curriculum[kCurBlockSize] = cur[block_kind].value(kCurBlockSize);
      pt.curriculum[kCurBlockHeight] = cur[block_kind].value(kCurBlockHeight);
      pt.curriculum[kCurHillHeight] = cur[hill_kind].value(kCurHillHeight);
    }
    result.curve.push_back(pt);

    if (update == 0) result.baseline_step_reward = stats.mean_reward;
    result.best_step_reward = std::max(result.best_step_reward, stats.mean_reward);
    result.final_step_reward = stats.mean_reward;
  }

  result.checkpoint.policy = policy;
  result.checkpoint.train_step =
      static_cast<uint64_t>(cfg.updates) * cfg.num_envs * cfg.horizon;
  if (sinks.curricula) result.checkpoint.curricula = *sinks.curricula;
  return result;
}

}  // namespace

TrainResult train_imitation(const std::vector<MotionClip>& clips, const PpoConfig& ppo,
                            const NetworkSizes& sizes, const SimConfig& sim_cfg,
                            const std::string& dump_dir) {
  ppo.validate();
  Policy policy(Stage::Imitation, sizes, kWindowFeatureDim, hash_combine(ppo.seed, 3));

  std::vector<std::unique_ptr<ImitationEnv>> owned;
  std::vector<RolloutEnv*> envs;
  for (int i = 0; i < ppo.num_envs; ++i) {
    owned.push_back(
        std::make_unique<ImitationEnv>(clips, sim_cfg, hash_combine(ppo.seed, 100 + i)));
    envs.push_back(owned.back().get());
  }
  return run_training_loop(policy, envs, ppo, 1, {}, dump_dir);
}

TrainResult train_adaptation(const Checkpoint& stage1, const PpoConfig& ppo,
                             const SimConfig& sim_cfg, const std::string& dump_dir) {
  ppo.validate();
  if (stage1.policy.stage() != Stage::Imitation) {
    throw ValidationError("train_adaptation: need a stage-1 checkpoint");
  }
  Policy policy(Stage::Adaptation, stage1.policy.sizes(), 0, hash_combine(ppo.seed, 3));
  policy.controller = stage1.policy.controller;
  policy.controller_frozen = true;

  std::array<CurriculumState, kNumTerrainKinds> curricula{};
  std::vector<std::unique_ptr<CommandEnv>> owned;
  std::vector<RolloutEnv*> envs;
  for (int i = 0; i < ppo.num_envs; ++i) {
    const TerrainKind kind = kAllTerrainKinds[i % kNumTerrainKinds];
    owned.push_back(std::make_unique<CommandEnv>(kind, sim_cfg, ppo, &curricula,
                                                 hash_combine(ppo.seed, 100 + i)));
    envs.push_back(owned.back().get());
  }
  LoopSinks sinks;
  sinks.curricula = &curricula;
  TrainResult result = run_training_loop(policy, envs, ppo, 2, sinks, dump_dir);
  result.checkpoint.stage1_param_hash = policy_param_hash(stage1.policy);
  return result;
}

TrainResult train_command_toy(const PpoConfig& ppo, const NetworkSizes& sizes,
                              const std::string& dump_dir) {
  ppo.validate();
  Policy policy(Stage::Adaptation, sizes, 0, hash_combine(ppo.seed, 3));
  policy.controller_frozen = false;

  std::vector<std::unique_ptr<PointMassEnv>> owned;
  std::vector<RolloutEnv*> envs;
  for (int i = 0; i < ppo.num_envs; ++i) {
    owned.push_back(std::make_unique<PointMassEnv>(hash_combine(ppo.seed, 100 + i)));
    envs.push_back(owned.back().get());
  }
  return run_training_loop(policy, envs, ppo, 2, {}, dump_dir);
}

void write_curve_csv(const std::vector<CurvePoint>& curve, std::ostream& out) {
  std::ostringstream ss;
  ss.precision(10);
  ss << "update,stage,mean_step_reward,mean_return";
  for (TerrainKind k : kAllTerrainKinds) ss << ",return_" << to_string(k);
  ss << ",kl_prior,clip_fraction,cur_slope,cur_stair_height,cur_stair_depth,"
        "cur_block_size,cur_block_height,cur_hill_height\n";
  auto field = [&](double v) {
    ss << ',';
    if (std::isfinite(v)) ss << v;
  };
  for (const CurvePoint& p : curve) {
    ss << p.update << ',' << p.stage << ',' << p.mean_step_reward;
    field(p.mean_return);
    for (double r : p.terrain_return) field(r);
    field(p.kl_prior);
    field(p.clip_fraction);
    for (double c : p.curriculum) field(c);
    ss << '\n';
  }
  out << ss.str();
}

// ---------------------------------------------------------------------------
// evaluation

EpisodeRunner make_sim_runner(const Checkpoint& ck, const SimConfig& sim_cfg,
                              const PpoConfig& ppo,
                              std::vector<TrajectoryRecord>* first_episode_dump) {
  if (ck.policy.stage() != Stage::Adaptation) {
    throw ValidationError("evaluation needs an adaptation-stage checkpoint");
  }
  auto policy = std::make_shared<Policy>(ck.policy);
  auto curricula = std::make_shared<std::array<CurriculumState, kNumTerrainKinds>>(
      ck.curricula);
  auto dump_done = std::make_shared<bool>(false);
  const Vec12 nominal = standing_pose(sim_cfg);

  return [policy, curricula, sim_cfg, ppo, nominal, first_episode_dump,
          dump_done](TerrainKind kind, uint64_t seed) -> EpisodeOutcome {
    Rng rng(seed);
    const TerrainParams params =
        (*curricula)[static_cast<int>(kind)].params_for_episode(kind, rng);
    const TerrainField field(kind, params, rng.next_u64());
    const bool approach = kind != TerrainKind::Plane && kind != TerrainKind::Blocks &&
                          kind != TerrainKind::Hills;
    const double yaw0 = rng.uniform(-ppo.heading_error_range, ppo.heading_error_range);
    Command command;
    command.target_speed = rng.uniform(ppo.command_speed_min, ppo.command_speed_max);
    command.target_yaw = 0.0;

    SimEnv sim(sim_cfg);
    sim.reset(field, rng.next_u64(),
              SimEnv::standing_state(sim_cfg, field, approach ? -0.6 : 0.0, 0.0, yaw0));

    const bool dump = first_episode_dump && !*dump_done;
    EpisodeOutcome out;
    while (sim.termination() == TerminationReason::None) {
      const VecX cond = command.encode(quat_yaw(sim.state().base_orientation));
      const VecX& o_p = sim.observation().proprio;
      const VecX& o_e = sim.observation().extero.heights;
      const GaussianLatent g = policy->encode_command(cond, o_p);
      const Vec12 a = policy->adapt_action(g.mean, o_p, o_e,
                                           policy->decode_action(g.mean, o_p, o_e),
                                           patch_std_gate(sim.observation().extero).alpha);
      const TerminationReason term = sim.step(nominal + a);
      const double cmd_r = command_reward(sim.state(), command);
      const double pen = ppo.stair_penalty_weight *
                         stair_edge_penalty(sim.state().toe_positions,
                                            sim.state().toe_contacts, sim.terrain());
      out.total_return += cmd_r + pen;
      out.return_no_penalty += cmd_r;
      ++out.steps;
      if (dump) {
        TrajectoryRecord rec;
        rec.step = sim.steps_taken();
        rec.time = sim.time();
        rec.base_position = sim.state().base_position;
        rec.base_orientation = sim.state().base_orientation;
        rec.base_linear_velocity = sim.state().base_linear_velocity;
        rec.base_angular_velocity = sim.state().base_angular_velocity;
        rec.joint_angles = sim.state().joint_angles;
        rec.toe_positions = sim.state().toe_positions;
        rec.toe_contacts = sim.state().toe_contacts;
        rec.applied_torque = sim.applied_torque();
        rec.reward = cmd_r + pen;
        rec.termination = to_string(term);
        first_episode_dump->push_back(std::move(rec));
      }
    }
    if (dump) *dump_done = true;
    return out;
  };
}

EpisodeRunner make_toy_runner(const Checkpoint& ck) {
  if (ck.policy.stage() != Stage::Adaptation) {
    throw ValidationError("evaluation needs an adaptation-stage checkpoint");
  }
  auto policy = std::make_shared<Policy>(ck.policy);
  return [policy](TerrainKind, uint64_t seed) -> EpisodeOutcome {
    PointMassEnv env(seed);
    env.begin_episode();
    EpisodeOutcome out;
    for (int t = 0; t < 100; ++t) {
      const GaussianLatent g = policy->encode_command(env.cond(), env.proprio());
      const Vec12 a_base = policy->decode_action(g.mean, env.proprio(), env.extero());
      const Vec12 a =
          policy->adapt_action(g.mean, env.proprio(), env.extero(), a_base, env.gate_alpha());
      const StepOut s = env.step(a);
      out.total_return += s.reward;
      out.return_no_penalty += s.reward;
      ++out.steps;
      if (s.done) break;
    }
    return out;
  };
}

}  // namespace quadmimic
