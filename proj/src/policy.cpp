#include "quadmimic/policy.hpp"

#include "quadmimic/errors.hpp"

#include <cmath>

namespace quadmimic {

void PerceptiveNetSpec::validate() const {
  if (cond_dim < 0 || proprio_dim < 1 || extero_dim < 1 || embed_dim < 1 || out_dim < 1) {
    throw ValidationError("perceptive net spec: non-positive dimension");
  }
  if (hidden.empty()) throw ValidationError("perceptive net spec: no hidden layers");
}

MlpSpec PerceptiveNetSpec::trunk_spec() const {
  MlpSpec s;
  s.widths.push_back(cond_dim + proprio_dim + embed_dim);
  for (int h : hidden) s.widths.push_back(h);
  s.widths.push_back(out_dim);
  s.hidden_activation = activation;
  return s;
}

void PerceptiveGrads::setZero() {
  compress.W.setZero();
  compress.b.setZero();
  trunk.setZero();
}

PerceptiveNet::PerceptiveNet(PerceptiveNetSpec spec, Rng& rng, double out_gain)
    : spec_(std::move(spec)) {
  spec_.validate();
  compress.W = orthogonal_init(spec_.embed_dim, spec_.extero_dim, 1.0, rng);
  compress.b = VecX::Zero(spec_.embed_dim);
  trunk = Mlp(spec_.trunk_spec(), rng, 1.0, out_gain);
}

MatX PerceptiveNet::forward(const MatX& cond, const MatX& o_p, const MatX& o_e,
                            PerceptiveCache* cache) const {
  const auto n = o_p.cols();
  if (cond.rows() != spec_.cond_dim || o_p.rows() != spec_.proprio_dim ||
      o_e.rows() != spec_.extero_dim || cond.cols() != n || o_e.cols() != n) {
    throw ValidationError("perceptive net forward: input shape mismatch");
  }
  MatX embed = ((compress.W * o_e).colwise() + compress.b).array().tanh();
  MatX joined(spec_.cond_dim + spec_.proprio_dim + spec_.embed_dim, n);
  joined.topRows(spec_.cond_dim) = cond;
  joined.middleRows(spec_.cond_dim, spec_.proprio_dim) = o_p;
  joined.bottomRows(spec_.embed_dim) = embed;
  if (cache) {
    cache->extero_in = o_e;
    cache->embed = embed;
    MatX out = trunk.forward(joined, &cache->trunk);
    cache->valid = true;
    return out;
  }
  return trunk.forward(joined);
}

void PerceptiveNet::backward(const PerceptiveCache& cache, const MatX& d_out,
                             PerceptiveGrads* grads) const {
  if (!cache.valid) throw StateError("perceptive net backward: cache not valid");
  const MatX d_joined = trunk.backward(cache.trunk, d_out, grads ? &grads->trunk : nullptr);
  if (!grads) return;
  MatX d_embed = d_joined.bottomRows(spec_.embed_dim);
  d_embed.array() *= (1.0 - cache.embed.array().square());
  grads->compress.W += d_embed * cache.extero_in.transpose();
  grads->compress.b += d_embed.rowwise().sum();
}

PerceptiveGrads PerceptiveNet::zero_grads() const {
  PerceptiveGrads g;
  g.compress.W = MatX::Zero(compress.W.rows(), compress.W.cols());
  g.compress.b = VecX::Zero(compress.b.size());
  g.trunk = trunk.zero_grads();
  return g;
}

Policy::Policy(Stage stage, const NetworkSizes& sizes, int ref_feature_dim, uint64_t seed)
    : stage_(stage), sizes_(sizes), ref_feature_dim_(ref_feature_dim) {
  if (stage_ == Stage::Imitation && ref_feature_dim_ < 1) {
    throw ValidationError("policy: stage 1 needs a positive reference feature width");
  }
  Rng rng(hash_combine(seed, 0x504F4C49ull));

  MlpSpec enc_spec;
  enc_spec.widths.push_back(cond_dim() + kProprioDim);
  for (int h : sizes_.encoder_hidden) enc_spec.widths.push_back(h);
  enc_spec.widths.push_back(2 * kLatentDim);  // mean and log-std heads
  encoder = Mlp(enc_spec, rng, 1.0, 0.01);

  PerceptiveNetSpec ctrl;
  ctrl.cond_dim = kLatentDim;
  ctrl.embed_dim = sizes_.extero_embed;
  ctrl.hidden = sizes_.controller_hidden;
  ctrl.out_dim = kActionDim;
  controller = PerceptiveNet(ctrl, rng, 0.01);

  if (stage_ == Stage::Adaptation) {
    adapter = PerceptiveNet(ctrl, rng, 0.01);
  }

  PerceptiveNetSpec val;
  val.cond_dim = cond_dim();
  val.embed_dim = sizes_.extero_embed;
  val.hidden = sizes_.value_hidden;
  val.out_dim = 1;
  value_net = PerceptiveNet(val, rng, 1.0);

  action_log_std = VecX::Constant(kActionDim, -1.0);
}

int Policy::cond_dim() const {
  return stage_ == Stage::Imitation ? ref_feature_dim_ : kCommandDim;
}

std::pair<MatX, MatX> Policy::encode_batch(const MatX& cond, const MatX& o_p,
                                           MlpCache* cache) const {
  if (cond.rows() != cond_dim() || o_p.rows() != kProprioDim || cond.cols() != o_p.cols()) {
    throw ValidationError("encode: conditioning shape mismatch");
  }
  MatX joined(cond.rows() + o_p.rows(), cond.cols());
  joined.topRows(cond.rows()) = cond;
  joined.bottomRows(o_p.rows()) = o_p;
  const MatX out = encoder.forward(joined, cache);
  MatX mean = out.topRows(kLatentDim);
  MatX std = out.bottomRows(kLatentDim)
                 .array()
                 .min(kLogStdMax)
                 .max(kLogStdMin)
                 .exp();
  return {std::move(mean), std::move(std)};
}

GaussianLatent Policy::encode(const VecX& cond, const VecX& o_p) const {
  auto [mean, std] = encode_batch(cond, o_p);
  GaussianLatent g;
  g.mean = mean.col(0);
  g.std = std.col(0);
  return g;
}

GaussianLatent Policy::encode_reference(const VecX& window_features, const VecX& o_p) const {
  if (stage_ != Stage::Imitation) {
    throw StateError("encode_reference: policy is not in the imitation stage");
  }
  return encode(window_features, o_p);
}

GaussianLatent Policy::encode_command(const VecX& command, const VecX& o_p) const {
  if (stage_ != Stage::Adaptation) {
    throw StateError("encode_command: policy is not in the adaptation stage");
  }
  return encode(command, o_p);
}

Vec12 Policy::decode_action(const VecX& z, const VecX& o_p, const VecX& o_e) const {
  if (z.size() != kLatentDim) throw ValidationError("decode_action: latent must be 8-d");
  return controller.forward(z, o_p, o_e);
}

Vec12 Policy::adapt_action(const VecX& z, const VecX& o_p, const VecX& o_e, const Vec12& a,
                           double alpha) const {
  if (!has_adapter()) throw StateError("adapt_action: policy has no adaptation module");
  if (alpha == 0.0) return a;  // gate closed: exact passthrough
  const Vec12 offset = adapter.forward(z, o_p, o_e);
  return a + alpha * offset.array().tanh().matrix();
}

double Policy::value(const VecX& cond, const VecX& o_p, const VecX& o_e) const {
  return value_net.forward(cond, o_p, o_e)(0, 0);
}

namespace {

void push_mlp(std::vector<Policy::TensorRef>& out, const std::string& prefix, Mlp& net) {
  for (size_t l = 0; l < net.layers.size(); ++l) {
    out.push_back({prefix + "." + std::to_string(l) + ".W", net.layers[l].W.data(),
                   net.layers[l].W.size()});
    out.push_back({prefix + "." + std::to_string(l) + ".b", net.layers[l].b.data(),
                   net.layers[l].b.size()});
  }
}

void push_pnet(std::vector<Policy::TensorRef>& out, const std::string& prefix,
               PerceptiveNet& net) {
  out.push_back({prefix + ".compress.W", net.compress.W.data(), net.compress.W.size()});
  out.push_back({prefix + ".compress.b", net.compress.b.data(), net.compress.b.size()});
  push_mlp(out, prefix + ".trunk", net.trunk);
}

void push_pgrads(std::vector<Policy::TensorRef>& out, const std::string& prefix,
                 PerceptiveGrads& g) {
  out.push_back({prefix + ".compress.W", g.compress.W.data(), g.compress.W.size()});
  out.push_back({prefix + ".compress.b", g.compress.b.data(), g.compress.b.size()});
  for (size_t l = 0; l < g.trunk.layers.size(); ++l) {
    out.push_back({prefix + ".trunk." + std::to_string(l) + ".W", g.trunk.layers[l].W.data(),
                   g.trunk.layers[l].W.size()});
    out.push_back({prefix + ".trunk." + std::to_string(l) + ".b", g.trunk.layers[l].b.data(),
                   g.trunk.layers[l].b.size()});
  }
}

}  // namespace

std::vector<Policy::TensorRef> Policy::tensor_refs() {
  std::vector<TensorRef> out;
  push_mlp(out, "encoder", encoder);
  push_pnet(out, "controller", controller);
  if (has_adapter()) push_pnet(out, "adapter", adapter);
  push_pnet(out, "value", value_net);
  out.push_back({"action_log_std", action_log_std.data(), action_log_std.size()});
  return out;
}

std::vector<Policy::TensorRef> Policy::tensor_refs() const {
  return const_cast<Policy*>(this)->tensor_refs();
}

PolicyGrads PolicyGrads::zeros_like(const Policy& p) {
  PolicyGrads g;
  g.encoder = p.encoder.zero_grads();
  g.controller = p.controller.zero_grads();
  g.has_adapter = p.has_adapter();
  if (g.has_adapter) g.adapter = p.adapter.zero_grads();
  g.value_net = p.value_net.zero_grads();
  g.action_log_std = VecX::Zero(p.action_log_std.size());
  return g;
}

void PolicyGrads::setZero() {
  encoder.setZero();
  controller.setZero();
  if (has_adapter) adapter.setZero();
  value_net.setZero();
  action_log_std.setZero();
}

std::vector<Policy::TensorRef> PolicyGrads::tensor_refs() {
  std::vector<Policy::TensorRef> out;
  for (size_t l = 0; l < encoder.layers.size(); ++l) {
    out.push_back({"encoder." + std::to_string(l) + ".W", encoder.layers[l].W.data(),
                   encoder.layers[l].W.size()});
    out.push_back({"encoder." + std::to_string(l) + ".b", encoder.layers[l].b.data(),
                   encoder.layers[l].b.size()});
  }
  push_pgrads(out, "controller", controller);
  if (has_adapter) push_pgrads(out, "adapter", adapter);
  push_pgrads(out, "value", value_net);
  out.push_back({"action_log_std", action_log_std.data(), action_log_std.size()});
  return out;
}

std::pair<VecX, double> sample_latent(const GaussianLatent& g, Rng& rng) {
  VecX z(kLatentDim);
  for (int i = 0; i < kLatentDim; ++i) z[i] = g.mean[i] + g.std[i] * rng.normal();
  return {z, latent_log_prob(g, z)};
}

double latent_log_prob(const GaussianLatent& g, const VecX& z) {
  if (z.size() != kLatentDim) throw ValidationError("latent_log_prob: latent must be 8-d");
  double lp = -0.5 * kLatentDim * std::log(2.0 * M_PI);
  for (int i = 0; i < kLatentDim; ++i) {
    const double u = (z[i] - g.mean[i]) / g.std[i];
    lp += -0.5 * u * u - std::log(g.std[i]);
  }
  return lp;
}

double kl_to_prior(const GaussianLatent& g) {
  // KL(N(m, s^2) || N(0, 1)) summed over dimensions
  double kl = 0.0;
  for (int i = 0; i < kLatentDim; ++i) {
    const double s2 = g.std[i] * g.std[i];
    kl += 0.5 * (s2 + g.mean[i] * g.mean[i] - 1.0) - std::log(g.std[i]);
  }
  return kl;
}

}  // namespace quadmimic
