#pragma once

#include "quadmimic/mlp.hpp"
#include "quadmimic/rng.hpp"
#include "quadmimic/types.hpp"

#include <string>
#include <utility>
#include <vector>

namespace quadmimic {

// Trunk over [conditioning, proprio, compressed extero]. The extero block
// goes through one linear + tanh compression before joining the trunk.
struct PerceptiveNetSpec {
  int cond_dim = 0;
  int proprio_dim = kProprioDim;
  int extero_dim = kExteroDim;
  int embed_dim = 128;
  std::vector<int> hidden;
  int out_dim = 0;
  Activation activation = Activation::Tanh;

  void validate() const;
  MlpSpec trunk_spec() const;
};

struct PerceptiveCache {
  bool valid = false;
  MatX extero_in;
  MatX embed;
  MlpCache trunk;
};

struct PerceptiveGrads {
  LinearLayer compress;
  MlpGrads trunk;
  void setZero();
};

class PerceptiveNet {
 public:
  PerceptiveNet() = default;
  PerceptiveNet(PerceptiveNetSpec spec, Rng& rng, double out_gain = 1.0);

  const PerceptiveNetSpec& spec() const { return spec_; }

  // cond: cond_dim x N, o_p: 135 x N, o_e: 1024 x N -> out_dim x N
  MatX forward(const MatX& cond, const MatX& o_p, const MatX& o_e,
               PerceptiveCache* cache = nullptr) const;
  void backward(const PerceptiveCache& cache, const MatX& d_out,
                PerceptiveGrads* grads) const;
  PerceptiveGrads zero_grads() const;

  LinearLayer compress;
  Mlp trunk;

 private:
  PerceptiveNetSpec spec_;
};

enum class Stage { Imitation = 1, Adaptation = 2 };

// Diagonal Gaussian over the 8-d latent.
struct GaussianLatent {
  Eigen::Matrix<double, kLatentDim, 1> mean;
  Eigen::Matrix<double, kLatentDim, 1> std;
};

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

struct NetworkSizes {
  std::vector<int> encoder_hidden = {256, 128};
  std::vector<int> controller_hidden = {512, 256, 128};
  std::vector<int> value_hidden = {256, 128};
  int extero_embed = 128;
};

// Latent-variable policy. Stage 1: reference encoder + low-level controller.
// Stage 2: command encoder + frozen controller + gated adaptation offset.
class Policy {
 public:
  Policy() = default;
  // ref_feature_dim conditions the stage-1 encoder and value net; stage 2
  // conditions on the 3-d command instead.
  Policy(Stage stage, const NetworkSizes& sizes, int ref_feature_dim, uint64_t seed);

  Stage stage() const { return stage_; }
  int cond_dim() const;  // encoder/value conditioning width
  const NetworkSizes& sizes() const { return sizes_; }
  int ref_feature_dim() const { return ref_feature_dim_; }

  GaussianLatent encode_reference(const VecX& window_features, const VecX& o_p) const;
  GaussianLatent encode_command(const VecX& command, const VecX& o_p) const;
  // stage-agnostic, cond must match cond_dim()
  GaussianLatent encode(const VecX& cond, const VecX& o_p) const;
  std::pair<MatX, MatX> encode_batch(const MatX& cond, const MatX& o_p,
                                     MlpCache* cache = nullptr) const;  // mean, std

  Vec12 decode_action(const VecX& z, const VecX& o_p, const VecX& o_e) const;
  // a + alpha * tanh(offset); alpha = 0 returns `a` bitwise unchanged
  Vec12 adapt_action(const VecX& z, const VecX& o_p, const VecX& o_e, const Vec12& a,
                     double alpha) const;
  double value(const VecX& cond, const VecX& o_p, const VecX& o_e) const;

  Mlp encoder;
  PerceptiveNet controller;
  PerceptiveNet adapter;  // stage 2 only
  PerceptiveNet value_net;
  VecX action_log_std;
  bool controller_frozen = false;

  bool has_adapter() const { return stage_ == Stage::Adaptation; }

  struct TensorRef {
    std::string name;
    double* data;
    Eigen::Index size;
  };
  std::vector<TensorRef> tensor_refs();
  std::vector<TensorRef> tensor_refs() const;  // const variant, same order

 private:
  Stage stage_ = Stage::Imitation;
  NetworkSizes sizes_;
  int ref_feature_dim_ = 0;
};

// Gradient buffers shaped like a Policy; tensor order matches tensor_refs().
struct PolicyGrads {
  MlpGrads encoder;
  PerceptiveGrads controller;
  PerceptiveGrads adapter;
  PerceptiveGrads value_net;
  VecX action_log_std;
  bool has_adapter = false;

  static PolicyGrads zeros_like(const Policy& p);
  void setZero();
  std::vector<Policy::TensorRef> tensor_refs();
};

// z ~ N(mean, diag(std^2)) and its log density.
std::pair<VecX, double> sample_latent(const GaussianLatent& g, Rng& rng);
double latent_log_prob(const GaussianLatent& g, const VecX& z);
// KL(N(mean, diag(std^2)) || N(0, I))
double kl_to_prior(const GaussianLatent& g);

}  // namespace quadmimic
