#include "quadmimic/mlp.hpp"

#include "quadmimic/errors.hpp"

#include <cmath>

namespace quadmimic {

const char* to_string(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
    case Activation::Identity: return "identity";
  }
  return "tanh";
}

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "relu") return Activation::Relu;
  if (s == "identity") return Activation::Identity;
  throw ParseError("unknown activation '" + s + "'");
}

void MlpSpec::validate() const {
  if (widths.size() < 2) throw ValidationError("mlp spec: need at least input and output widths");
  for (int w : widths) {
    if (w < 1) throw ValidationError("mlp spec: widths must be positive");
  }
}

void MlpGrads::setZero() {
  for (auto& l : layers) {
    l.W.setZero();
    l.b.setZero();
  }
}

MatX orthogonal_init(int rows, int cols, double gain, Rng& rng) {
  // thin QR of a tall Gaussian draw, sign-fixed; transposed when wide
  const int tall = std::max(rows, cols);
  const int thin = std::min(rows, cols);
  MatX a(tall, thin);
  for (int j = 0; j < thin; ++j) {
    for (int i = 0; i < tall; ++i) a(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<MatX> qr(a);
  MatX q = qr.householderQ() * MatX::Identity(tall, thin);
  const MatX qr_mat = qr.matrixQR();
  for (int j = 0; j < thin; ++j) {
    if (qr_mat(j, j) < 0) q.col(j) *= -1.0;
  }
  if (rows >= cols) return gain * q;
  return gain * MatX(q.transpose());
}

Mlp::Mlp(MlpSpec spec, Rng& rng, double gain, double out_gain) : spec_(std::move(spec)) {
  spec_.validate();
  const size_t n_layers = spec_.widths.size() - 1;
  layers.reserve(n_layers);
  for (size_t l = 0; l < n_layers; ++l) {
    const int in = spec_.widths[l];
    const int out = spec_.widths[l + 1];
    LinearLayer layer;
    layer.W = orthogonal_init(out, in, l + 1 == n_layers ? out_gain : gain, rng);
    layer.b = VecX::Zero(out);
    layers.push_back(std::move(layer));
  }
}

namespace {

MatX apply_activation(Activation act, const MatX& z) {
  switch (act) {
    case Activation::Tanh: return z.array().tanh();
    case Activation::Relu: return z.array().max(0.0);
    case Activation::Identity: return z;
  }
  return z;
}

// derivative expressed through the activation output
MatX activation_grad(Activation act, const MatX& post) {
  switch (act) {
    case Activation::Tanh: return 1.0 - post.array().square();
    case Activation::Relu: return (post.array() > 0.0).cast<double>();
    case Activation::Identity: return MatX::Ones(post.rows(), post.cols());
  }
  return MatX::Ones(post.rows(), post.cols());
}

}  // namespace

MatX Mlp::forward(const MatX& x, MlpCache* cache) const {
  if (x.rows() != input_dim()) {
    throw ValidationError("mlp forward: input has " + std::to_string(x.rows()) +
                          " rows, expected " + std::to_string(input_dim()));
  }
  if (cache) {
    cache->input = x;
    cache->pre.clear();
    cache->post.clear();
  }
  MatX h = x;
  for (size_t l = 0; l < layers.size(); ++l) {
    MatX z = layers[l].W * h;
    z.colwise() += layers[l].b;
    const bool last = l + 1 == layers.size();
    if (last) {
      if (cache) cache->pre.push_back(z);
      h = std::move(z);
    } else {
      MatX a = apply_activation(spec_.hidden_activation, z);
      if (cache) {
        cache->pre.push_back(std::move(z));
        cache->post.push_back(a);
      }
      h = std::move(a);
    }
  }
  if (cache) cache->valid = true;
  return h;
}

MatX Mlp::backward(const MlpCache& cache, const MatX& d_out, MlpGrads* grads) const {
  if (!cache.valid) throw StateError("mlp backward: cache not produced by forward");
  if (cache.pre.size() != layers.size()) {
    throw StateError("mlp backward: cache does not match network depth");
  }
  if (d_out.rows() != output_dim() || d_out.cols() != cache.input.cols()) {
    throw ValidationError("mlp backward: gradient shape mismatch");
  }
  if (grads && grads->layers.size() != layers.size()) {
    throw ValidationError("mlp backward: grads structure mismatch");
  }

  MatX delta = d_out;
  for (int l = static_cast<int>(layers.size()) - 1; l >= 0; --l) {
    const MatX& input_l = l == 0 ? cache.input : cache.post[l - 1];
    if (grads) {
      grads->layers[l].W += delta * input_l.transpose();
      grads->layers[l].b += delta.rowwise().sum();
    }
    delta = layers[l].W.transpose() * delta;
    if (l > 0) {
      delta.array() *= activation_grad(spec_.hidden_activation, cache.post[l - 1]).array();
    }
  }
  return delta;
}

MlpGrads Mlp::zero_grads() const {
  MlpGrads g;
  g.layers.reserve(layers.size());
  for (const auto& l : layers) {
    g.layers.push_back({MatX::Zero(l.W.rows(), l.W.cols()), VecX::Zero(l.b.size())});
  }
  return g;
}

size_t Mlp::parameter_count() const {
  size_t n = 0;
  for (const auto& l : layers) n += l.W.size() + l.b.size();
  return n;
}

}  // namespace quadmimic
