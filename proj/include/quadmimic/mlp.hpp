#pragma once

#include "quadmimic/rng.hpp"
#include "quadmimic/types.hpp"

#include <string>
#include <vector>

namespace quadmimic {

enum class Activation { Tanh, Relu, Identity };
const char* to_string(Activation a);
Activation activation_from_string(const std::string& s);

// Layer widths from input to output plus the hidden activation. The output
// layer is linear.
struct MlpSpec {
  std::vector<int> widths;  // [input, hidden..., output]
  Activation hidden_activation = Activation::Tanh;

  int input_dim() const { return widths.front(); }
  int output_dim() const { return widths.back(); }
  void validate() const;  // ValidationError: fewer than 2 widths, non-positive width
};

struct LinearLayer {
  MatX W;
  VecX b;
};

struct MlpCache {
  bool valid = false;
  MatX input;
  std::vector<MatX> pre;   // pre-activation per layer
  std::vector<MatX> post;  // post-activation per hidden layer
};

struct MlpGrads {
  std::vector<LinearLayer> layers;
  void setZero();
};

// Fully connected net over column-per-sample batches. Caches are caller
// owned, so concurrent forward passes on one parameter set are safe.
class Mlp {
 public:
  Mlp() = default;
  // Orthogonal weight init (scaled by gain, final layer by out_gain), zero biases.
  Mlp(MlpSpec spec, Rng& rng, double gain = 1.0, double out_gain = 1.0);

  const MlpSpec& spec() const { return spec_; }
  int input_dim() const { return spec_.input_dim(); }
  int output_dim() const { return spec_.output_dim(); }

  // X is input_dim x batch; returns output_dim x batch.
  MatX forward(const MatX& x, MlpCache* cache = nullptr) const;

  // d_out is output_dim x batch. Accumulates parameter gradients into
  // `grads` and returns the gradient w.r.t. the input. Throws StateError for
  // an invalid cache (backward before forward).
  MatX backward(const MlpCache& cache, const MatX& d_out, MlpGrads* grads) const;

  MlpGrads zero_grads() const;
  size_t parameter_count() const;

  std::vector<LinearLayer> layers;

 private:
  MlpSpec spec_;
};

// Orthogonal matrix scaled by gain, via QR of a Gaussian draw.
MatX orthogonal_init(int rows, int cols, double gain, Rng& rng);

}  // namespace quadmimic
