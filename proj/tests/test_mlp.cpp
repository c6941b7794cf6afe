#include "quadmimic/mlp.hpp"

#include "quadmimic/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace quadmimic {
namespace {

// Independent forward pass, scalar loops only.
MatX oracle_forward(const Mlp& net, const MatX& x) {
  MatX h = x;
  const size_t n_layers = net.layers.size();
  for (size_t l = 0; l < n_layers; ++l) {
    const LinearLayer& lay = net.layers[l];
    MatX z(lay.W.rows(), h.cols());
    for (int i = 0; i < z.rows(); ++i) {
      for (int c = 0; c < z.cols(); ++c) {
        double acc = lay.b[i];
        for (int k = 0; k < h.rows(); ++k) acc += lay.W(i, k) * h(k, c);
        z(i, c) = acc;
      }
    }
    if (l + 1 < n_layers) {
      for (int i = 0; i < z.rows(); ++i) {
        for (int c = 0; c < z.cols(); ++c) {
          switch (net.spec().hidden_activation) {
            case Activation::Tanh: z(i, c) = std::tanh(z(i, c)); break;
            case Activation::Relu: z(i, c) = std::max(0.0, z(i, c)); break;
            case Activation::Identity: break;
          }
        }
      }
    }
    h = z;
  }
  return h;
}

double loss_of(const Mlp& net, const MatX& x, const MatX& target) {
  const MatX y = net.forward(x);
  return 0.5 * (y - target).squaredNorm();
}

TEST(Activation, Strings) {
  EXPECT_STREQ(to_string(Activation::Tanh), "tanh");
  EXPECT_STREQ(to_string(Activation::Relu), "relu");
  EXPECT_STREQ(to_string(Activation::Identity), "identity");
  EXPECT_EQ(activation_from_string("relu"), Activation::Relu);
  EXPECT_THROW(activation_from_string("swish"), ParseError);
}

TEST(MlpSpec, Validate) {
  MlpSpec one;
  one.widths = {4};
  EXPECT_THROW(one.validate(), ValidationError);
  MlpSpec neg;
  neg.widths = {4, -1, 2};
  EXPECT_THROW(neg.validate(), ValidationError);
  MlpSpec ok;
  ok.widths = {4, 8, 2};
  EXPECT_NO_THROW(ok.validate());
}

TEST(OrthogonalInit, ColumnsOrthonormal) {
  Rng rng(3);
  // tall: columns orthonormal
  const MatX tall = orthogonal_init(10, 4, 1.0, rng);
  EXPECT_LT((tall.transpose() * tall - MatX::Identity(4, 4)).norm(), 1e-9);
  // wide: rows orthonormal
  const MatX wide = orthogonal_init(3, 8, 1.0, rng);
  EXPECT_LT((wide * wide.transpose() - MatX::Identity(3, 3)).norm(), 1e-9);
  // gain scales singular values
  const MatX scaled = orthogonal_init(5, 5, 0.3, rng);
  EXPECT_LT((scaled.transpose() * scaled - 0.09 * MatX::Identity(5, 5)).norm(), 1e-9);
  // deterministic per seed
  Rng r1(42), r2(42);
  EXPECT_TRUE(orthogonal_init(6, 6, 1.0, r1) == orthogonal_init(6, 6, 1.0, r2));
}

TEST(Mlp, InitShapesAndBiases) {
  Rng rng(1);
  MlpSpec spec;
  spec.widths = {7, 16, 8, 3};
  const Mlp net(spec, rng, std::sqrt(2.0), 0.01);
  ASSERT_EQ(net.layers.size(), 3u);
  EXPECT_EQ(net.layers[0].W.rows(), 16);
  EXPECT_EQ(net.layers[0].W.cols(), 7);
  EXPECT_EQ(net.layers[2].W.rows(), 3);
  EXPECT_EQ(net.layers[2].W.cols(), 8);
  for (const auto& l : net.layers) EXPECT_DOUBLE_EQ(l.b.norm(), 0.0);
  EXPECT_EQ(net.parameter_count(), size_t(16 * 7 + 16 + 8 * 16 + 8 + 3 * 8 + 3));
  // out_gain shrinks the final layer
  EXPECT_LT(net.layers[2].W.cwiseAbs().maxCoeff(), 0.011);
}

TEST(Mlp, ForwardMatchesScalarOracle) {
  for (Activation act : {Activation::Tanh, Activation::Relu, Activation::Identity}) {
    Rng rng(11);
    MlpSpec spec;
    spec.widths = {5, 9, 4};
    spec.hidden_activation = act;
    Mlp net(spec, rng);
    // nonzero biases so they are exercised
    for (auto& l : net.layers) l.b.setLinSpaced(l.b.size(), -0.3, 0.4);

    Rng xr(70);
    MatX x(5, 6);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = xr.normal();
    const MatX got = net.forward(x);
    const MatX want = oracle_forward(net, x);
    ASSERT_EQ(got.rows(), 4);
    ASSERT_EQ(got.cols(), 6);
    EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Mlp, BackwardMatchesCentralDifferences) {
  for (Activation act : {Activation::Tanh, Activation::Relu, Activation::Identity}) {
    Rng rng(29);
    MlpSpec spec;
    spec.widths = {4, 6, 5, 2};
    spec.hidden_activation = act;
    Mlp net(spec, rng);
    for (auto& l : net.layers) l.b.setLinSpaced(l.b.size(), -0.2, 0.3);

    Rng xr(31);
    MatX x(4, 3), target(2, 3);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = 0.7 * xr.normal();
    for (int i = 0; i < target.size(); ++i) target.data()[i] = xr.normal();

    MlpCache cache;
    const MatX y = net.forward(x, &cache);
    MlpGrads grads = net.zero_grads();
    const MatX dx = net.backward(cache, y - target, &grads);

    const double h = 1e-6;
    double worst = 0.0;
    for (size_t l = 0; l < net.layers.size(); ++l) {
      auto check = [&](double* p, double analytic) {
        const double keep = *p;
        *p = keep + h;
        const double up = loss_of(net, x, target);
        *p = keep - h;
        const double dn = loss_of(net, x, target);
        *p = keep;
        const double fd = (up - dn) / (2.0 * h);
        const double rel = std::abs(analytic - fd) / std::max(1.0, std::abs(fd));
        worst = std::max(worst, rel);
      };
      for (int i = 0; i < net.layers[l].W.size(); ++i) {
        check(net.layers[l].W.data() + i, grads.layers[l].W.data()[i]);
      }
      for (int i = 0; i < net.layers[l].b.size(); ++i) {
        check(net.layers[l].b.data() + i, grads.layers[l].b.data()[i]);
      }
    }
    // input gradient against FD too
    for (int i = 0; i < x.size(); ++i) {
      const double keep = x.data()[i];
      MatX xp = x, xm = x;
      xp.data()[i] = keep + h;
      xm.data()[i] = keep - h;
      const double fd = (loss_of(net, xp, target) - loss_of(net, xm, target)) / (2.0 * h);
      worst = std::max(worst, std::abs(dx.data()[i] - fd));
    }
    EXPECT_LT(worst, 1e-4) << to_string(act);
  }
}

TEST(Mlp, BackwardAccumulates) {
  Rng rng(5);
  MlpSpec spec;
  spec.widths = {3, 4, 2};
  const Mlp net(spec, rng);
  MatX x = MatX::Random(3, 2);
  MlpCache cache;
  net.forward(x, &cache);
  MlpGrads g1 = net.zero_grads();
  const MatX d = MatX::Ones(2, 2);
  net.backward(cache, d, &g1);
  MlpGrads g2 = net.zero_grads();
  net.backward(cache, d, &g2);
  net.backward(cache, d, &g2);  // second call adds on top
  EXPECT_LT((g2.layers[0].W - 2.0 * g1.layers[0].W).norm(), 1e-12);
  EXPECT_LT((g2.layers[1].b - 2.0 * g1.layers[1].b).norm(), 1e-12);
}

TEST(Mlp, BackwardWithoutForwardThrows) {
  Rng rng(5);
  MlpSpec spec;
  spec.widths = {3, 4, 2};
  const Mlp net(spec, rng);
  MlpCache cache;  // never filled
  MlpGrads grads = net.zero_grads();
  EXPECT_THROW(net.backward(cache, MatX::Zero(2, 1), &grads), StateError);
}

TEST(Mlp, InputDimMismatchThrows) {
  Rng rng(5);
  MlpSpec spec;
  spec.widths = {3, 4, 2};
  const Mlp net(spec, rng);
  EXPECT_THROW(net.forward(MatX::Zero(5, 1)), ValidationError);
}

}  // namespace
}  // namespace quadmimic
