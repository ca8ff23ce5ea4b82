#include <gtest/gtest.h>

#include <cmath>

#include "frg/error.hpp"
#include "frg/neural.hpp"
#include "frg/rng.hpp"
#include "frg/serialize.hpp"

namespace frg::nn {
void PrintTo(Activation a, std::ostream* os) { *os << to_string(a); }
}  // namespace frg::nn

namespace {

using namespace frg;
using nn::Activation;
using nn::Mlp;
using nn::MlpConfig;

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

Mlp pinned(MlpConfig cfg, std::vector<Matrix> values) {
  std::vector<nn::ParamTensor> ps;
  for (std::size_t i = 0; i < values.size(); ++i) {
    ps.emplace_back((i % 2 ? "b" : "W") + std::to_string(i / 2), values[i]);
  }
  return Mlp(std::move(cfg), std::move(ps));
}

TEST(MlpForward, IdentityNetworkPassesInputThrough) {
  const Matrix eye = Matrix::Identity(3, 3);
  const Mlp net = pinned({{3, 3}, {Activation::identity}, 1.0, 0}, {eye, Matrix::Zero(1, 3)});
  const Matrix x = random_matrix(5, 3, 1);
  EXPECT_EQ(net.forward(x), x);
}

TEST(MlpForward, ZeroSigmoidUnitIsOneHalf) {
  const Mlp net = pinned({{4, 1}, {Activation::sigmoid}, 1.0, 0}, {Matrix::Zero(4, 1), Matrix::Zero(1, 1)});
  const Matrix y = net.forward(random_matrix(3, 4, 2));
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_EQ(y(i, 0), 0.5);
}

TEST(MlpForward, PinnedTwoTwoOneNet) {
  Matrix w0(2, 2);
  w0 << 1.0, -1.0, 0.5, 2.0;
  Matrix b0(1, 2);
  b0 << 0.1, -0.2;
  Matrix w1(2, 1);
  w1 << 1.0, -2.0;
  Matrix b1(1, 1);
  b1 << 0.3;
  const Mlp net = pinned({{2, 2, 1}, {Activation::tanh, Activation::identity}, 1.0, 0}, {w0, b0, w1, b1});
  Matrix x(1, 2);
  x << 1.0, 2.0;
  EXPECT_NEAR(net.forward(x)(0, 0), -0.7148111037888021, 1e-14);
}

TEST(MlpForward, ShapeMismatchThrows) {
  const Mlp net({{3, 2}, {Activation::relu}, 1.0, 0});
  EXPECT_THROW(net.forward(Matrix::Zero(2, 4)), DomainError);
}

TEST(MlpConfig, ValidatesActivationCount) {
  EXPECT_THROW(Mlp({{3, 2, 1}, {Activation::relu}, 1.0, 0}), ConfigError);
  EXPECT_THROW(Mlp({{3}, {}, 1.0, 0}), ConfigError);
}

TEST(MlpInit, DeterministicAndBounded) {
  const MlpConfig cfg{{16, 8, 4}, {Activation::tanh, Activation::identity}, 1.0, 99};
  const Mlp a(cfg), b(cfg);
  for (std::size_t i = 0; i < a.params().size(); ++i) EXPECT_EQ(a.params()[i].values, b.params()[i].values);
  EXPECT_LE(a.weight(0).cwiseAbs().maxCoeff(), 1.0 / std::sqrt(16.0));
  EXPECT_EQ(a.bias(0).cwiseAbs().maxCoeff(), 0.0);
}

TEST(MlpBackward, ZeroUpstreamGivesZeroGradients) {
  Mlp net({{5, 7, 3}, {Activation::tanh, Activation::sigmoid}, 1.0, 3});
  Mlp::Cache cache;
  net.forward(random_matrix(4, 5, 4), cache);
  const Matrix gx = net.backward(cache, Matrix::Zero(4, 3));
  EXPECT_EQ(gx.cwiseAbs().maxCoeff(), 0.0);
  for (const auto& p : net.params()) EXPECT_EQ(p.grad.cwiseAbs().maxCoeff(), 0.0);
}

TEST(MlpBackward, LinearLeastSquaresGradient) {
  Mlp net({{4, 2}, {Activation::identity}, 1.0, 5});
  const Matrix x = random_matrix(9, 4, 6);
  const Matrix y = random_matrix(9, 2, 7);
  Mlp::Cache cache;
  const Matrix out = net.forward(x, cache);
  const Matrix resid = out - y;
  net.zero_grad();
  net.backward(cache, resid / 9.0);
  const Matrix expected_w = x.transpose() * resid / 9.0;
  const Matrix expected_b = resid.colwise().sum() / 9.0;
  EXPECT_LT((net.params()[0].grad - expected_w).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LT((net.params()[1].grad - expected_b).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(MlpBackward, StaleCacheRejected) {
  Mlp net({{3, 2}, {Activation::relu}, 1.0, 0});
  Mlp::Cache cache;
  net.forward(random_matrix(2, 3, 1), cache);
  net.mutable_params()[0].values(0, 0) += 1.0;
  EXPECT_THROW(net.backward(cache, Matrix::Ones(2, 2)), Error);
}

class MlpGradient : public ::testing::TestWithParam<Activation> {};

TEST_P(MlpGradient, FiniteDifferenceAgreementOverSeeds) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Mlp net({{6, 5, 4, 3}, {GetParam(), GetParam(), Activation::identity}, 1.0, seed});
    // Nonzero biases keep relu pre-activations away from the kink at exactly 0.
    Rng brng(300 + seed);
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      for (auto& b : net.mutable_params()[2 * l + 1].values.reshaped()) b = 0.1 * brng.normal();
    }
    const Matrix x = random_matrix(7, 6, 100 + seed);
    const Matrix target = random_matrix(7, 3, 200 + seed);
    auto loss = [&] { return 0.5 * (net.forward(x) - target).squaredNorm() / 7.0; };
    auto grads = [&] {
      net.zero_grad();
      Mlp::Cache cache;
      const Matrix out = net.forward(x, cache);
      net.backward(cache, (out - target) / 7.0);
    };
    auto ptrs = net.parameter_ptrs();
    const auto report = nn::grad_check(loss, grads, ptrs, 1e-4);
    EXPECT_TRUE(report.passed) << nn::to_string(GetParam()) << " seed " << seed << " rel "
                               << report.max_rel_error << " at " << report.worst_param;
  }
}

INSTANTIATE_TEST_SUITE_P(Activations, MlpGradient,
                         ::testing::Values(Activation::relu, Activation::tanh, Activation::sigmoid,
                                           Activation::identity),
                         [](const auto& info) { return nn::to_string(info.param); });

TEST(GradCheck, LinearLossIsExact) {
  nn::ParamTensor w("w", random_matrix(3, 2, 8));
  const Matrix c = random_matrix(3, 2, 9);
  std::vector<nn::ParamTensor*> ps{&w};
  auto loss = [&] { return (w.values.array() * c.array()).sum(); };
  auto grads = [&] { w.grad = c; };
  const auto r = nn::grad_check(loss, grads, ps, 1e-8);
  EXPECT_TRUE(r.passed);
  EXPECT_LT(r.max_rel_error, 1e-8);
  EXPECT_EQ(r.coordinates, 6u);
}

TEST(GradCheck, DetectsCorruptedGradient) {
  nn::ParamTensor w("w", random_matrix(3, 2, 8));
  std::vector<nn::ParamTensor*> ps{&w};
  auto loss = [&] { return 0.5 * w.values.squaredNorm(); };
  auto grads = [&] {
    w.grad = w.values;
    w.grad(1, 1) *= 1.01;
  };
  const auto r = nn::grad_check(loss, grads, ps, 1e-4);
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.worst_row, 1);
  EXPECT_EQ(r.worst_col, 1);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  nn::ParamTensor w("w", random_matrix(2, 2, 1));
  const Matrix before = w.values;
  nn::Adam opt({1e-2});
  std::vector<nn::ParamTensor*> ps{&w};
  for (int i = 0; i < 10; ++i) opt.step(ps);
  EXPECT_EQ(w.values, before);
}

TEST(Adam, ConstantGradientDescends) {
  nn::ParamTensor w("w", Matrix::Zero(1, 2));
  nn::Adam opt({1e-2});
  std::vector<nn::ParamTensor*> ps{&w};
  for (int i = 0; i < 100; ++i) {
    w.grad << 3.0, -0.5;
    opt.step(ps);
  }
  EXPECT_LT(w.values(0, 0), 0.0);
  EXPECT_GT(w.values(0, 1), 0.0);
}

TEST(Adam, QuadraticBowlConverges) {
  nn::ParamTensor w("w", random_matrix(1, 5, 3) * 2.0);
  nn::Adam opt({1e-2});
  std::vector<nn::ParamTensor*> ps{&w};
  for (int i = 0; i < 5000; ++i) {
    w.grad = w.values;
    opt.step(ps);
  }
  EXPECT_LT(w.values.norm(), 1e-3);
}

TEST(Adam, NonFiniteGradientAborts) {
  nn::ParamTensor w("w", Matrix::Ones(1, 2));
  nn::Adam opt({1e-2});
  std::vector<nn::ParamTensor*> ps{&w};
  w.grad(0, 1) = std::nan("");
  EXPECT_THROW(opt.step(ps), NonFiniteError);
  EXPECT_EQ(w.values, Matrix::Ones(1, 2));
}

TEST(Adam, StepSizeFloor) {
  EXPECT_THROW(nn::Adam({1e-7}), ConfigError);
  EXPECT_NO_THROW(nn::Adam({1e-6}));
}

TEST(Serialize, RoundTripIsBitExact) {
  const Mlp net({{5, 4, 2}, {Activation::relu, Activation::identity}, 1.0, 17});
  const auto bytes = nn::save_tensors(net.params());
  const auto back = nn::load_tensors(bytes);
  ASSERT_EQ(back.size(), net.params().size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].name, net.params()[i].name);
    EXPECT_EQ(back[i].values, net.params()[i].values);
  }
}

TEST(Serialize, CorruptionDetected) {
  const Mlp net({{3, 2}, {Activation::relu}, 1.0, 1});
  auto bytes = nn::save_tensors(net.params());
  bytes[bytes.size() / 2] ^= 0x01;
  EXPECT_THROW(nn::load_tensors(bytes), FormatError);
  auto truncated = nn::save_tensors(net.params());
  truncated.resize(truncated.size() - 3);
  EXPECT_THROW(nn::load_tensors(truncated), FormatError);
}

TEST(Serialize, JsonDumpHasShapes) {
  const Mlp net({{3, 2}, {Activation::relu}, 1.0, 1});
  const auto j = nn::tensors_to_json(net.params());
  ASSERT_EQ(j.size(), 2u);
  EXPECT_EQ(j[0]["shape"], nlohmann::json::array({3, 2}));
  EXPECT_EQ(j[1]["shape"], nlohmann::json::array({1, 2}));
  const auto cfg = nn::mlp_config_from_json(nn::mlp_config_to_json(net.config()));
  EXPECT_EQ(cfg.layer_sizes, net.config().layer_sizes);
  EXPECT_EQ(cfg.activations, net.config().activations);
}

}  // namespace
