#include "tsgan/autodiff.hpp"

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "tsgan/nn.hpp"

namespace tsgan::ad {
namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  const auto n = numel(shape);
  auto v = test::random_vector(n, rng, -scale, scale);
  return Tensor(std::move(shape), std::move(v));
}

TEST(Ops, ForwardValues) {
  Graph g;
  auto a = g.leaf(Tensor({1, 2}, {1, 2}));
  auto b = g.leaf(Tensor({2, 1}, {3, 4}));
  EXPECT_EQ(matmul(a, b).value(), Tensor({1, 1}, {11}));
  EXPECT_EQ(relu(g.leaf(Tensor({3}, {-1, 0, 2}))).value().values, (std::vector<double>{0, 0, 2}));
  EXPECT_NEAR(l2_norm(g.leaf(Tensor({2}, {3, 4}))).item(), 5.0, 1e-12);
  EXPECT_EQ(leaky_relu(g.leaf(Tensor({2}, {-2, 3})), 0.2).value().values, (std::vector<double>{-0.4, 3}));
  EXPECT_EQ(mean(g.leaf(Tensor({4}, {1, 2, 3, 6}))).item(), 3.0);
  EXPECT_EQ(add(g.leaf(Tensor({2}, {1, 2})), g.scalar(10)).value().values, (std::vector<double>{11, 12}));
  const auto rows = l2_norm(g.leaf(Tensor({2, 2}, {3, 4, 0, 2})), 1).value().values;
  EXPECT_NEAR(rows[0], 5.0, 1e-12);
  EXPECT_NEAR(rows[1], 2.0, 1e-12);
  auto x = g.leaf(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(affine(x, g.leaf(Tensor({3, 1}, {1, 0, -1})), g.leaf(Tensor({1}, {0.5}))).value().values,
            (std::vector<double>{-1.5, -1.5}));
}

TEST(Ops, ShapeErrorsNameBothShapes) {
  Graph g;
  auto a = g.leaf(Tensor::zeros({2, 3}));
  auto b = g.leaf(Tensor::zeros({2, 3}));
  try {
    matmul(a, b);
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("[2,3]"), std::string::npos);
  }
  EXPECT_THROW(add(a, g.leaf(Tensor::zeros({3, 2}))), ShapeError);
  EXPECT_THROW(mul(a, g.leaf(Tensor::zeros({4}))), ShapeError);
}

TEST(Grad, SquareAndCube) {
  Graph g;
  auto x = g.scalar(3.0);
  const Var wrt[] = {x};
  EXPECT_EQ(g.grad(square(x), wrt)[0].item(), 6.0);

  Graph h;
  auto y = h.scalar(2.0);
  const Var ywrt[] = {y};
  auto cube = mul(square(y), y);
  auto first = h.grad(cube, ywrt, true)[0];
  EXPECT_DOUBLE_EQ(first.item(), 12.0);  // 3 x^2
  EXPECT_DOUBLE_EQ(h.grad(first, ywrt)[0].item(), 12.0);  // 6 x
}

TEST(Grad, SumGivesOnesAndRejectsNonScalar) {
  Graph g;
  auto x = g.leaf(Tensor::filled({3, 2}, 0.7));
  const Var wrt[] = {x};
  EXPECT_EQ(g.grad(sum(x), wrt)[0].value(), Tensor::filled({3, 2}, 1.0));
  EXPECT_THROW(g.grad(x, wrt), ParameterError);
}

TEST(Grad, DisconnectedInputGetsFlaggedZeros) {
  Graph g;
  auto x = g.leaf(Tensor({2}, {1, 2}));
  auto unused = g.leaf(Tensor({3}, {1, 2, 3}));
  const Var wrt[] = {x, unused};
  std::vector<bool> connected;
  const auto grads = g.grad(sum(square(x)), wrt, false, &connected);
  EXPECT_EQ(connected, (std::vector<bool>{true, false}));
  EXPECT_EQ(grads[1].value(), Tensor::zeros({3}));
}

TEST(Grad, FirstOrderPassLeavesNoBackwardNodes) {
  Graph g;
  auto x = g.leaf(Tensor({2}, {1, 2}));
  auto y = sum(tanh(x));
  const std::size_t before = g.size();
  const Var wrt[] = {x};
  g.grad(y, wrt);
  EXPECT_EQ(g.size(), before + 1);  // only the detached result
}

TEST(Grad, Linearity) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor xv = random_tensor({3, 4}, rng);
    const Tensor wv = random_tensor({4, 2}, rng);
    const double a = 1.7, b = -0.3;
    auto f = [&](const Var& x, const Var& w) { return sum(tanh(matmul(x, w))); };
    auto h = [&](const Var& x) { return sum(square(x)); };

    Graph g;
    auto x = g.leaf(xv);
    auto w = g.leaf(wv);
    const Var wrt[] = {x};
    const auto combined = g.grad(add(scale(f(x, w), a), scale(h(x), b)), wrt)[0].value();
    const auto gf = g.grad(f(x, w), wrt)[0].value();
    const auto gh = g.grad(h(x), wrt)[0].value();
    for (std::size_t i = 0; i < combined.size(); ++i)
      EXPECT_NEAR(combined.values[i], a * gf.values[i] + b * gh.values[i], 1e-12);
  }
}

TEST(Grad, DoubleBackwardOfSquaredNorm) {
  // f = ||x||^2, grad = 2x, d/dx_i (grad . e_i) = 2.
  std::mt19937_64 rng(4);
  const Tensor xv = random_tensor({5}, rng);
  for (std::size_t i = 0; i < 5; ++i) {
    Graph g;
    auto x = g.leaf(xv);
    const Var wrt[] = {x};
    auto gx = g.grad(sum(square(x)), wrt, true)[0];
    Tensor e = Tensor::zeros({5});
    e.values[i] = 1.0;
    auto directional = sum(mul(gx, g.leaf(e)));
    const auto hess_row = g.grad(directional, wrt)[0].value();
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(hess_row.values[j], i == j ? 2.0 : 0.0, 1e-12);
  }
  // Same Hessian row from finite differences of the first gradient.
  const double eps = 1e-5;
  auto first_grad = [&](Tensor at) {
    Graph g;
    auto x = g.leaf(std::move(at));
    const Var wrt[] = {x};
    return g.grad(sum(square(x)), wrt)[0].value();
  };
  Tensor up = xv, down = xv;
  up.values[2] += eps;
  down.values[2] -= eps;
  const auto gu = first_grad(up), gd = first_grad(down);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR((gu.values[j] - gd.values[j]) / (2 * eps), j == 2 ? 2.0 : 0.0, 1e-8);
}

TEST(Grad, SecondOrderThroughNetworkMatchesFiniteDifferences) {
  // Gradient w.r.t. W of ||d/dx sum(tanh(x W))||^2, a miniature penalty.
  std::mt19937_64 rng(99);
  const Tensor xv = random_tensor({3, 4}, rng);
  const Tensor wv = random_tensor({4, 2}, rng);
  auto penalty = [&](const Tensor& w_at, Tensor* grad_out) {
    Graph g;
    auto x = g.leaf(xv);
    auto w = g.leaf(w_at);
    const Var xwrt[] = {x};
    auto gx = g.grad(sum(tanh(matmul(x, w))), xwrt, true)[0];
    auto p = sum(square(gx));
    if (grad_out) {
      const Var wwrt[] = {w};
      *grad_out = g.grad(p, wwrt)[0].value();
    }
    return p.item();
  };
  Tensor analytic;
  penalty(wv, &analytic);
  const double eps = 1e-5;
  for (std::size_t i = 0; i < wv.size(); ++i) {
    Tensor up = wv, down = wv;
    up.values[i] += eps;
    down.values[i] -= eps;
    const double numeric = (penalty(up, nullptr) - penalty(down, nullptr)) / (2 * eps);
    EXPECT_NEAR(analytic.values[i], numeric, 1e-7 * std::max(1.0, std::abs(numeric)));
  }
}

TEST(Grad, RandomMlpParametersMatchFiniteDifferences) {
  std::mt19937_64 rng(2024);
  const NetworkConfig cfg{{5, 7, 3}, Activation::Tanh, Activation::Identity, 0.2};
  Mlp net = Mlp::init(cfg, rng);
  for (auto& p : net.params)
    for (double& v : p.values) v += 0.1 * (static_cast<double>(rng() % 1000) / 1000.0 - 0.5);
  const Tensor x = random_tensor({4, 5}, rng);

  auto loss = [&](const Mlp& m) {
    Graph g;
    return sum(square(m.forward(m.bind(g), g.leaf(x)))).item();
  };
  Graph g;
  const auto params = net.bind(g);
  const auto grads = g.grad(sum(square(net.forward(params, g.leaf(x)))), params);

  double worst = 0.0;
  const double eps = 1e-4;
  for (std::size_t k = 0; k < net.params.size(); ++k)
    for (std::size_t i = 0; i < net.params[k].size(); ++i) {
      Mlp up = net, down = net;
      up.params[k].values[i] += eps;
      down.params[k].values[i] -= eps;
      const double numeric = (loss(up) - loss(down)) / (2 * eps);
      const double a = grads[k].value().values[i];
      worst = std::max(worst, std::abs(a - numeric) / std::max(1.0, std::abs(a)));
    }
  EXPECT_LT(worst, 1e-5);
}

TEST(Grad, DeterministicAcrossRuns) {
  std::mt19937_64 rng(8);
  const Tensor xv = random_tensor({4, 6}, rng);
  const Tensor wv = random_tensor({6, 3}, rng);
  auto run = [&] {
    Graph g;
    auto w = g.leaf(wv);
    const Var wrt[] = {w};
    return g.grad(mean(tanh(matmul(g.leaf(xv), w))), wrt)[0].value();
  };
  EXPECT_EQ(run(), run());
}

TEST(FiniteDiffCheck, ReferenceFunctions) {
  const Tensor x({3}, {1, 2, 3});
  EXPECT_LT(finite_diff_check([](Graph&, const Var& v) { return sum(square(v)); }, x), 1e-8);
  EXPECT_LT(finite_diff_check([](Graph&, const Var& v) { return l2_norm(v); }, Tensor({2}, {3, 4})), 1e-6);

  std::mt19937_64 rng(17);
  const Tensor w1 = random_tensor({3, 6}, rng), w2 = random_tensor({6, 1}, rng);
  auto head = [&](Graph& g, const Var& v) {
    auto h = tanh(matmul(reshape(v, {1, 3}), g.leaf(w1)));
    return sum(matmul(h, g.leaf(w2)));
  };
  EXPECT_LT(finite_diff_check(head, x), 1e-5);
}

TEST(FiniteDiffCheck, NonFiniteValueThrows) {
  EXPECT_THROW(finite_diff_check([](Graph&, const Var& v) { return sum(sqrt(v)); }, Tensor({1}, {-1.0})),
               NumericError);
}

}  // namespace
}  // namespace tsgan::ad
