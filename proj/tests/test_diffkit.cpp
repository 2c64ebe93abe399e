#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "mixsp/diffkit.hpp"
#include "mixsp/errors.hpp"
#include "mixsp/rng.hpp"

using namespace mixsp;
using namespace mixsp::diff;

namespace {

Tensor mat(std::size_t r, std::size_t c, std::vector<double> v, bool grad = false) {
  return Tensor({r, c}, std::move(v), grad);
}

}  // namespace

TEST(Linear, IdentityPassesInputThrough) {
  Tape t;
  Tensor W = mat(2, 2, {1, 0, 0, 1});
  Tensor b = Tensor::vector({0, 0});
  Tensor x = Tensor::vector({3, 4});
  auto out = t.linear(t.leaf(W), t.leaf(b), t.leaf(x));
  EXPECT_EQ(out.value(), (std::vector<double>{3, 4}));
}

TEST(Linear, HandMatrixVectorProduct) {
  Tape t;
  Tensor W = mat(2, 2, {1, 2, 3, 4});
  Tensor b = Tensor::vector({1, 1});
  Tensor x = Tensor::vector({1, 1});
  auto out = t.linear(t.leaf(W), t.leaf(b), t.leaf(x));
  EXPECT_EQ(out.value(), (std::vector<double>{4, 8}));
}

TEST(Linear, BackwardOfFirstOutput) {
  Tape t;
  Tensor W = mat(2, 2, {1, 0, 0, 1}, true);
  Tensor b = Tensor::vector({0, 0}, true);
  Tensor x = Tensor::vector({3, 4}, true);
  auto out = t.linear(t.leaf(W), t.leaf(b), t.leaf(x));
  t.backward(t.pick(out, 0));
  EXPECT_EQ(x.grad, (std::vector<double>{1, 0}));
  EXPECT_EQ(W.grad, (std::vector<double>{3, 4, 0, 0}));
  EXPECT_EQ(b.grad, (std::vector<double>{1, 0}));
}

TEST(Linear, ShapeMismatchThrows) {
  Tape t;
  Tensor W = mat(2, 3, {1, 2, 3, 4, 5, 6});
  Tensor b = Tensor::vector({0, 0});
  Tensor x = Tensor::vector({1, 1});
  EXPECT_THROW(t.linear(t.leaf(W), t.leaf(b), t.leaf(x)), DimensionError);
  Tensor W2 = mat(2, 2, {1, 2, 3, 4});
  Tensor b3 = Tensor::vector({0, 0, 0});
  EXPECT_THROW(t.linear(t.leaf(W2), t.leaf(b3), t.leaf(x)), DimensionError);
}

TEST(Softmax, UniformLogits) {
  Tape t;
  auto p = t.softmax(t.constant({0, 0}));
  EXPECT_DOUBLE_EQ(p.value()[0], 0.5);
  EXPECT_DOUBLE_EQ(p.value()[1], 0.5);
}

TEST(Softmax, OneZero) {
  Tape t;
  auto p = t.softmax(t.constant({1, 0}));
  const double e = std::exp(1.0);
  EXPECT_NEAR(p.value()[0], e / (1 + e), 1e-15);
  EXPECT_NEAR(p.value()[1], 1 / (1 + e), 1e-15);
  EXPECT_NEAR(p.value()[0], 0.7310585786300049, 1e-15);
}

TEST(Softmax, LargeLogitDoesNotOverflow) {
  Tape t;
  auto p = t.softmax(t.constant({1000, 0}));
  EXPECT_EQ(p.value()[0], 1.0);
  EXPECT_GE(p.value()[1], 0.0);
  EXPECT_LT(p.value()[1], 1e-300);
  EXPECT_TRUE(std::isfinite(p.value()[1]));
}

TEST(Softmax, RejectsEmpty) {
  Tape t;
  EXPECT_THROW(t.softmax(t.constant(std::vector<double>{})), DimensionError);
}

TEST(Sigmoid, ClosedForms) {
  Tape t;
  EXPECT_DOUBLE_EQ(t.sigmoid(t.constant({0.0})).scalar(), 0.5);
  EXPECT_NEAR(t.sigmoid(t.constant({std::log(3.0)})).scalar(), 0.75, 1e-15);
  const double big = t.sigmoid(t.constant({800.0})).scalar();
  EXPECT_TRUE(std::isfinite(big));
  EXPECT_NEAR(big, 1.0, 1e-15);
  const double small = t.sigmoid(t.constant({-800.0})).scalar();
  EXPECT_TRUE(std::isfinite(small));
  EXPECT_GE(small, 0.0);
}

TEST(Bce, ClosedForms) {
  Tape t;
  EXPECT_NEAR(t.bce(1.0, t.constant({1.0 - kProbEpsilon})).scalar(), 0.0, 1e-11);
  EXPECT_NEAR(t.bce(1.0, t.constant({0.5})).scalar(), std::log(2.0), 1e-15);
  EXPECT_NEAR(t.bce(0.5, t.constant({0.5})).scalar(), std::log(2.0), 1e-15);
}

TEST(Bce, ClampsExtremeProbabilities) {
  Tape t;
  const double at_zero = t.bce(1.0, t.constant({0.0})).scalar();
  EXPECT_TRUE(std::isfinite(at_zero));
  EXPECT_NEAR(at_zero, -std::log(kProbEpsilon), 1e-9);
}

TEST(Bce, TargetOutsideUnitIntervalIsDomainError) {
  Tape t;
  EXPECT_THROW(t.bce(1.5, t.constant({0.5})), DomainError);
  EXPECT_THROW(t.bce(-0.1, t.constant({0.5})), DomainError);
}

TEST(MeanPool, Examples) {
  Tape t;
  EXPECT_EQ(t.mean_pool(t.constant({1, 2}, {1, 2})).value(), (std::vector<double>{1, 2}));
  EXPECT_EQ(t.mean_pool(t.constant({2, 2}, {0, 0, 2, 4})).value(), (std::vector<double>{1, 2}));
}

TEST(MeanPool, BackwardSplitsEvenly) {
  Tape t;
  Tensor rows = mat(2, 2, {0, 0, 2, 4}, true);
  t.backward(t.sum(t.mean_pool(t.leaf(rows))));
  EXPECT_EQ(rows.grad, (std::vector<double>{0.5, 0.5, 0.5, 0.5}));
}

TEST(MeanPool, EmptyInputThrows) {
  Tape t;
  EXPECT_THROW(t.mean_pool(t.constant({0, 2}, {})), DomainError);
}

TEST(AddConcat, Examples) {
  Tape t;
  EXPECT_EQ(t.add(t.constant({1, 2}), t.constant({3, 4})).value(), (std::vector<double>{4, 6}));
  EXPECT_EQ(t.concat(t.constant({1}), t.constant({2, 3})).value(), (std::vector<double>{1, 2, 3}));
  const std::vector<double> x{0.25, -7.5};
  EXPECT_EQ(t.add(t.constant(x), t.constant({0, 0})).value(), x);
  EXPECT_THROW(t.add(t.constant({1, 2}), t.constant({1, 2, 3})), DimensionError);
}

TEST(GatherRows, PicksAndAccumulates) {
  Tape t;
  Tensor table = mat(3, 2, {1, 2, 3, 4, 5, 6}, true);
  const std::vector<std::int32_t> ids{2, 0, 2};
  auto g = t.gather_rows(t.leaf(table), ids);
  EXPECT_EQ(g.value(), (std::vector<double>{5, 6, 1, 2, 5, 6}));
  t.backward(t.sum(g));
  EXPECT_EQ(table.grad, (std::vector<double>{1, 1, 0, 0, 2, 2}));
  const std::vector<std::int32_t> bad{3};
  EXPECT_THROW(t.gather_rows(t.leaf(table), bad), DimensionError);
}

TEST(Backward, PowerRule) {
  Tape t;
  Tensor x = Tensor::vector({3}, true);
  auto v = t.leaf(x);
  t.backward(t.mul(v, v));
  EXPECT_DOUBLE_EQ(x.grad[0], 6.0);
}

TEST(Backward, BceThroughSigmoid) {
  Tape t;
  Tensor s = Tensor::vector({0}, true);
  t.backward(t.bce(1.0, t.sigmoid(t.leaf(s))));
  EXPECT_NEAR(s.grad[0], -0.5, 1e-15);
}

TEST(Backward, DisconnectedLeafGetsZero) {
  Tape t;
  Tensor x = Tensor::vector({2}, true);
  Tensor y = Tensor::vector({5}, true);
  auto vx = t.leaf(x);
  t.leaf(y);
  t.backward(t.mul(vx, vx));
  ASSERT_EQ(y.grad.size(), 1u);
  EXPECT_EQ(y.grad[0], 0.0);
}

TEST(Backward, SharedLeafAccumulates) {
  Tape t;
  Tensor x = Tensor::vector({2}, true);
  auto a = t.leaf(x);
  auto b = t.leaf(x);
  EXPECT_EQ(a.id(), b.id());
  t.backward(t.add(t.mul(a, b), a));
  EXPECT_DOUBLE_EQ(x.grad[0], 5.0);
}

TEST(Backward, NonScalarLossThrows) {
  Tape t;
  Tensor x = Tensor::vector({1, 2}, true);
  EXPECT_THROW(t.backward(t.leaf(x)), Error);
}

TEST(Backward, TopologicalOrder) {
  Tape t;
  Tensor W = mat(2, 2, {1, 2, 3, 4}, true);
  Tensor b = Tensor::vector({0, 1}, true);
  auto h = t.tanh(t.linear(t.leaf(W), t.leaf(b), t.constant({0.1, 0.2})));
  t.sum(t.softmax(h));
  for (std::size_t id = 0; id < t.size(); ++id) {
    const auto& n = t.node(id);
    for (std::uint8_t k = 0; k < n.n_in; ++k) EXPECT_LT(n.in[k], id);
  }
}

TEST(Cosine, ValuesAndZeroNorm) {
  Tape t;
  EXPECT_NEAR(t.cosine(t.constant({1, 0}), t.constant({2, 0})).scalar(), 1.0, 1e-15);
  EXPECT_NEAR(t.cosine(t.constant({1, 0}), t.constant({0, 3})).scalar(), 0.0, 1e-15);
  EXPECT_NEAR(t.cosine(t.constant({1, 1}), t.constant({-1, -1})).scalar(), -1.0, 1e-15);
  EXPECT_THROW(t.cosine(t.constant({0, 0}), t.constant({1, 0})), DomainError);
}

TEST(GradCheck, QuadraticIsExact) {
  const std::vector<double> point{0.3, -1.2, 2.5};
  const double err = grad_check([](Tape& t, Var x) { return t.sum(t.mul(x, x)); }, point);
  EXPECT_LT(err, 1e-6);
}

TEST(GradCheck, EveryOpAgainstFiniteDifferences) {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> point(6);
    for (auto& v : point) v = rng.uniform(-1.0, 1.0);
    auto f = [](Tape& t, Var x) {
      Tensor Wt = Tensor({3, 6}, {0.1, -0.2, 0.3, 0.05, 0.4, -0.1, 0.2, 0.2, -0.3, 0.1, 0.0, 0.5,
                                  -0.4, 0.1, 0.2, 0.3, -0.2, 0.1});
      auto W = t.constant(Wt.shape, Wt.values);
      auto b = t.constant({0.1, -0.1, 0.05});
      auto h = t.tanh(t.linear(W, b, x));
      auto p = t.softmax(h);
      auto s = t.sigmoid(t.pick(h, 1));
      auto z = t.scale(h, t.pick(p, 0));
      auto c = t.cosine(z, t.add_constant(h, 0.3));
      auto loss = t.add(t.bce(0.7, s), t.nll(p, 2));
      loss = t.add(loss, t.scale(c, 0.5));
      auto pooled = t.mean_pool(t.constant({2, 3}, {0.2, 0.1, -0.3, 0.4, 0.0, 0.1}));
      return t.add(loss, t.sum(t.mul(t.concat(pooled, h), t.concat(h, pooled))));
    };
    EXPECT_LT(grad_check(f, point), 1e-6) << "trial " << trial;
  }
}

TEST(AdamW, ZeroGradientNoDecayLeavesParams) {
  Tensor p = Tensor::vector({1.0, -2.0}, true);
  p.grad = {0.0, 0.0};
  OptimizerState st(AdamWConfig{0.1, 0.9, 0.999, 1e-8, 0.0});
  Tensor* ps[] = {&p};
  adamw_step(ps, st);
  EXPECT_EQ(p.values, (std::vector<double>{1.0, -2.0}));
  EXPECT_EQ(st.t, 1);
}

TEST(AdamW, OneStepWithBiasCorrection) {
  Tensor p = Tensor::vector({1.0}, true);
  p.grad = {1.0};
  OptimizerState st(AdamWConfig{0.1, 0.9, 0.999, 1e-8, 0.0});
  Tensor* ps[] = {&p};
  adamw_step(ps, st);
  // m̂ = v̂ = 1, so the step is lr·1/(1 + eps).
  EXPECT_NEAR(p.values[0], 1.0 - 0.1 / (1.0 + 1e-8), 1e-15);
  EXPECT_NEAR(p.values[0], 0.9, 1e-8);
}

TEST(AdamW, DecoupledDecayOnly) {
  Tensor p = Tensor::vector({1.0}, true);
  p.grad = {0.0};
  OptimizerState st(AdamWConfig{0.1, 0.9, 0.999, 1e-8, 0.1});
  Tensor* ps[] = {&p};
  adamw_step(ps, st);
  EXPECT_NEAR(p.values[0], 0.99, 1e-15);
}

TEST(AdamW, NonFiniteGradientRejectsWholeStep) {
  Tensor a = Tensor::vector({1.0}, true);
  Tensor b = Tensor::vector({2.0}, true);
  a.grad = {0.5};
  b.grad = {std::numeric_limits<double>::infinity()};
  OptimizerState st(AdamWConfig{0.1, 0.9, 0.999, 1e-8, 0.0});
  Tensor* ps[] = {&a, &b};
  EXPECT_THROW(adamw_step(ps, st), NumericError);
  EXPECT_EQ(a.values[0], 1.0);
  EXPECT_EQ(b.values[0], 2.0);
  EXPECT_EQ(st.t, 0);
}

TEST(AdamW, MismatchedGradientThrows) {
  Tensor a = Tensor::vector({1.0, 2.0}, true);
  a.grad = {0.5};
  OptimizerState st;
  Tensor* ps[] = {&a};
  EXPECT_THROW(adamw_step(ps, st), DimensionError);
}

TEST(TensorContract, SizeMustMatchShape) {
  EXPECT_THROW(Tensor({2, 2}, {1, 2, 3}), DimensionError);
  EXPECT_EQ(shape_size({3, 4}), 12u);
  EXPECT_EQ(shape_str({3, 4}), "[3x4]");
}
