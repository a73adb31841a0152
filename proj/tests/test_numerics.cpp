#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ebgame/numerics.hpp"
#include "gradcheck.hpp"

namespace ebgame {
namespace {

using testing::check_gradients;
using testing::random_projection;
using testing::random_tensor;

constexpr double kGradTol = 1e-4;

TEST(Tensor, RejectsMismatchedData) {
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
  EXPECT_THROW(Tensor({0, 2}), ShapeError);
  Tensor t({2, 3});
  t.set_requires_grad(true);
  EXPECT_EQ(t.grad().size(), t.size());
}

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  Graph g;
  const Tensor a = Tensor::matrix(2, 2, {3.5, -1, 2, 7});
  const Var out = ops::matmul(g.constant(Tensor::matrix(2, 2, {1, 0, 0, 1})), g.constant(a));
  EXPECT_EQ(out.value(), a);
}

TEST(Matmul, HandArithmetic) {
  Graph g;
  const Var out = ops::matmul(g.constant(Tensor::matrix(2, 2, {1, 2, 3, 4})),
                              g.constant(Tensor::matrix(2, 1, {5, 6})));
  EXPECT_EQ(out.shape(), (Shape{2, 1}));
  EXPECT_DOUBLE_EQ(out.value()[0], 17.0);
  EXPECT_DOUBLE_EQ(out.value()[1], 39.0);
}

TEST(Matmul, ZeroAnnihilates) {
  Graph g;
  const Var out = ops::matmul(g.constant(Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6})),
                              g.constant(Tensor({3, 2}, 0.0)));
  for (double v : out.value().data()) EXPECT_EQ(v, 0.0);
}

TEST(Matmul, InnerDimensionMismatchThrows) {
  Graph g;
  EXPECT_THROW(ops::matmul(g.constant(Tensor({2, 3})), g.constant(Tensor({2, 3}))), ShapeError);
}

TEST(Matmul, AssociativeOnRandomTriples) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Graph g;
    const Var a = g.constant(random_tensor({3, 4}, rng));
    const Var b = g.constant(random_tensor({4, 5}, rng));
    const Var c = g.constant(random_tensor({5, 2}, rng));
    const Tensor left = ops::matmul(ops::matmul(a, b), c).value();
    const Tensor right = ops::matmul(a, ops::matmul(b, c)).value();
    for (std::size_t i = 0; i < left.size(); ++i) {
      EXPECT_LE(std::abs(left[i] - right[i]), 1e-9 * std::max(1.0, std::abs(left[i])));
    }
  }
}

TEST(Softmax, UniformOnEqualInputs) {
  Graph g;
  const Var out = ops::softmax(g.constant(Tensor({3}, 0.0)), 0);
  for (double v : out.value().data()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(Softmax, ClosedFormLn2) {
  Graph g;
  const Var out = ops::softmax(g.constant(Tensor({2}, {0.0, std::numbers::ln2})), 0);
  EXPECT_NEAR(out.value()[0], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(out.value()[1], 2.0 / 3.0, 1e-15);
}

TEST(Softmax, ShiftInvariantAndNormalized) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Graph g;
    const Tensor x = random_tensor({4, 7}, rng, -20, 20);
    Tensor shifted = x;
    for (auto& v : shifted.data()) v += 123.25;
    for (std::size_t axis : {0u, 1u}) {
      const Tensor a = ops::softmax(g.constant(x), axis).value();
      const Tensor b = ops::softmax(g.constant(shifted), axis).value();
      for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_GT(a[i], 0.0);
        EXPECT_NEAR(a[i], b[i], 1e-12);
      }
    }
    const Tensor rows = ops::softmax(g.constant(x), 1).value();
    for (std::size_t r = 0; r < 4; ++r) {
      double s = 0.0;
      std::size_t arg_a = 0, arg_x = 0;
      for (std::size_t c = 0; c < 7; ++c) {
        s += rows.at(r, c);
        if (rows.at(r, c) > rows.at(r, arg_a)) arg_a = c;
        if (x.at(r, c) > x.at(r, arg_x)) arg_x = c;
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
      EXPECT_EQ(arg_a, arg_x);
    }
  }
}

TEST(Softmax, InvalidAxisThrows) {
  Graph g;
  EXPECT_THROW(ops::softmax(g.constant(Tensor({2, 2})), 2), ShapeError);
}

TEST(LayerNorm, ConstantRowMapsToZero) {
  Graph g;
  const Var out = ops::layer_norm(g.constant(Tensor({1, 4}, 3.0)), g.constant(Tensor({4}, 1.0)),
                                  g.constant(Tensor({4}, 0.0)));
  for (double v : out.value().data()) EXPECT_EQ(v, 0.0);
}

TEST(LayerNorm, AlreadyNormalizedRow) {
  Graph g;
  const Var out = ops::layer_norm(g.constant(Tensor({1, 2}, {1.0, -1.0})),
                                  g.constant(Tensor({2}, 1.0)), g.constant(Tensor({2}, 0.0)), 1e-14);
  EXPECT_NEAR(out.value()[0], 1.0, 1e-12);
  EXPECT_NEAR(out.value()[1], -1.0, 1e-12);
}

TEST(LayerNorm, RowsHaveZeroMean) {
  std::mt19937_64 rng(5);
  Graph g;
  const Var out = ops::layer_norm(g.constant(random_tensor({6, 9}, rng, -5, 5)),
                                  g.constant(Tensor({9}, 1.0)), g.constant(Tensor({9}, 0.0)));
  for (std::size_t r = 0; r < 6; ++r) {
    double m = 0.0;
    for (std::size_t c = 0; c < 9; ++c) m += out.value().at(r, c);
    EXPECT_NEAR(m / 9.0, 0.0, 1e-10);
  }
}

TEST(LayerNorm, GainShapeMismatchThrows) {
  Graph g;
  EXPECT_THROW(ops::layer_norm(g.constant(Tensor({2, 3})), g.constant(Tensor({2}, 1.0)),
                               g.constant(Tensor({3}, 0.0))),
               ShapeError);
}

TEST(Gelu, AsymptotesAndOrigin) {
  EXPECT_EQ(ops::gelu_value(0.0), 0.0);
  EXPECT_NEAR(ops::gelu_value(10.0), 10.0, 1e-6);
  EXPECT_NEAR(ops::gelu_value(-10.0), 0.0, 1e-6);
}

TEST(Attention, SingletonSequenceReturnsProjectedValue) {
  std::mt19937_64 rng(8);
  nn::Attention attn{nn::make_linear(4, 4, rng, 0.5), nn::make_linear(4, 4, rng, 0.5),
                     nn::make_linear(4, 4, rng, 0.5), nn::make_linear(4, 4, rng, 0.5)};
  Graph g;
  const Var x = g.constant(random_tensor({1, 4}, rng));
  const Var out = nn::multi_head_attention(g, std::as_const(attn), x, x, x, 2);
  // With one key the softmax weight is exactly 1: out = (x Wv + bv) Wo + bo.
  const Var expected = nn::linear(g, std::as_const(attn.out), nn::linear(g, std::as_const(attn.value), x));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(out.value()[i], expected.value()[i], 1e-14);
}

TEST(Attention, IdenticalKeysGiveUniformWeights) {
  std::mt19937_64 rng(9);
  nn::Attention attn{nn::make_linear(4, 4, rng, 0.5), nn::make_linear(4, 4, rng, 0.5),
                     nn::make_linear(4, 4, rng, 0.5), nn::make_linear(4, 4, rng, 0.5)};
  Graph g;
  const Var q = g.constant(random_tensor({3, 4}, rng));
  const Tensor key_row = random_tensor({1, 4}, rng);
  const Var k = ops::repeat_row(g.constant(key_row), 5);
  const Var v = g.constant(random_tensor({5, 4}, rng));
  const Var out = nn::multi_head_attention(g, std::as_const(attn), q, k, v, 2);
  EXPECT_EQ(out.shape(), q.shape());
  // Uniform weights mean every query row gets the mean projected value.
  Tensor vmean({1, 4}, 0.0);
  const Tensor& vv = v.value();
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 4; ++c) vmean[c] += vv.at(r, c) / 5.0;
  const Var expected =
      nn::linear(g, std::as_const(attn.out), nn::linear(g, std::as_const(attn.value), g.constant(vmean)));
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(out.value().at(r, c), expected.value()[c], 1e-13);
}

TEST(Attention, IndivisibleHeadsIsConfigError) {
  std::mt19937_64 rng(1);
  nn::Attention attn{nn::make_linear(6, 6, rng), nn::make_linear(6, 6, rng),
                     nn::make_linear(6, 6, rng), nn::make_linear(6, 6, rng)};
  Graph g;
  const Var x = g.constant(Tensor({2, 6}, 0.1));
  EXPECT_THROW(nn::multi_head_attention(g, std::as_const(attn), x, x, x, 4), ConfigError);
}

TEST(Backward, SumOfSquares) {
  Tensor x({3}, {1.0, 2.0, 3.0});
  x.set_requires_grad(true);
  Graph g;
  g.backward(ops::sum(ops::square(g.parameter(x))));
  EXPECT_EQ(x.grad()[0], 2.0);
  EXPECT_EQ(x.grad()[1], 4.0);
  EXPECT_EQ(x.grad()[2], 6.0);
}

TEST(Backward, UnusedParameterHasZeroGrad) {
  Tensor x({2}, 1.5), p({2}, 4.0);
  x.set_requires_grad(true);
  p.set_requires_grad(true);
  Graph g;
  g.parameter(p);
  g.backward(ops::sum(g.parameter(x)));
  EXPECT_EQ(p.grad()[0], 0.0);
  EXPECT_EQ(p.grad()[1], 0.0);
}

TEST(Backward, FanOutAccumulates) {
  Tensor x({1}, 3.0);
  x.set_requires_grad(true);
  Graph g;
  const Var v = g.parameter(x);
  // d/dx (x*x + 2x) = 2x + 2 = 8
  g.backward(ops::add(ops::mul(v, v), ops::scale(v, 2.0)));
  EXPECT_DOUBLE_EQ(x.grad()[0], 8.0);
}

TEST(Backward, NonScalarLossIsContractError) {
  Tensor x({2}, 1.0);
  x.set_requires_grad(true);
  Graph g;
  EXPECT_THROW(g.backward(g.parameter(x)), ContractError);
}

TEST(GradCheck, ThreeLayerMlp) {
  std::mt19937_64 rng(2024);
  Tensor input = random_tensor({4, 5}, rng);
  nn::Linear l1 = nn::make_linear(5, 6, rng, 0.5), l2 = nn::make_linear(6, 6, rng, 0.5),
             l3 = nn::make_linear(6, 3, rng, 0.5);
  for (auto* l : {&l1, &l2, &l3}) l->bias = random_tensor(l->bias.shape(), rng, -0.2, 0.2);
  const Tensor w = random_tensor({4, 3}, rng);
  auto loss = [&](Graph& g) {
    Var h = ops::gelu(nn::linear(g, l1, g.constant(input)));
    h = ops::gelu(nn::linear(g, l2, h));
    return random_projection(g, nn::linear(g, l3, h), w);
  };
  const auto r = check_gradients({&l1.weight, &l1.bias, &l2.weight, &l2.bias, &l3.weight, &l3.bias}, loss);
  EXPECT_LT(r.max_rel_error, kGradTol);
  EXPECT_EQ(r.checked, 30u + 6 + 36 + 6 + 18 + 3);
}

// One finite-difference check per differentiable op.
class OpGradient : public ::testing::Test {
 protected:
  std::mt19937_64 rng{77};
};

TEST_F(OpGradient, Elementwise) {
  Tensor a = random_tensor({3, 4}, rng), b = random_tensor({3, 4}, rng);
  // Keep abs/log away from their kinks.
  for (auto& v : b.data()) v = (v >= 0 ? 0.2 : -0.2) + v;
  Tensor p = random_tensor({3, 4}, rng, 0.1, 0.9);
  const Tensor w = random_tensor({3, 4}, rng);
  const auto check = [&](auto build, std::vector<Tensor*> params) {
    const auto r = check_gradients(params, [&](Graph& g) { return random_projection(g, build(g), w); });
    EXPECT_LT(r.max_rel_error, kGradTol);
  };
  check([&](Graph& g) { return ops::add(g.parameter(a), g.parameter(b)); }, {&a, &b});
  check([&](Graph& g) { return ops::sub(g.parameter(a), g.parameter(b)); }, {&a, &b});
  check([&](Graph& g) { return ops::mul(g.parameter(a), g.parameter(b)); }, {&a, &b});
  check([&](Graph& g) { return ops::affine(g.parameter(a), -1.7, 0.3); }, {&a});
  check([&](Graph& g) { return ops::square(g.parameter(a)); }, {&a});
  check([&](Graph& g) { return ops::abs(g.parameter(b)); }, {&b});
  check([&](Graph& g) { return ops::sigmoid(g.parameter(a)); }, {&a});
  check([&](Graph& g) { return ops::gelu(g.parameter(a)); }, {&a});
  check([&](Graph& g) { return ops::log_clamped(g.parameter(p), 1e-7, 1.0 - 1e-7); }, {&p});
}

TEST(Detach, BlocksGradient) {
  Tensor x({2}, 1.5);
  x.set_requires_grad(true);
  Graph g;
  const Var v = g.parameter(x);
  g.backward(ops::sum(ops::add(ops::detach(ops::square(v)), v)));
  EXPECT_EQ(x.grad()[0], 1.0);
  EXPECT_EQ(x.grad()[1], 1.0);
}

TEST_F(OpGradient, Reductions) {
  Tensor a = random_tensor({3, 4}, rng);
  const auto r1 = check_gradients({&a}, [&](Graph& g) { return ops::sum(ops::square(g.parameter(a))); });
  EXPECT_LT(r1.max_rel_error, kGradTol);
  const auto r2 = check_gradients({&a}, [&](Graph& g) { return ops::mean(ops::gelu(g.parameter(a))); });
  EXPECT_LT(r2.max_rel_error, kGradTol);
  Tensor s1 = Tensor::scalar(0.7), s2 = Tensor::scalar(-1.3);
  const std::vector<double> weights{0.25, 3.0};
  const auto r3 = check_gradients({&s1, &s2}, [&](Graph& g) {
    const std::vector<Var> terms{ops::square(g.parameter(s1)), ops::mul(g.parameter(s1), g.parameter(s2))};
    return ops::weighted_sum(terms, weights);
  });
  EXPECT_LT(r3.max_rel_error, kGradTol);
}

TEST_F(OpGradient, MatrixOps) {
  Tensor a = random_tensor({3, 4}, rng), b = random_tensor({4, 5}, rng), bias = random_tensor({5}, rng);
  const Tensor w35 = random_tensor({3, 5}, rng), w43 = random_tensor({4, 3}, rng);
  auto r = check_gradients({&a, &b}, [&](Graph& g) {
    return random_projection(g, ops::matmul(g.parameter(a), g.parameter(b)), w35);
  });
  EXPECT_LT(r.max_rel_error, kGradTol);
  r = check_gradients({&a}, [&](Graph& g) { return random_projection(g, ops::transpose(g.parameter(a)), w43); });
  EXPECT_LT(r.max_rel_error, kGradTol);
  r = check_gradients({&a, &b, &bias}, [&](Graph& g) {
    return random_projection(g, ops::add_bias(ops::matmul(g.parameter(a), g.parameter(b)), g.parameter(bias)), w35);
  });
  EXPECT_LT(r.max_rel_error, kGradTol);
}

TEST_F(OpGradient, SoftmaxBothAxes) {
  Tensor a = random_tensor({3, 4}, rng, -2, 2);
  const Tensor w = random_tensor({3, 4}, rng);
  for (std::size_t axis : {0u, 1u}) {
    const auto r = check_gradients({&a}, [&](Graph& g) { return random_projection(g, ops::softmax(g.parameter(a), axis), w); });
    EXPECT_LT(r.max_rel_error, kGradTol) << "axis " << axis;
  }
}

TEST_F(OpGradient, LayerNorm) {
  Tensor x = random_tensor({3, 5}, rng, -2, 2), gain = random_tensor({5}, rng, 0.5, 1.5),
         bias = random_tensor({5}, rng);
  const Tensor w = random_tensor({3, 5}, rng);
  const auto r = check_gradients({&x, &gain, &bias}, [&](Graph& g) {
    return random_projection(g, ops::layer_norm(g.parameter(x), g.parameter(gain), g.parameter(bias)), w);
  });
  EXPECT_LT(r.max_rel_error, kGradTol);
}

TEST_F(OpGradient, RowAndColumnPlumbing) {
  Tensor a = random_tensor({4, 3}, rng), b = random_tensor({2, 3}, rng), row = random_tensor({3}, rng);
  const Tensor w_gather = random_tensor({5, 3}, rng), w_merge = random_tensor({6, 3}, rng),
               w_rep = random_tensor({4, 3}, rng), w_slice = random_tensor({4, 2}, rng),
               w_cat = random_tensor({4, 5}, rng);
  auto r = check_gradients({&a}, [&](Graph& g) {
    return random_projection(g, ops::gather_rows(g.parameter(a), {3, 0, 0, 2, 1}), w_gather);
  });
  EXPECT_LT(r.max_rel_error, kGradTol);
  r = check_gradients({&a, &b}, [&](Graph& g) {
    return random_projection(g, ops::merge_rows(6, g.parameter(a), {0, 2, 3, 5}, g.parameter(b), {1, 4}), w_merge);
  });
  EXPECT_LT(r.max_rel_error, kGradTol);
  r = check_gradients({&row}, [&](Graph& g) { return random_projection(g, ops::repeat_row(g.parameter(row), 4), w_rep); });
  EXPECT_LT(r.max_rel_error, kGradTol);
  r = check_gradients({&a}, [&](Graph& g) { return random_projection(g, ops::slice_cols(g.parameter(a), 1, 3), w_slice); });
  EXPECT_LT(r.max_rel_error, kGradTol);
  r = check_gradients({&a}, [&](Graph& g) {
    const Var v = g.parameter(a);
    return random_projection(g, ops::concat_cols({v, ops::slice_cols(v, 0, 2)}), w_cat);
  });
  EXPECT_LT(r.max_rel_error, kGradTol);
}

TEST_F(OpGradient, MultiHeadAttentionAndBlock) {
  auto block = nn::make_block(4, 8, rng);
  // Larger weights than the default init so the check exercises non-trivial attention.
  nn::visit(block, "b", [&](const std::string&, Tensor& t) { t = random_tensor(t.shape(), rng, -0.6, 0.6); });
  Tensor x = random_tensor({3, 4}, rng);
  const Tensor w = random_tensor({3, 4}, rng);
  std::vector<Tensor*> params{&x};
  nn::visit(block, "b", [&](const std::string&, Tensor& t) { params.push_back(&t); });
  auto r = check_gradients(params, [&](Graph& g) {
    const Var h = g.parameter(x);
    return random_projection(g, nn::multi_head_attention(g, block.attn, h, h, h, 2), w);
  });
  EXPECT_LT(r.max_rel_error, kGradTol);
  r = check_gradients(params, [&](Graph& g) {
    return random_projection(g, nn::transformer_block(g, block, g.parameter(x), 2), w);
  });
  EXPECT_LT(r.max_rel_error, kGradTol);
}

TEST(Determinism, ForwardIsBitIdentical) {
  std::mt19937_64 rng(4);
  auto block = nn::make_block(8, 16, rng);
  const Tensor x = random_tensor({5, 8}, rng);
  Graph g1, g2;
  const Tensor a = nn::transformer_block(g1, std::as_const(block), g1.constant(x), 4).value();
  const Tensor b = nn::transformer_block(g2, std::as_const(block), g2.constant(x), 4).value();
  EXPECT_EQ(a, b);
}

TEST(AdamW, ZeroGradZeroDecayIsIdentity) {
  Tensor p({3}, {1.0, -2.0, 0.5});
  p.set_requires_grad(true);
  const Tensor before = p;
  AdamW opt({0.9, 0.999, 1e-8, 0.0});
  opt.step({&p}, 0.1);
  EXPECT_EQ(p, before);
  EXPECT_EQ(opt.step_count(), 1u);
}

TEST(AdamW, DecayOnlyStep) {
  Tensor p({2}, {2.0, -4.0});
  p.set_requires_grad(true);
  AdamW opt({0.9, 0.999, 1e-8, 0.1});
  opt.step({&p}, 0.01);
  EXPECT_DOUBLE_EQ(p[0], 2.0 * (1.0 - 0.01 * 0.1));
  EXPECT_DOUBLE_EQ(p[1], -4.0 * (1.0 - 0.01 * 0.1));
}

TEST(AdamW, FirstStepMovesBySignOfGrad) {
  for (double g : {3.0, -0.25}) {
    Tensor p({1}, 1.0);
    p.set_requires_grad(true);
    p.grad()[0] = g;
    AdamW opt({0.9, 0.999, 1e-8, 0.0});
    opt.step({&p}, 0.01);
    EXPECT_NEAR(p[0] - 1.0, -0.01 * (g > 0 ? 1.0 : -1.0), 1e-8);
  }
}

TEST(AdamW, ZeroLearningRateIsIdentity) {
  std::mt19937_64 rng(6);
  Tensor p = random_tensor({4, 4}, rng);
  p.set_requires_grad(true);
  for (auto& gv : p.grad()) gv = 0.3;
  const Tensor before = p;
  AdamW opt;
  for (int i = 0; i < 3; ++i) opt.step({&p}, 0.0);
  EXPECT_EQ(p, before);
  EXPECT_EQ(opt.step_count(), 3u);
}

TEST(AdamW, ShapeChangeIsRejected) {
  Tensor a({2}, 1.0), b({3}, 1.0);
  a.set_requires_grad(true);
  b.set_requires_grad(true);
  AdamW opt;
  opt.step({&a}, 0.1);
  EXPECT_THROW(opt.step({&b}, 0.1), ShapeError);
  EXPECT_THROW(opt.step({&a}, -1.0), ContractError);
}

TEST(LrSchedule, Endpoints) {
  const LrSchedule s(1e-3, 100, 300);
  EXPECT_EQ(lr_at(s, 0), 0.0);
  EXPECT_DOUBLE_EQ(lr_at(s, 100), 1e-3);
  EXPECT_NEAR(lr_at(s, 200), 5e-4, 1e-12);
  EXPECT_NEAR(lr_at(s, 300), 0.0, 1e-12);
  EXPECT_NEAR(lr_at(s, 50), 5e-4, 1e-15);
  for (std::size_t step = 0; step <= 300; ++step) EXPECT_GE(lr_at(s, step), 0.0);
  EXPECT_THROW(lr_at(s, 301), ContractError);
  EXPECT_THROW(LrSchedule(1e-3, 10, 10), ConfigError);
}

TEST(LrSchedule, NoWarmupStartsAtBase) {
  const LrSchedule s(2.0, 0, 10);
  EXPECT_EQ(lr_at(s, 0), 2.0);
}

}  // namespace
}  // namespace ebgame
