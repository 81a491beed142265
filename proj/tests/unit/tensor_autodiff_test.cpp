// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <string>

#include "faa/errors.hpp"
#include "faa/gradcheck.hpp"
#include "faa/ops.hpp"
#include "test_support.hpp"

namespace faa {
namespace {

using test::gradient_error;
using test::random_tensor;

Tensor run(const std::function<Var(Graph&)>& f) {
  Graph g;
  return f(g).value();
}

TEST(Tensor, ShapeContract) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), DimensionError);
  Tensor t = Tensor::zeros({2, 3}, true);
  EXPECT_EQ(t.numel(), 6u);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_EQ(t.mutable_grad().size(), 6u);
  EXPECT_EQ(Tensor::vector({1, 2, 3}).rows(), 1u);
}

TEST(Matmul, Identity) {
  const Tensor b = Tensor::matrix(2, 2, {1, 2, 3, 4});
  const Tensor out = run([&](Graph& g) { return matmul(g.constant(Tensor::matrix(2, 2, {1, 0, 0, 1})), g.constant(b)); });
  EXPECT_TRUE(out.bitwise_equal(b));
}

TEST(Matmul, HandArithmetic) {
  const Tensor out =
      run([](Graph& g) { return matmul(g.constant(Tensor::matrix(1, 2, {1, 2})), g.constant(Tensor::matrix(2, 1, {3, 4}))); });
  EXPECT_EQ(out.item(), 11.0);
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  Graph g;
  Var a = g.constant(Tensor::zeros({2, 3}));
  Var b = g.constant(Tensor::zeros({2, 3}));
  try {
    matmul(a, b);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2x3]"), std::string::npos) << msg;
  }
}

TEST(Matmul, SumGradientMatchesFiniteDifferences) {
  Rng rng(11);
  Tensor a = random_tensor({3, 3}, rng);
  Tensor b = random_tensor({3, 3}, rng);
  const double err = gradient_error({&a}, [&](Graph& g) { return sum(matmul(g.param(a), g.param(b))); });
  EXPECT_LE(err, 1e-6);
}

TEST(Unary, TrivialValues) {
  const Tensor zero = Tensor::vector({0.0});
  EXPECT_EQ(run([&](Graph& g) { return cos(g.constant(zero)); }).item(), 1.0);
  EXPECT_EQ(run([&](Graph& g) { return sin(g.constant(zero)); }).item(), 0.0);
  EXPECT_EQ(run([&](Graph& g) { return sigmoid(g.constant(zero)); }).item(), 0.5);
  EXPECT_EQ(run([&](Graph& g) { return gelu(g.constant(zero)); }).item(), 0.0);
}

TEST(Unary, GeluAtOneMatchesTanhFormAndFiniteDifferences) {
  const double c = std::sqrt(2.0 / std::numbers::pi);
  const double expected = 0.5 * (1.0 + std::tanh(c * (1.0 + 0.044715)));
  EXPECT_NEAR(gelu_value(1.0), expected, 1e-15);

  Tensor x = Tensor::vector({1.0});
  x.set_requires_grad(true);
  const std::vector<double> fd = finite_diff_grad_inplace(x, [&] { return gelu_value(x[0]); });
  EXPECT_LE(relative_error(gelu_derivative(1.0), fd[0]), 1e-6);
  EXPECT_LE(gradient_error({&x}, [&](Graph& g) { return sum(gelu(g.param(x))); }), 1e-6);
}

TEST(LayerNorm, ConstantRowIsZero) {
  const Tensor out = run([](Graph& g) { return layernorm(g.constant(Tensor::vector({1, 1, 1})), 1e-5); });
  for (double v : out.values()) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(LayerNorm, SymmetricPair) {
  const Tensor out = run([](Graph& g) { return layernorm(g.constant(Tensor::vector({-1, 1})), 1e-5); });
  EXPECT_NEAR(out[0], -1.0, 1e-5);
  EXPECT_NEAR(out[1], 1.0, 1e-5);
}

TEST(LayerNorm, GradientOnRandomRow) {
  Rng rng(5);
  Tensor x = random_tensor({5}, rng);
  const Tensor w = random_tensor({5}, rng, -1, 1, false);
  const double err =
      gradient_error({&x}, [&](Graph& g) { return sum(mul(layernorm(g.param(x), 1e-5), g.constant(w))); });
  EXPECT_LE(err, 1e-5);
}

TEST(Backward, SumGivesOnes) {
  Tensor x = Tensor::vector({1, 2, 3, 4});
  x.set_requires_grad(true);
  Graph g;
  g.backward(sum(g.param(x)));
  EXPECT_EQ(x.grad(), std::vector<double>(4, 1.0));
}

TEST(Backward, SquareSum) {
  Tensor x = Tensor::vector({1, 2});
  x.set_requires_grad(true);
  Graph g;
  Var v = g.param(x);
  g.backward(sum(mul(v, v)));
  EXPECT_EQ(x.grad(), (std::vector<double>{2, 4}));
}

TEST(Backward, NonScalarLossIsAContractError) {
  Tensor x = Tensor::vector({1, 2});
  x.set_requires_grad(true);
  Graph g;
  EXPECT_THROW(g.backward(g.param(x)), ContractError);
}

TEST(Backward, SecondPassDoublesGradients) {
  Rng rng(3);
  Tensor a = random_tensor({3, 4}, rng);
  Tensor b = random_tensor({4, 2}, rng);
  Graph g;
  Var loss = sum(gelu(matmul(g.param(a), g.param(b))));
  g.backward(loss);
  const std::vector<double> once_a = a.grad(), once_b = b.grad();
  g.backward(loss);
  for (std::size_t i = 0; i < once_a.size(); ++i) EXPECT_EQ(a.grad()[i], 2.0 * once_a[i]);
  for (std::size_t i = 0; i < once_b.size(); ++i) EXPECT_EQ(b.grad()[i], 2.0 * once_b[i]);
}

TEST(Backward, SharedSubexpressionAccumulatesOverPaths) {
  Tensor x = Tensor::vector({0.3, -0.7});
  x.set_requires_grad(true);
  const double err = gradient_error({&x}, [&](Graph& g) {
    Var v = g.param(x);
    Var s = sin(v);
    return sum(add(mul(s, s), mul(s, v)));
  });
  EXPECT_LE(err, 1e-8);
}

TEST(Ops, PureAndBitwiseRepeatable) {
  Rng rng(99);
  Tensor a = random_tensor({6, 5}, rng);
  Tensor b = random_tensor({5, 7}, rng);
  auto f = [&](Graph& g) { return softmax_rows(layernorm(gelu(matmul(g.param(a), g.param(b))))); };
  EXPECT_TRUE(run(f).bitwise_equal(run(f)));
}

TEST(FiniteDiff, SquareAndSine) {
  const std::vector<double> sq =
      finite_diff_grad([](const Tensor& p) { return p[0] * p[0]; }, Tensor::vector({3.0}), 1e-5);
  EXPECT_NEAR(sq[0], 6.0, 1e-6);
  const std::vector<double> s = finite_diff_grad([](const Tensor& p) { return std::sin(p[0]); }, Tensor::vector({0.0}));
  EXPECT_NEAR(s[0], 1.0, 1e-8);
}

TEST(FiniteDiff, NonFiniteEvaluationThrows) {
  EXPECT_THROW(finite_diff_grad([](const Tensor& p) { return std::log(p[0]); }, Tensor::vector({0.0})),
               NumericalError);
}

TEST(FiniteDiff, AgreesWithBackwardOnTwoLayerToy) {
  Rng rng(21);
  Tensor w1 = random_tensor({4, 3}, rng);
  Tensor w2 = random_tensor({2, 4}, rng);
  Tensor b1 = random_tensor({4}, rng);
  const Tensor x = random_tensor({5, 3}, rng, -1, 1, false);
  const std::vector<std::size_t> labels = {0, 1, 1, 0, 1};
  auto build = [&](Graph& g) {
    Var h = gelu(linear(g.constant(x), g.param(w1), g.param(b1)));
    return cross_entropy(linear(h, g.param(w2)), labels);
  };
  EXPECT_LE(gradient_error({&w1, &w2, &b1}, build), 1e-5);

  // Other direction: the oracle's numbers reproduced from backward().
  for (Tensor* t : {&w1, &w2, &b1}) t->clear_grad();
  Graph g;
  g.backward(build(g));
  const std::vector<double> analytic = w2.grad();
  const std::vector<double> numeric = finite_diff_grad(
      [&](const Tensor& p) {
        Tensor copy = p;
        Graph gg;
        Var h = gelu(linear(gg.constant(x), gg.param(w1), gg.param(b1)));
        return cross_entropy(linear(h, gg.param(copy)), labels).value().item();
      },
      w2);
  EXPECT_LE(max_relative_error(numeric, analytic), 1e-5);
}

TEST(ClipGlobalNorm, Examples) {
  const GradMap g = {{"a", {3.0, 4.0}}};
  EXPECT_EQ(clip_global_norm(g, 10.0), g);
  const GradMap clipped = clip_global_norm(g, 1.0);
  EXPECT_NEAR(clipped.at("a")[0], 0.6, 1e-15);
  EXPECT_NEAR(clipped.at("a")[1], 0.8, 1e-15);
}

TEST(ClipGlobalNorm, NormBoundOnRandomGrads) {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    GradMap g;
    for (int k = 0; k < 3; ++k) {
      std::vector<double> v(1 + rng.below(10));
      for (double& x : v) x = rng.normal(0, 10);
      g["p" + std::to_string(k)] = v;
    }
    const double max_norm = rng.uniform(0.1, 5.0);
    EXPECT_LE(global_norm(clip_global_norm(g, max_norm)), max_norm + 1e-12);
  }
}

// Every differentiable op, randomized shapes up to 8 per axis, 100 trials.
struct OpTrial {
  std::vector<Tensor> params;
  std::function<Var(Graph&, std::vector<Var>&)> forward;
};

using TrialFactory = std::function<OpTrial(Rng&)>;

std::size_t dim(Rng& rng) { return 1 + rng.below(8); }

Tensor away_from_zero(Shape shape, Rng& rng) {
  Tensor t = random_tensor(std::move(shape), rng, 0.1, 1.0);
  for (std::size_t i = 0; i < t.numel(); ++i) {
    if (rng.uniform() < 0.5) t[i] = -t[i];
  }
  return t;
}

const std::map<std::string, TrialFactory>& op_trials() {
  static const std::map<std::string, TrialFactory> table = {
      {"matmul",
       [](Rng& r) {
         const std::size_t m = dim(r), k = dim(r), n = dim(r);
         return OpTrial{{random_tensor({m, k}, r), random_tensor({k, n}, r)},
                        [](Graph&, std::vector<Var>& v) { return matmul(v[0], v[1]); }};
       }},
      {"matmul_nt",
       [](Rng& r) {
         const std::size_t m = dim(r), k = dim(r), n = dim(r);
         return OpTrial{{random_tensor({m, k}, r), random_tensor({n, k}, r)},
                        [](Graph&, std::vector<Var>& v) { return matmul_nt(v[0], v[1]); }};
       }},
      {"linear",
       [](Rng& r) {
         const std::size_t m = dim(r), k = dim(r), n = dim(r);
         return OpTrial{{random_tensor({m, k}, r), random_tensor({n, k}, r), random_tensor({n}, r)},
                        [](Graph&, std::vector<Var>& v) { return linear(v[0], v[1], v[2]); }};
       }},
      {"add",
       [](Rng& r) {
         const std::size_t m = dim(r), n = dim(r);
         return OpTrial{{random_tensor({m, n}, r), random_tensor({m, n}, r)},
                        [](Graph&, std::vector<Var>& v) { return add(v[0], v[1]); }};
       }},
      {"sub",
       [](Rng& r) {
         const std::size_t m = dim(r), n = dim(r);
         return OpTrial{{random_tensor({m, n}, r), random_tensor({m, n}, r)},
                        [](Graph&, std::vector<Var>& v) { return sub(v[0], v[1]); }};
       }},
      {"mul",
       [](Rng& r) {
         const std::size_t m = dim(r), n = dim(r);
         return OpTrial{{random_tensor({m, n}, r), random_tensor({m, n}, r)},
                        [](Graph&, std::vector<Var>& v) { return mul(v[0], v[1]); }};
       }},
      {"scale",
       [](Rng& r) {
         const double f = r.uniform(-2, 2);
         return OpTrial{{random_tensor({dim(r), dim(r)}, r)},
                        [f](Graph&, std::vector<Var>& v) { return scale(v[0], f); }};
       }},
      {"add_row",
       [](Rng& r) {
         const std::size_t m = dim(r), n = dim(r);
         return OpTrial{{random_tensor({m, n}, r), random_tensor({n}, r)},
                        [](Graph&, std::vector<Var>& v) { return add_row(v[0], v[1]); }};
       }},
      {"mul_row",
       [](Rng& r) {
         const std::size_t m = dim(r), n = dim(r);
         return OpTrial{{random_tensor({m, n}, r), random_tensor({n}, r)},
                        [](Graph&, std::vector<Var>& v) { return mul_row(v[0], v[1]); }};
       }},
      {"mul_col",
       [](Rng& r) {
         const std::size_t m = dim(r), n = dim(r);
         return OpTrial{{random_tensor({m, n}, r), random_tensor({m, 1}, r)},
                        [](Graph&, std::vector<Var>& v) { return mul_col(v[0], v[1]); }};
       }},
      {"cos",
       [](Rng& r) {
         return OpTrial{{random_tensor({dim(r), dim(r)}, r, -3, 3)},
                        [](Graph&, std::vector<Var>& v) { return cos(v[0]); }};
       }},
      {"sin",
       [](Rng& r) {
         return OpTrial{{random_tensor({dim(r), dim(r)}, r, -3, 3)},
                        [](Graph&, std::vector<Var>& v) { return sin(v[0]); }};
       }},
      {"gelu",
       [](Rng& r) {
         return OpTrial{{random_tensor({dim(r), dim(r)}, r, -3, 3)},
                        [](Graph&, std::vector<Var>& v) { return gelu(v[0]); }};
       }},
      {"sigmoid",
       [](Rng& r) {
         return OpTrial{{random_tensor({dim(r), dim(r)}, r, -4, 4)},
                        [](Graph&, std::vector<Var>& v) { return sigmoid(v[0]); }};
       }},
      {"abs",
       [](Rng& r) {
         return OpTrial{{away_from_zero({dim(r), dim(r)}, r)}, [](Graph&, std::vector<Var>& v) { return abs(v[0]); }};
       }},
      {"sum",
       [](Rng& r) {
         return OpTrial{{random_tensor({dim(r), dim(r)}, r)}, [](Graph&, std::vector<Var>& v) { return sum(v[0]); }};
       }},
      {"mean",
       [](Rng& r) {
         return OpTrial{{random_tensor({dim(r), dim(r)}, r)}, [](Graph&, std::vector<Var>& v) { return mean(v[0]); }};
       }},
      {"row_sum",
       [](Rng& r) {
         return OpTrial{{random_tensor({dim(r), dim(r)}, r)},
                        [](Graph&, std::vector<Var>& v) { return row_sum(v[0]); }};
       }},
      {"row_mean",
       [](Rng& r) {
         return OpTrial{{random_tensor({dim(r), dim(r)}, r)},
                        [](Graph&, std::vector<Var>& v) { return row_mean(v[0]); }};
       }},
      {"col_mean",
       [](Rng& r) {
         return OpTrial{{random_tensor({dim(r), dim(r)}, r)},
                        [](Graph&, std::vector<Var>& v) { return col_mean(v[0]); }};
       }},
      {"concat_cols",
       [](Rng& r) {
         const std::size_t m = dim(r);
         return OpTrial{{random_tensor({m, dim(r)}, r), random_tensor({m, dim(r)}, r), random_tensor({m, dim(r)}, r)},
                        [](Graph&, std::vector<Var>& v) { return concat_cols(v); }};
       }},
      {"concat_rows",
       [](Rng& r) {
         const std::size_t n = dim(r);
         return OpTrial{{random_tensor({dim(r), n}, r), random_tensor({dim(r), n}, r)},
                        [](Graph&, std::vector<Var>& v) { return concat_rows(v); }};
       }},
      {"slice_cols",
       [](Rng& r) {
         const std::size_t n = dim(r);
         const std::size_t start = r.below(n);
         const std::size_t count = 1 + r.below(n - start);
         return OpTrial{{random_tensor({dim(r), n}, r)},
                        [=](Graph&, std::vector<Var>& v) { return slice_cols(v[0], start, count); }};
       }},
      {"slice_rows",
       [](Rng& r) {
         const std::size_t m = dim(r);
         const std::size_t start = r.below(m);
         const std::size_t count = 1 + r.below(m - start);
         return OpTrial{{random_tensor({m, dim(r)}, r)},
                        [=](Graph&, std::vector<Var>& v) { return slice_rows(v[0], start, count); }};
       }},
      {"reshape",
       [](Rng& r) {
         const std::size_t m = dim(r), n = dim(r);
         return OpTrial{{random_tensor({m, n}, r)},
                        [=](Graph&, std::vector<Var>& v) { return reshape(v[0], {n, m}); }};
       }},
      {"layernorm",
       [](Rng& r) {
         const std::size_t n = 2 + r.below(7);
         return OpTrial{{random_tensor({dim(r), n}, r, -2, 2)},
                        [](Graph&, std::vector<Var>& v) { return layernorm(v[0]); }};
       }},
      {"layernorm_affine",
       [](Rng& r) {
         const std::size_t n = 2 + r.below(7);
         return OpTrial{{random_tensor({dim(r), n}, r, -2, 2), random_tensor({n}, r), random_tensor({n}, r)},
                        [](Graph&, std::vector<Var>& v) { return layernorm(v[0], v[1], v[2]); }};
       }},
      {"softmax_rows",
       [](Rng& r) {
         return OpTrial{{random_tensor({dim(r), dim(r)}, r, -3, 3)},
                        [](Graph&, std::vector<Var>& v) { return softmax_rows(v[0]); }};
       }},
      {"cross_entropy",
       [](Rng& r) {
         const std::size_t b = dim(r), c = 2 + r.below(7);
         std::vector<std::size_t> labels(b);
         for (auto& l : labels) l = r.below(c);
         return OpTrial{{random_tensor({b, c}, r, -3, 3)},
                        [labels](Graph&, std::vector<Var>& v) { return cross_entropy(v[0], labels); }};
       }},
  };
  return table;
}

class OpGradient : public ::testing::TestWithParam<std::string> {};

TEST_P(OpGradient, MatchesFiniteDifferencesOverRandomShapes) {
  Rng rng(fnv1a64(GetParam()));
  for (int trial = 0; trial < 100; ++trial) {
    OpTrial t = op_trials().at(GetParam())(rng);
    // Contract the output with fixed random weights so every output
    // coordinate contributes a distinct sensitivity.
    Tensor probe;
    {
      Graph g;
      std::vector<Var> vars;
      for (Tensor& p : t.params) vars.push_back(g.param(p));
      probe = random_tensor(t.forward(g, vars).shape(), rng, -1, 1, false);
    }
    std::vector<Tensor*> ptrs;
    for (Tensor& p : t.params) ptrs.push_back(&p);
    const double err = gradient_error(ptrs, [&](Graph& g) {
      std::vector<Var> vars;
      for (Tensor& p : t.params) vars.push_back(g.param(p));
      return sum(mul(t.forward(g, vars), g.constant(probe)));
    });
    ASSERT_LE(err, 1e-5) << GetParam() << " trial " << trial;
  }
}

std::vector<std::string> op_names() {
  std::vector<std::string> names;
  for (const auto& [name, _] : op_trials()) names.push_back(name);
  return names;
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradient, ::testing::ValuesIn(op_names()),
                         [](const ::testing::TestParamInfo<std::string>& info) { return info.param; });

}  // namespace
}  // namespace faa
