// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "faa/errors.hpp"
#include "faa/optim.hpp"

namespace faa {
namespace {

// Textbook AdamW on scalars, decoupled decay applied before the moment update.
struct ScalarAdamW {
  double m = 0.0, v = 0.0;
  int t = 0;
  double step(double p, double g, double lr, double wd) {
    p *= 1.0 - lr * wd;
    ++t;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1.0 - std::pow(0.9, t));
    const double vh = v / (1.0 - std::pow(0.999, t));
    return p - lr * mh / (std::sqrt(vh) + 1e-8);
  }
};

TEST(AdamW, ZeroGradientNoDecayLeavesParams) {
  Tensor p = Tensor::vector({0.5, -1.5, 2.0});
  const Tensor before = p;
  AdamWState state;
  adamw_step({{"p", &p}}, {{"p", {0.0, 0.0, 0.0}}}, state, 1e-2, {.weight_decay = 0.0});
  EXPECT_TRUE(p.bitwise_equal(before));
}

TEST(AdamW, DecoupledDecayWithZeroGradient) {
  Tensor p = Tensor::vector({0.5, -1.5, 2.0});
  AdamWState state;
  adamw_step({{"p", &p}}, {{"p", {0.0, 0.0, 0.0}}}, state, 0.1, {.weight_decay = 0.01});
  EXPECT_EQ(p[0], 0.5 * (1.0 - 0.1 * 0.01));
  EXPECT_EQ(p[1], -1.5 * (1.0 - 0.1 * 0.01));
  EXPECT_EQ(p[2], 2.0 * (1.0 - 0.1 * 0.01));
}

TEST(AdamW, MatchesScalarReferenceOverSeveralSteps) {
  Tensor p = Tensor::vector({0.3, -0.7, 1.1});
  std::vector<double> ref = {0.3, -0.7, 1.1};
  std::vector<ScalarAdamW> refs(3);
  AdamWState state;
  const double grads[4][3] = {{0.5, -2.0, 1e-3}, {0.1, 0.4, -0.2}, {-1.0, 0.0, 3.0}, {0.25, -0.25, 0.5}};
  for (int s = 0; s < 4; ++s) {
    const double lr = 0.01 * (s + 1);
    adamw_step({{"p", &p}}, {{"p", {grads[s][0], grads[s][1], grads[s][2]}}}, state, lr, {.weight_decay = 0.05});
    for (int i = 0; i < 3; ++i) ref[i] = refs[i].step(ref[i], grads[s][i], lr, 0.05);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(p[i], ref[i], 1e-15) << "step " << s << " coord " << i;
  }
}

TEST(AdamW, FirstStepMovesByLearningRateAgainstGradientSign) {
  Tensor p = Tensor::vector({0.0, 0.0, 0.0});
  AdamWState state;
  adamw_step({{"p", &p}}, {{"p", {3.0, -0.02, 50.0}}}, state, 1e-3, {.weight_decay = 0.0});
  EXPECT_NEAR(p[0], -1e-3, 1e-10);
  EXPECT_NEAR(p[1], 1e-3, 1e-9);
  EXPECT_NEAR(p[2], -1e-3, 1e-10);
}

TEST(AdamW, StepCountsArePerParameter) {
  Tensor a = Tensor::vector({1.0}), b = Tensor::vector({1.0});
  AdamWState state;
  const ParamRefs refs = {{"a", &a}, {"b", &b}};
  adamw_step(refs, {{"a", {1.0}}}, state, 0.1, {});
  adamw_step(refs, {{"a", {1.0}}, {"b", {1.0}}}, state, 0.1, {});
  EXPECT_EQ(state.at("a").step, 2u);
  EXPECT_EQ(state.at("b").step, 1u);
  // b's first step is bias-corrected as a first step.
  EXPECT_NEAR(b[0], 1.0 * (1.0 - 0.1 * 0.01) - 0.1, 1e-9);
}

TEST(AdamW, UnknownNamesAreSkippedAndSizesChecked) {
  Tensor a = Tensor::vector({1.0, 2.0});
  AdamWState state;
  EXPECT_NO_THROW(adamw_step({{"a", &a}}, {{"ghost", {1.0}}}, state, 0.1, {}));
  EXPECT_EQ(a.values(), (std::vector<double>{1.0, 2.0}));
  EXPECT_THROW(adamw_step({{"a", &a}}, {{"a", {1.0}}}, state, 0.1, {}), DimensionError);
}

TEST(LrSchedule, Endpoints) {
  EXPECT_EQ(lr_schedule(0, 100, 0.06, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(lr_schedule(6, 100, 0.06, 0.5), 0.5);
  EXPECT_EQ(lr_schedule(100, 100, 0.06, 0.5), 0.0);
}

TEST(LrSchedule, DecayMidpoint) { EXPECT_DOUBLE_EQ(lr_schedule(53, 100, 0.06, 1.0), 1.0 * (1.0 - 47.0 / 94.0)); }

TEST(LrSchedule, LinearRampAndDecay) {
  EXPECT_DOUBLE_EQ(lr_schedule(3, 100, 0.06, 1.0), 0.5);
  double prev = 1.0;
  for (std::size_t s = 7; s <= 100; ++s) {
    const double lr = lr_schedule(s, 100, 0.06, 1.0);
    EXPECT_LT(lr, prev);
    prev = lr;
  }
}

TEST(LrSchedule, NoWarmup) { EXPECT_EQ(lr_schedule(0, 10, 0.0, 2.0), 2.0); }

TEST(LrSchedule, Contract) {
  EXPECT_THROW(lr_schedule(11, 10, 0.06, 1.0), ContractError);
  EXPECT_THROW(lr_schedule(1, 10, 1.0, 1.0), ContractError);
  EXPECT_THROW(lr_schedule(1, 10, -0.1, 1.0), ContractError);
}

TEST(LrEpochDecay, PiecewiseConstantAfterWarmup) {
  EXPECT_EQ(lr_epoch_decay(0, 100, 0.06, 1.0, 0, 0.8), 0.0);
  EXPECT_DOUBLE_EQ(lr_epoch_decay(20, 100, 0.06, 1.0, 0, 0.8), 1.0);
  EXPECT_DOUBLE_EQ(lr_epoch_decay(30, 100, 0.06, 1.0, 2, 0.8), 0.64);
}

}  // namespace
}  // namespace faa
