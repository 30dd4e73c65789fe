#include <gtest/gtest.h>

#include <cmath>

#include "afecnn/errors.hpp"
#include "afecnn/optim.hpp"

using namespace afecnn;

namespace {

// Reference Adam recurrence for one scalar with a fixed gradient sequence.
double adam_reference(double param, const std::vector<double>& grads, double lr) {
  double m = 0, v = 0;
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (std::size_t t = 1; t <= grads.size(); ++t) {
    const double g = grads[t - 1];
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, double(t)));
    const double vh = v / (1 - std::pow(b2, double(t)));
    param -= lr * mh / (std::sqrt(vh) + eps);
  }
  return param;
}

}  // namespace

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<Tensor<float>> p{Tensor<float>(Shape{3}, 0.5f)};
  p[0].set_requires_grad(true);
  p[0].grad_buffer();
  auto state = AdamState<float>::for_parameters(p);
  adam_step(std::span<Tensor<float>>(p), state, 0.001f);
  for (float v : p[0].data()) EXPECT_EQ(v, 0.5f);
  for (float v : state.m[0]) EXPECT_EQ(v, 0.0f);
  for (float v : state.v[0]) EXPECT_EQ(v, 0.0f);
  EXPECT_EQ(state.step_count, 1u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<Tensor<float>> p{Tensor<float>(Shape{1}, 0.0f)};
  p[0].accumulate_grad(std::vector<float>{1.0f});
  auto state = AdamState<float>::for_parameters(p);
  adam_step(std::span<Tensor<float>>(p), state, 0.001f);
  EXPECT_NEAR(p[0][0], -0.001, 1e-9);
}

TEST(Adam, TwoStepsMatchHandRecurrence) {
  std::vector<Tensor<double>> p{Tensor<double>(Shape{1}, 0.25)};
  auto state = AdamState<double>::for_parameters(p);
  for (int i = 0; i < 2; ++i) {
    p[0].zero_grad();
    p[0].accumulate_grad(std::vector<double>{0.3});
    adam_step(std::span<Tensor<double>>(p), state, 0.001);
  }
  EXPECT_NEAR(p[0][0], adam_reference(0.25, {0.3, 0.3}, 0.001), 1e-7);
  EXPECT_EQ(state.step_count, 2u);
  EXPECT_GE(state.v[0][0], 0.0);
}

TEST(Adam, MismatchedStateIsUsageError) {
  std::vector<Tensor<float>> p{Tensor<float>(Shape{2})};
  auto state = AdamState<float>::for_parameters(p);
  std::vector<Tensor<float>> other{Tensor<float>(Shape{3})};
  EXPECT_THROW(adam_step(std::span<Tensor<float>>(other), state, 0.001f), UsageError);
}
