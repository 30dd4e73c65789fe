#include <gtest/gtest.h>

#include "afecnn/errors.hpp"
#include "afecnn/ops.hpp"
#include "afecnn/tensor.hpp"

using namespace afecnn;

TEST(Tensor, ShapeMatchesData) {
  Tensor<float> t(Shape{2, 3}, 1.5f);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rank(), 2u);
  EXPECT_EQ(t.extent(-1), 3u);
  EXPECT_FALSE(t.has_grad());
}

TEST(Tensor, RejectsZeroExtentAndCountMismatch) {
  EXPECT_THROW(Tensor<float>(Shape{2, 0}), DimensionError);
  EXPECT_THROW(Tensor<float>(Shape{2, 2}, std::vector<float>{1, 2, 3}), DimensionError);
}

TEST(Tensor, CloneIsDeep) {
  Tensor<float> a(Shape{2}, std::vector<float>{1, 2});
  Tensor<float> b = a.clone();
  b.mutable_data()[0] = 7;
  EXPECT_EQ(a[0], 1.0f);
  EXPECT_FALSE(a.same_storage(b));
}

TEST(Backward, SumGivesOnes) {
  Tensor<float> x(Shape{2, 2}, std::vector<float>{1, 2, 3, 4});
  x.set_requires_grad(true);
  Tape tape;
  backward(ops::sum(x));
  ASSERT_TRUE(x.has_grad());
  for (float g : x.grad()) EXPECT_EQ(g, 1.0f);
}

TEST(Backward, SquareGivesTwoX) {
  Tensor<float> x(Shape{2}, std::vector<float>{1, 2});
  x.set_requires_grad(true);
  Tape tape;
  backward(ops::sum(ops::mul(x, x)));
  EXPECT_FLOAT_EQ(x.grad()[0], 2.0f);
  EXPECT_FLOAT_EQ(x.grad()[1], 4.0f);
}

TEST(Backward, GradientsAccumulateAcrossTapes) {
  Tensor<double> x(Shape{3}, 1.0);
  x.set_requires_grad(true);
  for (int i = 0; i < 2; ++i) {
    Tape tape;
    backward(ops::sum(ops::scale(x, 3.0)));
  }
  for (double g : x.grad()) EXPECT_EQ(g, 6.0);
  x.zero_grad();
  for (double g : x.grad()) EXPECT_EQ(g, 0.0);
}

TEST(Backward, NonScalarLossIsUsageError) {
  Tensor<float> x(Shape{2}, 1.0f);
  x.set_requires_grad(true);
  Tape tape;
  EXPECT_THROW(backward(ops::scale(x, 2.0f)), UsageError);
}

TEST(Backward, LossFromAnotherTapeIsUsageError) {
  Tensor<float> x(Shape{2}, 1.0f);
  x.set_requires_grad(true);
  Tape outer;
  Tensor<float> loss = ops::sum(x);
  {
    Tape inner;
    EXPECT_THROW(backward(loss), UsageError);
  }
}

TEST(Backward, RunningATapeTwiceIsUsageError) {
  Tensor<float> x(Shape{2}, 1.0f);
  x.set_requires_grad(true);
  Tape tape;
  backward(ops::sum(x));
  EXPECT_TRUE(tape.consumed());
  EXPECT_THROW(tape.run_backward(), UsageError);
}

TEST(Backward, NothingIsRecordedWithoutTape) {
  Tensor<float> x(Shape{2}, 1.0f);
  x.set_requires_grad(true);
  const Tensor<float> y = ops::sum(x);
  EXPECT_FALSE(y.requires_grad());
}

TEST(Backward, NothingIsRecordedForConstants) {
  Tensor<float> x(Shape{2}, 1.0f);
  Tape tape;
  const Tensor<float> y = ops::sum(ops::mul(x, x));
  EXPECT_EQ(tape.size(), 0u);
  EXPECT_FALSE(y.requires_grad());
}

TEST(Backward, DeterministicGradients) {
  auto run = [] {
    Tensor<float> w(Shape{3, 3}, std::vector<float>{0.1f, -0.2f, 0.3f, 0.4f, 0.5f, -0.6f, 0.7f, 0.8f, 0.9f});
    w.set_requires_grad(true);
    Tensor<float> x(Shape{2, 3}, std::vector<float>{1, 2, 3, -1, -2, 0.5f});
    Tape tape;
    backward(ops::sum(ops::softmax_rows(ops::matmul(x, w))));
    return std::vector<float>(w.grad().begin(), w.grad().end());
  };
  EXPECT_EQ(run(), run());
}
