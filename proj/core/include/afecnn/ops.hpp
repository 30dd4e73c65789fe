#pragma once

// Differentiable operations over Tensor<T>, instantiated for float and double.
//
// Broadcasting (add/sub/mul, batched matmul) follows one rule: shapes are
// left-padded with 1s to equal rank, then each axis must match or be 1. An
// axis of extent 1 stretches; its gradient is the sum over the stretched axis.

#include <cstddef>
#include <span>
#include <vector>

#include "afecnn/tensor.hpp"

namespace afecnn::ops {

/// Shape produced by broadcasting `a` against `b`; throws DimensionError.
Shape broadcast_shape(const Shape& a, const Shape& b);

/// Batched matrix product over the last two axes: [..., m, k] x [..., k, n].
template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> scale(const Tensor<T>& a, T factor);

template <class T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope);

/// Softmax over the last axis, max-subtracted.
template <class T>
Tensor<T> softmax_rows(const Tensor<T>& x);

/// y = x W^T + b over the trailing axis; weight is [out, in], bias [out].
template <class T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

/// Cross-correlation of x [C_in, H, W] with square kernels [C_out, C_in, k, k].
template <class T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& kernels, const Tensor<T>& bias,
                 std::size_t stride, std::size_t padding);

/// Output extent of a convolution along one axis (0 when the window never fits).
std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                               std::size_t padding);

/// 2x2 max pool with stride 2 over [C, H, W]; ties route to the first
/// element in row-major window order.
template <class T>
Tensor<T> maxpool2d(const Tensor<T>& x);

/// Mean over the batch of -log softmax(logits)[label]; logits are [batch, c].
template <class T>
Tensor<T> cross_entropy(const Tensor<T>& logits, std::span<const int> labels);

template <class T>
Tensor<T> sum(const Tensor<T>& x);

template <class T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);

/// out.shape[i] = x.shape[axes[i]].
template <class T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<std::size_t>& axes);

/// Swaps the last two axes.
template <class T>
Tensor<T> transpose(const Tensor<T>& x);

/// Concatenates along axis 0.
template <class T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts);

/// Forward difference along the last axis divided by dt; the final entry of
/// each row is zero so the extent is unchanged.
template <class T>
Tensor<T> time_difference(const Tensor<T>& x, T dt);

}  // namespace afecnn::ops
