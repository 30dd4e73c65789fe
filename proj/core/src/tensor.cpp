#include "afecnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace afecnn {

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

template <class T>
Tensor<T>::Tensor() : Tensor(Shape{}, T(0)) {}

template <class T>
Tensor<T>::Tensor(Shape shape, T fill) : node_(std::make_shared<detail::TensorNode<T>>()) {
  for (std::size_t e : shape) {
    if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_string(shape));
  }
  node_->data.assign(element_count(shape), fill);
  node_->shape = std::move(shape);
}

template <class T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values)
    : node_(std::make_shared<detail::TensorNode<T>>()) {
  for (std::size_t e : shape) {
    if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_string(shape));
  }
  if (element_count(shape) != values.size()) {
    throw DimensionError("shape " + shape_string(shape) + " needs " +
                         std::to_string(element_count(shape)) + " values, got " +
                         std::to_string(values.size()));
  }
  node_->shape = std::move(shape);
  node_->data.assign(values.begin(), values.end());
}

template <class T>
Tensor<T> Tensor<T>::scalar(T value) {
  return Tensor(Shape{}, value);
}

template <class T>
std::size_t Tensor<T>::extent(int axis) const {
  const int r = static_cast<int>(rank());
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " +
                         shape_string(shape()));
  }
  return node_->shape[static_cast<std::size_t>(a)];
}

template <class T>
T Tensor<T>::item() const {
  if (size() != 1) throw UsageError("item() on tensor of shape " + shape_string(shape()));
  return node_->data[0];
}

template <class T>
Tensor<T>& Tensor<T>::set_requires_grad(bool on) {
  node_->requires_grad = on;
  return *this;
}

template <class T>
std::span<T> Tensor<T>::grad_buffer() const {
  if (node_->grad.empty()) node_->grad.assign(node_->data.size(), T(0));
  return node_->grad;
}

template <class T>
void Tensor<T>::accumulate_grad(std::span<const T> g) const {
  auto buf = grad_buffer();
  if (g.size() != buf.size()) {
    throw DimensionError("gradient of size " + std::to_string(g.size()) +
                         " for tensor " + shape_string(shape()));
  }
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] += g[i];
}

template <class T>
void Tensor<T>::zero_grad() {
  std::fill(node_->grad.begin(), node_->grad.end(), T(0));
}

template <class T>
Tensor<T> Tensor<T>::clone() const {
  return Tensor(node_->shape, std::vector<T>(node_->data.begin(), node_->data.end()));
}

template <class T>
Tensor<T> Tensor<T>::reshaped(Shape shape) const {
  return Tensor(std::move(shape), std::vector<T>(node_->data.begin(), node_->data.end()));
}

template class Tensor<float>;
template class Tensor<double>;

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape::Tape() : previous_(g_active_tape) { g_active_tape = this; }

Tape::~Tape() { g_active_tape = previous_; }

Tape* Tape::active() { return g_active_tape; }

void Tape::run_backward() {
  if (consumed_) throw UsageError("backward called twice on the same tape");
  consumed_ = true;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
  entries_.clear();
  entries_.shrink_to_fit();
}

template <class T>
void backward(const Tensor<T>& loss) {
  if (loss.size() != 1) {
    throw UsageError("backward needs a scalar loss, got shape " + shape_string(loss.shape()));
  }
  Tape* tape = Tape::active();
  if (tape == nullptr || loss.node().tape != tape) {
    throw UsageError("backward: loss was not produced on the active tape");
  }
  Tensor<T> handle = loss;
  handle.grad_buffer()[0] += T(1);
  tape->run_backward();
}

template void backward<float>(const Tensor<float>&);
template void backward<double>(const Tensor<double>&);

namespace detail {

template <class T>
static void check_finite_impl(std::span<const T> values, const char* op) {
#ifndef NDEBUG
  for (T v : values) {
    if (!std::isfinite(v)) throw Error(std::string(op) + " produced a non-finite value");
  }
#else
  (void)values;
  (void)op;
#endif
}

void check_finite(std::span<const float> values, const char* op) { check_finite_impl(values, op); }
void check_finite(std::span<const double> values, const char* op) { check_finite_impl(values, op); }

}  // namespace detail

}  // namespace afecnn
