#pragma once

// Dense row-major tensors with a define-by-run differentiation tape.
//
// A Tensor is a shared handle: copies alias the same storage. Operations in
// ops.hpp record a backward rule on the thread's active Tape whenever one of
// their inputs requires a gradient. Without an active tape nothing is
// recorded, which is the inference path.

#include <cstddef>
#include <functional>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <vector>

#include "afecnn/errors.hpp"

namespace afecnn {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

// Storage starts on a cache-line boundary so that vectorised kernels split
// their work the same way on every run; otherwise rounding depends on where
// the allocator happened to place a buffer.
inline constexpr std::size_t kStorageAlignment = 64;

template <class T>
struct AlignedAllocator {
  using value_type = T;
  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) {}
  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t{kStorageAlignment}));
  }
  void deallocate(T* p, std::size_t) { ::operator delete(p, std::align_val_t{kStorageAlignment}); }
  template <class U>
  bool operator==(const AlignedAllocator<U>&) const {
    return true;
  }
};

template <class T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

template <class T>
struct TensorNode {
  Shape shape;
  AlignedVector<T> data;
  AlignedVector<T> grad;  // empty until something accumulates into it
  bool requires_grad = false;
  const void* tape = nullptr;  // tape that produced this node, if any
};

}  // namespace detail

template <class T>
class Tensor {
 public:
  using value_type = T;

  Tensor();
  explicit Tensor(Shape shape, T fill = T(0));
  Tensor(Shape shape, std::vector<T> values);

  static Tensor scalar(T value);

  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->data.size(); }
  /// Extent of `axis`; negative values count from the back.
  std::size_t extent(int axis) const;

  std::span<const T> data() const { return node_->data; }
  std::span<T> mutable_data() { return node_->data; }
  T operator[](std::size_t i) const { return node_->data[i]; }
  T item() const;

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool on);

  bool has_grad() const { return !node_->grad.empty(); }
  /// Gradient values; empty span when nothing has been accumulated yet.
  std::span<const T> grad() const { return node_->grad; }
  /// Gradient storage, zero-allocated on first use.
  std::span<T> grad_buffer() const;
  void accumulate_grad(std::span<const T> g) const;
  void zero_grad();

  /// Deep copy with no gradient and no tape history.
  Tensor clone() const;
  Tensor reshaped(Shape shape) const;  // non-differentiable copy

  template <class U>
  Tensor<U> cast() const {
    std::vector<U> values(node_->data.begin(), node_->data.end());
    Tensor<U> out(node_->shape, std::move(values));
    out.set_requires_grad(node_->requires_grad);
    return out;
  }

  bool same_storage(const Tensor& other) const { return node_ == other.node_; }

  detail::TensorNode<T>& node() const { return *node_; }
  std::shared_ptr<detail::TensorNode<T>> node_ptr() const { return node_; }

 private:
  std::shared_ptr<detail::TensorNode<T>> node_;
};

/// Append-only record of backward rules, confined to the constructing thread.
///
/// Constructing a Tape makes it the thread's active tape until it is
/// destroyed; tapes nest like scopes.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active();

  std::size_t size() const { return entries_.size(); }
  bool consumed() const { return consumed_; }

  void push(std::function<void()> rule) { entries_.push_back(std::move(rule)); }

  /// Runs every recorded rule once, newest first, then releases them.
  void run_backward();

 private:
  std::vector<std::function<void()>> entries_;
  Tape* previous_ = nullptr;
  bool consumed_ = false;
};

/// Seeds d(loss)/d(loss) = 1 and propagates through the active tape.
///
/// Gradients accumulate into every requires_grad tensor reachable from
/// `loss`; callers zero them between optimisation steps.
template <class T>
void backward(const Tensor<T>& loss);

namespace detail {

/// True when an active tape exists and any input requires a gradient.
template <class T>
bool should_record(std::initializer_list<const Tensor<T>*> inputs) {
  if (Tape::active() == nullptr) return false;
  for (const auto* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

/// Marks `out` as differentiable and records `rule(grad_out)` on the active
/// tape. The rule only runs when the output received a gradient.
template <class T, class Rule>
void record(Tensor<T>& out, Rule&& rule) {
  Tape* tape = Tape::active();
  out.set_requires_grad(true);
  out.node().tape = tape;
  auto node = out.node_ptr();
  tape->push([node, rule = std::forward<Rule>(rule)]() mutable {
    if (node->grad.empty()) return;
    rule(std::span<const T>(node->grad));
  });
}

void check_finite(std::span<const float> values, const char* op);
void check_finite(std::span<const double> values, const char* op);

}  // namespace detail

}  // namespace afecnn
