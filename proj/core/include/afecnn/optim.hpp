#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "afecnn/tensor.hpp"

namespace afecnn {

/// Adam moments for an ordered list of parameters.
template <class T>
struct AdamState {
  std::uint64_t step_count = 0;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T epsilon = T(1e-8);

  /// Zero moments shaped like `params`.
  static AdamState for_parameters(std::span<const Tensor<T>> params);
};

/// One bias-corrected Adam update of every parameter from its `.grad()`.
/// Parameters with no accumulated gradient are treated as having zero
/// gradient. Throws UsageError when the state does not match `params`.
template <class T>
void adam_step(std::span<Tensor<T>> params, AdamState<T>& state, T lr);

}  // namespace afecnn
