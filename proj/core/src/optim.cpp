#include "afecnn/optim.hpp"

#include <cmath>
#include <string>

namespace afecnn {

template <class T>
AdamState<T> AdamState<T>::for_parameters(std::span<const Tensor<T>> params) {
  AdamState state;
  state.m.reserve(params.size());
  state.v.reserve(params.size());
  for (const auto& p : params) {
    state.m.emplace_back(p.size(), T(0));
    state.v.emplace_back(p.size(), T(0));
  }
  return state;
}

template <class T>
void adam_step(std::span<Tensor<T>> params, AdamState<T>& state, T lr) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw UsageError("adam_step: state tracks " + std::to_string(state.m.size()) + " parameters, got " +
                     std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m[i].size() != params[i].size() || state.v[i].size() != params[i].size() ||
        (params[i].has_grad() && params[i].grad().size() != params[i].size())) {
      throw UsageError("adam_step: state/gradient shape mismatch for parameter " + std::to_string(i) +
                       " of shape " + shape_string(params[i].shape()));
    }
  }
  ++state.step_count;
  const T t = static_cast<T>(state.step_count);
  const T correction1 = T(1) - std::pow(state.beta1, t);
  const T correction2 = T(1) - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].has_grad()) continue;
    auto p = params[i].mutable_data();
    const auto g = params[i].grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = state.beta1 * m[j] + (T(1) - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (T(1) - state.beta2) * g[j] * g[j];
      const T m_hat = m[j] / correction1;
      const T v_hat = v[j] / correction2;
      p[j] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step<float>(std::span<Tensor<float>>, AdamState<float>&, float);
template void adam_step<double>(std::span<Tensor<double>>, AdamState<double>&, double);

}  // namespace afecnn
