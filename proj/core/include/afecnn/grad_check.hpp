#pragma once

// Central-difference verification of tape gradients, in 64-bit arithmetic.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "afecnn/tensor.hpp"

namespace afecnn {

struct GradCoordinate {
  std::size_t tensor = 0;  // index into the parameter list
  std::size_t element = 0;
};

/// `count` coordinates cycling through the tensors of `params`, each at a
/// uniformly drawn element, so small tensors are covered as often as large
/// ones. Deterministic in `seed`.
std::vector<GradCoordinate> sample_coordinates(std::span<const Tensor<double>> params,
                                               std::size_t count, std::uint64_t seed);

/// Every coordinate of every parameter.
std::vector<GradCoordinate> all_coordinates(std::span<const Tensor<double>> params);

/// max over `points` of |analytic - numeric| / max(1, |analytic|).
///
/// `loss_fn` must rebuild the computation from `params` on each call and
/// return a scalar. Analytic gradients come from one backward pass on a fresh
/// tape; numeric ones from central differences with step `h`.
template <class LossFn>
double grad_check(LossFn&& loss_fn, std::span<Tensor<double>> params,
                  std::span<const GradCoordinate> points, double h = 1e-5) {
  for (auto& p : params) p.zero_grad();
  {
    Tape tape;
    Tensor<double> loss = loss_fn();
    backward(loss);
  }
  double worst = 0.0;
  for (const auto& pt : points) {
    Tensor<double>& p = params[pt.tensor];
    const double analytic = p.has_grad() ? p.grad()[pt.element] : 0.0;
    auto values = p.mutable_data();
    const double saved = values[pt.element];
    values[pt.element] = saved + h;
    const double up = loss_fn().item();
    values[pt.element] = saved - h;
    const double down = loss_fn().item();
    values[pt.element] = saved;
    const double numeric = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic)));
  }
  return worst;
}

}  // namespace afecnn
