#include "afecnn/grad_check.hpp"

namespace afecnn {

std::vector<GradCoordinate> sample_coordinates(std::span<const Tensor<double>> params,
                                               std::size_t count, std::uint64_t seed) {
  if (params.empty()) return {};
  std::mt19937_64 rng(seed);
  std::vector<GradCoordinate> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t t = i % params.size();
    std::uniform_int_distribution<std::size_t> pick(0, params[t].size() - 1);
    out.push_back({t, pick(rng)});
  }
  return out;
}

std::vector<GradCoordinate> all_coordinates(std::span<const Tensor<double>> params) {
  std::vector<GradCoordinate> out;
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (std::size_t e = 0; e < params[t].size(); ++e) out.push_back({t, e});
  }
  return out;
}

}  // namespace afecnn
