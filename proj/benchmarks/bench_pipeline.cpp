#include <benchmark/benchmark.h>

#include <random>

#include "afecnn/encoder.hpp"
#include "afecnn/ops.hpp"
#include "afecnn/recognizer.hpp"

using namespace afecnn;

namespace {

Tensor<float> noise(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> d(-1, 1);
  Tensor<float> t(std::move(shape));
  for (float& v : t.mutable_data()) v = d(rng);
  return t;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = noise({n, n}, 1), b = noise({n, n}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(ops::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(16)->Arg(64)->Arg(256);

void BM_Conv2d(benchmark::State& state) {
  const auto cin = static_cast<std::size_t>(state.range(0)), hw = static_cast<std::size_t>(state.range(1));
  const auto x = noise({cin, hw, hw}, 3), k = noise({2 * cin, cin, 3, 3}, 4), b = noise({2 * cin}, 5);
  for (auto _ : state) benchmark::DoNotOptimize(ops::conv2d(x, k, b, 2, 1));
}
BENCHMARK(BM_Conv2d)->Args({3, 64})->Args({32, 16})->Args({64, 4});

void BM_Encode(benchmark::State& state) {
  const ModelConfig cfg(Topology::humanoid15());
  const auto p = ModelParams<float>::initialize(cfg, 1);
  const auto x = noise({64, 15, 3}, 6);
  for (auto _ : state) benchmark::DoNotOptimize(encode(x, p, cfg));
}
BENCHMARK(BM_Encode)->Unit(benchmark::kMicrosecond);

void BM_Forward(benchmark::State& state) {
  ModelConfig cfg(state.range(0) == 25 ? Topology::ntu25() : Topology::humanoid15(), 60);
  const auto p = ModelParams<float>::initialize(cfg, 1);
  const auto x = noise({64, cfg.joints(), 3}, 7);
  for (auto _ : state) benchmark::DoNotOptimize(sequence_logits(x, p, cfg));
  state.counters["flops"] = static_cast<double>(count_flops(cfg).total_flops);
}
BENCHMARK(BM_Forward)->Arg(15)->Arg(25)->Unit(benchmark::kMillisecond);

void BM_TrainSample(benchmark::State& state) {
  const ModelConfig cfg(Topology::humanoid15());
  auto p = ModelParams<float>::initialize(cfg, 1);
  const auto x = noise({64, 15, 3}, 8);
  const int label = 2;
  for (auto _ : state) {
    Tape tape;
    const auto logits = ops::reshape(sequence_logits(x, p, cfg), {1, cfg.classes});
    backward(ops::cross_entropy(logits, std::span<const int>(&label, 1)));
  }
}
BENCHMARK(BM_TrainSample)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
