// OpenMP kernels against the serial reference, plus whole-network SNN runs.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "snnconv/architectures.hpp"
#include "snnconv/kernels.hpp"
#include "snnconv/snn.hpp"
#include "snnconv/trainer.hpp"

using namespace snnconv;
namespace k = snnconv::kernels;

namespace {

std::vector<float> noise(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<float> d(0.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

k::ConvGeometry conv_geometry(const benchmark::State& s) {
  const auto c = std::size_t(s.range(0));
  return {c, 16, 16, c, 3, 1, 1};
}

template <bool Omp>
void BM_Conv2dForward(benchmark::State& state) {
  const auto g = conv_geometry(state);
  const std::size_t batch = 16;
  const auto in = noise(batch * g.in_size(), 1), w = noise(g.weight_size(), 2);
  std::vector<float> out(batch * g.out_size());
  for (auto _ : state) {
    if constexpr (Omp)
      k::conv2d_forward<float>(g, batch, in, w, out);
    else
      k::reference::conv2d_forward<float>(g, batch, in, w, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * std::int64_t(batch * g.out_size() * g.in_channels * 9));
}

template <bool Omp>
void BM_Conv2dBackwardWeights(benchmark::State& state) {
  const auto g = conv_geometry(state);
  const std::size_t batch = 16;
  const auto in = noise(batch * g.in_size(), 3), go = noise(batch * g.out_size(), 4);
  std::vector<float> gw(g.weight_size());
  for (auto _ : state) {
    if constexpr (Omp)
      k::conv2d_backward_weights<float>(g, batch, in, go, gw);
    else
      k::reference::conv2d_backward_weights<float>(g, batch, in, go, gw);
    benchmark::DoNotOptimize(gw.data());
  }
}

template <bool Omp>
void BM_LinearForward(benchmark::State& state) {
  const std::size_t batch = 32, n = std::size_t(state.range(0));
  const auto in = noise(batch * n, 5), w = noise(n * n, 6);
  std::vector<float> out(batch * n);
  for (auto _ : state) {
    if constexpr (Omp)
      k::linear_forward<float>(batch, n, n, in, w, out);
    else
      k::reference::linear_forward<float>(batch, n, n, in, w, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Omp>
void BM_AvgPoolForward(benchmark::State& state) {
  const k::PoolGeometry g{std::size_t(state.range(0)), 16, 16, 2, 2};
  const std::size_t batch = 32;
  const auto in = noise(batch * g.in_size(), 7);
  std::vector<float> out(batch * g.out_size());
  for (auto _ : state) {
    if constexpr (Omp)
      k::avgpool_forward<float>(g, batch, in, out);
    else
      k::reference::avgpool_forward<float>(g, batch, in, out);
    benchmark::DoNotOptimize(out.data());
  }
}

// Digit-sized CNN with random weights and unit thresholds.
void BM_SnnInference(benchmark::State& state) {
  auto g = init_weights(build_cnn({}), 1);
  const Tensor image({1, 8, 8}, noise(64, 8));
  g.preprocessing.scale = 3.0;
  const auto th = unity_thresholds(g);
  const std::size_t T = std::size_t(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_inference(g, th, image, {T, 9, false}).predicted);
  state.SetItemsProcessed(state.iterations() * std::int64_t(T));
}

void BM_SnnBatch(benchmark::State& state) {
  auto g = init_weights(build_cnn({}), 1);
  g.preprocessing.scale = 3.0;
  const Tensor images({16, 1, 8, 8}, noise(16 * 64, 10));
  const auto th = unity_thresholds(g);
  const int jobs = int(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(simulate_batch(g, th, images, {100, 11, false}, jobs).size());
}

}  // namespace

BENCHMARK(BM_Conv2dForward<false>)->Arg(8)->Arg(32)->Name("conv2d_forward/reference");
BENCHMARK(BM_Conv2dForward<true>)->Arg(8)->Arg(32)->Name("conv2d_forward/openmp");
BENCHMARK(BM_Conv2dBackwardWeights<false>)->Arg(8)->Arg(32)->Name("conv2d_backward_weights/reference");
BENCHMARK(BM_Conv2dBackwardWeights<true>)->Arg(8)->Arg(32)->Name("conv2d_backward_weights/openmp");
BENCHMARK(BM_LinearForward<false>)->Arg(64)->Arg(512)->Name("linear_forward/reference");
BENCHMARK(BM_LinearForward<true>)->Arg(64)->Arg(512)->Name("linear_forward/openmp");
BENCHMARK(BM_AvgPoolForward<false>)->Arg(32)->Name("avgpool_forward/reference");
BENCHMARK(BM_AvgPoolForward<true>)->Arg(32)->Name("avgpool_forward/openmp");
BENCHMARK(BM_SnnInference)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SnnBatch)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
