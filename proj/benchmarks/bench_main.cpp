#include <benchmark/benchmark.h>

#include "c2f/components.hpp"
#include "c2f/geometry.hpp"
#include "c2f/phantom.hpp"
#include "c2f/unet.hpp"

namespace {

using namespace c2f;

void BM_UNetForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const UNetSpec spec{1, 8, 2, 1};
  const auto w = init_weights(spec, 1);
  Tensor4<float> x({1, 1, n, n}, std::vector<float>(n * n, 0.5f));
  for (auto _ : state) benchmark::DoNotOptimize(unet_forward(spec, w, x));
}
BENCHMARK(BM_UNetForward)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_UNetBackward(benchmark::State& state) {
  const UNetSpec spec{1, 8, 2, 1};
  const auto w = init_weights(spec, 1);
  Tensor4<float> x({4, 1, 64, 64}, std::vector<float>(4 * 64 * 64, 0.5f));
  ForwardCache<float> cache;
  const auto y = unet_forward(spec, w, x, &cache);
  Tensor4<float> g(y.shape(), std::vector<float>(y.size(), 0.01f));
  for (auto _ : state) benchmark::DoNotOptimize(unet_backward(spec, w, cache, g));
}
BENCHMARK(BM_UNetBackward)->Unit(benchmark::kMillisecond);

void BM_LabelComponents(benchmark::State& state) {
  PhantomSpec spec;
  spec.seed = 3;
  const auto ph = generate_phantom(spec);
  const auto conn = state.range(0) == 6 ? Connectivity::faces : Connectivity::full;
  for (auto _ : state) benchmark::DoNotOptimize(label_components(ph.mask, conn));
}
BENCHMARK(BM_LabelComponents)->Arg(6)->Arg(26)->Unit(benchmark::kMillisecond);

void BM_ResampleVolume(benchmark::State& state) {
  PhantomSpec spec;
  spec.seed = 4;
  const auto ph = generate_phantom(spec);
  const Spacing target{3.0f, 1.5632f, 1.5632f};
  for (auto _ : state) benchmark::DoNotOptimize(resample_volume(ph.image, target, Interp::linear));
}
BENCHMARK(BM_ResampleVolume)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
