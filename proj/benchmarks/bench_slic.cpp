#include <benchmark/benchmark.h>

#include "eraseg/rng.hpp"
#include "eraseg/superpixel.hpp"

namespace {

eraseg::ImageGrid speckle_image(eraseg::Extents dims, std::uint64_t seed) {
  eraseg::ImageGrid g(std::move(dims));
  eraseg::Rng rng(seed);
  for (double& v : g.data)
    v = std::clamp(150.0 * (1.0 + 0.15 * rng.normal()), 0.0, 255.0);
  return g;
}

void BM_Slic2d(benchmark::State& state) {
  const auto image = speckle_image({100, 150}, 1);
  const int n_segment = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto map = eraseg::slic(image, n_segment);
    benchmark::DoNotOptimize(map.labels.data());
  }
}
BENCHMARK(BM_Slic2d)->Arg(100)->Arg(1000)->Arg(2000);

void BM_Slic3d(benchmark::State& state) {
  const auto image = speckle_image({40, 40, 40}, 2);
  for (auto _ : state) {
    auto map = eraseg::slic(image, static_cast<int>(state.range(0)));
    benchmark::DoNotOptimize(map.labels.data());
  }
}
BENCHMARK(BM_Slic3d)->Arg(200)->Arg(500);

}  // namespace
