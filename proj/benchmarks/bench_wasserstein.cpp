#include <benchmark/benchmark.h>

#include <algorithm>

#include "eraseg/metrics.hpp"
#include "eraseg/rng.hpp"

namespace {

std::vector<double> sorted_sample(std::size_t n, std::uint64_t seed) {
  eraseg::Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(0.0, 255.0);
  std::sort(v.begin(), v.end());
  return v;
}

void BM_WassersteinSortedEqual(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = sorted_sample(n, 1);
  const auto b = sorted_sample(n, 2);
  for (auto _ : state)
    benchmark::DoNotOptimize(eraseg::wasserstein_1d_sorted(a, b));
}
BENCHMARK(BM_WassersteinSortedEqual)->Arg(1000)->Arg(15000);

void BM_WassersteinSortedUnequal(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = sorted_sample(n, 3);
  const auto b = sorted_sample(n / 3 + 1, 4);
  for (auto _ : state)
    benchmark::DoNotOptimize(eraseg::wasserstein_1d_sorted(a, b));
}
BENCHMARK(BM_WassersteinSortedUnequal)->Arg(1000)->Arg(15000);

void BM_WassersteinUnsorted(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  eraseg::IntensitySample a{sorted_sample(n, 5)};
  eraseg::IntensitySample b{sorted_sample(n, 6)};
  std::reverse(a.values.begin(), a.values.end());
  for (auto _ : state)
    benchmark::DoNotOptimize(eraseg::wasserstein_1d(a, b));
}
BENCHMARK(BM_WassersteinUnsorted)->Arg(15000);

}  // namespace
