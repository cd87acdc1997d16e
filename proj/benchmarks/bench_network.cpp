#include <benchmark/benchmark.h>

#include "eraseg/learner.hpp"
#include "eraseg/neural.hpp"
#include "eraseg/rng.hpp"

namespace {

using namespace eraseg;

Tensor random_input(std::vector<int> shape, std::uint64_t seed) {
  Tensor t(std::move(shape));
  Rng rng(seed);
  for (double& v : t.data) v = rng.uniform();
  return t;
}

// Classifier-shaped stack: 3 conv blocks, GAP, dense head.
MultiHeadNetwork classifier_net(Rng& rng) {
  MultiHeadNetwork net;
  net.trunk = build_network(
      {LayerSpec::conv(2, 3, 1, 8), LayerSpec::relu(), LayerSpec::maxpool(2),
       LayerSpec::conv(2, 3, 8, 16), LayerSpec::relu(), LayerSpec::maxpool(2),
       LayerSpec::conv(2, 3, 16, 32), LayerSpec::relu(), LayerSpec::maxpool(2),
       LayerSpec::gap()},
      &rng);
  net.heads.push_back(build_network({LayerSpec::dense(32, 2)}, &rng));
  return net;
}

void BM_ClassifierForward(benchmark::State& state) {
  Rng rng(1);
  const MultiHeadNetwork net = classifier_net(rng);
  const Tensor input = random_input({1, 32, 32}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(forward(net, input)[0].data.data());
}
BENCHMARK(BM_ClassifierForward);

void BM_QNetForward(benchmark::State& state) {
  Rng rng(3);
  const MultiHeadNetwork net = build_qnet(2, 2, 16, 3, rng);
  const Tensor input = random_input({6, 16, 16}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(forward(net, input)[0].data.data());
}
BENCHMARK(BM_QNetForward);

void BM_QNetForwardBackward(benchmark::State& state) {
  Rng rng(5);
  MultiHeadNetwork net = build_qnet(2, 2, 16, 3, rng);
  const Tensor input = random_input({6, 16, 16}, 6);
  for (auto _ : state) {
    MultiHeadCache cache;
    const auto outs = forward(net, input, &cache);
    std::vector<Tensor> grads;
    for (const Tensor& out : outs) {
      Tensor g(out.shape);
      g[0] = 1.0;
      grads.push_back(std::move(g));
    }
    auto g = backward(net, cache, grads);
    benchmark::DoNotOptimize(g.trunk.layers.data());
  }
}
BENCHMARK(BM_QNetForwardBackward);

}  // namespace
