#include <benchmark/benchmark.h>

#include "eraseg/environment.hpp"
#include "eraseg/eraser.hpp"
#include "eraseg/synthetic.hpp"

namespace {

using namespace eraseg;

// Mean-intensity scorer: cheap stand-in so the benchmark isolates the
// environment cost profile.
Classifier mean_scorer() {
  Classifier clf;
  clf.input_dims = {32, 32};
  clf.norm = 255.0;
  clf.net.trunk = build_network({LayerSpec::gap()});
  clf.net.heads.push_back(build_network({LayerSpec::dense(1, 2)}));
  clf.net.heads[0].params[0].weight.data = {0.0, 40.0};
  clf.net.heads[0].params[0].bias.data = {0.0, -40.0 * 0.4};
  return clf;
}

void BM_EpisodeStep(benchmark::State& state) {
  SyntheticSpec spec;
  spec.dims = {128, 128};
  spec.seed = 11;
  const SyntheticSample sample = generate_synthetic(spec);
  const Classifier clf = mean_scorer();

  EpisodeConfig config;
  config.k_agents = 2;
  config.n_segment = static_cast<int>(state.range(0));
  const Extents norm = normalized_extents(sample.box.extent, config.norm_target);
  const ImageGrid source =
      build_eraser_source(sample.image, sample.box, norm, clf).patch;

  Episode episode(sample.image, sample.box, source, config, clf);
  const std::vector<Action> erase_all(2, Action::Erase);
  std::int64_t steps = 0;
  for (auto _ : state) {
    if (episode.terminal()) {
      state.PauseTiming();
      episode = Episode(sample.image, sample.box, source, config, clf);
      state.ResumeTiming();
    }
    benchmark::DoNotOptimize(episode.step(erase_all, clf, source).sc_normal);
    ++steps;
  }
  state.SetItemsProcessed(steps);
}
BENCHMARK(BM_EpisodeStep)->Arg(100)->Arg(1000)->Arg(2000);

void BM_EpisodeReset(benchmark::State& state) {
  SyntheticSpec spec;
  spec.dims = {128, 128};
  spec.seed = 12;
  const SyntheticSample sample = generate_synthetic(spec);
  const Classifier clf = mean_scorer();
  EpisodeConfig config;
  config.k_agents = 2;
  config.n_segment = static_cast<int>(state.range(0));
  const Extents norm = normalized_extents(sample.box.extent, config.norm_target);
  const ImageGrid source =
      build_eraser_source(sample.image, sample.box, norm, clf).patch;
  for (auto _ : state) {
    Episode episode(sample.image, sample.box, source, config, clf);
    benchmark::DoNotOptimize(episode.sc_normal());
  }
}
BENCHMARK(BM_EpisodeReset)->Arg(100)->Arg(2000);

}  // namespace
