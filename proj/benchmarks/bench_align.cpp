#include <benchmark/benchmark.h>

#include <random>

#include "tam/align.hpp"
#include "tam/episodic.hpp"
#include "tam/synthetic.hpp"

namespace {

tam::DistanceMatrix random_distances(std::size_t t) {
  std::mt19937_64 rng(t);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  tam::Matrix m(t, t);
  for (double& x : m.values()) x = u(rng);
  return tam::DistanceMatrix(std::move(m));
}

void BM_HardTam(benchmark::State& state) {
  const auto dp = tam::pad_boundary(random_distances(static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(tam::hard_align_tam(dp).score);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_HardTam)->RangeMultiplier(2)->Range(8, 256)->Complexity(benchmark::oNSquared);

void BM_SoftTam(benchmark::State& state) {
  const auto dp = tam::pad_boundary(random_distances(static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(tam::soft_align_tam(dp, 0.1).score);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SoftTam)->RangeMultiplier(2)->Range(8, 256)->Complexity(benchmark::oNSquared);

void BM_PlainDtw(benchmark::State& state) {
  const auto d = random_distances(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(tam::hard_align_plain_dtw(d).score);
}
BENCHMARK(BM_PlainDtw)->RangeMultiplier(2)->Range(8, 256);

void BM_CosineDistances(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  const auto t = static_cast<std::size_t>(state.range(0));
  tam::Matrix a(t, 64), b(t, 64);
  for (double& x : a.values()) x = g(rng);
  for (double& x : b.values()) x = g(rng);
  const tam::FeatureSequence sa(a), sb(b);
  for (auto _ : state) benchmark::DoNotOptimize(tam::cosine_distance_matrix(sa, sb));
}
BENCHMARK(BM_CosineDistances)->Arg(8)->Arg(64);

void BM_EvaluateEpisodes(benchmark::State& state) {
  tam::GeneratorConfig cfg;
  cfg.confound_mode = tam::ConfoundMode::PermutedAtoms;
  cfg.atom_sets = 5;
  const auto pool = tam::build_dataset(cfg).pool(tam::Split::MetaTest);
  const auto strategy = tam::MatchingStrategy::hard(tam::MatcherKind::TAM);
  for (auto _ : state) {
    const auto m = tam::evaluate(pool, 5, 1, strategy, 100, 1,
                                 {.threads = static_cast<unsigned>(state.range(0))});
    benchmark::DoNotOptimize(m.accuracy);
  }
}
BENCHMARK(BM_EvaluateEpisodes)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
