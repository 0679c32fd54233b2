#include <benchmark/benchmark.h>

#include <vector>

#include "partstat/correlated.hpp"
#include "partstat/ensembles.hpp"
#include "partstat/oracle.hpp"
#include "partstat/sampling.hpp"

using namespace partstat;

namespace {

void BM_ZgcDirect(benchmark::State& state) {
  const auto q = QVector::bose({0.8, 0.6, 0.35, 0.1});
  const auto total = static_cast<Count>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(zgc_direct(q, total));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ZgcDirect)->RangeMultiplier(2)->Range(8, 128)->Complexity();

void BM_ZgcClosed(benchmark::State& state) {
  const auto q = QVector::bose({0.8, 0.6, 0.35, 0.1});
  for (auto _ : state) benchmark::DoNotOptimize(zgc_closed(q, 128));
}
BENCHMARK(BM_ZgcClosed);

void BM_ConditionalMean(benchmark::State& state) {
  const auto q = QVector::bose({0.9, 0.7, 0.5, 0.3});
  for (auto _ : state) benchmark::DoNotOptimize(conditional_mean_given_N(q, 0, 20));
}
BENCHMARK(BM_ConditionalMean);

void BM_SampleBatch(benchmark::State& state) {
  const auto q = QVector::bose({0.5, 0.3, 0.2});
  const auto threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_batch(EnsembleKind::bose_einstein(), q, 1, 100000, threads));
  }
  state.SetItemsProcessed(state.iterations() * 100000);
}
BENCHMARK(BM_SampleBatch)->Arg(1)->Arg(4)->UseRealTime();

void BM_SampleCorrelated(benchmark::State& state) {
  const CorrelatedSampler sampler(CorrelatedParams({0.6, 0.4, 0.3}, {0.5, 0.7, 0.2}, 0.8));
  SeededSource src(1);
  for (auto _ : state) benchmark::DoNotOptimize(sampler(src));
}
BENCHMARK(BM_SampleCorrelated);

void BM_ChainStep(benchmark::State& state) {
  const ChainSpec spec({0.5, 0.3, 0.8}, {1.0, 1.0, 2.0});
  SeededSource src(1);
  Occupancy n = Occupancy::zeros(3);
  for (auto _ : state) {
    n = chain_step(n, spec, src);
    benchmark::DoNotOptimize(n);
  }
}
BENCHMARK(BM_ChainStep);

void BM_MixingGap(benchmark::State& state) {
  const CorrelatedParams p({0.5, 0.4, 0.3}, {0.3, 0.2, 0.25}, 4.0 / 3);
  for (auto _ : state) benchmark::DoNotOptimize(mixing_entropy_gap(p));
}
BENCHMARK(BM_MixingGap)->Unit(benchmark::kMillisecond);

void BM_VerificationSuite(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(run_verification_suite());
}
BENCHMARK(BM_VerificationSuite)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace

BENCHMARK_MAIN();
