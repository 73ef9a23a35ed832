// Serial reference kernels against their OpenMP counterparts.
#include <random>

#include <benchmark/benchmark.h>

#include "gapkit/kernels.hpp"

namespace {

gapkit::Matrix random_matrix(gapkit::Index rows, gapkit::Index cols) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  gapkit::Matrix m(rows, cols);
  for (gapkit::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
  return m;
}

void BM_GramSerial(benchmark::State& st) {
  const auto a = random_matrix(st.range(0), 128);
  for (auto _ : st) benchmark::DoNotOptimize(gapkit::kernels::serial::gram(a, a));
}
void BM_GramParallel(benchmark::State& st) {
  const auto a = random_matrix(st.range(0), 128);
  for (auto _ : st) benchmark::DoNotOptimize(gapkit::kernels::gram(a, a));
}
void BM_SqEuclidSerial(benchmark::State& st) {
  const auto a = random_matrix(st.range(0), 128);
  for (auto _ : st) benchmark::DoNotOptimize(gapkit::kernels::serial::pairwise_sq_euclidean(a, a));
}
void BM_SqEuclidParallel(benchmark::State& st) {
  const auto a = random_matrix(st.range(0), 128);
  for (auto _ : st) benchmark::DoNotOptimize(gapkit::kernels::pairwise_sq_euclidean(a, a));
}
void BM_QueryStatsSerial(benchmark::State& st) {
  const auto z = random_matrix(2 * st.range(0), 128);
  for (auto _ : st) benchmark::DoNotOptimize(gapkit::kernels::serial::query_stats(z, 0, z.rows()));
}
void BM_QueryStatsParallel(benchmark::State& st) {
  const auto z = random_matrix(2 * st.range(0), 128);
  for (auto _ : st) benchmark::DoNotOptimize(gapkit::kernels::query_stats(z, 0, z.rows()));
}

}  // namespace

BENCHMARK(BM_GramSerial)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GramParallel)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SqEuclidSerial)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SqEuclidParallel)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_QueryStatsSerial)->Arg(250)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_QueryStatsParallel)->Arg(250)->Arg(1000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
