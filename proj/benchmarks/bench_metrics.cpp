/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#include <benchmark/benchmark.h>

#include "seqforge/metrics.hpp"
#include "seqforge/oracle.hpp"

namespace seqforge {
namespace {

void BM_Diversity(benchmark::State& state) {
  const auto seqs = random_sequences(static_cast<std::size_t>(state.range(0)), 200, 1);
  const CategorizedSequences groups{{"a", {seqs.begin(), seqs.begin() + state.range(0) / 2}},
                                    {"b", {seqs.begin() + state.range(0) / 2, seqs.end()}}};
  for (auto _ : state) benchmark::DoNotOptimize(diversity(groups));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 200);
}
BENCHMARK(BM_Diversity)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Ks(benchmark::State& state) {
  Rng rng = stream_rng(2, 0);
  std::vector<double> a(static_cast<std::size_t>(state.range(0)));
  std::vector<double> b(a.size());
  for (auto& x : a) x = uniform01(rng);
  for (auto& x : b) x = uniform01(rng);
  for (auto _ : state) benchmark::DoNotOptimize(ks_statistic(a, b));
}
BENCHMARK(BM_Ks)->Arg(1000)->Arg(100000);

void BM_Fbd(benchmark::State& state) {
  const auto cols = static_cast<Eigen::Index>(state.range(0));
  const Matrix x = Matrix::Random(2000, cols);
  const Matrix y = Matrix::Random(2000, cols) * 1.5;
  for (auto _ : state) benchmark::DoNotOptimize(fbd(x, y));
}
BENCHMARK(BM_Fbd)->Arg(16)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Fluency(benchmark::State& state) {
  const auto corpus = random_sequences(500, 200, 3);
  const MarkovModel model = MarkovModel::fit(corpus, static_cast<std::size_t>(state.range(0)));
  const auto seqs = random_sequences(100, 200, 4);
  for (auto _ : state) benchmark::DoNotOptimize(fluency(seqs, model));
}
BENCHMARK(BM_Fluency)->Arg(3)->Arg(6)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace seqforge
