/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#include <benchmark/benchmark.h>

#include "seqforge/generation.hpp"
#include "seqforge/model.hpp"
#include "seqforge/oracle.hpp"
#include "seqforge/training.hpp"

namespace seqforge {
namespace {

ModelConfig conditioned_tiny(AttentionMode mode) {
  ModelConfig cfg = ModelConfig::tiny(mode);
  cfg.conditioning.num_categories = 4;
  return cfg;
}

void BM_ForwardTiny(benchmark::State& state) {
  const Checkpoint c = init_checkpoint(conditioned_tiny(AttentionMode::Causal), 1);
  const ParameterSet<float>& params = c.params;
  const Transformer<float> model(c.config, params);
  const DnaSequence seq = random_sequences(1, static_cast<std::size_t>(state.range(0)), 2).front();
  ModelInput in;
  in.condition.categories = {1};
  in.tokens = ar_tokens(seq);
  const auto x = model.embed(in);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardTiny)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_ForwardBackwardTiny(benchmark::State& state) {
  const Checkpoint c = init_checkpoint(conditioned_tiny(AttentionMode::Causal), 1);
  const Transformer<float> model(c.config, c.params);
  const DnaSequence seq = random_sequences(1, static_cast<std::size_t>(state.range(0)), 3).front();
  ModelInput in;
  in.condition.categories = {1};
  in.tokens = ar_tokens(seq);
  const std::vector<int> targets = ar_row_targets(1, seq);
  ParameterSet<float> grads = c.params.zeros_like();
  for (auto _ : state) model.backward(model.loss(in, targets), grads);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackwardTiny)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_GenerateAr(benchmark::State& state) {
  const Checkpoint c = init_checkpoint(conditioned_tiny(AttentionMode::Causal), 1);
  GenConfig cfg;
  cfg.max_len = static_cast<std::size_t>(state.range(0));
  Condition cond;
  cond.categories = {2};
  Rng rng = stream_rng(4, 0);
  for (auto _ : state) benchmark::DoNotOptimize(generate_ar(c, cond, cfg, rng));
}
BENCHMARK(BM_GenerateAr)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_GenerateMlm(benchmark::State& state) {
  const Checkpoint c = init_checkpoint(conditioned_tiny(AttentionMode::Bidirectional), 1);
  GenConfig cfg;
  cfg.fixed_len = 128;
  cfg.unmask_steps = static_cast<std::size_t>(state.range(0));
  Condition cond;
  cond.categories = {2};
  Rng rng = stream_rng(5, 0);
  for (auto _ : state) benchmark::DoNotOptimize(generate_mlm(c, cond, cfg, rng));
}
BENCHMARK(BM_GenerateMlm)->Arg(1)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace seqforge
