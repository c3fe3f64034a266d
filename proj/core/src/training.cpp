/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#include "seqforge/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <spdlog/spdlog.h>

namespace seqforge {

std::vector<std::string> TrainConfig::problems() const {
  std::vector<std::string> out;
  if (!(learning_rate > 0.0)) out.push_back("learning_rate must be > 0");
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) out.push_back("warmup_fraction must lie in [0, 1)");
  if (batch_size == 0) out.push_back("batch_size must be positive");
  if (epochs == 0) out.push_back("epochs must be positive");
  if (!(mlm_mask_rate > 0.0 && mlm_mask_rate < 1.0)) out.push_back("mlm_mask_rate must lie in (0, 1)");
  if (!(weight_decay >= 0.0)) out.push_back("weight_decay must be >= 0");
  if (!(condition_dropout >= 0.0 && condition_dropout < 1.0)) out.push_back("condition_dropout must lie in [0, 1)");
  if (max_steps && *max_steps == 0) out.push_back("max_steps must be positive");
  return out;
}

void TrainConfig::validate() const {
  const auto p = problems();
  if (p.empty()) return;
  std::string msg = "invalid training config:";
  for (const auto& s : p) msg += " " + s + ";";
  throw DomainError(msg);
}

template <typename T>
void adamw_step(ParameterSet<T>& params, const ParameterSet<T>& grads, AdamState<T>& state, double lr,
                double weight_decay, const AdamWHyper& hyper) {
  for (const auto& [name, g] : grads) {
    if (!g.allFinite()) throw NumericError("non-finite gradient for parameter " + name);
    const auto& p = params.at(name);
    if (p.rows() != g.rows() || p.cols() != g.cols()) throw ShapeError("gradient shape mismatch for " + name);
  }
  state.t += 1;
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.t));
  const T b1 = T(hyper.beta1), b2 = T(hyper.beta2);
  const T decay = T(1.0 - lr * weight_decay);
  const T step = T(lr / c1);
  const T inv_sqrt_c2 = T(1.0 / std::sqrt(c2));
  const T eps = T(hyper.eps);
  for (auto& [name, p] : params) {
    const auto& g = grads.at(name);
    auto& m = state.m.at(name);
    auto& v = state.v.at(name);
    m = b1 * m + (T(1) - b1) * g;
    v = b2 * v + (T(1) - b2) * g.cwiseProduct(g);
    p *= decay;
    p.array() -= step * m.array() / (v.array().sqrt() * inv_sqrt_c2 + eps);
  }
}

template void adamw_step<float>(ParameterSet<float>&, const ParameterSet<float>&, AdamState<float>&, double,
                                double, const AdamWHyper&);
template void adamw_step<double>(ParameterSet<double>&, const ParameterSet<double>&, AdamState<double>&,
                                 double, double, const AdamWHyper&);

std::vector<std::size_t> select_mask(std::size_t n, double rate, Rng& rng) {
  if (n == 0) throw DomainError("select_mask: empty sequence");
  if (!(rate > 0.0 && rate < 1.0)) throw DomainError("select_mask: rate must lie in (0, 1)");
  const auto k = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(rate * static_cast<double>(n))), 1, n);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double lr_at(std::size_t step, std::size_t total_steps, const TrainConfig& cfg) {
  const double warmup = cfg.warmup_fraction * static_cast<double>(total_steps);
  if (warmup <= 0.0 || static_cast<double>(step) >= warmup) return cfg.learning_rate;
  return cfg.learning_rate * static_cast<double>(step) / warmup;
}

std::pair<ModelInput, std::vector<int>> make_training_pair(const ModelConfig& config, const Example& example,
                                                           Objective objective, double mask_rate, Rng& rng) {
  ModelInput input;
  input.condition = example.condition;
  // Prefix length follows from the condition: protein rows, one row per
  // category, pooled-signal rows.
  std::size_t prefix = example.condition.categories.size();
  if (example.condition.protein) prefix += static_cast<std::size_t>(example.condition.protein->rows());
  if (config.conditioning.signal == SignalIntegration::Prefix) prefix += config.conditioning.signal_prefix_rows;

  if (objective == Objective::Autoregressive) {
    input.tokens = ar_tokens(example.sequence);
    return {std::move(input), ar_row_targets(prefix, example.sequence)};
  }
  auto masked = select_mask(example.sequence.size(), mask_rate, rng);
  input.tokens = mlm_tokens(example.sequence, masked);
  for (auto& m : masked) m += prefix;
  return {std::move(input), mlm_row_targets(prefix, example.sequence, masked)};
}

namespace {

// Shuffled batches, each drawn from a single sequence length.
std::vector<std::vector<std::size_t>> make_batches(const Dataset& data, std::size_t batch_size, Rng& rng) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return data[a].sequence.size() < data[b].sequence.size();
  });
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < order.size();) {
    const std::size_t len = data[order[i]].sequence.size();
    std::vector<std::size_t> batch;
    while (i < order.size() && batch.size() < batch_size && data[order[i]].sequence.size() == len) {
      batch.push_back(order[i++]);
    }
    batches.push_back(std::move(batch));
  }
  std::shuffle(batches.begin(), batches.end(), rng);
  return batches;
}

std::size_t count_batches(const Dataset& data, std::size_t batch_size) {
  std::vector<std::size_t> lengths;
  lengths.reserve(data.size());
  for (const auto& e : data) lengths.push_back(e.sequence.size());
  std::sort(lengths.begin(), lengths.end());
  std::size_t batches = 0;
  for (std::size_t i = 0; i < lengths.size();) {
    std::size_t j = i;
    while (j < lengths.size() && lengths[j] == lengths[i]) ++j;
    batches += (j - i + batch_size - 1) / batch_size;
    i = j;
  }
  return batches;
}

}  // namespace

double evaluate_loss(const Checkpoint& ckpt, const Dataset& data, Objective objective, double mask_rate,
                     std::uint64_t seed) {
  if (data.empty()) throw DomainError("evaluate_loss: empty dataset");
  Transformer<float> model(ckpt.config, ckpt.params);
  Rng rng = stream_rng(seed, 0x5eed);
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& ex : data) {
    auto [input, targets] = make_training_pair(ckpt.config, ex, objective, mask_rate, rng);
    const auto g = model.loss(input, std::move(targets));
    total += static_cast<double>(g.loss) * static_cast<double>(g.count);
    count += g.count;
  }
  return total / static_cast<double>(count);
}

TrainResult train(const TrainConfig& cfg, const Dataset& train_set, const Dataset& validation, Checkpoint model,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_set.empty()) throw DomainError("training dataset is empty");
  model.config.validate();
  const bool dropout = cfg.condition_dropout > 0.0;
  if (dropout && !model.config.conditioning.null_category) {
    throw DomainError("condition_dropout needs a model with a null category");
  }
  if (cfg.objective == Objective::Autoregressive && model.config.mode != AttentionMode::Causal) {
    throw DomainError("next-token training needs a causal model");
  }
  if (cfg.objective == Objective::MaskedRecovery && model.config.mode != AttentionMode::Bidirectional) {
    throw DomainError("masked-recovery training needs a bidirectional model");
  }

  const std::size_t per_epoch = count_batches(train_set, cfg.batch_size);
  std::size_t total_steps = per_epoch * cfg.epochs;
  if (cfg.max_steps) total_steps = std::min(total_steps, *cfg.max_steps);

  Rng rng = stream_rng(cfg.seed, 0);
  Transformer<float> net(model.config, model.params);
  ParameterSet<float> grads = model.params.zeros_like();
  AdamState<float> adam = make_adam_state(model.params);

  TrainResult result;
  result.best = model;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t step = 0;
  std::size_t batch_index = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs && step < total_steps; ++epoch) {
    double epoch_loss = 0.0;
    std::size_t epoch_count = 0;
    for (const auto& batch : make_batches(train_set, cfg.batch_size, rng)) {
      if (step >= total_steps) break;
      std::vector<LossGraph<float>> graphs;
      graphs.reserve(batch.size());
      std::size_t batch_count = 0;
      for (std::size_t idx : batch) {
        Example ex = train_set[idx];
        if (dropout && uniform01(rng) < cfg.condition_dropout) {
          ex.condition.categories.assign(ex.condition.categories.size(), model.config.null_category_id());
        }
        auto [input, targets] = make_training_pair(model.config, ex, cfg.objective, cfg.mlm_mask_rate, rng);
        graphs.push_back(net.loss(input, std::move(targets)));
        batch_count += graphs.back().count;
      }
      double batch_loss = 0.0;
      grads.set_zero();
      for (auto& g : graphs) {
        batch_loss += static_cast<double>(g.loss) * static_cast<double>(g.count);
        g.dlogits *= static_cast<float>(static_cast<double>(g.count) / static_cast<double>(batch_count));
        net.backward(g, grads);
      }
      batch_loss /= static_cast<double>(batch_count);
      if (!std::isfinite(batch_loss)) {
        throw NumericError("non-finite loss in batch " + std::to_string(batch_index));
      }
      ++step;
      ++batch_index;
      adamw_step(model.params, grads, adam, lr_at(step, total_steps, cfg), cfg.weight_decay);
      result.step_losses.push_back(batch_loss);
      epoch_loss += batch_loss * static_cast<double>(batch_count);
      epoch_count += batch_count;
    }

    EpochReport report;
    report.epoch = epoch;
    report.step = step;
    report.train_loss = epoch_loss / static_cast<double>(std::max<std::size_t>(epoch_count, 1));
    result.train_curve.push_back({step, report.train_loss});
    double selection = report.train_loss;
    if (!validation.empty()) {
      model.step = step;
      report.val_loss = evaluate_loss(model, validation, cfg.objective, cfg.mlm_mask_rate, cfg.seed);
      result.val_curve.push_back({step, *report.val_loss});
      selection = *report.val_loss;
    }
    if (selection < best_loss) {
      best_loss = selection;
      result.best = model;
      result.best.step = step;
      result.best_epoch = epoch;
      report.improved = true;
    }
    spdlog::info("epoch {} step {} train_loss {:.5f}{}", epoch, step, report.train_loss,
                 report.val_loss ? fmt::format(" val_loss {:.5f}", *report.val_loss) : std::string());
    if (on_epoch) on_epoch(report);
    if (cfg.stop_below && selection < *cfg.stop_below) break;
  }

  model.step = step;
  result.last = std::move(model);
  result.steps = step;
  return result;
}

void write_loss_curve(const std::filesystem::path& path, const std::vector<CurvePoint>& curve) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing", path.string());
  out << "step,loss\n";
  char buf[64];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g\n", p.step, p.loss);
    out << buf;
  }
}

}  // namespace seqforge
