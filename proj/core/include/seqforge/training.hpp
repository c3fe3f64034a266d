/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "seqforge/model.hpp"
#include "seqforge/rng.hpp"

namespace seqforge {

enum class Objective { Autoregressive, MaskedRecovery };

struct TrainConfig {
  Objective objective = Objective::Autoregressive;
  double learning_rate = 1e-4;
  /// Fraction of all optimizer steps spent in linear warmup.
  double warmup_fraction = 0.10;
  std::size_t batch_size = 32;
  std::size_t epochs = 1;
  /// Caps the total number of optimizer steps across epochs.
  std::optional<std::size_t> max_steps;
  double mlm_mask_rate = 0.15;
  std::uint64_t seed = 0;
  double weight_decay = 0.01;
  /// Probability of replacing an example's categories with the null
  /// category (requires a model with null_category).
  double condition_dropout = 0.0;
  /// Stop after the first epoch whose selection loss falls below this.
  std::optional<double> stop_below;

  /// Every violated constraint, in declaration order.
  std::vector<std::string> problems() const;
  void validate() const;
};

struct AdamWHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  ParameterSet<T> m;
  ParameterSet<T> v;
  std::uint64_t t = 0;
};

template <typename T>
AdamState<T> make_adam_state(const ParameterSet<T>& params) {
  return AdamState<T>{params.zeros_like(), params.zeros_like(), 0};
}

/// One bias-corrected AdamW update with decoupled weight decay
/// (p <- p - lr*wd*p, then the Adam step). A non-finite gradient raises
/// NumericError naming the tensor before anything is modified.
template <typename T>
void adamw_step(ParameterSet<T>& params, const ParameterSet<T>& grads, AdamState<T>& state, double lr,
                double weight_decay, const AdamWHyper& hyper = {});

extern template void adamw_step<float>(ParameterSet<float>&, const ParameterSet<float>&, AdamState<float>&,
                                       double, double, const AdamWHyper&);
extern template void adamw_step<double>(ParameterSet<double>&, const ParameterSet<double>&, AdamState<double>&,
                                        double, double, const AdamWHyper&);

/// max(1, round(rate * n)) distinct indices in [0, n), sorted ascending.
std::vector<std::size_t> select_mask(std::size_t n, double rate, Rng& rng);

/// Linear ramp from 0 to cfg.learning_rate over the warmup span, constant
/// afterwards.
double lr_at(std::size_t step, std::size_t total_steps, const TrainConfig& cfg);

struct Example {
  DnaSequence sequence;
  Condition condition;
  std::string label;
};
using Dataset = std::vector<Example>;

struct CurvePoint {
  std::size_t step = 0;
  double loss = 0.0;
};

struct EpochReport {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double train_loss = 0.0;
  std::optional<double> val_loss;
  bool improved = false;
};

struct TrainResult {
  /// Parameters with the lowest selection loss (validation loss when a
  /// validation set is given, otherwise the epoch's mean training loss).
  Checkpoint best;
  Checkpoint last;
  std::vector<CurvePoint> train_curve;
  std::vector<CurvePoint> val_curve;
  std::vector<double> step_losses;
  std::size_t best_epoch = 0;
  std::size_t steps = 0;
};

using EpochCallback = std::function<void(const EpochReport&)>;

/// Builds the model input and per-row targets of one example for the
/// configured objective; the MLM mask is drawn from rng.
std::pair<ModelInput, std::vector<int>> make_training_pair(const ModelConfig& config, const Example& example,
                                                           Objective objective, double mask_rate, Rng& rng);

/// Minimizes the configured objective. Throws DomainError on an empty
/// dataset and NumericError (naming the batch) on a non-finite loss.
TrainResult train(const TrainConfig& cfg, const Dataset& train_set, const Dataset& validation,
                  Checkpoint model, const EpochCallback& on_epoch = {});

/// Token-weighted mean loss over a dataset. MLM masks come from `seed`.
double evaluate_loss(const Checkpoint& ckpt, const Dataset& data, Objective objective, double mask_rate,
                     std::uint64_t seed);

/// "step,loss" header followed by one row per point.
void write_loss_curve(const std::filesystem::path& path, const std::vector<CurvePoint>& curve);

}  // namespace seqforge
