/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#include <algorithm>
#include <iostream>
#include <map>
#include <memory>
#include <set>

#include <fmt/format.h>

#include "commands.hpp"
#include "common.hpp"

namespace seqforge::cli {
namespace {

struct TrainOptions {
  CommonOptions common;
  std::filesystem::path train;
  std::optional<std::filesystem::path> train_conditions;
  std::optional<std::filesystem::path> val;
  std::optional<std::filesystem::path> val_conditions;
  std::string objective = "ar";
  std::string preset = "tiny";
  std::string condition_source = "category";
  std::optional<std::filesystem::path> protein_embeddings;
  double learning_rate = 1e-4;
  double warmup = 0.10;
  std::size_t batch_size = 32;
  std::size_t epochs = 1;
  std::optional<std::size_t> max_steps;
  double mask_rate = 0.15;
  double weight_decay = 0.01;
  double condition_dropout = 0.0;
  std::optional<double> stop_below;
  bool null_category = false;
  bool tie_embeddings = false;
};

struct Conditioner {
  std::vector<std::string> categories;
  bool use_categories = false;
  std::optional<std::filesystem::path> protein_dir;
  std::map<std::string, Matrix> proteins;

  Condition make(const std::string& label) {
    Condition c;
    if (use_categories) {
      const auto it = std::find(categories.begin(), categories.end(), label);
      if (it == categories.end()) throw UsageError("condition \"" + label + "\" does not occur in the training set");
      c.categories = {static_cast<std::size_t>(it - categories.begin())};
    }
    if (protein_dir) {
      auto it = proteins.find(label);
      if (it == proteins.end()) {
        const auto path = embedding_path(*protein_dir, label);
        require_file(path, "protein embedding");
        it = proteins.emplace(label, read_embedding(path).values()).first;
      }
      c.protein = it->second;
    }
    return c;
  }
};

Dataset to_dataset(const LoadedSequences& loaded, Conditioner& cond) {
  Dataset out;
  for (std::size_t i = 0; i < loaded.sequences.size(); ++i) {
    Example ex;
    ex.sequence = loaded.sequences[i];
    ex.label = loaded.conditions[i];
    ex.condition = cond.make(ex.label);
    out.push_back(std::move(ex));
  }
  return out;
}

void write_step_losses(const std::filesystem::path& path, const std::vector<double>& losses) {
  std::vector<CurvePoint> curve;
  for (std::size_t i = 0; i < losses.size(); ++i) curve.push_back({i + 1, losses[i]});
  write_loss_curve(path, curve);
}

void run(const CLI::App& sub, const TrainOptions& o) {
  TrainConfig cfg;
  cfg.objective = o.objective == "ar" ? Objective::Autoregressive : Objective::MaskedRecovery;
  cfg.learning_rate = o.learning_rate;
  cfg.warmup_fraction = o.warmup;
  cfg.batch_size = o.batch_size;
  cfg.epochs = o.epochs;
  cfg.max_steps = o.max_steps;
  cfg.mlm_mask_rate = o.mask_rate;
  cfg.seed = o.common.seed;
  cfg.weight_decay = o.weight_decay;
  cfg.condition_dropout = o.condition_dropout;
  cfg.stop_below = o.stop_below;
  auto problems = cfg.problems();
  if (o.condition_source != "category" && !o.protein_embeddings) {
    problems.push_back("--condition-source " + o.condition_source + " needs --protein-embeddings");
  }
  if (!problems.empty()) {
    std::string msg = "invalid training configuration:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw UsageError(msg);
  }

  const LoadedSequences train_seqs = load_sequences(o.train, o.train_conditions);
  std::optional<LoadedSequences> val_seqs;
  if (o.val) val_seqs = load_sequences(*o.val, o.val_conditions);

  Conditioner cond;
  std::set<std::string> labels(train_seqs.conditions.begin(), train_seqs.conditions.end());
  if (labels.count("") != 0 && labels.size() > 1) {
    throw UsageError("some training records carry a condition and some do not");
  }
  cond.use_categories = o.condition_source != "protein" && labels.count("") == 0;
  if (cond.use_categories) cond.categories.assign(labels.begin(), labels.end());
  if (o.condition_source != "category") cond.protein_dir = o.protein_embeddings;

  const Dataset train_set = to_dataset(train_seqs, cond);
  const Dataset val_set = val_seqs ? to_dataset(*val_seqs, cond) : Dataset{};

  const AttentionMode mode =
      cfg.objective == Objective::Autoregressive ? AttentionMode::Causal : AttentionMode::Bidirectional;
  ModelConfig mc = o.preset == "micro" ? ModelConfig::micro(mode) : ModelConfig::tiny(mode);
  mc.tie_embeddings = o.tie_embeddings;
  if (cond.use_categories) {
    mc.conditioning.num_categories = cond.categories.size();
    mc.conditioning.category_names = cond.categories;
    mc.conditioning.null_category = o.null_category || o.condition_dropout > 0.0;
  }
  if (cond.protein_dir) {
    std::size_t rows = 0;
    for (const auto& [_, m] : cond.proteins) {
      if (mc.conditioning.protein_dim != 0 && static_cast<std::size_t>(m.cols()) != mc.conditioning.protein_dim) {
        throw UsageError("protein embeddings differ in width");
      }
      mc.conditioning.protein_dim = static_cast<std::size_t>(m.cols());
      rows = std::max(rows, static_cast<std::size_t>(m.rows()));
    }
    mc.max_prefix = std::max(mc.max_prefix, rows + (cond.use_categories ? 1 : 0));
  }
  std::size_t longest = 0;
  for (const auto& ex : train_set) longest = std::max(longest, ex.sequence.size());
  for (const auto& ex : val_set) longest = std::max(longest, ex.sequence.size());
  mc.max_len = std::max(mc.max_len, mc.max_prefix + longest + 1);

  const Checkpoint init = init_checkpoint(mc, o.common.seed);
  const TrainResult result = train(cfg, train_set, val_set, init);

  const auto& dir = o.common.out_dir;
  std::filesystem::create_directories(dir);
  save_checkpoint(dir / "checkpoint.sqft", result.best);
  save_checkpoint(dir / "last.sqft", result.last);
  write_loss_curve(dir / "loss_curve.csv", result.train_curve);
  write_step_losses(dir / "step_losses.csv", result.step_losses);
  if (!result.val_curve.empty()) write_loss_curve(dir / "val_curve.csv", result.val_curve);

  std::cout << fmt::format("steps={}\nbest_epoch={}\nfinal_train_loss={:.9g}\n", result.steps, result.best_epoch,
                           result.train_curve.empty() ? 0.0 : result.train_curve.back().loss);
  if (!result.val_curve.empty()) std::cout << fmt::format("final_val_loss={:.9g}\n", result.val_curve.back().loss);

  Manifest manifest(sub, o.common);
  manifest.input("train", o.train);
  if (o.train_conditions) manifest.input("train_conditions", *o.train_conditions);
  if (o.val) manifest.input("val", *o.val);
  if (o.val_conditions) manifest.input("val_conditions", *o.val_conditions);
  if (o.protein_embeddings) manifest.input("protein_embeddings", *o.protein_embeddings);
  manifest.output("checkpoint", dir / "checkpoint.sqft");
  manifest.output("last_checkpoint", dir / "last.sqft");
  manifest.output("loss_curve", dir / "loss_curve.csv");
  manifest.output("step_losses", dir / "step_losses.csv");
  if (!result.val_curve.empty()) manifest.output("val_curve", dir / "val_curve.csv");
  manifest.note("model", nlohmann::ordered_json::parse(mc.to_json()));
  manifest.note("steps", result.steps);
  manifest.write(dir);
}

}  // namespace

void register_train(CLI::App& app) {
  auto opts = std::make_shared<TrainOptions>();
  auto* sub = app.add_subcommand("train", "Train a model on a FASTA dataset");
  sub->add_option("--train", opts->train, "Training FASTA; conditions come from the text after the last '|'")
      ->required();
  sub->add_option("--train-conditions", opts->train_conditions, "Condition table for --train");
  sub->add_option("--val", opts->val, "Validation FASTA used for model selection");
  sub->add_option("--val-conditions", opts->val_conditions, "Condition table for --val");
  sub->add_option("--objective", opts->objective, "ar (next-token) or mlm (masked recovery)")
      ->check(CLI::IsMember({"ar", "mlm"}))
      ->capture_default_str();
  sub->add_option("--preset", opts->preset, "Model size")->check(CLI::IsMember({"micro", "tiny"}))->capture_default_str();
  sub->add_option("--condition-source", opts->condition_source, "category, protein or both")
      ->check(CLI::IsMember({"category", "protein", "both"}))
      ->capture_default_str();
  sub->add_option("--protein-embeddings", opts->protein_embeddings, "Directory of <condition>.emb files");
  sub->add_option("--lr", opts->learning_rate, "Peak learning rate")->capture_default_str();
  sub->add_option("--warmup", opts->warmup, "Warmup fraction of all steps")->capture_default_str();
  sub->add_option("--batch-size", opts->batch_size, "Sequences per optimizer step")->capture_default_str();
  sub->add_option("--epochs", opts->epochs, "Passes over the training set")->capture_default_str();
  sub->add_option("--max-steps", opts->max_steps, "Cap on optimizer steps");
  sub->add_option("--mask-rate", opts->mask_rate, "Masked fraction for mlm")->capture_default_str();
  sub->add_option("--weight-decay", opts->weight_decay, "Decoupled weight decay")->capture_default_str();
  sub->add_option("--condition-dropout", opts->condition_dropout,
                  "Probability of training on the null category instead of the label")
      ->capture_default_str();
  sub->add_option("--stop-below", opts->stop_below, "Stop once the selection loss falls below this");
  sub->add_flag("--null-category", opts->null_category, "Reserve a null category row");
  sub->add_flag("--tie-embeddings", opts->tie_embeddings, "Share input and output embeddings");
  add_common(*sub, opts->common);
  sub->callback([sub, opts] { run(*sub, *opts); });
}

}  // namespace seqforge::cli
