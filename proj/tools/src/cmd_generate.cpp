/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#include <algorithm>
#include <iostream>
#include <memory>

#include "commands.hpp"
#include "common.hpp"
#include "seqforge/generation.hpp"

namespace seqforge::cli {
namespace {

constexpr const char* kUnconditioned = "none";

struct GenerateOptions {
  CommonOptions common;
  std::filesystem::path checkpoint;
  std::string mode;
  double temperature = 1.0;
  std::size_t max_len = 256;
  std::optional<std::size_t> len;
  std::size_t steps = 1;
  std::size_t num = 1;
  std::vector<std::string> conditions;
  std::optional<std::filesystem::path> protein_embeddings;
  std::string output = "generated.fa";
};

Condition make_condition(const Checkpoint& ckpt, const std::string& label, const GenerateOptions& o) {
  const auto& cc = ckpt.config.conditioning;
  Condition c;
  if (label == kUnconditioned) {
    if (cc.protein_dim != 0) throw UsageError("protein-conditioned models have no unconditioned pathway");
    if (cc.num_categories != 0) {
      if (!cc.null_category) throw UsageError("checkpoint was trained without a null category");
      c.categories = {ckpt.config.null_category_id()};
    }
    return c;
  }
  if (cc.num_categories != 0) {
    const auto& names = cc.category_names;
    const auto it = std::find(names.begin(), names.end(), label);
    if (it == names.end()) throw UsageError("checkpoint has no condition \"" + label + "\"");
    c.categories = {static_cast<std::size_t>(it - names.begin())};
  }
  if (cc.protein_dim != 0) {
    if (!o.protein_embeddings) throw UsageError("protein-conditioned checkpoint needs --protein-embeddings");
    const auto path = embedding_path(*o.protein_embeddings, label);
    require_file(path, "protein embedding");
    c.protein = read_embedding(path).values();
  }
  if (cc.num_categories == 0 && cc.protein_dim == 0) {
    throw UsageError("checkpoint is unconditioned; use --condition none");
  }
  return c;
}

void run(const CLI::App& sub, const GenerateOptions& o) {
  require_file(o.checkpoint, "checkpoint");
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  const bool ar = o.mode == "ar";
  const AttentionMode wanted = ar ? AttentionMode::Causal : AttentionMode::Bidirectional;
  if (ckpt.config.mode != wanted) {
    throw UsageError(std::string("--mode ") + o.mode + " needs a " + (ar ? "causal" : "bidirectional") +
                     " checkpoint");
  }
  if (!ar && !o.len) throw UsageError("--mode mlm requires --len: masked recovery fixes the length in advance");

  GenConfig cfg;
  cfg.temperature = o.temperature;
  cfg.max_len = o.max_len;
  cfg.unmask_steps = o.steps;
  cfg.seed = o.common.seed;
  cfg.fixed_len = ar ? std::nullopt : o.len;
  cfg.validate();
  if (!ar) unmask_schedule(*o.len, o.steps);

  std::vector<std::string> labels = o.conditions;
  if (labels.empty()) {
    labels = ckpt.config.conditioning.category_names;
    if (labels.empty()) labels = {kUnconditioned};
  }
  std::vector<Condition> conditions;
  std::vector<std::string> ids;
  for (const auto& label : labels) {
    const Condition c = make_condition(ckpt, label, o);
    for (std::size_t k = 0; k < o.num; ++k) {
      ids.push_back("g" + std::to_string(ids.size()) + "|" + label);
      conditions.push_back(c);
    }
  }

  const auto seqs = generate_batch(ckpt, conditions, cfg);
  std::vector<FastaRecord> records;
  for (std::size_t i = 0; i < seqs.size(); ++i) records.push_back({ids[i], decode(seqs[i])});

  const auto& dir = o.common.out_dir;
  std::filesystem::create_directories(dir);
  const auto out_path = dir / o.output;
  write_fasta_records(out_path, records);
  std::cout << "generated=" << records.size() << '\n';

  Manifest manifest(sub, o.common);
  manifest.input("checkpoint", o.checkpoint);
  if (o.protein_embeddings) manifest.input("protein_embeddings", *o.protein_embeddings);
  manifest.output("sequences", out_path);
  manifest.write(dir);
}

}  // namespace

void register_generate(CLI::App& app) {
  auto opts = std::make_shared<GenerateOptions>();
  auto* sub = app.add_subcommand("generate", "Sample sequences from a checkpoint");
  sub->add_option("--checkpoint", opts->checkpoint, "Checkpoint written by train")->required();
  sub->add_option("--mode", opts->mode, "ar (autoregressive) or mlm (masked recovery)")
      ->check(CLI::IsMember({"ar", "mlm"}))
      ->required();
  sub->add_option("--temperature", opts->temperature, "Sampling temperature")->capture_default_str();
  sub->add_option("--max-len", opts->max_len, "Maximum autoregressive length")->capture_default_str();
  sub->add_option("--len", opts->len, "Fixed length for masked recovery");
  sub->add_option("--steps", opts->steps, "Unmasking rounds for masked recovery")->capture_default_str();
  sub->add_option("--num", opts->num, "Sequences per condition")->capture_default_str();
  sub->add_option("--condition", opts->conditions, "Condition label (repeatable; 'none' for unconditioned)");
  sub->add_option("--protein-embeddings", opts->protein_embeddings, "Directory of <condition>.emb files");
  sub->add_option("--output", opts->output, "Output file name inside --out-dir")->capture_default_str();
  add_common(*sub, opts->common);
  sub->callback([sub, opts] { run(*sub, *opts); });
}

}  // namespace seqforge::cli
