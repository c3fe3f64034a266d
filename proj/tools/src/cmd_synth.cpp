/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#include <iostream>
#include <memory>

#include "commands.hpp"
#include "common.hpp"
#include "seqforge/oracle.hpp"

namespace seqforge::cli {
namespace {

struct SynthOptions {
  CommonOptions common;
  std::optional<std::filesystem::path> motifs;
  std::size_t conditions = 4;
  std::size_t motif_len = 8;
  double p_plant = 1.0;
  std::size_t n_per_condition = 100;
  std::size_t val_per_condition = 10;
  std::size_t seq_len = 128;
  bool classifier = false;
  std::size_t classifier_epochs = 4;
};

void write_split(const Dataset& data, const std::string& name, const std::filesystem::path& dir) {
  std::vector<FastaRecord> fasta;
  ConditionTable table{{"id", "condition"}, {}};
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::string id = "s" + std::to_string(i) + "|" + data[i].label;
    fasta.push_back({id, decode(data[i].sequence)});
    table.rows.push_back({id, data[i].label});
  }
  write_fasta_records(dir / (name + ".fa"), fasta);
  write_condition_table(dir / (name + "_conditions.tsv"), table);
}

void run(const CLI::App& sub, const SynthOptions& o) {
  MotifSpec spec;
  if (o.motifs) {
    require_file(*o.motifs, "motif spec");
    spec = MotifSpec::load(*o.motifs);
  } else {
    spec = MotifSpec::random(o.conditions, o.motif_len, o.p_plant, o.common.seed);
  }
  const std::uint64_t val_seed = stream_rng(o.common.seed, 1)();
  const Dataset train = synth_dataset(spec, o.n_per_condition, o.seq_len, o.common.seed);
  const Dataset val = synth_dataset(spec, o.val_per_condition, o.seq_len, val_seed);

  const auto& dir = o.common.out_dir;
  std::filesystem::create_directories(dir);
  spec.save(dir / "motifs.json");
  write_split(train, "train", dir);
  write_split(val, "val", dir);

  Manifest manifest(sub, o.common);
  if (o.motifs) manifest.input("motifs", *o.motifs);
  manifest.output("motifs", dir / "motifs.json");
  manifest.output("train.fa", dir / "train.fa");
  manifest.output("val.fa", dir / "val.fa");

  if (o.classifier) {
    std::vector<std::string> classes;
    for (const auto& c : spec.conditions) classes.push_back(c.name);
    ClassifierConfig cc;
    cc.seed = o.common.seed;
    cc.epochs = o.classifier_epochs;
    cc.max_len = std::max<std::size_t>(cc.max_len, o.seq_len);
    const MotifClassifier clf = MotifClassifier::train(train, classes, cc);
    clf.save(dir / "classifier.sqft");
    const double acc = clf.accuracy(val);
    std::cout << "classifier_val_accuracy=" << acc << '\n';
    manifest.output("classifier", dir / "classifier.sqft");
    manifest.note("classifier_val_accuracy", acc);
  }
  std::cout << "train_sequences=" << train.size() << "\nval_sequences=" << val.size() << '\n';
  manifest.write(dir);
}

}  // namespace

void register_synth(CLI::App& app) {
  auto opts = std::make_shared<SynthOptions>();
  auto* sub = app.add_subcommand("synth", "Write a synthetic motif-planted dataset");
  sub->add_option("--motifs", opts->motifs, "Existing motif spec (JSON); otherwise motifs are drawn at random");
  sub->add_option("--conditions", opts->conditions, "Number of random conditions")->capture_default_str();
  sub->add_option("--motif-len", opts->motif_len, "Random motif length (6-10)")->capture_default_str();
  sub->add_option("--p-plant", opts->p_plant, "Planting probability for random motifs")->capture_default_str();
  sub->add_option("--n-per-condition", opts->n_per_condition, "Training sequences per condition")
      ->capture_default_str();
  sub->add_option("--val-per-condition", opts->val_per_condition, "Validation sequences per condition")
      ->capture_default_str();
  sub->add_option("--seq-len", opts->seq_len, "Sequence length")->capture_default_str();
  sub->add_flag("--classifier", opts->classifier, "Also train the featurizer used for FBD");
  sub->add_option("--classifier-epochs", opts->classifier_epochs, "Featurizer training epochs")->capture_default_str();
  add_common(*sub, opts->common);
  sub->callback([sub, opts] { run(*sub, *opts); });
}

}  // namespace seqforge::cli
