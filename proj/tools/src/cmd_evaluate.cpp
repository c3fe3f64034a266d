/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>

#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "common.hpp"
#include "seqforge/metrics.hpp"
#include "seqforge/oracle.hpp"

namespace seqforge::cli {
namespace {

const std::vector<std::string> kAllMetrics{"fluency", "diversity", "ks", "mse", "fbd", "binding"};

struct EvaluateOptions {
  CommonOptions common;
  std::filesystem::path generated;
  std::optional<std::filesystem::path> reference;
  std::optional<std::filesystem::path> motifs;
  std::optional<std::filesystem::path> classifier;
  std::vector<std::string> metrics;
  std::size_t markov_order = 3;
  bool fluency_sum = false;
  bool per_sequence_diversity = false;
  std::size_t ngram_min = 10;
  std::size_t ngram_max = 12;
  std::string report = "report.txt";
};

std::vector<double> activities(const std::vector<DnaSequence>& seqs, const ActivityScorer& scorer) {
  std::vector<double> out;
  out.reserve(seqs.size());
  for (const auto& s : seqs) out.push_back(scorer.activity(s));
  return out;
}

void run(const CLI::App& sub, const EvaluateOptions& o) {
  const bool automatic = o.metrics.empty();
  const std::set<std::string> wanted = automatic ? std::set<std::string>(kAllMetrics.begin(), kAllMetrics.end())
                                                 : std::set<std::string>(o.metrics.begin(), o.metrics.end());
  auto needs = [&](const std::string& metric, bool available, const std::string& what) {
    if (wanted.count(metric) == 0) return false;
    if (available) return true;
    if (automatic) {
      spdlog::warn("skipping {}: it needs {}", metric, what);
      return false;
    }
    throw UsageError(metric + " needs " + what);
  };

  const LoadedSequences gen = load_sequences(o.generated, std::nullopt);
  std::optional<LoadedSequences> ref;
  if (o.reference) ref = load_sequences(*o.reference, std::nullopt);
  if (gen.sequences.empty()) throw UsageError("no generated sequences");

  MetricReport report;
  report.add("num_generated", static_cast<double>(gen.sequences.size()));

  const auto shortest = std::min_element(gen.sequences.begin(), gen.sequences.end(),
                                         [](const DnaSequence& a, const DnaSequence& b) { return a.size() < b.size(); })
                            ->size();
  const auto longest = std::max_element(gen.sequences.begin(), gen.sequences.end(),
                                        [](const DnaSequence& a, const DnaSequence& b) { return a.size() < b.size(); })
                           ->size();

  if (needs("fluency", ref.has_value(), "--reference (the base model is fitted on it)") &&
      needs("fluency", shortest >= 2 || !automatic, "generated sequences of at least 2 bases")) {
    const MarkovModel base = MarkovModel::fit(ref->sequences, o.markov_order);
    report.add("fluency", fluency(gen.sequences, base, FluencyOptions{o.fluency_sum}));
  }

  if (needs("diversity", shortest >= o.ngram_max || !automatic, "sequences of at least --ngram-max bases")) {
    CategorizedSequences groups;
    for (std::size_t i = 0; i < gen.sequences.size(); ++i) groups[gen.conditions[i]].push_back(gen.sequences[i]);
    DiversityOptions d;
    d.n_min = o.ngram_min;
    d.n_max = o.ngram_max;
    d.pooling = o.per_sequence_diversity ? NgramPooling::PerSequence : NgramPooling::Category;
    report.add("diversity", diversity(groups, d));
  }

  const GcContentScorer gc;
  if (needs("ks", ref.has_value(), "--reference")) {
    report.add("ks_gc_content", ks_statistic(activities(gen.sequences, gc), activities(ref->sequences, gc)));
  }
  if (needs("mse", ref.has_value() && (ref->sequences.size() == gen.sequences.size() || !automatic),
                "--reference with one paired record per generated sequence")) {
    report.add("mse_gc_content", mse_activity(gen.sequences, ref->sequences, gc));
  }
  std::optional<MotifClassifier> clf;
  if (needs("fbd", ref.has_value() && o.classifier.has_value(), "--reference and --classifier")) {
    require_file(*o.classifier, "classifier");
    clf = MotifClassifier::load(*o.classifier);
  }
  if (clf && needs("fbd", (shortest >= clf->width() && longest <= clf->max_len()) || !automatic,
                   "generated lengths within the classifier's range")) {
    report.add("fbd", fbd(featurize(*clf, gen.sequences), featurize(*clf, ref->sequences)));
  }
  if (needs("binding", o.motifs.has_value(), "--motifs")) {
    require_file(*o.motifs, "motif spec");
    const MotifScorer scorer(MotifSpec::load(*o.motifs));
    std::map<std::string, std::vector<DnaSequence>> by_condition;
    for (std::size_t i = 0; i < gen.sequences.size(); ++i) {
      by_condition[gen.conditions[i]].push_back(gen.sequences[i]);
    }
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& [label, seqs] : by_condition) {
      if (!scorer.has_profile(label)) continue;
      const double score = binding_score(seqs, scorer, label);
      report.add("binding_score." + label, score);
      total += score * static_cast<double>(seqs.size());
      count += seqs.size();
    }
    if (count == 0) throw UsageError("no generated record carries a condition from the motif spec");
    report.add("binding_score", total / static_cast<double>(count));
  }

  std::cout << report.table();
  const auto& dir = o.common.out_dir;
  std::filesystem::create_directories(dir);
  const auto path = dir / o.report;
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing", path.string());
    out << report.key_values();
    if (!out) throw IoError("write failed", path.string());
  }
  Manifest manifest(sub, o.common);
  manifest.input("generated", o.generated);
  if (o.reference) manifest.input("reference", *o.reference);
  if (o.motifs) manifest.input("motifs", *o.motifs);
  if (o.classifier) manifest.input("classifier", *o.classifier);
  manifest.output("report", path);
  manifest.write(dir);
}

}  // namespace

void register_evaluate(CLI::App& app) {
  auto opts = std::make_shared<EvaluateOptions>();
  auto* sub = app.add_subcommand("evaluate", "Score generated sequences");
  sub->add_option("--generated", opts->generated, "Generated FASTA")->required();
  sub->add_option("--reference", opts->reference, "Reference FASTA, paired record by record for mse");
  sub->add_option("--motifs", opts->motifs, "Motif spec for binding scores");
  sub->add_option("--classifier", opts->classifier, "Featurizer checkpoint for FBD");
  sub->add_option("--metrics", opts->metrics, "Subset of fluency, diversity, ks, mse, fbd, binding (default: all available)")
      ->check(CLI::IsMember(kAllMetrics));
  sub->add_option("--markov-order", opts->markov_order, "Order of the fluency base model")->capture_default_str();
  sub->add_flag("--fluency-sum", opts->fluency_sum, "Exponentiate summed rather than mean losses");
  sub->add_flag("--per-sequence-diversity", opts->per_sequence_diversity, "Count n-grams per sequence");
  sub->add_option("--ngram-min", opts->ngram_min, "Smallest n-gram size")->capture_default_str();
  sub->add_option("--ngram-max", opts->ngram_max, "Largest n-gram size")->capture_default_str();
  sub->add_option("--report", opts->report, "Report file name inside --out-dir")->capture_default_str();
  add_common(*sub, opts->common);
  sub->callback([sub, opts] { run(*sub, *opts); });
}

}  // namespace seqforge::cli
