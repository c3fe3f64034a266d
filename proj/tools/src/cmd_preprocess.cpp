/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#include <fstream>
#include <iostream>
#include <memory>

#include <fmt/format.h>

#include "commands.hpp"
#include "common.hpp"

namespace seqforge::cli {
namespace {

struct PreprocessOptions {
  CommonOptions common;
  std::filesystem::path table;
  std::filesystem::path genome;
  std::filesystem::path embeddings;
  std::optional<int> score_threshold;
  std::string cell_type = "GM12878";
  std::size_t max_dna_len = 500;
  std::size_t max_protein_len = 1000;
  std::vector<std::string> supported_tfs;
};

void run(const CLI::App& sub, const PreprocessOptions& o) {
  require_file(o.table, "ChIP-Seq table");
  require_file(o.genome, "genome file");
  require_file(o.embeddings, "embedding directory");

  PreprocessConfig cfg;
  cfg.score_threshold = o.score_threshold;
  cfg.cell_type = o.cell_type;
  cfg.max_dna_len = o.max_dna_len;
  cfg.max_protein_len = o.max_protein_len;
  cfg.supported_tfs.insert(o.supported_tfs.begin(), o.supported_tfs.end());

  const auto records = parse_chipseq_table(o.table);
  const GenomeStore genome = parse_fasta(o.genome);
  const PreprocessResult result = preprocess_chipseq(records, genome, o.embeddings, cfg);

  std::filesystem::create_directories(o.common.out_dir);
  write_splits(result, o.common.out_dir);
  const auto stages_path = o.common.out_dir / "stage_counts.tsv";
  {
    std::ofstream out(stages_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing", stages_path.string());
    out << "stage\trecords\n";
    for (const auto& s : result.stages) out << s.stage << '\t' << s.records << '\n';
  }

  std::size_t width = 5;
  for (const auto& s : result.stages) width = std::max(width, s.stage.size());
  for (const auto& s : result.stages) std::cout << fmt::format("{:<{}}  {}\n", s.stage, width, s.records);

  Manifest manifest(sub, o.common);
  manifest.input("table", o.table);
  manifest.input("genome", o.genome);
  manifest.input("embeddings", o.embeddings);
  for (const char* split : {"train", "val", "test"}) {
    manifest.output(std::string(split) + ".fa", o.common.out_dir / (std::string(split) + ".fa"));
    manifest.output(std::string(split) + "_conditions", o.common.out_dir / (std::string(split) + "_conditions.tsv"));
  }
  manifest.output("stage_counts", stages_path);
  nlohmann::ordered_json stages = nlohmann::ordered_json::array();
  for (const auto& s : result.stages) stages.push_back({{"stage", s.stage}, {"records", s.records}});
  manifest.note("stages", stages);
  manifest.write(o.common.out_dir);
}

}  // namespace

void register_preprocess(CLI::App& app) {
  auto opts = std::make_shared<PreprocessOptions>();
  auto* sub = app.add_subcommand("preprocess", "Filter and split a ChIP-Seq peak table");
  sub->add_option("--table", opts->table, "Six-column peak table (tab or comma separated)")->required();
  sub->add_option("--genome", opts->genome, "Reference genome FASTA")->required();
  sub->add_option("--embeddings", opts->embeddings, "Directory of <TF>.emb protein embeddings")->required();
  sub->add_option("--score-threshold", opts->score_threshold,
                  "Keep scores >= threshold instead of the per-(TF, cell type) maximum");
  sub->add_option("--cell-type", opts->cell_type, "Cell type to keep")->capture_default_str();
  sub->add_option("--max-dna-len", opts->max_dna_len, "Keep intervals shorter than this")->capture_default_str();
  sub->add_option("--max-protein-len", opts->max_protein_len, "Keep proteins shorter than this")
      ->capture_default_str();
  sub->add_option("--supported-tfs", opts->supported_tfs, "TFs the scorer supports (default: all)");
  add_common(*sub, opts->common);
  sub->callback([sub, opts] { run(*sub, *opts); });
}

}  // namespace seqforge::cli
