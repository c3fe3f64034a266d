/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "seqforge/conditioning.hpp"

namespace seqforge {

struct FastaRecord {
  std::string id;
  std::string sequence;

  friend bool operator==(const FastaRecord&, const FastaRecord&) = default;
};

/// Multi-record FASTA. Sequence lines are concatenated and uppercased; only
/// A, C, G, T and N are accepted. Errors carry the 1-based line number.
std::vector<FastaRecord> parse_fasta_records(std::string_view text);
std::vector<FastaRecord> read_fasta_records(const std::filesystem::path& path);
/// One header line and one sequence line per record.
void write_fasta_records(std::ostream& out, const std::vector<FastaRecord>& records);
void write_fasta_records(const std::filesystem::path& path, const std::vector<FastaRecord>& records);

/// Chromosome name -> uppercase bases.
class GenomeStore {
 public:
  void add(std::string chrom, std::string bases);
  bool contains(const std::string& chrom) const;
  std::size_t length(const std::string& chrom) const;
  /// Bases in the 0-based half-open interval [start, end).
  std::string slice(const std::string& chrom, std::size_t start, std::size_t end) const;
  std::vector<std::string> chromosomes() const;

 private:
  std::map<std::string, std::string> chroms_;
};

GenomeStore parse_fasta(const std::filesystem::path& path);

struct ChipSeqRecord {
  std::string chrom;
  std::size_t start = 0;
  std::size_t end = 0;
  std::string tf;
  std::string cell_type;
  int score = 0;

  std::size_t length() const noexcept { return end - start; }
  /// start < end, score in [0, 1000], nonempty names.
  void validate() const;
  friend bool operator==(const ChipSeqRecord&, const ChipSeqRecord&) = default;
};

/// Six tab- or comma-separated columns (chrom, start, end, TF, cell type,
/// score). Blank lines and '#' comments are skipped; a first line whose
/// start column is not numeric is taken as a header. Errors name the row.
std::vector<ChipSeqRecord> parse_chipseq_text(std::string_view text);
std::vector<ChipSeqRecord> parse_chipseq_table(const std::filesystem::path& path);

struct PreprocessConfig {
  /// Keep scores >= threshold instead of the per-(TF, cell type) maximum.
  std::optional<int> score_threshold;
  std::string cell_type = "GM12878";
  std::size_t max_dna_len = 500;
  std::size_t max_protein_len = 1000;
  /// TFs the downstream scorer can evaluate; empty keeps every TF.
  std::set<std::string> supported_tfs;
  std::set<std::string> val_chroms{"chr20", "chr21"};
  std::set<std::string> test_chroms{"chr22", "chrX"};
};

enum class Split { Train, Validation, Test };
const char* split_name(Split s) noexcept;
Split split_for(const std::string& chrom, const PreprocessConfig& cfg);

struct StageCount {
  std::string stage;
  std::size_t records = 0;
};

struct ChipSeqSample {
  ChipSeqRecord record;
  std::string sequence;
  std::filesystem::path embedding;
};

struct PreprocessResult {
  /// Record count after each stage, starting with the input.
  std::vector<StageCount> stages;
  std::vector<ChipSeqSample> train;
  std::vector<ChipSeqSample> validation;
  std::vector<ChipSeqSample> test;
};

/// Embedding file expected for a TF.
std::filesystem::path embedding_path(const std::filesystem::path& dir, const std::string& tf);

/// Score filter, cell type, DNA length, protein length (embedding rows),
/// supported TFs, ambiguous bases, then the chromosome split. Input order is
/// preserved within each split.
PreprocessResult preprocess_chipseq(const std::vector<ChipSeqRecord>& records, const GenomeStore& genome,
                                    const std::filesystem::path& embeddings_dir, const PreprocessConfig& cfg);

/// <split>.fa and <split>_conditions.tsv for each split.
void write_splits(const PreprocessResult& result, const std::filesystem::path& out_dir);

/// Tab-separated condition manifest: a header row, then one row per record.
struct ConditionTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;
};
ConditionTable read_condition_table(const std::filesystem::path& path);
void write_condition_table(const std::filesystem::path& path, const ConditionTable& table);

/// One whitespace-separated numeric row per base pair.
SignalTrack load_signal_track(const std::filesystem::path& path, std::size_t expected_len,
                              bool initiation_profile = true);

/// Binary layout: 8-byte magic "SQFEMB01", u32 rows, u32 cols, u32 id
/// length, id bytes, then rows*cols little-endian float32 values row-major.
PropertyMatrix read_embedding(const std::filesystem::path& path);
/// Row count from the header alone.
std::size_t embedding_rows(const std::filesystem::path& path);
void write_embedding(const std::filesystem::path& path, const Matrix& values, const std::string& id);

}  // namespace seqforge
