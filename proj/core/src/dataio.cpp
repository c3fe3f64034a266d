/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#include "seqforge/dataio.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <utility>

#include "seqforge/error.hpp"

namespace seqforge {
namespace {

constexpr char kEmbeddingMagic[8] = {'S', 'Q', 'F', 'E', 'M', 'B', '0', '1'};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open", path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = nl + 1;
  }
  return lines;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <typename Int>
bool parse_int(std::string_view s, Int& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t at = line.find(sep, pos);
    out.push_back(trim(line.substr(pos, at == std::string_view::npos ? std::string_view::npos : at - pos)));
    if (at == std::string_view::npos) break;
    pos = at + 1;
  }
  return out;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::string& in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

struct EmbeddingHeader {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::string id;
  std::size_t payload_offset = 0;
};

EmbeddingHeader parse_embedding_header(const std::string& bytes, const std::filesystem::path& path) {
  const std::string where = path.string() + ": ";
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kEmbeddingMagic, 8) != 0) {
    throw ParseError(where + "not an embedding file", 0);
  }
  EmbeddingHeader h;
  h.rows = get_u32(bytes, 8);
  h.cols = get_u32(bytes, 12);
  const std::uint32_t id_len = get_u32(bytes, 16);
  if (bytes.size() < 20 + static_cast<std::size_t>(id_len)) throw ParseError(where + "truncated identifier", 16);
  h.id = bytes.substr(20, id_len);
  h.payload_offset = 20 + id_len;
  return h;
}

}  // namespace

// ---------------------------------------------------------------------------
// FASTA

std::vector<FastaRecord> parse_fasta_records(std::string_view text) {
  std::vector<FastaRecord> records;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const std::string_view line = trim(lines[i]);
    if (line.empty()) continue;
    if (line.front() == '>') {
      const std::string_view id = trim(line.substr(1));
      if (id.empty()) throw ParseError("line " + std::to_string(line_no) + ": empty FASTA header", line_no);
      records.push_back(FastaRecord{std::string(id), {}});
      continue;
    }
    if (records.empty()) {
      throw ParseError("line " + std::to_string(line_no) + ": sequence data before the first header", line_no);
    }
    auto& seq = records.back().sequence;
    for (char ch : line) {
      const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      if (up != 'A' && up != 'C' && up != 'G' && up != 'T' && up != 'N') {
        throw ParseError("line " + std::to_string(line_no) + ": invalid base '" + std::string(1, ch) + "'", line_no);
      }
      seq.push_back(up);
    }
  }
  if (records.empty()) throw ParseError("no FASTA records", 0);
  return records;
}

std::vector<FastaRecord> read_fasta_records(const std::filesystem::path& path) {
  try {
    return parse_fasta_records(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.position());
  }
}

void write_fasta_records(std::ostream& out, const std::vector<FastaRecord>& records) {
  for (const auto& r : records) out << '>' << r.id << '\n' << r.sequence << '\n';
}

void write_fasta_records(const std::filesystem::path& path, const std::vector<FastaRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing", path.string());
  write_fasta_records(out, records);
  if (!out) throw IoError("write failed", path.string());
}

void GenomeStore::add(std::string chrom, std::string bases) {
  if (!chroms_.emplace(std::move(chrom), std::move(bases)).second) throw DomainError("duplicate chromosome");
}

bool GenomeStore::contains(const std::string& chrom) const { return chroms_.count(chrom) != 0; }

std::size_t GenomeStore::length(const std::string& chrom) const {
  const auto it = chroms_.find(chrom);
  if (it == chroms_.end()) throw DomainError("genome has no chromosome " + chrom);
  return it->second.size();
}

std::string GenomeStore::slice(const std::string& chrom, std::size_t start, std::size_t end) const {
  const auto it = chroms_.find(chrom);
  if (it == chroms_.end()) throw DomainError("genome has no chromosome " + chrom);
  if (start >= end || end > it->second.size()) {
    throw DomainError(chrom + ":" + std::to_string(start) + "-" + std::to_string(end) + " lies outside [0, " +
                      std::to_string(it->second.size()) + ")");
  }
  return it->second.substr(start, end - start);
}

std::vector<std::string> GenomeStore::chromosomes() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : chroms_) out.push_back(name);
  return out;
}

GenomeStore parse_fasta(const std::filesystem::path& path) {
  GenomeStore genome;
  for (auto& r : read_fasta_records(path)) {
    const std::string name = r.id.substr(0, r.id.find_first_of(" \t"));
    if (genome.contains(name)) throw ParseError(path.string() + ": duplicate record " + name, 0);
    genome.add(name, std::move(r.sequence));
  }
  return genome;
}

// ---------------------------------------------------------------------------
// ChIP-Seq table

void ChipSeqRecord::validate() const {
  if (chrom.empty() || tf.empty() || cell_type.empty()) throw DomainError("empty chrom, TF or cell type");
  if (start >= end) throw DomainError("start " + std::to_string(start) + " must be below end " + std::to_string(end));
  if (score < 0 || score > 1000) throw DomainError("score " + std::to_string(score) + " outside [0, 1000]");
}

std::vector<ChipSeqRecord> parse_chipseq_text(std::string_view text) {
  std::vector<ChipSeqRecord> out;
  const auto lines = split_lines(text);
  bool first = true;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t row = i + 1;
    const std::string_view line = trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const char sep = line.find('\t') != std::string_view::npos ? '\t' : ',';
    const auto f = split_fields(line, sep);
    const std::string where = "row " + std::to_string(row) + ": ";
    if (f.size() != 6) {
      throw ParseError(where + "expected 6 columns, found " + std::to_string(f.size()), row);
    }
    ChipSeqRecord r;
    if (first) {
      first = false;
      std::size_t probe = 0;
      if (!parse_int(f[1], probe)) continue;
    }
    r.chrom = std::string(f[0]);
    r.tf = std::string(f[3]);
    r.cell_type = std::string(f[4]);
    if (!parse_int(f[1], r.start)) throw ParseError(where + "bad start '" + std::string(f[1]) + "'", row);
    if (!parse_int(f[2], r.end)) throw ParseError(where + "bad end '" + std::string(f[2]) + "'", row);
    if (!parse_int(f[5], r.score)) throw ParseError(where + "bad score '" + std::string(f[5]) + "'", row);
    try {
      r.validate();
    } catch (const DomainError& e) {
      throw ParseError(where + e.what(), row);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ChipSeqRecord> parse_chipseq_table(const std::filesystem::path& path) {
  try {
    return parse_chipseq_text(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.position());
  }
}

// ---------------------------------------------------------------------------
// Preprocessing

const char* split_name(Split s) noexcept {
  switch (s) {
    case Split::Validation: return "val";
    case Split::Test: return "test";
    default: return "train";
  }
}

Split split_for(const std::string& chrom, const PreprocessConfig& cfg) {
  if (cfg.val_chroms.count(chrom) != 0) return Split::Validation;
  if (cfg.test_chroms.count(chrom) != 0) return Split::Test;
  return Split::Train;
}

std::filesystem::path embedding_path(const std::filesystem::path& dir, const std::string& tf) {
  return dir / (tf + ".emb");
}

PreprocessResult preprocess_chipseq(const std::vector<ChipSeqRecord>& records, const GenomeStore& genome,
                                    const std::filesystem::path& embeddings_dir, const PreprocessConfig& cfg) {
  PreprocessResult result;
  std::vector<ChipSeqRecord> kept = records;
  result.stages.push_back({"input", kept.size()});
  auto stage = [&](const std::string& name, auto keep) {
    std::vector<ChipSeqRecord> next;
    for (auto& r : kept) {
      if (keep(r)) next.push_back(std::move(r));
    }
    kept = std::move(next);
    result.stages.push_back({name, kept.size()});
  };

  if (cfg.score_threshold) {
    const int t = *cfg.score_threshold;
    stage("score>=" + std::to_string(t), [t](const ChipSeqRecord& r) { return r.score >= t; });
  } else {
    std::map<std::pair<std::string, std::string>, int> best;
    for (const auto& r : kept) {
      auto [it, fresh] = best.try_emplace({r.tf, r.cell_type}, r.score);
      if (!fresh) it->second = std::max(it->second, r.score);
    }
    stage("max score per TF and cell type",
          [&best](const ChipSeqRecord& r) { return r.score == best.at({r.tf, r.cell_type}); });
  }
  stage("cell type " + cfg.cell_type, [&cfg](const ChipSeqRecord& r) { return r.cell_type == cfg.cell_type; });
  stage("DNA < " + std::to_string(cfg.max_dna_len) + " bp",
        [&cfg](const ChipSeqRecord& r) { return r.length() < cfg.max_dna_len; });

  std::map<std::string, std::size_t> protein_rows;
  for (const auto& r : kept) {
    if (protein_rows.count(r.tf) != 0) continue;
    const auto path = embedding_path(embeddings_dir, r.tf);
    if (!std::filesystem::exists(path)) {
      throw IoError("missing protein embedding for TF " + r.tf, path.string());
    }
    protein_rows[r.tf] = embedding_rows(path);
  }
  stage("protein < " + std::to_string(cfg.max_protein_len) + " residues",
        [&](const ChipSeqRecord& r) { return protein_rows.at(r.tf) < cfg.max_protein_len; });
  stage("supported TF", [&cfg](const ChipSeqRecord& r) {
    return cfg.supported_tfs.empty() || cfg.supported_tfs.count(r.tf) != 0;
  });

  std::vector<std::string> sequences;
  std::vector<ChipSeqRecord> unambiguous;
  for (auto& r : kept) {
    std::string s = genome.slice(r.chrom, r.start, r.end);
    if (s.find('N') != std::string::npos) continue;
    sequences.push_back(std::move(s));
    unambiguous.push_back(std::move(r));
  }
  kept = std::move(unambiguous);
  result.stages.push_back({"no ambiguous bases", kept.size()});

  for (std::size_t i = 0; i < kept.size(); ++i) {
    ChipSeqSample sample{kept[i], std::move(sequences[i]), embedding_path(embeddings_dir, kept[i].tf)};
    switch (split_for(kept[i].chrom, cfg)) {
      case Split::Validation: result.validation.push_back(std::move(sample)); break;
      case Split::Test: result.test.push_back(std::move(sample)); break;
      default: result.train.push_back(std::move(sample)); break;
    }
  }
  result.stages.push_back({"train", result.train.size()});
  result.stages.push_back({"val", result.validation.size()});
  result.stages.push_back({"test", result.test.size()});
  return result;
}

void write_splits(const PreprocessResult& result, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::pair<Split, const std::vector<ChipSeqSample>*> splits[] = {
      {Split::Train, &result.train}, {Split::Validation, &result.validation}, {Split::Test, &result.test}};
  for (const auto& [split, samples] : splits) {
    const std::string name = split_name(split);
    std::vector<FastaRecord> fasta;
    ConditionTable table{{"id", "condition", "chrom", "start", "end", "cell_type", "score", "embedding"}, {}};
    for (const auto& s : *samples) {
      const auto& r = s.record;
      const std::string id = r.chrom + ":" + std::to_string(r.start) + "-" + std::to_string(r.end) + "|" + r.tf;
      fasta.push_back({id, s.sequence});
      table.rows.push_back({id, r.tf, r.chrom, std::to_string(r.start), std::to_string(r.end), r.cell_type,
                            std::to_string(r.score), s.embedding.filename().string()});
    }
    write_fasta_records(out_dir / (name + ".fa"), fasta);
    write_condition_table(out_dir / (name + "_conditions.tsv"), table);
  }
}

std::size_t ConditionTable::column(std::string_view name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw DomainError("condition table has no column \"" + std::string(name) + "\"");
  return static_cast<std::size_t>(it - columns.begin());
}

ConditionTable read_condition_table(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  ConditionTable table;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    std::vector<std::string> fields;
    for (auto f : split_fields(lines[i], '\t')) fields.emplace_back(f);
    if (table.columns.empty()) {
      table.columns = std::move(fields);
      continue;
    }
    if (fields.size() != table.columns.size()) {
      throw ParseError(path.string() + ": row " + std::to_string(i + 1) + " has " + std::to_string(fields.size()) +
                           " fields, header has " + std::to_string(table.columns.size()),
                       i + 1);
    }
    table.rows.push_back(std::move(fields));
  }
  if (table.columns.empty()) throw ParseError(path.string() + ": empty condition table", 0);
  return table;
}

void write_condition_table(const std::filesystem::path& path, const ConditionTable& table) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing", path.string());
  auto write_row = [&out](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "\t" : "") << row[i];
    out << '\n';
  };
  write_row(table.columns);
  for (const auto& row : table.rows) write_row(row);
  if (!out) throw IoError("write failed", path.string());
}

// ---------------------------------------------------------------------------
// Signal tracks and embeddings

SignalTrack load_signal_track(const std::filesystem::path& path, std::size_t expected_len, bool initiation_profile) {
  const std::string text = read_file(path);
  std::vector<std::vector<double>> rows;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string_view line = trim(lines[i]);
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
      std::size_t end = pos;
      while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
      if (end == pos) break;
      double v = 0.0;
      if (!parse_double(line.substr(pos, end - pos), v)) {
        throw ParseError(path.string() + ": line " + std::to_string(i + 1) + ": bad number '" +
                             std::string(line.substr(pos, end - pos)) + "'",
                         i + 1);
      }
      row.push_back(v);
      pos = end;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(path.string() + ": line " + std::to_string(i + 1) + " has " + std::to_string(row.size()) +
                           " values, expected " + std::to_string(rows.front().size()),
                       i + 1);
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() != expected_len) {
    throw ShapeError(path.string() + ": signal track has " + std::to_string(rows.size()) + " rows for a " +
                     std::to_string(expected_len) + " bp sequence");
  }
  if (rows.empty()) throw ShapeError(path.string() + ": empty signal track");
  Matrix values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return SignalTrack(std::move(values), initiation_profile);
}

PropertyMatrix read_embedding(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  const EmbeddingHeader h = parse_embedding_header(bytes, path);
  const std::size_t expected = static_cast<std::size_t>(h.rows) * h.cols * 4;
  const std::size_t payload = bytes.size() - h.payload_offset;
  if (payload != expected) {
    throw ParseError(path.string() + ": payload holds " + std::to_string(payload) + " bytes, header (" +
                         std::to_string(h.rows) + " x " + std::to_string(h.cols) + ") needs " +
                         std::to_string(expected),
                     h.payload_offset);
  }
  Matrix values(h.rows, h.cols);
  for (std::size_t i = 0; i < static_cast<std::size_t>(h.rows) * h.cols; ++i) {
    const float f = std::bit_cast<float>(get_u32(bytes, h.payload_offset + 4 * i));
    values.data()[i] = static_cast<double>(f);
  }
  return PropertyMatrix(std::move(values), PropertySource::ProteinEmbedding);
}

std::size_t embedding_rows(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open", path.string());
  std::string head(20, '\0');
  in.read(head.data(), 20);
  head.resize(static_cast<std::size_t>(in.gcount()));
  if (head.size() < 20) throw ParseError(path.string() + ": not an embedding file", 0);
  const std::uint32_t id_len = get_u32(head, 16);
  head.resize(20 + id_len);
  in.read(head.data() + 20, id_len);
  return parse_embedding_header(head, path).rows;
}

void write_embedding(const std::filesystem::path& path, const Matrix& values, const std::string& id) {
  std::string bytes(kEmbeddingMagic, 8);
  put_u32(bytes, static_cast<std::uint32_t>(values.rows()));
  put_u32(bytes, static_cast<std::uint32_t>(values.cols()));
  put_u32(bytes, static_cast<std::uint32_t>(id.size()));
  bytes += id;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    put_u32(bytes, std::bit_cast<std::uint32_t>(static_cast<float>(values.data()[i])));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing", path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed", path.string());
}

}  // namespace seqforge
