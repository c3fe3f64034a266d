/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#include <sstream>

#include <gtest/gtest.h>

#include "seqforge/dataio.hpp"
#include "test_support.hpp"

namespace seqforge {
namespace {

PreprocessConfig fixture_config() {
  PreprocessConfig cfg;
  cfg.supported_tfs = {"CTCF", "TCF7", "REST"};
  return cfg;
}

TEST(Fasta, Examples) {
  testing::TempDir dir("fasta");
  testing::write_text(dir / "a.fa", ">chr1\nACGT\nACGT");
  const GenomeStore g = parse_fasta(dir / "a.fa");
  EXPECT_EQ(g.slice("chr1", 0, 8), "ACGTACGT");

  testing::write_text(dir / "b.fa", ">chr1 description\nacgt\n>chr2\nNNAC\n");
  const GenomeStore h = parse_fasta(dir / "b.fa");
  EXPECT_EQ(h.chromosomes(), (std::vector<std::string>{"chr1", "chr2"}));
  EXPECT_EQ(h.slice("chr1", 0, 4), "ACGT");
  EXPECT_EQ(h.length("chr2"), 4u);

  testing::write_text(dir / "empty.fa", "");
  EXPECT_THROW(parse_fasta(dir / "empty.fa"), ParseError);
  EXPECT_THROW(parse_fasta(dir / "missing.fa"), IoError);
}

TEST(Fasta, ErrorsCarryLineNumbers) {
  try {
    parse_fasta_records(">a\nACGT\nACXT\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 3u);
  }
  try {
    parse_fasta_records("ACGT\n>a\nAC\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 1u);
  }
  EXPECT_THROW(parse_fasta_records(">\nACGT\n"), ParseError);
}

TEST(Fasta, WriteReadRoundTrip) {
  const std::vector<FastaRecord> recs{{"x|c0", "ACGT"}, {"y", "TTGCA"}};
  std::ostringstream out;
  write_fasta_records(out, recs);
  EXPECT_EQ(out.str(), ">x|c0\nACGT\n>y\nTTGCA\n");
  EXPECT_EQ(parse_fasta_records(out.str()), recs);
}

TEST(Genome, SliceBounds) {
  GenomeStore g;
  g.add("c", "ACGTACGT");
  EXPECT_EQ(g.slice("c", 2, 5), "GTA");
  EXPECT_THROW(g.slice("c", 5, 9), DomainError);
  EXPECT_THROW(g.slice("d", 0, 1), DomainError);
}

TEST(ChipSeq, TableRowsParse) {
  const auto recs = parse_chipseq_text("chr1, 26677454, 26677790, TCF7, K562, 405\n");
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0], (ChipSeqRecord{"chr1", 26677454, 26677790, "TCF7", "K562", 405}));
  EXPECT_EQ(recs[0].length(), 336u);

  const auto top = parse_chipseq_text("chrom\tstart\tend\ttf\tcell\tscore\nchr8\t10\t20\tCTCF\tGM12878\t1000\n");
  ASSERT_EQ(top.size(), 1u);
  EXPECT_EQ(top[0].score, 1000);
}

TEST(ChipSeq, RejectionsNameTheRow) {
  auto row_of = [](const std::string& text) -> std::size_t {
    try {
      parse_chipseq_text(text);
    } catch (const ParseError& e) {
      return e.position();
    }
    return 0;
  };
  EXPECT_EQ(row_of("chr1,10,20,A,B,1\nchr1,30,30,A,B,1\n"), 2u);
  EXPECT_EQ(row_of("# c\nchr1,10,20,A,B\n"), 2u);
  EXPECT_EQ(row_of("chr1,10,20,A,B,1\nchr1,10,2x,A,B,1\n"), 2u);
  EXPECT_EQ(row_of("chr1,10,20,A,B,1001\n"), 1u);
  EXPECT_EQ(row_of("chr1,10,20,A,B,-1\n"), 1u);
}

TEST(Preprocess, FixtureStageCounts) {
  const auto records = parse_chipseq_table(testing::data_dir() / "chipseq_fixture.tsv");
  ASSERT_EQ(records.size(), 50u);
  const GenomeStore genome = parse_fasta(testing::data_dir() / "genome.fa");
  const PreprocessResult r = preprocess_chipseq(records, genome, testing::data_dir() / "embeddings", fixture_config());
  const std::vector<std::size_t> expect{50, 32, 26, 24, 21, 18, 17, 7, 5, 5};
  ASSERT_EQ(r.stages.size(), expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_EQ(r.stages[i].records, expect[i]) << r.stages[i].stage;
  for (std::size_t i = 1; i + 3 < r.stages.size(); ++i) EXPECT_LE(r.stages[i].records, r.stages[i - 1].records);

  for (const auto& s : r.train) EXPECT_TRUE(s.record.chrom == "chr1" || s.record.chrom == "chr2");
  for (const auto& s : r.validation) EXPECT_TRUE(s.record.chrom == "chr20" || s.record.chrom == "chr21");
  for (const auto& s : r.test) EXPECT_TRUE(s.record.chrom == "chr22" || s.record.chrom == "chrX");
  for (const auto* split : {&r.train, &r.validation, &r.test}) {
    for (const auto& s : *split) {
      EXPECT_EQ(s.sequence, genome.slice(s.record.chrom, s.record.start, s.record.end));
      EXPECT_EQ(s.sequence.find('N'), std::string::npos);
      EXPECT_LT(s.record.length(), 500u);
      EXPECT_EQ(s.record.cell_type, "GM12878");
    }
  }
}

TEST(Preprocess, SplitLaw) {
  const PreprocessConfig cfg;
  EXPECT_EQ(split_for("chr20", cfg), Split::Validation);
  EXPECT_EQ(split_for("chr21", cfg), Split::Validation);
  EXPECT_EQ(split_for("chr22", cfg), Split::Test);
  EXPECT_EQ(split_for("chrX", cfg), Split::Test);
  EXPECT_EQ(split_for("chr1", cfg), Split::Train);
  EXPECT_EQ(split_for("chrY", cfg), Split::Train);
}

TEST(Preprocess, ThresholdReplacesMaximumFilter) {
  const auto records = parse_chipseq_table(testing::data_dir() / "chipseq_fixture.tsv");
  const GenomeStore genome = parse_fasta(testing::data_dir() / "genome.fa");
  PreprocessConfig cfg = fixture_config();
  cfg.score_threshold = 600;
  const PreprocessResult r = preprocess_chipseq(records, genome, testing::data_dir() / "embeddings", cfg);
  EXPECT_EQ(r.stages[1].stage, "score>=600");
  std::size_t expect = 0;
  for (const auto& rec : records) expect += rec.score >= 600 ? 1 : 0;
  EXPECT_EQ(r.stages[1].records, expect);
}

TEST(Preprocess, MissingEmbeddingNamesTf) {
  GenomeStore genome;
  genome.add("chr1", std::string(400, 'A'));
  const std::vector<ChipSeqRecord> recs{{"chr1", 0, 100, "ZNF999", "GM12878", 10}};
  testing::TempDir dir("noemb");
  try {
    preprocess_chipseq(recs, genome, dir.path(), PreprocessConfig{});
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("ZNF999"), std::string::npos);
  }
}

TEST(Preprocess, SplitFilesAreByteIdenticalOnRerun) {
  const auto records = parse_chipseq_table(testing::data_dir() / "chipseq_fixture.tsv");
  const GenomeStore genome = parse_fasta(testing::data_dir() / "genome.fa");
  testing::TempDir a("splits-a");
  testing::TempDir b("splits-b");
  write_splits(preprocess_chipseq(records, genome, testing::data_dir() / "embeddings", fixture_config()), a.path());
  write_splits(preprocess_chipseq(records, genome, testing::data_dir() / "embeddings", fixture_config()), b.path());
  for (const char* f : {"train.fa", "val.fa", "test.fa", "train_conditions.tsv", "val_conditions.tsv",
                        "test_conditions.tsv"}) {
    EXPECT_EQ(testing::read_bytes(a / f), testing::read_bytes(b / f)) << f;
  }
  const ConditionTable t = read_condition_table(a / "val_conditions.tsv");
  EXPECT_EQ(t.rows.size(), 5u);
  EXPECT_EQ(t.rows[0][t.column("chrom")].substr(0, 5), "chr20");
  EXPECT_EQ(read_fasta_records(a / "val.fa").size(), 5u);
}

TEST(ConditionTable, RoundTrip) {
  testing::TempDir dir("ctab");
  const ConditionTable t{{"id", "condition"}, {{"a", "x"}, {"b", "y"}}};
  write_condition_table(dir / "t.tsv", t);
  const ConditionTable u = read_condition_table(dir / "t.tsv");
  EXPECT_EQ(u.columns, t.columns);
  EXPECT_EQ(u.rows, t.rows);
  EXPECT_EQ(u.column("condition"), 1u);
  EXPECT_THROW(u.column("nope"), DomainError);
}

TEST(SignalTrack, LengthAndSign) {
  testing::TempDir dir("signal");
  std::string rows;
  for (int i = 0; i < 1024; ++i) rows += std::to_string(i % 7 * 0.125) + " 1\n";
  testing::write_text(dir / "s.txt", rows);
  const SignalTrack s = load_signal_track(dir / "s.txt", 1024);
  EXPECT_EQ(s.rows(), 1024);
  EXPECT_EQ(s.cols(), 2);
  EXPECT_EQ(s.values()(3, 0), 0.375);
  EXPECT_THROW(load_signal_track(dir / "s.txt", 1023), ShapeError);

  testing::write_text(dir / "neg.txt", "0.5\n-0.1\n");
  EXPECT_THROW(load_signal_track(dir / "neg.txt", 2), DomainError);
  EXPECT_NO_THROW(load_signal_track(dir / "neg.txt", 2, false));
  testing::write_text(dir / "ragged.txt", "0.5 1\n0.1\n");
  EXPECT_THROW(load_signal_track(dir / "ragged.txt", 2), ParseError);
}

TEST(Embedding, SizeArithmeticAndRoundTrip) {
  testing::TempDir dir("emb");
  Matrix m(3, 2);
  m << 0.5, -1.25, 3e-8, 7, 1.0 / 3.0, -0.0;
  write_embedding(dir / "e.emb", m, "P1");
  const PropertyMatrix p = read_embedding(dir / "e.emb");
  EXPECT_EQ(p.source(), PropertySource::ProteinEmbedding);
  EXPECT_EQ(p.rows(), 3);
  EXPECT_EQ(p.cols(), 2);
  EXPECT_TRUE(p.values() == m.cast<float>().cast<double>());
  EXPECT_EQ(embedding_rows(dir / "e.emb"), 3u);

  const std::string bytes = testing::read_bytes(dir / "e.emb");
  EXPECT_EQ(bytes.size(), 8u + 12u + 2u + 24u);
  testing::write_text(dir / "short.emb", bytes.substr(0, bytes.size() - 4));
  EXPECT_THROW(read_embedding(dir / "short.emb"), ParseError);

  write_embedding(dir / "f.emb", p.values(), "P1");
  EXPECT_EQ(testing::read_bytes(dir / "f.emb"), bytes);
}

}  // namespace
}  // namespace seqforge
