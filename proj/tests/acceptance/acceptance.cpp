/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <fmt/core.h>
#include <spdlog/spdlog.h>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "seqforge/conditioning.hpp"
#include "seqforge/dataio.hpp"
#include "seqforge/generation.hpp"
#include "seqforge/metrics.hpp"
#include "seqforge/model.hpp"
#include "seqforge/oracle.hpp"
#include "seqforge/training.hpp"
#include "test_support.hpp"

namespace seqforge {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Outcome of one criterion: verdict plus a one-line summary of the evidence.
struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void note(const std::string& text) { detail += (detail.empty() ? "" : "; ") + text; }
};

// ---------------------------------------------------------------------------
// 1. Gradient oracle

Outcome gradient_oracle() {
  Outcome out;
  const auto start = Clock::now();
  constexpr double kTol = 1e-4;
  constexpr double kEps = 1e-3;

  auto check = [&](const std::string& tag, const ModelConfig& cfg, std::uint64_t seed, testing::Stencil stencil) {
    const Checkpoint c = init_checkpoint(cfg, seed);
    Rng rng = stream_rng(seed, 1);
    const DnaSequence seq = encode(testing::random_bases(rng, 6));
    ModelInput in;
    in.condition.categories = {1};
    in.condition.protein = Matrix::Random(2, static_cast<Eigen::Index>(cfg.conditioning.protein_dim));
    std::vector<int> targets;
    if (cfg.mode == AttentionMode::Causal) {
      in.tokens = ar_tokens(seq);
      targets = ar_row_targets(3, seq);
    } else {
      in.tokens = mlm_tokens(seq, {0, 2, 5});
      targets = mlm_row_targets(3, seq, {3, 5, 8});
    }
    const auto t0 = Clock::now();
    const auto errors = testing::gradient_check(c, in, targets, kEps, stencil);
    std::string worst_name;
    const double worst = testing::worst_relative(errors, &worst_name);
    std::size_t checked = 0;
    for (const auto& [name, e] : errors) checked += e.analytic_norm > 0.0 ? 1 : 0;
    out.note(fmt::format("{}: worst {:.2e} ({}), {} tensors with signal, {:.1f} s", tag, worst, worst_name, checked,
                         seconds_since(t0)));
    out.require(worst < kTol, tag + " relative error below 1e-4");
  };

  ModelConfig tiny = ModelConfig::tiny(AttentionMode::Causal);
  tiny.conditioning.num_categories = 4;
  tiny.conditioning.protein_dim = 5;
  check("tiny causal", tiny, 101, testing::Stencil::Central2);
  for (AttentionMode mode : {AttentionMode::Causal, AttentionMode::Bidirectional}) {
    ModelConfig micro = ModelConfig::micro(mode);
    micro.conditioning.num_categories = 4;
    micro.conditioning.protein_dim = 5;
    check(mode == AttentionMode::Causal ? "micro causal" : "micro bidirectional", micro, 102,
          testing::Stencil::Central4);
  }
  const double total = seconds_since(start);
  out.note(fmt::format("total {:.1f} s", total));
  out.require(total < 120.0, "runtime under 2 minutes");
  return out;
}

// ---------------------------------------------------------------------------
// 2. Causality

Outcome causality() {
  Outcome out;
  const Checkpoint causal = init_checkpoint(ModelConfig::tiny(AttentionMode::Causal), 201);
  const Checkpoint bidir = init_checkpoint(ModelConfig::tiny(AttentionMode::Bidirectional), 201);
  Rng rng = stream_rng(202, 0);
  std::normal_distribution<double> gauss;
  std::size_t causal_ok = 0;
  std::size_t bidir_violations = 0;
  constexpr int kTrials = 100;
  for (int trial = 0; trial < kTrials; ++trial) {
    const std::size_t prefix = std::uniform_int_distribution<std::size_t>(0, 4)(rng);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 60)(rng);
    Matrix hp(static_cast<Eigen::Index>(prefix), 64);
    Matrix he(static_cast<Eigen::Index>(n), 64);
    for (Eigen::Index i = 0; i < hp.size(); ++i) hp.data()[i] = gauss(rng);
    for (Eigen::Index i = 0; i < he.size(); ++i) he.data()[i] = gauss(rng);
    const ConditionedInput base = integrate_sequence_level<double>(hp, he);
    const auto rows = static_cast<Eigen::Index>(base.rows());
    const Eigen::Index j = std::uniform_int_distribution<Eigen::Index>(0, rows - 2)(rng);
    ConditionedInput perturbed = base;
    for (Eigen::Index r = j + 1; r < rows; ++r) {
      for (Eigen::Index c = 0; c < 64; ++c) perturbed.values(r, c) += gauss(rng);
    }
    const Matrix a = forward(causal, base);
    const Matrix b = forward(causal, perturbed);
    causal_ok += (a.topRows(j + 1).array() == b.topRows(j + 1).array()).all() ? 1 : 0;
    const Matrix c = forward(bidir, base);
    const Matrix d = forward(bidir, perturbed);
    bidir_violations += (c.topRows(j + 1).array() == d.topRows(j + 1).array()).all() ? 0 : 1;
  }
  out.note(fmt::format("causal rows <= j bit-identical in {}/{} trials", causal_ok, kTrials));
  out.note(fmt::format("bidirectional changed rows <= j in {}/{} trials", bidir_violations, kTrials));
  out.require(causal_ok == kTrials, "causal invariance");
  out.require(bidir_violations >= 1, "bidirectional violation observed");
  return out;
}

// ---------------------------------------------------------------------------
// 3. Overfit

Dataset toy_corpus() {
  Rng rng = stream_rng(301, 0);
  Dataset data;
  for (std::size_t i = 0; i < 32; ++i) {
    Example ex;
    ex.sequence = encode(testing::random_bases(rng, 48));
    ex.condition.categories = {i};
    ex.label = "s" + std::to_string(i);
    data.push_back(std::move(ex));
  }
  return data;
}

Outcome overfit() {
  Outcome out;
  const Dataset data = toy_corpus();
  for (Objective objective : {Objective::Autoregressive, Objective::MaskedRecovery}) {
    const bool ar = objective == Objective::Autoregressive;
    const auto start = Clock::now();
    ModelConfig mc = ModelConfig::tiny(ar ? AttentionMode::Causal : AttentionMode::Bidirectional);
    mc.conditioning.num_categories = data.size();
    TrainConfig cfg;
    cfg.objective = objective;
    cfg.learning_rate = 2e-3;
    cfg.warmup_fraction = 0.02;
    cfg.batch_size = data.size();
    cfg.epochs = 2000;
    cfg.weight_decay = 0.0;
    cfg.seed = 302;
    double loss = 0.0;
    std::size_t steps = 0;
    std::string detail;
    if (ar) {
      // Next-token loss is deterministic, so the corpus doubles as the
      // selection set and training stops once it is below the target.
      cfg.stop_below = 0.1;
      const TrainResult r = train(cfg, data, data, init_checkpoint(mc, 303));
      loss = r.val_curve.at(r.best_epoch).loss;
      steps = r.best.step;
    } else {
      // Masked loss depends on the mask draw: train the full budget and
      // average the corpus loss over fresh masks.
      const TrainResult r = train(cfg, data, {}, init_checkpoint(mc, 303));
      constexpr int kMaskDraws = 8;
      double worst = 0.0;
      for (int k = 0; k < kMaskDraws; ++k) {
        const double l = evaluate_loss(r.last, data, objective, cfg.mlm_mask_rate, 304 + k);
        loss += l / kMaskDraws;
        worst = std::max(worst, l);
      }
      steps = r.steps;
      detail = fmt::format(", worst of {} mask draws {:.4f}", kMaskDraws, worst);
    }
    const double elapsed = seconds_since(start);
    const std::string tag = ar ? "ar" : "mlm";
    out.note(fmt::format("{}: corpus loss {:.4f} after {} steps{}, {:.1f} s", tag, loss, steps, detail, elapsed));
    out.require(steps <= 2000 && loss < 0.1, tag + " loss below 0.1 within 2000 steps");
    out.require(elapsed < 300.0, tag + " runtime under 5 minutes");
  }
  return out;
}

// ---------------------------------------------------------------------------
// 4. Controllability

double mean_motif_score(const std::vector<DnaSequence>& seqs, const std::string& motif) {
  double sum = 0.0;
  for (const auto& s : seqs) sum += motif_score(s, motif);
  return sum / static_cast<double>(seqs.size());
}

Outcome controllability() {
  Outcome out;
  const auto start = Clock::now();
  const MotifSpec spec = MotifSpec::random(4, 8, 1.0, 401);
  const Dataset train_set = synth_dataset(spec, 2000, 128, 402);
  const Dataset val_set = synth_dataset(spec, 25, 128, 403);

  ModelConfig mc = ModelConfig::tiny(AttentionMode::Causal);
  mc.conditioning.num_categories = 4;
  for (const auto& c : spec.conditions) mc.conditioning.category_names.push_back(c.name);
  mc.conditioning.null_category = true;
  TrainConfig cfg;
  cfg.learning_rate = 3e-3;
  cfg.warmup_fraction = 0.02;
  cfg.batch_size = 16;
  cfg.epochs = 12;
  cfg.weight_decay = 0.0;
  cfg.condition_dropout = 0.1;
  cfg.seed = 404;
  const TrainResult r = train(cfg, train_set, val_set, init_checkpoint(mc, 405), [](const EpochReport& e) {
    std::cerr << fmt::format("  epoch {} step {} train {:.4f} val {:.4f}\n", e.epoch, e.step, e.train_loss,
                             e.val_loss.value_or(NAN));
  });
  const double train_seconds = seconds_since(start);

  constexpr std::size_t kPerCondition = 100;
  GenConfig gen;
  gen.temperature = 1.0;
  gen.max_len = 128;
  gen.seed = 406;
  std::vector<Condition> requests;
  for (std::size_t c = 0; c <= 4; ++c) {
    Condition cond;
    cond.categories = {c < 4 ? c : r.best.config.null_category_id()};
    for (std::size_t k = 0; k < kPerCondition; ++k) requests.push_back(cond);
  }
  const std::vector<DnaSequence> generated = generate_batch(r.best, requests, gen);
  const std::vector<DnaSequence> unconditioned(generated.begin() + 4 * kPerCondition, generated.end());
  const std::vector<DnaSequence> random = random_sequences(kPerCondition, 128, 407);

  double real_mean = 0.0, cond_mean = 0.0, uncond_mean = 0.0, random_mean = 0.0;
  for (std::size_t c = 0; c < 4; ++c) {
    const std::string& motif = spec.conditions[c].motif;
    std::vector<DnaSequence> real;
    for (const auto& ex : val_set) {
      if (ex.condition.categories[0] == c) real.push_back(ex.sequence);
    }
    const std::vector<DnaSequence> cond(generated.begin() + c * kPerCondition,
                                        generated.begin() + (c + 1) * kPerCondition);
    const double s_real = mean_motif_score(real, motif);
    const double s_cond = mean_motif_score(cond, motif);
    const double s_uncond = mean_motif_score(unconditioned, motif);
    const double s_random = mean_motif_score(random, motif);
    out.note(fmt::format("{} {}: real {:.4f} cond {:.4f} uncond {:.4f} random {:.4f}", spec.conditions[c].name, motif,
                         s_real, s_cond, s_uncond, s_random));
    out.require(s_cond >= 0.9, spec.conditions[c].name + " conditioned motif_score >= 0.9");
    real_mean += s_real / 4.0;
    cond_mean += s_cond / 4.0;
    uncond_mean += s_uncond / 4.0;
    random_mean += s_random / 4.0;
  }
  out.note(fmt::format("means: real {:.4f} > cond {:.4f} > uncond {:.4f} > random {:.4f}", real_mean, cond_mean,
                       uncond_mean, random_mean));
  out.require(real_mean > cond_mean, "real > conditioned");
  out.require(cond_mean > uncond_mean, "conditioned > unconditioned");
  out.require(uncond_mean > random_mean, "unconditioned > random");
  const double total = seconds_since(start);
  out.note(fmt::format("{} steps, train {:.0f} s, total {:.0f} s", r.steps, train_seconds, total));
  out.require(total < 900.0, "runtime under 15 minutes");
  return out;
}

// ---------------------------------------------------------------------------
// 5. Unmasking schedule

/// Deterministic logits that depend on the full token state, so any change
/// in visible context changes every prediction.
class HashedMaskedSource final : public MaskedLogitSource {
 public:
  Matrix predict(const Condition&, const std::vector<Token>& tokens) override {
    std::uint64_t h = 1469598103934665603ull;
    for (Token t : tokens) h = (h ^ static_cast<std::uint64_t>(code(t))) * 1099511628211ull;
    Matrix logits(static_cast<Eigen::Index>(tokens.size()), kVocabSize);
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      Rng rng = stream_rng(h, static_cast<std::uint64_t>(i));
      for (Eigen::Index k = 0; k < kVocabSize; ++k) logits(i, k) = 2.0 * uniform01(rng);
    }
    return logits;
  }
};

Outcome unmasking_schedule() {
  Outcome out;
  std::size_t configurations = 0;
  HashedMaskedSource source;
  for (std::size_t len : {8u, 64u, 1024u}) {
    std::vector<std::size_t> step_counts;
    for (std::size_t s = 1; s <= std::min<std::size_t>(64, len); ++s) step_counts.push_back(s);
    for (std::size_t s : {103u, 1024u}) {
      if (s <= len) step_counts.push_back(s);
    }
    for (std::size_t steps : step_counts) {
      ++configurations;
      const std::vector<std::size_t> sched = unmask_schedule(len, steps);
      std::size_t sum = 0;
      for (std::size_t k : sched) sum += k;
      const bool sched_ok = sched.size() == steps && sum == len &&
                            std::all_of(sched.begin(), sched.end(), [](std::size_t k) { return k >= 1; });
      out.require(sched_ok, fmt::format("schedule ({}, {}) sums to fixed_len", len, steps));
      if (steps == len) {
        out.require(std::all_of(sched.begin(), sched.end(), [](std::size_t k) { return k == 1; }),
                    fmt::format("one token per step at ({}, {})", len, steps));
      }

      GenConfig cfg;
      cfg.fixed_len = len;
      cfg.unmask_steps = steps;
      cfg.temperature = 1.0;
      Rng rng = stream_rng(501, len * 10000 + steps);
      MlmTrace trace;
      const DnaSequence seq = generate_mlm(source, {}, cfg, rng, &trace);
      std::vector<bool> seen(len, false);
      bool commits_ok = trace.committed.size() == steps && seq.size() == len && seq.is_pure();
      for (std::size_t s = 0; commits_ok && s < trace.committed.size(); ++s) {
        commits_ok = trace.committed[s].size() == sched[s];
        for (std::size_t pos : trace.committed[s]) {
          commits_ok = commits_ok && pos < len && !seen[pos];
          if (pos < len) seen[pos] = true;
        }
      }
      out.require(commits_ok && std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }),
                  fmt::format("commits follow the schedule at ({}, {})", len, steps));
      if (steps == 1) {
        Rng a = stream_rng(502, len);
        Rng b = stream_rng(502, len);
        const DnaSequence iterative = generate_mlm(source, {}, cfg, a);
        const DnaSequence one_shot = generate_one_shot(source, {}, len, cfg.temperature, b);
        out.require(iterative == one_shot, fmt::format("steps=1 equals one-shot at fixed_len {}", len));
      }
    }
  }

  Checkpoint ckpt = init_checkpoint(ModelConfig::micro(AttentionMode::Bidirectional), 503);
  for (auto& [name, t] : ckpt.params) {
    if (name.find("gain") == std::string::npos) t *= 10.0f;
  }
  CheckpointMaskedSource model_source(ckpt);
  for (int trial = 0; trial < 10; ++trial) {
    Rng a = stream_rng(504, trial);
    Rng b = stream_rng(504, trial);
    GenConfig cfg;
    cfg.fixed_len = 40;
    cfg.unmask_steps = 1;
    const DnaSequence iterative = generate_mlm(ckpt, {}, cfg, a);
    const DnaSequence one_shot = generate_one_shot(model_source, {}, 40, 1.0, b);
    out.require(iterative == one_shot, "steps=1 equals one-shot on a checkpoint");
  }
  out.note(fmt::format("{} (fixed_len, steps) configurations checked", configurations));
  return out;
}

// ---------------------------------------------------------------------------
// 6. Metric oracles

class UniformModel final : public NextTokenModel {
 public:
  Eigen::Vector4d next_distribution(std::span<const Token>) const override { return Eigen::Vector4d::Constant(0.25); }
};

Outcome metric_oracles() {
  Outcome out;
  Rng rng = stream_rng(601, 0);
  const char* alphabets[] = {"A", "AC", "ACG", "ACGT"};

  std::size_t diversity_exact = 0;
  CategorizedSequences pooled;
  std::map<std::string, std::vector<std::string>> pooled_text;
  constexpr int kStrings = 1000;
  for (int i = 0; i < kStrings; ++i) {
    const int k = 1 + static_cast<int>(rng() % 4);
    const std::size_t len = 12 + rng() % 40;
    const std::string s = testing::random_bases(rng, len, alphabets[k - 1], k);
    const double got = diversity({{"x", {encode(s)}}});
    const double want = testing::brute_diversity({{"x", {s}}}, 10, 12);
    diversity_exact += got == want ? 1 : 0;
    const std::string label = "g" + std::to_string(rng() % 7);
    pooled[label].push_back(encode(s));
    pooled_text[label].push_back(s);
  }
  out.require(diversity_exact == kStrings, "diversity equals brute force on every string");
  out.require(diversity(pooled) == testing::brute_diversity(pooled_text, 10, 12), "pooled diversity equals brute force");
  out.require(diversity({{"x", {encode("ACGTACGTACGT")}}}) == 1.0, "diversity hand case 1.0");
  out.require(diversity({{"x", {encode("AAAAAAAAAAAA")}}}) == 1.0 / 6.0, "diversity hand case 1/6");
  out.note(fmt::format("diversity exact on {}/{} strings", diversity_exact, kStrings));

  double ks_worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t na = 1 + rng() % 50;
    const std::size_t nb = 1 + rng() % 50;
    const bool ties = trial % 2 == 0;
    auto draw = [&](std::size_t n) {
      std::vector<double> v(n);
      for (auto& x : v) x = ties ? std::floor(uniform01(rng) * 6.0) : uniform01(rng);
      return v;
    };
    const std::vector<double> a = draw(na);
    const std::vector<double> b = draw(nb);
    ks_worst = std::max(ks_worst, std::abs(ks_statistic(a, b) - testing::brute_ks(a, b)));
  }
  out.require(ks_worst <= 1e-12, "KS within 1e-12 of brute force");
  out.note(fmt::format("KS worst deviation {:.1e}", ks_worst));

  double fluency_worst = 0.0;
  const UniformModel uniform;
  for (int trial = 0; trial < 200; ++trial) {
    const DnaSequence s = encode(testing::random_bases(rng, 2 + rng() % 200));
    fluency_worst = std::max(fluency_worst, std::abs(sequence_fluency(s, uniform) - 4.0));
  }
  out.require(fluency_worst <= 1e-9, "uniform fluency equals 4 within 1e-9");
  out.note(fmt::format("uniform fluency worst deviation {:.1e}", fluency_worst));

  double fbd_self = 0.0;
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index rows = 20 + static_cast<Eigen::Index>(rng() % 80);
    const Eigen::Index cols = 2 + static_cast<Eigen::Index>(rng() % 15);
    Matrix x(rows, cols);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = gauss(rng) * (1.0 + static_cast<double>(i % 3));
    fbd_self = std::max(fbd_self, std::abs(fbd(x, x)));
  }
  out.require(fbd_self <= 1e-6, "FBD of identical sets within 1e-6 of 0");

  // Points mu +/- a_k e_k have sample mean mu and diagonal sample covariance
  // 2 a_k^2 / (2d - 1).
  double fbd_diag = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 1 + rng() % 8;
    auto fixture = [&](std::vector<double>& mu, std::vector<double>& var) {
      mu.resize(d);
      var.resize(d);
      Matrix x(static_cast<Eigen::Index>(2 * d), static_cast<Eigen::Index>(d));
      std::vector<double> a(d);
      for (std::size_t k = 0; k < d; ++k) {
        mu[k] = 4.0 * uniform01(rng) - 2.0;
        a[k] = 0.1 + 3.0 * uniform01(rng);
        var[k] = 2.0 * a[k] * a[k] / static_cast<double>(2 * d - 1);
      }
      for (std::size_t r = 0; r < 2 * d; ++r) {
        for (std::size_t k = 0; k < d; ++k) x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = mu[k];
        const std::size_t axis = r / 2;
        x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(axis)) += r % 2 == 0 ? a[axis] : -a[axis];
      }
      return x;
    };
    std::vector<double> mu1, var1, mu2, var2;
    const Matrix x = fixture(mu1, var1);
    const Matrix y = fixture(mu2, var2);
    fbd_diag = std::max(fbd_diag, std::abs(fbd(x, y) - testing::diagonal_frechet(mu1, var1, mu2, var2)));
  }
  out.require(fbd_diag <= 1e-8, "FBD equals the diagonal closed form within 1e-8");
  out.note(fmt::format("FBD self {:.1e}, diagonal deviation {:.1e}", fbd_self, fbd_diag));
  return out;
}

// ---------------------------------------------------------------------------
// 7. Pipeline fixture

Outcome pipeline_fixture() {
  Outcome out;
  const auto data = testing::data_dir();
  PreprocessConfig cfg;
  cfg.supported_tfs = {"CTCF", "TCF7", "REST"};
  const auto records = parse_chipseq_table(data / "chipseq_fixture.tsv");
  const GenomeStore genome = parse_fasta(data / "genome.fa");
  const PreprocessResult r = preprocess_chipseq(records, genome, data / "embeddings", cfg);

  // Hand tally of the fixture rows (see tests/data/make_fixture.py).
  const std::vector<std::size_t> expect{50, 32, 26, 24, 21, 18, 17, 7, 5, 5};
  std::vector<std::size_t> got;
  std::string stages;
  for (const auto& s : r.stages) {
    got.push_back(s.records);
    stages += fmt::format("{}{}={}", stages.empty() ? "" : " ", s.stage, s.records);
  }
  out.require(got == expect, "stage survivors match the hand tally");
  out.note(stages);

  bool split_ok = r.train.size() == 7 && r.validation.size() == 5 && r.test.size() == 5;
  for (const auto& s : r.train) split_ok = split_ok && s.record.chrom != "chr20" && s.record.chrom != "chr21" &&
                                           s.record.chrom != "chr22" && s.record.chrom != "chrX";
  for (const auto& s : r.validation) split_ok = split_ok && (s.record.chrom == "chr20" || s.record.chrom == "chr21");
  for (const auto& s : r.test) split_ok = split_ok && (s.record.chrom == "chr22" || s.record.chrom == "chrX");
  out.require(split_ok, "chr20/21 -> val, chr22/X -> test");

  testing::TempDir dir("accept-pipeline");
  write_splits(r, dir / "a");
  const PreprocessResult again = preprocess_chipseq(parse_chipseq_table(data / "chipseq_fixture.tsv"),
                                                    parse_fasta(data / "genome.fa"), data / "embeddings", cfg);
  write_splits(again, dir / "b");
  bool identical = true;
  for (const char* f : {"train.fa", "val.fa", "test.fa", "train_conditions.tsv", "val_conditions.tsv",
                        "test_conditions.tsv"}) {
    identical = identical && testing::read_bytes(dir / "a" / f) == testing::read_bytes(dir / "b" / f);
  }
  const std::string pre = "preprocess --table " + (data / "chipseq_fixture.tsv").string() + " --genome " +
                          (data / "genome.fa").string() + " --embeddings " + (data / "embeddings").string() +
                          " --supported-tfs CTCF TCF7 REST --out-dir ";
  const auto c1 = testing::run_cli(pre + (dir / "c").string(), dir / "log1");
  const auto c2 = testing::run_cli(pre + (dir / "d").string(), dir / "log2");
  identical = identical && c1.status == 0 && c2.status == 0 && c1.output == c2.output;
  for (const char* f : {"train.fa", "val.fa", "test.fa", "stage_counts.tsv"}) {
    identical = identical && testing::read_bytes(dir / "c" / f) == testing::read_bytes(dir / "d" / f);
  }
  for (const char* f : {"train.fa", "val.fa", "test.fa"}) {
    identical = identical && testing::read_bytes(dir / "a" / f) == testing::read_bytes(dir / "c" / f);
  }
  out.require(identical, "byte-identical on rerun (library and CLI)");
  return out;
}

// ---------------------------------------------------------------------------
// 8. CLI determinism

std::string normalized_manifest(const std::filesystem::path& run_dir, const std::filesystem::path& file) {
  std::string text = testing::read_bytes(file);
  const std::string root = run_dir.string();
  for (std::size_t at = text.find(root); at != std::string::npos; at = text.find(root, at)) {
    text.replace(at, root.size(), "<run>");
  }
  return text;
}

Outcome cli_determinism() {
  Outcome out;
  testing::TempDir dir("accept-cli");
  auto run_all = [&](const std::filesystem::path& root) {
    const std::vector<std::string> steps{
        "synth --conditions 2 --n-per-condition 24 --val-per-condition 4 --seq-len 40 --classifier "
        "--classifier-epochs 2 --seed 801 --out-dir " + (root / "synth").string(),
        "train --train " + (root / "synth" / "train.fa").string() + " --val " + (root / "synth" / "val.fa").string() +
            " --preset micro --epochs 4 --batch-size 8 --lr 2e-3 --condition-dropout 0.2 --seed 802 --out-dir " +
            (root / "train").string(),
        "generate --checkpoint " + (root / "train" / "checkpoint.sqft").string() +
            " --mode ar --condition c0 --condition c1 --condition none --num 4 --max-len 40 --seed 803 --out-dir " +
            (root / "gen").string(),
        "evaluate --generated " + (root / "gen" / "generated.fa").string() + " --reference " +
            (root / "synth" / "val.fa").string() + " --motifs " + (root / "synth" / "motifs.json").string() +
            " --classifier " + (root / "synth" / "classifier.sqft").string() +
            " --seed 804 --out-dir " + (root / "eval").string(),
    };
    std::string transcript;
    for (const auto& s : steps) {
      const auto r = testing::run_cli(s, root.string() + ".log");
      if (r.status != 0) throw std::runtime_error("command failed: " + s + "\n" + r.output);
      std::string text = r.output;
      for (std::size_t at = text.find(root.string()); at != std::string::npos; at = text.find(root.string(), at)) {
        text.replace(at, root.string().size(), "<run>");
      }
      transcript += text;
    }
    return transcript;
  };
  const std::string t1 = run_all(dir / "one");
  const std::string t2 = run_all(dir / "two");
  out.require(t1 == t2, "console output identical");
  const std::vector<std::string> files{"synth/train.fa",        "synth/val.fa",          "synth/motifs.json",
                                       "synth/classifier.sqft", "train/checkpoint.sqft", "train/last.sqft",
                                       "train/loss_curve.csv",  "train/step_losses.csv", "train/val_curve.csv",
                                       "gen/generated.fa",      "eval/report.txt"};
  std::size_t same = 0;
  for (const auto& f : files) {
    const bool eq = testing::read_bytes(dir / "one" / f) == testing::read_bytes(dir / "two" / f);
    out.require(eq, f + " byte-identical");
    same += eq ? 1 : 0;
  }
  for (const char* stage : {"synth", "train", "gen", "eval"}) {
    const bool eq = normalized_manifest(dir / "one", dir / "one" / stage / "manifest.json") ==
                    normalized_manifest(dir / "two", dir / "two" / stage / "manifest.json");
    out.require(eq, std::string(stage) + "/manifest.json identical up to the run directory");
    same += eq ? 1 : 0;
  }
  out.note(fmt::format("{}/{} artifacts identical", same, files.size() + 4));
  return out;
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace seqforge

int main(int argc, char** argv) {
  using namespace seqforge;
  const std::vector<Criterion> criteria{
      {1, "gradient oracle", gradient_oracle},       {2, "causality", causality},
      {3, "overfit", overfit},                       {4, "controllability", controllability},
      {5, "unmasking schedule", unmasking_schedule}, {6, "metric oracles", metric_oracles},
      {7, "pipeline fixture", pipeline_fixture},     {8, "cli determinism", cli_determinism},
  };
  spdlog::set_level(spdlog::level::warn);
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::cerr << "usage: seqforge_acceptance [--criterion N]\n";
      return 2;
    }
  }
  bool all_pass = true;
  bool ran = false;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    ran = true;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.note(std::string("exception: ") + e.what());
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.detail
              << std::endl;
    all_pass = all_pass && o.pass;
  }
  if (!ran) {
    std::cerr << "no criterion " << only << '\n';
    return 2;
  }
  return all_pass ? 0 : 1;
}
