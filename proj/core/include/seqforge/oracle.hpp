/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "seqforge/metrics.hpp"
#include "seqforge/training.hpp"

namespace seqforge {

struct MotifCondition {
  std::string name;
  std::string motif;
  /// Probability that a synthetic sequence carries the motif. Zero turns
  /// planting off.
  double p_plant = 1.0;
  /// Background base frequencies in A, C, G, T order.
  std::array<double, 4> background{0.25, 0.25, 0.25, 0.25};
};

/// Condition universe for synthetic data; condition i has category id i.
struct MotifSpec {
  std::vector<MotifCondition> conditions;

  /// Motifs of length 6..10 over ACGT, pairwise distinct; names unique;
  /// p_plant in [0, 1]; background a distribution.
  void validate() const;
  std::size_t max_motif_length() const;
  std::size_t index_of(std::string_view name) const;

  std::string to_json() const;
  static MotifSpec from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static MotifSpec load(const std::filesystem::path& path);

  /// `count` random distinct motifs of the given length with uniform
  /// background, named c0, c1, ...
  static MotifSpec random(std::size_t count, std::size_t motif_length, double p_plant, std::uint64_t seed);
};

/// Background draws with the condition's motif planted at a uniform offset
/// (with probability p_plant). Condition-major order; labels are names.
Dataset synth_dataset(const MotifSpec& spec, std::size_t n_per_condition, std::size_t seq_len, std::uint64_t seed);

/// Uniform random bases.
std::vector<DnaSequence> random_sequences(std::size_t count, std::size_t length, std::uint64_t seed);

/// 1 when the motif occurs, otherwise the best fraction of matching
/// positions over full-length windows (0 when none fits).
double motif_score(const DnaSequence& seq, std::string_view motif);

/// Motif presence as a binding probability, one profile per condition.
class MotifScorer final : public ProfileScorer {
 public:
  explicit MotifScorer(MotifSpec spec);
  double score(const DnaSequence& seq, std::size_t condition) const;
  bool has_profile(const std::string& profile) const override;
  double probability(const DnaSequence& seq, const std::string& profile) const override;
  const MotifSpec& spec() const noexcept { return spec_; }

 private:
  MotifSpec spec_;
};

/// Fraction of G/C bases.
class GcContentScorer final : public ActivityScorer {
 public:
  double activity(const DnaSequence& seq) const override;
};

/// Order-k Markov chain with add-one smoothing. Contexts shorter than k use
/// the longest available order.
class MarkovModel final : public NextTokenModel {
 public:
  static MarkovModel fit(const std::vector<DnaSequence>& corpus, std::size_t order);

  std::size_t order() const noexcept { return order_; }
  Eigen::Vector4d next_distribution(std::span<const Token> context) const override;

 private:
  MarkovModel(std::size_t order, std::vector<std::vector<std::array<double, 4>>> counts);
  std::size_t order_;
  /// counts_[j][ctx] for context length j, ctx packed 2 bits per base.
  std::vector<std::vector<std::array<double, 4>>> counts_;
};

struct ClassifierConfig {
  std::size_t filters = 16;
  std::size_t width = 8;
  std::size_t max_len = 1024;
  std::size_t epochs = 4;
  std::size_t batch_size = 16;
  double learning_rate = 5e-3;
  std::uint64_t seed = 0;
};

/// Convolution over one-hot bases, ReLU, global max pooling and a linear
/// condition head. The pooled vector is the representation.
class MotifClassifier {
 public:
  MotifClassifier(std::size_t filters, std::size_t width, std::size_t max_len, std::vector<std::string> classes,
                  std::uint64_t seed);

  static MotifClassifier train(const Dataset& data, const std::vector<std::string>& classes,
                               const ClassifierConfig& cfg);

  std::size_t filters() const noexcept { return filters_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t max_len() const noexcept { return max_len_; }
  const std::vector<std::string>& classes() const noexcept { return classes_; }
  const ParameterSet<double>& params() const noexcept { return params_; }
  ParameterSet<double>& params() noexcept { return params_; }

  /// Pooled features (length filters). Rejects sequences shorter than the
  /// filter or longer than max_len.
  RowVector features(const DnaSequence& seq) const;
  RowVector logits(const DnaSequence& seq) const;
  std::size_t predict(const DnaSequence& seq) const;
  double accuracy(const Dataset& data) const;

  /// Cross-entropy for one labelled sequence; accumulates gradients when
  /// grads is non-null.
  double loss(const DnaSequence& seq, std::size_t label, ParameterSet<double>* grads) const;

  void save(const std::filesystem::path& path) const;
  static MotifClassifier load(const std::filesystem::path& path);

 private:
  void check_length(const DnaSequence& seq) const;
  Matrix activations(const DnaSequence& seq) const;

  std::size_t filters_;
  std::size_t width_;
  std::size_t max_len_;
  std::vector<std::string> classes_;
  ParameterSet<double> params_;
};

/// One representation row per sequence.
Matrix featurize(const MotifClassifier& classifier, const std::vector<DnaSequence>& seqs);

}  // namespace seqforge
