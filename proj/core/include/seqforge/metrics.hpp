/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seqforge/seqcore.hpp"
#include "seqforge/tensor.hpp"

namespace seqforge {

/// Next-base distribution given a context of bases (A, C, G, T order).
class NextTokenModel {
 public:
  virtual ~NextTokenModel() = default;
  virtual Eigen::Vector4d next_distribution(std::span<const Token> context) const = 0;
};

/// Regulatory activity (or any scalar) predicted for one sequence.
class ActivityScorer {
 public:
  virtual ~ActivityScorer() = default;
  virtual double activity(const DnaSequence& seq) const = 0;
};

/// Per-profile binding probability.
class ProfileScorer {
 public:
  virtual ~ProfileScorer() = default;
  virtual bool has_profile(const std::string& profile) const = 0;
  virtual double probability(const DnaSequence& seq, const std::string& profile) const = 0;
};

struct FluencyOptions {
  /// Exponentiate the summed rather than the mean per-position loss.
  bool sum_losses = false;
};

/// exp of the per-position next-base cross-entropy of one sequence.
double sequence_fluency(const DnaSequence& seq, const NextTokenModel& model, const FluencyOptions& opts = {});
/// Mean of sequence_fluency over seqs.
double fluency(const std::vector<DnaSequence>& seqs, const NextTokenModel& model, const FluencyOptions& opts = {});

/// Category label -> generated sequences.
using CategorizedSequences = std::map<std::string, std::vector<DnaSequence>>;

enum class NgramPooling { Category, PerSequence };

struct DiversityOptions {
  std::size_t n_min = 10;
  std::size_t n_max = 12;
  NgramPooling pooling = NgramPooling::Category;
};

struct NgramCount {
  std::size_t unique = 0;
  std::size_t total = 0;
};

/// Unique and total n-grams pooled over seqs.
NgramCount count_ngrams(const std::vector<const DnaSequence*>& seqs, std::size_t n);

/// Product over n of unique/total for one pool of sequences.
double ngram_ratio_product(const std::vector<const DnaSequence*>& seqs, std::size_t n_min, std::size_t n_max);

/// Category-weighted n-gram diversity (weights N_c / N).
double diversity(const CategorizedSequences& groups, const DiversityOptions& opts = {});

/// Supremum distance between the two empirical CDFs.
double ks_statistic(std::vector<double> a, std::vector<double> b);

/// Mean squared difference of scorer outputs over aligned pairs.
double mse_activity(const std::vector<DnaSequence>& generated, const std::vector<DnaSequence>& reference,
                    const ActivityScorer& scorer);

/// Symmetric square root via eigendecomposition; negative eigenvalues are
/// clamped to zero.
Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& s);

/// Frechet distance between N(mu1, s1) and N(mu2, s2).
double frechet_distance(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& s1, const Eigen::VectorXd& mu2,
                        const Eigen::MatrixXd& s2);

/// Ridge added to a covariance estimated from no more rows than columns.
inline constexpr double kCovarianceRidge = 1e-6;

/// Unbiased covariance of the rows of x, ridged when rows <= cols.
Eigen::MatrixXd sample_covariance(const Matrix& x);

/// Frechet distance between Gaussians fitted to two representation sets.
double fbd(const Matrix& generated, const Matrix& reference);

/// Mean binding probability of seqs under one profile.
double binding_score(const std::vector<DnaSequence>& seqs, const ProfileScorer& scorer, const std::string& profile);

/// Ordered metric name -> value pairs.
class MetricReport {
 public:
  void add(std::string name, double value);
  const std::vector<std::pair<std::string, double>>& entries() const noexcept { return entries_; }
  /// Aligned two-column table.
  std::string table() const;
  /// One "name=value" line per metric, values printed with 17 significant digits.
  std::string key_values() const;

 private:
  std::vector<std::pair<std::string, double>> entries_;
};

}  // namespace seqforge
