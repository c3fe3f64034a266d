/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#include "seqforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "seqforge/conditioning.hpp"
#include "seqforge/error.hpp"

namespace seqforge {
namespace {

std::string describe(const DnaSequence& seq) {
  std::string s = decode(seq);
  if (s.size() > 24) s = s.substr(0, 24) + "...";
  return "\"" + s + "\"";
}

void require_pure(const DnaSequence& seq, const char* what) {
  if (!seq.is_pure()) throw DomainError(std::string(what) + ": sequence contains control tokens");
}

}  // namespace

// ---------------------------------------------------------------------------
// Fluency

double sequence_fluency(const DnaSequence& seq, const NextTokenModel& model, const FluencyOptions& opts) {
  require_pure(seq, "fluency");
  if (seq.size() < 2) throw DomainError("fluency needs sequences of length >= 2, got " + std::to_string(seq.size()));
  const auto& tokens = seq.tokens();
  double total = 0.0;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    const Eigen::Vector4d p = model.next_distribution(std::span<const Token>(tokens.data(), i));
    total -= std::log(p(code(tokens[i])));
  }
  const double positions = static_cast<double>(tokens.size() - 1);
  return std::exp(opts.sum_losses ? total : total / positions);
}

double fluency(const std::vector<DnaSequence>& seqs, const NextTokenModel& model, const FluencyOptions& opts) {
  if (seqs.empty()) throw DomainError("fluency of an empty sequence list");
  double sum = 0.0;
  for (const auto& s : seqs) sum += sequence_fluency(s, model, opts);
  return sum / static_cast<double>(seqs.size());
}

// ---------------------------------------------------------------------------
// Diversity

NgramCount count_ngrams(const std::vector<const DnaSequence*>& seqs, std::size_t n) {
  if (n == 0 || n > 32) throw DomainError("n-gram size must lie in [1, 32]");
  const std::uint64_t mask = n == 32 ? ~std::uint64_t{0} : (std::uint64_t{1} << (2 * n)) - 1;
  std::vector<std::uint64_t> grams;
  for (const DnaSequence* seq : seqs) {
    const auto& t = seq->tokens();
    if (t.size() < n) continue;
    std::uint64_t key = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      key = ((key << 2) | code(t[i])) & mask;
      if (i + 1 >= n) grams.push_back(key);
    }
  }
  NgramCount c;
  c.total = grams.size();
  std::sort(grams.begin(), grams.end());
  c.unique = static_cast<std::size_t>(std::unique(grams.begin(), grams.end()) - grams.begin());
  return c;
}

double ngram_ratio_product(const std::vector<const DnaSequence*>& seqs, std::size_t n_min, std::size_t n_max) {
  double product = 1.0;
  for (std::size_t n = n_min; n <= n_max; ++n) {
    const NgramCount c = count_ngrams(seqs, n);
    if (c.total == 0) throw DomainError("no " + std::to_string(n) + "-grams to count");
    product *= static_cast<double>(c.unique) / static_cast<double>(c.total);
  }
  return product;
}

double diversity(const CategorizedSequences& groups, const DiversityOptions& opts) {
  if (opts.n_min == 0 || opts.n_min > opts.n_max) throw DomainError("invalid n-gram range");
  if (groups.empty()) throw DomainError("diversity needs at least one category");
  std::size_t total = 0;
  for (const auto& [label, seqs] : groups) {
    if (seqs.empty()) throw DomainError("category \"" + label + "\" has no sequences");
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      require_pure(seqs[i], "diversity");
      if (seqs[i].size() < opts.n_max) {
        throw DomainError("sequence " + std::to_string(i) + " " + describe(seqs[i]) + " of category \"" + label +
                          "\" is shorter than " + std::to_string(opts.n_max));
      }
    }
    total += seqs.size();
  }

  double result = 0.0;
  for (const auto& [label, seqs] : groups) {
    const double weight = static_cast<double>(seqs.size()) / static_cast<double>(total);
    double score = 0.0;
    if (opts.pooling == NgramPooling::Category) {
      std::vector<const DnaSequence*> pool;
      pool.reserve(seqs.size());
      for (const auto& s : seqs) pool.push_back(&s);
      score = ngram_ratio_product(pool, opts.n_min, opts.n_max);
    } else {
      for (const auto& s : seqs) score += ngram_ratio_product({&s}, opts.n_min, opts.n_max);
      score /= static_cast<double>(seqs.size());
    }
    result += weight * score;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Distribution distances

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw DomainError("KS statistic needs two nonempty samples");
  auto finite = [](double v) { return !std::isnan(v); };
  if (!std::all_of(a.begin(), a.end(), finite) || !std::all_of(b.begin(), b.end(), finite)) {
    throw DomainError("KS statistic input contains NaN");
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double worst = 0.0;
  while (i < a.size() || j < b.size()) {
    double v;
    if (j == b.size() || (i < a.size() && a[i] <= b[j])) {
      v = a[i];
    } else {
      v = b[j];
    }
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    worst = std::max(worst, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return worst;
}

double mse_activity(const std::vector<DnaSequence>& generated, const std::vector<DnaSequence>& reference,
                    const ActivityScorer& scorer) {
  if (generated.size() != reference.size()) {
    throw DomainError("MSE needs aligned pairs: " + std::to_string(generated.size()) + " generated vs " +
                      std::to_string(reference.size()) + " reference sequences");
  }
  if (generated.empty()) throw DomainError("MSE of an empty sequence list");
  double sum = 0.0;
  for (std::size_t i = 0; i < generated.size(); ++i) {
    const double d = scorer.activity(generated[i]) - scorer.activity(reference[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(generated.size());
}

Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& s) {
  if (s.rows() != s.cols()) throw ShapeError("matrix square root of a non-square matrix " + shape_string(s.rows(), s.cols()));
  const Eigen::MatrixXd sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

double frechet_distance(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& s1, const Eigen::VectorXd& mu2,
                        const Eigen::MatrixXd& s2) {
  const auto d = mu1.size();
  if (mu2.size() != d || s1.rows() != d || s1.cols() != d || s2.rows() != d || s2.cols() != d) {
    throw ShapeError("Frechet distance operands disagree in width");
  }
  const Eigen::MatrixXd r1 = sqrtm_psd(s1);
  const Eigen::MatrixXd inner = r1 * s2 * r1;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (inner + inner.transpose()), Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
  const double cross = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double value = (mu1 - mu2).squaredNorm() + s1.trace() + s2.trace() - 2.0 * cross;
  return std::max(0.0, value);
}

Eigen::MatrixXd sample_covariance(const Matrix& x) {
  if (x.rows() < 2) throw DomainError("covariance needs at least two rows, got " + std::to_string(x.rows()));
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(x.rows() - 1);
  if (x.rows() <= x.cols()) cov.diagonal().array() += kCovarianceRidge;
  return cov;
}

double fbd(const Matrix& generated, const Matrix& reference) {
  if (generated.cols() != reference.cols()) {
    throw ShapeError("representation widths differ: " + shape_string(generated.rows(), generated.cols()) + " vs " +
                     shape_string(reference.rows(), reference.cols()));
  }
  const Eigen::VectorXd mu1 = generated.colwise().mean().transpose();
  const Eigen::VectorXd mu2 = reference.colwise().mean().transpose();
  return frechet_distance(mu1, sample_covariance(generated), mu2, sample_covariance(reference));
}

double binding_score(const std::vector<DnaSequence>& seqs, const ProfileScorer& scorer, const std::string& profile) {
  if (seqs.empty()) throw DomainError("binding score of an empty sequence list");
  if (!scorer.has_profile(profile)) throw DomainError("unknown profile \"" + profile + "\"");
  double sum = 0.0;
  for (const auto& s : seqs) {
    const double p = scorer.probability(s, profile);
    if (!(p >= 0.0 && p <= 1.0)) throw NumericError("scorer returned probability " + std::to_string(p));
    sum += p;
  }
  return sum / static_cast<double>(seqs.size());
}

// ---------------------------------------------------------------------------
// Reports

void MetricReport::add(std::string name, double value) { entries_.emplace_back(std::move(name), value); }

std::string MetricReport::table() const {
  std::size_t width = 6;
  for (const auto& [name, value] : entries_) width = std::max(width, name.size());
  std::string out = fmt::format("{:<{}}  {}\n", "metric", width, "value");
  out += fmt::format("{:-<{}}  {:-<12}\n", "", width, "");
  for (const auto& [name, value] : entries_) out += fmt::format("{:<{}}  {:.6g}\n", name, width, value);
  return out;
}

std::string MetricReport::key_values() const {
  std::string out;
  for (const auto& [name, value] : entries_) out += fmt::format("{}={:.17g}\n", name, value);
  return out;
}

}  // namespace seqforge
