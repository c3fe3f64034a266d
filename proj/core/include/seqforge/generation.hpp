/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "seqforge/model.hpp"
#include "seqforge/rng.hpp"

namespace seqforge {

/// Which tokens a sampler may emit: bases plus EOS when extending a
/// sequence, bases only when filling masked positions of fixed length.
enum class LegalSet { Extension, Recovery };

struct GenConfig {
  double temperature = 1.0;
  /// Upper bound on autoregressive output length.
  std::size_t max_len = 256;
  /// Number of unmasking rounds for masked recovery.
  std::size_t unmask_steps = 1;
  std::uint64_t seed = 0;
  /// Output length for masked recovery (required there).
  std::optional<std::size_t> fixed_len;

  /// Throws DomainError for a non-positive or non-finite temperature.
  void validate() const;
};

/// Below this temperature sampling degenerates to argmax.
inline constexpr double kGreedyTemperature = 1e-6;

/// Draws from softmax(logits / temperature) over the legal tokens. A legal
/// +inf logit wins outright; NaN logits raise NumericError.
Token sample_token(const RowVector& logits, double temperature, LegalSet legal, Rng& rng);

/// Exact sampling distribution used by sample_token (zero off the legal set).
RowVector sampling_distribution(const RowVector& logits, double temperature, LegalSet legal);

/// Incremental next-token logits for autoregressive decoding.
class ArLogitSource {
 public:
  virtual ~ArLogitSource() = default;
  /// Feeds the condition prefix and BOS; returns logits for the first base.
  virtual RowVector start(const Condition& condition) = 0;
  /// Appends one emitted base; returns logits for the next position.
  virtual RowVector advance(Token token) = 0;
};

/// Whole-sequence logits for masked recovery (one row per sequence position).
class MaskedLogitSource {
 public:
  virtual ~MaskedLogitSource() = default;
  virtual Matrix predict(const Condition& condition, const std::vector<Token>& tokens) = 0;
};

/// Key/value-cached decoding with a causal checkpoint.
class CheckpointArSource final : public ArLogitSource {
 public:
  explicit CheckpointArSource(const Checkpoint& ckpt);
  RowVector start(const Condition& condition) override;
  RowVector advance(Token token) override;
  std::size_t prefix_len() const noexcept { return state_.prefix_len; }

 private:
  const Checkpoint& ckpt_;
  Transformer<float> model_;
  DecodeState<float> state_;
};

class CheckpointMaskedSource final : public MaskedLogitSource {
 public:
  explicit CheckpointMaskedSource(const Checkpoint& ckpt);
  Matrix predict(const Condition& condition, const std::vector<Token>& tokens) override;

 private:
  const Checkpoint& ckpt_;
  Transformer<float> model_;
};

struct ArTrace {
  /// Logits each emitted token (EOS included) was sampled from.
  std::vector<RowVector> logits;
  /// Calls to start()/advance().
  std::size_t extensions = 0;
  bool stopped_by_eos = false;
};

/// Samples until EOS or cfg.max_len bases. Every emitted token costs exactly
/// one extension; the final token is never fed back.
DnaSequence generate_ar(ArLogitSource& source, const Condition& condition, const GenConfig& cfg, Rng& rng,
                        ArTrace* trace = nullptr);
/// Rejects non-causal checkpoints and lengths the model cannot position.
DnaSequence generate_ar(const Checkpoint& ckpt, const Condition& condition, const GenConfig& cfg, Rng& rng,
                        ArTrace* trace = nullptr);

/// Largest absolute difference between the traced logits and a full forward
/// pass over the generated sequence.
double ar_trace_deviation(const Checkpoint& ckpt, const Condition& condition, const DnaSequence& seq,
                          const ArTrace& trace);

/// Tokens committed per round: round s commits ceil(remaining / rounds_left).
std::vector<std::size_t> unmask_schedule(std::size_t fixed_len, std::size_t steps);

struct MlmTrace {
  /// Sequence indices committed in each round, ascending.
  std::vector<std::vector<std::size_t>> committed;
  /// Token state after each round.
  std::vector<std::vector<Token>> states;
  std::size_t forward_passes = 0;
};

/// Starts from fixed_len MASK tokens; each round commits a uniformly random
/// subset of the still-masked positions. Committed tokens never change.
DnaSequence generate_mlm(MaskedLogitSource& source, const Condition& condition, const GenConfig& cfg, Rng& rng,
                         MlmTrace* trace = nullptr);
DnaSequence generate_mlm(const Checkpoint& ckpt, const Condition& condition, const GenConfig& cfg, Rng& rng,
                         MlmTrace* trace = nullptr);

/// Single parallel pass over an all-MASK input.
DnaSequence generate_one_shot(MaskedLogitSource& source, const Condition& condition, std::size_t fixed_len,
                              double temperature, Rng& rng);

/// One sequence per condition; condition i draws from stream_rng(cfg.seed, i).
std::vector<DnaSequence> generate_batch(const Checkpoint& ckpt, const std::vector<Condition>& conditions,
                                        const GenConfig& cfg);

}  // namespace seqforge
