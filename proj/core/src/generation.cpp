/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#include "seqforge/generation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace seqforge {
namespace {

constexpr std::array<std::size_t, 5> kExtensionTokens{0, 1, 2, 3, 5};
constexpr std::array<std::size_t, 4> kRecoveryTokens{0, 1, 2, 3};

std::vector<std::size_t> legal_indices(LegalSet legal) {
  if (legal == LegalSet::Extension) return {kExtensionTokens.begin(), kExtensionTokens.end()};
  return {kRecoveryTokens.begin(), kRecoveryTokens.end()};
}

void check_logits(const RowVector& logits) {
  if (logits.size() != static_cast<Eigen::Index>(kVocabSize)) {
    throw ShapeError("expected " + std::to_string(kVocabSize) + " logits, got " + std::to_string(logits.size()));
  }
}

}  // namespace

void GenConfig::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw DomainError("temperature must be positive and finite");
  }
}

RowVector sampling_distribution(const RowVector& logits, double temperature, LegalSet legal) {
  check_logits(logits);
  if (!(temperature > 0.0)) throw DomainError("temperature must be positive");
  const auto idx = legal_indices(legal);
  RowVector p = RowVector::Zero(static_cast<Eigen::Index>(kVocabSize));
  for (auto i : idx) {
    if (std::isnan(logits(static_cast<Eigen::Index>(i)))) throw NumericError("NaN logit for token " + std::to_string(i));
  }

  std::vector<std::size_t> infinite;
  for (auto i : idx) {
    const double v = logits(static_cast<Eigen::Index>(i));
    if (std::isinf(v) && v > 0) infinite.push_back(i);
  }
  if (!infinite.empty()) {
    for (auto i : infinite) p(static_cast<Eigen::Index>(i)) = 1.0 / static_cast<double>(infinite.size());
    return p;
  }

  double mx = -std::numeric_limits<double>::infinity();
  std::size_t best = idx.front();
  for (auto i : idx) {
    const double v = logits(static_cast<Eigen::Index>(i));
    if (v > mx) {
      mx = v;
      best = i;
    }
  }
  if (std::isinf(mx)) throw DomainError("every legal token has zero probability");
  if (temperature < kGreedyTemperature) {
    p(static_cast<Eigen::Index>(best)) = 1.0;
    return p;
  }
  double sum = 0.0;
  for (auto i : idx) {
    const double e = std::exp((logits(static_cast<Eigen::Index>(i)) - mx) / temperature);
    p(static_cast<Eigen::Index>(i)) = e;
    sum += e;
  }
  return p / sum;
}

Token sample_token(const RowVector& logits, double temperature, LegalSet legal, Rng& rng) {
  const RowVector p = sampling_distribution(logits, temperature, legal);
  const auto idx = legal_indices(legal);
  std::size_t last = idx.front();
  std::size_t nonzero = 0;
  for (auto i : idx) {
    if (p(static_cast<Eigen::Index>(i)) > 0.0) {
      last = i;
      ++nonzero;
    }
  }
  if (nonzero == 1) return token_from_code(static_cast<std::uint8_t>(last));

  const double u = uniform01(rng);
  double acc = 0.0;
  for (auto i : idx) {
    acc += p(static_cast<Eigen::Index>(i));
    if (u < acc) return token_from_code(static_cast<std::uint8_t>(i));
  }
  return token_from_code(static_cast<std::uint8_t>(last));
}

// ---------------------------------------------------------------------------
// Checkpoint-backed sources

CheckpointArSource::CheckpointArSource(const Checkpoint& ckpt) : ckpt_(ckpt), model_(ckpt.config, ckpt.params) {
  if (ckpt.config.mode != AttentionMode::Causal) {
    throw DomainError("autoregressive generation needs a causal checkpoint");
  }
}

RowVector CheckpointArSource::start(const Condition& condition) {
  const MatrixT<float> prefix = model_.embed_prefix(condition);
  state_ = model_.begin_decode(static_cast<std::size_t>(prefix.rows()));
  for (Eigen::Index r = 0; r < prefix.rows(); ++r) model_.decode_step(state_, prefix.row(r));
  return model_.decode_step(state_, model_.embed_token(Token::BOS, nullptr, 0)).cast<double>();
}

RowVector CheckpointArSource::advance(Token token) {
  const std::size_t index = state_.length - state_.prefix_len;
  return model_.decode_step(state_, model_.embed_token(token, nullptr, index)).cast<double>();
}

CheckpointMaskedSource::CheckpointMaskedSource(const Checkpoint& ckpt)
    : ckpt_(ckpt), model_(ckpt.config, ckpt.params) {
  if (ckpt.config.mode != AttentionMode::Bidirectional) {
    throw DomainError("masked recovery needs a bidirectional checkpoint");
  }
}

Matrix CheckpointMaskedSource::predict(const Condition& condition, const std::vector<Token>& tokens) {
  const auto input = model_.embed(ModelInput{condition, tokens});
  const MatrixT<float> logits = model_.forward(input);
  return logits.bottomRows(static_cast<Eigen::Index>(tokens.size())).cast<double>();
}

// ---------------------------------------------------------------------------
// Autoregressive

DnaSequence generate_ar(ArLogitSource& source, const Condition& condition, const GenConfig& cfg, Rng& rng,
                        ArTrace* trace) {
  cfg.validate();
  DnaSequence out;
  if (trace != nullptr) *trace = ArTrace{};
  if (cfg.max_len == 0) return out;

  auto extend = [&](std::optional<Token> token) {
    if (trace != nullptr) ++trace->extensions;
    return token ? source.advance(*token) : source.start(condition);
  };

  RowVector logits = extend(std::nullopt);
  for (;;) {
    const Token t = sample_token(logits, cfg.temperature, LegalSet::Extension, rng);
    if (trace != nullptr) trace->logits.push_back(logits);
    if (t == Token::EOS) {
      if (trace != nullptr) trace->stopped_by_eos = true;
      break;
    }
    out.push_back(t);
    if (out.size() == cfg.max_len) break;
    logits = extend(t);
  }
  return out;
}

DnaSequence generate_ar(const Checkpoint& ckpt, const Condition& condition, const GenConfig& cfg, Rng& rng,
                        ArTrace* trace) {
  CheckpointArSource source(ckpt);
  const Transformer<float> model(ckpt.config, ckpt.params);
  const auto prefix = static_cast<std::size_t>(model.embed_prefix(condition).rows());
  if (prefix + cfg.max_len > ckpt.config.max_len) {
    throw DomainError("max_len " + std::to_string(cfg.max_len) + " with a " + std::to_string(prefix) +
                      "-row prefix exceeds the model limit of " + std::to_string(ckpt.config.max_len) + " rows");
  }
  return generate_ar(source, condition, cfg, rng, trace);
}

double ar_trace_deviation(const Checkpoint& ckpt, const Condition& condition, const DnaSequence& seq,
                          const ArTrace& trace) {
  const Transformer<float> model(ckpt.config, ckpt.params);
  const auto input = model.embed(ModelInput{condition, ar_tokens(seq)});
  const MatrixT<float> logits = model.forward(input);
  const std::size_t expected = seq.size() + (trace.stopped_by_eos ? 1 : 0);
  if (trace.logits.size() != expected) {
    throw ShapeError("trace holds " + std::to_string(trace.logits.size()) + " logit rows for " +
                     std::to_string(expected) + " emitted tokens");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < trace.logits.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(input.prefix_len + i);
    worst = std::max(worst, (logits.row(row).cast<double>() - trace.logits[i]).cwiseAbs().maxCoeff());
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Masked recovery

std::vector<std::size_t> unmask_schedule(std::size_t fixed_len, std::size_t steps) {
  if (steps == 0 || steps > fixed_len) {
    throw DomainError("unmask_steps must lie in [1, " + std::to_string(fixed_len) + "], got " +
                      std::to_string(steps));
  }
  std::vector<std::size_t> counts;
  counts.reserve(steps);
  std::size_t remaining = fixed_len;
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t left = steps - s;
    const std::size_t c = (remaining + left - 1) / left;
    counts.push_back(c);
    remaining -= c;
  }
  return counts;
}

DnaSequence generate_mlm(MaskedLogitSource& source, const Condition& condition, const GenConfig& cfg, Rng& rng,
                         MlmTrace* trace) {
  cfg.validate();
  if (!cfg.fixed_len) throw DomainError("masked recovery requires a fixed sequence length");
  const std::size_t n = *cfg.fixed_len;
  const auto schedule = unmask_schedule(n, cfg.unmask_steps);
  if (trace != nullptr) *trace = MlmTrace{};

  std::vector<Token> tokens(n, Token::MASK);
  std::vector<std::size_t> masked(n);
  std::iota(masked.begin(), masked.end(), std::size_t{0});

  for (const std::size_t count : schedule) {
    const Matrix logits = source.predict(condition, tokens);
    if (logits.rows() != static_cast<Eigen::Index>(n)) {
      throw ShapeError("logit source returned " + std::to_string(logits.rows()) + " rows for " +
                       std::to_string(n) + " positions");
    }
    std::vector<std::size_t> chosen;
    if (count == masked.size()) {
      chosen.swap(masked);
    } else {
      for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, masked.size() - 1);
        std::swap(masked[i], masked[pick(rng)]);
      }
      chosen.assign(masked.begin(), masked.begin() + static_cast<std::ptrdiff_t>(count));
      masked.erase(masked.begin(), masked.begin() + static_cast<std::ptrdiff_t>(count));
      std::sort(masked.begin(), masked.end());
    }
    std::sort(chosen.begin(), chosen.end());
    for (auto pos : chosen) {
      tokens[pos] = sample_token(logits.row(static_cast<Eigen::Index>(pos)), cfg.temperature, LegalSet::Recovery, rng);
    }
    if (trace != nullptr) {
      ++trace->forward_passes;
      trace->committed.push_back(chosen);
      trace->states.push_back(tokens);
    }
  }
  return DnaSequence(std::move(tokens));
}

DnaSequence generate_mlm(const Checkpoint& ckpt, const Condition& condition, const GenConfig& cfg, Rng& rng,
                         MlmTrace* trace) {
  CheckpointMaskedSource source(ckpt);
  return generate_mlm(source, condition, cfg, rng, trace);
}

DnaSequence generate_one_shot(MaskedLogitSource& source, const Condition& condition, std::size_t fixed_len,
                              double temperature, Rng& rng) {
  if (fixed_len == 0) throw DomainError("masked recovery requires a positive length");
  std::vector<Token> tokens(fixed_len, Token::MASK);
  const Matrix logits = source.predict(condition, tokens);
  for (std::size_t i = 0; i < fixed_len; ++i) {
    tokens[i] = sample_token(logits.row(static_cast<Eigen::Index>(i)), temperature, LegalSet::Recovery, rng);
  }
  return DnaSequence(std::move(tokens));
}

std::vector<DnaSequence> generate_batch(const Checkpoint& ckpt, const std::vector<Condition>& conditions,
                                        const GenConfig& cfg) {
  std::vector<DnaSequence> out;
  out.reserve(conditions.size());
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    Rng rng = stream_rng(cfg.seed, i);
    if (ckpt.config.mode == AttentionMode::Causal) {
      out.push_back(generate_ar(ckpt, conditions[i], cfg, rng));
    } else {
      out.push_back(generate_mlm(ckpt, conditions[i], cfg, rng));
    }
  }
  return out;
}

}  // namespace seqforge
