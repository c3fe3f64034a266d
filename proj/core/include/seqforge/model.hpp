/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "seqforge/conditioning.hpp"
#include "seqforge/seqcore.hpp"
#include "seqforge/tensor.hpp"

namespace seqforge {

enum class AttentionMode { Causal, Bidirectional };

/// How a per-base signal track enters the model: concatenated with each
/// base (feature level) or flattened into prefix rows (sequence level).
enum class SignalIntegration { None, Feature, Prefix };

struct ConditioningConfig {
  /// Number of category labels; 0 disables category conditioning.
  std::size_t num_categories = 0;
  /// Reserves one extra table row used when a label is withheld.
  bool null_category = false;
  /// Width of the category table; 0 means d_model.
  std::size_t category_dim = 0;
  /// Width of protein-embedding rows; 0 disables protein conditioning.
  std::size_t protein_dim = 0;
  SignalIntegration signal = SignalIntegration::None;
  std::size_t signal_dim = 0;
  /// Track length for prefix integration (the flattened input is
  /// signal_len * signal_dim wide).
  std::size_t signal_len = 0;
  std::size_t signal_prefix_rows = 8;
  std::vector<std::string> category_names;

  friend bool operator==(const ConditioningConfig&, const ConditioningConfig&) = default;
};

struct ModelConfig {
  AttentionMode mode = AttentionMode::Causal;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t d_model = 64;
  std::size_t d_ff = 256;
  /// Upper bound on total input rows (prefix + sequence).
  std::size_t max_len = 512;
  /// Position rows reserved for the property prefix.
  std::size_t max_prefix = 16;
  bool tie_embeddings = false;
  ConditioningConfig conditioning;

  /// Throws DomainError listing the first violated constraint.
  void validate() const;
  std::size_t category_rows() const noexcept;
  std::size_t null_category_id() const;

  static ModelConfig micro(AttentionMode mode);
  static ModelConfig tiny(AttentionMode mode);
  /// 12 layers, 12 heads, width 768.
  static ModelConfig encoder_base();
  /// 16 layers, 16 heads, width 768.
  static ModelConfig decoder_base();

  std::string to_json() const;
  static ModelConfig from_json(std::string_view text);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Conditioning attached to one sequence. Prefix rows are emitted in the
/// order protein rows, category rows, pooled-signal rows.
struct Condition {
  std::vector<std::size_t> categories;
  std::optional<Matrix> protein;
  std::optional<SignalTrack> signal;
};

struct ModelInput {
  Condition condition;
  std::vector<Token> tokens;
};

struct Checkpoint {
  ModelConfig config;
  ParameterSet<float> params;
  std::uint64_t step = 0;
  std::uint64_t seed = 0;
};

/// Gaussian(0, 0.02) weights, zero biases, unit layer-norm gains. Parameter
/// values are float32.
Checkpoint init_checkpoint(const ModelConfig& config, std::uint64_t seed);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

template <typename T>
struct LayerNormCache {
  MatrixT<T> xhat;
  Eigen::Matrix<T, Eigen::Dynamic, 1> rstd;
};

template <typename T>
struct BlockCache {
  MatrixT<T> x_in;
  MatrixT<T> ln1_out;
  LayerNormCache<T> ln1;
  MatrixT<T> qkv;
  std::vector<MatrixT<T>> probs;
  MatrixT<T> attn;
  MatrixT<T> x_mid;
  MatrixT<T> ln2_out;
  LayerNormCache<T> ln2;
  MatrixT<T> fc_pre;
  MatrixT<T> fc_act;
};

template <typename T>
struct ForwardCache {
  std::size_t prefix_len = 0;
  std::vector<BlockCache<T>> blocks;
  MatrixT<T> x_final;
  LayerNormCache<T> lnf;
  MatrixT<T> lnf_out;
};

/// Everything backward() needs: the raw input, the integrated rows, the
/// activations and d(loss)/d(logits).
template <typename T>
struct LossGraph {
  ModelInput input;
  ConditionedInputT<T> conditioned;
  ForwardCache<T> cache;
  MatrixT<T> logits;
  MatrixT<T> dlogits;
  std::vector<int> targets;
  T loss = 0;
  std::size_t count = 0;
};

/// Key/value cache for causal incremental decoding.
template <typename T>
struct DecodeState {
  std::size_t prefix_len = 0;
  std::size_t length = 0;
  std::vector<MatrixT<T>> keys;
  std::vector<MatrixT<T>> values;
};

/// Pre-norm transformer over an integrated input. Holds references; the
/// parameter set must outlive it.
template <typename T>
class Transformer {
 public:
  Transformer(const ModelConfig& config, const ParameterSet<T>& params);

  const ModelConfig& config() const noexcept { return config_; }

  /// Property prefix rows for a condition (before position embeddings).
  MatrixT<T> embed_prefix(const Condition& condition) const;
  /// One sequence row (before position embeddings). signal_row is required
  /// under feature-level integration.
  RowVectorT<T> embed_token(Token token, const Matrix* signal, std::size_t index) const;
  /// Sequence- or feature-level integration of a full input.
  ConditionedInputT<T> embed(const ModelInput& input) const;

  /// Adds position embeddings and runs every block and the output head.
  /// Throws ShapeError when the input exceeds max_len or max_prefix.
  MatrixT<T> forward(const ConditionedInputT<T>& input, ForwardCache<T>* cache = nullptr) const;

  /// Mean cross-entropy over rows with target >= 0. Prefix rows must carry
  /// target -1; an all-ignored target vector is rejected.
  LossGraph<T> loss(const ModelInput& input, std::vector<int> row_targets) const;

  /// Accumulates d(loss)/d(param) into grads (same names and shapes).
  void backward(const LossGraph<T>& graph, ParameterSet<T>& grads) const;

  DecodeState<T> begin_decode(std::size_t prefix_len) const;
  /// Appends one integrated row and returns its logits.
  RowVectorT<T> decode_step(DecodeState<T>& state, const RowVectorT<T>& row) const;

 private:
  std::size_t position_row(std::size_t row, std::size_t prefix_len) const;
  void check_lengths(std::size_t rows, std::size_t prefix_len) const;
  void embed_backward(const ModelInput& input, const MatrixT<T>& dinput, std::size_t prefix_len,
                      ParameterSet<T>& grads) const;

  const ModelConfig& config_;
  const ParameterSet<T>& params_;
};

extern template class Transformer<float>;
extern template class Transformer<double>;

/// Cross-entropy over rows with target >= 0; fills dlogits when non-null.
template <typename T>
T cross_entropy(const MatrixT<T>& logits, const std::vector<int>& targets, MatrixT<T>* dlogits);

/// Token rows for next-token training: BOS followed by the bases.
std::vector<Token> ar_tokens(const DnaSequence& seq);
/// Targets for ar_tokens(seq) after a prefix: row prefix+i predicts seq[i],
/// the last row predicts EOS.
std::vector<int> ar_row_targets(std::size_t prefix_len, const DnaSequence& seq);

/// Bases with MASK at the given sequence indices.
std::vector<Token> mlm_tokens(const DnaSequence& seq, const std::vector<std::size_t>& masked);
/// masked holds input row indices (prefix included).
std::vector<int> mlm_row_targets(std::size_t prefix_len, const DnaSequence& seq,
                                 const std::vector<std::size_t>& masked);

/// Next-token loss on an integrated input. The loss mask must mark exactly
/// rows prefix..prefix+n, where the input rows are [prefix; BOS u_1..u_n].
double loss_ar(const Checkpoint& ckpt, const ConditionedInput& input, const DnaSequence& targets);
/// Masked-recovery loss restricted to masked (input row indices).
double loss_mlm(const Checkpoint& ckpt, const ConditionedInput& input, const DnaSequence& targets,
                const std::vector<std::size_t>& masked);

/// Logits for an integrated input, computed at float32 precision.
Matrix forward(const Checkpoint& ckpt, const ConditionedInput& input);

/// Row-wise softmax.
Matrix softmax_rows(const Matrix& logits);

}  // namespace seqforge
