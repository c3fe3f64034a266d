/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#include "seqforge/model.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <json.hpp>

namespace seqforge {
namespace {

using nlohmann::json;

template <typename T>
using ColVectorT = Eigen::Matrix<T, Eigen::Dynamic, 1>;

constexpr double kLayerNormEps = 1e-5;
constexpr double kInitStd = 0.02;

std::string block_name(std::size_t layer, const char* suffix) {
  return "blocks." + std::to_string(layer) + "." + suffix;
}

template <typename T>
MatrixT<T> layer_norm(const MatrixT<T>& x, const MatrixT<T>& gain, const MatrixT<T>& bias,
                      LayerNormCache<T>* cache) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  MatrixT<T> xhat(n, d);
  ColVectorT<T> rstd(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const T mean = x.row(i).mean();
    const T var = (x.row(i).array() - mean).square().mean();
    rstd(i) = T(1) / std::sqrt(var + T(kLayerNormEps));
    xhat.row(i) = (x.row(i).array() - mean) * rstd(i);
  }
  MatrixT<T> y = (xhat.array().rowwise() * gain.row(0).array()).rowwise() + bias.row(0).array();
  if (cache != nullptr) {
    cache->xhat = std::move(xhat);
    cache->rstd = std::move(rstd);
  }
  return y;
}

template <typename T>
MatrixT<T> layer_norm_backward(const MatrixT<T>& dy, const LayerNormCache<T>& cache,
                               const MatrixT<T>& gain, MatrixT<T>& dgain, MatrixT<T>& dbias) {
  dgain.row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  dbias.row(0) += dy.colwise().sum();
  MatrixT<T> dxhat = dy.array().rowwise() * gain.row(0).array();
  MatrixT<T> dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const T mean_d = dxhat.row(i).mean();
    const T mean_dx = (dxhat.row(i).array() * cache.xhat.row(i).array()).mean();
    dx.row(i) = cache.rstd(i) *
                (dxhat.row(i).array() - mean_d - cache.xhat.row(i).array() * mean_dx);
  }
  return dx;
}

template <typename T>
MatrixT<T> linear(const MatrixT<T>& x, const MatrixT<T>& w, const MatrixT<T>& b) {
  MatrixT<T> y(x.rows(), w.rows());
  y.noalias() = x * w.transpose();
  y.rowwise() += b.row(0);
  return y;
}

// dy: n x out, x: n x in. Accumulates weight/bias grads and returns dx.
template <typename T>
MatrixT<T> linear_backward(const MatrixT<T>& dy, const MatrixT<T>& x, const MatrixT<T>& w,
                           MatrixT<T>& dw, MatrixT<T>& db) {
  dw.noalias() += dy.transpose() * x;
  db.row(0) += dy.colwise().sum();
  MatrixT<T> dx(dy.rows(), w.cols());
  dx.noalias() = dy * w;
  return dx;
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

template <typename T>
using ArrayT = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
MatrixT<T> gelu(const MatrixT<T>& x) {
  const auto a = x.array();
  const ArrayT<T> u = T(kGeluC) * (a + T(kGeluA) * a.cube());
  return (T(0.5) * a * (T(1) + u.tanh())).matrix();
}

template <typename T>
ArrayT<T> gelu_grad(const MatrixT<T>& x) {
  const auto a = x.array();
  const ArrayT<T> t = (T(kGeluC) * (a + T(kGeluA) * a.cube())).tanh();
  const ArrayT<T> du = T(kGeluC) * (T(1) + T(3 * kGeluA) * a.square());
  return T(0.5) * (T(1) + t) + T(0.5) * a * (T(1) - t.square()) * du;
}

// In-place softmax over the first `len` entries of a row; the rest are zeroed.
template <typename Row>
void softmax_prefix(Row&& row, Eigen::Index len) {
  using T = typename std::decay_t<Row>::Scalar;
  const T mx = row.head(len).maxCoeff();
  row.head(len).array() = (row.head(len).array() - mx).exp();
  row.head(len) /= row.head(len).sum();
  row.tail(row.size() - len).setZero();
}

const char* mode_name(AttentionMode m) { return m == AttentionMode::Causal ? "causal" : "bidirectional"; }

const char* signal_name(SignalIntegration s) {
  switch (s) {
    case SignalIntegration::Feature: return "feature";
    case SignalIntegration::Prefix: return "prefix";
    default: return "none";
  }
}

SignalIntegration parse_signal(const std::string& s) {
  if (s == "none") return SignalIntegration::None;
  if (s == "feature") return SignalIntegration::Feature;
  if (s == "prefix") return SignalIntegration::Prefix;
  throw DomainError("unknown signal integration: " + s);
}

}  // namespace

// ---------------------------------------------------------------------------
// ModelConfig

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw DomainError("invalid model config: " + msg); };
  if (heads == 0 || d_model == 0) fail("heads and d_model must be positive");
  if (d_model % heads != 0) fail("d_model must be divisible by heads");
  if (d_ff == 0) fail("d_ff must be positive");
  if (max_len == 0) fail("max_len must be positive");
  const auto& c = conditioning;
  if (c.null_category && c.num_categories == 0) fail("null_category requires categories");
  if (!c.category_names.empty() && c.category_names.size() != c.num_categories) {
    fail("category_names must list every category");
  }
  if (c.signal != SignalIntegration::None && c.signal_dim == 0) fail("signal_dim must be positive");
  if (c.signal == SignalIntegration::Prefix && (c.signal_len == 0 || c.signal_prefix_rows == 0)) {
    fail("prefix signal needs signal_len and signal_prefix_rows");
  }
  if (c.signal == SignalIntegration::Feature && mode != AttentionMode::Bidirectional) {
    fail("feature-level signal integration requires bidirectional attention");
  }
}

std::size_t ModelConfig::category_rows() const noexcept {
  return conditioning.num_categories + (conditioning.null_category ? 1 : 0);
}

std::size_t ModelConfig::null_category_id() const {
  if (!conditioning.null_category) throw DomainError("model has no null category");
  return conditioning.num_categories;
}

ModelConfig ModelConfig::micro(AttentionMode mode) {
  ModelConfig c;
  c.mode = mode;
  c.layers = 2;
  c.heads = 2;
  c.d_model = 16;
  c.d_ff = 64;
  c.max_len = 64;
  c.max_prefix = 8;
  return c;
}

ModelConfig ModelConfig::tiny(AttentionMode mode) {
  ModelConfig c;
  c.mode = mode;
  c.layers = 2;
  c.heads = 4;
  c.d_model = 64;
  c.d_ff = 256;
  c.max_len = 512;
  c.max_prefix = 16;
  return c;
}

ModelConfig ModelConfig::encoder_base() {
  ModelConfig c;
  c.mode = AttentionMode::Bidirectional;
  c.layers = 12;
  c.heads = 12;
  c.d_model = 768;
  c.d_ff = 3072;
  c.max_len = 2048;
  c.max_prefix = 1024;
  return c;
}

ModelConfig ModelConfig::decoder_base() {
  ModelConfig c = encoder_base();
  c.mode = AttentionMode::Causal;
  c.layers = 16;
  c.heads = 16;
  return c;
}

std::string ModelConfig::to_json() const {
  nlohmann::ordered_json j;
  j["mode"] = mode_name(mode);
  j["layers"] = layers;
  j["heads"] = heads;
  j["d_model"] = d_model;
  j["d_ff"] = d_ff;
  j["max_len"] = max_len;
  j["max_prefix"] = max_prefix;
  j["vocab"] = kVocabSize;
  j["tie_embeddings"] = tie_embeddings;
  const auto& c = conditioning;
  j["conditioning"] = {{"num_categories", c.num_categories},
                       {"null_category", c.null_category},
                       {"category_dim", c.category_dim},
                       {"protein_dim", c.protein_dim},
                       {"signal", signal_name(c.signal)},
                       {"signal_dim", c.signal_dim},
                       {"signal_len", c.signal_len},
                       {"signal_prefix_rows", c.signal_prefix_rows},
                       {"category_names", c.category_names}};
  return j.dump();
}

ModelConfig ModelConfig::from_json(std::string_view text) {
  ModelConfig m;
  try {
    const json j = json::parse(text);
    const std::string mode = j.at("mode");
    if (mode == "causal") {
      m.mode = AttentionMode::Causal;
    } else if (mode == "bidirectional") {
      m.mode = AttentionMode::Bidirectional;
    } else {
      throw DomainError("unknown attention mode: " + mode);
    }
    m.layers = j.at("layers");
    m.heads = j.at("heads");
    m.d_model = j.at("d_model");
    m.d_ff = j.at("d_ff");
    m.max_len = j.at("max_len");
    m.max_prefix = j.at("max_prefix");
    m.tie_embeddings = j.value("tie_embeddings", false);
    if (j.value("vocab", kVocabSize) != kVocabSize) throw DomainError("vocabulary size must be 8");
    const json& c = j.at("conditioning");
    m.conditioning.num_categories = c.at("num_categories");
    m.conditioning.null_category = c.at("null_category");
    m.conditioning.category_dim = c.at("category_dim");
    m.conditioning.protein_dim = c.at("protein_dim");
    m.conditioning.signal = parse_signal(c.at("signal"));
    m.conditioning.signal_dim = c.at("signal_dim");
    m.conditioning.signal_len = c.at("signal_len");
    m.conditioning.signal_prefix_rows = c.at("signal_prefix_rows");
    m.conditioning.category_names = c.value("category_names", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad model config: ") + e.what(), 0);
  }
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------
// Checkpoints

Checkpoint init_checkpoint(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Checkpoint ckpt;
  ckpt.config = config;
  ckpt.seed = seed;
  auto& p = ckpt.params;
  const auto d = static_cast<Eigen::Index>(config.d_model);
  const auto ff = static_cast<Eigen::Index>(config.d_ff);
  const auto& c = config.conditioning;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, kInitStd);
  auto gaussian = [&](const std::string& name, Eigen::Index r, Eigen::Index k) {
    auto& t = p.add(name, r, k);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<float>(normal(rng));
  };

  gaussian("tok_emb", kVocabSize, d);
  gaussian("pos_emb", static_cast<Eigen::Index>(config.max_prefix + config.max_len), d);
  if (c.num_categories > 0) {
    const auto cd = static_cast<Eigen::Index>(c.category_dim == 0 ? config.d_model : c.category_dim);
    gaussian("cond.category.table", static_cast<Eigen::Index>(config.category_rows()), cd);
    gaussian("cond.category.weight", d, cd);
    p.add("cond.category.bias", 1, d);
  }
  if (c.protein_dim > 0) {
    gaussian("cond.protein.weight", d, static_cast<Eigen::Index>(c.protein_dim));
    p.add("cond.protein.bias", 1, d);
  }
  if (c.signal == SignalIntegration::Feature) {
    gaussian("cond.signal.weight", d, static_cast<Eigen::Index>(c.signal_dim));
    p.add("cond.signal.bias", 1, d);
  } else if (c.signal == SignalIntegration::Prefix) {
    const auto out = static_cast<Eigen::Index>(c.signal_prefix_rows) * d;
    gaussian("cond.signal_prefix.weight", out, static_cast<Eigen::Index>(c.signal_len * c.signal_dim));
    p.add("cond.signal_prefix.bias", 1, out);
  }
  for (std::size_t l = 0; l < config.layers; ++l) {
    p.add(block_name(l, "ln1.gain"), 1, d).setOnes();
    p.add(block_name(l, "ln1.bias"), 1, d);
    gaussian(block_name(l, "attn.qkv.weight"), 3 * d, d);
    p.add(block_name(l, "attn.qkv.bias"), 1, 3 * d);
    gaussian(block_name(l, "attn.out.weight"), d, d);
    p.add(block_name(l, "attn.out.bias"), 1, d);
    p.add(block_name(l, "ln2.gain"), 1, d).setOnes();
    p.add(block_name(l, "ln2.bias"), 1, d);
    gaussian(block_name(l, "mlp.fc.weight"), ff, d);
    p.add(block_name(l, "mlp.fc.bias"), 1, ff);
    gaussian(block_name(l, "mlp.proj.weight"), d, ff);
    p.add(block_name(l, "mlp.proj.bias"), 1, d);
  }
  p.add("ln_f.gain", 1, d).setOnes();
  p.add("ln_f.bias", 1, d);
  if (!config.tie_embeddings) gaussian("head.weight", kVocabSize, d);
  p.add("head.bias", 1, kVocabSize);
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  nlohmann::ordered_json meta;
  meta["config"] = json::parse(ckpt.config.to_json());
  meta["step"] = ckpt.step;
  meta["seed"] = ckpt.seed;
  write_tensor_file(path, TensorFile{"checkpoint", meta.dump(), ckpt.params});
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  TensorFile file = read_tensor_file(path);
  if (file.kind != "checkpoint") throw ParseError("not a model checkpoint: " + path.string(), 0);
  const json meta = json::parse(file.metadata_json);
  Checkpoint ckpt;
  ckpt.config = ModelConfig::from_json(meta.at("config").dump());
  ckpt.step = meta.at("step");
  ckpt.seed = meta.at("seed");
  ckpt.params = std::move(file.tensors);
  const Checkpoint reference = init_checkpoint(ckpt.config, 0);
  for (const auto& [name, t] : reference.params) {
    if (!ckpt.params.contains(name)) throw ParseError("checkpoint lacks tensor " + name, 0);
    const auto& got = ckpt.params.at(name);
    if (got.rows() != t.rows() || got.cols() != t.cols()) {
      throw ShapeError("tensor " + name + " has shape " + shape_string(got.rows(), got.cols()) +
                       ", config expects " + shape_string(t.rows(), t.cols()));
    }
  }
  if (ckpt.params.size() != reference.params.size()) throw ParseError("checkpoint has extra tensors", 0);
  return ckpt;
}

// ---------------------------------------------------------------------------
// Transformer

template <typename T>
Transformer<T>::Transformer(const ModelConfig& config, const ParameterSet<T>& params)
    : config_(config), params_(params) {
  config_.validate();
}

template <typename T>
std::size_t Transformer<T>::position_row(std::size_t row, std::size_t prefix_len) const {
  return row < prefix_len ? row : config_.max_prefix + (row - prefix_len);
}

template <typename T>
void Transformer<T>::check_lengths(std::size_t rows, std::size_t prefix_len) const {
  if (prefix_len > config_.max_prefix) {
    throw ShapeError("property prefix of " + std::to_string(prefix_len) + " rows exceeds max_prefix " +
                     std::to_string(config_.max_prefix));
  }
  if (rows > config_.max_len) {
    throw ShapeError("input of " + std::to_string(rows) + " rows exceeds max_len " +
                     std::to_string(config_.max_len));
  }
}

template <typename T>
MatrixT<T> Transformer<T>::embed_prefix(const Condition& condition) const {
  const auto& c = config_.conditioning;
  const auto d = static_cast<Eigen::Index>(config_.d_model);
  std::vector<MatrixT<T>> blocks;
  Eigen::Index rows = 0;

  if (condition.protein) {
    if (c.protein_dim == 0) throw DomainError("model has no protein conditioning");
    blocks.push_back(apply_affine<T>(MatrixT<T>(condition.protein->template cast<T>()),
                                     params_.at("cond.protein.weight"),
                                     RowVectorT<T>(params_.at("cond.protein.bias").row(0))));
    rows += blocks.back().rows();
  }
  if (!condition.categories.empty()) {
    if (c.num_categories == 0) throw DomainError("model has no category conditioning");
    const auto& table = params_.at("cond.category.table");
    MatrixT<T> picked(static_cast<Eigen::Index>(condition.categories.size()), table.cols());
    for (std::size_t i = 0; i < condition.categories.size(); ++i) {
      const auto id = condition.categories[i];
      if (id >= config_.category_rows()) {
        throw DomainError("category id " + std::to_string(id) + " out of range for table with " +
                          std::to_string(config_.category_rows()) + " rows");
      }
      picked.row(static_cast<Eigen::Index>(i)) = table.row(static_cast<Eigen::Index>(id));
    }
    blocks.push_back(apply_affine<T>(picked, params_.at("cond.category.weight"),
                                     RowVectorT<T>(params_.at("cond.category.bias").row(0))));
    rows += blocks.back().rows();
  }
  if (c.signal == SignalIntegration::Prefix) {
    if (!condition.signal) throw DomainError("model expects a signal track for its prefix");
    const Matrix& s = condition.signal->values();
    if (static_cast<std::size_t>(s.size()) != c.signal_len * c.signal_dim ||
        static_cast<std::size_t>(s.cols()) != c.signal_dim) {
      throw ShapeError("signal track " + shape_string(s.rows(), s.cols()) + " does not match (" +
                       std::to_string(c.signal_len) + " x " + std::to_string(c.signal_dim) + ")");
    }
    RowVectorT<T> flat = Eigen::Map<const RowVector>(s.data(), s.size()).template cast<T>();
    RowVectorT<T> y = apply_affine<T>(flat, params_.at("cond.signal_prefix.weight"),
                                      RowVectorT<T>(params_.at("cond.signal_prefix.bias").row(0)));
    const auto k = static_cast<Eigen::Index>(c.signal_prefix_rows);
    blocks.push_back(Eigen::Map<const MatrixT<T>>(y.data(), k, d));
    rows += k;
  }

  MatrixT<T> out(rows, d);
  Eigen::Index r = 0;
  for (const auto& b : blocks) {
    out.middleRows(r, b.rows()) = b;
    r += b.rows();
  }
  return out;
}

template <typename T>
RowVectorT<T> Transformer<T>::embed_token(Token token, const Matrix* signal, std::size_t index) const {
  RowVectorT<T> row = params_.at("tok_emb").row(code(token));
  if (config_.conditioning.signal == SignalIntegration::Feature) {
    if (signal == nullptr) throw DomainError("model expects an aligned signal track");
    const auto& w = params_.at("cond.signal.weight");
    RowVectorT<T> s = signal->row(static_cast<Eigen::Index>(index)).template cast<T>();
    row.noalias() += s * w.transpose();
    row += params_.at("cond.signal.bias").row(0);
  }
  return row;
}

template <typename T>
ConditionedInputT<T> Transformer<T>::embed(const ModelInput& input) const {
  const Matrix* signal = nullptr;
  if (config_.conditioning.signal == SignalIntegration::Feature) {
    if (!input.condition.signal) throw DomainError("model expects an aligned signal track");
    signal = &input.condition.signal->values();
    if (signal->rows() != static_cast<Eigen::Index>(input.tokens.size()) ||
        signal->cols() != static_cast<Eigen::Index>(config_.conditioning.signal_dim)) {
      throw ShapeError("sequence has " + std::to_string(input.tokens.size()) +
                       " positions but signal track is " + shape_string(signal->rows(), signal->cols()));
    }
  }
  MatrixT<T> body(static_cast<Eigen::Index>(input.tokens.size()),
                  static_cast<Eigen::Index>(config_.d_model));
  for (std::size_t i = 0; i < input.tokens.size(); ++i) {
    body.row(static_cast<Eigen::Index>(i)) = embed_token(input.tokens[i], signal, i);
  }
  return integrate_sequence_level<T>(embed_prefix(input.condition), body);
}

template <typename T>
MatrixT<T> Transformer<T>::forward(const ConditionedInputT<T>& input, ForwardCache<T>* cache) const {
  const std::size_t rows = input.rows();
  check_lengths(rows, input.prefix_len);
  const auto d = static_cast<Eigen::Index>(config_.d_model);
  if (input.values.cols() != d) {
    throw ShapeError("input width " + std::to_string(input.values.cols()) + " != d_model " +
                     std::to_string(d));
  }
  const auto n = static_cast<Eigen::Index>(rows);
  const auto heads = static_cast<Eigen::Index>(config_.heads);
  const Eigen::Index dk = d / heads;
  const T scale = T(1) / std::sqrt(T(dk));
  const bool causal = config_.mode == AttentionMode::Causal;

  const auto& pos = params_.at("pos_emb");
  MatrixT<T> x = input.values;
  for (std::size_t r = 0; r < rows; ++r) {
    x.row(static_cast<Eigen::Index>(r)) += pos.row(static_cast<Eigen::Index>(position_row(r, input.prefix_len)));
  }
  if (cache != nullptr) {
    cache->prefix_len = input.prefix_len;
    cache->blocks.assign(config_.layers, BlockCache<T>{});
  }

  for (std::size_t l = 0; l < config_.layers; ++l) {
    BlockCache<T> local;
    BlockCache<T>& bc = cache != nullptr ? cache->blocks[l] : local;
    bc.x_in = x;
    bc.ln1_out = layer_norm<T>(x, params_.at(block_name(l, "ln1.gain")), params_.at(block_name(l, "ln1.bias")), &bc.ln1);
    bc.qkv = linear<T>(bc.ln1_out, params_.at(block_name(l, "attn.qkv.weight")), params_.at(block_name(l, "attn.qkv.bias")));
    bc.attn.resize(n, d);
    bc.probs.resize(static_cast<std::size_t>(heads));
    for (Eigen::Index h = 0; h < heads; ++h) {
      auto q = bc.qkv.middleCols(h * dk, dk);
      auto k = bc.qkv.middleCols(d + h * dk, dk);
      auto v = bc.qkv.middleCols(2 * d + h * dk, dk);
      MatrixT<T>& p = bc.probs[static_cast<std::size_t>(h)];
      p.resize(n, n);
      p.noalias() = q * k.transpose();
      p *= scale;
      for (Eigen::Index i = 0; i < n; ++i) softmax_prefix(p.row(i), causal ? i + 1 : n);
      bc.attn.middleCols(h * dk, dk).noalias() = p * v;
    }
    x += linear<T>(bc.attn, params_.at(block_name(l, "attn.out.weight")), params_.at(block_name(l, "attn.out.bias")));
    bc.x_mid = x;
    bc.ln2_out = layer_norm<T>(x, params_.at(block_name(l, "ln2.gain")), params_.at(block_name(l, "ln2.bias")), &bc.ln2);
    bc.fc_pre = linear<T>(bc.ln2_out, params_.at(block_name(l, "mlp.fc.weight")), params_.at(block_name(l, "mlp.fc.bias")));
    bc.fc_act = gelu<T>(bc.fc_pre);
    x += linear<T>(bc.fc_act, params_.at(block_name(l, "mlp.proj.weight")), params_.at(block_name(l, "mlp.proj.bias")));
  }

  LayerNormCache<T> lnf_local;
  MatrixT<T> lnf_out = layer_norm<T>(x, params_.at("ln_f.gain"), params_.at("ln_f.bias"),
                                     cache != nullptr ? &cache->lnf : &lnf_local);
  const auto& head_w = config_.tie_embeddings ? params_.at("tok_emb") : params_.at("head.weight");
  MatrixT<T> logits = linear<T>(lnf_out, head_w, params_.at("head.bias"));
  if (cache != nullptr) {
    cache->x_final = std::move(x);
    cache->lnf_out = std::move(lnf_out);
  }
  return logits;
}

template <typename T>
LossGraph<T> Transformer<T>::loss(const ModelInput& input, std::vector<int> row_targets) const {
  LossGraph<T> g;
  g.input = input;
  g.conditioned = embed(input);
  if (row_targets.size() != g.conditioned.rows()) {
    throw ShapeError("target vector has " + std::to_string(row_targets.size()) + " entries for " +
                     std::to_string(g.conditioned.rows()) + " input rows");
  }
  for (std::size_t r = 0; r < g.conditioned.prefix_len; ++r) {
    if (row_targets[r] >= 0) throw DomainError("property prefix row " + std::to_string(r) + " carries a loss target");
  }
  g.logits = forward(g.conditioned, &g.cache);
  g.targets = std::move(row_targets);
  g.loss = cross_entropy<T>(g.logits, g.targets, &g.dlogits);
  g.count = static_cast<std::size_t>(std::count_if(g.targets.begin(), g.targets.end(), [](int t) { return t >= 0; }));
  return g;
}

template <typename T>
void Transformer<T>::backward(const LossGraph<T>& graph, ParameterSet<T>& grads) const {
  const ForwardCache<T>& cache = graph.cache;
  const auto d = static_cast<Eigen::Index>(config_.d_model);
  const auto heads = static_cast<Eigen::Index>(config_.heads);
  const Eigen::Index dk = d / heads;
  const T scale = T(1) / std::sqrt(T(dk));
  const auto n = graph.logits.rows();

  // Output head.
  const bool tied = config_.tie_embeddings;
  const auto& head_w = tied ? params_.at("tok_emb") : params_.at("head.weight");
  MatrixT<T> dlnf = linear_backward<T>(graph.dlogits, cache.lnf_out, head_w,
                                       grads.at(tied ? "tok_emb" : "head.weight"), grads.at("head.bias"));
  MatrixT<T> dx = layer_norm_backward<T>(dlnf, cache.lnf, params_.at("ln_f.gain"), grads.at("ln_f.gain"),
                                         grads.at("ln_f.bias"));

  for (std::size_t li = config_.layers; li-- > 0;) {
    const BlockCache<T>& bc = cache.blocks[li];
    auto P = [&](const char* s) -> const MatrixT<T>& { return params_.at(block_name(li, s)); };
    auto G = [&](const char* s) -> MatrixT<T>& { return grads.at(block_name(li, s)); };

    // MLP residual branch.
    MatrixT<T> dact = linear_backward<T>(dx, bc.fc_act, P("mlp.proj.weight"), G("mlp.proj.weight"), G("mlp.proj.bias"));
    MatrixT<T> dpre = (dact.array() * gelu_grad<T>(bc.fc_pre)).matrix();
    MatrixT<T> dln2 = linear_backward<T>(dpre, bc.ln2_out, P("mlp.fc.weight"), G("mlp.fc.weight"), G("mlp.fc.bias"));
    dx += layer_norm_backward<T>(dln2, bc.ln2, P("ln2.gain"), G("ln2.gain"), G("ln2.bias"));

    // Attention residual branch.
    MatrixT<T> dattn = linear_backward<T>(dx, bc.attn, P("attn.out.weight"), G("attn.out.weight"), G("attn.out.bias"));
    MatrixT<T> dqkv = MatrixT<T>::Zero(n, 3 * d);
    for (Eigen::Index h = 0; h < heads; ++h) {
      const MatrixT<T>& p = bc.probs[static_cast<std::size_t>(h)];
      auto q = bc.qkv.middleCols(h * dk, dk);
      auto k = bc.qkv.middleCols(d + h * dk, dk);
      auto v = bc.qkv.middleCols(2 * d + h * dk, dk);
      auto dout = dattn.middleCols(h * dk, dk);
      MatrixT<T> dp(n, n);
      dp.noalias() = dout * v.transpose();
      dqkv.middleCols(2 * d + h * dk, dk).noalias() += p.transpose() * dout;
      // Softmax Jacobian; masked entries have p = 0 and drop out.
      ColVectorT<T> rowdot = (dp.array() * p.array()).rowwise().sum();
      MatrixT<T> ds = p.array() * (dp.colwise() - rowdot).array();
      ds *= scale;
      dqkv.middleCols(h * dk, dk).noalias() += ds * k;
      dqkv.middleCols(d + h * dk, dk).noalias() += ds.transpose() * q;
    }
    MatrixT<T> dln1 = linear_backward<T>(dqkv, bc.ln1_out, P("attn.qkv.weight"), G("attn.qkv.weight"), G("attn.qkv.bias"));
    dx += layer_norm_backward<T>(dln1, bc.ln1, P("ln1.gain"), G("ln1.gain"), G("ln1.bias"));
  }

  auto& dpos = grads.at("pos_emb");
  for (Eigen::Index r = 0; r < n; ++r) {
    dpos.row(static_cast<Eigen::Index>(position_row(static_cast<std::size_t>(r), cache.prefix_len))) += dx.row(r);
  }
  embed_backward(graph.input, dx, cache.prefix_len, grads);
}

template <typename T>
void Transformer<T>::embed_backward(const ModelInput& input, const MatrixT<T>& dinput, std::size_t prefix_len,
                                    ParameterSet<T>& grads) const {
  const auto& c = config_.conditioning;
  const auto d = static_cast<Eigen::Index>(config_.d_model);
  Eigen::Index r = 0;

  if (input.condition.protein) {
    const MatrixT<T> prot = input.condition.protein->template cast<T>();
    auto dh = dinput.middleRows(r, prot.rows());
    grads.at("cond.protein.weight").noalias() += dh.transpose() * prot;
    grads.at("cond.protein.bias").row(0) += dh.colwise().sum();
    r += prot.rows();
  }
  if (!input.condition.categories.empty()) {
    const auto& table = params_.at("cond.category.table");
    const auto& w = params_.at("cond.category.weight");
    auto& dtable = grads.at("cond.category.table");
    auto& dw = grads.at("cond.category.weight");
    auto& db = grads.at("cond.category.bias");
    for (std::size_t id : input.condition.categories) {
      const auto row = dinput.row(r);
      const auto idx = static_cast<Eigen::Index>(id);
      dw.noalias() += row.transpose() * table.row(idx);
      db.row(0) += row;
      dtable.row(idx).noalias() += row * w;
      ++r;
    }
  }
  if (c.signal == SignalIntegration::Prefix) {
    const Matrix& s = input.condition.signal->values();
    RowVectorT<T> flat = Eigen::Map<const RowVector>(s.data(), s.size()).template cast<T>();
    const auto k = static_cast<Eigen::Index>(c.signal_prefix_rows);
    MatrixT<T> block = dinput.middleRows(r, k);
    Eigen::Map<const RowVectorT<T>> dy(block.data(), k * d);
    grads.at("cond.signal_prefix.weight").noalias() += dy.transpose() * flat;
    grads.at("cond.signal_prefix.bias").row(0) += dy;
    r += k;
  }
  if (static_cast<std::size_t>(r) != prefix_len) throw DomainError("prefix bookkeeping mismatch");

  auto& dtok = grads.at("tok_emb");
  const auto body_rows = static_cast<Eigen::Index>(input.tokens.size());
  for (Eigen::Index i = 0; i < body_rows; ++i) {
    dtok.row(code(input.tokens[static_cast<std::size_t>(i)])) += dinput.row(r + i);
  }
  if (c.signal == SignalIntegration::Feature) {
    const MatrixT<T> s = input.condition.signal->values().template cast<T>();
    auto dbody = dinput.middleRows(r, body_rows);
    grads.at("cond.signal.weight").noalias() += dbody.transpose() * s;
    grads.at("cond.signal.bias").row(0) += dbody.colwise().sum();
  }
}

template <typename T>
DecodeState<T> Transformer<T>::begin_decode(std::size_t prefix_len) const {
  if (config_.mode != AttentionMode::Causal) throw DomainError("incremental decoding needs a causal model");
  check_lengths(prefix_len, prefix_len);
  DecodeState<T> s;
  s.prefix_len = prefix_len;
  const auto cap = static_cast<Eigen::Index>(config_.max_len);
  const auto d = static_cast<Eigen::Index>(config_.d_model);
  s.keys.assign(config_.layers, MatrixT<T>(cap, d));
  s.values.assign(config_.layers, MatrixT<T>(cap, d));
  return s;
}

template <typename T>
RowVectorT<T> Transformer<T>::decode_step(DecodeState<T>& state, const RowVectorT<T>& row) const {
  check_lengths(state.length + 1, state.prefix_len);
  const auto d = static_cast<Eigen::Index>(config_.d_model);
  const auto heads = static_cast<Eigen::Index>(config_.heads);
  const Eigen::Index dk = d / heads;
  const T scale = T(1) / std::sqrt(T(dk));
  const auto t = static_cast<Eigen::Index>(state.length);

  MatrixT<T> x = row;
  x.row(0) += params_.at("pos_emb").row(static_cast<Eigen::Index>(position_row(state.length, state.prefix_len)));
  for (std::size_t l = 0; l < config_.layers; ++l) {
    MatrixT<T> h = layer_norm<T>(x, params_.at(block_name(l, "ln1.gain")), params_.at(block_name(l, "ln1.bias")), nullptr);
    MatrixT<T> qkv = linear<T>(h, params_.at(block_name(l, "attn.qkv.weight")), params_.at(block_name(l, "attn.qkv.bias")));
    state.keys[l].row(t) = qkv.row(0).segment(d, d);
    state.values[l].row(t) = qkv.row(0).segment(2 * d, d);
    MatrixT<T> attn(1, d);
    for (Eigen::Index hd = 0; hd < heads; ++hd) {
      auto q = qkv.row(0).segment(hd * dk, dk);
      auto keys = state.keys[l].block(0, hd * dk, t + 1, dk);
      auto vals = state.values[l].block(0, hd * dk, t + 1, dk);
      RowVectorT<T> p(t + 1);
      p.noalias() = q * keys.transpose();
      p *= scale;
      softmax_prefix(p, t + 1);
      attn.row(0).segment(hd * dk, dk).noalias() = p * vals;
    }
    x += linear<T>(attn, params_.at(block_name(l, "attn.out.weight")), params_.at(block_name(l, "attn.out.bias")));
    MatrixT<T> h2 = layer_norm<T>(x, params_.at(block_name(l, "ln2.gain")), params_.at(block_name(l, "ln2.bias")), nullptr);
    MatrixT<T> act =
        gelu<T>(linear<T>(h2, params_.at(block_name(l, "mlp.fc.weight")), params_.at(block_name(l, "mlp.fc.bias"))));
    x += linear<T>(act, params_.at(block_name(l, "mlp.proj.weight")), params_.at(block_name(l, "mlp.proj.bias")));
  }
  ++state.length;
  MatrixT<T> lnf = layer_norm<T>(x, params_.at("ln_f.gain"), params_.at("ln_f.bias"), nullptr);
  const auto& head_w = config_.tie_embeddings ? params_.at("tok_emb") : params_.at("head.weight");
  return linear<T>(lnf, head_w, params_.at("head.bias")).row(0);
}

template class Transformer<float>;
template class Transformer<double>;

// ---------------------------------------------------------------------------
// Losses

template <typename T>
T cross_entropy(const MatrixT<T>& logits, const std::vector<int>& targets, MatrixT<T>* dlogits) {
  if (targets.size() != static_cast<std::size_t>(logits.rows())) {
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                     std::to_string(logits.rows()) + " rows");
  }
  const auto count = std::count_if(targets.begin(), targets.end(), [](int t) { return t >= 0; });
  if (count == 0) throw DomainError("loss mask selects no positions");
  if (dlogits != nullptr) dlogits->setZero(logits.rows(), logits.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const int t = targets[static_cast<std::size_t>(i)];
    if (t < 0) continue;
    if (t >= logits.cols()) throw DomainError("target token out of range");
    const T mx = logits.row(i).maxCoeff();
    RowVectorT<T> e = (logits.row(i).array() - mx).exp();
    const T sum = e.sum();
    total += static_cast<double>(std::log(sum) + mx - logits(i, t));
    if (dlogits != nullptr) {
      dlogits->row(i) = e / sum;
      (*dlogits)(i, t) -= T(1);
      dlogits->row(i) /= T(count);
    }
  }
  return static_cast<T>(total / static_cast<double>(count));
}

template float cross_entropy<float>(const MatrixT<float>&, const std::vector<int>&, MatrixT<float>*);
template double cross_entropy<double>(const MatrixT<double>&, const std::vector<int>&, MatrixT<double>*);

std::vector<Token> ar_tokens(const DnaSequence& seq) {
  if (!seq.is_pure()) throw DomainError("next-token training needs a pure sequence");
  std::vector<Token> tokens;
  tokens.reserve(seq.size() + 1);
  tokens.push_back(Token::BOS);
  tokens.insert(tokens.end(), seq.tokens().begin(), seq.tokens().end());
  return tokens;
}

std::vector<int> ar_row_targets(std::size_t prefix_len, const DnaSequence& seq) {
  std::vector<int> targets(prefix_len + seq.size() + 1, -1);
  for (std::size_t i = 0; i < seq.size(); ++i) targets[prefix_len + i] = code(seq[i]);
  targets[prefix_len + seq.size()] = code(Token::EOS);
  return targets;
}

std::vector<Token> mlm_tokens(const DnaSequence& seq, const std::vector<std::size_t>& masked) {
  if (!seq.is_pure()) throw DomainError("masked training needs a pure sequence");
  std::vector<Token> tokens(seq.tokens().begin(), seq.tokens().end());
  for (std::size_t i : masked) {
    if (i >= tokens.size()) throw DomainError("mask index " + std::to_string(i) + " out of range");
    tokens[i] = Token::MASK;
  }
  return tokens;
}

std::vector<int> mlm_row_targets(std::size_t prefix_len, const DnaSequence& seq,
                                 const std::vector<std::size_t>& masked) {
  if (masked.empty()) throw DomainError("mask set is empty");
  std::vector<int> targets(prefix_len + seq.size(), -1);
  for (std::size_t row : masked) {
    if (row < prefix_len) throw DomainError("mask set contains property prefix row " + std::to_string(row));
    if (row >= targets.size()) throw DomainError("mask index " + std::to_string(row) + " out of range");
    targets[row] = code(seq[row - prefix_len]);
  }
  return targets;
}

namespace {

ConditionedInputT<float> to_float(const ConditionedInput& in) {
  return ConditionedInputT<float>{in.values.cast<float>(), in.prefix_len, in.loss_mask};
}

}  // namespace

Matrix forward(const Checkpoint& ckpt, const ConditionedInput& input) {
  Transformer<float> model(ckpt.config, ckpt.params);
  return model.forward(to_float(input)).cast<double>();
}

double loss_ar(const Checkpoint& ckpt, const ConditionedInput& input, const DnaSequence& targets) {
  const std::size_t n = targets.size();
  if (input.loss_mask.size() != input.rows()) throw ShapeError("loss mask length differs from input rows");
  if (input.rows() != input.prefix_len + n + 1) {
    throw ShapeError("next-token input needs prefix + BOS + " + std::to_string(n) + " rows, got " +
                     std::to_string(input.rows()));
  }
  if (std::none_of(input.loss_mask.begin(), input.loss_mask.end(), [](bool b) { return b; })) {
    throw DomainError("loss mask selects no positions");
  }
  for (std::size_t r = 0; r < input.rows(); ++r) {
    if (input.loss_mask[r] != (r >= input.prefix_len)) {
      throw DomainError("loss mask must mark exactly the sequence rows (row " + std::to_string(r) + ")");
    }
  }
  return cross_entropy<double>(forward(ckpt, input), ar_row_targets(input.prefix_len, targets), nullptr);
}

double loss_mlm(const Checkpoint& ckpt, const ConditionedInput& input, const DnaSequence& targets,
                const std::vector<std::size_t>& masked) {
  if (input.rows() != input.prefix_len + targets.size()) {
    throw ShapeError("masked input needs prefix + " + std::to_string(targets.size()) + " rows, got " +
                     std::to_string(input.rows()));
  }
  const auto row_targets = mlm_row_targets(input.prefix_len, targets, masked);
  return cross_entropy<double>(forward(ckpt, input), row_targets, nullptr);
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p = logits;
  for (Eigen::Index i = 0; i < p.rows(); ++i) softmax_prefix(p.row(i), p.cols());
  return p;
}

}  // namespace seqforge
