/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#include "seqforge/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "seqforge/error.hpp"

namespace seqforge {
namespace {

using nlohmann::json;

constexpr std::size_t kMinMotif = 6;
constexpr std::size_t kMaxMotif = 10;
constexpr std::size_t kMaxMarkovOrder = 10;
constexpr char kBases[] = "ACGT";

Token draw_base(const std::array<double, 4>& freq, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (std::uint8_t b = 0; b < 4; ++b) {
    acc += freq[b];
    if (u < acc) return token_from_code(b);
  }
  return Token::T;
}

}  // namespace

// ---------------------------------------------------------------------------
// MotifSpec

void MotifSpec::validate() const {
  if (conditions.empty()) throw DomainError("motif spec has no conditions");
  std::set<std::string> names;
  std::set<std::string> motifs;
  for (const auto& c : conditions) {
    const std::string where = "condition \"" + c.name + "\": ";
    if (c.name.empty()) throw DomainError("motif condition without a name");
    if (!names.insert(c.name).second) throw DomainError(where + "duplicate name");
    if (c.motif.size() < kMinMotif || c.motif.size() > kMaxMotif) {
      throw DomainError(where + "motif length must lie in [6, 10]");
    }
    if (c.motif.find_first_not_of(kBases) != std::string::npos) throw DomainError(where + "motif must be uppercase ACGT");
    if (!motifs.insert(c.motif).second) throw DomainError(where + "motif repeats another condition's");
    if (!(c.p_plant >= 0.0 && c.p_plant <= 1.0)) throw DomainError(where + "p_plant must lie in [0, 1]");
    double sum = 0.0;
    for (double f : c.background) {
      if (!(f >= 0.0)) throw DomainError(where + "background frequencies must be non-negative");
      sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw DomainError(where + "background frequencies must sum to 1");
  }
}

std::size_t MotifSpec::max_motif_length() const {
  std::size_t m = 0;
  for (const auto& c : conditions) m = std::max(m, c.motif.size());
  return m;
}

std::size_t MotifSpec::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    if (conditions[i].name == name) return i;
  }
  throw DomainError("unknown condition \"" + std::string(name) + "\"");
}

std::string MotifSpec::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "seqforge-motifs";
  j["version"] = 1;
  j["conditions"] = nlohmann::ordered_json::array();
  for (const auto& c : conditions) {
    nlohmann::ordered_json e;
    e["name"] = c.name;
    e["motif"] = c.motif;
    e["p_plant"] = c.p_plant;
    e["background"] = c.background;
    j["conditions"].push_back(e);
  }
  return j.dump(2) + "\n";
}

MotifSpec MotifSpec::from_json(std::string_view text) {
  MotifSpec spec;
  try {
    const json j = json::parse(text);
    if (j.value("format", "") != "seqforge-motifs") throw ParseError("not a motif spec", 0);
    for (const auto& e : j.at("conditions")) {
      MotifCondition c;
      c.name = e.at("name").get<std::string>();
      c.motif = e.at("motif").get<std::string>();
      c.p_plant = e.value("p_plant", 1.0);
      if (e.contains("background")) c.background = e.at("background").get<std::array<double, 4>>();
      spec.conditions.push_back(std::move(c));
    }
  } catch (const json::exception& ex) {
    throw ParseError(std::string("motif spec: ") + ex.what(), 0);
  }
  spec.validate();
  return spec;
}

void MotifSpec::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write", path.string());
  out << to_json();
}

MotifSpec MotifSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read", path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

MotifSpec MotifSpec::random(std::size_t count, std::size_t motif_length, double p_plant, std::uint64_t seed) {
  if (motif_length < kMinMotif || motif_length > kMaxMotif) throw DomainError("motif length must lie in [6, 10]");
  Rng rng = stream_rng(seed, 0x6d6f74);
  MotifSpec spec;
  std::set<std::string> seen;
  while (spec.conditions.size() < count) {
    std::string m(motif_length, 'A');
    for (auto& ch : m) ch = kBases[rng() % 4];
    if (!seen.insert(m).second) continue;
    spec.conditions.push_back(MotifCondition{"c" + std::to_string(spec.conditions.size()), m, p_plant, {0.25, 0.25, 0.25, 0.25}});
  }
  spec.validate();
  return spec;
}

// ---------------------------------------------------------------------------
// Synthetic data

Dataset synth_dataset(const MotifSpec& spec, std::size_t n_per_condition, std::size_t seq_len, std::uint64_t seed) {
  spec.validate();
  if (seq_len <= spec.max_motif_length()) {
    throw DomainError("seq_len " + std::to_string(seq_len) + " must exceed the longest motif");
  }
  Rng rng = stream_rng(seed, 0);
  Dataset out;
  out.reserve(spec.conditions.size() * n_per_condition);
  for (std::size_t c = 0; c < spec.conditions.size(); ++c) {
    const auto& cond = spec.conditions[c];
    for (std::size_t i = 0; i < n_per_condition; ++i) {
      std::vector<Token> tokens(seq_len);
      for (auto& t : tokens) t = draw_base(cond.background, rng);
      if (uniform01(rng) < cond.p_plant) {
        std::uniform_int_distribution<std::size_t> offset(0, seq_len - cond.motif.size());
        const std::size_t at = offset(rng);
        for (std::size_t k = 0; k < cond.motif.size(); ++k) tokens[at + k] = encode(cond.motif.substr(k, 1)).tokens()[0];
      }
      Example ex;
      ex.sequence = DnaSequence(std::move(tokens));
      ex.condition.categories = {c};
      ex.label = cond.name;
      out.push_back(std::move(ex));
    }
  }
  return out;
}

std::vector<DnaSequence> random_sequences(std::size_t count, std::size_t length, std::uint64_t seed) {
  Rng rng = stream_rng(seed, 0x72616e64);
  const std::array<double, 4> uniform{0.25, 0.25, 0.25, 0.25};
  std::vector<DnaSequence> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<Token> tokens(length);
    for (auto& t : tokens) t = draw_base(uniform, rng);
    out.emplace_back(std::move(tokens));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scorers

double motif_score(const DnaSequence& seq, std::string_view motif) {
  if (motif.empty()) throw DomainError("empty motif");
  const auto& t = seq.tokens();
  const std::size_t m = motif.size();
  if (t.size() < m) return 0.0;
  std::size_t best = 0;
  for (std::size_t at = 0; at + m <= t.size(); ++at) {
    std::size_t hits = 0;
    for (std::size_t k = 0; k < m; ++k) hits += token_char(t[at + k]) == motif[k] ? 1 : 0;
    best = std::max(best, hits);
    if (best == m) return 1.0;
  }
  return static_cast<double>(best) / static_cast<double>(m);
}

MotifScorer::MotifScorer(MotifSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

double MotifScorer::score(const DnaSequence& seq, std::size_t condition) const {
  if (condition >= spec_.conditions.size()) throw DomainError("unknown condition id " + std::to_string(condition));
  return motif_score(seq, spec_.conditions[condition].motif);
}

bool MotifScorer::has_profile(const std::string& profile) const {
  return std::any_of(spec_.conditions.begin(), spec_.conditions.end(),
                     [&](const MotifCondition& c) { return c.name == profile; });
}

double MotifScorer::probability(const DnaSequence& seq, const std::string& profile) const {
  return score(seq, spec_.index_of(profile));
}

double GcContentScorer::activity(const DnaSequence& seq) const {
  std::size_t gc = 0;
  std::size_t bases = 0;
  for (Token t : seq.tokens()) {
    if (!is_base(t)) continue;
    ++bases;
    if (t == Token::C || t == Token::G) ++gc;
  }
  return bases == 0 ? 0.0 : static_cast<double>(gc) / static_cast<double>(bases);
}

// ---------------------------------------------------------------------------
// Markov base model

MarkovModel::MarkovModel(std::size_t order, std::vector<std::vector<std::array<double, 4>>> counts)
    : order_(order), counts_(std::move(counts)) {}

MarkovModel MarkovModel::fit(const std::vector<DnaSequence>& corpus, std::size_t order) {
  if (corpus.empty()) throw DomainError("Markov fit needs a nonempty corpus");
  if (order > kMaxMarkovOrder) throw DomainError("Markov order above " + std::to_string(kMaxMarkovOrder));
  std::vector<std::vector<std::array<double, 4>>> counts(order + 1);
  for (std::size_t j = 0; j <= order; ++j) counts[j].assign(std::size_t{1} << (2 * j), {0.0, 0.0, 0.0, 0.0});
  for (const auto& seq : corpus) {
    if (!seq.is_pure()) throw DomainError("Markov corpus must hold pure sequences");
    const auto& t = seq.tokens();
    for (std::size_t i = 0; i < t.size(); ++i) {
      std::size_t ctx = 0;
      counts[0][0][code(t[i])] += 1.0;
      for (std::size_t j = 1; j <= order && j <= i; ++j) {
        ctx |= static_cast<std::size_t>(code(t[i - j])) << (2 * (j - 1));
        counts[j][ctx][code(t[i])] += 1.0;
      }
    }
  }
  return MarkovModel(order, std::move(counts));
}

Eigen::Vector4d MarkovModel::next_distribution(std::span<const Token> context) const {
  const std::size_t j = std::min(order_, context.size());
  std::size_t ctx = 0;
  for (std::size_t k = 1; k <= j; ++k) {
    const Token t = context[context.size() - k];
    if (!is_base(t)) throw DomainError("Markov context must hold bases only");
    ctx |= static_cast<std::size_t>(code(t)) << (2 * (k - 1));
  }
  const auto& c = counts_[j][ctx];
  const double total = c[0] + c[1] + c[2] + c[3] + 4.0;
  return Eigen::Vector4d(c[0] + 1.0, c[1] + 1.0, c[2] + 1.0, c[3] + 1.0) / total;
}

// ---------------------------------------------------------------------------
// Motif classifier

MotifClassifier::MotifClassifier(std::size_t filters, std::size_t width, std::size_t max_len,
                                 std::vector<std::string> classes, std::uint64_t seed)
    : filters_(filters), width_(width), max_len_(max_len), classes_(std::move(classes)) {
  if (filters_ == 0 || width_ == 0) throw DomainError("classifier needs filters and a positive width");
  if (max_len_ < width_) throw DomainError("classifier max_len below filter width");
  if (classes_.size() < 2) throw DomainError("classifier needs at least two classes");
  const auto f = static_cast<Eigen::Index>(filters_);
  const auto c = static_cast<Eigen::Index>(classes_.size());
  Rng rng = stream_rng(seed, 0x636c66);
  std::normal_distribution<double> conv_init(0.0, 1.0 / std::sqrt(static_cast<double>(width_)));
  std::normal_distribution<double> head_init(0.0, 1.0 / std::sqrt(static_cast<double>(filters_)));
  Matrix conv(f, static_cast<Eigen::Index>(4 * width_));
  for (Eigen::Index i = 0; i < conv.size(); ++i) conv.data()[i] = conv_init(rng);
  Matrix head(c, f);
  for (Eigen::Index i = 0; i < head.size(); ++i) head.data()[i] = head_init(rng);
  params_.add("conv.weight", conv.rows(), conv.cols()) = conv;
  params_.add("conv.bias", 1, f).setZero();
  params_.add("head.weight", head.rows(), head.cols()) = head;
  params_.add("head.bias", 1, c).setZero();
}

void MotifClassifier::check_length(const DnaSequence& seq) const {
  if (!seq.is_pure()) throw DomainError("classifier input must be a pure sequence");
  if (seq.size() < width_ || seq.size() > max_len_) {
    throw ShapeError("classifier accepts lengths " + std::to_string(width_) + ".." + std::to_string(max_len_) +
                     ", got " + std::to_string(seq.size()));
  }
}

Matrix MotifClassifier::activations(const DnaSequence& seq) const {
  check_length(seq);
  const auto& w = params_.at("conv.weight");
  const auto& b = params_.at("conv.bias");
  const auto& t = seq.tokens();
  const auto positions = static_cast<Eigen::Index>(t.size() - width_ + 1);
  Matrix z(positions, static_cast<Eigen::Index>(filters_));
  for (Eigen::Index p = 0; p < positions; ++p) {
    z.row(p) = b.row(0);
    for (std::size_t k = 0; k < width_; ++k) {
      z.row(p) += w.col(static_cast<Eigen::Index>(4 * k + code(t[static_cast<std::size_t>(p) + k]))).transpose();
    }
  }
  return z;
}

RowVector MotifClassifier::features(const DnaSequence& seq) const {
  return activations(seq).colwise().maxCoeff().cwiseMax(0.0);
}

RowVector MotifClassifier::logits(const DnaSequence& seq) const {
  const RowVector h = features(seq);
  return h * params_.at("head.weight").transpose() + params_.at("head.bias");
}

std::size_t MotifClassifier::predict(const DnaSequence& seq) const {
  Eigen::Index best = 0;
  logits(seq).maxCoeff(&best);
  return static_cast<std::size_t>(best);
}

double MotifClassifier::loss(const DnaSequence& seq, std::size_t label, ParameterSet<double>* grads) const {
  if (label >= classes_.size()) throw DomainError("label " + std::to_string(label) + " out of range");
  const Matrix z = activations(seq);
  const auto f = static_cast<Eigen::Index>(filters_);
  RowVector h(f);
  std::vector<Eigen::Index> argmax(static_cast<std::size_t>(f));
  for (Eigen::Index j = 0; j < f; ++j) {
    Eigen::Index at = 0;
    h(j) = std::max(0.0, z.col(j).maxCoeff(&at));
    argmax[static_cast<std::size_t>(j)] = at;
  }
  const auto& hw = params_.at("head.weight");
  RowVector out = h * hw.transpose() + params_.at("head.bias");
  const double mx = out.maxCoeff();
  RowVector p = (out.array() - mx).exp();
  const double sum = p.sum();
  p /= sum;
  const double loss = -(out(static_cast<Eigen::Index>(label)) - mx - std::log(sum));
  if (grads == nullptr) return loss;

  RowVector dout = p;
  dout(static_cast<Eigen::Index>(label)) -= 1.0;
  grads->at("head.weight").noalias() += dout.transpose() * h;
  grads->at("head.bias") += dout;
  const RowVector dh = dout * hw;
  auto& dw = grads->at("conv.weight");
  auto& db = grads->at("conv.bias");
  const auto& t = seq.tokens();
  for (Eigen::Index j = 0; j < f; ++j) {
    if (h(j) <= 0.0) continue;
    const auto at = static_cast<std::size_t>(argmax[static_cast<std::size_t>(j)]);
    db(0, j) += dh(j);
    for (std::size_t k = 0; k < width_; ++k) dw(j, static_cast<Eigen::Index>(4 * k + code(t[at + k]))) += dh(j);
  }
  return loss;
}

double MotifClassifier::accuracy(const Dataset& data) const {
  if (data.empty()) throw DomainError("accuracy of an empty dataset");
  std::size_t hits = 0;
  for (const auto& ex : data) {
    const auto it = std::find(classes_.begin(), classes_.end(), ex.label);
    if (it == classes_.end()) throw DomainError("unknown class \"" + ex.label + "\"");
    hits += predict(ex.sequence) == static_cast<std::size_t>(it - classes_.begin()) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

MotifClassifier MotifClassifier::train(const Dataset& data, const std::vector<std::string>& classes,
                                       const ClassifierConfig& cfg) {
  if (data.empty()) throw DomainError("classifier training needs data");
  if (cfg.batch_size == 0) throw DomainError("batch_size must be positive");
  MotifClassifier model(cfg.filters, cfg.width, cfg.max_len, classes, cfg.seed);
  std::vector<std::size_t> labels;
  labels.reserve(data.size());
  for (const auto& ex : data) {
    const auto it = std::find(classes.begin(), classes.end(), ex.label);
    if (it == classes.end()) throw DomainError("unknown class \"" + ex.label + "\"");
    labels.push_back(static_cast<std::size_t>(it - classes.begin()));
  }
  auto state = make_adam_state(model.params_);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng = stream_rng(cfg.seed, epoch + 1);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      auto grads = model.params_.zeros_like();
      for (std::size_t i = start; i < end; ++i) model.loss(data[order[i]].sequence, labels[order[i]], &grads);
      for (auto& [name, g] : grads) g /= static_cast<double>(end - start);
      adamw_step(model.params_, grads, state, cfg.learning_rate, 0.0);
    }
  }
  return model;
}

void MotifClassifier::save(const std::filesystem::path& path) const {
  nlohmann::ordered_json meta;
  meta["filters"] = filters_;
  meta["width"] = width_;
  meta["max_len"] = max_len_;
  meta["classes"] = classes_;
  write_tensor_file(path, TensorFile{"motif-classifier", meta.dump(), params_.cast<float>()});
}

MotifClassifier MotifClassifier::load(const std::filesystem::path& path) {
  const TensorFile file = read_tensor_file(path);
  if (file.kind != "motif-classifier") throw ParseError(path.string() + ": not a motif classifier", 0);
  json meta;
  try {
    meta = json::parse(file.metadata_json);
  } catch (const json::exception& ex) {
    throw ParseError(path.string() + ": bad metadata: " + ex.what(), 0);
  }
  MotifClassifier model(meta.at("filters").get<std::size_t>(), meta.at("width").get<std::size_t>(),
                        meta.at("max_len").get<std::size_t>(), meta.at("classes").get<std::vector<std::string>>(), 0);
  const ParameterSet<double> loaded = file.tensors.cast<double>();
  for (const auto& [name, value] : model.params_) {
    if (!loaded.contains(name)) throw ParseError(path.string() + ": missing tensor " + name, 0);
    const auto& v = loaded.at(name);
    if (v.rows() != value.rows() || v.cols() != value.cols()) {
      throw ShapeError(path.string() + ": tensor " + name + " has shape " + shape_string(v.rows(), v.cols()));
    }
  }
  if (loaded.size() != model.params_.size()) throw ParseError(path.string() + ": unexpected tensors", 0);
  model.params_ = loaded;
  return model;
}

Matrix featurize(const MotifClassifier& classifier, const std::vector<DnaSequence>& seqs) {
  Matrix out(static_cast<Eigen::Index>(seqs.size()), static_cast<Eigen::Index>(classifier.filters()));
  for (std::size_t i = 0; i < seqs.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = classifier.features(seqs[i]);
  return out;
}

}  // namespace seqforge
