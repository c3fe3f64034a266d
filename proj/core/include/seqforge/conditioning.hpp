/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <string>
#include <vector>

#include "seqforge/error.hpp"
#include "seqforge/seqcore.hpp"
#include "seqforge/tensor.hpp"

namespace seqforge {

enum class PropertySource { Category, SignalPooled, ProteinEmbedding };

/// l_p x d_p matrix of global conditioning tokens. At least one row and all
/// entries finite; the constructor enforces both.
class PropertyMatrix {
 public:
  PropertyMatrix(Matrix values, PropertySource source);

  const Matrix& values() const noexcept { return values_; }
  PropertySource source() const noexcept { return source_; }
  Eigen::Index rows() const noexcept { return values_.rows(); }
  Eigen::Index cols() const noexcept { return values_.cols(); }

 private:
  Matrix values_;
  PropertySource source_;
};

/// n x d_s per-base-pair signal. A transcription-initiation profile must
/// also be non-negative.
class SignalTrack {
 public:
  explicit SignalTrack(Matrix values, bool initiation_profile = false);

  const Matrix& values() const noexcept { return values_; }
  Eigen::Index rows() const noexcept { return values_.rows(); }
  Eigen::Index cols() const noexcept { return values_.cols(); }
  bool initiation_profile() const noexcept { return initiation_profile_; }

 private:
  Matrix values_;
  bool initiation_profile_;
};

/// Affine map x -> W x + b with W stored as out x in.
template <typename T>
struct LinearMapT {
  MatrixT<T> weight;
  RowVectorT<T> bias;

  Eigen::Index in_dim() const noexcept { return weight.cols(); }
  Eigen::Index out_dim() const noexcept { return weight.rows(); }
};
using LinearMap = LinearMapT<double>;

/// Transformer input rows: an optional property prefix followed by one row
/// per sequence position. loss_mask is false on every prefix row.
template <typename T>
struct ConditionedInputT {
  MatrixT<T> values;
  std::size_t prefix_len = 0;
  std::vector<bool> loss_mask;

  std::size_t rows() const noexcept { return static_cast<std::size_t>(values.rows()); }
};
using ConditionedInput = ConditionedInputT<double>;

inline std::string shape_string(Eigen::Index r, Eigen::Index c) {
  return "(" + std::to_string(r) + " x " + std::to_string(c) + ")";
}

/// Row-wise X W^T + b.
template <typename T, typename Derived>
MatrixT<T> apply_affine(const Eigen::MatrixBase<Derived>& x, const MatrixT<T>& weight,
                        const RowVectorT<T>& bias) {
  if (x.cols() != weight.cols() || bias.size() != weight.rows()) {
    throw ShapeError("affine map " + shape_string(weight.rows(), weight.cols()) + " with bias of " +
                     std::to_string(bias.size()) + " cannot take input " +
                     shape_string(x.rows(), x.cols()));
  }
  MatrixT<T> y(x.rows(), weight.rows());
  y.noalias() = x * weight.transpose();
  y.rowwise() += bias;
  return y;
}

/// H_p = P W_p^T + b_p.
template <typename T>
MatrixT<T> project_property(const MatrixT<T>& property, const LinearMapT<T>& map) {
  return apply_affine<T>(property, map.weight, map.bias);
}
Matrix project_property(const PropertyMatrix& property, const LinearMap& map);

/// [H_p; H_e]. An empty H_p (zero rows) yields H_e unchanged.
template <typename T>
ConditionedInputT<T> integrate_sequence_level(const MatrixT<T>& prefix, const MatrixT<T>& body) {
  if (prefix.rows() > 0 && prefix.cols() != body.cols()) {
    throw ShapeError("property rows " + shape_string(prefix.rows(), prefix.cols()) +
                     " and sequence rows " + shape_string(body.rows(), body.cols()) +
                     " differ in width");
  }
  ConditionedInputT<T> out;
  out.values.resize(prefix.rows() + body.rows(), body.cols());
  if (prefix.rows() > 0) out.values.topRows(prefix.rows()) = prefix;
  out.values.bottomRows(body.rows()) = body;
  out.prefix_len = static_cast<std::size_t>(prefix.rows());
  out.loss_mask.assign(out.rows(), false);
  for (std::size_t i = out.prefix_len; i < out.rows(); ++i) out.loss_mask[i] = true;
  return out;
}

/// Per position: W_f concat(x_e,i, s_i) + b_f, one shared map.
ConditionedInput integrate_feature_level(const OneHotMatrix& bases, const SignalTrack& signal,
                                         const LinearMap& map);

/// Row class_id of the table as a 1 x d_p category property.
PropertyMatrix embed_category(std::size_t class_id, const Matrix& table);

/// Flattens an n x d_s track row-major and maps it to `rows` prefix rows of
/// width d_h. The map must be (rows * d_h) x (n * d_s).
Matrix project_signal_prefix(const SignalTrack& signal, const LinearMap& map, Eigen::Index rows);

/// Stacks projected property blocks into one prefix. All blocks must share
/// their width.
Matrix stack_prefix(const std::vector<Matrix>& blocks);

}  // namespace seqforge
