/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#include "seqforge/conditioning.hpp"

namespace seqforge {

PropertyMatrix::PropertyMatrix(Matrix values, PropertySource source)
    : values_(std::move(values)), source_(source) {
  if (values_.rows() < 1) throw DomainError("property matrix needs at least one row");
  if (!values_.allFinite()) throw DomainError("property matrix has non-finite entries");
}

SignalTrack::SignalTrack(Matrix values, bool initiation_profile)
    : values_(std::move(values)), initiation_profile_(initiation_profile) {
  if (!values_.allFinite()) throw DomainError("signal track has non-finite entries");
  if (initiation_profile_ && values_.size() > 0 && values_.minCoeff() < 0.0) {
    throw DomainError("initiation profile has a negative value");
  }
}

Matrix project_property(const PropertyMatrix& property, const LinearMap& map) {
  return project_property<double>(property.values(), map);
}

ConditionedInput integrate_feature_level(const OneHotMatrix& bases, const SignalTrack& signal,
                                         const LinearMap& map) {
  if (bases.rows() != signal.rows()) {
    throw ShapeError("sequence has " + std::to_string(bases.rows()) + " positions but signal has " +
                     std::to_string(signal.rows()) + " rows");
  }
  Matrix joined(bases.rows(), kNumBases + signal.cols());
  joined.leftCols(kNumBases) = bases;
  joined.rightCols(signal.cols()) = signal.values();

  ConditionedInput out;
  out.values = apply_affine<double>(joined, map.weight, map.bias);
  out.prefix_len = 0;
  out.loss_mask.assign(out.rows(), true);
  return out;
}

PropertyMatrix embed_category(std::size_t class_id, const Matrix& table) {
  if (class_id >= static_cast<std::size_t>(table.rows())) {
    throw DomainError("category id " + std::to_string(class_id) + " out of range for table with " +
                      std::to_string(table.rows()) + " rows");
  }
  return PropertyMatrix(table.row(static_cast<Eigen::Index>(class_id)), PropertySource::Category);
}

Matrix project_signal_prefix(const SignalTrack& signal, const LinearMap& map, Eigen::Index rows) {
  const Eigen::Index flat = signal.rows() * signal.cols();
  if (map.in_dim() != flat || rows <= 0 || map.out_dim() % rows != 0) {
    throw ShapeError("signal prefix map " + shape_string(map.out_dim(), map.in_dim()) +
                     " cannot take flattened signal of width " + std::to_string(flat) + " into " +
                     std::to_string(rows) + " rows");
  }
  Eigen::Map<const RowVector> flat_signal(signal.values().data(), flat);
  RowVector y = apply_affine<double>(flat_signal, map.weight, map.bias);
  const Eigen::Index width = map.out_dim() / rows;
  return Eigen::Map<const Matrix>(y.data(), rows, width);
}

Matrix stack_prefix(const std::vector<Matrix>& blocks) {
  Eigen::Index rows = 0;
  Eigen::Index width = -1;
  for (const auto& b : blocks) {
    if (b.rows() == 0) continue;
    if (width >= 0 && b.cols() != width) {
      throw ShapeError("prefix blocks differ in width: " + std::to_string(width) + " vs " +
                       std::to_string(b.cols()));
    }
    width = b.cols();
    rows += b.rows();
  }
  Matrix out(rows, std::max<Eigen::Index>(width, 0));
  Eigen::Index r = 0;
  for (const auto& b : blocks) {
    if (b.rows() == 0) continue;
    out.middleRows(r, b.rows()) = b;
    r += b.rows();
  }
  return out;
}

}  // namespace seqforge
