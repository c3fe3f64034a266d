/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "seqforge/error.hpp"

namespace seqforge {

template <typename T>
using MatrixT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using RowVectorT = Eigen::Matrix<T, 1, Eigen::Dynamic>;

using Matrix = MatrixT<double>;
using RowVector = RowVectorT<double>;

/// Named two-dimensional tensors, iterated in name order. Vectors are
/// stored as 1 x n matrices.
template <typename T>
class ParameterSet {
 public:
  using Map = std::map<std::string, MatrixT<T>>;

  MatrixT<T>& add(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    auto [it, inserted] = tensors_.emplace(name, MatrixT<T>::Zero(rows, cols));
    if (!inserted) throw DomainError("duplicate tensor name: " + name);
    return it->second;
  }

  MatrixT<T>& at(const std::string& name) {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw DomainError("unknown tensor: " + name);
    return it->second;
  }
  const MatrixT<T>& at(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw DomainError("unknown tensor: " + name);
    return it->second;
  }

  bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
  std::size_t size() const noexcept { return tensors_.size(); }

  std::size_t element_count() const noexcept {
    std::size_t n = 0;
    for (const auto& [_, t] : tensors_) n += static_cast<std::size_t>(t.size());
    return n;
  }

  auto begin() noexcept { return tensors_.begin(); }
  auto end() noexcept { return tensors_.end(); }
  auto begin() const noexcept { return tensors_.begin(); }
  auto end() const noexcept { return tensors_.end(); }

  ParameterSet zeros_like() const {
    ParameterSet out;
    for (const auto& [name, t] : tensors_) out.add(name, t.rows(), t.cols());
    return out;
  }

  void set_zero() {
    for (auto& [_, t] : tensors_) t.setZero();
  }

  template <typename U>
  ParameterSet<U> cast() const {
    ParameterSet<U> out;
    for (const auto& [name, t] : tensors_) out.add(name, t.rows(), t.cols()) = t.template cast<U>();
    return out;
  }

  friend bool operator==(const ParameterSet& a, const ParameterSet& b) {
    if (a.tensors_.size() != b.tensors_.size()) return false;
    auto ia = a.tensors_.begin();
    for (auto ib = b.tensors_.begin(); ib != b.tensors_.end(); ++ia, ++ib) {
      if (ia->first != ib->first) return false;
      if (ia->second.rows() != ib->second.rows() || ia->second.cols() != ib->second.cols()) return false;
      if (ia->second != ib->second) return false;
    }
    return true;
  }

 private:
  Map tensors_;
};

/// Contents of a tensor container file: a kind tag, free-form JSON
/// metadata, and float32 tensors.
struct TensorFile {
  std::string kind;
  std::string metadata_json;
  ParameterSet<float> tensors;
};

/// Writes the container described in docs/checkpoint-format.md.
void write_tensor_file(const std::filesystem::path& path, const TensorFile& file);
TensorFile read_tensor_file(const std::filesystem::path& path);

}  // namespace seqforge
