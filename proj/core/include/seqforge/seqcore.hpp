/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace seqforge {

/// Nucleotides occupy codes 0..3 in the order A, C, G, T; control tokens
/// follow. The vocabulary is fixed at eight entries.
enum class Token : std::uint8_t { A = 0, C = 1, G = 2, T = 3, BOS = 4, EOS = 5, MASK = 6, PAD = 7 };

inline constexpr int kVocabSize = 8;
inline constexpr int kNumBases = 4;

constexpr int code(Token t) noexcept { return static_cast<int>(t); }
constexpr bool is_base(Token t) noexcept { return code(t) < kNumBases; }

/// Throws DomainError for codes outside 0..7.
Token token_from_code(int code);
char token_char(Token t) noexcept;

/// An ordered list of tokens. length() counts nucleotides only.
class DnaSequence {
 public:
  DnaSequence() = default;
  /// Throws DomainError if a PAD sits between two non-PAD tokens.
  explicit DnaSequence(std::vector<Token> tokens);

  std::span<const Token> tokens() const noexcept { return tokens_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  std::size_t length() const noexcept;
  bool empty() const noexcept { return tokens_.empty(); }
  /// True when every token is one of A, C, G, T.
  bool is_pure() const noexcept;

  Token operator[](std::size_t i) const { return tokens_[i]; }
  void push_back(Token t);

  friend bool operator==(const DnaSequence&, const DnaSequence&) = default;

 private:
  std::vector<Token> tokens_;
};

/// n x 4 matrix, one row per base, exactly one 1 per row.
using OneHotMatrix = Eigen::Matrix<double, Eigen::Dynamic, kNumBases, Eigen::RowMajor>;

/// Case-insensitive; any character other than ACGT raises ParseError whose
/// position() is the zero-based offset of the first offender.
DnaSequence encode(std::string_view text);

/// Control tokens are dropped.
std::string decode(const DnaSequence& seq);

/// Throws DomainError if the sequence contains a control token.
OneHotMatrix one_hot(const DnaSequence& seq);

}  // namespace seqforge
