/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#include "seqforge/seqcore.hpp"

#include <algorithm>

#include "seqforge/error.hpp"

namespace seqforge {

Token token_from_code(int c) {
  if (c < 0 || c >= kVocabSize) {
    throw DomainError("token code out of range: " + std::to_string(c));
  }
  return static_cast<Token>(c);
}

char token_char(Token t) noexcept {
  static constexpr std::array<char, kVocabSize> kChars{'A', 'C', 'G', 'T', '^', '$', '?', '_'};
  return kChars[code(t)];
}

DnaSequence::DnaSequence(std::vector<Token> tokens) : tokens_(std::move(tokens)) {
  // PAD is only allowed as a trailing run.
  auto first_pad = std::find(tokens_.begin(), tokens_.end(), Token::PAD);
  if (std::any_of(first_pad, tokens_.end(), [](Token t) { return t != Token::PAD; })) {
    throw DomainError("PAD token between non-PAD tokens");
  }
}

std::size_t DnaSequence::length() const noexcept {
  return static_cast<std::size_t>(std::count_if(tokens_.begin(), tokens_.end(), is_base));
}

bool DnaSequence::is_pure() const noexcept {
  return std::all_of(tokens_.begin(), tokens_.end(), is_base);
}

void DnaSequence::push_back(Token t) {
  if (!tokens_.empty() && tokens_.back() == Token::PAD && t != Token::PAD) {
    throw DomainError("PAD token between non-PAD tokens");
  }
  tokens_.push_back(t);
}

DnaSequence encode(std::string_view text) {
  std::vector<Token> out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    switch (text[i]) {
      case 'A': case 'a': out.push_back(Token::A); break;
      case 'C': case 'c': out.push_back(Token::C); break;
      case 'G': case 'g': out.push_back(Token::G); break;
      case 'T': case 't': out.push_back(Token::T); break;
      default:
        throw ParseError("invalid nucleotide '" + std::string(1, text[i]) + "' at position " +
                             std::to_string(i),
                         i);
    }
  }
  return DnaSequence(std::move(out));
}

std::string decode(const DnaSequence& seq) {
  std::string out;
  out.reserve(seq.size());
  for (Token t : seq.tokens()) {
    if (is_base(t)) out.push_back(token_char(t));
  }
  return out;
}

OneHotMatrix one_hot(const DnaSequence& seq) {
  OneHotMatrix m = OneHotMatrix::Zero(static_cast<Eigen::Index>(seq.size()), kNumBases);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (!is_base(seq[i])) {
      throw DomainError("one_hot: control token at position " + std::to_string(i));
    }
    m(static_cast<Eigen::Index>(i), code(seq[i])) = 1.0;
  }
  return m;
}

}  // namespace seqforge
