// Copyright 2026 The probesearch Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PROBESEARCH_VOCABULARY_HPP_
#define PROBESEARCH_VOCABULARY_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "probesearch/representation.hpp"

namespace probesearch {

// Word-level vocabulary of the synthetic language model: a fixed word list
// followed by one token per integer in [kMinNumeral, kMaxNumeral].
class Vocabulary {
 public:
  static constexpr long kMinNumeral = -999;
  static constexpr long kMaxNumeral = 999;

  static const Vocabulary& Default();

  int size() const { return static_cast<int>(words_.size()); }
  TokenId eos() const { return 0; }
  TokenId unk() const { return 1; }

  // Throws Error(kInvalidInput) for words outside the vocabulary.
  TokenId Id(std::string_view word) const;
  std::optional<TokenId> Find(std::string_view word) const;
  const std::string& Text(TokenId id) const;

  bool IsNumeral(TokenId id) const { return id >= first_numeral_; }
  long NumeralValue(TokenId id) const { return kMinNumeral + (id - first_numeral_); }
  // Values outside the numeral range are clamped.
  TokenId Numeral(long value) const;

  // Whitespace-separated words; ".", ",", "?" and newlines are their own
  // tokens, and "Question:" / "Answer:" split off a glued suffix.
  std::vector<TokenId> Tokenize(std::string_view text) const;
  // Each token rendered with a leading space (newline bare), eos omitted.
  std::string Decode(std::span<const TokenId> tokens) const;

 private:
  Vocabulary();

  std::vector<std::string> words_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId first_numeral_ = 0;
};

}  // namespace probesearch

#endif  // PROBESEARCH_VOCABULARY_HPP_
