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

#include "probesearch/vocabulary.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "lexicon.hpp"
#include "probesearch/error.hpp"

namespace probesearch {
namespace {

template <typename Group>
void Append(std::vector<std::string>& words, const Group& group) {
  for (auto w : group) words.emplace_back(w);
}

std::optional<long> ParseInteger(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::size_t start = (s.front() == '-' || s.front() == '+') ? 1 : 0;
  if (start == s.size()) return std::nullopt;
  for (std::size_t i = start; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
  }
  long value = 0;
  const char* begin = s.data() + (s.front() == '+' ? 1 : 0);
  auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

}  // namespace

const Vocabulary& Vocabulary::Default() {
  static const Vocabulary vocab;
  return vocab;
}

Vocabulary::Vocabulary() {
  Append(words_, lexicon::kSpecial);
  Append(words_, lexicon::kNames);
  Append(words_, lexicon::kObjects);
  Append(words_, lexicon::kGainVerbs);
  Append(words_, lexicon::kLossVerbs);
  Append(words_, lexicon::kNarrative);
  Append(words_, lexicon::kCotStarters);
  Append(words_, lexicon::kCotSwitches);
  Append(words_, lexicon::kCotFillers);
  Append(words_, lexicon::kDirectLeads);
  Append(words_, lexicon::kTemplate);
  first_numeral_ = static_cast<TokenId>(words_.size());
  for (long v = kMinNumeral; v <= kMaxNumeral; ++v) words_.push_back(std::to_string(v));
  for (std::size_t i = 0; i < words_.size(); ++i) {
    index_.emplace(words_[i], static_cast<TokenId>(i));
  }
}

std::optional<TokenId> Vocabulary::Find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::Id(std::string_view word) const {
  if (auto id = Find(word)) return *id;
  throw Error(ErrorCode::kInvalidInput, "word '" + std::string(word) + "' not in vocabulary");
}

const std::string& Vocabulary::Text(TokenId id) const {
  if (id < 0 || id >= size()) {
    throw Error(ErrorCode::kInvalidInput, "token id " + std::to_string(id) + " out of range");
  }
  return words_[static_cast<std::size_t>(id)];
}

TokenId Vocabulary::Numeral(long value) const {
  value = std::clamp(value, kMinNumeral, kMaxNumeral);
  return first_numeral_ + static_cast<TokenId>(value - kMinNumeral);
}

std::vector<TokenId> Vocabulary::Tokenize(std::string_view text) const {
  std::vector<TokenId> out;
  auto emit_word = [&](std::string_view word) {
    while (!word.empty()) {
      bool split = false;
      for (std::string_view special : {std::string_view("Question:"), std::string_view("Answer:")}) {
        if (word.substr(0, special.size()) == special) {
          out.push_back(Id(special));
          word.remove_prefix(special.size());
          split = true;
          break;
        }
      }
      if (split) continue;
      if (auto id = Find(word)) {
        out.push_back(*id);
      } else if (auto value = ParseInteger(word)) {
        out.push_back(Numeral(*value));
      } else {
        out.push_back(unk());
      }
      return;
    }
  };

  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == '\n') {
      out.push_back(Id("\n"));
      ++i;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '.' || c == ',' || c == '?') {
      out.push_back(Id(std::string_view(&text[i], 1)));
      ++i;
    } else {
      std::size_t j = i;
      while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j])) &&
             text[j] != '.' && text[j] != ',' && text[j] != '?') {
        ++j;
      }
      emit_word(text.substr(i, j - i));
      i = j;
    }
  }
  return out;
}

std::string Vocabulary::Decode(std::span<const TokenId> tokens) const {
  std::string out;
  for (TokenId t : tokens) {
    if (t == eos()) continue;
    const std::string& w = Text(t);
    if (w != "\n") out += ' ';
    out += w;
  }
  return out;
}

}  // namespace probesearch
