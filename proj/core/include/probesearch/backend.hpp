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

#ifndef PROBESEARCH_BACKEND_HPP_
#define PROBESEARCH_BACKEND_HPP_

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "probesearch/representation.hpp"

namespace probesearch {

struct BackendInfo {
  int vocab_size = 0;
  int dim = 0;
  TokenId eos_token = 0;
  // The activation stream returned with every generated token.
  int layer = 0;
  RepType rep_type = RepType::kHiddenState;
  int num_layers = 0;
  std::string model_name;
  // True when the implementation cannot serve overlapping calls; the search
  // engine then expands siblings one at a time.
  bool single_flight = false;
};

struct GeneratedSegment {
  std::vector<TokenId> tokens;
  std::vector<RepresentationVector> reps;  // one per token
  bool finished = false;                   // ended on the eos token
  std::string text;

  friend bool operator==(const GeneratedSegment&, const GeneratedSegment&) = default;
};

struct TextRepresentations {
  std::vector<TokenId> tokens;
  std::vector<RepresentationVector> reps;
};

// Generation contract the search engine is written against. Every call is a
// pure function of its arguments and the backend's construction-time seed.
// Implementations own tokenization and decoding.
class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;

  virtual const BackendInfo& info() const = 0;

  // The k most probable next tokens, most probable first, ties to the lower
  // id. Throws Error(kInvalidInput) when k is outside [1, vocab_size].
  virtual std::vector<TokenId> TopKFirstTokens(std::span<const TokenId> prefix,
                                               int k) const = 0;

  // Greedy decoding for up to max_tokens tokens, stopping after eos. A
  // prefix that already ends in eos yields an empty, finished segment.
  virtual GeneratedSegment GreedyContinue(std::span<const TokenId> prefix,
                                          int max_tokens) const = 0;

  // Emits `first` (with its representation), then continues greedily for
  // up to max_tokens - 1 more tokens. This is the Top-K-Start primitive.
  virtual GeneratedSegment ForcedContinue(std::span<const TokenId> prefix,
                                          TokenId first, int max_tokens) const = 0;

  virtual std::vector<TokenId> Tokenize(std::string_view text) const = 0;

  // Per-token representations of the backend's stream for each text.
  virtual std::vector<TextRepresentations> Representations(
      std::span<const std::string> texts) const = 0;
};

// "Question:<question>\nAnswer:"
std::string FormatPrompt(std::string_view question);

inline constexpr std::string_view kAnswerTrigger = "Therefore, the answer is";

}  // namespace probesearch

#endif  // PROBESEARCH_BACKEND_HPP_
