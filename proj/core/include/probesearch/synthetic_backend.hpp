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

#ifndef PROBESEARCH_SYNTHETIC_BACKEND_HPP_
#define PROBESEARCH_SYNTHETIC_BACKEND_HPP_

// A deterministic toy language model for arithmetic word problems with a
// planted linear structure in its activations.
//
// After "Answer:" the model either reasons step by step (chain-of-thought
// mode: running partial sums, each token's representation drawn around
// mu_pos) or blurts an answer (direct mode: representation around mu_neg).
// Greedy decoding from the prompt always takes the direct route; the
// top-k fan-out at the first token mixes both. Inside a response the fan-out
// offers fillers that keep the current mode and openers that switch it.
//
// Reasoning chains slip by a small amount at each arithmetic step with a
// probability chosen so that a complete chain is right with probability
// q_cot; a direct answer is right with probability q_direct. Every random
// choice is a hash of (world seed, token prefix), so identical prefixes
// always produce identical continuations and representations.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "probesearch/backend.hpp"
#include "probesearch/numeric.hpp"
#include "probesearch/probe.hpp"

namespace probesearch {

struct SyntheticWorldParams {
  int num_problems = 200;
  int min_operands = 6;
  int max_operands = 10;
  int min_value = 1;
  int max_value = 20;
  int dim = 16;
  // Distance between the two mode means.
  double separation = 4.0;
  // Noise scale: representations are mean + sigma * z / sqrt(dim), z ~ N(0, I),
  // so sigma is the root-mean-square norm of the noise vector. Defaults to
  // half the separation when absent.
  std::optional<double> sigma;
  double q_cot = 0.95;
  double q_direct = 0.30;
  int num_layers = 12;
  // The layer (of the hidden-state stream) whose mode means are exactly
  // mu_pos / mu_neg; other streams are weaker copies.
  int peak_layer = 8;
};

struct SyntheticProblem {
  std::string question;
  std::vector<long> operands;  // signed; the first is the starting amount
  double gold = 0.0;
};

struct SyntheticWorld {
  SyntheticWorldParams params;
  std::vector<double> mu_pos;
  std::vector<double> mu_neg;
  double sigma = 0.0;
  double q_cot = 0.0;
  double q_direct = 0.0;
  std::uint64_t seed = 0;
  std::vector<SyntheticProblem> problems;

  // Mode means of an arbitrary (layer, rep_type) stream.
  std::pair<std::vector<double>, std::vector<double>> MeansFor(int layer,
                                                               RepType type) const;
};

// Throws Error(kInvalidInput) on out-of-range parameters.
SyntheticWorld NewSyntheticWorld(const SyntheticWorldParams& params, std::uint64_t seed);

// Narrative text for a sequence of signed operands.
std::string RenderQuestion(const std::vector<long>& operands, std::size_t name_index,
                           std::size_t object_index);

// |candidate - gold| <= 1e-6 * max(1, |gold|). Throws Error(kInvalidInput)
// when the question is not in the world's problem set.
bool GradeAnswer(const SyntheticWorld& world, std::string_view question, double candidate);

class SyntheticBackend final : public GenerationBackend {
 public:
  // Serves the peak hidden-state stream unless told otherwise.
  explicit SyntheticBackend(std::shared_ptr<const SyntheticWorld> world);
  SyntheticBackend(std::shared_ptr<const SyntheticWorld> world, int layer, RepType type);

  const BackendInfo& info() const override { return info_; }
  std::vector<TokenId> TopKFirstTokens(std::span<const TokenId> prefix,
                                       int k) const override;
  GeneratedSegment GreedyContinue(std::span<const TokenId> prefix,
                                  int max_tokens) const override;
  GeneratedSegment ForcedContinue(std::span<const TokenId> prefix, TokenId first,
                                  int max_tokens) const override;
  std::vector<TokenId> Tokenize(std::string_view text) const override;
  std::vector<TextRepresentations> Representations(
      std::span<const std::string> texts) const override;

  const SyntheticWorld& world() const { return *world_; }
  std::string Decode(std::span<const TokenId> tokens) const;

  enum class Mode { kPrompt, kUndecided, kCot, kDirect };
  // Mode the model is in after consuming the whole prefix.
  Mode ModeAfter(std::span<const TokenId> prefix) const;

 private:
  struct Automaton;
  GeneratedSegment Generate(std::span<const TokenId> prefix,
                            std::optional<TokenId> first, int max_tokens) const;
  RepresentationVector MakeRep(Mode mode, std::uint64_t position_hash) const;

  std::shared_ptr<const SyntheticWorld> world_;
  BackendInfo info_;
  std::vector<double> mean_pos_;
  std::vector<double> mean_neg_;
  std::vector<double> mean_mid_;
};

struct CorpusOptions {
  // Root fan-out per problem; each alternative is decoded to the end.
  int k = 10;
  int max_tokens = 400;
};

// Labels each top-k response by the mode of its first token (the synthetic
// world's stand-in for an external CoT judge).
std::vector<LabeledResponse> GenerateLabeledCorpus(
    const SyntheticBackend& backend, std::span<const SyntheticProblem> problems,
    const CorpusOptions& options = {});

}  // namespace probesearch

#endif  // PROBESEARCH_SYNTHETIC_BACKEND_HPP_
