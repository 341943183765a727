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

#ifndef PROBESEARCH_SEARCH_HPP_
#define PROBESEARCH_SEARCH_HPP_

// Classifier-guided beam search over a generation backend.
//
// Branching phase: for m rounds, every open node is expanded into k
// children with Top-K-Start decoding (each of the k most probable first
// tokens, then greedy decoding up to the round's token budget). A child is
// scored by the probe logit of its last token's representation, and only
// the n best children of each parent survive. Completion phase: surviving
// leaves are extended greedily in fixed-size steps, each step appending its
// last-token logit to the branch's score sequence.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "probesearch/backend.hpp"
#include "probesearch/probe.hpp"

namespace probesearch {

enum class PruningPolicy {
  kGuided,  // keep the n highest-scoring children
  kRandom,  // keep n children chosen uniformly (ablation baseline)
};

std::string_view PruningPolicyName(PruningPolicy policy);
PruningPolicy ParsePruningPolicy(std::string_view name);

struct SearchConfig {
  int k = 10;  // candidates per expansion
  int n = 3;   // survivors per parent
  int m = 3;   // branching rounds
  std::vector<int> token_budgets{1, 20, 20};  // one per round
  int completion_steps = 2;
  int completion_tokens_per_step = 100;
  std::uint64_t seed = 0;
  PruningPolicy pruning = PruningPolicy::kGuided;
  // Concurrent sibling expansions; forced to 1 for single-flight backends.
  int parallelism = 1;

  // [1, 20, 20, ...] truncated or extended to m rounds.
  static std::vector<int> DefaultTokenBudgets(int m);
  // floor(total / m) tokens per round.
  static std::vector<int> EvenTokenBudgets(int total, int m);

  // Throws Error(kInvalidConfig).
  void Validate() const;

  friend bool operator==(const SearchConfig&, const SearchConfig&) = default;
};

using NodeId = std::size_t;

enum class NodeStatus { kOpen, kPruned, kTerminal };
std::string_view NodeStatusName(NodeStatus status);

struct TreeNode {
  NodeId id = 0;
  std::optional<NodeId> parent;
  int depth = 0;
  // Position of this child in its parent's top-k list.
  int rank = 0;
  GeneratedSegment segment;
  double score = 0.0;
  NodeStatus status = NodeStatus::kOpen;
  std::vector<NodeId> children;
};

class ReasoningTree {
 public:
  ReasoningTree(std::string question, std::vector<TokenId> prompt);

  const std::string& question() const { return question_; }
  const std::vector<TokenId>& prompt() const { return prompt_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& node(NodeId id) const { return nodes_.at(id); }
  static constexpr NodeId root() { return 0; }

  NodeId AddChild(NodeId parent, TreeNode child);
  void SetStatus(NodeId id, NodeStatus status) { nodes_.at(id).status = status; }

  // Root-to-node path, root included.
  std::vector<NodeId> Path(NodeId id) const;
  // Response tokens along the path (prompt excluded).
  std::vector<TokenId> ResponseTokens(NodeId id) const;
  // Non-pruned, non-root nodes with no surviving children, in id order.
  std::vector<NodeId> Leaves() const;
  // Tokens generated for every child ever created, pruned ones included.
  std::size_t GeneratedTokens() const;

  std::string ToJson() const;

 private:
  std::string question_;
  std::vector<TokenId> prompt_;
  std::vector<TreeNode> nodes_;
};

struct ScoredChild {
  GeneratedSegment segment;
  double score = 0.0;
  int rank = 0;
  bool terminal = false;
  bool pruned = false;
};

// Top-K-Start expansion of the node whose full token prefix is `prefix`.
// Throws Error(kInvalidConfig) when the probe does not read the backend's
// stream; backend errors propagate.
std::vector<ScoredChild> ExpandNode(std::span<const TokenId> prefix,
                                    const GenerationBackend& backend,
                                    const LinearProbe& probe, int k, int token_budget,
                                    int parallelism = 1);

// Indices of the n highest scores, best first; ties go to the lower index.
// Fewer than n candidates all survive.
std::vector<std::size_t> SelectTopN(std::span<const double> scores, int n);
// n indices drawn without replacement, in ascending order.
std::vector<std::size_t> SelectRandomN(std::size_t count, int n, std::uint64_t seed);

// Marks every child not kept by SelectTopN as pruned and returns the kept
// indices, best first.
std::vector<std::size_t> PruneChildren(std::vector<ScoredChild>& children, int n);

void CheckProbeMatchesBackend(const LinearProbe& probe, const GenerationBackend& backend);

ReasoningTree RunBranching(std::string_view question, const GenerationBackend& backend,
                           const LinearProbe& probe, const SearchConfig& config);

struct Branch {
  std::vector<NodeId> nodes;  // root excluded, leaf last
  std::vector<double> scores;
  std::vector<TokenId> tokens;  // full response (prompt excluded)
  std::string text;
  bool finished = false;
};

struct CompletionResult {
  std::vector<Branch> branches;
  std::vector<std::string> diagnostics;
  std::size_t generated_tokens = 0;
};

CompletionResult RunCompletion(const ReasoningTree& tree, const GenerationBackend& backend,
                               const LinearProbe& probe, const SearchConfig& config);

}  // namespace probesearch

#endif  // PROBESEARCH_SEARCH_HPP_
