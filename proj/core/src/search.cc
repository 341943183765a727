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

#include "probesearch/search.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "io_util.hpp"
#include "probesearch/error.hpp"
#include "probesearch/parallel.hpp"
#include "probesearch/random.hpp"

namespace probesearch {

std::string_view PruningPolicyName(PruningPolicy policy) {
  return policy == PruningPolicy::kGuided ? "guided" : "random";
}

PruningPolicy ParsePruningPolicy(std::string_view name) {
  if (name == "guided") return PruningPolicy::kGuided;
  if (name == "random") return PruningPolicy::kRandom;
  throw Error(ErrorCode::kInvalidConfig, "unknown pruning policy '" + std::string(name) + "'");
}

std::string_view NodeStatusName(NodeStatus status) {
  switch (status) {
    case NodeStatus::kOpen:
      return "open";
    case NodeStatus::kPruned:
      return "pruned";
    case NodeStatus::kTerminal:
      return "terminal";
  }
  return "open";
}

std::vector<int> SearchConfig::DefaultTokenBudgets(int m) {
  std::vector<int> budgets;
  for (int i = 0; i < m; ++i) budgets.push_back(i == 0 ? 1 : 20);
  return budgets;
}

std::vector<int> SearchConfig::EvenTokenBudgets(int total, int m) {
  if (m < 1) throw Error(ErrorCode::kInvalidConfig, "depth must be >= 1");
  return std::vector<int>(static_cast<std::size_t>(m), total / m);
}

void SearchConfig::Validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::kInvalidConfig, what); };
  if (k < 1) bad("k must be >= 1");
  if (n < 1 || n > k) bad("beam width n must satisfy 1 <= n <= k");
  if (m < 1) bad("depth m must be >= 1");
  if (token_budgets.size() != static_cast<std::size_t>(m)) {
    bad("need exactly m token budgets (got " + std::to_string(token_budgets.size()) + ")");
  }
  for (int t : token_budgets) {
    if (t < 1) bad("token budgets must be >= 1");
  }
  if (completion_steps < 0) bad("completion_steps must be >= 0");
  if (completion_tokens_per_step < 1) bad("completion_tokens_per_step must be >= 1");
  if (parallelism < 1) bad("parallelism must be >= 1");
}

ReasoningTree::ReasoningTree(std::string question, std::vector<TokenId> prompt)
    : question_(std::move(question)), prompt_(std::move(prompt)) {
  TreeNode root;
  root.id = 0;
  nodes_.push_back(std::move(root));
}

NodeId ReasoningTree::AddChild(NodeId parent, TreeNode child) {
  TreeNode& p = nodes_.at(parent);
  child.id = nodes_.size();
  child.parent = parent;
  child.depth = p.depth + 1;
  p.children.push_back(child.id);
  nodes_.push_back(std::move(child));
  return nodes_.back().id;
}

std::vector<NodeId> ReasoningTree::Path(NodeId id) const {
  std::vector<NodeId> path;
  for (std::optional<NodeId> cur = id; cur; cur = nodes_.at(*cur).parent) path.push_back(*cur);
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<TokenId> ReasoningTree::ResponseTokens(NodeId id) const {
  std::vector<TokenId> tokens;
  for (NodeId n : Path(id)) {
    const auto& seg = nodes_[n].segment.tokens;
    tokens.insert(tokens.end(), seg.begin(), seg.end());
  }
  return tokens;
}

std::vector<NodeId> ReasoningTree::Leaves() const {
  std::vector<NodeId> leaves;
  for (const auto& node : nodes_) {
    if (node.id == root() || node.status == NodeStatus::kPruned) continue;
    const bool has_surviving_child =
        std::any_of(node.children.begin(), node.children.end(),
                    [&](NodeId c) { return nodes_[c].status != NodeStatus::kPruned; });
    if (!has_surviving_child) leaves.push_back(node.id);
  }
  return leaves;
}

std::size_t ReasoningTree::GeneratedTokens() const {
  std::size_t total = 0;
  for (const auto& node : nodes_) total += node.segment.tokens.size();
  return total;
}

std::string ReasoningTree::ToJson() const {
  using internal::Json;
  Json nodes = Json::array();
  Json edges = Json::array();
  for (const auto& node : nodes_) {
    Json j;
    j["id"] = node.id;
    j["parent"] = node.parent ? Json(*node.parent) : Json(nullptr);
    j["depth"] = node.depth;
    j["rank"] = node.rank;
    j["status"] = NodeStatusName(node.status);
    j["score"] = node.id == root() ? Json(nullptr) : Json(node.score);
    j["tokens"] = node.segment.tokens;
    j["text"] = node.segment.text;
    j["finished"] = node.segment.finished;
    nodes.push_back(std::move(j));
    if (node.parent) edges.push_back({*node.parent, node.id});
  }
  Json doc;
  doc["question"] = question_;
  doc["prompt_tokens"] = prompt_;
  doc["nodes"] = std::move(nodes);
  doc["edges"] = std::move(edges);
  doc["leaves"] = Leaves();
  return doc.dump(2);
}

void CheckProbeMatchesBackend(const LinearProbe& probe, const GenerationBackend& backend) {
  const auto& info = backend.info();
  if (probe.dim() != static_cast<std::size_t>(info.dim)) {
    throw Error(ErrorCode::kInvalidConfig,
                "probe dim " + std::to_string(probe.dim()) + " but backend serves dim " +
                    std::to_string(info.dim));
  }
  if (probe.layer() != info.layer || probe.rep_type() != info.rep_type) {
    throw Error(ErrorCode::kInvalidConfig,
                "probe reads layer " + std::to_string(probe.layer()) + " " +
                    std::string(RepTypeName(probe.rep_type())) + " but backend serves layer " +
                    std::to_string(info.layer) + " " + std::string(RepTypeName(info.rep_type)));
  }
}

std::vector<ScoredChild> ExpandNode(std::span<const TokenId> prefix,
                                    const GenerationBackend& backend, const LinearProbe& probe,
                                    int k, int token_budget, int parallelism) {
  if (k < 1) throw Error(ErrorCode::kInvalidConfig, "k must be >= 1");
  if (token_budget < 1) throw Error(ErrorCode::kInvalidConfig, "token budget must be >= 1");
  if (probe.dim() != static_cast<std::size_t>(backend.info().dim)) {
    throw Error(ErrorCode::kInvalidConfig, "probe dimension does not match the backend");
  }
  const auto firsts = backend.TopKFirstTokens(prefix, k);
  std::vector<ScoredChild> children(firsts.size());
  const int workers = backend.info().single_flight ? 1 : parallelism;
  ParallelFor(firsts.size(), workers, [&](std::size_t i) {
    ScoredChild& child = children[i];
    child.rank = static_cast<int>(i);
    child.segment = backend.ForcedContinue(prefix, firsts[i], token_budget);
    if (child.segment.reps.empty()) {
      throw Error(ErrorCode::kProtocolError, "backend returned an empty child segment");
    }
    child.score = probe.Logit(child.segment.reps.back().values);
    child.terminal = child.segment.finished;
  });
  return children;
}

std::vector<std::size_t> SelectTopN(std::span<const double> scores, int n) {
  if (n < 1) throw Error(ErrorCode::kInvalidConfig, "n must be >= 1");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  if (order.size() > static_cast<std::size_t>(n)) order.resize(static_cast<std::size_t>(n));
  return order;
}

std::vector<std::size_t> SelectRandomN(std::size_t count, int n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::kInvalidConfig, "n must be >= 1");
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng(seed);
  // Partial Fisher-Yates: the first n slots become a uniform sample.
  const std::size_t take = std::min(count, static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (count - i));
    std::swap(order[i], order[j]);
  }
  order.resize(take);
  std::sort(order.begin(), order.end());
  return order;
}

std::vector<std::size_t> PruneChildren(std::vector<ScoredChild>& children, int n) {
  std::vector<double> scores;
  scores.reserve(children.size());
  for (const auto& c : children) scores.push_back(c.score);
  auto kept = SelectTopN(scores, n);
  for (auto& c : children) c.pruned = true;
  for (std::size_t i : kept) children[i].pruned = false;
  return kept;
}

ReasoningTree RunBranching(std::string_view question, const GenerationBackend& backend,
                           const LinearProbe& probe, const SearchConfig& config) {
  config.Validate();
  CheckProbeMatchesBackend(probe, backend);
  ReasoningTree tree(std::string(question), backend.Tokenize(FormatPrompt(question)));

  std::vector<NodeId> frontier{ReasoningTree::root()};
  for (int round = 0; round < config.m && !frontier.empty(); ++round) {
    std::vector<NodeId> next;
    for (NodeId parent : frontier) {
      std::vector<TokenId> prefix = tree.prompt();
      const auto response = tree.ResponseTokens(parent);
      prefix.insert(prefix.end(), response.begin(), response.end());

      auto children = ExpandNode(prefix, backend, probe, config.k,
                                 config.token_budgets[static_cast<std::size_t>(round)],
                                 config.parallelism);
      if (config.pruning == PruningPolicy::kGuided) {
        PruneChildren(children, config.n);
      } else {
        for (auto& c : children) c.pruned = true;
        for (std::size_t i :
             SelectRandomN(children.size(), config.n, HashCombine(config.seed, parent))) {
          children[i].pruned = false;
        }
      }
      for (auto& child : children) {
        TreeNode node;
        node.rank = child.rank;
        node.score = child.score;
        node.segment = std::move(child.segment);
        node.status = child.pruned     ? NodeStatus::kPruned
                      : child.terminal ? NodeStatus::kTerminal
                                       : NodeStatus::kOpen;
        const NodeId id = tree.AddChild(parent, std::move(node));
        if (tree.node(id).status == NodeStatus::kOpen) next.push_back(id);
      }
    }
    frontier = std::move(next);
  }
  return tree;
}

CompletionResult RunCompletion(const ReasoningTree& tree, const GenerationBackend& backend,
                               const LinearProbe& probe, const SearchConfig& config) {
  config.Validate();
  CompletionResult result;
  for (NodeId leaf : tree.Leaves()) {
    Branch branch;
    for (NodeId id : tree.Path(leaf)) {
      if (id == ReasoningTree::root()) continue;
      const auto& node = tree.node(id);
      branch.nodes.push_back(id);
      branch.scores.push_back(node.score);
      branch.tokens.insert(branch.tokens.end(), node.segment.tokens.begin(),
                           node.segment.tokens.end());
      branch.text += node.segment.text;
    }
    branch.finished = tree.node(leaf).segment.finished;
    try {
      for (int step = 0; step < config.completion_steps && !branch.finished; ++step) {
        std::vector<TokenId> prefix = tree.prompt();
        prefix.insert(prefix.end(), branch.tokens.begin(), branch.tokens.end());
        auto seg = backend.GreedyContinue(prefix, config.completion_tokens_per_step);
        result.generated_tokens += seg.tokens.size();
        if (seg.tokens.empty()) {
          branch.finished = branch.finished || seg.finished;
          break;
        }
        branch.scores.push_back(probe.Logit(seg.reps.back().values));
        branch.tokens.insert(branch.tokens.end(), seg.tokens.begin(), seg.tokens.end());
        branch.text += seg.text;
        branch.finished = seg.finished;
      }
    } catch (const Error& e) {
      result.diagnostics.push_back("branch ending at node " + std::to_string(leaf) +
                                   " dropped: " + e.what());
      continue;
    }
    result.branches.push_back(std::move(branch));
  }
  return result;
}

}  // namespace probesearch
