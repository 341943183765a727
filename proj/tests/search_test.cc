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

#include <algorithm>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <tuple>

#include "doctest.h"
#include "json.hpp"
#include "probesearch/search.hpp"
#include "probesearch/synthetic_backend.hpp"
#include "search_oracle.hpp"
#include "test_util.hpp"

using namespace probesearch;
using probesearch::testing::DelegatingBackend;
using probesearch::testing::SyntheticFixture;
using probesearch::testing::ThrownCode;
using probesearch::testing::MatchesOracle;
using probesearch::testing::Dot;

namespace {

std::shared_ptr<const SyntheticWorld> MakeWorld(std::uint64_t seed, std::optional<double> sigma,
                                                int problems = 1) {
  SyntheticWorldParams p;
  p.num_problems = problems;
  p.sigma = sigma;
  return std::make_shared<SyntheticWorld>(NewSyntheticWorld(p, seed));
}

LinearProbe RandomProbe(std::size_t dim, int layer, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> w(dim);
  for (auto& v : w) v = normal(rng);
  return LinearProbe(w, normal(rng), ProbeKind::kLogisticRegression, layer,
                     RepType::kHiddenState);
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("token budget helpers") {
    CHECK(SearchConfig::DefaultTokenBudgets(3) == std::vector<int>{1, 20, 20});
    CHECK(SearchConfig::DefaultTokenBudgets(1) == std::vector<int>{1});
    CHECK(SearchConfig::EvenTokenBudgets(240, 3) == std::vector<int>{80, 80, 80});
    CHECK(SearchConfig::EvenTokenBudgets(10, 3) == std::vector<int>{3, 3, 3});
    CHECK(ThrownCode([] { SearchConfig::EvenTokenBudgets(10, 0); }) ==
          ErrorCode::kInvalidConfig);
  }

  TEST_CASE("validation") {
    SearchConfig c;
    CHECK_NOTHROW(c.Validate());
    c.n = 11;
    CHECK(ThrownCode([&] { c.Validate(); }) == ErrorCode::kInvalidConfig);
    c = {};
    c.m = 2;
    CHECK(ThrownCode([&] { c.Validate(); }) == ErrorCode::kInvalidConfig);
    c.token_budgets = {1, 0};
    CHECK(ThrownCode([&] { c.Validate(); }) == ErrorCode::kInvalidConfig);
    c = {};
    c.completion_tokens_per_step = 0;
    CHECK(ThrownCode([&] { c.Validate(); }) == ErrorCode::kInvalidConfig);
    c = {};
    c.parallelism = 0;
    CHECK(ThrownCode([&] { c.Validate(); }) == ErrorCode::kInvalidConfig);
    CHECK(ParsePruningPolicy(PruningPolicyName(PruningPolicy::kRandom)) == PruningPolicy::kRandom);
    CHECK(ThrownCode([] { ParsePruningPolicy("best"); }) == ErrorCode::kInvalidConfig);
  }
}

TEST_SUITE("selection") {
  TEST_CASE("top-n examples") {
    CHECK(SelectTopN(std::vector<double>{0.1, 0.9, 0.5}, 2) == std::vector<std::size_t>{1, 2});
    CHECK(SelectTopN(std::vector<double>{1.0, 2.0, 2.0, 1.0}, 2) ==
          std::vector<std::size_t>{1, 2});
    CHECK(SelectTopN(std::vector<double>{3.0, 3.0, 3.0}, 2) == std::vector<std::size_t>{0, 1});
    CHECK(SelectTopN(std::vector<double>{4.0}, 3) == std::vector<std::size_t>{0});
    CHECK(SelectTopN(std::vector<double>{}, 3).empty());
    CHECK(ThrownCode([] { SelectTopN(std::vector<double>{1.0}, 0); }) ==
          ErrorCode::kInvalidConfig);
  }

  TEST_CASE("pruned scores never exceed kept scores") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> scores(1 + rng() % 12);
      for (auto& s : scores) s = static_cast<double>(rng() % 5);  // frequent ties
      const int n = 1 + static_cast<int>(rng() % 5);
      const auto kept = SelectTopN(scores, n);
      CHECK(kept.size() == std::min(scores.size(), static_cast<std::size_t>(n)));
      const std::set<std::size_t> keep(kept.begin(), kept.end());
      for (std::size_t i = 0; i < scores.size(); ++i) {
        if (keep.count(i)) continue;
        for (std::size_t k : kept) {
          CHECK(scores[i] <= scores[k]);
          if (scores[i] == scores[k]) CHECK(k < i);
        }
      }
      for (std::size_t j = 1; j < kept.size(); ++j) CHECK(scores[kept[j - 1]] >= scores[kept[j]]);
    }
  }

  TEST_CASE("prune marks the complement") {
    std::vector<ScoredChild> kids(4);
    const double scores[] = {0.2, 0.7, -1.0, 0.7};
    for (std::size_t i = 0; i < 4; ++i) kids[i].score = scores[i];
    CHECK(PruneChildren(kids, 2) == std::vector<std::size_t>{1, 3});
    CHECK(kids[0].pruned);
    CHECK_FALSE(kids[1].pruned);
    CHECK(kids[2].pruned);
    CHECK_FALSE(kids[3].pruned);
  }

  TEST_CASE("random selection is a seeded uniform subset") {
    CHECK(SelectRandomN(10, 3, 5) == SelectRandomN(10, 3, 5));
    CHECK(SelectRandomN(2, 3, 5) == std::vector<std::size_t>{0, 1});
    std::vector<int> hits(10, 0);
    const int trials = 20000;
    for (int s = 0; s < trials; ++s) {
      const auto pick = SelectRandomN(10, 3, static_cast<std::uint64_t>(s));
      REQUIRE(pick.size() == 3);
      CHECK(std::is_sorted(pick.begin(), pick.end()));
      CHECK(std::adjacent_find(pick.begin(), pick.end()) == pick.end());
      for (std::size_t i : pick) ++hits[i];
    }
    // Each index appears with probability 0.3.
    const double se = std::sqrt(0.3 * 0.7 / trials);
    for (int h : hits) CHECK(std::abs(static_cast<double>(h) / trials - 0.3) < 5 * se);
  }
}

TEST_SUITE("expansion") {
  TEST_CASE("children follow the top-k list and score their last token") {
    const auto world = MakeWorld(1, std::nullopt);
    const SyntheticBackend be(world);
    const LinearProbe probe = RandomProbe(16, be.info().layer, 2);
    const auto prompt = be.Tokenize(FormatPrompt(world->problems[0].question));
    const auto top = be.TopKFirstTokens(prompt, 6);
    const auto kids = ExpandNode(prompt, be, probe, 6, 12);
    REQUIRE(kids.size() == 6);
    for (std::size_t i = 0; i < kids.size(); ++i) {
      CHECK(kids[i].rank == static_cast<int>(i));
      CHECK(kids[i].segment.tokens.front() == top[i]);
      CHECK(kids[i].segment.tokens.size() <= 12);
      CHECK(kids[i].score == doctest::Approx(Dot(probe, kids[i].segment.reps.back().values)));
      CHECK(kids[i].terminal == kids[i].segment.finished);
    }
    const auto parallel = ExpandNode(prompt, be, probe, 6, 12, 4);
    for (std::size_t i = 0; i < kids.size(); ++i) {
      CHECK(parallel[i].segment == kids[i].segment);
      CHECK(parallel[i].score == kids[i].score);
    }
  }

  TEST_CASE("single-flight backends are expanded one call at a time") {
    const auto world = MakeWorld(1, std::nullopt);
    const SyntheticBackend be(world);
    const LinearProbe probe = RandomProbe(16, be.info().layer, 2);
    const auto prompt = be.Tokenize(FormatPrompt(world->problems[0].question));
    DelegatingBackend serial(be);
    serial.mutable_info().single_flight = true;
    ExpandNode(prompt, serial, probe, 8, 5, 4);
    CHECK(serial.max_in_flight() == 1);
    DelegatingBackend concurrent(be);
    ExpandNode(prompt, concurrent, probe, 8, 5, 4);
    CHECK(concurrent.max_in_flight() > 1);
  }

  TEST_CASE("probe must read the backend's stream") {
    const auto world = MakeWorld(1, std::nullopt);
    const SyntheticBackend be(world);
    const auto& q = world->problems[0].question;
    const LinearProbe wrong_dim = RandomProbe(15, be.info().layer, 1);
    CHECK(ThrownCode([&] { RunBranching(q, be, wrong_dim, {}); }) == ErrorCode::kInvalidConfig);
    const LinearProbe wrong_layer = RandomProbe(16, be.info().layer - 1, 1);
    CHECK(ThrownCode([&] { RunBranching(q, be, wrong_layer, {}); }) ==
          ErrorCode::kInvalidConfig);
    const LinearProbe wrong_type(std::vector<double>(16, 1.0), 0.0, ProbeKind::kLinearSvm,
                                 be.info().layer, RepType::kAttentionActivation);
    CHECK(ThrownCode([&] { RunBranching(q, be, wrong_type, {}); }) ==
          ErrorCode::kInvalidConfig);
  }
}

TEST_SUITE("branching") {
  TEST_CASE("tiny noiseless instance equals exhaustive enumeration") {
    // sigma = 0 makes every reasoning token score alike, so ties are
    // settled purely by top-k rank.
    const auto world = MakeWorld(4, 0.0);
    const SyntheticBackend be(world);
    SyntheticFixture fx(40, 4, 20);
    const LinearProbe probe = *fx.probe;
    SearchConfig c;
    c.k = 3;
    c.n = 2;
    c.m = 2;
    c.token_budgets = {4, 6};
    CHECK(MatchesOracle(world->problems[0].question, be, probe, c));
  }

  TEST_CASE("oracle equivalence for k <= 4, n <= 2, m <= 2 over 20 seeds") {
    int runs = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto world = MakeWorld(seed, std::nullopt);
      const SyntheticBackend be(world);
      const LinearProbe probe = RandomProbe(16, be.info().layer, seed + 100);
      std::mt19937_64 rng(seed);
      for (int k = 1; k <= 4; ++k) {
        for (int n = 1; n <= std::min(k, 2); ++n) {
          for (int m = 1; m <= 2; ++m) {
            SearchConfig c;
            c.k = k;
            c.n = n;
            c.m = m;
            c.token_budgets.clear();
            for (int i = 0; i < m; ++i) c.token_budgets.push_back(1 + static_cast<int>(rng() % 30));
            c.parallelism = 1 + static_cast<int>(seed % 3);
            CAPTURE(seed);
            CAPTURE(k);
            CAPTURE(n);
            CAPTURE(m);
            CHECK(MatchesOracle(world->problems[0].question, be, probe, c));
            ++runs;
          }
        }
      }
    }
    CHECK(runs == 20 * 14);
  }

  TEST_CASE("tree structure and token accounting") {
    SyntheticFixture fx(12, 5, 8);
    SearchConfig c;
    for (const auto& p : fx.world->problems) {
      const ReasoningTree tree = RunBranching(p.question, *fx.backend, *fx.probe, c);
      std::size_t bound = 0, fan_in = 1;
      for (int i = 0; i < c.m; ++i) {
        bound += static_cast<std::size_t>(c.k) * static_cast<std::size_t>(c.token_budgets[i]) * fan_in;
        fan_in *= static_cast<std::size_t>(c.n);
      }
      CHECK(tree.GeneratedTokens() <= bound);
      for (const auto& node : tree.nodes()) {
        std::size_t surviving = 0;
        for (NodeId child : node.children) {
          CHECK(tree.node(child).depth == node.depth + 1);
          CHECK(tree.node(child).parent == node.id);
          surviving += tree.node(child).status != NodeStatus::kPruned;
        }
        CHECK(surviving <= static_cast<std::size_t>(c.n));
        if (node.status != NodeStatus::kOpen) CHECK(node.children.empty());
        if (node.status == NodeStatus::kTerminal) CHECK(node.segment.finished);
      }
      for (NodeId leaf : tree.Leaves()) {
        CHECK(tree.node(leaf).status != NodeStatus::kPruned);
        const auto path = tree.Path(leaf);
        CHECK(path.front() == ReasoningTree::root());
        CHECK(path.back() == leaf);
      }
      const auto doc = nlohmann::json::parse(tree.ToJson());
      CHECK(doc["nodes"].size() == tree.nodes().size());
      CHECK(doc["edges"].size() == tree.nodes().size() - 1);
      CHECK(doc["question"] == p.question);
    }
  }

  TEST_CASE("guided search keeps reasoning openers at the root") {
    SyntheticFixture fx(20, 6, 10);
    SearchConfig c;
    for (const auto& p : fx.world->problems) {
      const ReasoningTree tree = RunBranching(p.question, *fx.backend, *fx.probe, c);
      for (NodeId child : tree.node(ReasoningTree::root()).children) {
        const auto& node = tree.node(child);
        const auto prefix = [&] {
          auto t = tree.prompt();
          t.push_back(node.segment.tokens.front());
          return t;
        }();
        const bool cot = fx.backend->ModeAfter(prefix) == SyntheticBackend::Mode::kCot;
        CHECK(cot == (node.status != NodeStatus::kPruned));
      }
    }
  }

  TEST_CASE("random pruning is seeded") {
    SyntheticFixture fx(3, 7, 3);
    SearchConfig c;
    c.pruning = PruningPolicy::kRandom;
    const auto& q = fx.world->problems[0].question;
    c.seed = 1;
    const std::string a = RunBranching(q, *fx.backend, *fx.probe, c).ToJson();
    CHECK(a == RunBranching(q, *fx.backend, *fx.probe, c).ToJson());
    bool differs = false;
    for (std::uint64_t s = 2; s < 8 && !differs; ++s) {
      c.seed = s;
      differs = RunBranching(q, *fx.backend, *fx.probe, c).ToJson() != a;
    }
    CHECK(differs);
  }
}

TEST_SUITE("completion") {
  TEST_CASE("branches extend greedily and append one score per productive step") {
    SyntheticFixture fx(6, 8, 4);
    SearchConfig c;
    c.token_budgets = {1, 5, 5};
    c.completion_tokens_per_step = 15;
    for (const auto& p : fx.world->problems) {
      const ReasoningTree tree = RunBranching(p.question, *fx.backend, *fx.probe, c);
      const CompletionResult result = RunCompletion(tree, *fx.backend, *fx.probe, c);
      CHECK(result.diagnostics.empty());
      REQUIRE(result.branches.size() == tree.Leaves().size());
      std::size_t extra = 0;
      for (std::size_t b = 0; b < result.branches.size(); ++b) {
        const Branch& br = result.branches[b];
        const NodeId leaf = tree.Leaves()[b];
        CHECK(br.nodes.back() == leaf);
        const auto base = tree.ResponseTokens(leaf);
        REQUIRE(br.tokens.size() >= base.size());
        CHECK(std::equal(base.begin(), base.end(), br.tokens.begin()));
        CHECK(br.scores.size() >= br.nodes.size());
        CHECK(br.scores.size() <= br.nodes.size() + static_cast<std::size_t>(c.completion_steps));
        for (std::size_t i = 0; i < br.nodes.size(); ++i) {
          CHECK(br.scores[i] == tree.node(br.nodes[i]).score);
        }
        extra += br.tokens.size() - base.size();
        // The completed tokens are what greedy decoding would emit.
        auto prefix = tree.prompt();
        prefix.insert(prefix.end(), base.begin(), base.end());
        if (!tree.node(leaf).segment.finished) {
          const auto greedy = fx.backend->GreedyContinue(
              prefix, c.completion_steps * c.completion_tokens_per_step);
          CHECK(std::equal(greedy.tokens.begin(), greedy.tokens.end(),
                           br.tokens.begin() + static_cast<std::ptrdiff_t>(base.size())));
        } else {
          CHECK(br.tokens.size() == base.size());
        }
      }
      CHECK(result.generated_tokens == extra);
    }
  }

  TEST_CASE("zero completion steps keep the branching scores") {
    SyntheticFixture fx(2, 9, 2);
    SearchConfig c;
    c.completion_steps = 0;
    const auto tree = RunBranching(fx.world->problems[0].question, *fx.backend, *fx.probe, c);
    const auto result = RunCompletion(tree, *fx.backend, *fx.probe, c);
    for (const auto& br : result.branches) CHECK(br.scores.size() == br.nodes.size());
    CHECK(result.generated_tokens == 0);
  }

  TEST_CASE("a failing branch is dropped with a diagnostic") {
    SyntheticFixture fx(2, 10, 2);
    SearchConfig c;
    const auto& q = fx.world->problems[0].question;
    const auto tree = RunBranching(q, *fx.backend, *fx.probe, c);
    const auto leaves = tree.Leaves();
    REQUIRE(leaves.size() > 1);
    // Fail completion for the first unfinished leaf only.
    std::optional<NodeId> victim;
    for (NodeId leaf : leaves) {
      if (!tree.node(leaf).segment.finished) {
        victim = leaf;
        break;
      }
    }
    REQUIRE(victim);
    auto poisoned = tree.prompt();
    const auto victim_tokens = tree.ResponseTokens(*victim);
    poisoned.insert(poisoned.end(), victim_tokens.begin(), victim_tokens.end());
    DelegatingBackend flaky(*fx.backend);
    flaky.before_greedy = [&](std::span<const TokenId> prefix) {
      if (std::vector<TokenId>(prefix.begin(), prefix.end()) == poisoned) {
        throw Error(ErrorCode::kBackendUnavailable, "connection reset");
      }
    };
    const auto result = RunCompletion(tree, flaky, *fx.probe, c);
    CHECK(result.branches.size() == leaves.size() - 1);
    REQUIRE(result.diagnostics.size() == 1);
    CHECK(result.diagnostics[0].find("connection reset") != std::string::npos);
  }
}
