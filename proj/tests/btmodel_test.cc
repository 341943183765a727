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

#include <chrono>
#include <cmath>
#include <random>

#include "doctest.h"
#include "probesearch/btmodel.hpp"
#include "test_util.hpp"

using namespace probesearch;
using probesearch::testing::ThrownCode;

namespace {

// Direct sums, fine for moderate rewards.
double NaivePositive(const BTWorld& w, std::size_t i) {
  double p = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double ri = w.items()[i].reward, rj = w.items()[j].reward;
    p += w.competitor_weights()[j] * std::exp(ri) / (std::exp(ri) + std::exp(rj));
  }
  return p;
}

double NaiveLogPartition(const BTWorld& w) {
  double z = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    z += w.competitor_weights()[j] * std::exp(w.items()[j].reward);
  }
  return std::log(z);
}

}  // namespace

TEST_CASE("exact probability and logit match direct summation") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    BTWorldOptions o;
    o.num_items = 3 + seed % 10;
    const BTWorld w = MakeRandomWorld(o, seed);
    CHECK(w.LogPartition() == doctest::Approx(NaiveLogPartition(w)).epsilon(1e-12));
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double p = NaivePositive(w, i);
      CHECK(ExactPositiveProbability(w, i) == doctest::Approx(p).epsilon(1e-12));
      CHECK(ExactLogit(w, i) == doctest::Approx(std::log(p / (1.0 - p))).epsilon(1e-9));
    }
  }
}

TEST_CASE("preference probability is the two-item softmax") {
  const BTWorld w = BTWorld::FromRewards({0.0, std::log(3.0)}, {0.5, 0.5});
  CHECK(PreferenceProbability(w, 1, 0) == doctest::Approx(0.75));
  CHECK(PreferenceProbability(w, 0, 1) == doctest::Approx(0.25));
  CHECK(PreferenceProbability(w, 0, 0) == 0.5);
}

TEST_CASE("reward ordering and logit bound hold on 50 random worlds") {
  const auto start = std::chrono::steady_clock::now();
  const auto checks = RunOracleSuite(0, 50);
  REQUIRE(checks.size() == 50);
  for (const auto& c : checks) {
    CAPTURE(c.seed);
    CHECK(c.num_items >= 3);
    CHECK(c.num_items <= 20);
    CHECK(c.reward_ordering);
    CHECK(c.logit_lower_bound);
  }
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(5));
}

TEST_CASE("logit bound and ordering verified independently") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    BTWorldOptions o;
    o.num_items = 3 + seed % 18;
    const BTWorld w = MakeRandomWorld(o, seed);
    const double c = NaiveLogPartition(w);
    for (std::size_t i = 0; i < w.size(); ++i) {
      CHECK(ExactLogit(w, i) >= w.Reward(i) - c - 1e-9);
      for (std::size_t j = 0; j < w.size(); ++j) {
        if (w.Reward(i) > w.Reward(j) + 1e-9) CHECK(ExactLogit(w, i) > ExactLogit(w, j));
      }
    }
  }
}

TEST_CASE("extreme rewards stay finite and ordered") {
  const BTWorld w = BTWorld::FromRewards({800.0, -800.0, 0.0, 799.0}, {0.1, 0.2, 0.3, 0.4});
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(std::isfinite(ExactLogit(w, i)));
  CHECK(CheckRewardOrdering(w));
  CHECK(CheckLogitLowerBound(w));
  CHECK(ExactLogit(w, 0) > ExactLogit(w, 3));
}

TEST_CASE("world construction is validated") {
  CHECK(ThrownCode([] { BTWorld::FromRewards({1.0, 2.0}, {0.5, 0.6}); }) ==
        ErrorCode::kInvalidInput);
  CHECK(ThrownCode([] { BTWorld::FromRewards({1.0, 2.0}, {1.5, -0.5}); }) ==
        ErrorCode::kInvalidInput);
  CHECK(ThrownCode([] { BTWorld::FromRewards({1.0, 2.0}, {1.0}); }) ==
        ErrorCode::kInvalidInput);
  BTWorldOptions o;
  o.num_items = 0;
  CHECK(ThrownCode([&] { MakeRandomWorld(o, 1); }) == ErrorCode::kInvalidInput);
}

TEST_CASE("random worlds have normalized weights and affine rewards") {
  const BTWorld w = MakeRandomWorld({}, 3);
  double total = 0.0;
  for (double p : w.competitor_weights()) total += p;
  CHECK(std::abs(total - 1.0) <= 1e-12);
  for (const auto& item : w.items()) {
    double r = w.reward_offset();
    for (std::size_t d = 0; d < w.dim(); ++d) r += w.reward_direction()[d] * item.features[d];
    CHECK(item.reward == doctest::Approx(r).epsilon(1e-12));
  }
}

TEST_CASE("sampled labels converge to the exact positive probability") {
  const BTWorld w = MakeRandomWorld({}, 8);
  const std::size_t n = 200000;
  const auto matches = SamplePreferenceMatches(w, n, 17);
  std::vector<double> wins(w.size(), 0.0), seen(w.size(), 0.0);
  for (const auto& m : matches) {
    seen[m.first] += 1.0;
    wins[m.first] += m.first_won ? 1.0 : 0.0;
  }
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double p = ExactPositiveProbability(w, i);
    const double se = std::sqrt(p * (1.0 - p) / seen[i]);
    CHECK(std::abs(wins[i] / seen[i] - p) < 5.0 * se + 1e-9);
  }
}

TEST_CASE("preference pairs emit opposite labels in twos") {
  const BTWorld w = MakeRandomWorld({}, 4);
  const ProbeDataset ds = SamplePreferencePairs(w, 100, 9);
  REQUIRE(ds.samples.size() == 200);
  CHECK(ds.dim() == w.dim());
  for (std::size_t k = 0; k < 200; k += 2) CHECK(ds.samples[k].label != ds.samples[k + 1].label);
  CHECK(ThrownCode([&] { SamplePreferencePairs(w, 0, 9); }) == ErrorCode::kInvalidInput);
}

TEST_CASE("pairwise agreement") {
  CHECK(PairwiseAgreement({1, 2, 3}, {10, 20, 30}) == 1.0);
  CHECK(PairwiseAgreement({3, 2, 1}, {10, 20, 30}) == 0.0);
  CHECK(PairwiseAgreement({1, 1}, {1, 2}) == 0.5);
  CHECK(ThrownCode([] { PairwiseAgreement({1}, {1, 2}); }) == ErrorCode::kInvalidInput);
}

TEST_CASE("logistic probe recovers the reward order of held-out items") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    CAPTURE(seed);
    CHECK(ProbeRecoveryAgreement({}, seed) >= 0.95);
  }
}

TEST_CASE("world JSON round-trip") {
  const BTWorld w = MakeRandomWorld({}, 12);
  const BTWorld back = WorldFromJson(WorldToJson(w));
  REQUIRE(back.size() == w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    CHECK(back.Reward(i) == w.Reward(i));
    CHECK(back.items()[i].features == w.items()[i].features);
  }
  CHECK(back.competitor_weights() == w.competitor_weights());
  CHECK(ThrownCode([] { WorldFromJson("[]"); }) == ErrorCode::kParseError);
}
