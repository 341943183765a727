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

#ifndef PROBESEARCH_BTMODEL_HPP_
#define PROBESEARCH_BTMODEL_HPP_

// A synthetic Bradley-Terry world. Items carry features and a reward that
// is affine in the features; a competitor distribution over the same items
// turns pairwise preferences into binary classification data. The exact
// posterior P(y = 1 | item) is available in closed form, which makes the
// world an oracle for how probe logits relate to rewards.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "probesearch/probe.hpp"

namespace probesearch {

struct BTItem {
  std::vector<double> features;
  double reward = 0.0;
};

class BTWorld {
 public:
  // Rewards are recomputed as direction.features + offset. Throws
  // Error(kInvalidInput) when weights are negative, do not sum to 1 within
  // 1e-12, or sizes disagree.
  BTWorld(std::vector<std::vector<double>> features,
          std::vector<double> competitor_weights,
          std::vector<double> reward_direction, double reward_offset);

  // One-feature world whose feature is the reward itself.
  static BTWorld FromRewards(const std::vector<double>& rewards,
                             std::vector<double> competitor_weights);

  const std::vector<BTItem>& items() const { return items_; }
  const std::vector<double>& competitor_weights() const { return weights_; }
  const std::vector<double>& reward_direction() const { return direction_; }
  double reward_offset() const { return offset_; }
  std::size_t size() const { return items_.size(); }
  std::size_t dim() const { return direction_.size(); }

  double Reward(std::size_t i) const;
  // log sum_j p(j) exp(r_j).
  double LogPartition() const { return log_partition_; }

 private:
  std::vector<BTItem> items_;
  std::vector<double> weights_;
  std::vector<double> direction_;
  double offset_;
  double log_partition_;
};

struct BTWorldOptions {
  std::size_t num_items = 10;
  std::size_t dim = 4;
  // Features are N(0, feature_scale^2) per coordinate; the reward direction
  // is N(0, 1) per coordinate.
  double feature_scale = 1.0;
  // Competitor weights are flat Dirichlet draws when true, uniform otherwise.
  bool random_weights = true;
};

BTWorld MakeRandomWorld(const BTWorldOptions& options, std::uint64_t seed);

// Fresh items from the same affine reward as `world`, for held-out checks.
std::vector<BTItem> SampleItemsLike(const BTWorld& world, std::size_t count,
                                    double feature_scale, std::uint64_t seed);

// exp(r_i) / (exp(r_i) + exp(r_j)).
double PreferenceProbability(const BTWorld& world, std::size_t i, std::size_t j);
// sum_j p(j) P(i beats j).
double ExactPositiveProbability(const BTWorld& world, std::size_t i);
// log P / (1 - P) for ExactPositiveProbability, evaluated in log space so
// it stays finite when P rounds to 0 or 1.
double ExactLogit(const BTWorld& world, std::size_t i);

// For every pair with rewards more than 1e-9 apart, the strictly larger
// exact logit belongs to the strictly larger reward.
bool CheckRewardOrdering(const BTWorld& world);
// Every item satisfies ExactLogit(i) >= r_i - LogPartition() - 1e-9.
bool CheckLogitLowerBound(const BTWorld& world);

struct PreferenceMatch {
  std::size_t first = 0;   // drawn uniformly
  std::size_t second = 0;  // drawn from the competitor weights
  bool first_won = false;
};

std::vector<PreferenceMatch> SamplePreferenceMatches(const BTWorld& world,
                                                     std::size_t n,
                                                     std::uint64_t seed);
// Each match contributes the first item's features with label first_won and
// the second item's features with the opposite label.
ProbeDataset SamplePreferencePairs(const BTWorld& world, std::size_t n,
                                   std::uint64_t seed);

// Fraction of item pairs (with distinct scores in `truth`) whose order under
// `predicted` agrees with `truth`. Pairs tied in `predicted` count half.
double PairwiseAgreement(const std::vector<double>& predicted,
                         const std::vector<double>& truth);

struct OracleCheck {
  std::uint64_t seed = 0;
  std::size_t num_items = 0;
  bool reward_ordering = false;
  bool logit_lower_bound = false;
};

// Both ordering checks on MakeRandomWorld(seed) for `count` consecutive
// seeds; seed s gets 3 + s % 18 items.
std::vector<OracleCheck> RunOracleSuite(std::uint64_t first_seed, std::size_t count);

struct RecoveryOptions {
  std::size_t train_items = 100;
  std::size_t dim = 4;
  std::size_t num_pairs = 10000;
  std::size_t held_out = 50;
  TrainOptions train;
};

// Trains a logistic probe on preference pairs and returns its pairwise
// agreement with the true rewards of freshly sampled items.
double ProbeRecoveryAgreement(const RecoveryOptions& options, std::uint64_t seed);

std::string WorldToJson(const BTWorld& world);
BTWorld WorldFromJson(std::string_view text);

}  // namespace probesearch

#endif  // PROBESEARCH_BTMODEL_HPP_
