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

#include "probesearch/btmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "io_util.hpp"
#include "probesearch/error.hpp"
#include "probesearch/random.hpp"

namespace probesearch {
namespace {

constexpr double kRewardTie = 1e-9;

// log(1 + exp(x)) without overflow.
double Softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double LogSumExp(const std::vector<double>& terms) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double t : terms) hi = std::max(hi, t);
  if (!std::isfinite(hi)) return hi;
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - hi);
  return hi + std::log(sum);
}

void CheckIndex(const BTWorld& world, std::size_t i) {
  if (i >= world.size()) {
    throw Error(ErrorCode::kInvalidInput, "item index " + std::to_string(i) +
                                              " out of range for world of " +
                                              std::to_string(world.size()));
  }
}

}  // namespace

BTWorld::BTWorld(std::vector<std::vector<double>> features,
                 std::vector<double> competitor_weights,
                 std::vector<double> reward_direction, double reward_offset)
    : weights_(std::move(competitor_weights)),
      direction_(std::move(reward_direction)),
      offset_(reward_offset) {
  if (features.empty()) throw Error(ErrorCode::kInvalidInput, "world has no items");
  if (features.size() != weights_.size()) {
    throw Error(ErrorCode::kInvalidInput, "one competitor weight per item required");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::kInvalidInput, "competitor weights must be non-negative");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw Error(ErrorCode::kInvalidInput, "competitor weights must sum to 1");
  }
  items_.reserve(features.size());
  for (auto& f : features) {
    if (f.size() != direction_.size()) {
      throw Error(ErrorCode::kInvalidInput, "feature dimension mismatch");
    }
    double r = offset_;
    for (std::size_t d = 0; d < f.size(); ++d) r += direction_[d] * f[d];
    if (!std::isfinite(r)) throw Error(ErrorCode::kInvalidInput, "non-finite reward");
    items_.push_back({std::move(f), r});
  }
  std::vector<double> terms;
  for (std::size_t j = 0; j < items_.size(); ++j) {
    if (weights_[j] > 0.0) terms.push_back(std::log(weights_[j]) + items_[j].reward);
  }
  log_partition_ = LogSumExp(terms);
}

BTWorld BTWorld::FromRewards(const std::vector<double>& rewards,
                             std::vector<double> competitor_weights) {
  std::vector<std::vector<double>> features;
  features.reserve(rewards.size());
  for (double r : rewards) features.push_back({r});
  return BTWorld(std::move(features), std::move(competitor_weights), {1.0}, 0.0);
}

double BTWorld::Reward(std::size_t i) const {
  CheckIndex(*this, i);
  return items_[i].reward;
}

BTWorld MakeRandomWorld(const BTWorldOptions& options, std::uint64_t seed) {
  if (options.num_items == 0 || options.dim == 0) {
    throw Error(ErrorCode::kInvalidInput, "world needs at least one item and feature");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> direction(options.dim);
  for (auto& u : direction) u = normal(rng);
  const double offset = normal(rng);

  std::vector<std::vector<double>> features(options.num_items,
                                            std::vector<double>(options.dim));
  for (auto& f : features) {
    for (auto& x : f) x = options.feature_scale * normal(rng);
  }

  std::vector<double> weights(options.num_items, 1.0);
  if (options.random_weights) {
    std::exponential_distribution<double> expo(1.0);
    for (auto& w : weights) w = expo(rng) + 1e-3;
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (auto& w : weights) w /= total;
  // Push the rounding residue onto the largest weight so the sum is 1 to
  // within an ulp or two.
  const double residue = 1.0 - std::accumulate(weights.begin(), weights.end(), 0.0);
  *std::max_element(weights.begin(), weights.end()) += residue;

  return BTWorld(std::move(features), std::move(weights), std::move(direction), offset);
}

std::vector<BTItem> SampleItemsLike(const BTWorld& world, std::size_t count,
                                    double feature_scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<BTItem> items(count);
  for (auto& item : items) {
    item.features.resize(world.dim());
    item.reward = world.reward_offset();
    for (std::size_t d = 0; d < world.dim(); ++d) {
      item.features[d] = feature_scale * normal(rng);
      item.reward += world.reward_direction()[d] * item.features[d];
    }
  }
  return items;
}

double PreferenceProbability(const BTWorld& world, std::size_t i, std::size_t j) {
  CheckIndex(world, i);
  CheckIndex(world, j);
  const double ri = world.items()[i].reward;
  const double rj = world.items()[j].reward;
  const double hi = std::max(ri, rj);
  const double ei = std::exp(ri - hi);
  const double ej = std::exp(rj - hi);
  return ei / (ei + ej);
}

double ExactPositiveProbability(const BTWorld& world, std::size_t i) {
  CheckIndex(world, i);
  double p = 0.0;
  for (std::size_t j = 0; j < world.size(); ++j) {
    const double w = world.competitor_weights()[j];
    if (w > 0.0) p += w * PreferenceProbability(world, i, j);
  }
  return p;
}

double ExactLogit(const BTWorld& world, std::size_t i) {
  CheckIndex(world, i);
  const double ri = world.items()[i].reward;
  std::vector<double> win, lose;
  for (std::size_t j = 0; j < world.size(); ++j) {
    const double w = world.competitor_weights()[j];
    if (w <= 0.0) continue;
    const double delta = ri - world.items()[j].reward;
    // log sigmoid(delta) = -softplus(-delta)
    win.push_back(std::log(w) - Softplus(-delta));
    lose.push_back(std::log(w) - Softplus(delta));
  }
  return LogSumExp(win) - LogSumExp(lose);
}

bool CheckRewardOrdering(const BTWorld& world) {
  const std::size_t n = world.size();
  std::vector<double> logits(n);
  for (std::size_t i = 0; i < n; ++i) logits[i] = ExactLogit(world, i);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double ri = world.items()[i].reward;
      const double rj = world.items()[j].reward;
      if (std::abs(ri - rj) <= kRewardTie) continue;
      if ((logits[i] > logits[j]) != (ri > rj)) return false;
      if (logits[i] == logits[j]) return false;
    }
  }
  return true;
}

bool CheckLogitLowerBound(const BTWorld& world) {
  const double c = world.LogPartition();
  for (std::size_t i = 0; i < world.size(); ++i) {
    if (ExactLogit(world, i) < world.items()[i].reward - c - 1e-9) return false;
  }
  return true;
}

std::vector<PreferenceMatch> SamplePreferenceMatches(const BTWorld& world,
                                                     std::size_t n,
                                                     std::uint64_t seed) {
  if (n == 0) throw Error(ErrorCode::kInvalidInput, "need at least one pair");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> uniform(0, world.size() - 1);
  std::discrete_distribution<std::size_t> competitor(world.competitor_weights().begin(),
                                                     world.competitor_weights().end());
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<PreferenceMatch> matches;
  matches.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    PreferenceMatch m;
    m.first = uniform(rng);
    m.second = competitor(rng);
    m.first_won = coin(rng) < PreferenceProbability(world, m.first, m.second);
    matches.push_back(m);
  }
  return matches;
}

ProbeDataset SamplePreferencePairs(const BTWorld& world, std::size_t n,
                                   std::uint64_t seed) {
  ProbeDataset dataset;
  dataset.samples.reserve(2 * n);
  for (const auto& m : SamplePreferenceMatches(world, n, seed)) {
    dataset.samples.push_back({world.items()[m.first].features, m.first_won});
    dataset.samples.push_back({world.items()[m.second].features, !m.first_won});
  }
  return dataset;
}

double PairwiseAgreement(const std::vector<double>& predicted,
                         const std::vector<double>& truth) {
  if (predicted.size() != truth.size()) {
    throw Error(ErrorCode::kInvalidInput, "score vectors differ in length");
  }
  double agree = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (std::size_t j = i + 1; j < truth.size(); ++j) {
      if (std::abs(truth[i] - truth[j]) <= kRewardTie) continue;
      ++pairs;
      if (predicted[i] == predicted[j]) {
        agree += 0.5;
      } else if ((predicted[i] > predicted[j]) == (truth[i] > truth[j])) {
        agree += 1.0;
      }
    }
  }
  if (pairs == 0) throw Error(ErrorCode::kInvalidInput, "no comparable pairs");
  return agree / static_cast<double>(pairs);
}

std::vector<OracleCheck> RunOracleSuite(std::uint64_t first_seed, std::size_t count) {
  std::vector<OracleCheck> out;
  for (std::uint64_t seed = first_seed; seed < first_seed + count; ++seed) {
    BTWorldOptions options;
    options.num_items = 3 + static_cast<std::size_t>(seed % 18);
    const BTWorld world = MakeRandomWorld(options, seed);
    out.push_back({seed, world.size(), CheckRewardOrdering(world), CheckLogitLowerBound(world)});
  }
  return out;
}

double ProbeRecoveryAgreement(const RecoveryOptions& options, std::uint64_t seed) {
  BTWorldOptions world_options;
  world_options.num_items = options.train_items;
  world_options.dim = options.dim;
  const BTWorld world = MakeRandomWorld(world_options, seed);
  const ProbeDataset data =
      SamplePreferencePairs(world, options.num_pairs, HashCombine(seed, 1));
  const LinearProbe probe = TrainLogisticRegression(data, options.train);
  const auto held_out =
      SampleItemsLike(world, options.held_out, world_options.feature_scale, HashCombine(seed, 2));
  std::vector<double> predicted, truth;
  for (const auto& item : held_out) {
    predicted.push_back(probe.Logit(item.features));
    truth.push_back(item.reward);
  }
  return PairwiseAgreement(predicted, truth);
}

std::string WorldToJson(const BTWorld& world) {
  internal::Json j;
  internal::Json items = internal::Json::array();
  for (const auto& item : world.items()) {
    items.push_back({{"features", item.features}, {"reward", item.reward}});
  }
  j["items"] = std::move(items);
  j["competitor_weights"] = world.competitor_weights();
  j["reward_direction"] = world.reward_direction();
  j["reward_offset"] = world.reward_offset();
  j["log_partition"] = world.LogPartition();
  return j.dump(2);
}

BTWorld WorldFromJson(std::string_view text) {
  const auto j = internal::ParseJson(text);
  try {
    std::vector<std::vector<double>> features;
    for (const auto& item : j.at("items")) {
      features.push_back(item.at("features").get<std::vector<double>>());
    }
    return BTWorld(std::move(features),
                   j.at("competitor_weights").get<std::vector<double>>(),
                   j.at("reward_direction").get<std::vector<double>>(),
                   j.at("reward_offset").get<double>());
  } catch (const internal::Json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("world document: ") + e.what());
  }
}

}  // namespace probesearch
