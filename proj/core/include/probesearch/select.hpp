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

#ifndef PROBESEARCH_SELECT_HPP_
#define PROBESEARCH_SELECT_HPP_

// Answer extraction and final-answer selection over an answer pool.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "probesearch/backend.hpp"
#include "probesearch/numeric.hpp"
#include "probesearch/search.hpp"

namespace probesearch {

// First signed decimal numeral in `text`: optional sign directly before the
// digits, optional fraction, thousands separators ("1,234") stripped.
std::optional<double> ParseFirstNumeral(std::string_view text);

struct Extraction {
  std::optional<double> answer;
  std::string continuation;  // decoded text after the trigger phrase
  std::size_t generated_tokens = 0;
};

// Appends the answer trigger to prompt + branch (trailing eos removed),
// decodes greedily for up to trigger_budget tokens and parses the first
// numeral. Backend failures become Error(kExtractionFailed).
Extraction ExtractAnswer(std::span<const TokenId> prompt, const Branch& branch,
                         const GenerationBackend& backend, int trigger_budget);

struct BranchMetrics {
  double final_score = 0.0;
  double mean = 0.0;
  double increase_ratio = 0.0;  // 0 for a single score
};

// Throws Error(kInvalidInput) on an empty sequence.
BranchMetrics ComputeBranchMetrics(std::span<const double> scores);

enum class Metric { kFinal, kMean, kIncreaseRatio };
std::string_view MetricName(Metric metric);
double MetricValue(const BranchMetrics& metrics, Metric metric);

struct PoolEntry {
  double answer = 0.0;
  std::size_t branch = 0;  // index into the problem's branch list
  std::vector<double> scores;

  friend bool operator==(const PoolEntry&, const PoolEntry&) = default;
};

// Answers from successfully extracted branches. Equivalence classes are
// built over the sorted answers: each class starts at its smallest member
// and absorbs every later answer matching it.
class AnswerPool {
 public:
  AnswerPool() = default;
  explicit AnswerPool(std::vector<PoolEntry> entries);

  // Throws Error(kInvalidInput) on a non-finite answer or empty scores.
  void Add(PoolEntry entry);

  const std::vector<PoolEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  struct AnswerClass {
    double answer = 0.0;               // representative (smallest member)
    std::vector<std::size_t> members;  // entry indices, ascending
  };
  std::vector<AnswerClass> Classes() const;
  bool Contains(double answer) const;

  friend bool operator==(const AnswerPool&, const AnswerPool&) = default;

 private:
  std::vector<PoolEntry> entries_;
};

enum class Strategy {
  kAggregateFinal,
  kAggregateMean,
  kAggregateIncreaseRatio,
  kBestOfNFinal,
  kBestOfNMean,
  kBestOfNIncreaseRatio,
  kMajority,
};
std::string_view StrategyName(Strategy strategy);
Strategy ParseStrategy(std::string_view name);
std::vector<Strategy> AllStrategies();
// Comma-separated names, or "all".
std::vector<Strategy> ParseStrategyList(std::string_view list);

struct AnswerValue {
  double answer = 0.0;
  double value = 0.0;
  std::size_t support = 0;

  friend bool operator==(const AnswerValue&, const AnswerValue&) = default;
};

struct SelectionResult {
  double answer = 0.0;
  std::vector<AnswerValue> values;  // one per answer class, ascending answer
  Strategy strategy = Strategy::kAggregateFinal;

  friend bool operator==(const SelectionResult&, const SelectionResult&) = default;
};

// All selectors throw Error(kNoAnswer) on an empty pool.

// Sum of the metric over each answer's supporting branches; ties prefer
// more support, then the smaller answer.
SelectionResult SelectAggregate(const AnswerPool& pool, Metric metric);
// Answer of the single best branch; ties prefer the earlier branch.
SelectionResult SelectBestOfN(const AnswerPool& pool, Metric metric);
// Most supported answer; ties prefer the larger summed final score, then
// the smaller answer.
SelectionResult SelectMajority(const AnswerPool& pool);
SelectionResult Select(const AnswerPool& pool, Strategy strategy);

// Fraction of pools containing their gold answer.
double CoverRate(std::span<const AnswerPool> pools, std::span<const double> golds);

}  // namespace probesearch

#endif  // PROBESEARCH_SELECT_HPP_
