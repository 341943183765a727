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

#include "probesearch/select.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "probesearch/error.hpp"

namespace probesearch {
namespace {

bool IsDigit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

std::size_t CountDigits(std::string_view text, std::size_t pos) {
  std::size_t n = 0;
  while (pos + n < text.size() && IsDigit(text[pos + n])) ++n;
  return n;
}

}  // namespace

std::optional<double> ParseFirstNumeral(std::string_view text) {
  std::size_t pos = 0;
  while (pos < text.size() && !IsDigit(text[pos])) ++pos;
  if (pos == text.size()) return std::nullopt;

  std::string digits;
  if (pos > 0 && (text[pos - 1] == '-' || text[pos - 1] == '+')) digits += text[pos - 1];
  std::size_t lead = CountDigits(text, pos);
  digits.append(text.substr(pos, lead));
  pos += lead;
  if (lead <= 3) {
    while (pos + 4 <= text.size() && text[pos] == ',' && CountDigits(text, pos + 1) == 3) {
      digits.append(text.substr(pos + 1, 3));
      pos += 4;
    }
  }
  if (pos + 1 < text.size() && text[pos] == '.' && IsDigit(text[pos + 1])) {
    const std::size_t frac = CountDigits(text, pos + 1);
    digits += '.';
    digits.append(text.substr(pos + 1, frac));
  }
  return std::stod(digits);
}

Extraction ExtractAnswer(std::span<const TokenId> prompt, const Branch& branch,
                         const GenerationBackend& backend, int trigger_budget) {
  if (trigger_budget < 1) throw Error(ErrorCode::kInvalidConfig, "trigger budget must be >= 1");
  Extraction out;
  try {
    std::vector<TokenId> prefix(prompt.begin(), prompt.end());
    prefix.insert(prefix.end(), branch.tokens.begin(), branch.tokens.end());
    const TokenId eos = backend.info().eos_token;
    while (prefix.size() > prompt.size() && prefix.back() == eos) prefix.pop_back();
    const auto trigger = backend.Tokenize(kAnswerTrigger);
    prefix.insert(prefix.end(), trigger.begin(), trigger.end());
    auto seg = backend.GreedyContinue(prefix, trigger_budget);
    out.generated_tokens = seg.tokens.size();
    out.continuation = std::move(seg.text);
  } catch (const Error& e) {
    throw Error(ErrorCode::kExtractionFailed, e.what());
  }
  out.answer = ParseFirstNumeral(out.continuation);
  return out;
}

BranchMetrics ComputeBranchMetrics(std::span<const double> scores) {
  if (scores.empty()) throw Error(ErrorCode::kInvalidInput, "empty score sequence");
  BranchMetrics m;
  m.final_score = scores.back();
  double sum = 0.0;
  for (double s : scores) sum += s;
  m.mean = sum / static_cast<double>(scores.size());
  if (scores.size() > 1) {
    std::size_t ups = 0;
    for (std::size_t i = 0; i + 1 < scores.size(); ++i) ups += scores[i + 1] > scores[i];
    m.increase_ratio = static_cast<double>(ups) / static_cast<double>(scores.size() - 1);
  }
  return m;
}

std::string_view MetricName(Metric metric) {
  switch (metric) {
    case Metric::kFinal:
      return "final";
    case Metric::kMean:
      return "mean";
    case Metric::kIncreaseRatio:
      return "increase_ratio";
  }
  return "final";
}

double MetricValue(const BranchMetrics& metrics, Metric metric) {
  switch (metric) {
    case Metric::kFinal:
      return metrics.final_score;
    case Metric::kMean:
      return metrics.mean;
    case Metric::kIncreaseRatio:
      return metrics.increase_ratio;
  }
  return metrics.final_score;
}

AnswerPool::AnswerPool(std::vector<PoolEntry> entries) {
  for (auto& e : entries) Add(std::move(e));
}

void AnswerPool::Add(PoolEntry entry) {
  if (!std::isfinite(entry.answer)) throw Error(ErrorCode::kInvalidInput, "non-finite answer");
  if (entry.scores.empty()) throw Error(ErrorCode::kInvalidInput, "pool entry without scores");
  entries_.push_back(std::move(entry));
}

std::vector<AnswerPool::AnswerClass> AnswerPool::Classes() const {
  std::vector<std::size_t> order(entries_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return entries_[a].answer < entries_[b].answer;
  });
  std::vector<AnswerClass> classes;
  for (std::size_t i : order) {
    if (classes.empty() || !AnswersMatch(entries_[i].answer, classes.back().answer)) {
      classes.push_back({entries_[i].answer, {}});
    }
    classes.back().members.push_back(i);
  }
  for (auto& c : classes) std::sort(c.members.begin(), c.members.end());
  return classes;
}

bool AnswerPool::Contains(double answer) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const PoolEntry& e) { return AnswersMatch(e.answer, answer); });
}

namespace {

struct StrategyInfo {
  Strategy strategy;
  std::string_view name;
};

constexpr StrategyInfo kStrategies[] = {
    {Strategy::kAggregateFinal, "agg-final"},
    {Strategy::kAggregateMean, "agg-mean"},
    {Strategy::kAggregateIncreaseRatio, "agg-ir"},
    {Strategy::kBestOfNFinal, "bon-final"},
    {Strategy::kBestOfNMean, "bon-mean"},
    {Strategy::kBestOfNIncreaseRatio, "bon-ir"},
    {Strategy::kMajority, "vote"},
};

void RequireEntries(const AnswerPool& pool) {
  if (pool.empty()) throw Error(ErrorCode::kNoAnswer, "answer pool is empty");
}

// Summation in sorted order keeps the total independent of branch order.
double OrderedSum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum;
}

std::vector<AnswerValue> SummedValues(const AnswerPool& pool,
                                      const std::vector<AnswerPool::AnswerClass>& classes,
                                      Metric metric) {
  std::vector<AnswerValue> values;
  for (const auto& c : classes) {
    std::vector<double> parts;
    for (std::size_t i : c.members) {
      parts.push_back(MetricValue(ComputeBranchMetrics(pool.entries()[i].scores), metric));
    }
    values.push_back({c.answer, OrderedSum(std::move(parts)), c.members.size()});
  }
  return values;
}

}  // namespace

std::string_view StrategyName(Strategy strategy) {
  for (const auto& s : kStrategies) {
    if (s.strategy == strategy) return s.name;
  }
  return "agg-final";
}

Strategy ParseStrategy(std::string_view name) {
  for (const auto& s : kStrategies) {
    if (s.name == name) return s.strategy;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown strategy '" + std::string(name) + "'");
}

std::vector<Strategy> AllStrategies() {
  std::vector<Strategy> out;
  for (const auto& s : kStrategies) out.push_back(s.strategy);
  return out;
}

std::vector<Strategy> ParseStrategyList(std::string_view list) {
  if (list == "all") return AllStrategies();
  std::vector<Strategy> out;
  while (!list.empty()) {
    const auto comma = list.find(',');
    const auto item = list.substr(0, comma);
    if (!item.empty()) {
      const Strategy s = ParseStrategy(item);
      if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
    }
    if (comma == std::string_view::npos) break;
    list.remove_prefix(comma + 1);
  }
  if (out.empty()) throw Error(ErrorCode::kInvalidConfig, "no strategies given");
  return out;
}

SelectionResult SelectAggregate(const AnswerPool& pool, Metric metric) {
  RequireEntries(pool);
  SelectionResult result;
  result.strategy = metric == Metric::kFinal  ? Strategy::kAggregateFinal
                    : metric == Metric::kMean ? Strategy::kAggregateMean
                                              : Strategy::kAggregateIncreaseRatio;
  result.values = SummedValues(pool, pool.Classes(), metric);
  // Values are in ascending answer order, so keeping the first of equals
  // realises the smaller-answer tie-break.
  const AnswerValue* best = nullptr;
  for (const auto& v : result.values) {
    if (!best || v.value > best->value || (v.value == best->value && v.support > best->support)) {
      best = &v;
    }
  }
  result.answer = best->answer;
  return result;
}

SelectionResult SelectBestOfN(const AnswerPool& pool, Metric metric) {
  RequireEntries(pool);
  SelectionResult result;
  result.strategy = metric == Metric::kFinal  ? Strategy::kBestOfNFinal
                    : metric == Metric::kMean ? Strategy::kBestOfNMean
                                              : Strategy::kBestOfNIncreaseRatio;
  const auto classes = pool.Classes();
  const auto& entries = pool.entries();
  std::size_t best = 0;
  double best_value = 0.0;
  bool have = false;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const double v = MetricValue(ComputeBranchMetrics(entries[i].scores), metric);
    if (!have || v > best_value ||
        (v == best_value && entries[i].branch < entries[best].branch)) {
      best = i;
      best_value = v;
      have = true;
    }
  }
  for (const auto& c : classes) {
    double top = -INFINITY;
    for (std::size_t i : c.members) {
      top = std::max(top, MetricValue(ComputeBranchMetrics(entries[i].scores), metric));
    }
    result.values.push_back({c.answer, top, c.members.size()});
    if (std::binary_search(c.members.begin(), c.members.end(), best)) result.answer = c.answer;
  }
  return result;
}

SelectionResult SelectMajority(const AnswerPool& pool) {
  RequireEntries(pool);
  SelectionResult result;
  result.strategy = Strategy::kMajority;
  const auto finals = SummedValues(pool, pool.Classes(), Metric::kFinal);
  const AnswerValue* best = nullptr;
  for (const auto& f : finals) {
    if (!best || f.support > best->support ||
        (f.support == best->support && f.value > best->value)) {
      best = &f;
    }
    result.values.push_back({f.answer, static_cast<double>(f.support), f.support});
  }
  result.answer = best->answer;
  return result;
}

SelectionResult Select(const AnswerPool& pool, Strategy strategy) {
  switch (strategy) {
    case Strategy::kAggregateFinal:
      return SelectAggregate(pool, Metric::kFinal);
    case Strategy::kAggregateMean:
      return SelectAggregate(pool, Metric::kMean);
    case Strategy::kAggregateIncreaseRatio:
      return SelectAggregate(pool, Metric::kIncreaseRatio);
    case Strategy::kBestOfNFinal:
      return SelectBestOfN(pool, Metric::kFinal);
    case Strategy::kBestOfNMean:
      return SelectBestOfN(pool, Metric::kMean);
    case Strategy::kBestOfNIncreaseRatio:
      return SelectBestOfN(pool, Metric::kIncreaseRatio);
    case Strategy::kMajority:
      return SelectMajority(pool);
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown strategy");
}

double CoverRate(std::span<const AnswerPool> pools, std::span<const double> golds) {
  if (pools.size() != golds.size()) {
    throw Error(ErrorCode::kInvalidInput, "pools and golds differ in length");
  }
  if (pools.empty()) throw Error(ErrorCode::kInvalidInput, "cover rate of zero problems");
  std::size_t covered = 0;
  for (std::size_t i = 0; i < pools.size(); ++i) covered += pools[i].Contains(golds[i]);
  return static_cast<double>(covered) / static_cast<double>(pools.size());
}

}  // namespace probesearch
