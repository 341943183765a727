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

#ifndef PROBESEARCH_HARNESS_HPP_
#define PROBESEARCH_HARNESS_HPP_

// End-to-end experiment runner: search, extraction, selection, grading and
// report emission.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "probesearch/backend.hpp"
#include "probesearch/probe.hpp"
#include "probesearch/search.hpp"
#include "probesearch/select.hpp"
#include "probesearch/synthetic_backend.hpp"

namespace probesearch {

struct ProblemRecord {
  std::string question;
  double answer = 0.0;
  std::string source;

  friend bool operator==(const ProblemRecord&, const ProblemRecord&) = default;
};

// JSONL with {"question": str, "answer": number, "source"?: str} per line.
// Blank lines are skipped; malformed lines are collected into a single
// Error(kParseError) naming their line numbers.
std::vector<ProblemRecord> LoadProblems(const std::string& path);
void WriteProblems(std::span<const ProblemRecord> problems, const std::string& path);

struct ExperimentConfig {
  // search.seed is overwritten per problem with seed + problem index.
  SearchConfig search;
  std::vector<Strategy> strategies = AllStrategies();
  int trigger_budget = 16;
  std::uint64_t seed = 0;
  // Problems evaluated concurrently.
  int parallelism = 1;
  // Wall-clock fields make reports differ between runs; off by default.
  bool record_timing = false;

  void Validate() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

std::string ExperimentConfigToJson(const ExperimentConfig& config);
// Missing keys keep their defaults; the result is validated. Throws kParseError /
// kInvalidConfig.
ExperimentConfig ExperimentConfigFromJson(std::string_view text);

struct StrategyOutcome {
  Strategy strategy = Strategy::kAggregateFinal;
  std::optional<double> answer;  // empty when the pool was empty
  bool correct = false;

  friend bool operator==(const StrategyOutcome&, const StrategyOutcome&) = default;
};

struct ProblemOutcome {
  std::size_t index = 0;
  std::string question;
  double gold = 0.0;
  std::string source;
  std::uint64_t seed = 0;
  std::size_t num_branches = 0;
  AnswerPool pool;
  std::vector<StrategyOutcome> selections;  // config.strategies order
  bool covered = false;
  std::size_t search_tokens = 0;      // branching phase, pruned children included
  std::size_t completion_tokens = 0;
  std::size_t extraction_tokens = 0;
  std::vector<std::string> diagnostics;
  std::optional<std::string> error;  // set when the problem failed outright
  std::optional<double> seconds;

  std::size_t generated_tokens() const {
    return search_tokens + completion_tokens + extraction_tokens;
  }

  friend bool operator==(const ProblemOutcome&, const ProblemOutcome&) = default;
};

struct StrategySummary {
  Strategy strategy = Strategy::kAggregateFinal;
  std::size_t correct = 0;
  double accuracy = 0.0;

  friend bool operator==(const StrategySummary&, const StrategySummary&) = default;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::string model_name;
  std::vector<ProblemOutcome> problems;
  std::vector<StrategySummary> summary;
  double cover_rate = 0.0;
  std::size_t failed_problems = 0;
  std::size_t generated_tokens = 0;
  std::optional<double> wall_seconds;

  double Accuracy(Strategy strategy) const;

  friend bool operator==(const ExperimentReport&, const ExperimentReport&) = default;
};

// Recomputes summary, cover rate and totals from the per-problem rows.
void Summarize(ExperimentReport& report);

// Per-problem failures are recorded in the outcome; the run continues.
ExperimentReport RunExperiment(std::span<const ProblemRecord> problems,
                               const GenerationBackend& backend, const LinearProbe& probe,
                               const ExperimentConfig& config);

enum class ReportFormat { kJson, kCsv };
ReportFormat ParseReportFormat(std::string_view name);

std::string ReportToJson(const ExperimentReport& report);
ExperimentReport ReportFromJson(std::string_view text);
// One row per (problem, strategy).
std::string ReportToCsv(const ExperimentReport& report);
// Throws Error(kIoError) when the path cannot be written.
void WriteReport(const ExperimentReport& report, const std::string& path, ReportFormat format);
ExperimentReport ReadReport(const std::string& path);

struct SweepCell {
  int n = 0;
  int m = 0;
  std::vector<int> token_budgets;
  std::vector<StrategySummary> summary;
  double cover_rate = 0.0;
  std::size_t generated_tokens = 0;
};

struct SweepResult {
  std::vector<int> widths;
  std::vector<int> depths;
  int total_token_budget = 0;
  std::vector<SweepCell> cells;  // widths-major order

  const SweepCell& Cell(int n, int m) const;
};

// One experiment per (n, m) with floor(total / m) tokens per branching round.
SweepResult Sweep(std::span<const ProblemRecord> problems, const GenerationBackend& backend,
                  const LinearProbe& probe, const ExperimentConfig& base,
                  std::span<const int> widths, std::span<const int> depths,
                  int total_token_budget);

std::string SweepToJson(const SweepResult& sweep);
std::string SweepToCsv(const SweepResult& sweep);

// Classifier / stream comparison on the synthetic world: for every
// (kind, rep_type, layer) a probe is trained on a corpus from
// `train_problems` and scored on a corpus from `eval_problems`.
struct LayerAnalysisOptions {
  std::vector<ProbeKind> kinds{ProbeKind::kLogisticRegression, ProbeKind::kLinearSvm};
  std::vector<RepType> rep_types{RepType::kHiddenState, RepType::kAttentionActivation,
                                 RepType::kMlpActivation};
  std::vector<int> layers;  // empty means every layer of the world
  int cot_stride = 5;
  int noncot_stride = 1;
  TrainOptions train;
  CorpusOptions corpus;
};

struct LayerAnalysisRow {
  ProbeKind kind = ProbeKind::kLogisticRegression;
  RepType rep_type = RepType::kHiddenState;
  int layer = 0;
  ProbeMetrics train;
  ProbeMetrics held_out;
};

std::vector<LayerAnalysisRow> AnalyzeSyntheticLayers(
    const std::shared_ptr<const SyntheticWorld>& world,
    std::span<const SyntheticProblem> train_problems,
    std::span<const SyntheticProblem> eval_problems, const LayerAnalysisOptions& options);

// Layers of one (kind, rep_type) slice ranked by held-out F1.
std::vector<int> RankAnalyzedLayers(std::span<const LayerAnalysisRow> rows, ProbeKind kind,
                                    RepType rep_type);

}  // namespace probesearch

#endif  // PROBESEARCH_HARNESS_HPP_
