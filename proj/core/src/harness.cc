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

#include "probesearch/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "io_util.hpp"
#include "probesearch/error.hpp"
#include "probesearch/parallel.hpp"

namespace probesearch {

using internal::Json;

std::vector<ProblemRecord> LoadProblems(const std::string& path) {
  const auto lines = internal::SplitLines(internal::ReadFile(path));
  std::vector<ProblemRecord> problems;
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (internal::IsBlank(lines[i])) continue;
    try {
      const Json j = internal::ParseJson(lines[i]);
      ProblemRecord r;
      r.question = j.at("question").get<std::string>();
      r.answer = j.at("answer").get<double>();
      if (j.contains("source")) r.source = j["source"].get<std::string>();
      if (r.question.empty() || !std::isfinite(r.answer)) throw Error(ErrorCode::kParseError, "");
      problems.push_back(std::move(r));
    } catch (const std::exception&) {
      bad.push_back(i + 1);
    }
  }
  if (!bad.empty()) {
    std::string msg = "malformed problem record(s) in '" + path + "' at line";
    msg += bad.size() > 1 ? "s" : "";
    for (std::size_t k = 0; k < bad.size(); ++k) msg += (k ? ", " : " ") + std::to_string(bad[k]);
    throw Error(ErrorCode::kParseError, msg);
  }
  return problems;
}

void WriteProblems(std::span<const ProblemRecord> problems, const std::string& path) {
  std::string text;
  for (const auto& p : problems) {
    Json j{{"question", p.question}, {"answer", p.answer}};
    if (!p.source.empty()) j["source"] = p.source;
    text += j.dump() + "\n";
  }
  internal::WriteFile(path, text);
}

void ExperimentConfig::Validate() const {
  search.Validate();
  if (strategies.empty()) throw Error(ErrorCode::kInvalidConfig, "no strategies requested");
  if (trigger_budget < 1) throw Error(ErrorCode::kInvalidConfig, "trigger_budget must be >= 1");
  if (parallelism < 1) throw Error(ErrorCode::kInvalidConfig, "parallelism must be >= 1");
}

namespace {

Json ConfigJson(const ExperimentConfig& c) {
  Json strategies = Json::array();
  for (Strategy s : c.strategies) strategies.push_back(StrategyName(s));
  return Json{
      {"k", c.search.k},
      {"n", c.search.n},
      {"m", c.search.m},
      {"token_budgets", c.search.token_budgets},
      {"completion_steps", c.search.completion_steps},
      {"completion_tokens_per_step", c.search.completion_tokens_per_step},
      {"pruning", PruningPolicyName(c.search.pruning)},
      {"search_parallelism", c.search.parallelism},
      {"strategies", strategies},
      {"trigger_budget", c.trigger_budget},
      {"seed", c.seed},
      {"parallelism", c.parallelism},
      {"record_timing", c.record_timing},
  };
}

ExperimentConfig ConfigFromJsonValue(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, "config must be a JSON object");
  static const char* const kKeys[] = {
      "k", "n", "m", "token_budgets", "total_token_budget", "completion_steps",
      "completion_tokens_per_step", "pruning", "search_parallelism", "strategies",
      "trigger_budget", "seed", "parallelism", "record_timing"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
      throw Error(ErrorCode::kInvalidConfig, "unknown config key '" + key + "'");
    }
  }
  ExperimentConfig c;
  try {
    auto& s = c.search;
    s.k = j.value("k", s.k);
    s.n = j.value("n", s.n);
    s.m = j.value("m", s.m);
    if (j.contains("token_budgets")) {
      s.token_budgets = j["token_budgets"].get<std::vector<int>>();
    } else if (j.contains("total_token_budget")) {
      s.token_budgets = SearchConfig::EvenTokenBudgets(j["total_token_budget"].get<int>(), s.m);
    } else {
      s.token_budgets = SearchConfig::DefaultTokenBudgets(s.m);
    }
    s.completion_steps = j.value("completion_steps", s.completion_steps);
    s.completion_tokens_per_step =
        j.value("completion_tokens_per_step", s.completion_tokens_per_step);
    if (j.contains("pruning")) s.pruning = ParsePruningPolicy(j["pruning"].get<std::string>());
    s.parallelism = j.value("search_parallelism", s.parallelism);
    if (j.contains("strategies")) {
      const Json& list = j["strategies"];
      if (list.is_string()) {
        c.strategies = ParseStrategyList(list.get<std::string>());
      } else {
        c.strategies.clear();
        for (const auto& name : list) c.strategies.push_back(ParseStrategy(name.get<std::string>()));
      }
    }
    c.trigger_budget = j.value("trigger_budget", c.trigger_budget);
    c.seed = j.value("seed", c.seed);
    c.parallelism = j.value("parallelism", c.parallelism);
    c.record_timing = j.value("record_timing", c.record_timing);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, e.what());
  }
  return c;
}

template <typename T>
Json Optional(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

template <typename T>
std::optional<T> OptionalFrom(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<T>();
}

Json SummaryJson(const std::vector<StrategySummary>& summary) {
  Json out = Json::array();
  for (const auto& s : summary) {
    out.push_back({{"strategy", StrategyName(s.strategy)},
                   {"correct", s.correct},
                   {"accuracy", s.accuracy}});
  }
  return out;
}

std::vector<StrategySummary> SummaryFromJson(const Json& j) {
  std::vector<StrategySummary> out;
  for (const auto& s : j) {
    out.push_back({ParseStrategy(s.at("strategy").get<std::string>()),
                   s.at("correct").get<std::size_t>(), s.at("accuracy").get<double>()});
  }
  return out;
}

Json OutcomeJson(const ProblemOutcome& o) {
  Json pool = Json::array();
  for (const auto& e : o.pool.entries()) {
    pool.push_back({{"answer", e.answer}, {"branch", e.branch}, {"scores", e.scores}});
  }
  Json selections = Json::array();
  for (const auto& s : o.selections) {
    selections.push_back({{"strategy", StrategyName(s.strategy)},
                          {"answer", Optional(s.answer)},
                          {"correct", s.correct}});
  }
  return Json{
      {"index", o.index},
      {"question", o.question},
      {"gold", o.gold},
      {"source", o.source},
      {"seed", o.seed},
      {"num_branches", o.num_branches},
      {"pool", pool},
      {"selections", selections},
      {"covered", o.covered},
      {"search_tokens", o.search_tokens},
      {"completion_tokens", o.completion_tokens},
      {"extraction_tokens", o.extraction_tokens},
      {"diagnostics", o.diagnostics},
      {"error", Optional(o.error)},
      {"seconds", Optional(o.seconds)},
  };
}

ProblemOutcome OutcomeFromJson(const Json& j) {
  ProblemOutcome o;
  o.index = j.at("index").get<std::size_t>();
  o.question = j.at("question").get<std::string>();
  o.gold = j.at("gold").get<double>();
  o.source = j.at("source").get<std::string>();
  o.seed = j.at("seed").get<std::uint64_t>();
  o.num_branches = j.at("num_branches").get<std::size_t>();
  for (const auto& e : j.at("pool")) {
    o.pool.Add({e.at("answer").get<double>(), e.at("branch").get<std::size_t>(),
                e.at("scores").get<std::vector<double>>()});
  }
  for (const auto& s : j.at("selections")) {
    o.selections.push_back({ParseStrategy(s.at("strategy").get<std::string>()),
                            OptionalFrom<double>(s.at("answer")), s.at("correct").get<bool>()});
  }
  o.covered = j.at("covered").get<bool>();
  o.search_tokens = j.at("search_tokens").get<std::size_t>();
  o.completion_tokens = j.at("completion_tokens").get<std::size_t>();
  o.extraction_tokens = j.at("extraction_tokens").get<std::size_t>();
  o.diagnostics = j.at("diagnostics").get<std::vector<std::string>>();
  o.error = OptionalFrom<std::string>(j.at("error"));
  o.seconds = OptionalFrom<double>(j.at("seconds"));
  return o;
}

ProblemOutcome RunProblem(std::size_t index, const ProblemRecord& problem,
                          const GenerationBackend& backend, const LinearProbe& probe,
                          const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  ProblemOutcome out;
  out.index = index;
  out.question = problem.question;
  out.gold = problem.answer;
  out.source = problem.source;
  out.seed = config.seed + index;
  try {
    SearchConfig search = config.search;
    search.seed = out.seed;
    const ReasoningTree tree = RunBranching(problem.question, backend, probe, search);
    out.search_tokens = tree.GeneratedTokens();
    CompletionResult completion = RunCompletion(tree, backend, probe, search);
    out.completion_tokens = completion.generated_tokens;
    out.diagnostics = std::move(completion.diagnostics);
    out.num_branches = completion.branches.size();
    for (std::size_t b = 0; b < completion.branches.size(); ++b) {
      const Branch& branch = completion.branches[b];
      try {
        const Extraction ex = ExtractAnswer(tree.prompt(), branch, backend, config.trigger_budget);
        out.extraction_tokens += ex.generated_tokens;
        if (ex.answer && std::isfinite(*ex.answer)) {
          out.pool.Add({*ex.answer, b, branch.scores});
        } else {
          out.diagnostics.push_back("branch " + std::to_string(b) + ": no numeral in '" +
                                    ex.continuation + "'");
        }
      } catch (const Error& e) {
        out.diagnostics.push_back("branch " + std::to_string(b) + ": " + e.what());
      }
    }
    out.covered = out.pool.Contains(problem.answer);
    for (Strategy s : config.strategies) {
      StrategyOutcome so{s, std::nullopt, false};
      if (!out.pool.empty()) {
        so.answer = Select(out.pool, s).answer;
        so.correct = AnswersMatch(*so.answer, problem.answer);
      }
      out.selections.push_back(so);
    }
  } catch (const std::exception& e) {
    out.error = e.what();
    out.selections.clear();
    for (Strategy s : config.strategies) out.selections.push_back({s, std::nullopt, false});
  }
  if (config.record_timing) {
    out.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return out;
}

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string FormatNumber(double v) { return Json(v).dump(); }

}  // namespace

std::string ExperimentConfigToJson(const ExperimentConfig& config) {
  return ConfigJson(config).dump(2);
}

ExperimentConfig ExperimentConfigFromJson(std::string_view text) {
  ExperimentConfig config = ConfigFromJsonValue(internal::ParseJson(text));
  config.Validate();
  return config;
}

double ExperimentReport::Accuracy(Strategy strategy) const {
  for (const auto& s : summary) {
    if (s.strategy == strategy) return s.accuracy;
  }
  throw Error(ErrorCode::kInvalidInput,
              "strategy '" + std::string(StrategyName(strategy)) + "' not in report");
}

void Summarize(ExperimentReport& report) {
  report.summary.clear();
  const double total = static_cast<double>(report.problems.size());
  for (Strategy s : report.config.strategies) {
    StrategySummary sum{s, 0, 0.0};
    for (const auto& p : report.problems) {
      for (const auto& sel : p.selections) sum.correct += sel.strategy == s && sel.correct;
    }
    sum.accuracy = total > 0 ? static_cast<double>(sum.correct) / total : 0.0;
    report.summary.push_back(sum);
  }
  std::size_t covered = 0;
  report.failed_problems = 0;
  report.generated_tokens = 0;
  for (const auto& p : report.problems) {
    covered += p.covered;
    report.failed_problems += p.error.has_value();
    report.generated_tokens += p.generated_tokens();
  }
  report.cover_rate = total > 0 ? static_cast<double>(covered) / total : 0.0;
}

ExperimentReport RunExperiment(std::span<const ProblemRecord> problems,
                               const GenerationBackend& backend, const LinearProbe& probe,
                               const ExperimentConfig& config) {
  config.Validate();
  CheckProbeMatchesBackend(probe, backend);
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.config = config;
  report.model_name = backend.info().model_name;
  report.problems.resize(problems.size());
  const int workers = backend.info().single_flight ? 1 : config.parallelism;
  ParallelFor(problems.size(), workers, [&](std::size_t i) {
    report.problems[i] = RunProblem(i, problems[i], backend, probe, config);
  });
  Summarize(report);
  if (config.record_timing) {
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return report;
}

ReportFormat ParseReportFormat(std::string_view name) {
  if (name == "json") return ReportFormat::kJson;
  if (name == "csv") return ReportFormat::kCsv;
  throw Error(ErrorCode::kInvalidConfig, "unknown report format '" + std::string(name) + "'");
}

std::string ReportToJson(const ExperimentReport& report) {
  Json problems = Json::array();
  for (const auto& p : report.problems) problems.push_back(OutcomeJson(p));
  Json j{
      {"config", ConfigJson(report.config)},
      {"model_name", report.model_name},
      {"summary", SummaryJson(report.summary)},
      {"cover_rate", report.cover_rate},
      {"failed_problems", report.failed_problems},
      {"generated_tokens", report.generated_tokens},
      {"wall_seconds", Optional(report.wall_seconds)},
      {"problems", problems},
  };
  return j.dump(2) + "\n";
}

ExperimentReport ReportFromJson(std::string_view text) {
  const Json j = internal::ParseJson(text);
  ExperimentReport r;
  try {
    r.config = ConfigFromJsonValue(j.at("config"));
    r.model_name = j.at("model_name").get<std::string>();
    r.summary = SummaryFromJson(j.at("summary"));
    r.cover_rate = j.at("cover_rate").get<double>();
    r.failed_problems = j.at("failed_problems").get<std::size_t>();
    r.generated_tokens = j.at("generated_tokens").get<std::size_t>();
    r.wall_seconds = OptionalFrom<double>(j.at("wall_seconds"));
    for (const auto& p : j.at("problems")) r.problems.push_back(OutcomeFromJson(p));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("malformed report: ") + e.what());
  }
  return r;
}

std::string ReportToCsv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "index,seed,question,gold,strategy,answer,correct,covered,branches,pool_size,"
         "generated_tokens,error\n";
  for (const auto& p : report.problems) {
    for (const auto& s : p.selections) {
      out << p.index << ',' << p.seed << ',' << CsvField(p.question) << ','
          << FormatNumber(p.gold) << ',' << StrategyName(s.strategy) << ','
          << (s.answer ? FormatNumber(*s.answer) : "") << ',' << (s.correct ? 1 : 0) << ','
          << (p.covered ? 1 : 0) << ',' << p.num_branches << ',' << p.pool.size() << ','
          << p.generated_tokens() << ',' << CsvField(p.error.value_or("")) << '\n';
    }
  }
  return out.str();
}

void WriteReport(const ExperimentReport& report, const std::string& path, ReportFormat format) {
  internal::WriteFile(path,
                      format == ReportFormat::kJson ? ReportToJson(report) : ReportToCsv(report));
}

ExperimentReport ReadReport(const std::string& path) {
  return ReportFromJson(internal::ReadFile(path));
}

const SweepCell& SweepResult::Cell(int n, int m) const {
  for (const auto& c : cells) {
    if (c.n == n && c.m == m) return c;
  }
  throw Error(ErrorCode::kInvalidInput,
              "no sweep cell for n=" + std::to_string(n) + " m=" + std::to_string(m));
}

SweepResult Sweep(std::span<const ProblemRecord> problems, const GenerationBackend& backend,
                  const LinearProbe& probe, const ExperimentConfig& base,
                  std::span<const int> widths, std::span<const int> depths,
                  int total_token_budget) {
  if (widths.empty() || depths.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "sweep needs at least one width and one depth");
  }
  if (total_token_budget < 1) throw Error(ErrorCode::kInvalidConfig, "budget must be >= 1");
  SweepResult result;
  result.widths.assign(widths.begin(), widths.end());
  result.depths.assign(depths.begin(), depths.end());
  result.total_token_budget = total_token_budget;
  for (int n : widths) {
    for (int m : depths) {
      ExperimentConfig cfg = base;
      cfg.search.n = n;
      cfg.search.m = m;
      cfg.search.token_budgets = SearchConfig::EvenTokenBudgets(total_token_budget, m);
      const ExperimentReport report = RunExperiment(problems, backend, probe, cfg);
      result.cells.push_back({n, m, cfg.search.token_budgets, report.summary, report.cover_rate,
                              report.generated_tokens});
    }
  }
  return result;
}

std::string SweepToJson(const SweepResult& sweep) {
  Json cells = Json::array();
  for (const auto& c : sweep.cells) {
    cells.push_back({{"n", c.n},
                     {"m", c.m},
                     {"token_budgets", c.token_budgets},
                     {"summary", SummaryJson(c.summary)},
                     {"cover_rate", c.cover_rate},
                     {"generated_tokens", c.generated_tokens}});
  }
  Json j{{"widths", sweep.widths},
         {"depths", sweep.depths},
         {"total_token_budget", sweep.total_token_budget},
         {"cells", cells}};
  return j.dump(2) + "\n";
}

std::string SweepToCsv(const SweepResult& sweep) {
  std::ostringstream out;
  out << "n,m,strategy,accuracy,cover_rate,generated_tokens\n";
  for (const auto& c : sweep.cells) {
    for (const auto& s : c.summary) {
      out << c.n << ',' << c.m << ',' << StrategyName(s.strategy) << ','
          << FormatNumber(s.accuracy) << ',' << FormatNumber(c.cover_rate) << ','
          << c.generated_tokens << '\n';
    }
  }
  return out.str();
}

std::vector<LayerAnalysisRow> AnalyzeSyntheticLayers(
    const std::shared_ptr<const SyntheticWorld>& world,
    std::span<const SyntheticProblem> train_problems,
    std::span<const SyntheticProblem> eval_problems, const LayerAnalysisOptions& options) {
  std::vector<int> layers = options.layers;
  if (layers.empty()) {
    for (int l = 0; l < world->params.num_layers; ++l) layers.push_back(l);
  }
  std::vector<LayerAnalysisRow> rows;
  for (RepType type : options.rep_types) {
    for (int layer : layers) {
      const SyntheticBackend backend(world, layer, type);
      const auto train_corpus = GenerateLabeledCorpus(backend, train_problems, options.corpus);
      const auto eval_corpus = GenerateLabeledCorpus(backend, eval_problems, options.corpus);
      const ProbeDataset train =
          BuildProbeDataset(train_corpus, options.cot_stride, options.noncot_stride);
      const ProbeDataset eval =
          BuildProbeDataset(eval_corpus, options.cot_stride, options.noncot_stride);
      for (ProbeKind kind : options.kinds) {
        const LinearProbe probe = TrainProbe(kind, train, options.train);
        rows.push_back({kind, type, layer, EvaluateProbe(probe, train), EvaluateProbe(probe, eval)});
      }
    }
  }
  return rows;
}

std::vector<int> RankAnalyzedLayers(std::span<const LayerAnalysisRow> rows, ProbeKind kind,
                                    RepType rep_type) {
  std::vector<std::pair<int, ProbeMetrics>> slice;
  for (const auto& r : rows) {
    if (r.kind == kind && r.rep_type == rep_type) slice.emplace_back(r.layer, r.held_out);
  }
  if (slice.empty()) throw Error(ErrorCode::kInvalidInput, "no rows for the requested slice");
  return RankLayers(slice);
}

}  // namespace probesearch
