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

// probesearch command-line driver.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "probesearch/btmodel.hpp"
#include "probesearch/error.hpp"
#include "probesearch/harness.hpp"
#include "probesearch/probe.hpp"
#include "probesearch/remote_backend.hpp"
#include "probesearch/synthetic_backend.hpp"

namespace ps = probesearch;
using Json = nlohmann::json;

namespace {

// Backend selection shared by every subcommand that talks to a model.
struct BackendFlags {
  std::vector<std::string> backend{"synthetic"};
  std::uint64_t world_seed = 0;
  int world_problems = 200;
  std::optional<int> layer;
  std::string rep_type = "hidden_state";

  void Register(CLI::App& app) {
    app.add_option("--backend", backend,
                   "'synthetic' or 'remote <url>' (remote falls back to $" +
                       std::string(ps::kBackendUrlEnv) + ")")
        ->expected(1, 2);
    app.add_option("--world-seed", world_seed, "synthetic world seed");
    app.add_option("--world-problems", world_problems, "synthetic world size");
    app.add_option("--layer", layer, "representation layer (default: backend's peak)");
    app.add_option("--rep-type", rep_type,
                   "hidden_state | attention_activation | mlp_activation");
  }

  std::shared_ptr<const ps::SyntheticWorld> World() const {
    ps::SyntheticWorldParams params;
    params.num_problems = world_problems;
    return std::make_shared<ps::SyntheticWorld>(ps::NewSyntheticWorld(params, world_seed));
  }

  std::unique_ptr<ps::GenerationBackend> Make() const {
    const ps::RepType type = ps::ParseRepType(rep_type);
    if (backend.at(0) == "synthetic") {
      auto world = World();
      return std::make_unique<ps::SyntheticBackend>(
          world, layer.value_or(world->params.peak_layer), type);
    }
    if (backend.at(0) == "remote") {
      std::string url = backend.size() > 1 ? backend[1] : "";
      if (url.empty()) {
        if (const char* env = std::getenv(ps::kBackendUrlEnv)) url = env;
      }
      if (url.empty()) {
        throw ps::Error(ps::ErrorCode::kInvalidConfig,
                        "remote backend needs a URL or $" + std::string(ps::kBackendUrlEnv));
      }
      ps::RemoteBackendOptions options;
      options.url = url;
      options.layer = layer.value_or(0);
      options.rep_type = type;
      return std::make_unique<ps::RemoteBackend>(options);
    }
    throw ps::Error(ps::ErrorCode::kInvalidConfig, "unknown backend '" + backend[0] + "'");
  }
};

// Flags that override fields of the experiment config file.
struct ExperimentFlags {
  std::string config_path;
  std::optional<int> width, depth, k, budget, parallelism, trigger_budget;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> strategies, pruning;

  void Register(CLI::App& app, bool with_shape) {
    app.add_option("--config", config_path, "experiment config JSON");
    if (with_shape) {
      app.add_option("--width", width, "beam width n");
      app.add_option("--depth", depth, "tree depth m");
    }
    app.add_option("--k", k, "top-k candidates per expansion");
    app.add_option("--budget", budget, "total branching token budget, split evenly over m");
    app.add_option("--strategies", strategies, "comma-separated strategies or 'all'");
    app.add_option("--seed", seed, "top-level seed");
    app.add_option("--pruning", pruning, "guided | random");
    app.add_option("--parallelism", parallelism, "problems evaluated concurrently");
    app.add_option("--trigger-budget", trigger_budget, "tokens generated after the trigger");
  }

  ps::ExperimentConfig Build() const {
    ps::ExperimentConfig c;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ps::Error(ps::ErrorCode::kIoError, "cannot read '" + config_path + "'");
      std::stringstream buf;
      buf << in.rdbuf();
      c = ps::ExperimentConfigFromJson(buf.str());
    }
    if (k) c.search.k = *k;
    if (width) c.search.n = *width;
    if (depth && *depth != c.search.m) {
      c.search.m = *depth;
      c.search.token_budgets = ps::SearchConfig::DefaultTokenBudgets(*depth);
    }
    if (budget) c.search.token_budgets = ps::SearchConfig::EvenTokenBudgets(*budget, c.search.m);
    if (strategies) c.strategies = ps::ParseStrategyList(*strategies);
    if (seed) c.seed = *seed;
    if (pruning) c.search.pruning = ps::ParsePruningPolicy(*pruning);
    if (parallelism) c.parallelism = *parallelism;
    if (trigger_budget) c.trigger_budget = *trigger_budget;
    return c;
  }
};

std::vector<int> ParseIntList(const std::string& text) {
  std::vector<int> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ps::Error(ps::ErrorCode::kInvalidConfig, "bad integer list '" + text + "'");
    }
  }
  if (out.empty()) throw ps::Error(ps::ErrorCode::kInvalidConfig, "empty integer list");
  return out;
}

void Emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) {
    throw ps::Error(ps::ErrorCode::kIoError, "cannot write '" + out_path + "'");
  }
}

Json MetricsJson(const ps::ProbeMetrics& m) {
  return {{"accuracy", m.accuracy},
          {"f1", m.f1},
          {"auc_roc", m.auc_roc ? Json(*m.auc_roc) : Json(nullptr)}};
}

void PrintSummary(const ps::ExperimentReport& r) {
  std::cerr << "problems " << r.problems.size() << "  failed " << r.failed_problems
            << "  cover " << r.cover_rate << "  tokens " << r.generated_tokens << "\n";
  for (const auto& s : r.summary) {
    std::cerr << "  " << ps::StrategyName(s.strategy) << "  " << s.accuracy << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probe-guided reasoning search"};
  app.require_subcommand(1);

  // gen-problems
  auto* gen_problems = app.add_subcommand("gen-problems", "write synthetic problems as JSONL");
  BackendFlags gp_backend;
  std::string gp_out;
  int gp_offset = 0;
  int gp_count = -1;
  gen_problems->add_option("--world-seed", gp_backend.world_seed, "synthetic world seed");
  gen_problems->add_option("--world-problems", gp_backend.world_problems, "synthetic world size");
  gen_problems->add_option("--offset", gp_offset, "first problem index");
  gen_problems->add_option("--count", gp_count, "number of problems (default: all)");
  gen_problems->add_option("--out", gp_out, "output JSONL")->required();

  // gen-corpus
  auto* gen_corpus =
      app.add_subcommand("gen-corpus", "label top-k responses of synthetic problems");
  BackendFlags gc_backend;
  std::string gc_out;
  int gc_offset = 0, gc_count = 50, gc_k = 10;
  gc_backend.Register(*gen_corpus);
  gen_corpus->add_option("--offset", gc_offset, "first problem index");
  gen_corpus->add_option("--count", gc_count, "number of problems");
  gen_corpus->add_option("--k", gc_k, "responses per problem");
  gen_corpus->add_option("--out", gc_out, "output JSONL")->required();

  // probe-train
  auto* probe_train = app.add_subcommand("probe-train", "train a linear probe");
  std::string pt_dataset, pt_out, pt_kind = "lr";
  int pt_cot_stride = 5, pt_noncot_stride = 1;
  ps::TrainOptions pt_options;
  probe_train->add_option("--dataset", pt_dataset, "labeled responses JSONL")->required();
  probe_train->add_option("--kind", pt_kind, "lr | svm");
  probe_train->add_option("--epochs", pt_options.epochs);
  probe_train->add_option("--lr", pt_options.learning_rate, "learning rate");
  probe_train->add_option("--seed", pt_options.seed);
  probe_train->add_option("--l2", pt_options.l2);
  probe_train->add_flag("--standardize", pt_options.standardize);
  probe_train->add_option("--cot-stride", pt_cot_stride);
  probe_train->add_option("--noncot-stride", pt_noncot_stride);
  probe_train->add_option("--out", pt_out, "probe JSON")->required();

  // probe-eval
  auto* probe_eval = app.add_subcommand(
      "probe-eval", "evaluate a probe, or compare layers/streams/classifiers (--layers)");
  std::string pe_probe, pe_dataset, pe_out;
  int pe_cot_stride = 5, pe_noncot_stride = 1;
  double pe_threshold = 0.0;
  bool pe_layers = false;
  int pe_train_count = 50, pe_eval_count = 50;
  BackendFlags pe_backend;
  probe_eval->add_option("--probe", pe_probe, "probe JSON");
  probe_eval->add_option("--dataset", pe_dataset, "labeled responses JSONL");
  probe_eval->add_option("--threshold", pe_threshold, "logit threshold");
  probe_eval->add_option("--cot-stride", pe_cot_stride);
  probe_eval->add_option("--noncot-stride", pe_noncot_stride);
  probe_eval->add_flag("--layers", pe_layers, "synthetic layer analysis");
  probe_eval->add_option("--world-seed", pe_backend.world_seed);
  probe_eval->add_option("--train-problems", pe_train_count);
  probe_eval->add_option("--eval-problems", pe_eval_count);
  probe_eval->add_option("--out", pe_out, "output JSON (default stdout)");

  // search
  auto* search = app.add_subcommand("search", "run probe-guided search over a problem set");
  BackendFlags s_backend;
  ExperimentFlags s_flags;
  std::string s_probe, s_dataset, s_out, s_format = "json";
  bool s_timing = false;
  s_backend.Register(*search);
  s_flags.Register(*search, true);
  search->add_option("--probe", s_probe, "probe JSON")->required();
  search->add_option("--dataset", s_dataset, "problems JSONL")->required();
  search->add_option("--out", s_out, "report path (default stdout)");
  search->add_option("--format", s_format, "json | csv");
  search->add_flag("--timing", s_timing, "record wall-clock times in the report");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "width x depth accuracy surface");
  BackendFlags w_backend;
  ExperimentFlags w_flags;
  std::string w_probe, w_dataset, w_out, w_format = "json", w_widths = "1,2,3",
                                          w_depths = "1,2,3";
  int w_total = 240;
  w_backend.Register(*sweep);
  w_flags.Register(*sweep, false);
  sweep->add_option("--probe", w_probe, "probe JSON")->required();
  sweep->add_option("--dataset", w_dataset, "problems JSONL")->required();
  sweep->add_option("--widths", w_widths, "comma-separated beam widths");
  sweep->add_option("--depths", w_depths, "comma-separated depths");
  sweep->add_option("--total-budget", w_total, "branching tokens split evenly over m");
  sweep->add_option("--out", w_out, "output path (default stdout)");
  sweep->add_option("--format", w_format, "json | csv");

  // bt-verify
  auto* bt_verify = app.add_subcommand("bt-verify", "run the Bradley-Terry property oracles");
  std::uint64_t bt_first = 0;
  std::size_t bt_count = 50;
  bool bt_recovery = false;
  bt_verify->add_option("--first-seed", bt_first);
  bt_verify->add_option("--count", bt_count, "number of random worlds");
  bt_verify->add_flag("--recovery", bt_recovery, "also check probe reward recovery");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen_problems) {
      const auto world = gp_backend.World();
      const int total = static_cast<int>(world->problems.size());
      if (gp_offset < 0 || gp_offset > total) {
        throw ps::Error(ps::ErrorCode::kInvalidConfig, "offset outside the world");
      }
      const int end = gp_count < 0 ? total : std::min(total, gp_offset + gp_count);
      std::vector<ps::ProblemRecord> records;
      for (int i = gp_offset; i < end; ++i) {
        const auto& p = world->problems[static_cast<std::size_t>(i)];
        records.push_back({p.question, p.gold, "synthetic"});
      }
      ps::WriteProblems(records, gp_out);
      std::cerr << "wrote " << records.size() << " problems to " << gp_out << "\n";
    } else if (*gen_corpus) {
      if (gc_backend.backend.at(0) != "synthetic") {
        throw ps::Error(ps::ErrorCode::kInvalidConfig, "gen-corpus needs the synthetic backend");
      }
      const auto world = gc_backend.World();
      const ps::SyntheticBackend backend(
          world, gc_backend.layer.value_or(world->params.peak_layer),
          ps::ParseRepType(gc_backend.rep_type));
      const auto first = static_cast<std::size_t>(std::max(0, gc_offset));
      const auto last = std::min(world->problems.size(), first + static_cast<std::size_t>(
                                                                      std::max(0, gc_count)));
      if (first >= last) throw ps::Error(ps::ErrorCode::kInvalidConfig, "no problems selected");
      ps::CorpusOptions options;
      options.k = gc_k;
      const auto corpus = ps::GenerateLabeledCorpus(
          backend, std::span(world->problems).subspan(first, last - first), options);
      ps::WriteLabeledResponses(corpus, gc_out);
      std::cerr << "wrote " << corpus.size() << " responses to " << gc_out << "\n";
    } else if (*probe_train) {
      const auto responses = ps::ReadLabeledResponses(pt_dataset);
      const auto dataset = ps::BuildProbeDataset(responses, pt_cot_stride, pt_noncot_stride);
      const auto probe = ps::TrainProbe(ps::ParseProbeKind(pt_kind), dataset, pt_options);
      ps::SaveProbe(probe, pt_out);
      const auto m = ps::EvaluateProbe(probe, dataset);
      std::cerr << "trained " << ps::ProbeKindName(probe.kind()) << " on " << dataset.samples.size()
                << " samples; train accuracy " << m.accuracy << " f1 " << m.f1 << "\n";
    } else if (*probe_eval) {
      Json out;
      if (pe_layers) {
        const auto world = pe_backend.World();
        const auto& problems = world->problems;
        const auto train_n = std::min(problems.size(), static_cast<std::size_t>(pe_train_count));
        const auto eval_n =
            std::min(problems.size() - train_n, static_cast<std::size_t>(pe_eval_count));
        ps::LayerAnalysisOptions options;
        options.cot_stride = pe_cot_stride;
        options.noncot_stride = pe_noncot_stride;
        const auto rows = ps::AnalyzeSyntheticLayers(
            world, std::span(problems).first(train_n),
            std::span(problems).subspan(train_n, eval_n), options);
        Json rows_json = Json::array();
        for (const auto& r : rows) {
          rows_json.push_back({{"kind", ps::ProbeKindName(r.kind)},
                               {"rep_type", ps::RepTypeName(r.rep_type)},
                               {"layer", r.layer},
                               {"train", MetricsJson(r.train)},
                               {"held_out", MetricsJson(r.held_out)}});
        }
        Json ranking = Json::object();
        for (auto kind : options.kinds) {
          for (auto type : options.rep_types) {
            ranking[std::string(ps::ProbeKindName(kind)) + "/" +
                    std::string(ps::RepTypeName(type))] =
                ps::RankAnalyzedLayers(rows, kind, type);
          }
        }
        out = {{"rows", rows_json}, {"layer_ranking", ranking}};
      } else {
        if (pe_probe.empty() || pe_dataset.empty()) {
          throw ps::Error(ps::ErrorCode::kInvalidConfig, "--probe and --dataset are required");
        }
        const auto probe = ps::LoadProbe(pe_probe);
        const auto responses = ps::ReadLabeledResponses(pe_dataset);
        const auto dataset = ps::BuildProbeDataset(responses, pe_cot_stride, pe_noncot_stride);
        out = MetricsJson(ps::EvaluateProbe(probe, dataset, pe_threshold));
        out["samples"] = dataset.samples.size();
      }
      Emit(out.dump(2) + "\n", pe_out);
    } else if (*search) {
      auto config = s_flags.Build();
      config.record_timing = config.record_timing || s_timing;
      const auto backend = s_backend.Make();
      const auto probe = ps::LoadProbe(s_probe);
      const auto problems = ps::LoadProblems(s_dataset);
      const auto report = ps::RunExperiment(problems, *backend, probe, config);
      const auto format = ps::ParseReportFormat(s_format);
      if (s_out.empty()) {
        std::cout << (format == ps::ReportFormat::kJson ? ps::ReportToJson(report)
                                                        : ps::ReportToCsv(report));
      } else {
        ps::WriteReport(report, s_out, format);
      }
      PrintSummary(report);
    } else if (*sweep) {
      const auto config = w_flags.Build();
      const auto backend = w_backend.Make();
      const auto probe = ps::LoadProbe(w_probe);
      const auto problems = ps::LoadProblems(w_dataset);
      const auto widths = ParseIntList(w_widths);
      const auto depths = ParseIntList(w_depths);
      const auto result =
          ps::Sweep(problems, *backend, probe, config, widths, depths, w_total);
      const auto format = ps::ParseReportFormat(w_format);
      Emit(format == ps::ReportFormat::kJson ? ps::SweepToJson(result) : ps::SweepToCsv(result),
           w_out);
    } else if (*bt_verify) {
      bool ok = true;
      for (const auto& c : ps::RunOracleSuite(bt_first, bt_count)) {
        const bool pass = c.reward_ordering && c.logit_lower_bound;
        ok = ok && pass;
        std::cout << (pass ? "PASS" : "FAIL") << " seed=" << c.seed << " items=" << c.num_items
                  << " reward_ordering=" << c.reward_ordering
                  << " logit_lower_bound=" << c.logit_lower_bound << "\n";
      }
      if (bt_recovery) {
        const double agreement = ps::ProbeRecoveryAgreement({}, bt_first);
        const bool pass = agreement >= 0.95;
        ok = ok && pass;
        std::cout << (pass ? "PASS" : "FAIL") << " probe_recovery agreement=" << agreement
                  << "\n";
      }
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
