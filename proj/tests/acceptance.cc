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

// Prints one PASS/FAIL line per acceptance criterion and exits non-zero if
// any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "probesearch/btmodel.hpp"
#include "probesearch/harness.hpp"
#include "probesearch/probe.hpp"
#include "probesearch/search.hpp"
#include "probesearch/synthetic_backend.hpp"
#include "search_oracle.hpp"
#include "test_util.hpp"

namespace ps = probesearch;

namespace {

using Clock = std::chrono::steady_clock;

double Since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void Report(const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !pass;
}

std::string Fmt(const char* format, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

// Guarded run: an exception fails the criterion instead of aborting.
void Criterion(const std::string& name, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    Report(name, false, std::string("exception: ") + e.what());
  }
}

constexpr int kWorldSeeds = 5;
constexpr std::size_t kTrainProblems = 50;
constexpr std::size_t kEvalProblems = 200;

struct SeedRun {
  std::shared_ptr<const ps::SyntheticWorld> world;
  std::unique_ptr<ps::SyntheticBackend> backend;
  std::optional<ps::LinearProbe> probe;
  std::vector<ps::ProblemRecord> problems;
};

SeedRun PrepareSeed(std::uint64_t seed) {
  SeedRun run;
  ps::SyntheticWorldParams params;
  params.num_problems = static_cast<int>(kTrainProblems + kEvalProblems);
  run.world = std::make_shared<ps::SyntheticWorld>(ps::NewSyntheticWorld(params, seed));
  run.backend = std::make_unique<ps::SyntheticBackend>(run.world);
  const auto corpus = ps::GenerateLabeledCorpus(
      *run.backend, std::span(run.world->problems).first(kTrainProblems));
  run.probe = ps::TrainLogisticRegression(ps::BuildProbeDataset(corpus, 5, 1));
  for (std::size_t i = kTrainProblems; i < run.world->problems.size(); ++i) {
    run.problems.push_back({run.world->problems[i].question, run.world->problems[i].gold,
                            "synthetic"});
  }
  return run;
}

double Mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

void BtOracleSuite() {
  const auto start = Clock::now();
  const auto checks = ps::RunOracleSuite(0, 50);
  const double secs = Since(start);
  std::size_t ok = 0;
  bool sizes = true;
  for (const auto& c : checks) {
    ok += c.reward_ordering && c.logit_lower_bound;
    sizes = sizes && c.num_items >= 3 && c.num_items <= 20;
  }
  Report("bt-oracle-suite", checks.size() == 50 && ok == 50 && sizes && secs < 5.0,
         Fmt("%.0f/50 worlds hold both properties in %.3f s", static_cast<double>(ok), secs));
}

void ProbeRecovery() {
  const auto start = Clock::now();
  const double agreement = ps::ProbeRecoveryAgreement({}, 0);
  const double secs = Since(start);
  Report("probe-recovery", agreement >= 0.95 && secs < 30.0,
         Fmt("pairwise agreement %.4f on 50 held-out items in %.2f s", agreement, secs));
}

void Separability() {
  ps::SyntheticWorldParams params;
  params.num_problems = 100;
  const auto world = std::make_shared<ps::SyntheticWorld>(ps::NewSyntheticWorld(params, 0));
  const ps::SyntheticBackend backend(world);
  const double sep_ratio = world->sigma / params.separation;
  const auto all = std::span(world->problems);
  const auto train = ps::GenerateLabeledCorpus(backend, all.first(50));
  const auto held = ps::GenerateLabeledCorpus(backend, all.subspan(50));
  const auto probe = ps::TrainLogisticRegression(ps::BuildProbeDataset(train, 5, 1));
  const auto metrics = ps::EvaluateProbe(probe, ps::BuildProbeDataset(held, 5, 1));
  const double auc = metrics.auc_roc.value_or(0.0);
  Report("probe-separability", sep_ratio == 0.5 && auc >= 0.95 && metrics.f1 >= 0.90,
         Fmt("sigma/separation %.2f, held-out AUC %.4f, F1 %.4f", sep_ratio, auc, metrics.f1));
}

double DirectLoss(const ps::ProbeDataset& ds, const std::vector<double>& w, double b) {
  double total = 0;
  for (const auto& s : ds.samples) {
    double z = b;
    for (std::size_t i = 0; i < w.size(); ++i) z += w[i] * s.x[i];
    const double p = 1.0 / (1.0 + std::exp(-z));
    total -= s.label ? std::log(p) : std::log(1.0 - p);
  }
  return total / static_cast<double>(ds.samples.size());
}

void GradientCheck() {
  const auto ds = ps::testing::GaussianClusters(40, 6, 1.0, 7);
  std::mt19937_64 rng(2026);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  for (int point = 0; point < 10; ++point) {
    std::vector<double> w(6);
    for (auto& v : w) v = normal(rng);
    const double b = normal(rng);
    const auto lg = ps::LogisticLoss(ds, w, b);
    const double h = 1e-5;
    for (std::size_t d = 0; d <= w.size(); ++d) {
      auto wp = w, wm = w;
      double bp = b, bm = b;
      if (d < w.size()) {
        wp[d] += h;
        wm[d] -= h;
      } else {
        bp += h;
        bm -= h;
      }
      const double numeric = (DirectLoss(ds, wp, bp) - DirectLoss(ds, wm, bm)) / (2 * h);
      worst = std::max(worst, std::abs(numeric - lg.gradient[d]) /
                                  std::max({std::abs(numeric), std::abs(lg.gradient[d]), 1e-8}));
    }
  }
  Report("gradient-check", worst < 1e-5,
         Fmt("max relative error %.2e over 10 points", worst));
}

void SearchOracle() {
  int configs = 0, matched = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ps::SyntheticWorldParams params;
    params.num_problems = 1;
    const auto world = std::make_shared<ps::SyntheticWorld>(ps::NewSyntheticWorld(params, seed));
    const ps::SyntheticBackend backend(world);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> w(backend.info().dim);
    for (auto& v : w) v = normal(rng);
    const ps::LinearProbe probe(w, normal(rng), ps::ProbeKind::kLogisticRegression,
                                backend.info().layer, backend.info().rep_type);
    for (int k = 1; k <= 4; ++k) {
      for (int n = 1; n <= std::min(k, 2); ++n) {
        for (int m = 1; m <= 2; ++m) {
          ps::SearchConfig c;
          c.k = k;
          c.n = n;
          c.m = m;
          c.token_budgets.clear();
          for (int i = 0; i < m; ++i) c.token_budgets.push_back(1 + static_cast<int>(rng() % 30));
          ++configs;
          matched += ps::testing::MatchesOracle(world->problems[0].question, backend, probe, c);
        }
      }
    }
  }
  Report("search-oracle-equivalence", configs == 280 && matched == configs,
         Fmt("%.0f/%.0f configs match exhaustive enumeration", matched, configs));
}

// Guidance lift, selection ordering and the scaling sweep share the same
// five seeded worlds.
void SyntheticTrends() {
  const auto start = Clock::now();
  std::vector<double> guided, random, greedy, bon;
  bool cover_bound = true;
  std::vector<std::vector<double>> by_width(3);
  for (std::uint64_t seed = 0; seed < kWorldSeeds; ++seed) {
    const SeedRun run = PrepareSeed(seed);
    ps::ExperimentConfig cfg;
    cfg.seed = seed;
    const auto g = ps::RunExperiment(run.problems, *run.backend, *run.probe, cfg);
    ps::ExperimentConfig rnd = cfg;
    rnd.search.pruning = ps::PruningPolicy::kRandom;
    const auto r = ps::RunExperiment(run.problems, *run.backend, *run.probe, rnd);
    ps::ExperimentConfig one = cfg;
    one.search.k = one.search.n = one.search.m = 1;
    one.search.token_budgets = ps::SearchConfig::DefaultTokenBudgets(1);
    const auto d = ps::RunExperiment(run.problems, *run.backend, *run.probe, one);

    guided.push_back(g.Accuracy(ps::Strategy::kAggregateFinal));
    random.push_back(r.Accuracy(ps::Strategy::kAggregateFinal));
    greedy.push_back(d.Accuracy(ps::Strategy::kAggregateFinal));
    bon.push_back(g.Accuracy(ps::Strategy::kBestOfNFinal));
    for (const auto* rep : {&g, &r, &d}) {
      const double agg = rep->Accuracy(ps::Strategy::kAggregateFinal);
      cover_bound = cover_bound && rep->cover_rate >= agg && agg >= 0.0;
    }

    ps::ExperimentConfig sweep_cfg = cfg;
    sweep_cfg.strategies = {ps::Strategy::kAggregateFinal};
    const std::vector<int> widths{1, 2, 3};
    const std::vector<int> depths{3};
    const auto sweep =
        ps::Sweep(run.problems, *run.backend, *run.probe, sweep_cfg, widths, depths, 240);
    for (int n = 1; n <= 3; ++n) {
      by_width[static_cast<std::size_t>(n - 1)].push_back(
          sweep.Cell(n, 3).summary.front().accuracy);
    }
  }
  const double secs = Since(start);
  const double lift_random = 100 * (Mean(guided) - Mean(random));
  const double lift_greedy = 100 * (Mean(guided) - Mean(greedy));
  Report("guidance-lift", lift_random >= 15 && lift_greedy >= 20 && secs < 300,
         Fmt("guided %.3f, random %.3f, greedy %.3f (mean of 5 seeds), %.1f s", Mean(guided),
             Mean(random), Mean(greedy), secs));
  Report("selection-ordering", cover_bound && Mean(guided) >= Mean(bon),
         std::string(cover_bound ? "cover >= agg-final >= 0 on all runs" : "cover bound violated") +
             Fmt("; agg-final %.3f vs bon-final %.3f", Mean(guided), Mean(bon)));
  const double n1 = Mean(by_width[0]), n2 = Mean(by_width[1]), n3 = Mean(by_width[2]);
  Report("scaling-trend", n1 <= n2 && n2 <= n3,
         Fmt("mean agg-final accuracy at m=3, budget 240: n=1 %.3f, n=2 %.3f, n=3 %.3f", n1, n2,
             n3));
}

void Determinism() {
  const SeedRun run = PrepareSeed(11);
  const std::vector<ps::ProblemRecord> subset(run.problems.begin(), run.problems.begin() + 50);
  ps::ExperimentConfig cfg;
  cfg.seed = 11;
  cfg.search.pruning = ps::PruningPolicy::kRandom;
  const std::string a = ps::ReportToJson(ps::RunExperiment(subset, *run.backend, *run.probe, cfg));
  const std::string b = ps::ReportToJson(ps::RunExperiment(subset, *run.backend, *run.probe, cfg));
  cfg.search.pruning = ps::PruningPolicy::kGuided;
  const std::string c = ps::ReportToCsv(ps::RunExperiment(subset, *run.backend, *run.probe, cfg));
  const std::string d = ps::ReportToCsv(ps::RunExperiment(subset, *run.backend, *run.probe, cfg));
  Report("determinism", a == b && c == d,
         Fmt("JSON reports of %.0f and %.0f bytes, CSV reports of %.0f and %.0f bytes",
             static_cast<double>(a.size()), static_cast<double>(b.size()),
             static_cast<double>(c.size()), static_cast<double>(d.size())));
}

}  // namespace

int main() {
  Criterion("bt-oracle-suite", BtOracleSuite);
  Criterion("probe-recovery", ProbeRecovery);
  Criterion("probe-separability", Separability);
  Criterion("gradient-check", GradientCheck);
  Criterion("search-oracle-equivalence", SearchOracle);
  Criterion("synthetic-trends", SyntheticTrends);
  Criterion("determinism", Determinism);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
