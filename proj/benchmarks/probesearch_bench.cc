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

#include <benchmark/benchmark.h>

#include <memory>
#include <random>
#include <vector>

#include "probesearch/probe.hpp"
#include "probesearch/search.hpp"
#include "probesearch/select.hpp"
#include "probesearch/synthetic_backend.hpp"

namespace ps = probesearch;

namespace {

struct World {
  std::shared_ptr<const ps::SyntheticWorld> world;
  std::unique_ptr<ps::SyntheticBackend> backend;
  std::unique_ptr<ps::LinearProbe> probe;

  World() {
    ps::SyntheticWorldParams params;
    params.num_problems = 20;
    world = std::make_shared<ps::SyntheticWorld>(ps::NewSyntheticWorld(params, 1));
    backend = std::make_unique<ps::SyntheticBackend>(world);
    const auto corpus =
        ps::GenerateLabeledCorpus(*backend, std::span(world->problems).first(10));
    probe = std::make_unique<ps::LinearProbe>(
        ps::TrainLogisticRegression(ps::BuildProbeDataset(corpus, 5, 1)));
  }
};

const World& SharedWorld() {
  static const World w;
  return w;
}

ps::ProbeDataset Clusters(std::size_t n, std::size_t dim) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  ps::ProbeDataset ds;
  for (std::size_t i = 0; i < n; ++i) {
    ps::ProbeSample s{std::vector<double>(dim), i % 2 == 0};
    for (auto& v : s.x) v = normal(rng);
    s.x[0] += s.label ? 1.0 : -1.0;
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

void BM_ExpandNode(benchmark::State& state) {
  const World& w = SharedWorld();
  const auto prompt = w.backend->Tokenize(ps::FormatPrompt(w.world->problems[12].question));
  for (auto _ : state) {
    auto kids = ps::ExpandNode(prompt, *w.backend, *w.probe, static_cast<int>(state.range(0)), 20);
    benchmark::DoNotOptimize(kids);
  }
}
BENCHMARK(BM_ExpandNode)->Arg(3)->Arg(10);

void BM_RunBranching(benchmark::State& state) {
  const World& w = SharedWorld();
  ps::SearchConfig config;
  for (auto _ : state) {
    auto tree = ps::RunBranching(w.world->problems[15].question, *w.backend, *w.probe, config);
    benchmark::DoNotOptimize(tree);
  }
}
BENCHMARK(BM_RunBranching);

void BM_SelectAggregate(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  ps::AnswerPool pool;
  for (std::size_t i = 0; i < static_cast<std::size_t>(state.range(0)); ++i) {
    pool.Add({static_cast<double>(rng() % 8), i, {normal(rng), normal(rng), normal(rng)}});
  }
  for (auto _ : state) {
    auto result = ps::SelectAggregate(pool, ps::Metric::kFinal);
    benchmark::DoNotOptimize(result);
  }
}
BENCHMARK(BM_SelectAggregate)->Arg(9)->Arg(64);

void BM_TrainLogisticRegression(benchmark::State& state) {
  const auto ds = Clusters(static_cast<std::size_t>(state.range(0)), 16);
  ps::TrainOptions options;
  options.epochs = 10;
  for (auto _ : state) {
    auto probe = ps::TrainLogisticRegression(ds, options);
    benchmark::DoNotOptimize(probe);
  }
}
BENCHMARK(BM_TrainLogisticRegression)->Arg(1000)->Arg(10000);

void BM_AucRoc(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  std::vector<double> pos(static_cast<std::size_t>(state.range(0)));
  std::vector<double> neg(pos.size());
  for (auto& v : pos) v = normal(rng) + 1.0;
  for (auto& v : neg) v = normal(rng);
  for (auto _ : state) benchmark::DoNotOptimize(ps::AucRoc(pos, neg));
}
BENCHMARK(BM_AucRoc)->Arg(1000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
