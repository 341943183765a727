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

#ifndef PROBESEARCH_TESTS_TEST_UTIL_HPP_
#define PROBESEARCH_TESTS_TEST_UTIL_HPP_

#include <unistd.h>

#include <cstdio>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "probesearch/error.hpp"
#include "probesearch/probe.hpp"
#include "probesearch/synthetic_backend.hpp"

namespace probesearch::testing {

// Runs `fn` and returns the code of the Error it throws, or nullopt.
template <typename Fn>
std::optional<ErrorCode> ThrownCode(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

// Two isotropic Gaussian clusters at +/- offset * e_0.
inline ProbeDataset GaussianClusters(std::size_t per_class, std::size_t dim, double offset,
                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ProbeDataset ds;
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    ProbeSample s;
    s.label = i % 2 == 0;
    s.x.resize(dim);
    for (auto& v : s.x) v = normal(rng);
    s.x[0] += s.label ? offset : -offset;
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

// Fresh temporary path that is removed when the object dies.
class TempPath {
 public:
  explicit TempPath(const std::string& name) {
    static int counter = 0;
    path_ = (std::filesystem::temp_directory_path() /
             ("probesearch_test_" + std::to_string(::getpid()) + "_" +
              std::to_string(counter++) + "_" + name))
                .string();
  }
  ~TempPath() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  const std::string& str() const { return path_; }

 private:
  std::string path_;
};

// Forwards to another backend; hooks let tests inject failures or observe
// concurrency.
class DelegatingBackend : public GenerationBackend {
 public:
  explicit DelegatingBackend(const GenerationBackend& inner) : inner_(inner), info_(inner.info()) {}

  BackendInfo& mutable_info() { return info_; }
  const BackendInfo& info() const override { return info_; }

  // Called before every generation call with the prefix; may throw.
  std::function<void(std::span<const TokenId>)> before_generate;
  std::function<void(std::span<const TokenId>)> before_greedy;

  std::vector<TokenId> TopKFirstTokens(std::span<const TokenId> prefix, int k) const override {
    return inner_.TopKFirstTokens(prefix, k);
  }
  GeneratedSegment GreedyContinue(std::span<const TokenId> prefix,
                                  int max_tokens) const override {
    Enter guard(*this);
    if (before_generate) before_generate(prefix);
    if (before_greedy) before_greedy(prefix);
    return inner_.GreedyContinue(prefix, max_tokens);
  }
  GeneratedSegment ForcedContinue(std::span<const TokenId> prefix, TokenId first,
                                  int max_tokens) const override {
    Enter guard(*this);
    if (before_generate) before_generate(prefix);
    return inner_.ForcedContinue(prefix, first, max_tokens);
  }
  std::vector<TokenId> Tokenize(std::string_view text) const override {
    return inner_.Tokenize(text);
  }
  std::vector<TextRepresentations> Representations(
      std::span<const std::string> texts) const override {
    return inner_.Representations(texts);
  }

  int max_in_flight() const { return max_in_flight_; }
  int calls() const { return calls_; }

 private:
  struct Enter {
    explicit Enter(const DelegatingBackend& b) : b(b) {
      const int now = ++b.in_flight_;
      ++b.calls_;
      int seen = b.max_in_flight_;
      while (now > seen && !b.max_in_flight_.compare_exchange_weak(seen, now)) {
      }
      // Widen the window so overlapping calls are observable.
      std::this_thread::sleep_for(std::chrono::microseconds(200));
    }
    ~Enter() { --b.in_flight_; }
    const DelegatingBackend& b;
  };

  const GenerationBackend& inner_;
  BackendInfo info_;
  mutable std::atomic<int> in_flight_{0};
  mutable std::atomic<int> max_in_flight_{0};
  mutable std::atomic<int> calls_{0};
};

// A synthetic world plus a logistic probe trained on its first
// `train_problems` problems, served from the peak hidden-state stream.
struct SyntheticFixture {
  std::shared_ptr<const SyntheticWorld> world;
  std::unique_ptr<SyntheticBackend> backend;
  std::optional<LinearProbe> probe;

  SyntheticFixture(int num_problems, std::uint64_t seed, int train_problems,
                   SyntheticWorldParams params = {}) {
    params.num_problems = num_problems;
    world = std::make_shared<SyntheticWorld>(NewSyntheticWorld(params, seed));
    backend = std::make_unique<SyntheticBackend>(world);
    const auto corpus = GenerateLabeledCorpus(
        *backend, std::span(world->problems).first(static_cast<std::size_t>(train_problems)));
    probe = TrainLogisticRegression(BuildProbeDataset(corpus, 5, 1));
  }
};

}  // namespace probesearch::testing

#endif  // PROBESEARCH_TESTS_TEST_UTIL_HPP_
