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

#ifndef PROBESEARCH_PROBE_HPP_
#define PROBESEARCH_PROBE_HPP_

// Token-level linear probes. A probe reads one activation stream (layer,
// representation type) and produces a logit w.x + b; the logit is what the
// search engine ranks candidates by.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "probesearch/representation.hpp"

namespace probesearch {

// A whole response with its per-token representations and a binary label
// (true = chain-of-thought).
struct LabeledResponse {
  std::vector<TokenId> tokens;
  std::vector<RepresentationVector> reps;
  bool label = false;

  friend bool operator==(const LabeledResponse&, const LabeledResponse&) = default;
};

struct ProbeSample {
  std::vector<double> x;
  bool label = false;
};

struct ProbeDataset {
  std::vector<ProbeSample> samples;
  int layer = 0;
  RepType rep_type = RepType::kHiddenState;

  std::size_t dim() const { return samples.empty() ? 0 : samples.front().x.size(); }
  std::size_t CountPositive() const;
  std::size_t CountNegative() const { return samples.size() - CountPositive(); }
};

enum class ProbeKind { kLogisticRegression, kLinearSvm };

std::string_view ProbeKindName(ProbeKind kind);
ProbeKind ParseProbeKind(std::string_view name);

struct ProbeScore {
  double logit = 0.0;
  double prob = 0.5;
};

// Immutable after construction; safe to share across threads.
class LinearProbe {
 public:
  // Throws Error(kInvalidInput) on empty or non-finite parameters.
  LinearProbe(std::vector<double> weights, double bias, ProbeKind kind,
              int layer, RepType rep_type);

  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }
  ProbeKind kind() const { return kind_; }
  int layer() const { return layer_; }
  RepType rep_type() const { return rep_type_; }
  std::size_t dim() const { return weights_.size(); }

  // w.x + b. Throws Error(kInvalidInput) on dimension mismatch.
  double Logit(std::span<const double> x) const;
  ProbeScore Score(std::span<const double> x) const;
  ProbeScore Score(const RepresentationVector& x) const { return Score(x.values); }

  friend bool operator==(const LinearProbe&, const LinearProbe&) = default;

 private:
  std::vector<double> weights_;
  double bias_;
  ProbeKind kind_;
  int layer_;
  RepType rep_type_;
};

// Numerically stable logistic function.
double Sigmoid(double logit);

// Samples every stride-th token of each response, starting at index
// stride-1, so a response of length L contributes floor(L / stride) samples.
// Positives use cot_stride, negatives noncot_stride.
ProbeDataset BuildProbeDataset(std::span<const LabeledResponse> responses,
                               int cot_stride, int noncot_stride);

struct TrainOptions {
  int epochs = 100;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  // Fit on z-scored features, then fold the scaling back into the returned
  // weights so the probe still consumes raw activations.
  bool standardize = false;
  // L2 penalty applied per SGD step. Zero keeps the plain objectives.
  double l2 = 0.0;
};

// Per-sample SGD on mean binary cross-entropy, shuffled each epoch.
LinearProbe TrainLogisticRegression(const ProbeDataset& dataset,
                                    const TrainOptions& options = {});
// Per-sample SGD on mean hinge loss max(0, 1 - y(w.x + b)), y in {-1, +1}.
LinearProbe TrainLinearSvm(const ProbeDataset& dataset,
                           const TrainOptions& options = {});
LinearProbe TrainProbe(ProbeKind kind, const ProbeDataset& dataset,
                       const TrainOptions& options = {});

// Mean binary cross-entropy and its gradient with respect to (weights, bias);
// the gradient vector holds dim weight partials followed by the bias partial.
struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;
};
LossAndGradient LogisticLoss(const ProbeDataset& dataset,
                             std::span<const double> weights, double bias);

struct ProbeMetrics {
  double accuracy = 0.0;
  double f1 = 0.0;
  // Absent when the dataset holds a single class.
  std::optional<double> auc_roc;
};

// Mann-Whitney AUC: probability a random positive outscores a random
// negative, ties counting one half. Throws Error(kAucUndefined) if either
// side is empty.
double AucRoc(std::span<const double> positive_scores,
              std::span<const double> negative_scores);

// F1 from a confusion matrix. Zero predicted and zero actual positives
// yields 1.0; any other zero numerator yields 0.0.
double F1Score(std::size_t true_positive, std::size_t false_positive,
               std::size_t false_negative);

// A sample is predicted positive when its logit exceeds `threshold`.
// Throws Error(kInvalidInput) on an empty dataset. A single-class dataset
// reports accuracy and F1 with auc_roc left empty; use AucRoc directly to get
// the kAucUndefined error.
ProbeMetrics EvaluateProbe(const LinearProbe& probe, const ProbeDataset& dataset,
                           double threshold = 0.0);

// Layer indices by descending F1, lower layer first on ties.
std::vector<int> RankLayers(std::span<const std::pair<int, ProbeMetrics>> per_layer);

// JSON: {kind, layer, rep_type, weights, bias, dim}.
std::string ProbeToJson(const LinearProbe& probe);
LinearProbe ProbeFromJson(std::string_view text);
void SaveProbe(const LinearProbe& probe, const std::string& path);
LinearProbe LoadProbe(const std::string& path);

// JSONL, one {label, tokens, reps, layer, rep_type} object per line.
std::vector<LabeledResponse> ReadLabeledResponses(const std::string& path);
void WriteLabeledResponses(std::span<const LabeledResponse> responses,
                           const std::string& path);
LabeledResponse LabeledResponseFromJson(std::string_view line);
std::string LabeledResponseToJson(const LabeledResponse& response);

}  // namespace probesearch

#endif  // PROBESEARCH_PROBE_HPP_
