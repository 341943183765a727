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

#include "probesearch/probe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "probesearch/error.hpp"

namespace probesearch {
namespace {

bool AllFinite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double Dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

void ValidateTrainingSet(const ProbeDataset& dataset, const TrainOptions& options) {
  if (dataset.samples.empty()) {
    throw Error(ErrorCode::kDegenerateDataset, "training dataset is empty");
  }
  const std::size_t positives = dataset.CountPositive();
  if (positives == 0 || positives == dataset.samples.size()) {
    throw Error(ErrorCode::kDegenerateDataset,
                "training dataset needs samples of both labels");
  }
  const std::size_t dim = dataset.dim();
  if (dim == 0) throw Error(ErrorCode::kInvalidInput, "zero-dimensional samples");
  for (const auto& s : dataset.samples) {
    if (s.x.size() != dim) {
      throw Error(ErrorCode::kInvalidInput, "samples have inconsistent dimensions");
    }
    if (!AllFinite(s.x)) throw Error(ErrorCode::kInvalidInput, "non-finite sample");
  }
  if (options.epochs < 1) throw Error(ErrorCode::kInvalidInput, "epochs must be >= 1");
  if (!(options.learning_rate > 0.0) || !std::isfinite(options.learning_rate)) {
    throw Error(ErrorCode::kInvalidInput, "learning rate must be positive");
  }
  if (options.l2 < 0.0) throw Error(ErrorCode::kInvalidInput, "l2 must be >= 0");
}

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;  // 1 / stddev, or 1 for constant features
};

Standardizer FitStandardizer(const ProbeDataset& dataset) {
  const std::size_t dim = dataset.dim();
  const double n = static_cast<double>(dataset.samples.size());
  Standardizer st{std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
  for (const auto& s : dataset.samples) {
    for (std::size_t d = 0; d < dim; ++d) st.mean[d] += s.x[d];
  }
  for (auto& m : st.mean) m /= n;
  std::vector<double> var(dim, 0.0);
  for (const auto& s : dataset.samples) {
    for (std::size_t d = 0; d < dim; ++d) {
      const double c = s.x[d] - st.mean[d];
      var[d] += c * c;
    }
  }
  for (std::size_t d = 0; d < dim; ++d) {
    const double sd = std::sqrt(var[d] / n);
    st.scale[d] = sd > 1e-12 ? 1.0 / sd : 1.0;
  }
  return st;
}

// Per-sample gradient step shared by both objectives. `step` receives the
// current decision value and the label and returns dLoss/dz.
template <typename LossGrad>
LinearProbe TrainSgd(ProbeKind kind, const ProbeDataset& dataset,
                     const TrainOptions& options, LossGrad loss_grad) {
  ValidateTrainingSet(dataset, options);
  const std::size_t dim = dataset.dim();
  const std::size_t n = dataset.samples.size();

  std::vector<std::vector<double>> features;
  features.reserve(n);
  std::optional<Standardizer> standardizer;
  if (options.standardize) standardizer = FitStandardizer(dataset);
  for (const auto& s : dataset.samples) {
    std::vector<double> x = s.x;
    if (standardizer) {
      for (std::size_t d = 0; d < dim; ++d) {
        x[d] = (x[d] - standardizer->mean[d]) * standardizer->scale[d];
      }
    }
    features.push_back(std::move(x));
  }

  std::vector<double> w(dim, 0.0);
  double b = 0.0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(options.seed);
  const double lr = options.learning_rate;

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t idx : order) {
      const auto& x = features[idx];
      const double z = Dot(w, x) + b;
      const double g = loss_grad(z, dataset.samples[idx].label);
      if (options.l2 > 0.0) {
        for (auto& wd : w) wd -= lr * options.l2 * wd;
      }
      if (g != 0.0) {
        for (std::size_t d = 0; d < dim; ++d) w[d] -= lr * g * x[d];
        b -= lr * g;
      }
    }
  }

  if (standardizer) {
    // w.((x - mu) * s) + b  ==  (w * s).x + (b - sum w * s * mu)
    for (std::size_t d = 0; d < dim; ++d) {
      w[d] *= standardizer->scale[d];
      b -= w[d] * standardizer->mean[d];
    }
  }
  if (!AllFinite(w) || !std::isfinite(b)) {
    throw Error(ErrorCode::kDegenerateDataset, "training diverged");
  }
  return LinearProbe(std::move(w), b, kind, dataset.layer, dataset.rep_type);
}

}  // namespace

std::string_view ProbeKindName(ProbeKind kind) {
  return kind == ProbeKind::kLogisticRegression ? "logistic_regression" : "linear_svm";
}

ProbeKind ParseProbeKind(std::string_view name) {
  if (name == "logistic_regression" || name == "lr") return ProbeKind::kLogisticRegression;
  if (name == "linear_svm" || name == "svm") return ProbeKind::kLinearSvm;
  throw Error(ErrorCode::kInvalidInput, "unknown probe kind '" + std::string(name) + "'");
}

std::string_view RepTypeName(RepType type) {
  switch (type) {
    case RepType::kHiddenState:
      return "hidden_state";
    case RepType::kAttentionActivation:
      return "attention_activation";
    case RepType::kMlpActivation:
      return "mlp_activation";
  }
  return "hidden_state";
}

RepType ParseRepType(std::string_view name) {
  if (name == "hidden_state") return RepType::kHiddenState;
  if (name == "attention_activation") return RepType::kAttentionActivation;
  if (name == "mlp_activation") return RepType::kMlpActivation;
  throw Error(ErrorCode::kInvalidInput, "unknown rep_type '" + std::string(name) + "'");
}

std::size_t ProbeDataset::CountPositive() const {
  return static_cast<std::size_t>(std::count_if(
      samples.begin(), samples.end(), [](const ProbeSample& s) { return s.label; }));
}

LinearProbe::LinearProbe(std::vector<double> weights, double bias, ProbeKind kind,
                         int layer, RepType rep_type)
    : weights_(std::move(weights)),
      bias_(bias),
      kind_(kind),
      layer_(layer),
      rep_type_(rep_type) {
  if (weights_.empty()) throw Error(ErrorCode::kInvalidInput, "probe has no weights");
  if (!AllFinite(weights_) || !std::isfinite(bias_)) {
    throw Error(ErrorCode::kInvalidInput, "probe parameters must be finite");
  }
  if (layer_ < 0) throw Error(ErrorCode::kInvalidInput, "negative layer index");
}

double LinearProbe::Logit(std::span<const double> x) const {
  if (x.size() != weights_.size()) {
    throw Error(ErrorCode::kInvalidInput,
                "representation has dim " + std::to_string(x.size()) +
                    ", probe expects " + std::to_string(weights_.size()));
  }
  return Dot(weights_, x) + bias_;
}

ProbeScore LinearProbe::Score(std::span<const double> x) const {
  const double logit = Logit(x);
  return {logit, Sigmoid(logit)};
}

double Sigmoid(double logit) {
  if (logit >= 0.0) return 1.0 / (1.0 + std::exp(-logit));
  const double e = std::exp(logit);
  return e / (1.0 + e);
}

ProbeDataset BuildProbeDataset(std::span<const LabeledResponse> responses,
                               int cot_stride, int noncot_stride) {
  if (cot_stride < 1 || noncot_stride < 1) {
    throw Error(ErrorCode::kInvalidInput, "strides must be >= 1");
  }
  if (responses.empty()) throw Error(ErrorCode::kInvalidInput, "no responses");

  ProbeDataset dataset;
  bool have_stream = false;
  std::size_t dim = 0;
  for (std::size_t r = 0; r < responses.size(); ++r) {
    const auto& resp = responses[r];
    if (resp.tokens.empty()) {
      throw Error(ErrorCode::kInvalidInput, "response " + std::to_string(r) + " is empty");
    }
    if (resp.reps.size() != resp.tokens.size()) {
      throw Error(ErrorCode::kInvalidInput,
                  "response " + std::to_string(r) + " has misaligned reps");
    }
    for (const auto& rep : resp.reps) {
      if (!have_stream) {
        dataset.layer = rep.layer;
        dataset.rep_type = rep.rep_type;
        dim = rep.dim();
        have_stream = true;
      }
      if (rep.layer != dataset.layer || rep.rep_type != dataset.rep_type) {
        throw Error(ErrorCode::kInvalidInput, "responses mix (layer, rep_type) streams");
      }
      if (rep.dim() != dim || dim == 0) {
        throw Error(ErrorCode::kInvalidInput, "representation dimension mismatch");
      }
    }
    const std::size_t stride =
        static_cast<std::size_t>(resp.label ? cot_stride : noncot_stride);
    for (std::size_t t = stride - 1; t < resp.reps.size(); t += stride) {
      dataset.samples.push_back({resp.reps[t].values, resp.label});
    }
  }
  return dataset;
}

LinearProbe TrainLogisticRegression(const ProbeDataset& dataset,
                                    const TrainOptions& options) {
  return TrainSgd(ProbeKind::kLogisticRegression, dataset, options,
                  [](double z, bool label) { return Sigmoid(z) - (label ? 1.0 : 0.0); });
}

LinearProbe TrainLinearSvm(const ProbeDataset& dataset, const TrainOptions& options) {
  return TrainSgd(ProbeKind::kLinearSvm, dataset, options, [](double z, bool label) {
    const double y = label ? 1.0 : -1.0;
    return y * z < 1.0 ? -y : 0.0;
  });
}

LinearProbe TrainProbe(ProbeKind kind, const ProbeDataset& dataset,
                       const TrainOptions& options) {
  return kind == ProbeKind::kLogisticRegression ? TrainLogisticRegression(dataset, options)
                                                : TrainLinearSvm(dataset, options);
}

LossAndGradient LogisticLoss(const ProbeDataset& dataset, std::span<const double> weights,
                             double bias) {
  if (dataset.samples.empty()) throw Error(ErrorCode::kInvalidInput, "empty dataset");
  const std::size_t dim = weights.size();
  LossAndGradient out{0.0, std::vector<double>(dim + 1, 0.0)};
  for (const auto& s : dataset.samples) {
    if (s.x.size() != dim) throw Error(ErrorCode::kInvalidInput, "dimension mismatch");
    const double z = Dot(weights, s.x) + bias;
    const double y = s.label ? 1.0 : 0.0;
    // -[y log s(z) + (1-y) log(1 - s(z))] = softplus(z) - y z
    const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    out.loss += softplus - y * z;
    const double g = Sigmoid(z) - y;
    for (std::size_t d = 0; d < dim; ++d) out.gradient[d] += g * s.x[d];
    out.gradient[dim] += g;
  }
  const double n = static_cast<double>(dataset.samples.size());
  out.loss /= n;
  for (auto& g : out.gradient) g /= n;
  return out;
}

double AucRoc(std::span<const double> positive_scores,
              std::span<const double> negative_scores) {
  if (positive_scores.empty() || negative_scores.empty()) {
    throw Error(ErrorCode::kAucUndefined, "AUC needs both positive and negative samples");
  }
  struct Scored {
    double score;
    bool positive;
  };
  std::vector<Scored> all;
  all.reserve(positive_scores.size() + negative_scores.size());
  for (double s : positive_scores) all.push_back({s, true});
  for (double s : negative_scores) all.push_back({s, false});
  std::sort(all.begin(), all.end(),
            [](const Scored& a, const Scored& b) { return a.score < b.score; });

  // Sum of midranks of the positives (ranks are 1-based).
  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t) {
      if (all[t].positive) positive_rank_sum += midrank;
    }
    i = j;
  }
  const double np = static_cast<double>(positive_scores.size());
  const double nn = static_cast<double>(negative_scores.size());
  return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double F1Score(std::size_t true_positive, std::size_t false_positive,
               std::size_t false_negative) {
  if (true_positive == 0) {
    return (false_positive == 0 && false_negative == 0) ? 1.0 : 0.0;
  }
  const double tp = static_cast<double>(true_positive);
  return 2.0 * tp / (2.0 * tp + static_cast<double>(false_positive) +
                     static_cast<double>(false_negative));
}

ProbeMetrics EvaluateProbe(const LinearProbe& probe, const ProbeDataset& dataset,
                           double threshold) {
  if (dataset.samples.empty()) throw Error(ErrorCode::kInvalidInput, "empty dataset");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::vector<double> pos, neg;
  for (const auto& s : dataset.samples) {
    const double logit = probe.Logit(s.x);
    const bool predicted = logit > threshold;
    if (s.label) {
      pos.push_back(logit);
      predicted ? ++tp : ++fn;
    } else {
      neg.push_back(logit);
      predicted ? ++fp : ++tn;
    }
  }
  ProbeMetrics metrics;
  metrics.accuracy =
      static_cast<double>(tp + tn) / static_cast<double>(dataset.samples.size());
  metrics.f1 = F1Score(tp, fp, fn);
  if (!pos.empty() && !neg.empty()) metrics.auc_roc = AucRoc(pos, neg);
  return metrics;
}

std::vector<int> RankLayers(std::span<const std::pair<int, ProbeMetrics>> per_layer) {
  if (per_layer.empty()) throw Error(ErrorCode::kInvalidInput, "no layers to rank");
  std::vector<std::pair<int, double>> rows;
  rows.reserve(per_layer.size());
  for (const auto& [layer, m] : per_layer) rows.emplace_back(layer, m.f1);
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<int> layers;
  layers.reserve(rows.size());
  for (const auto& r : rows) layers.push_back(r.first);
  return layers;
}

}  // namespace probesearch
