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

#include <string>

#include "io_util.hpp"
#include "probesearch/error.hpp"
#include "probesearch/probe.hpp"

namespace probesearch {

using internal::Json;

std::string ProbeToJson(const LinearProbe& probe) {
  Json j;
  j["kind"] = ProbeKindName(probe.kind());
  j["layer"] = probe.layer();
  j["rep_type"] = RepTypeName(probe.rep_type());
  j["weights"] = probe.weights();
  j["bias"] = probe.bias();
  j["dim"] = probe.dim();
  return j.dump(2);
}

LinearProbe ProbeFromJson(std::string_view text) {
  const Json j = internal::ParseJson(text);
  try {
    auto weights = j.at("weights").get<std::vector<double>>();
    const auto dim = j.at("dim").get<std::size_t>();
    if (dim != weights.size()) {
      throw Error(ErrorCode::kParseError, "probe 'dim' disagrees with weight count");
    }
    return LinearProbe(std::move(weights), j.at("bias").get<double>(),
                       ParseProbeKind(j.at("kind").get<std::string>()),
                       j.at("layer").get<int>(),
                       ParseRepType(j.at("rep_type").get<std::string>()));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("probe document: ") + e.what());
  }
}

void SaveProbe(const LinearProbe& probe, const std::string& path) {
  internal::WriteFile(path, ProbeToJson(probe) + "\n");
}

LinearProbe LoadProbe(const std::string& path) {
  return ProbeFromJson(internal::ReadFile(path));
}

std::string LabeledResponseToJson(const LabeledResponse& response) {
  Json j;
  j["label"] = response.label ? 1 : 0;
  j["tokens"] = response.tokens;
  Json reps = Json::array();
  for (const auto& r : response.reps) reps.push_back(r.values);
  j["reps"] = std::move(reps);
  j["layer"] = response.reps.empty() ? 0 : response.reps.front().layer;
  j["rep_type"] = RepTypeName(response.reps.empty() ? RepType::kHiddenState
                                                    : response.reps.front().rep_type);
  return j.dump();
}

LabeledResponse LabeledResponseFromJson(std::string_view line) {
  const Json j = internal::ParseJson(line);
  try {
    LabeledResponse out;
    const int label = j.at("label").get<int>();
    if (label != 0 && label != 1) {
      throw Error(ErrorCode::kParseError, "label must be 0 or 1");
    }
    out.label = label == 1;
    out.tokens = j.at("tokens").get<std::vector<TokenId>>();
    const int layer = j.at("layer").get<int>();
    const RepType type = ParseRepType(j.at("rep_type").get<std::string>());
    for (const auto& r : j.at("reps")) {
      out.reps.push_back({r.get<std::vector<double>>(), layer, type});
    }
    return out;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("labeled response: ") + e.what());
  }
}

std::vector<LabeledResponse> ReadLabeledResponses(const std::string& path) {
  const auto lines = internal::SplitLines(internal::ReadFile(path));
  std::vector<LabeledResponse> out;
  std::string bad;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (internal::IsBlank(lines[i])) continue;
    try {
      out.push_back(LabeledResponseFromJson(lines[i]));
    } catch (const Error&) {
      bad += (bad.empty() ? "" : ", ") + std::to_string(i + 1);
    }
  }
  if (!bad.empty()) {
    throw Error(ErrorCode::kParseError, path + ": malformed lines " + bad);
  }
  return out;
}

void WriteLabeledResponses(std::span<const LabeledResponse> responses,
                           const std::string& path) {
  std::string text;
  for (const auto& r : responses) text += LabeledResponseToJson(r) + "\n";
  internal::WriteFile(path, text);
}

}  // namespace probesearch
