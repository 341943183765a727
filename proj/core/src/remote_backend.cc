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

#include "probesearch/remote_backend.hpp"

#include <cmath>
#include <string>

#include "httplib.h"
#include "io_util.hpp"
#include "probesearch/error.hpp"

namespace probesearch {

using internal::Json;

namespace {

Json ParseBody(const std::string& body, const std::string& path) {
  try {
    return Json::parse(body);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kProtocolError, path + ": response is not JSON: " + e.what());
  }
}

std::vector<RepresentationVector> ParseReps(const Json& reps, int dim, int layer,
                                            RepType type, const std::string& path) {
  if (!reps.is_array()) throw Error(ErrorCode::kProtocolError, path + ": 'reps' not an array");
  std::vector<RepresentationVector> out;
  out.reserve(reps.size());
  for (const auto& r : reps) {
    if (!r.is_array()) throw Error(ErrorCode::kProtocolError, path + ": rep not an array");
    RepresentationVector rep{{}, layer, type};
    rep.values.reserve(r.size());
    for (const auto& x : r) {
      if (!x.is_number()) throw Error(ErrorCode::kProtocolError, path + ": non-numeric rep");
      rep.values.push_back(x.get<double>());
      if (!std::isfinite(rep.values.back())) {
        throw Error(ErrorCode::kProtocolError, path + ": non-finite rep entry");
      }
    }
    if (static_cast<int>(rep.values.size()) != dim) {
      throw Error(ErrorCode::kProtocolError,
                  path + ": rep of dim " + std::to_string(rep.values.size()) +
                      ", meta declares " + std::to_string(dim));
    }
    out.push_back(std::move(rep));
  }
  return out;
}

std::vector<TokenId> ParseTokens(const Json& tokens, const std::string& path) {
  if (!tokens.is_array()) throw Error(ErrorCode::kProtocolError, path + ": 'tokens' not an array");
  std::vector<TokenId> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (!t.is_number_integer()) {
      throw Error(ErrorCode::kProtocolError, path + ": non-integer token");
    }
    out.push_back(t.get<TokenId>());
  }
  return out;
}

}  // namespace

RemoteBackend::RemoteBackend(RemoteBackendOptions options) : options_(std::move(options)) {
  if (options_.url.empty()) throw Error(ErrorCode::kInvalidConfig, "remote backend URL is empty");
  const Json meta = ParseBody(Get("/v1/meta"), "/v1/meta");
  try {
    info_.vocab_size = meta.at("vocab_size").get<int>();
    info_.dim = meta.at("dim").get<int>();
    info_.eos_token = meta.at("eos_token").get<TokenId>();
    info_.num_layers = meta.at("layers").get<int>();
    info_.model_name = meta.at("model_name").get<std::string>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kProtocolError, std::string("/v1/meta: ") + e.what());
  }
  if (info_.vocab_size < 1 || info_.dim < 1) {
    throw Error(ErrorCode::kProtocolError, "/v1/meta: non-positive vocab_size or dim");
  }
  if (options_.layer < 0 || options_.layer >= info_.num_layers) {
    throw Error(ErrorCode::kInvalidConfig, "layer " + std::to_string(options_.layer) +
                                               " not served by the remote model");
  }
  info_.layer = options_.layer;
  info_.rep_type = options_.rep_type;
  info_.single_flight = false;
}

std::string RemoteBackend::Get(const std::string& path) const {
  httplib::Client client(options_.url);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
  client.set_connection_timeout(secs);
  client.set_read_timeout(secs);
  auto res = client.Get(path);
  if (!res) {
    throw Error(ErrorCode::kBackendUnavailable,
                "GET " + path + ": " + httplib::to_string(res.error()));
  }
  if (res->status >= 400) {
    throw Error(res->status >= 500 ? ErrorCode::kBackendUnavailable : ErrorCode::kInvalidInput,
                "GET " + path + " returned " + std::to_string(res->status) + ": " + res->body);
  }
  return res->body;
}

std::string RemoteBackend::Post(const std::string& path, const std::string& body) const {
  httplib::Client client(options_.url);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
  client.set_connection_timeout(secs);
  client.set_read_timeout(secs);
  auto res = client.Post(path, body, "application/json");
  if (!res) {
    throw Error(ErrorCode::kBackendUnavailable,
                "POST " + path + ": " + httplib::to_string(res.error()));
  }
  if (res->status >= 400) {
    std::string message = res->body;
    try {
      message = Json::parse(res->body).at("error").get<std::string>();
    } catch (const Json::exception&) {
    }
    throw Error(res->status >= 500 ? ErrorCode::kBackendUnavailable : ErrorCode::kInvalidInput,
                "POST " + path + " returned " + std::to_string(res->status) + ": " + message);
  }
  return res->body;
}

std::vector<TokenId> RemoteBackend::TopKFirstTokens(std::span<const TokenId> prefix,
                                                    int k) const {
  if (k < 1 || k > info_.vocab_size) {
    throw Error(ErrorCode::kInvalidInput, "k=" + std::to_string(k) + " outside [1, " +
                                              std::to_string(info_.vocab_size) + "]");
  }
  Json req{{"prefix", std::vector<TokenId>(prefix.begin(), prefix.end())}, {"k", k}};
  const Json res = ParseBody(Post("/v1/topk", req.dump()), "/v1/topk");
  if (!res.contains("tokens")) throw Error(ErrorCode::kProtocolError, "/v1/topk: missing 'tokens'");
  auto tokens = ParseTokens(res.at("tokens"), "/v1/topk");
  if (static_cast<int>(tokens.size()) != k) {
    throw Error(ErrorCode::kProtocolError, "/v1/topk: expected " + std::to_string(k) +
                                               " tokens, got " + std::to_string(tokens.size()));
  }
  return tokens;
}

GeneratedSegment RemoteBackend::Generate(std::span<const TokenId> prefix, const TokenId* first,
                                         int max_tokens) const {
  if (max_tokens < 1) throw Error(ErrorCode::kInvalidInput, "max_tokens must be >= 1");
  Json req{{"prefix", std::vector<TokenId>(prefix.begin(), prefix.end())},
           {"max_tokens", max_tokens},
           {"layer", info_.layer},
           {"rep_type", RepTypeName(info_.rep_type)}};
  if (first) req["force_first"] = *first;
  const std::string path = "/v1/generate";
  const Json res = ParseBody(Post(path, req.dump()), path);
  GeneratedSegment seg;
  try {
    seg.tokens = ParseTokens(res.at("tokens"), path);
    seg.reps = ParseReps(res.at("reps"), info_.dim, info_.layer, info_.rep_type, path);
    seg.finished = res.at("finished").get<bool>();
    seg.text = res.at("text").get<std::string>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kProtocolError, path + ": " + e.what());
  }
  if (seg.reps.size() != seg.tokens.size()) {
    throw Error(ErrorCode::kProtocolError, path + ": reps and tokens are misaligned");
  }
  if (static_cast<int>(seg.tokens.size()) > max_tokens) {
    throw Error(ErrorCode::kProtocolError, path + ": more tokens than requested");
  }
  if (seg.finished && (seg.tokens.empty() ? prefix.empty() || prefix.back() != info_.eos_token
                                          : seg.tokens.back() != info_.eos_token)) {
    throw Error(ErrorCode::kProtocolError, path + ": finished without an eos token");
  }
  if (first && (seg.tokens.empty() || seg.tokens.front() != *first)) {
    throw Error(ErrorCode::kProtocolError, path + ": server ignored force_first");
  }
  return seg;
}

GeneratedSegment RemoteBackend::GreedyContinue(std::span<const TokenId> prefix,
                                               int max_tokens) const {
  return Generate(prefix, nullptr, max_tokens);
}

GeneratedSegment RemoteBackend::ForcedContinue(std::span<const TokenId> prefix, TokenId first,
                                               int max_tokens) const {
  return Generate(prefix, &first, max_tokens);
}

std::vector<TextRepresentations> RemoteBackend::Representations(
    std::span<const std::string> texts) const {
  Json req{{"texts", std::vector<std::string>(texts.begin(), texts.end())},
           {"layer", info_.layer},
           {"rep_type", RepTypeName(info_.rep_type)}};
  const std::string path = "/v1/representations";
  const Json res = ParseBody(Post(path, req.dump()), path);
  std::vector<TextRepresentations> out;
  try {
    const auto& tokens = res.at("tokens");
    const auto& reps = res.at("reps");
    if (!tokens.is_array() || !reps.is_array() || tokens.size() != texts.size() ||
        reps.size() != texts.size()) {
      throw Error(ErrorCode::kProtocolError, path + ": one entry per text required");
    }
    for (std::size_t i = 0; i < texts.size(); ++i) {
      TextRepresentations tr;
      tr.tokens = ParseTokens(tokens[i], path);
      tr.reps = ParseReps(reps[i], info_.dim, info_.layer, info_.rep_type, path);
      if (tr.tokens.size() != tr.reps.size()) {
        throw Error(ErrorCode::kProtocolError, path + ": reps and tokens are misaligned");
      }
      out.push_back(std::move(tr));
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kProtocolError, path + ": " + e.what());
  }
  return out;
}

std::vector<TokenId> RemoteBackend::Tokenize(std::string_view text) const {
  const std::string texts[] = {std::string(text)};
  return Representations(texts).front().tokens;
}

}  // namespace probesearch
