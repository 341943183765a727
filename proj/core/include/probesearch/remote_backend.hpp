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

#ifndef PROBESEARCH_REMOTE_BACKEND_HPP_
#define PROBESEARCH_REMOTE_BACKEND_HPP_

// Client for the hidden-state inference protocol (JSON over HTTP):
//
//   POST /v1/topk            {prefix, k}                        -> {tokens}
//   POST /v1/generate        {prefix, max_tokens, layer, rep_type
//                             [, force_first]}                  -> {tokens, reps, finished, text}
//   POST /v1/representations {texts, layer, rep_type}           -> {tokens, reps}
//   GET  /v1/meta                                               -> {vocab_size, dim, eos_token,
//                                                                   layers, model_name}
//
// Errors come back as {error} with status >= 400. `force_first` asks the
// server to emit that token first and report its representation; servers
// that ignore the field are detected and reported as protocol errors.

#include <chrono>
#include <string>

#include "probesearch/backend.hpp"

namespace probesearch {

struct RemoteBackendOptions {
  std::string url;  // e.g. "http://127.0.0.1:8000"
  int layer = 0;
  RepType rep_type = RepType::kHiddenState;
  std::chrono::milliseconds timeout{60000};
};

// Thread-safe: each call opens its own connection, so concurrent requests
// never share a response stream.
class RemoteBackend final : public GenerationBackend {
 public:
  // Fetches /v1/meta. Throws Error(kBackendUnavailable) when the server
  // cannot be reached and Error(kProtocolError) on a malformed answer.
  explicit RemoteBackend(RemoteBackendOptions options);

  const BackendInfo& info() const override { return info_; }
  std::vector<TokenId> TopKFirstTokens(std::span<const TokenId> prefix,
                                       int k) const override;
  GeneratedSegment GreedyContinue(std::span<const TokenId> prefix,
                                  int max_tokens) const override;
  GeneratedSegment ForcedContinue(std::span<const TokenId> prefix, TokenId first,
                                  int max_tokens) const override;
  std::vector<TokenId> Tokenize(std::string_view text) const override;
  std::vector<TextRepresentations> Representations(
      std::span<const std::string> texts) const override;

 private:
  std::string Post(const std::string& path, const std::string& body) const;
  std::string Get(const std::string& path) const;
  GeneratedSegment Generate(std::span<const TokenId> prefix, const TokenId* first,
                            int max_tokens) const;

  RemoteBackendOptions options_;
  BackendInfo info_;
};

// Environment variable consulted when no URL is given on the command line.
inline constexpr const char* kBackendUrlEnv = "PROBESEARCH_BACKEND_URL";

}  // namespace probesearch

#endif  // PROBESEARCH_REMOTE_BACKEND_HPP_
