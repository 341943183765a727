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

#include "probesearch/error.hpp"

namespace probesearch {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput:
      return "invalid-input";
    case ErrorCode::kInvalidConfig:
      return "invalid-config";
    case ErrorCode::kDegenerateDataset:
      return "degenerate-dataset";
    case ErrorCode::kAucUndefined:
      return "auc-undefined";
    case ErrorCode::kBackendUnavailable:
      return "backend-unavailable";
    case ErrorCode::kProtocolError:
      return "protocol-error";
    case ErrorCode::kExtractionFailed:
      return "extraction-failed";
    case ErrorCode::kNoAnswer:
      return "no-answer";
    case ErrorCode::kIoError:
      return "io-error";
    case ErrorCode::kParseError:
      return "parse-error";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
      code_(code) {}

}  // namespace probesearch
