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

#ifndef PROBESEARCH_ERROR_HPP_
#define PROBESEARCH_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace probesearch {

enum class ErrorCode {
  kInvalidInput,
  kInvalidConfig,
  kDegenerateDataset,
  kAucUndefined,
  kBackendUnavailable,
  kProtocolError,
  kExtractionFailed,
  kNoAnswer,
  kIoError,
  kParseError,
};

std::string_view ErrorCodeName(ErrorCode code);

// Every failure surfaced by the library is an Error carrying a code, so
// callers can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace probesearch

#endif  // PROBESEARCH_ERROR_HPP_
