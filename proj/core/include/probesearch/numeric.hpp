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

#ifndef PROBESEARCH_NUMERIC_HPP_
#define PROBESEARCH_NUMERIC_HPP_

#include <algorithm>
#include <cmath>

namespace probesearch {

// Answer equality with relative tolerance 1e-6 (absolute near zero). Used
// for grading, pooling and cover-rate checks alike.
inline bool AnswersMatch(double candidate, double reference) {
  return std::abs(candidate - reference) <= 1e-6 * std::max(1.0, std::abs(reference));
}

}  // namespace probesearch

#endif  // PROBESEARCH_NUMERIC_HPP_
