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

#ifndef PROBESEARCH_REPRESENTATION_HPP_
#define PROBESEARCH_REPRESENTATION_HPP_

#include <cstdint>
#include <string_view>
#include <vector>

namespace probesearch {

using TokenId = std::int32_t;

// Which activation stream of a transformer layer a vector was read from:
// the residual-stream output, the attention sub-layer output, or the MLP
// sub-layer output.
enum class RepType { kHiddenState, kAttentionActivation, kMlpActivation };

std::string_view RepTypeName(RepType type);
// Throws Error(kInvalidInput) on an unknown name.
RepType ParseRepType(std::string_view name);

struct RepresentationVector {
  std::vector<double> values;
  int layer = 0;
  RepType rep_type = RepType::kHiddenState;

  std::size_t dim() const { return values.size(); }
  friend bool operator==(const RepresentationVector&,
                         const RepresentationVector&) = default;
};

}  // namespace probesearch

#endif  // PROBESEARCH_REPRESENTATION_HPP_
