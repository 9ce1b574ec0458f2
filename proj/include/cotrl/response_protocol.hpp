// Copyright 2026 The cotrl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Structured response format: <think>...</think><answer>...</answer>.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "cotrl/common.hpp"

namespace cotrl {

inline constexpr std::string_view kThinkOpen = "<think>";
inline constexpr std::string_view kThinkClose = "</think>";
inline constexpr std::string_view kAnswerOpen = "<answer>";
inline constexpr std::string_view kAnswerClose = "</answer>";

struct RawResponse {
  std::string text;
  std::size_t token_count = 0;  // generated tokens, L_gen
};

struct ParsedResponse {
  std::optional<std::string> think;
  std::optional<std::string> answer;
  Verdict verdict = Verdict::kInvalid;
  bool format_ok = false;
};

// Never throws. Exactly one think block followed by exactly one answer block;
// only whitespace is allowed around and between them.
ParsedResponse Parse(std::string_view text);
inline ParsedResponse Parse(const RawResponse& raw) { return Parse(raw.text); }

// Case-insensitive after trimming whitespace and trailing ASCII punctuation.
Verdict VerdictOf(std::string_view answer);

}  // namespace cotrl
