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

#include <cstddef>

#include "cotrl/common.hpp"
#include "cotrl/response_protocol.hpp"

namespace cotrl {

struct RewardConfig {
  std::size_t l_max = 750;
  std::size_t l_cache = 150;
  std::size_t l_budget = 750 + 64;  // hard decode cap
  // Ablation switches; both on reproduces the full reward.
  bool use_overlong = true;
  bool use_length = true;

  // Throws Error("bad_config") unless 0 < l_cache < l_max <= l_budget.
  void Validate() const;
};

struct RewardBreakdown {
  double r_fmt = 0.0;
  double r_overlong = 0.0;
  double r_len = 0.0;
  double total = 0.0;
};

// 0 when formatted, -1 otherwise.
double FormatReward(const ParsedResponse& parsed);

// Soft overlong penalty: zero up to l_max - l_cache, a linear ramp down to
// -1 at l_max, and -1 beyond. Throws Error("budget_exceeded") for
// l_gen > l_budget.
double OverlongReward(std::size_t l_gen, const RewardConfig& cfg);

// min(l_gen, l_max) / l_max for correct formatted answers, else 0.
double LengthReward(std::size_t l_gen, bool correct, bool formatted,
                    const RewardConfig& cfg);

// label must be REAL or FAKE. Disabled components contribute 0.
RewardBreakdown TotalReward(const ParsedResponse& parsed, std::size_t l_gen,
                            Verdict label, const RewardConfig& cfg);

}  // namespace cotrl
