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

#include "cotrl/rewards.hpp"

#include <algorithm>
#include <string>

namespace cotrl {

void RewardConfig::Validate() const {
  if (!(l_cache > 0 && l_cache < l_max && l_max <= l_budget)) {
    throw Error("bad_config",
                "reward config requires 0 < l_cache < l_max <= l_budget (got "
                "l_cache=" + std::to_string(l_cache) +
                    " l_max=" + std::to_string(l_max) +
                    " l_budget=" + std::to_string(l_budget) + ")");
  }
}

double FormatReward(const ParsedResponse& parsed) {
  return parsed.format_ok ? 0.0 : -1.0;
}

double OverlongReward(std::size_t l_gen, const RewardConfig& cfg) {
  if (l_gen > cfg.l_budget) {
    throw Error("budget_exceeded",
                "generated length " + std::to_string(l_gen) +
                    " exceeds decode budget " + std::to_string(cfg.l_budget));
  }
  const double soft_start = static_cast<double>(cfg.l_max - cfg.l_cache);
  const double len = static_cast<double>(l_gen);
  if (l_gen <= cfg.l_max - cfg.l_cache) return 0.0;
  if (l_gen <= cfg.l_max) {
    return (soft_start - len) / static_cast<double>(cfg.l_cache);
  }
  return -1.0;
}

double LengthReward(std::size_t l_gen, bool correct, bool formatted,
                    const RewardConfig& cfg) {
  if (!(correct && formatted)) return 0.0;
  return static_cast<double>(std::min(l_gen, cfg.l_max)) /
         static_cast<double>(cfg.l_max);
}

RewardBreakdown TotalReward(const ParsedResponse& parsed, std::size_t l_gen,
                            Verdict label, const RewardConfig& cfg) {
  if (label == Verdict::kInvalid) {
    throw Error("bad_label", "reward label must be REAL or FAKE");
  }
  RewardBreakdown r;
  r.r_fmt = FormatReward(parsed);
  r.r_overlong = cfg.use_overlong ? OverlongReward(l_gen, cfg) : 0.0;
  const bool correct = parsed.verdict == label;
  r.r_len = cfg.use_length ? LengthReward(l_gen, correct, parsed.format_ok, cfg)
                           : 0.0;
  r.total = r.r_fmt + r.r_overlong + r.r_len;
  return r;
}

}  // namespace cotrl
