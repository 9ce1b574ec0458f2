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


#include <cmath>

#include "doctest.h"

#include "cotrl/rewards.hpp"

using namespace cotrl;

namespace {

ParsedResponse Formatted(Verdict v) {
  ParsedResponse p;
  p.format_ok = true;
  p.verdict = v;
  return p;
}

}  // namespace

TEST_CASE("format reward") {
  CHECK(FormatReward(Formatted(Verdict::kReal)) == 0.0);
  CHECK(FormatReward(ParsedResponse{}) == -1.0);
  CHECK(FormatReward(Parse("<think>t</think>")) == -1.0);
}

TEST_CASE("overlong reward at the default lengths") {
  const RewardConfig cfg;
  const std::pair<std::size_t, double> table[] = {
      {0, 0.0},          {599, 0.0},         {600, 0.0},  {601, -1.0 / 150},
      {675, -0.5},       {749, -149.0 / 150}, {750, -1.0}, {751, -1.0}};
  for (const auto& [l, want] : table) {
    CAPTURE(l);
    CHECK(std::abs(OverlongReward(l, cfg) - want) < 1e-12);
  }
  CHECK_THROWS_AS(OverlongReward(cfg.l_budget + 1, cfg), Error);
  CHECK(OverlongReward(cfg.l_budget, cfg) == -1.0);
}

TEST_CASE("length reward") {
  const RewardConfig cfg;
  CHECK(std::abs(LengthReward(600, true, true, cfg) - 0.8) < 1e-12);
  CHECK(LengthReward(600, false, true, cfg) == 0.0);
  CHECK(LengthReward(600, true, false, cfg) == 0.0);
  CHECK(LengthReward(0, true, true, cfg) == 0.0);
  CHECK(LengthReward(800, true, true, cfg) == 1.0);
}

TEST_CASE("total reward examples") {
  const RewardConfig cfg;
  CHECK(std::abs(TotalReward(Formatted(Verdict::kFake), 600, Verdict::kFake, cfg).total - 0.8) < 1e-12);
  CHECK(TotalReward(ParsedResponse{}, 500, Verdict::kFake, cfg).total == -1.0);
  const auto r = TotalReward(Formatted(Verdict::kReal), 700, Verdict::kReal, cfg);
  CHECK(std::abs(r.total - (-100.0 / 150 + 700.0 / 750)) < 1e-12);
  CHECK(std::abs(r.total - 0.2667) < 1e-4);
  CHECK(r.total == r.r_fmt + r.r_overlong + r.r_len);
}

TEST_CASE("ablation switches zero their component") {
  RewardConfig cfg;
  cfg.use_length = false;
  auto r = TotalReward(Formatted(Verdict::kReal), 700, Verdict::kReal, cfg);
  CHECK(r.r_len == 0.0);
  CHECK(std::abs(r.total + 100.0 / 150) < 1e-12);
  cfg.use_overlong = false;
  r = TotalReward(Formatted(Verdict::kReal), 700, Verdict::kReal, cfg);
  CHECK(r.total == 0.0);
}

TEST_CASE("reward properties over every length") {
  const RewardConfig cfg;
  double prev_over = 1.0, prev_len = -1.0;
  double best = -10.0;
  std::size_t argbest = 0;
  for (std::size_t l = 0; l <= cfg.l_budget; ++l) {
    const double o = OverlongReward(l, cfg);
    const double g = LengthReward(l, true, true, cfg);
    CHECK(o <= prev_over);
    CHECK(g >= prev_len);
    prev_over = o;
    prev_len = g;
    for (bool fmt : {false, true})
      for (Verdict v : {Verdict::kReal, Verdict::kFake, Verdict::kInvalid}) {
        ParsedResponse p;
        p.format_ok = fmt;
        p.verdict = fmt ? v : Verdict::kInvalid;
        const double t = TotalReward(p, l, Verdict::kReal, cfg).total;
        CHECK(t >= -2.0);
        CHECK(t <= 1.0);
      }
    const double t = TotalReward(Formatted(Verdict::kReal), l, Verdict::kReal, cfg).total;
    if (t > best) best = t, argbest = l;
  }
  CHECK(argbest == cfg.l_max - cfg.l_cache);
}

TEST_CASE("config validation") {
  CHECK_NOTHROW(RewardConfig{}.Validate());
  CHECK_THROWS_AS((RewardConfig{100, 100, 200}.Validate()), Error);
  CHECK_THROWS_AS((RewardConfig{100, 0, 200}.Validate()), Error);
  CHECK_THROWS_AS((RewardConfig{100, 10, 99}.Validate()), Error);
}
