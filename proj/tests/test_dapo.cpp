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
#include <vector>

#include "doctest.h"

#include "cotrl/dapo.hpp"
#include "cotrl/sft.hpp"
#include "oracles.hpp"

using namespace cotrl;
using namespace cotrl::oracle;

namespace {

const PolicyDims kTiny{16, 3, 4, 6};

Rollout Encoded(const std::string& text) {
  Rollout r;
  r.gen_tokens = Vocabulary::Default().Encode(text);
  r.gen_tokens.push_back(Vocabulary::kEos);
  r.old_logprobs.assign(r.gen_tokens.size(), -1.0);
  return r;
}

RolloutGroup CraftedGroup(Verdict label, std::size_t correct, std::size_t g) {
  RolloutGroup group;
  group.label = label;
  const char* right = label == Verdict::kFake ? "fake" : "real";
  const char* wrong = label == Verdict::kFake ? "real" : "fake";
  for (std::size_t i = 0; i < g; ++i) {
    group.rollouts.push_back(Encoded(std::string("<think> f1 natural </think> <answer> ") +
                                     (i < correct ? right : wrong) + " </answer>"));
  }
  return group;
}

// A quickly cold-started small policy whose groups are usually mixed.
const PolicyParams& WarmPolicy() {
  static const PolicyParams p = [] {
    const TaskSet tasks = BuildTaskSet(800, 0, 3);
    SftConfig cfg;
    cfg.sample_count = 400;
    cfg.epochs = 40;
    cfg.learning_rate = 1.0;
    cfg.seed = 1;
    const auto samples = CollectColdStart(tasks.samples, TemplateResponseSource(RationaleStyle{}), cfg);
    return SftTrain(InitPolicy(PolicyDims{64, 16, 10, 32}, 2), samples, cfg);
  }();
  return p;
}

std::vector<SyntheticSample> Prompts() { return BuildTaskSet(64, 0, 4).samples; }

}  // namespace

TEST_CASE("is_equivalent") {
  CHECK(IsEquivalent(Verdict::kFake, Encoded("<think> f1 </think> <answer> fake </answer>")));
  CHECK_FALSE(IsEquivalent(Verdict::kFake, Encoded("fake")));
  CHECK_FALSE(IsEquivalent(Verdict::kReal, Encoded("<think> f1 </think> <answer> fake </answer>")));
}

TEST_CASE("advantage examples") {
  const std::vector<double> a = ComputeAdvantages(std::vector<double>{0.0, 2.0}, 1e-8);
  CHECK(a == std::vector<double>{-1.0, 1.0});
  const auto b = ComputeAdvantages(std::vector<double>{1, 2, 3}, 1e-8);
  CHECK(b[0] == doctest::Approx(-1.2247).epsilon(1e-4));
  CHECK(b[1] == 0.0);
  CHECK(b[2] == doctest::Approx(1.2247).epsilon(1e-4));
  CHECK_THROWS_AS(ComputeAdvantages(std::vector<double>{1, 1, 1}, 1e-8), Error);
  CHECK_THROWS_AS(ComputeAdvantages(std::vector<double>{1}, 1e-8), Error);
}

TEST_CASE("dynamic sampling keeps exactly the mixed groups") {
  const RewardConfig reward{150, 30, 214, true, true};
  std::vector<RolloutGroup> groups = {
      CraftedGroup(Verdict::kFake, 8, 8), CraftedGroup(Verdict::kFake, 0, 8),
      CraftedGroup(Verdict::kReal, 1, 8), CraftedGroup(Verdict::kReal, 8, 8),
      CraftedGroup(Verdict::kFake, 7, 8), CraftedGroup(Verdict::kReal, 0, 8)};
  for (auto& g : groups) ScoreGroup(g, reward);
  CHECK(KeptGroupIndices(groups, 1e-8) == std::vector<std::size_t>{2, 4});
  CHECK(DynamicSamplingFilter(groups, 1e-8).size() == 2);
}

TEST_CASE("std guard drops reward-degenerate mixed groups") {
  RolloutGroup g = CraftedGroup(Verdict::kFake, 4, 8);
  for (auto& r : g.rollouts) r.reward.total = 0.5;
  const std::vector<RolloutGroup> groups{g};
  CHECK(KeptGroupIndices(groups, 1e-8).empty());
}

TEST_CASE("objective examples") {
  const PolicyParams p = RandomPolicy(kTiny, 1, 0.5);
  ScoredGroup sg;
  sg.group.prompt_tokens = {2, 3};
  for (std::size_t i = 0; i < 2; ++i) {
    Rollout r;
    r.prompt_tokens = sg.group.prompt_tokens;
    std::vector<TokenId> ctx = r.prompt_tokens;
    for (TokenId t : {5, 6}) {
      r.gen_tokens.push_back(t);
      StepCache cache;
      Sampler(p).Evaluate(ctx, cache);
      r.old_logprobs.push_back(cache.logp[t]);
      ctx.push_back(t);
    }
    sg.group.rollouts.push_back(r);
  }
  sg.advantages = {-1.0, 1.0};
  DapoConfig cfg;
  const std::vector<ScoredGroup> batch{sg};
  CHECK(DapoObjectiveAndGradient(batch, p, cfg).objective == 0.0);

  // Single-token rollouts with ratios 2 and 0.5.
  ScoredGroup two;
  two.group.prompt_tokens = {2};
  for (double ratio : {2.0, 0.5}) {
    Rollout r;
    r.prompt_tokens = {2};
    r.gen_tokens = {7};
    r.old_logprobs = {TokenLogprobs(p, r.prompt_tokens)[7] - std::log(ratio)};
    two.group.rollouts.push_back(r);
  }
  two.advantages = {1.0, -1.0};
  const std::vector<ScoredGroup> b2{two};
  const auto res = DapoObjectiveAndGradient(b2, p, cfg);
  CHECK(std::abs(res.objective - 0.24) < 1e-12);
  // Both tokens sit on the clipped branch, so nothing flows back.
  for (double g : Flat(res.gradient)) CHECK(g == 0.0);
}

TEST_CASE("clipped branch saturates only on the advantageous side") {
  const PolicyParams p = RandomPolicy(kTiny, 2, 0.5);
  auto single = [&](double ratio, double adv) {
    ScoredGroup sg;
    sg.group.prompt_tokens = {1, 2};
    Rollout r;
    r.prompt_tokens = sg.group.prompt_tokens;
    r.gen_tokens = {9};
    r.old_logprobs = {TokenLogprobs(p, r.prompt_tokens)[9] - std::log(ratio)};
    sg.group.rollouts = {r};
    sg.advantages = {adv};
    return std::vector<ScoredGroup>{sg};
  };
  auto norm = [&](double ratio, double adv) {
    return GradientNorm(DapoObjectiveAndGradient(single(ratio, adv), p, DapoConfig{}).gradient);
  };
  CHECK(norm(1.5, 1.0) == 0.0);
  CHECK(norm(0.5, -1.0) == 0.0);
  CHECK(norm(1.5, -1.0) > 0.0);
  CHECK(norm(0.5, 1.0) > 0.0);
  CHECK(norm(1.1, 1.0) > 0.0);
}

TEST_CASE("objective gradient matches central differences") {
  Rng rng(17);
  DapoConfig cfg;
  for (int trial = 0; trial < 20; ++trial) {
    const PolicyDims dims{8 + UniformIndex(rng, 25), 2 + UniformIndex(rng, 3), 2 + UniformIndex(rng, 4),
                          2 + UniformIndex(rng, 6)};
    const PolicyParams p = RandomPolicy(dims, 300 + trial, 0.6);
    const auto batch = RandomBatch(p, rng, 1 + UniformIndex(rng, 2), 2 + UniformIndex(rng, 3), 6, 0.4);
    const auto res = DapoObjectiveAndGradient(batch, p, cfg);
    CHECK(std::abs(res.objective - ClippedSurrogate(batch, p, cfg.eps_low, cfg.eps_high)) < 1e-12);
    const auto fd = FiniteDifference(
        p, [&](const PolicyParams& q) { return DapoObjectiveAndGradient(batch, q, cfg).objective; });
    CHECK(MaxRelError(Flat(res.gradient), fd) < 1e-6);
  }
}

TEST_CASE("adapter objective gradient matches central differences") {
  Rng rng(19);
  const PolicyParams base = RandomPolicy(kTiny, 5, 0.6);
  PolicyParams p = LoraWrap(base, MatrixId::kHidden, 2, 4.0, 3);
  for (double& b : p.adapters[0].b.data) b = UniformRange(rng, -0.3, 0.3);
  const auto batch = RandomBatch(MergeAdapters(p), rng, 2, 3, 5, 0.4);
  DapoConfig cfg;
  const auto res = DapoObjectiveAndGradient(batch, p, cfg);
  const auto fd = FiniteDifference(
      p, [&](const PolicyParams& q) { return DapoObjectiveAndGradient(batch, q, cfg).objective; });
  CHECK(MaxRelError(Flat(res.gradient), fd) < 1e-6);
}

TEST_CASE("at theta_old the gradient is the group-baseline policy gradient") {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const PolicyParams p = RandomPolicy(kTiny, 400 + trial, 0.6);
    auto batch = RandomBatch(p, rng, 2, 4, 6, 0.0);
    const Sampler sampler(p);
    for (auto& sg : batch)
      for (auto& r : sg.group.rollouts) {
        std::vector<TokenId> ctx = r.prompt_tokens;
        for (std::size_t t = 0; t < r.gen_tokens.size(); ++t) {
          StepCache cache;
          sampler.Evaluate(ctx, cache);
          r.old_logprobs[t] = cache.logp[r.gen_tokens[t]];
          ctx.push_back(r.gen_tokens[t]);
        }
      }
    const auto a = Flat(DapoObjectiveAndGradient(batch, p, DapoConfig{}).gradient);
    const auto b = Flat(GroupBaselineGradient(batch, p));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-10);
  }
}

TEST_CASE("symmetric eps reduces to the standard clipped surrogate") {
  Rng rng(29);
  DapoConfig cfg;
  cfg.eps_low = cfg.eps_high = 0.2;
  for (int trial = 0; trial < 10; ++trial) {
    const PolicyParams p = RandomPolicy(kTiny, 500 + trial, 0.6);
    const auto batch = RandomBatch(p, rng, 2, 3, 6, 0.5);
    CHECK(std::abs(DapoObjectiveAndGradient(batch, p, cfg).objective -
                   ClippedSurrogate(batch, p, 0.2, 0.2)) < 1e-12);
  }
}

TEST_CASE("non-finite ratios abort with diagnostics") {
  const PolicyParams p = RandomPolicy(kTiny, 6, 0.5);
  Rng rng(1);
  auto batch = RandomBatch(p, rng, 1, 2, 3, 0.0);
  batch[0].group.rollouts[1].old_logprobs[0] = -1e6;
  try {
    DapoObjectiveAndGradient(batch, p, DapoConfig{});
    FAIL("expected non_finite");
  } catch (const Error& e) {
    CHECK(e.code() == "non_finite");
    CHECK(std::string(e.what()).find("rollout 1") != std::string::npos);
  }
}

TEST_CASE("a degenerate batch takes the resampling path") {
  DapoConfig cfg;
  cfg.max_resample_rounds = 3;
  cfg.groups_per_step = 2;
  cfg.max_steps = 1;
  const RewardConfig reward{150, 30, 214, true, true};
  // An untrained policy never closes the format, so every group is filtered.
  DapoTrainer trainer(ZeroPolicy(PolicyDims{64, 4, 4, 4}), cfg, reward, Prompts(), 1);
  CHECK_THROWS_AS(trainer.Step(), Error);

  cfg.skip_exhausted_steps = true;
  DapoTrainer skipping(ZeroPolicy(PolicyDims{64, 4, 4, 4}), cfg, reward, Prompts(), 1);
  const StepReport rep = skipping.Step();
  CHECK(rep.rounds == 4);
  CHECK(rep.sampled_groups == 8);
  CHECK(rep.kept_groups == 0);
  CHECK(rep.filtered_fraction == 1.0);
  CHECK_FALSE(rep.updated);
  CHECK(skipping.params() == ZeroPolicy(PolicyDims{64, 4, 4, 4}));
}

TEST_CASE("one step moves the parameters by learning_rate times the gradient") {
  DapoConfig cfg;
  cfg.learning_rate = 0.3;
  cfg.resample = false;
  cfg.groups_per_step = 4;
  const RewardConfig reward{150, 30, 214, true, true};
  const auto prompts = Prompts();
  DapoTrainer trainer(WarmPolicy(), cfg, reward, prompts, 8);
  // Find a step whose batch keeps at least one group.
  std::vector<ScoredGroup> kept;
  auto groups = trainer.SampleRound(0, 0);
  for (std::size_t i : KeptGroupIndices(groups, cfg.std_guard)) {
    ScoredGroup sg;
    sg.group = groups[i];
    std::vector<double> totals;
    for (const auto& r : sg.group.rollouts) totals.push_back(r.reward.total);
    sg.advantages = ComputeAdvantages(totals, cfg.std_guard);
    kept.push_back(sg);
  }
  REQUIRE_FALSE(kept.empty());
  const auto grad = DapoObjectiveAndGradient(kept, WarmPolicy(), cfg).gradient;
  const StepReport rep = trainer.Step();
  CHECK(rep.updated);
  CHECK(rep.kept_groups == kept.size());
  const auto before = Flat(WarmPolicy());
  const auto after = Flat(trainer.params());
  const auto g = Flat(grad);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(after[i] == before[i] + cfg.learning_rate * g[i]);
}

TEST_CASE("seeded runs repeat bit for bit") {
  DapoConfig cfg;
  cfg.learning_rate = 0.5;
  cfg.groups_per_step = 4;
  cfg.max_steps = 50;
  cfg.skip_exhausted_steps = true;
  cfg.max_resample_rounds = 2;
  const RewardConfig reward{150, 30, 214, true, true};
  const auto prompts = Prompts();
  const auto a = TrainLoop(WarmPolicy(), cfg, reward, prompts, 42);
  cfg.threads = 3;
  const auto b = TrainLoop(WarmPolicy(), cfg, reward, prompts, 42);
  REQUIRE(a.log.size() == 50);
  for (std::size_t i = 0; i < 50; ++i) CHECK(StepReportJson(a.log[i]) == StepReportJson(b.log[i]));
  CHECK(a.params == b.params);
  std::size_t updated = 0;
  for (const auto& r : a.log) updated += r.updated;
  CHECK(updated > 0);

  cfg.max_steps = 0;
  CHECK(TrainLoop(WarmPolicy(), cfg, reward, prompts, 42).params == WarmPolicy());
}

TEST_CASE("every kept group has zero-mean unit-std advantages") {
  Rng rng(31);
  for (int i = 0; i < 10000; ++i) {
    const std::size_t g = 2 + UniformIndex(rng, 15);
    std::vector<double> rewards(g);
    for (auto& r : rewards) r = UniformIndex(rng, 3) == 0 ? -1.0 : UniformRange(rng, -2.0, 1.0);
    double mean = 0, var = 0;
    for (double r : rewards) mean += r;
    mean /= g;
    for (double r : rewards) var += (r - mean) * (r - mean);
    if (std::sqrt(var / g) <= 1e-8) continue;
    const auto a = ComputeAdvantages(rewards, 1e-8);
    double am = 0, as = 0;
    for (double x : a) am += x;
    am /= g;
    for (double x : a) as += (x - am) * (x - am);
    CHECK(std::abs(am) < 1e-9);
    CHECK(std::abs(std::sqrt(as / g) - 1.0) < 1e-9);
  }
}
