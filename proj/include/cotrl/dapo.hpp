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

// Group-relative policy optimization with decoupled clipping, dynamic
// sampling and a token-level surrogate.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cotrl/policy.hpp"
#include "cotrl/rewards.hpp"
#include "cotrl/task_gen.hpp"

namespace cotrl {

struct DapoConfig {
  double eps_low = 0.2;
  double eps_high = 0.28;
  std::size_t group_size = 8;
  std::size_t groups_per_step = 16;
  double learning_rate = 1e-5;
  std::size_t max_steps = 0;
  double std_guard = 1e-8;
  double temperature = 1.0;
  // Dynamic sampling: resample fresh prompts until at least min_kept_groups
  // survive the filter, for at most max_resample_rounds extra rounds. With
  // resample off, filtered groups are simply dropped.
  bool resample = true;
  std::size_t min_kept_groups = 1;
  std::size_t max_resample_rounds = 8;
  // Record an empty step instead of failing when resampling is exhausted.
  bool skip_exhausted_steps = false;
  // Gradient steps per batch of rollouts (old policy refreshed afterwards).
  std::size_t inner_epochs = 1;
  std::size_t threads = 1;

  void Validate() const;
};

// format_ok and verdict == label on the decoded rollout.
bool IsEquivalent(Verdict label, const Rollout& rollout);

// Decodes and scores every rollout of the group in place.
void ScoreGroup(RolloutGroup& group, const RewardConfig& cfg);

// Keeps groups whose equivalent-rollout count is strictly between 0 and G and
// whose total-reward population std exceeds std_guard. Rewards must be
// scored. Returns the kept indices in input order.
std::vector<std::size_t> KeptGroupIndices(std::span<const RolloutGroup> groups,
                                          double std_guard);
std::vector<RolloutGroup> DynamicSamplingFilter(std::span<const RolloutGroup> groups,
                                                double std_guard);

// (r_i - mean) / population std. Throws Error("degenerate_group") when the
// std does not exceed std_guard or fewer than two rewards are given.
std::vector<double> ComputeAdvantages(std::span<const double> rewards, double std_guard);

struct ScoredGroup {
  RolloutGroup group;
  std::vector<double> advantages;  // one per rollout
};

struct ObjectiveResult {
  double objective = 0.0;
  PolicyParams gradient;  // trainable-parameter gradient of the objective
  std::size_t tokens = 0;
};

// Token-level clipped surrogate and its exact gradient. Ratios use the
// rollouts' stored old log-probs; advantages are constants. Where the min
// picks the clipped branch the token contributes no gradient (ties go to the
// unclipped branch). Throws Error("non_finite") with the offending location.
ObjectiveResult DapoObjectiveAndGradient(std::span<const ScoredGroup> groups,
                                         const PolicyParams& params,
                                         const DapoConfig& cfg);

struct StepReport {
  std::size_t step = 0;
  double objective = 0.0;
  double mean_reward = 0.0;
  double mean_length = 0.0;
  double filtered_fraction = 0.0;
  double grad_norm = 0.0;
  double accuracy = 0.0;     // fraction of sampled rollouts equivalent to the label
  double format_rate = 0.0;
  std::size_t sampled_groups = 0;
  std::size_t kept_groups = 0;
  std::size_t rounds = 0;
  bool updated = false;
};

class DapoTrainer {
 public:
  // prompts must contain both labels.
  DapoTrainer(PolicyParams init, DapoConfig cfg, RewardConfig reward,
              std::vector<SyntheticSample> prompts, std::uint64_t seed);

  // Sample, score, filter, compute advantages and take one ascent step per
  // inner epoch. Throws Error("resample_exhausted") when no group survives.
  StepReport Step();

  // Samples and scores the groups of one round without updating.
  std::vector<RolloutGroup> SampleRound(std::size_t step, std::size_t round) const;

  const PolicyParams& params() const { return params_; }
  std::size_t steps_done() const { return step_; }

 private:
  PolicyParams params_;
  DapoConfig cfg_;
  RewardConfig reward_;
  std::vector<SyntheticSample> prompts_;
  std::uint64_t seed_;
  std::size_t step_ = 0;
};

struct TrainResult {
  PolicyParams params;
  std::vector<StepReport> log;
};

TrainResult TrainLoop(PolicyParams init, const DapoConfig& cfg,
                      const RewardConfig& reward,
                      const std::vector<SyntheticSample>& prompts, std::uint64_t seed,
                      const std::function<void(const StepReport&)>& on_step = {});

std::string StepReportJson(const StepReport& r);

// Runs fn(i) for i in [0, n) on up to `threads` workers; results must be
// written to disjoint slots.
void ParallelFor(std::size_t n, std::size_t threads,
                 const std::function<void(std::size_t)>& fn);

}  // namespace cotrl
