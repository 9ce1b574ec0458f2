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

#include "cotrl/dapo.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "cotrl/response_protocol.hpp"
#include "json.hpp"

namespace cotrl {

void DapoConfig::Validate() const {
  if (!(eps_low > 0.0 && eps_low <= eps_high && eps_high < 1.0)) {
    throw Error("bad_config", "dapo requires 0 < eps_low <= eps_high < 1");
  }
  if (group_size < 2) throw Error("bad_config", "dapo.group_size must be at least 2");
  if (groups_per_step < 1) throw Error("bad_config", "dapo.groups_per_step must be positive");
  if (!(temperature > 0.0)) throw Error("bad_config", "dapo.temperature must be positive");
  if (inner_epochs < 1) throw Error("bad_config", "dapo.inner_epochs must be positive");
  if (!(std_guard >= 0.0)) throw Error("bad_config", "dapo.std_guard must be nonnegative");
}

void ParallelFor(std::size_t n, std::size_t threads,
                 const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> workers;
  for (std::size_t t = 0; t < threads; ++t) {
    workers.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += threads) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
}

bool IsEquivalent(Verdict label, const Rollout& rollout) {
  const ParsedResponse p = Parse(Vocabulary::Default().Decode(rollout.gen_tokens));
  return p.format_ok && p.verdict == label;
}

void ScoreGroup(RolloutGroup& group, const RewardConfig& cfg) {
  for (Rollout& r : group.rollouts) {
    const ParsedResponse p = Parse(Vocabulary::Default().Decode(r.gen_tokens));
    r.reward = TotalReward(p, r.gen_tokens.size(), group.label, cfg);
  }
}

namespace {

double PopulationStd(std::span<const double> v, double* mean_out = nullptr) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size());
  if (mean_out) *mean_out = mean;
  return std::sqrt(var);
}

std::vector<double> Totals(const RolloutGroup& g) {
  std::vector<double> out;
  for (const auto& r : g.rollouts) out.push_back(r.reward.total);
  return out;
}

}  // namespace

std::vector<std::size_t> KeptGroupIndices(std::span<const RolloutGroup> groups,
                                          double std_guard) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const RolloutGroup& g = groups[i];
    std::size_t equivalent = 0;
    for (const auto& r : g.rollouts) equivalent += IsEquivalent(g.label, r) ? 1 : 0;
    if (equivalent == 0 || equivalent == g.rollouts.size()) continue;
    const auto totals = Totals(g);
    if (!(PopulationStd(totals) > std_guard)) continue;
    kept.push_back(i);
  }
  return kept;
}

std::vector<RolloutGroup> DynamicSamplingFilter(std::span<const RolloutGroup> groups,
                                                double std_guard) {
  std::vector<RolloutGroup> out;
  for (std::size_t i : KeptGroupIndices(groups, std_guard)) out.push_back(groups[i]);
  return out;
}

std::vector<double> ComputeAdvantages(std::span<const double> rewards, double std_guard) {
  if (rewards.size() < 2) throw Error("degenerate_group", "advantages need at least two rewards");
  double mean = 0.0;
  const double sd = PopulationStd(rewards, &mean);
  if (!(sd > std_guard)) {
    throw Error("degenerate_group", "reward std " + std::to_string(sd) +
                                        " does not exceed std_guard; group should be filtered");
  }
  std::vector<double> out;
  out.reserve(rewards.size());
  for (double r : rewards) out.push_back((r - mean) / sd);
  return out;
}

ObjectiveResult DapoObjectiveAndGradient(std::span<const ScoredGroup> groups,
                                         const PolicyParams& params,
                                         const DapoConfig& cfg) {
  if (groups.empty()) throw Error("empty_batch", "objective needs at least one group");
  const Sampler policy(params);
  GradientAccumulator acc(policy);

  std::size_t tokens = 0;
  for (const auto& sg : groups) {
    if (sg.advantages.size() != sg.group.rollouts.size()) {
      throw Error("shape_mismatch", "one advantage per rollout required");
    }
    for (const auto& r : sg.group.rollouts) {
      if (r.old_logprobs.size() != r.gen_tokens.size()) {
        throw Error("shape_mismatch", "rollout is missing old log-probs");
      }
      tokens += r.gen_tokens.size();
    }
  }
  if (tokens == 0) throw Error("empty_batch", "objective needs at least one token");
  const double inv_n = 1.0 / static_cast<double>(tokens);
  const double lo = 1.0 - cfg.eps_low, hi = 1.0 + cfg.eps_high;

  double objective = 0.0;
  StepCache cache;
  std::vector<TokenId> context;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const ScoredGroup& sg = groups[gi];
    for (std::size_t ri = 0; ri < sg.group.rollouts.size(); ++ri) {
      const Rollout& r = sg.group.rollouts[ri];
      const double adv = sg.advantages[ri];
      context = r.prompt_tokens;
      for (std::size_t t = 0; t < r.gen_tokens.size(); ++t) {
        const TokenId tok = r.gen_tokens[t];
        policy.Evaluate(context, cache);
        const double new_lp = cache.logp[static_cast<std::size_t>(tok)];
        const double ratio = std::exp(new_lp - r.old_logprobs[t]);
        if (!std::isfinite(ratio) || !std::isfinite(adv)) {
          std::ostringstream msg;
          msg << "non-finite importance ratio at group " << gi << " rollout " << ri
              << " token " << t << " (new logprob " << new_lp << ", old logprob "
              << r.old_logprobs[t] << ", advantage " << adv << ")";
          throw Error("non_finite", msg.str());
        }
        const double unclipped = ratio * adv;
        const double clipped = std::clamp(ratio, lo, hi) * adv;
        if (unclipped <= clipped) {
          objective += unclipped * inv_n;
          // d(ratio * adv)/d new_lp = ratio * adv
          acc.Add(cache, tok, unclipped * inv_n);
        } else {
          objective += clipped * inv_n;
        }
        context.push_back(tok);
      }
    }
  }
  ObjectiveResult out;
  out.objective = objective;
  out.gradient = ProjectGradient(params, acc.Finish());
  out.tokens = tokens;
  for (const double* g : TrainableParameters(out.gradient)) {
    if (!std::isfinite(*g)) throw Error("non_finite", "non-finite gradient entry");
  }
  return out;
}

DapoTrainer::DapoTrainer(PolicyParams init, DapoConfig cfg, RewardConfig reward,
                         std::vector<SyntheticSample> prompts, std::uint64_t seed)
    : params_(std::move(init)),
      cfg_(cfg),
      reward_(reward),
      prompts_(std::move(prompts)),
      seed_(seed) {
  cfg_.Validate();
  reward_.Validate();
  bool has_real = false, has_fake = false;
  for (const auto& p : prompts_) {
    has_real |= p.label == Verdict::kReal;
    has_fake |= p.label == Verdict::kFake;
  }
  if (!has_real || !has_fake) {
    throw Error("bad_dataset", "training prompts need both REAL and FAKE samples");
  }
}

std::vector<RolloutGroup> DapoTrainer::SampleRound(std::size_t step, std::size_t round) const {
  Rng pick(DeriveSeed(seed_, 0xBA7C, step * 1024 + round));
  std::vector<std::size_t> idx(cfg_.groups_per_step);
  for (auto& i : idx) i = UniformIndex(pick, prompts_.size());
  const Sampler sampler(params_);
  std::vector<RolloutGroup> groups(idx.size());
  ParallelFor(idx.size(), cfg_.threads, [&](std::size_t k) {
    const SyntheticSample& s = prompts_[idx[k]];
    const std::uint64_t stream = DeriveSeed(seed_, step * 1024 + round, k);
    RolloutGroup g = SampleGroup(sampler, s.prompt_tokens, cfg_.group_size,
                                 cfg_.temperature, reward_.l_budget, stream);
    g.label = s.label;
    ScoreGroup(g, reward_);
    groups[k] = std::move(g);
  });
  return groups;
}

StepReport DapoTrainer::Step() {
  StepReport rep;
  rep.step = step_;
  std::vector<ScoredGroup> kept;
  std::size_t rollouts = 0, equivalent = 0, formatted = 0;
  double reward_sum = 0.0, length_sum = 0.0;
  std::size_t round = 0;
  for (;; ++round) {
    std::vector<RolloutGroup> groups = SampleRound(step_, round);
    rep.sampled_groups += groups.size();
    for (const auto& g : groups) {
      for (const auto& r : g.rollouts) {
        ++rollouts;
        reward_sum += r.reward.total;
        length_sum += static_cast<double>(r.gen_tokens.size());
        formatted += r.reward.r_fmt == 0.0 ? 1 : 0;
        equivalent += IsEquivalent(g.label, r) ? 1 : 0;
      }
    }
    for (std::size_t i : KeptGroupIndices(groups, cfg_.std_guard)) {
      ScoredGroup sg;
      sg.group = std::move(groups[i]);
      const auto totals = Totals(sg.group);
      sg.advantages = ComputeAdvantages(totals, cfg_.std_guard);
      kept.push_back(std::move(sg));
    }
    if (!cfg_.resample || kept.size() >= cfg_.min_kept_groups ||
        round >= cfg_.max_resample_rounds) {
      break;
    }
  }
  rep.rounds = round + 1;
  rep.kept_groups = kept.size();
  rep.filtered_fraction =
      1.0 - static_cast<double>(kept.size()) / static_cast<double>(rep.sampled_groups);
  rep.mean_reward = reward_sum / static_cast<double>(rollouts);
  rep.mean_length = length_sum / static_cast<double>(rollouts);
  rep.accuracy = static_cast<double>(equivalent) / static_cast<double>(rollouts);
  rep.format_rate = static_cast<double>(formatted) / static_cast<double>(rollouts);

  if (kept.empty()) {
    if (cfg_.resample && !cfg_.skip_exhausted_steps) {
      throw Error("resample_exhausted",
                  "no group survived dynamic sampling after " + std::to_string(rep.rounds) +
                      " rounds at step " + std::to_string(step_));
    }
    ++step_;
    return rep;
  }

  for (std::size_t epoch = 0; epoch < cfg_.inner_epochs; ++epoch) {
    ObjectiveResult obj = DapoObjectiveAndGradient(kept, params_, cfg_);
    if (epoch == 0) {
      rep.objective = obj.objective;
      rep.grad_norm = GradientNorm(obj.gradient);
    }
    ApplyUpdate(params_, obj.gradient, cfg_.learning_rate);
  }
  rep.updated = true;
  ++step_;
  return rep;
}

TrainResult TrainLoop(PolicyParams init, const DapoConfig& cfg, const RewardConfig& reward,
                      const std::vector<SyntheticSample>& prompts, std::uint64_t seed,
                      const std::function<void(const StepReport&)>& on_step) {
  DapoTrainer trainer(std::move(init), cfg, reward, prompts, seed);
  TrainResult out;
  for (std::size_t s = 0; s < cfg.max_steps; ++s) {
    out.log.push_back(trainer.Step());
    if (on_step) on_step(out.log.back());
  }
  out.params = trainer.params();
  return out;
}

std::string StepReportJson(const StepReport& r) {
  nlohmann::json j = {{"step", r.step},
                      {"objective", r.objective},
                      {"mean_reward", r.mean_reward},
                      {"mean_length", r.mean_length},
                      {"filtered_fraction", r.filtered_fraction},
                      {"grad_norm", r.grad_norm},
                      {"accuracy", r.accuracy},
                      {"format_rate", r.format_rate},
                      {"sampled_groups", r.sampled_groups},
                      {"kept_groups", r.kept_groups},
                      {"rounds", r.rounds},
                      {"updated", r.updated}};
  return j.dump();
}

}  // namespace cotrl
