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

#include "cotrl/config.hpp"

#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <type_traits>

namespace cotrl {
namespace {

using nlohmann::json;

template <class T>
T Convert(const std::string& key, const json& j) {
  auto bad = [&](const char* want) {
    return Error("bad_value", "key '" + key + "' expects " + want + ", got " + j.dump());
  };
  if constexpr (std::is_same_v<T, bool>) {
    if (!j.is_boolean()) throw bad("a boolean");
    return j.get<bool>();
  } else if constexpr (std::is_integral_v<T>) {
    if (j.is_number_float()) {
      const double v = j.get<double>();
      if (v != static_cast<double>(static_cast<long long>(v))) throw bad("an integer");
      if (v < 0) throw bad("a non-negative integer");
      return static_cast<T>(v);
    }
    if (!j.is_number_integer()) throw bad("an integer");
    if (!j.is_number_unsigned() && j.get<long long>() < 0) throw bad("a non-negative integer");
    return j.get<T>();
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!j.is_number()) throw bad("a number");
    return j.get<T>();
  } else {
    if (!j.is_string()) throw bad("a string");
    return j.get<std::string>();
  }
}

template <class T>
ConfigKey Leaf(std::string key, std::string doc, std::function<T&(RunConfig&)> ref) {
  ConfigKey k;
  k.key = key;
  k.doc = std::move(doc);
  k.get = [ref](const RunConfig& c) { return json(ref(const_cast<RunConfig&>(c))); };
  k.set = [ref, key](RunConfig& c, const json& j) { ref(c) = Convert<T>(key, j); };
  return k;
}

#define COTRL_KEY(T, name, doc, expr) \
  Leaf<T>(name, doc, [](RunConfig& c) -> T& { return expr; })

std::vector<ConfigKey> BuildKeys() {
  using S = std::size_t;
  using D = double;
  using B = bool;
  using Str = std::string;
  return {
      COTRL_KEY(std::uint64_t, "seed", "master seed; every stage derives its streams from it", c.seed),

      COTRL_KEY(Str, "paths.manifest", "dataset manifest (JSONL)", c.paths.manifest),
      COTRL_KEY(Str, "paths.samples", "synthetic samples for every manifest record (JSONL)", c.paths.samples),
      COTRL_KEY(Str, "paths.heldout", "held-out evaluation samples (JSONL)", c.paths.heldout),
      COTRL_KEY(Str, "paths.base_checkpoint", "base policy checkpoint", c.paths.base_checkpoint),
      COTRL_KEY(Str, "paths.sft_samples", "collected cold-start samples (JSONL)", c.paths.sft_samples),
      COTRL_KEY(Str, "paths.sft_checkpoint", "cold-start checkpoint", c.paths.sft_checkpoint),
      COTRL_KEY(Str, "paths.rl_checkpoint", "RL checkpoint", c.paths.rl_checkpoint),
      COTRL_KEY(Str, "paths.step_log", "RL step log (JSONL)", c.paths.step_log),
      COTRL_KEY(Str, "paths.reports", "report output directory", c.paths.reports),
      COTRL_KEY(Str, "paths.train_init", "checkpoint RL starts from (empty: paths.sft_checkpoint)", c.paths.train_init),
      COTRL_KEY(Str, "paths.frames_in", "input frames: PNG directory or packed .cfrm file", c.paths.frames_in),
      COTRL_KEY(Str, "paths.frames_out", "perturbed frame output directory", c.paths.frames_out),

      COTRL_KEY(S, "reward.l_max", "length at which the overlong penalty reaches -1", c.reward.l_max),
      COTRL_KEY(S, "reward.l_cache", "width of the soft penalty interval", c.reward.l_cache),
      COTRL_KEY(S, "reward.l_budget", "hard decode cap in tokens", c.reward.l_budget),
      COTRL_KEY(B, "reward.use_overlong", "include the soft overlong penalty", c.reward.use_overlong),
      COTRL_KEY(B, "reward.use_length", "include the accuracy-based length reward", c.reward.use_length),

      COTRL_KEY(D, "dapo.eps_low", "lower clip range", c.dapo.eps_low),
      COTRL_KEY(D, "dapo.eps_high", "upper clip range", c.dapo.eps_high),
      COTRL_KEY(S, "dapo.group_size", "rollouts per prompt", c.dapo.group_size),
      COTRL_KEY(S, "dapo.groups_per_step", "prompts sampled per round", c.dapo.groups_per_step),
      COTRL_KEY(D, "dapo.learning_rate", "ascent step size", c.dapo.learning_rate),
      COTRL_KEY(S, "dapo.max_steps", "RL steps", c.dapo.max_steps),
      COTRL_KEY(D, "dapo.std_guard", "minimum group reward std", c.dapo.std_guard),
      COTRL_KEY(D, "dapo.temperature", "rollout sampling temperature", c.dapo.temperature),
      COTRL_KEY(B, "dapo.resample", "resample until enough groups survive filtering", c.dapo.resample),
      COTRL_KEY(S, "dapo.min_kept_groups", "kept groups required per step", c.dapo.min_kept_groups),
      COTRL_KEY(S, "dapo.max_resample_rounds", "sampling rounds per step", c.dapo.max_resample_rounds),
      COTRL_KEY(B, "dapo.skip_exhausted_steps", "skip a step instead of failing when nothing survives", c.dapo.skip_exhausted_steps),
      COTRL_KEY(S, "dapo.inner_epochs", "updates per sampled batch", c.dapo.inner_epochs),
      COTRL_KEY(S, "dapo.threads", "rollout worker threads", c.dapo.threads),

      COTRL_KEY(S, "sft.sample_count", "cold-start samples (half per label)", c.sft.sample_count),
      COTRL_KEY(S, "sft.epochs", "cold-start epochs", c.sft.epochs),
      COTRL_KEY(D, "sft.learning_rate", "cold-start step size", c.sft.learning_rate),
      COTRL_KEY(S, "sft.batch_size", "cold-start minibatch", c.sft.batch_size),

      COTRL_KEY(S, "base.sample_count", "uninformed pretraining samples", c.base.sample_count),
      COTRL_KEY(S, "base.epochs", "uninformed pretraining epochs", c.base.epochs),
      COTRL_KEY(D, "base.learning_rate", "uninformed pretraining step size", c.base.learning_rate),
      COTRL_KEY(S, "base.batch_size", "uninformed pretraining minibatch", c.base.batch_size),

      COTRL_KEY(S, "task.train_real", "real train records", c.task.manifest.train_real),
      COTRL_KEY(S, "task.train_fake", "fake train records", c.task.manifest.train_fake),
      COTRL_KEY(S, "task.test_real", "real test records", c.task.manifest.test_real),
      COTRL_KEY(S, "task.test_fake", "fake test records", c.task.manifest.test_fake),
      COTRL_KEY(S, "task.closed_real", "real closed-benchmark records", c.task.manifest.closed_real),
      COTRL_KEY(S, "task.closed_fake", "fake closed-benchmark records", c.task.manifest.closed_fake),
      COTRL_KEY(S, "task.heldout_count", "balanced held-out samples", c.task.heldout_count),
      COTRL_KEY(S, "task.min_frames", "rationale frame clauses, lower bound", c.task.style.min_frames),
      COTRL_KEY(S, "task.max_frames", "rationale frame clauses, upper bound", c.task.style.max_frames),
      COTRL_KEY(S, "task.min_clause_words", "words per clause, lower bound", c.task.style.min_clause_words),
      COTRL_KEY(S, "task.max_clause_words", "words per clause, upper bound", c.task.style.max_clause_words),
      COTRL_KEY(S, "task.min_think_tokens", "rationale length, lower bound", c.task.style.min_think_tokens),
      COTRL_KEY(S, "task.max_think_tokens", "rationale length, upper bound", c.task.style.max_think_tokens),
      COTRL_KEY(D, "task.wrong_rate", "template candidates with the wrong verdict", c.task.wrong_rate),
      COTRL_KEY(D, "task.malformed_rate", "template candidates with broken format", c.task.malformed_rate),
      COTRL_KEY(S, "task.filter_min_words", "description filter, minimum words", c.task.filter.min_words),
      COTRL_KEY(S, "task.filter_max_words", "description filter, maximum words", c.task.filter.max_words),
      COTRL_KEY(D, "task.filter_readability", "description filter, readability threshold", c.task.filter.readability_threshold),

      COTRL_KEY(S, "policy.vocab", "vocabulary size (must match the toy vocabulary)", c.policy.dims.vocab),
      COTRL_KEY(S, "policy.embed", "embedding width", c.policy.dims.embed),
      COTRL_KEY(S, "policy.window", "context window in tokens", c.policy.dims.window),
      COTRL_KEY(S, "policy.hidden", "hidden width", c.policy.dims.hidden),
      COTRL_KEY(S, "policy.lora_rank", "adapter rank for RL (0 trains all weights)", c.policy.lora_rank),
      COTRL_KEY(D, "policy.lora_alpha", "adapter alpha", c.policy.lora_alpha),
      COTRL_KEY(Str, "policy.lora_target", "adapter target: hidden | head", c.policy.lora_target),

      COTRL_KEY(Str, "eval.split", "heldout | test | closed_benchmark | train", c.eval.split),
      COTRL_KEY(Str, "eval.conditions", "comma-separated perturbation conditions", c.eval.conditions),
      COTRL_KEY(D, "eval.temperature", "decode temperature (0 = greedy)", c.eval.temperature),
      COTRL_KEY(D, "eval.frames_fps", "source frame rate of input frames", c.eval.frames_fps),
      COTRL_KEY(Str, "eval.checkpoint", "checkpoint to evaluate (empty: paths.rl_checkpoint)", c.eval.checkpoint),
      COTRL_KEY(B, "eval.ablation", "also train and score the SFT/RL strategy grid", c.eval.ablation),
  };
}

#undef COTRL_KEY

const std::map<std::string, const ConfigKey*>& KeyIndex() {
  static const std::map<std::string, const ConfigKey*> index = [] {
    std::map<std::string, const ConfigKey*> m;
    for (const auto& k : ConfigKeys()) m[k.key] = &k;
    return m;
  }();
  return index;
}

void Flatten(const json& node, const std::string& prefix, RunConfig& cfg) {
  for (const auto& [name, value] : node.items()) {
    const std::string key = prefix.empty() ? name : prefix + "." + name;
    if (value.is_object()) {
      Flatten(value, key, cfg);
    } else {
      SetConfigValue(cfg, key, value);
    }
  }
}

}  // namespace

const std::vector<ConfigKey>& ConfigKeys() {
  static const std::vector<ConfigKey> keys = BuildKeys();
  return keys;
}

RunConfig DefaultRunConfig() {
  RunConfig c;
  c.dapo.learning_rate = 1.0;
  c.dapo.max_steps = 1400;
  c.dapo.min_kept_groups = 4;
  c.dapo.max_resample_rounds = 16;
  return c;
}

void RunConfig::Validate() const {
  reward.Validate();
  dapo.Validate();
  sft.Validate();
  task.filter.Validate();
  if (policy.dims.vocab != 64) throw Error("bad_config", "policy.vocab must be 64 for the toy vocabulary");
  if (policy.dims.embed == 0 || policy.dims.window == 0 || policy.dims.hidden == 0)
    throw Error("bad_config", "policy dimensions must be positive");
  if (policy.lora_target != "hidden" && policy.lora_target != "head")
    throw Error("bad_config", "policy.lora_target must be hidden or head");
  if (base.batch_size == 0) throw Error("bad_config", "base.batch_size must be positive");
  if (eval.temperature < 0.0) throw Error("bad_config", "eval.temperature must be non-negative");
}

void SetConfigValue(RunConfig& cfg, const std::string& key, const nlohmann::json& value) {
  const auto& index = KeyIndex();
  auto it = index.find(key);
  if (it == index.end()) throw Error("unknown_key", "unknown config key '" + key + "'");
  it->second->set(cfg, value);
}

void SetConfigValueFromText(RunConfig& cfg, const std::string& key, const std::string& text) {
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded() || value.is_object() || value.is_array()) value = text;
  // Path-like and string keys keep the raw text even when it looks numeric.
  const auto& index = KeyIndex();
  auto it = index.find(key);
  if (it != index.end() && it->second->get(cfg).is_string()) value = text;
  SetConfigValue(cfg, key, value);
}

void ApplyConfigJson(RunConfig& cfg, const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error("bad_config", "config document must be a JSON object");
  Flatten(doc, "", cfg);
}

RunConfig LoadRunConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing_input", "cannot open config " + path.string());
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw Error("bad_config", "config " + path.string() + " is not valid JSON");
  RunConfig cfg = DefaultRunConfig();
  ApplyConfigJson(cfg, doc);
  return cfg;
}

nlohmann::json RunConfigToJson(const RunConfig& cfg) {
  json doc = json::object();
  for (const auto& k : ConfigKeys()) {
    const auto dot = k.key.find('.');
    if (dot == std::string::npos) {
      doc[k.key] = k.get(cfg);
    } else {
      doc[k.key.substr(0, dot)][k.key.substr(dot + 1)] = k.get(cfg);
    }
  }
  return doc;
}

}  // namespace cotrl
