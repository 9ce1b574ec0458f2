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

// Run configuration: one nested JSON document whose leaves are addressed as
// "group.key". Every key is registered with a default and a description.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cotrl/dapo.hpp"
#include "cotrl/policy.hpp"
#include "cotrl/rewards.hpp"
#include "cotrl/sft.hpp"
#include "cotrl/task_gen.hpp"

namespace cotrl {

struct PathsConfig {
  std::string manifest = "run/manifest.jsonl";
  std::string samples = "run/samples.jsonl";
  std::string heldout = "run/heldout.jsonl";
  std::string base_checkpoint = "run/base.ckpt";
  std::string sft_samples = "run/coldstart.jsonl";
  std::string sft_checkpoint = "run/sft.ckpt";
  std::string rl_checkpoint = "run/rl.ckpt";
  std::string step_log = "run/steps.jsonl";
  std::string reports = "run/reports";
  std::string train_init;  // empty: sft_checkpoint
  std::string frames_in;
  std::string frames_out = "run/frames";
};

struct PolicyConfig {
  PolicyDims dims{64, 16, 10, 64};
  std::size_t lora_rank = 0;  // 0 trains all weights
  double lora_alpha = 32.0;
  std::string lora_target = "hidden";
};

struct TaskConfig {
  ManifestSpec manifest;
  std::size_t heldout_count = 1000;
  RationaleStyle style;
  double wrong_rate = 0.1;
  double malformed_rate = 0.05;
  FilterConfig filter;
};

// Uninformed pretraining that stands in for the base model.
struct BaseConfig {
  std::size_t sample_count = 2000;
  std::size_t epochs = 20;
  double learning_rate = 1.0;
  std::size_t batch_size = 16;
};

struct EvalConfig {
  std::string split = "heldout";  // heldout | test | closed_benchmark | train
  std::string conditions = "baseline,frame_drop:0.5,fps:2,jpeg:90,jpeg:80,gaussian:10";
  double temperature = 1.0;
  double frames_fps = 24.0;  // source rate for frame directories
  std::string checkpoint;     // empty: paths.rl_checkpoint
  bool ablation = false;      // also train and score the four strategy cells
};

struct RunConfig {
  std::uint64_t seed = 7;
  PathsConfig paths;
  RewardConfig reward{150, 30, 214, true, true};
  DapoConfig dapo;
  SftConfig sft;
  BaseConfig base;
  TaskConfig task;
  PolicyConfig policy;
  EvalConfig eval;

  // Cross-field checks; throws Error("bad_config").
  void Validate() const;
};

// RunConfig{} with the desk-scale training schedule applied on top of the
// module defaults (DAPO step size and batch filling, step count).
RunConfig DefaultRunConfig();

struct ConfigKey {
  std::string key;
  std::string doc;
  std::function<nlohmann::json(const RunConfig&)> get;
  std::function<void(RunConfig&, const nlohmann::json&)> set;
};

const std::vector<ConfigKey>& ConfigKeys();

// Sets one leaf. Throws Error("unknown_key") or Error("bad_value").
void SetConfigValue(RunConfig& cfg, const std::string& key, const nlohmann::json& value);
// CLI form: the text is read as JSON when it parses, otherwise as a string.
void SetConfigValueFromText(RunConfig& cfg, const std::string& key, const std::string& text);

// Applies every leaf of a nested JSON object onto cfg.
void ApplyConfigJson(RunConfig& cfg, const nlohmann::json& doc);
RunConfig LoadRunConfig(const std::filesystem::path& path);
nlohmann::json RunConfigToJson(const RunConfig& cfg);

}  // namespace cotrl
