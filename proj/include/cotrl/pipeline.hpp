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

// Stage functions shared by the CLI and the acceptance suite. Every stage is
// a pure function of the run configuration and its inputs.

#include <functional>
#include <string>
#include <vector>

#include "cotrl/config.hpp"
#include "cotrl/dapo.hpp"
#include "cotrl/eval.hpp"
#include "cotrl/sft.hpp"
#include "cotrl/task_gen.hpp"

namespace cotrl {

SyntheticCorpus GenerateCorpus(const RunConfig& cfg);
void WriteCorpus(const SyntheticCorpus& corpus, const PathsConfig& paths);
// Reads manifest, samples and held-out set; hidden weights are not stored.
SyntheticCorpus ReadCorpus(const PathsConfig& paths);

// Samples of the named split ("heldout" selects the held-out set).
std::vector<SyntheticSample> SplitSamples(const SyntheticCorpus& corpus, const std::string& split);

// Random init followed by SFT on uninformed but well-formed responses.
PolicyParams PretrainBase(const RunConfig& cfg, const std::vector<SyntheticSample>& train,
                          std::vector<SftEpochReport>* log = nullptr);

struct ColdStartOutput {
  std::vector<SftSample> samples;
  PolicyParams params;
  std::vector<SftEpochReport> log;
};
ColdStartOutput ColdStart(const RunConfig& cfg, const PolicyParams& base,
                          const std::vector<SyntheticSample>& train);

// Wraps adapters when policy.lora_rank > 0 and merges them after training.
TrainResult RlTrain(const RunConfig& cfg, const PolicyParams& start,
                    const std::vector<SyntheticSample>& train,
                    const std::function<void(const StepReport&)>& on_step = {});

// Decodes one response; temperature 0 is greedy. Returns the parsed verdict.
FeatureDetector PolicyDetector(const PolicyParams& params, double temperature,
                               std::size_t budget);

struct GenerationStats {
  double accuracy = 0.0;
  double format_rate = 0.0;
  double mean_length = 0.0;
  std::size_t count = 0;
};
GenerationStats MeasureGeneration(const PolicyParams& params,
                                  const std::vector<SyntheticSample>& samples,
                                  double temperature, std::size_t budget, std::uint64_t seed);

std::vector<MetricsReport> EvaluatePolicy(const RunConfig& cfg, const PolicyParams& params,
                                          const std::vector<SyntheticSample>& samples,
                                          const std::vector<Condition>& conditions);

std::vector<Condition> ParseConditionList(const std::string& list);

// The four strategy cells evaluated on the same samples with shared seeds.
std::vector<AblationRow> AblationRows(const RunConfig& cfg,
                                      const std::vector<SyntheticSample>& eval_samples,
                                      const PolicyParams& base, const PolicyParams& sft,
                                      const PolicyParams& rl_only, const PolicyParams& sft_rl);
std::vector<AblationRow> RunAblation(const RunConfig& cfg,
                                     const std::vector<SyntheticSample>& train,
                                     const std::vector<SyntheticSample>& eval_samples);

}  // namespace cotrl
