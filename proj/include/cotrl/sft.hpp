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

// Cold-start supervised fine-tuning on balanced, filtered formatted samples.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "cotrl/policy.hpp"
#include "cotrl/task_gen.hpp"

namespace cotrl {

struct SftSample {
  std::string id;
  std::vector<TokenId> prompt_tokens;
  std::vector<TokenId> target_tokens;  // formatted response ending in <eos>
  Verdict label = Verdict::kReal;
};

struct SftConfig {
  std::size_t sample_count = 1000;  // even; half per label
  std::size_t epochs = 30;
  double learning_rate = 0.5;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;

  void Validate() const;
};

// Walks the source in a seeded order, asks the response source for one
// candidate per sample and keeps format-valid, label-correct candidates
// until each label has sample_count / 2. Throws Error("source_exhausted").
std::vector<SftSample> CollectColdStart(const std::vector<SyntheticSample>& source,
                                        const ResponseSource& responses,
                                        const SftConfig& cfg);

// Format-valid candidates regardless of verdict; used to build the
// label-uninformed base policy.
std::vector<SftSample> CollectFormatted(const std::vector<SyntheticSample>& source,
                                        const ResponseSource& responses,
                                        std::size_t count, std::uint64_t seed);

// Mean next-token NLL of the target given prompt + preceding target tokens.
double SftLoss(const PolicyParams& params, const SftSample& sample);

// Loss plus its gradient with respect to the trainable parameters.
double SftLossAndGradient(const PolicyParams& params, const SftSample& sample,
                          PolicyParams& grad);

struct SftEpochReport {
  std::size_t epoch = 0;
  double mean_loss = 0.0;  // full pass over the samples after the epoch
};

// Minibatch SGD on the mean loss.
PolicyParams SftTrain(PolicyParams params, const std::vector<SftSample>& samples,
                      const SftConfig& cfg, std::vector<SftEpochReport>* log = nullptr);

double MeanSftLoss(const PolicyParams& params, const std::vector<SftSample>& samples);

// JSON Lines with prompt text, target text and label.
void WriteSftSamples(const std::vector<SftSample>& samples, const std::filesystem::path& path);
std::vector<SftSample> ReadSftSamples(const std::filesystem::path& path);

}  // namespace cotrl
