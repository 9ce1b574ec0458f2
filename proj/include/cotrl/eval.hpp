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

// Detection metrics, perturbation sweeps and report rendering.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cotrl/common.hpp"
#include "cotrl/task_gen.hpp"
#include "cotrl/video.hpp"

namespace cotrl {

struct EvalRecord {
  std::string id;
  Verdict truth = Verdict::kReal;  // REAL or FAKE
  Verdict predicted = Verdict::kInvalid;
  std::string subset;
};

struct MetricsReport {
  std::string condition = "baseline";
  double acc = 0.0;
  double weighted_f1 = 0.0;
  std::map<std::string, double> per_subset_acc;
  std::vector<std::string> fake_only_subsets;  // sorted
  std::size_t count = 0;
};

// INVALID predictions never match. Throws Error("empty_input").
double Accuracy(std::span<const EvalRecord> records);

// Support-weighted mean of the REAL and FAKE F1 scores. INVALID predictions
// are false negatives of their true class only; a class with no predictions
// or no support scores 0.
double WeightedF1(std::span<const EvalRecord> records);

// Per subset tag: fraction predicted FAKE for fake-only subsets, Accuracy()
// otherwise.
std::map<std::string, double> SubsetAccuracy(std::span<const EvalRecord> records);

MetricsReport Summarize(std::span<const EvalRecord> records, const std::string& condition);

// ---------------------------------------------------------------------------
// Perturbation conditions

enum class ConditionKind { kBaseline, kFrameDrop, kFps, kJpeg, kGaussian };

struct Condition {
  ConditionKind kind = ConditionKind::kBaseline;
  double value = 0.0;

  // "baseline", "frame_drop:0.5", "fps:2", "jpeg:90", "gaussian:10".
  std::string Id() const;
  // Table-style label: "Baseline", "50% Frame", "2.0 FPS", "JPEG 90", ...
  std::string Label() const;
};

Condition ParseCondition(const std::string& id);
// baseline, frame_drop 0.5, fps 2.0, jpeg 90, jpeg 80, gaussian 10.
std::vector<Condition> DefaultConditions();

// Feature-space analogues used for synthetic samples (features act as the
// per-frame signal at a nominal 4 FPS):
//   frame_drop f  keep ceil(f * 8) positions by the uniform index rule and
//                 hold the last kept value over dropped positions;
//   fps s         keep positions round(k * 4 / s), hold in between;
//   jpeg q        requantize to max(2, round(16 q / 100)) levels;
//   gaussian s    add N(0, 2 s / 255) noise, clamp to [-1, 1].
// The result is snapped back to the 16-level grid.
Features PerturbFeatures(const Features& f, const Condition& c, Rng& rng);

// Pixel-space application through the frame pipeline. The input clip is
// raw; the output is sampled per `spec`.
FrameClip ApplyCondition(const FrameClip& raw, const Condition& c, const SamplingSpec& spec,
                         std::uint64_t seed);

// Detector over synthetic samples; `stream` seeds any sampling it does.
using FeatureDetector = std::function<Verdict(const Features&, std::uint64_t stream)>;
using ClipDetector = std::function<Verdict(const FrameClip&)>;

struct LabeledClip {
  std::string id;
  FrameClip clip;
  Verdict label = Verdict::kReal;
  std::string subset;
};

// Evaluates every sample under the condition. Detector exceptions are
// recorded as INVALID predictions.
std::vector<EvalRecord> EvaluateFeatures(const FeatureDetector& detector,
                                         std::span<const SyntheticSample> samples,
                                         const Condition& condition, std::uint64_t seed);

std::vector<MetricsReport> RobustnessSweep(const FeatureDetector& detector,
                                           std::span<const SyntheticSample> samples,
                                           std::span<const Condition> conditions,
                                           std::uint64_t seed);

std::vector<MetricsReport> RobustnessSweepClips(const ClipDetector& detector,
                                                std::span<const LabeledClip> clips,
                                                std::span<const Condition> conditions,
                                                const SamplingSpec& spec, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Reports

struct AblationRow {
  std::string strategy;  // "none", "sft", "rl", "sft+rl"
  bool sft = false;
  bool rl = false;
  MetricsReport metrics;
};

std::string ReportsJson(std::span<const MetricsReport> reports);
std::vector<MetricsReport> ParseReportsJson(const std::string& text);
std::string ReportsCsv(std::span<const MetricsReport> reports);

// One column per fake-only subset tag, then Avg-ACC and Avg-F1 (percent).
std::string BenchmarkTableMarkdown(const MetricsReport& report, const std::string& method);
// Rows per strategy with SFT / RL check marks.
std::string AblationTableMarkdown(std::span<const AblationRow> rows);
std::string AblationJson(std::span<const AblationRow> rows);
std::vector<AblationRow> ParseAblationJson(const std::string& text);
// Rows per condition; columns ACC and F1 for each evaluated split.
std::string RobustnessTableMarkdown(
    const std::vector<std::pair<std::string, std::vector<MetricsReport>>>& by_split);

}  // namespace cotrl
