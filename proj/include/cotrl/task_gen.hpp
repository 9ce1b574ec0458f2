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

// Synthetic explainable-detection task, template rationales, the
// prompt-construction pipeline (seed sampling, description generation,
// post-filtering) and dataset manifests.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "cotrl/common.hpp"
#include "cotrl/vocab.hpp"

namespace cotrl {

// ---------------------------------------------------------------------------
// Synthetic task

inline constexpr std::size_t kFeatureCount = 8;
using Features = std::array<double, kFeatureCount>;

struct SyntheticSample {
  std::string id;
  std::string source;  // generator tag; empty when not assigned
  Features features{};
  Verdict label = Verdict::kReal;
  std::vector<TokenId> prompt_tokens;
};

// 16 uniform levels over [-1, 1]; level centers are -1 + (2k + 1) / 16.
std::size_t QuantizeFeature(double x);
double LevelCenter(std::size_t level);
// Snaps every feature to its level center.
Features SnapToLevels(const Features& f);

// <video> followed by one level token per feature.
std::vector<TokenId> PromptTokens(const Features& f);

// FAKE iff weights . features > 0; the boundary (== 0) is REAL.
Verdict LabelRule(const Features& f, const Features& hidden_weights);

// Hidden rule weights, uniform in [-1, 1] per component.
Features HiddenWeights(std::uint64_t seed);

struct TaskSet {
  Features hidden_weights{};
  std::vector<SyntheticSample> samples;   // exactly n/2 per label
  std::vector<SyntheticSample> heldout;   // same rule, disjoint stream
};

// Features are drawn on the level grid and rejection-sampled so both
// splits are exactly balanced. n and n_heldout must be even.
TaskSet BuildTaskSet(std::size_t n, std::size_t n_heldout, std::uint64_t seed);

// One balanced sample stream for an explicit rule (used for manifests).
std::vector<SyntheticSample> DrawBalanced(std::size_t n, const Features& hidden_weights,
                                          std::uint64_t seed,
                                          const std::string& id_prefix);

// ---------------------------------------------------------------------------
// Template rationales: "<think> f<s> <lead> ... f<s+1> <evidence> ...
// </think> <answer> v </answer> <eos>". Clauses walk a contiguous run of
// frame markers from a random start; each opens with an evidence word for
// the believed verdict, the first with that verdict's lead word ("natural"
// or "warped").

struct RationaleStyle {
  std::size_t min_frames = 2;
  std::size_t max_frames = 5;
  std::size_t min_clause_words = 1;
  std::size_t max_clause_words = 4;
  std::size_t min_think_tokens = 6;
  std::size_t max_think_tokens = 24;
};

std::vector<TokenId> TemplateRationale(Verdict belief, const RationaleStyle& style,
                                       Rng& rng);

// Pluggable response source for cold-start collection.
using ResponseSource =
    std::function<std::vector<TokenId>(const SyntheticSample&, Rng&)>;

// Template generator that answers with the true label, except that a
// fraction of candidates carry the wrong verdict or a broken format.
ResponseSource TemplateResponseSource(const RationaleStyle& style,
                                      double wrong_rate = 0.1,
                                      double malformed_rate = 0.05);

// Answers with a coin-flip belief independent of the sample: formatted but
// uninformed responses.
ResponseSource UninformedResponseSource(const RationaleStyle& style);

// ---------------------------------------------------------------------------
// Prompt pipeline, stage 1: seeds

struct SeedCategory {
  std::string name;
  double weight = 0.0;
  std::vector<std::string> keywords;
};

struct AttributeGroup {
  std::string name;
  std::vector<SeedCategory> categories;
};

struct SeedPool {
  std::vector<AttributeGroup> groups;

  // Every category nonempty and weights summing to 1 (within 1e-9) per group.
  void Validate() const;
  static SeedPool Default();
};

// One (category, keyword) draw per attribute group.
struct SeedTuple {
  std::vector<std::string> categories;
  std::vector<std::string> keywords;
};

std::vector<SeedTuple> SampleSeeds(const SeedPool& pool, std::size_t n,
                                   std::uint64_t seed);

// ---------------------------------------------------------------------------
// Stage 2: description generation

struct CompletionRequest {
  std::string system;
  std::string user;
  double temperature = 1.0;
};

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string id() const = 0;
  // Throws on failure.
  virtual std::string Complete(const CompletionRequest& request) = 0;
};

// Offline grammar-template expander; deterministic for a given seed and
// request sequence.
class TemplateClient : public LlmClient {
 public:
  explicit TemplateClient(std::uint64_t seed, std::string id = "template");
  std::string id() const override { return id_; }
  std::string Complete(const CompletionRequest& request) override;

 private:
  std::string id_;
  Rng rng_;
};

// System prompt carrying the physical and aesthetic constraints.
std::string DescriptionSystemPrompt();
std::string DescriptionUserPrompt(const SeedTuple& seeds);

struct GenerateResult {
  std::string text;
  std::string client_id;
};

// Picks a client uniformly at random and retries it up to max_retries times
// after the first failure; then throws Error("client_failed") naming it.
GenerateResult GenerateDescription(const SeedTuple& seeds,
                                   std::vector<std::shared_ptr<LlmClient>>& clients,
                                   double temperature, Rng& rng,
                                   std::size_t max_retries = 2);

// ---------------------------------------------------------------------------
// Stage 3: post-filtering

struct FilterConfig {
  std::size_t min_words = 20;
  std::size_t max_words = 120;
  std::string allowed_punctuation = ".,;:'\"!?-()";
  bool allow_digits = true;
  double readability_threshold = 0.6;

  void Validate() const;
};

enum class FilterReason {
  kAccepted,
  kLengthTooShort,
  kLengthTooLong,
  kSpecialCharacters,
  kReadability,
};

const char* FilterReasonName(FilterReason r);

// Readability score in [0, 1].
using ReadabilityJudge = std::function<double(std::string_view)>;

// Product of three terms: distinct word-trigram ratio, letter share of
// non-space characters, and a sentence-length term that is 1 for 4..40
// words per sentence and decays outside.
double HeuristicReadability(std::string_view text);

// Length, special characters, readability; first failure wins.
FilterReason PostFilter(std::string_view candidate, const FilterConfig& cfg,
                        const ReadabilityJudge& judge = HeuristicReadability);

std::size_t WordCount(std::string_view text);

// ---------------------------------------------------------------------------
// Manifests

enum class Split { kTrain, kTest, kClosedBenchmark };
const char* SplitName(Split s);
Split SplitFromName(const std::string& name);

struct ManifestRecord {
  std::string id;
  Split split = Split::kTrain;
  std::string source;
  Verdict label = Verdict::kReal;
  std::string payload;
};

struct DatasetManifest {
  std::vector<ManifestRecord> records;
  std::map<std::string, std::size_t> split_counts;
  std::vector<std::string> generator_tags;
  std::uint64_t seed = 0;
};

struct Source {
  std::string tag;
  Verdict label = Verdict::kReal;
  std::vector<std::string> payloads;  // consumed in order
};

// Split sizes; defaults are a 1/100 scale of the reference corpus layout.
struct ManifestSpec {
  std::string train_real_tag = "real-corpus";
  std::size_t train_real = 1000;
  std::size_t train_fake = 1000;
  std::vector<std::pair<std::string, double>> fake_tags = {
      {"gen-open-a", 0.4}, {"gen-open-b", 0.1}, {"gen-api-c", 0.3}, {"gen-api-d", 0.2}};
  std::size_t test_real = 10;
  std::size_t test_fake = 10;
  std::string closed_real_tag = "real-closed";
  std::size_t closed_real = 10;
  std::size_t closed_fake = 10;
  std::vector<std::pair<std::string, double>> closed_fake_tags = {
      {"closed-x", 0.5}, {"closed-y", 0.3}, {"closed-z", 0.2}};
};

// Apportions count across weighted tags by largest remainder.
std::vector<std::size_t> Apportion(std::size_t count,
                                   const std::vector<std::pair<std::string, double>>& tags);

// Throws Error("bad_manifest") on empty or insufficient sources and on any
// closed-benchmark tag shared with the train split.
DatasetManifest BuildManifest(const std::vector<Source>& sources,
                              const ManifestSpec& spec, std::uint64_t seed);

// Builds a synthetic sample per manifest slot (payload = sample id) and the
// matching manifest.
struct SyntheticCorpus {
  DatasetManifest manifest;
  std::vector<SyntheticSample> samples;  // every manifest payload, by id
  std::vector<SyntheticSample> heldout;
  Features hidden_weights{};
};
SyntheticCorpus BuildSyntheticCorpus(const ManifestSpec& spec, std::size_t n_heldout,
                                     std::uint64_t seed);

// JSON Lines; the first line is a header record.
void WriteManifest(const DatasetManifest& m, const std::filesystem::path& path);
DatasetManifest ReadManifest(const std::filesystem::path& path);

void WriteSamples(const std::vector<SyntheticSample>& samples,
                  const std::filesystem::path& path);
std::vector<SyntheticSample> ReadSamples(const std::filesystem::path& path);

}  // namespace cotrl
