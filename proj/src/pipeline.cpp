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

#include "cotrl/pipeline.hpp"

#include <set>
#include <sstream>

#include "cotrl/response_protocol.hpp"

namespace cotrl {
namespace {

// Stream tags for the stages.
constexpr std::uint64_t kCorpusStream = 0xDA7A;
constexpr std::uint64_t kBaseStream = 0xBA5E;
constexpr std::uint64_t kColdStartStream = 0xC01D;
constexpr std::uint64_t kRlStream = 0x5EED;
constexpr std::uint64_t kEvalStream = 0xE7A1;

}  // namespace

SyntheticCorpus GenerateCorpus(const RunConfig& cfg) {
  return BuildSyntheticCorpus(cfg.task.manifest, cfg.task.heldout_count,
                              DeriveSeed(cfg.seed, kCorpusStream));
}

void WriteCorpus(const SyntheticCorpus& corpus, const PathsConfig& paths) {
  WriteManifest(corpus.manifest, paths.manifest);
  WriteSamples(corpus.samples, paths.samples);
  WriteSamples(corpus.heldout, paths.heldout);
}

SyntheticCorpus ReadCorpus(const PathsConfig& paths) {
  SyntheticCorpus c;
  c.manifest = ReadManifest(paths.manifest);
  c.samples = ReadSamples(paths.samples);
  c.heldout = ReadSamples(paths.heldout);
  return c;
}

std::vector<SyntheticSample> SplitSamples(const SyntheticCorpus& corpus, const std::string& split) {
  if (split == "heldout") return corpus.heldout;
  const Split want = SplitFromName(split);
  std::map<std::string, const SyntheticSample*> by_id;
  for (const auto& s : corpus.samples) by_id[s.id] = &s;
  std::vector<SyntheticSample> out;
  for (const auto& rec : corpus.manifest.records) {
    if (rec.split != want) continue;
    auto it = by_id.find(rec.payload);
    if (it == by_id.end())
      throw Error("missing_input", "manifest record " + rec.id + " has no sample '" + rec.payload + "'");
    out.push_back(*it->second);
  }
  if (out.empty()) throw Error("empty_input", "split '" + split + "' has no samples");
  return out;
}

PolicyParams PretrainBase(const RunConfig& cfg, const std::vector<SyntheticSample>& train,
                          std::vector<SftEpochReport>* log) {
  PolicyParams params = InitPolicy(cfg.policy.dims, DeriveSeed(cfg.seed, kBaseStream, 0));
  if (cfg.base.sample_count == 0 || cfg.base.epochs == 0) return params;
  const auto samples = CollectFormatted(train, UninformedResponseSource(cfg.task.style),
                                        cfg.base.sample_count, DeriveSeed(cfg.seed, kBaseStream, 1));
  SftConfig sft;
  sft.sample_count = samples.size() + samples.size() % 2;
  sft.epochs = cfg.base.epochs;
  sft.learning_rate = cfg.base.learning_rate;
  sft.batch_size = cfg.base.batch_size;
  sft.seed = DeriveSeed(cfg.seed, kBaseStream, 2);
  return SftTrain(std::move(params), samples, sft, log);
}

ColdStartOutput ColdStart(const RunConfig& cfg, const PolicyParams& base,
                          const std::vector<SyntheticSample>& train) {
  SftConfig sft = cfg.sft;
  sft.seed = DeriveSeed(cfg.seed, kColdStartStream);
  ColdStartOutput out;
  out.samples = CollectColdStart(
      train, TemplateResponseSource(cfg.task.style, cfg.task.wrong_rate, cfg.task.malformed_rate), sft);
  out.params = SftTrain(base, out.samples, sft, &out.log);
  return out;
}

TrainResult RlTrain(const RunConfig& cfg, const PolicyParams& start,
                    const std::vector<SyntheticSample>& train,
                    const std::function<void(const StepReport&)>& on_step) {
  PolicyParams init = start;
  if (cfg.policy.lora_rank > 0) {
    const MatrixId target = cfg.policy.lora_target == "head" ? MatrixId::kHead : MatrixId::kHidden;
    init = LoraWrap(MergeAdapters(start), target, cfg.policy.lora_rank, cfg.policy.lora_alpha,
                    DeriveSeed(cfg.seed, kRlStream, 1));
  }
  TrainResult result = TrainLoop(std::move(init), cfg.dapo, cfg.reward, train,
                                 DeriveSeed(cfg.seed, kRlStream), on_step);
  if (!result.params.adapters.empty()) result.params = MergeAdapters(result.params);
  return result;
}

FeatureDetector PolicyDetector(const PolicyParams& params, double temperature,
                               std::size_t budget) {
  auto sampler = std::make_shared<const Sampler>(params);
  return [sampler, temperature, budget](const Features& f, std::uint64_t stream) {
    Rng rng(stream);
    const auto prompt = PromptTokens(f);
    const Rollout r = sampler->Sample(prompt, temperature, budget, rng);
    return Parse(Vocabulary::Default().Decode(r.gen_tokens)).verdict;
  };
}

GenerationStats MeasureGeneration(const PolicyParams& params,
                                  const std::vector<SyntheticSample>& samples,
                                  double temperature, std::size_t budget, std::uint64_t seed) {
  const Sampler sampler(params);
  GenerationStats st;
  std::size_t correct = 0, formatted = 0, tokens = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    Rng rng(DeriveSeed(seed, 0xDE7E, i));
    const Rollout r = sampler.Sample(samples[i].prompt_tokens, temperature, budget, rng);
    const ParsedResponse p = Parse(Vocabulary::Default().Decode(r.gen_tokens));
    if (p.format_ok) ++formatted;
    if (p.verdict == samples[i].label) ++correct;
    tokens += r.gen_tokens.size();
  }
  st.count = samples.size();
  if (st.count > 0) {
    const double n = static_cast<double>(st.count);
    st.accuracy = static_cast<double>(correct) / n;
    st.format_rate = static_cast<double>(formatted) / n;
    st.mean_length = static_cast<double>(tokens) / n;
  }
  return st;
}

std::vector<Condition> ParseConditionList(const std::string& list) {
  std::vector<Condition> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(ParseCondition(item.substr(b, e - b + 1)));
  }
  if (out.empty()) throw Error("bad_condition", "empty condition list");
  return out;
}

std::vector<MetricsReport> EvaluatePolicy(const RunConfig& cfg, const PolicyParams& params,
                                          const std::vector<SyntheticSample>& samples,
                                          const std::vector<Condition>& conditions) {
  const auto detector = PolicyDetector(params, cfg.eval.temperature, cfg.reward.l_budget);
  return RobustnessSweep(detector, samples, conditions, DeriveSeed(cfg.seed, kEvalStream));
}

std::vector<AblationRow> RunAblation(const RunConfig& cfg,
                                     const std::vector<SyntheticSample>& train,
                                     const std::vector<SyntheticSample>& eval_samples) {
  const PolicyParams base = PretrainBase(cfg, train);
  const PolicyParams sft = ColdStart(cfg, base, train).params;
  return AblationRows(cfg, eval_samples, base, sft, RlTrain(cfg, base, train).params,
                      RlTrain(cfg, sft, train).params);
}

std::vector<AblationRow> AblationRows(const RunConfig& cfg,
                                      const std::vector<SyntheticSample>& eval_samples,
                                      const PolicyParams& base, const PolicyParams& sft,
                                      const PolicyParams& rl_only, const PolicyParams& sft_rl) {
  const std::vector<Condition> baseline = {Condition{}};
  auto row = [&](std::string name, bool s, bool r, const PolicyParams& p) {
    AblationRow out;
    out.strategy = std::move(name);
    out.sft = s;
    out.rl = r;
    out.metrics = EvaluatePolicy(cfg, p, eval_samples, baseline).front();
    return out;
  };
  return {row("none", false, false, base), row("sft", true, false, sft),
          row("rl", false, true, rl_only), row("sft+rl", true, true, sft_rl)};
}

}  // namespace cotrl
