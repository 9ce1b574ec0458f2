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

#include "cotrl/sft.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "cotrl/response_protocol.hpp"
#include "json.hpp"

namespace cotrl {

void SftConfig::Validate() const {
  if (sample_count == 0 || sample_count % 2 != 0) {
    throw Error("bad_config", "sft.sample_count must be positive and even");
  }
  if (batch_size == 0) throw Error("bad_config", "sft.batch_size must be positive");
}

namespace {

std::vector<std::size_t> ShuffledOrder(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[UniformIndex(rng, i)]);
  return order;
}

bool EndsWithEos(const std::vector<TokenId>& t) {
  return !t.empty() && t.back() == Vocabulary::kEos;
}

}  // namespace

std::vector<SftSample> CollectColdStart(const std::vector<SyntheticSample>& source,
                                        const ResponseSource& responses,
                                        const SftConfig& cfg) {
  cfg.Validate();
  const std::size_t quota = cfg.sample_count / 2;
  std::size_t n_real = 0, n_fake = 0;
  std::vector<SftSample> out;
  Rng rng(DeriveSeed(cfg.seed, 0xC01D));
  for (std::size_t i : ShuffledOrder(source.size(), DeriveSeed(cfg.seed, 0x0D))) {
    if (n_real == quota && n_fake == quota) break;
    const SyntheticSample& s = source[i];
    std::size_t& have = s.label == Verdict::kReal ? n_real : n_fake;
    if (have == quota) continue;
    std::vector<TokenId> target = responses(s, rng);
    if (!EndsWithEos(target)) continue;
    const ParsedResponse p = Parse(Vocabulary::Default().Decode(target));
    if (!p.format_ok || p.verdict != s.label) continue;
    ++have;
    out.push_back({s.id, s.prompt_tokens, std::move(target), s.label});
  }
  if (n_real < quota || n_fake < quota) {
    throw Error("source_exhausted",
                "cold-start source exhausted with " + std::to_string(n_real) + " REAL and " +
                    std::to_string(n_fake) + " FAKE of " + std::to_string(quota) + " each");
  }
  return out;
}

std::vector<SftSample> CollectFormatted(const std::vector<SyntheticSample>& source,
                                        const ResponseSource& responses,
                                        std::size_t count, std::uint64_t seed) {
  std::vector<SftSample> out;
  Rng rng(DeriveSeed(seed, 0xBA5E));
  for (std::size_t i : ShuffledOrder(source.size(), DeriveSeed(seed, 0x0E))) {
    if (out.size() == count) break;
    const SyntheticSample& s = source[i];
    std::vector<TokenId> target = responses(s, rng);
    if (!EndsWithEos(target)) continue;
    const ParsedResponse p = Parse(Vocabulary::Default().Decode(target));
    if (!p.format_ok || p.verdict == Verdict::kInvalid) continue;
    out.push_back({s.id, s.prompt_tokens, std::move(target), s.label});
  }
  if (out.size() < count) throw Error("source_exhausted", "not enough formatted samples");
  return out;
}

namespace {

double LossImpl(const PolicyParams& merged, const SftSample& sample, PolicyParams* grad) {
  if (sample.target_tokens.empty()) return 0.0;
  ForwardCache cache;
  std::vector<TokenId> context = sample.prompt_tokens;
  const double inv = 1.0 / static_cast<double>(sample.target_tokens.size());
  double loss = 0.0;
  for (TokenId tok : sample.target_tokens) {
    Forward(merged, context, cache);
    loss -= cache.logp[static_cast<std::size_t>(tok)] * inv;
    if (grad) AccumulateLogprobGrad(merged, cache, tok, -inv, *grad);
    context.push_back(tok);
  }
  return loss;
}

}  // namespace

double SftLoss(const PolicyParams& params, const SftSample& sample) {
  if (params.adapters.empty()) return LossImpl(params, sample, nullptr);
  return LossImpl(MergeAdapters(params), sample, nullptr);
}

double SftLossAndGradient(const PolicyParams& params, const SftSample& sample,
                          PolicyParams& grad) {
  const PolicyParams merged = params.adapters.empty() ? params : MergeAdapters(params);
  PolicyParams g = ZeroPolicy(merged.dims);
  const double loss = LossImpl(merged, sample, &g);
  grad = ProjectGradient(params, g);
  return loss;
}

double MeanSftLoss(const PolicyParams& params, const std::vector<SftSample>& samples) {
  const Sampler policy(params);
  double total = 0.0;
  StepCache cache;
  for (const auto& s : samples) {
    if (s.target_tokens.empty()) continue;
    std::vector<TokenId> context = s.prompt_tokens;
    double loss = 0.0;
    for (TokenId tok : s.target_tokens) {
      policy.Evaluate(context, cache);
      loss -= cache.logp[static_cast<std::size_t>(tok)];
      context.push_back(tok);
    }
    total += loss / static_cast<double>(s.target_tokens.size());
  }
  return samples.empty() ? 0.0 : total / static_cast<double>(samples.size());
}

PolicyParams SftTrain(PolicyParams params, const std::vector<SftSample>& samples,
                      const SftConfig& cfg, std::vector<SftEpochReport>* log) {
  if (samples.empty()) throw Error("bad_dataset", "SFT needs at least one sample");
  if (cfg.batch_size == 0) throw Error("bad_config", "sft.batch_size must be positive");
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = ShuffledOrder(samples.size(), DeriveSeed(cfg.seed, 0xE9, epoch));
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const Sampler policy(params);
      GradientAccumulator acc(policy);
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const SftSample& s = samples[order[k]];
        if (s.target_tokens.empty()) continue;
        StepCache cache;
        std::vector<TokenId> context = s.prompt_tokens;
        const double coeff = inv_batch / static_cast<double>(s.target_tokens.size());
        for (TokenId tok : s.target_tokens) {
          policy.Evaluate(context, cache);
          acc.Add(cache, tok, coeff);
          context.push_back(tok);
        }
      }
      // descend on the loss: grad holds d(-loss)/d theta
      ApplyUpdate(params, ProjectGradient(params, acc.Finish()), cfg.learning_rate);
    }
    if (log) log->push_back({epoch, MeanSftLoss(params, samples)});
  }
  return params;
}

void WriteSftSamples(const std::vector<SftSample>& samples, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("io_error", "cannot write " + path.string());
  const Vocabulary& v = Vocabulary::Default();
  for (const auto& s : samples) {
    std::vector<TokenId> target = s.target_tokens;
    nlohmann::json j = {{"id", s.id},
                        {"prompt", v.Decode(s.prompt_tokens)},
                        {"target", v.Decode(target)},
                        {"eos", EndsWithEos(target)},
                        {"label", VerdictName(s.label)}};
    out << j.dump() << "\n";
  }
}

std::vector<SftSample> ReadSftSamples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing_input", "cannot open " + path.string());
  const Vocabulary& v = Vocabulary::Default();
  std::vector<SftSample> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    SftSample s;
    s.id = j.value("id", "");
    s.prompt_tokens = v.Encode(j.at("prompt").get<std::string>());
    s.target_tokens = v.Encode(j.at("target").get<std::string>());
    if (j.value("eos", true)) s.target_tokens.push_back(Vocabulary::kEos);
    s.label = VerdictFromName(j.at("label").get<std::string>());
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace cotrl
