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

// Toy autoregressive token policy: fixed-window embedding MLP with a tanh
// hidden layer and a softmax head. Exact log-probabilities and analytic
// gradients; optional low-rank adapters on the dense matrices.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cotrl/common.hpp"
#include "cotrl/rewards.hpp"
#include "cotrl/vocab.hpp"

namespace cotrl {

// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data[r * cols + c];
  }
  bool operator==(const Matrix&) const = default;
};

enum class MatrixId : std::uint32_t { kHidden = 1, kHead = 2 };

// Effective weight = W + (alpha / rank) * (B * A)^T, where W is stored as
// n_in x n_out, A is rank x n_in and B is n_out x rank.
struct LowRankAdapter {
  MatrixId target = MatrixId::kHidden;
  std::size_t rank = 16;
  double alpha = 32.0;
  Matrix a;
  Matrix b;

  double scale() const { return alpha / static_cast<double>(rank); }
  bool operator==(const LowRankAdapter&) const = default;
};

struct PolicyDims {
  std::size_t vocab = 64;
  std::size_t embed = 16;
  std::size_t window = 8;
  std::size_t hidden = 64;

  bool operator==(const PolicyDims&) const = default;
};

struct PolicyParams {
  PolicyDims dims;
  Matrix embed;          // V x d
  Matrix w1;             // (w*d) x h
  std::vector<double> b1;  // h
  Matrix w2;             // h x V
  std::vector<double> b2;  // V
  std::vector<LowRankAdapter> adapters;

  bool operator==(const PolicyParams&) const = default;
};

// Zero weights of the given shape (uniform next-token distribution).
PolicyParams ZeroPolicy(const PolicyDims& dims);
// Weights uniform in [-0.05, 0.05], biases zero; deterministic in seed.
PolicyParams InitPolicy(const PolicyDims& dims, std::uint64_t seed);

std::size_t ParameterCount(const PolicyParams& params);
// Base weights when no adapter is attached, otherwise adapter weights only.
std::vector<double*> TrainableParameters(PolicyParams& params);
std::vector<const double*> TrainableParameters(const PolicyParams& params);

// Adds (alpha/r) * B*A to the targeted matrices and drops the adapters.
PolicyParams MergeAdapters(const PolicyParams& params);

// Attaches an adapter: A uniform in [-0.05, 0.05] (seeded), B zero. Throws
// Error("bad_rank") when rank exceeds the smaller matrix dimension.
PolicyParams LoraWrap(const PolicyParams& params, MatrixId target,
                      std::size_t rank, double alpha, std::uint64_t seed);

// Scratch buffers for one forward/backward pass.
struct ForwardCache {
  std::vector<TokenId> window;
  std::vector<double> x;
  std::vector<double> z;
  std::vector<double> logp;  // V entries
};

// Fills cache.logp with next-token log-probabilities given the context.
// params must carry no adapters (see MergeAdapters).
void Forward(const PolicyParams& params, std::span<const TokenId> context,
             ForwardCache& cache);

// Convenience wrapper that merges adapters when present.
std::vector<double> TokenLogprobs(const PolicyParams& params,
                                  std::span<const TokenId> context);

// grad += coeff * d log p(token | context) / d weights, using the cache of a
// Forward() on the same context. grad has the base (adapter-free) shape.
void AccumulateLogprobGrad(const PolicyParams& params, const ForwardCache& cache,
                           TokenId token, double coeff, PolicyParams& grad);

// Maps a gradient with respect to merged weights onto the trainable
// parameters of params (identity without adapters).
PolicyParams ProjectGradient(const PolicyParams& params,
                             const PolicyParams& merged_grad);

// params += step * grad on trainable parameters.
void ApplyUpdate(PolicyParams& params, const PolicyParams& grad, double step);
double GradientNorm(const PolicyParams& grad);

struct Rollout {
  std::vector<TokenId> prompt_tokens;
  std::vector<TokenId> gen_tokens;
  std::vector<double> old_logprobs;  // temperature-1 log-probs at sampling
  RewardBreakdown reward;
};

struct RolloutGroup {
  std::vector<TokenId> prompt_tokens;
  Verdict label = Verdict::kReal;
  std::vector<Rollout> rollouts;
};

// Samples one response until end-of-sequence or budget tokens. A
// temperature of 0 selects greedy decoding (lowest index wins ties).
Rollout SampleResponse(const PolicyParams& merged, std::span<const TokenId> prompt,
                       double temperature, std::size_t budget, Rng& rng);

struct StepCache {
  std::vector<TokenId> window;  // last w context tokens, left-padded
  std::vector<double> z;        // tanh activations
  std::vector<double> logp;
};

// Decoder that folds the embedding and input projection into a per-position
// token table, so each step costs w*h additions instead of w*d*h products.
// Log-probs agree with Forward() up to summation order.
class Sampler {
 public:
  explicit Sampler(const PolicyParams& params);

  void Evaluate(std::span<const TokenId> context, StepCache& cache) const;
  Rollout Sample(std::span<const TokenId> prompt, double temperature, std::size_t budget,
                 Rng& rng) const;

  const PolicyParams& merged() const { return merged_; }

 private:
  void LogProbs(std::span<const TokenId> window, std::vector<double>& z,
                std::vector<double>& logp) const;

  PolicyParams merged_;
  std::vector<double> table_;  // (w * V) x h
};

// Sums coeff * grad log p(token) over many steps of one Sampler's policy.
// Hidden pre-activation gradients are pooled per (window slot, token) and
// expanded into embedding and input-projection gradients by Finish().
class GradientAccumulator {
 public:
  explicit GradientAccumulator(const Sampler& sampler);
  void Add(const StepCache& cache, TokenId token, double coeff);
  // Gradient with respect to the merged (adapter-free) parameters.
  PolicyParams Finish() const;

 private:
  const Sampler& sampler_;
  PolicyParams grad_;
  std::vector<double> pooled_;  // (w * V) x h
  std::vector<double> g_logit_, g_pre_;
};

// g rollouts, rollout i drawn from stream DeriveSeed(rng_seed, i).
RolloutGroup SampleGroup(const PolicyParams& params,
                         std::span<const TokenId> prompt, std::size_t g,
                         double temperature, std::size_t budget,
                         std::uint64_t rng_seed);
RolloutGroup SampleGroup(const Sampler& sampler, std::span<const TokenId> prompt,
                         std::size_t g, double temperature, std::size_t budget,
                         std::uint64_t rng_seed);

Rollout GreedyResponse(const PolicyParams& params,
                       std::span<const TokenId> prompt, std::size_t budget);

// Checkpoint: binary weights at `path` plus a text sidecar at path + ".meta".
void SaveCheckpoint(const PolicyParams& params, const std::filesystem::path& path);
PolicyParams LoadCheckpoint(const std::filesystem::path& path);

}  // namespace cotrl
