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

#include "cotrl/policy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cotrl {

namespace {

Matrix& TargetMatrix(PolicyParams& p, MatrixId id) {
  return id == MatrixId::kHidden ? p.w1 : p.w2;
}
const Matrix& TargetMatrix(const PolicyParams& p, MatrixId id) {
  return id == MatrixId::kHidden ? p.w1 : p.w2;
}

void FillUniform(std::vector<double>& v, Rng& rng, double bound) {
  for (double& x : v) x = UniformRange(rng, -bound, bound);
}

void ZeroAll(PolicyParams& p) {
  for (auto* m : {&p.embed, &p.w1, &p.w2}) std::fill(m->data.begin(), m->data.end(), 0.0);
  std::fill(p.b1.begin(), p.b1.end(), 0.0);
  std::fill(p.b2.begin(), p.b2.end(), 0.0);
  for (auto& ad : p.adapters) {
    std::fill(ad.a.data.begin(), ad.a.data.end(), 0.0);
    std::fill(ad.b.data.begin(), ad.b.data.end(), 0.0);
  }
}

}  // namespace

PolicyParams ZeroPolicy(const PolicyDims& dims) {
  if (dims.vocab == 0 || dims.embed == 0 || dims.window == 0 || dims.hidden == 0) {
    throw Error("bad_dims", "policy dimensions must be positive");
  }
  PolicyParams p;
  p.dims = dims;
  p.embed = Matrix(dims.vocab, dims.embed);
  p.w1 = Matrix(dims.window * dims.embed, dims.hidden);
  p.b1.assign(dims.hidden, 0.0);
  p.w2 = Matrix(dims.hidden, dims.vocab);
  p.b2.assign(dims.vocab, 0.0);
  return p;
}

PolicyParams InitPolicy(const PolicyDims& dims, std::uint64_t seed) {
  PolicyParams p = ZeroPolicy(dims);
  Rng rng(DeriveSeed(seed, 0x1417));
  FillUniform(p.embed.data, rng, 0.05);
  FillUniform(p.w1.data, rng, 0.05);
  FillUniform(p.w2.data, rng, 0.05);
  return p;
}

std::size_t ParameterCount(const PolicyParams& p) {
  std::size_t n = p.embed.data.size() + p.w1.data.size() + p.b1.size() +
                  p.w2.data.size() + p.b2.size();
  for (const auto& ad : p.adapters) n += ad.a.data.size() + ad.b.data.size();
  return n;
}

std::vector<double*> TrainableParameters(PolicyParams& p) {
  std::vector<double*> out;
  auto add = [&out](std::vector<double>& v) {
    for (double& x : v) out.push_back(&x);
  };
  if (p.adapters.empty()) {
    add(p.embed.data);
    add(p.w1.data);
    add(p.b1);
    add(p.w2.data);
    add(p.b2);
  } else {
    for (auto& ad : p.adapters) {
      add(ad.a.data);
      add(ad.b.data);
    }
  }
  return out;
}

std::vector<const double*> TrainableParameters(const PolicyParams& p) {
  auto mut = TrainableParameters(const_cast<PolicyParams&>(p));
  return {mut.begin(), mut.end()};
}

PolicyParams MergeAdapters(const PolicyParams& params) {
  PolicyParams out = params;
  out.adapters.clear();
  for (const auto& ad : params.adapters) {
    Matrix& w = TargetMatrix(out, ad.target);
    const double s = ad.scale();
    // w(i, j) += s * sum_k B(j, k) A(k, i)
    for (std::size_t i = 0; i < w.rows; ++i) {
      for (std::size_t j = 0; j < w.cols; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < ad.rank; ++k) acc += ad.b(j, k) * ad.a(k, i);
        w(i, j) += s * acc;
      }
    }
  }
  return out;
}

PolicyParams LoraWrap(const PolicyParams& params, MatrixId target,
                      std::size_t rank, double alpha, std::uint64_t seed) {
  const Matrix& w = TargetMatrix(params, target);
  if (rank == 0 || rank > std::min(w.rows, w.cols)) {
    throw Error("bad_rank", "adapter rank " + std::to_string(rank) +
                                " exceeds matrix dimensions " +
                                std::to_string(w.rows) + "x" + std::to_string(w.cols));
  }
  for (const auto& ad : params.adapters) {
    if (ad.target == target) throw Error("bad_rank", "matrix already has an adapter");
  }
  PolicyParams out = params;
  LowRankAdapter ad;
  ad.target = target;
  ad.rank = rank;
  ad.alpha = alpha;
  ad.a = Matrix(rank, w.rows);
  ad.b = Matrix(w.cols, rank);
  Rng rng(DeriveSeed(seed, 0x10A, static_cast<std::uint64_t>(target)));
  FillUniform(ad.a.data, rng, 0.05);
  out.adapters.push_back(std::move(ad));
  return out;
}

void Forward(const PolicyParams& p, std::span<const TokenId> context,
             ForwardCache& cache) {
  const std::size_t w = p.dims.window, d = p.dims.embed, h = p.dims.hidden,
                    v = p.dims.vocab;
  cache.window.assign(w, Vocabulary::kPad);
  const std::size_t take = std::min(w, context.size());
  std::copy(context.end() - static_cast<std::ptrdiff_t>(take), context.end(),
            cache.window.begin() + static_cast<std::ptrdiff_t>(w - take));

  cache.x.resize(w * d);
  for (std::size_t j = 0; j < w; ++j) {
    const double* row = &p.embed.data[static_cast<std::size_t>(cache.window[j]) * d];
    std::copy(row, row + d, cache.x.begin() + static_cast<std::ptrdiff_t>(j * d));
  }

  cache.z.assign(p.b1.begin(), p.b1.end());
  for (std::size_t i = 0; i < w * d; ++i) {
    const double xi = cache.x[i];
    const double* wrow = &p.w1.data[i * h];
    for (std::size_t k = 0; k < h; ++k) cache.z[k] += xi * wrow[k];
  }
  for (double& zk : cache.z) zk = std::tanh(zk);

  cache.logp.assign(p.b2.begin(), p.b2.end());
  for (std::size_t k = 0; k < h; ++k) {
    const double zk = cache.z[k];
    const double* wrow = &p.w2.data[k * v];
    for (std::size_t t = 0; t < v; ++t) cache.logp[t] += zk * wrow[t];
  }
  const double mx = *std::max_element(cache.logp.begin(), cache.logp.end());
  double sum = 0.0;
  for (double l : cache.logp) sum += std::exp(l - mx);
  const double lse = mx + std::log(sum);
  for (double& l : cache.logp) l -= lse;
}

std::vector<double> TokenLogprobs(const PolicyParams& params,
                                  std::span<const TokenId> context) {
  ForwardCache cache;
  if (params.adapters.empty()) {
    Forward(params, context, cache);
  } else {
    Forward(MergeAdapters(params), context, cache);
  }
  return cache.logp;
}

void AccumulateLogprobGrad(const PolicyParams& p, const ForwardCache& cache,
                           TokenId token, double coeff, PolicyParams& grad) {
  const std::size_t w = p.dims.window, d = p.dims.embed, h = p.dims.hidden,
                    v = p.dims.vocab;
  // d log p(token) / d logits = onehot(token) - softmax
  thread_local std::vector<double> g_logit, g_pre, g_x;
  g_logit.resize(v);
  for (std::size_t t = 0; t < v; ++t) g_logit[t] = -coeff * std::exp(cache.logp[t]);
  g_logit[static_cast<std::size_t>(token)] += coeff;

  for (std::size_t t = 0; t < v; ++t) grad.b2[t] += g_logit[t];
  g_pre.assign(h, 0.0);
  for (std::size_t k = 0; k < h; ++k) {
    const double zk = cache.z[k];
    const double* wrow = &p.w2.data[k * v];
    double* grow = &grad.w2.data[k * v];
    double acc = 0.0;
    for (std::size_t t = 0; t < v; ++t) {
      grow[t] += zk * g_logit[t];
      acc += wrow[t] * g_logit[t];
    }
    g_pre[k] = acc * (1.0 - zk * zk);
  }
  for (std::size_t k = 0; k < h; ++k) grad.b1[k] += g_pre[k];
  g_x.assign(w * d, 0.0);
  for (std::size_t i = 0; i < w * d; ++i) {
    const double xi = cache.x[i];
    const double* wrow = &p.w1.data[i * h];
    double* grow = &grad.w1.data[i * h];
    double acc = 0.0;
    for (std::size_t k = 0; k < h; ++k) {
      grow[k] += xi * g_pre[k];
      acc += wrow[k] * g_pre[k];
    }
    g_x[i] = acc;
  }
  for (std::size_t j = 0; j < w; ++j) {
    double* erow = &grad.embed.data[static_cast<std::size_t>(cache.window[j]) * d];
    for (std::size_t c = 0; c < d; ++c) erow[c] += g_x[j * d + c];
  }
}

PolicyParams ProjectGradient(const PolicyParams& params,
                             const PolicyParams& merged_grad) {
  if (params.adapters.empty()) return merged_grad;
  PolicyParams out = params;
  ZeroAll(out);
  for (std::size_t n = 0; n < params.adapters.size(); ++n) {
    const LowRankAdapter& ad = params.adapters[n];
    LowRankAdapter& g = out.adapters[n];
    const Matrix& gw = TargetMatrix(merged_grad, ad.target);
    const double s = ad.scale();
    // dA(k, i) = s * sum_j B(j, k) G(i, j);  dB(j, k) = s * sum_i G(i, j) A(k, i)
    for (std::size_t i = 0; i < gw.rows; ++i) {
      for (std::size_t j = 0; j < gw.cols; ++j) {
        const double gij = gw(i, j);
        if (gij == 0.0) continue;
        for (std::size_t k = 0; k < ad.rank; ++k) {
          g.a(k, i) += s * ad.b(j, k) * gij;
          g.b(j, k) += s * gij * ad.a(k, i);
        }
      }
    }
  }
  return out;
}

void ApplyUpdate(PolicyParams& params, const PolicyParams& grad, double step) {
  auto dst = TrainableParameters(params);
  auto src = TrainableParameters(grad);
  if (dst.size() != src.size()) {
    throw Error("shape_mismatch", "gradient does not match trainable parameters");
  }
  for (std::size_t i = 0; i < dst.size(); ++i) *dst[i] += step * *src[i];
}

double GradientNorm(const PolicyParams& grad) {
  double s = 0.0;
  for (const double* g : TrainableParameters(grad)) s += *g * *g;
  return std::sqrt(s);
}

Sampler::Sampler(const PolicyParams& params)
    : merged_(params.adapters.empty() ? params : MergeAdapters(params)) {
  const std::size_t w = merged_.dims.window, d = merged_.dims.embed,
                    h = merged_.dims.hidden, v = merged_.dims.vocab;
  table_.assign(w * v * h, 0.0);
  for (std::size_t j = 0; j < w; ++j) {
    for (std::size_t t = 0; t < v; ++t) {
      double* out = &table_[(j * v + t) * h];
      for (std::size_t c = 0; c < d; ++c) {
        const double e = merged_.embed(t, c);
        const double* wrow = &merged_.w1.data[(j * d + c) * h];
        for (std::size_t k = 0; k < h; ++k) out[k] += e * wrow[k];
      }
    }
  }
}

void Sampler::LogProbs(std::span<const TokenId> window, std::vector<double>& z,
                       std::vector<double>& logp) const {
  const std::size_t h = merged_.dims.hidden, v = merged_.dims.vocab;
  z.assign(merged_.b1.begin(), merged_.b1.end());
  for (std::size_t j = 0; j < window.size(); ++j) {
    const double* row = &table_[(j * v + static_cast<std::size_t>(window[j])) * h];
    for (std::size_t k = 0; k < h; ++k) z[k] += row[k];
  }
  for (double& zk : z) zk = std::tanh(zk);
  logp.assign(merged_.b2.begin(), merged_.b2.end());
  for (std::size_t k = 0; k < h; ++k) {
    const double zk = z[k];
    const double* wrow = &merged_.w2.data[k * v];
    for (std::size_t t = 0; t < v; ++t) logp[t] += zk * wrow[t];
  }
  const double mx = *std::max_element(logp.begin(), logp.end());
  double sum = 0.0;
  for (double l : logp) sum += std::exp(l - mx);
  const double lse = mx + std::log(sum);
  for (double& l : logp) l -= lse;
}

void Sampler::Evaluate(std::span<const TokenId> context, StepCache& cache) const {
  const std::size_t w = merged_.dims.window;
  cache.window.assign(w, Vocabulary::kPad);
  const std::size_t take = std::min(w, context.size());
  std::copy(context.end() - static_cast<std::ptrdiff_t>(take), context.end(),
            cache.window.begin() + static_cast<std::ptrdiff_t>(w - take));
  LogProbs(cache.window, cache.z, cache.logp);
}

GradientAccumulator::GradientAccumulator(const Sampler& sampler)
    : sampler_(sampler), grad_(ZeroPolicy(sampler.merged().dims)) {
  const auto& dims = sampler.merged().dims;
  pooled_.assign(dims.window * dims.vocab * dims.hidden, 0.0);
}

void GradientAccumulator::Add(const StepCache& cache, TokenId token, double coeff) {
  const PolicyParams& p = sampler_.merged();
  const std::size_t h = p.dims.hidden, v = p.dims.vocab;
  g_logit_.resize(v);
  for (std::size_t t = 0; t < v; ++t) g_logit_[t] = -coeff * std::exp(cache.logp[t]);
  g_logit_[static_cast<std::size_t>(token)] += coeff;
  for (std::size_t t = 0; t < v; ++t) grad_.b2[t] += g_logit_[t];
  g_pre_.assign(h, 0.0);
  for (std::size_t k = 0; k < h; ++k) {
    const double zk = cache.z[k];
    const double* wrow = &p.w2.data[k * v];
    double* grow = &grad_.w2.data[k * v];
    double acc = 0.0;
    for (std::size_t t = 0; t < v; ++t) {
      grow[t] += zk * g_logit_[t];
      acc += wrow[t] * g_logit_[t];
    }
    g_pre_[k] = acc * (1.0 - zk * zk);
  }
  for (std::size_t k = 0; k < h; ++k) grad_.b1[k] += g_pre_[k];
  for (std::size_t j = 0; j < cache.window.size(); ++j) {
    double* row = &pooled_[(j * v + static_cast<std::size_t>(cache.window[j])) * h];
    for (std::size_t k = 0; k < h; ++k) row[k] += g_pre_[k];
  }
}

PolicyParams GradientAccumulator::Finish() const {
  const PolicyParams& p = sampler_.merged();
  const std::size_t w = p.dims.window, d = p.dims.embed, h = p.dims.hidden,
                    v = p.dims.vocab;
  PolicyParams g = grad_;
  for (std::size_t j = 0; j < w; ++j) {
    for (std::size_t t = 0; t < v; ++t) {
      const double* pool = &pooled_[(j * v + t) * h];
      bool any = false;
      for (std::size_t k = 0; k < h && !any; ++k) any = pool[k] != 0.0;
      if (!any) continue;
      for (std::size_t c = 0; c < d; ++c) {
        const double e = p.embed(t, c);
        const double* wrow = &p.w1.data[(j * d + c) * h];
        double* grow = &g.w1.data[(j * d + c) * h];
        double acc = 0.0;
        for (std::size_t k = 0; k < h; ++k) {
          grow[k] += e * pool[k];
          acc += wrow[k] * pool[k];
        }
        g.embed(t, c) += acc;
      }
    }
  }
  return g;
}

Rollout Sampler::Sample(std::span<const TokenId> prompt, double temperature,
                        std::size_t budget, Rng& rng) const {
  const std::size_t w = merged_.dims.window;
  Rollout r;
  r.prompt_tokens.assign(prompt.begin(), prompt.end());
  // Sliding window, left-padded.
  std::vector<TokenId> window(w, Vocabulary::kPad);
  for (TokenId t : prompt) {
    std::rotate(window.begin(), window.begin() + 1, window.end());
    window.back() = t;
  }
  std::vector<double> z, logp, weights(merged_.dims.vocab);
  while (r.gen_tokens.size() < budget) {
    LogProbs(window, z, logp);
    TokenId next = 0;
    if (temperature <= 0.0) {
      next = static_cast<TokenId>(std::max_element(logp.begin(), logp.end()) - logp.begin());
    } else {
      double mx = -INFINITY;
      for (double l : logp) mx = std::max(mx, l / temperature);
      double total = 0.0;
      for (std::size_t t = 0; t < weights.size(); ++t) {
        weights[t] = std::exp(logp[t] / temperature - mx);
        total += weights[t];
      }
      double u = Uniform01(rng) * total;
      next = static_cast<TokenId>(weights.size() - 1);
      for (std::size_t t = 0; t < weights.size(); ++t) {
        if (u < weights[t]) {
          next = static_cast<TokenId>(t);
          break;
        }
        u -= weights[t];
      }
    }
    r.gen_tokens.push_back(next);
    r.old_logprobs.push_back(logp[static_cast<std::size_t>(next)]);
    std::rotate(window.begin(), window.begin() + 1, window.end());
    window.back() = next;
    if (next == Vocabulary::kEos) break;
  }
  return r;
}

Rollout SampleResponse(const PolicyParams& merged, std::span<const TokenId> prompt,
                       double temperature, std::size_t budget, Rng& rng) {
  return Sampler(merged).Sample(prompt, temperature, budget, rng);
}

RolloutGroup SampleGroup(const PolicyParams& params,
                         std::span<const TokenId> prompt, std::size_t g,
                         double temperature, std::size_t budget,
                         std::uint64_t rng_seed) {
  return SampleGroup(Sampler(params), prompt, g, temperature, budget, rng_seed);
}

RolloutGroup SampleGroup(const Sampler& sampler, std::span<const TokenId> prompt,
                         std::size_t g, double temperature, std::size_t budget,
                         std::uint64_t rng_seed) {
  if (g < 2) throw Error("bad_group", "group size must be at least 2");
  RolloutGroup group;
  group.prompt_tokens.assign(prompt.begin(), prompt.end());
  group.rollouts.reserve(g);
  for (std::size_t i = 0; i < g; ++i) {
    Rng rng(DeriveSeed(rng_seed, i));
    group.rollouts.push_back(sampler.Sample(prompt, temperature, budget, rng));
  }
  return group;
}

Rollout GreedyResponse(const PolicyParams& params,
                       std::span<const TokenId> prompt, std::size_t budget) {
  Rng unused(0);
  if (params.adapters.empty()) return SampleResponse(params, prompt, 0.0, budget, unused);
  return SampleResponse(MergeAdapters(params), prompt, 0.0, budget, unused);
}

// Checkpoint layout (all integers little-endian):
//   8 bytes  magic "COTRLPOL"
//   u32      format version (1)
//   u32 x 4  vocab, embed, window, hidden
//   u32      adapter count
//   per adapter: u32 target, u32 rank, f64 alpha
//   f64[]    embed, w1, b1, w2, b2, then per adapter A, B (row-major)
namespace {

constexpr char kMagic[8] = {'C', 'O', 'T', 'R', 'L', 'P', 'O', 'L'};
constexpr std::uint32_t kFormatVersion = 1;

void PutU32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 4);
}

void PutF64(std::ostream& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 8);
}

std::uint32_t GetU32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw Error("bad_checkpoint", "truncated checkpoint header");
  }
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double GetF64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) {
    throw Error("bad_checkpoint", "truncated checkpoint payload");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

std::vector<std::vector<double>*> PayloadOrder(PolicyParams& p) {
  std::vector<std::vector<double>*> out = {&p.embed.data, &p.w1.data, &p.b1,
                                           &p.w2.data, &p.b2};
  for (auto& ad : p.adapters) {
    out.push_back(&ad.a.data);
    out.push_back(&ad.b.data);
  }
  return out;
}

}  // namespace

void SaveCheckpoint(const PolicyParams& params, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io_error", "cannot write checkpoint: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  PutU32(out, kFormatVersion);
  PutU32(out, static_cast<std::uint32_t>(params.dims.vocab));
  PutU32(out, static_cast<std::uint32_t>(params.dims.embed));
  PutU32(out, static_cast<std::uint32_t>(params.dims.window));
  PutU32(out, static_cast<std::uint32_t>(params.dims.hidden));
  PutU32(out, static_cast<std::uint32_t>(params.adapters.size()));
  for (const auto& ad : params.adapters) {
    PutU32(out, static_cast<std::uint32_t>(ad.target));
    PutU32(out, static_cast<std::uint32_t>(ad.rank));
    PutF64(out, ad.alpha);
  }
  PolicyParams copy = params;
  for (auto* v : PayloadOrder(copy)) {
    for (double d : *v) PutF64(out, d);
  }
  if (!out) throw Error("io_error", "failed writing checkpoint: " + path.string());

  std::ofstream meta(path.string() + ".meta");
  meta << "format=cotrl-policy\n"
       << "version=" << kFormatVersion << "\n"
       << "vocab=" << params.dims.vocab << "\n"
       << "embed=" << params.dims.embed << "\n"
       << "window=" << params.dims.window << "\n"
       << "hidden=" << params.dims.hidden << "\n"
       << "adapters=" << params.adapters.size() << "\n"
       << "parameters=" << ParameterCount(params) << "\n"
       << "float=f64-le\n";
}

PolicyParams LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("missing_input", "cannot open checkpoint: " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || !std::equal(magic, magic + 8, kMagic)) {
    throw Error("bad_checkpoint", "not a policy checkpoint: " + path.string());
  }
  if (GetU32(in) != kFormatVersion) {
    throw Error("bad_checkpoint", "unsupported checkpoint version: " + path.string());
  }
  PolicyDims dims;
  dims.vocab = GetU32(in);
  dims.embed = GetU32(in);
  dims.window = GetU32(in);
  dims.hidden = GetU32(in);
  PolicyParams p = ZeroPolicy(dims);
  const std::uint32_t n_adapters = GetU32(in);
  for (std::uint32_t n = 0; n < n_adapters; ++n) {
    LowRankAdapter ad;
    const std::uint32_t target = GetU32(in);
    if (target != 1 && target != 2) throw Error("bad_checkpoint", "bad adapter target");
    ad.target = static_cast<MatrixId>(target);
    ad.rank = GetU32(in);
    ad.alpha = GetF64(in);
    const Matrix& w = TargetMatrix(p, ad.target);
    ad.a = Matrix(ad.rank, w.rows);
    ad.b = Matrix(w.cols, ad.rank);
    p.adapters.push_back(std::move(ad));
  }
  for (auto* v : PayloadOrder(p)) {
    for (double& d : *v) d = GetF64(in);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error("bad_checkpoint", "trailing bytes in checkpoint: " + path.string());
  }
  return p;
}

}  // namespace cotrl
