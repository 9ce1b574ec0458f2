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

// Independent reference implementations shared by the unit and acceptance
// tests.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "cotrl/dapo.hpp"
#include "cotrl/eval.hpp"
#include "cotrl/policy.hpp"
#include "cotrl/task_gen.hpp"
#include "cotrl/video.hpp"

namespace cotrl::oracle {

inline std::vector<double> Flat(const PolicyParams& p) {
  std::vector<double> out;
  for (const double* x : TrainableParameters(p)) out.push_back(*x);
  return out;
}

// Entrywise |a - b| / max(|a|, |b|, floor). The floor keeps entries that are
// zero up to roundoff from dominating.
inline double MaxRelError(const std::vector<double>& a, const std::vector<double>& b,
                          double floor = 1e-4) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

// Central differences of fn over the trainable parameters of p.
template <typename Fn>
std::vector<double> FiniteDifference(PolicyParams p, Fn fn, double delta = 1e-5) {
  std::vector<double> g;
  for (double* x : TrainableParameters(p)) {
    const double keep = *x;
    *x = keep + delta;
    const double up = fn(p);
    *x = keep - delta;
    const double dn = fn(p);
    *x = keep;
    g.push_back((up - dn) / (2 * delta));
  }
  return g;
}

// Random weights of the given scale.
inline PolicyParams RandomPolicy(const PolicyDims& dims, std::uint64_t seed, double scale) {
  PolicyParams p = ZeroPolicy(dims);
  Rng rng(seed);
  for (double* x : TrainableParameters(p)) *x = scale * UniformRange(rng, -1.0, 1.0);
  return p;
}

// A small batch with arbitrary tokens; old log-probs are the current ones
// shifted by up to +-spread so that some ratios land outside the clip range.
inline std::vector<ScoredGroup> RandomBatch(const PolicyParams& p, Rng& rng, std::size_t groups,
                                            std::size_t rollouts, std::size_t max_tokens,
                                            double spread) {
  const std::size_t vocab = p.dims.vocab;
  std::vector<ScoredGroup> out(groups);
  for (auto& sg : out) {
    const std::size_t plen = 1 + UniformIndex(rng, 4);
    for (std::size_t i = 0; i < plen; ++i)
      sg.group.prompt_tokens.push_back(static_cast<TokenId>(UniformIndex(rng, vocab)));
    for (std::size_t r = 0; r < rollouts; ++r) {
      Rollout ro;
      ro.prompt_tokens = sg.group.prompt_tokens;
      std::vector<TokenId> ctx = ro.prompt_tokens;
      const std::size_t n = 1 + UniformIndex(rng, max_tokens);
      for (std::size_t t = 0; t < n; ++t) {
        const TokenId tok = static_cast<TokenId>(UniformIndex(rng, vocab));
        ro.gen_tokens.push_back(tok);
        ro.old_logprobs.push_back(TokenLogprobs(p, ctx)[tok] + UniformRange(rng, -spread, spread));
        ctx.push_back(tok);
      }
      sg.group.rollouts.push_back(std::move(ro));
      sg.advantages.push_back(UniformRange(rng, -2.0, 2.0));
    }
  }
  return out;
}

// Token-level clipped surrogate evaluated directly from its definition.
inline double ClippedSurrogate(std::span<const ScoredGroup> groups, const PolicyParams& p,
                               double eps_low, double eps_high) {
  double sum = 0.0;
  std::size_t tokens = 0;
  for (const auto& sg : groups) {
    for (std::size_t i = 0; i < sg.group.rollouts.size(); ++i) {
      const Rollout& r = sg.group.rollouts[i];
      std::vector<TokenId> ctx = r.prompt_tokens;
      for (std::size_t t = 0; t < r.gen_tokens.size(); ++t) {
        const double ratio = std::exp(TokenLogprobs(p, ctx)[r.gen_tokens[t]] - r.old_logprobs[t]);
        const double a = sg.advantages[i];
        sum += std::min(ratio * a, std::clamp(ratio, 1 - eps_low, 1 + eps_high) * a);
        ctx.push_back(r.gen_tokens[t]);
        ++tokens;
      }
    }
  }
  return sum / static_cast<double>(tokens);
}

// (1 / N) sum_i sum_t A_i grad log pi(o_it) via the reference forward pass.
inline PolicyParams GroupBaselineGradient(std::span<const ScoredGroup> groups,
                                          const PolicyParams& p) {
  PolicyParams g = ZeroPolicy(p.dims);
  std::size_t tokens = 0;
  for (const auto& sg : groups)
    for (const auto& r : sg.group.rollouts) tokens += r.gen_tokens.size();
  for (const auto& sg : groups) {
    for (std::size_t i = 0; i < sg.group.rollouts.size(); ++i) {
      const Rollout& r = sg.group.rollouts[i];
      std::vector<TokenId> ctx = r.prompt_tokens;
      for (TokenId tok : r.gen_tokens) {
        ForwardCache cache;
        Forward(p, ctx, cache);
        AccumulateLogprobGrad(p, cache, tok, sg.advantages[i] / static_cast<double>(tokens), g);
        ctx.push_back(tok);
      }
    }
  }
  return g;
}

// Confusion-matrix metrics computed the long way: explicit 2x3 counts.
struct BruteMetrics {
  double acc = 0.0;
  double weighted_f1 = 0.0;
};

inline BruteMetrics BruteForceMetrics(std::span<const EvalRecord> records) {
  // counts[truth][predicted], predicted in {REAL, FAKE, INVALID}
  long counts[2][3] = {{0, 0, 0}, {0, 0, 0}};
  for (const auto& r : records)
    counts[static_cast<int>(r.truth)][static_cast<int>(r.predicted)]++;
  const long n = static_cast<long>(records.size());
  BruteMetrics m;
  m.acc = static_cast<double>(counts[0][0] + counts[1][1]) / static_cast<double>(n);
  // F1 = 2TP / (2TP + FP + FN), the count form of the harmonic mean.
  double weighted = 0.0;
  for (int c = 0; c < 2; ++c) {
    const long tp = counts[c][c];
    const long fp = counts[1 - c][c];
    const long support = counts[c][0] + counts[c][1] + counts[c][2];
    const long fn = support - tp;
    const double f1 = tp == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
    weighted += static_cast<double>(support) * f1;
  }
  m.weighted_f1 = weighted / static_cast<double>(n);
  return m;
}

// Runs the post-filter over the labeled fixture; returns one line per
// deviation from the expected outcome.
struct FilterFixtureResult {
  std::size_t cases = 0;
  std::map<std::string, std::size_t> per_rule;
  std::vector<std::string> deviations;
};

inline FilterFixtureResult RunFilterFixture(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing_input", "cannot open " + path);
  const auto cases = nlohmann::json::parse(in);
  FilterFixtureResult out;
  const FilterConfig cfg;
  for (const auto& c : cases) {
    const std::string text = c.at("text");
    const std::string expected = c.at("expected");
    const FilterReason got = PostFilter(text, cfg);
    ++out.cases;
    out.per_rule[c.at("rule")]++;
    if (expected != FilterReasonName(got)) {
      out.deviations.push_back(c.at("rule").get<std::string>() + "/" + c.at("note").get<std::string>() +
                               ": expected " + expected + ", got " + FilterReasonName(got));
    }
    // An accepted prompt is never rejected on a second pass.
    if (got == FilterReason::kAccepted && PostFilter(text, cfg) != FilterReason::kAccepted)
      out.deviations.push_back("re-check rejected an accepted case");
  }
  return out;
}

// Empty when the manifest keeps ids unique across splits and closed
// benchmark source tags out of train; otherwise the first violation.
inline std::string ManifestViolation(const DatasetManifest& m) {
  std::set<std::string> ids, train_tags;
  for (const auto& r : m.records) {
    if (!ids.insert(r.id).second) return "duplicate id " + r.id;
    if (r.split == Split::kTrain) train_tags.insert(r.source);
  }
  for (const auto& r : m.records)
    if (r.split == Split::kClosedBenchmark && train_tags.count(r.source))
      return "closed benchmark tag " + r.source + " appears in train";
  return "";
}

// A deterministic clip with smooth shading, edges and fine texture that
// drifts over time.
inline FrameClip TestClip(std::size_t frames, std::size_t h, std::size_t w, double fps = 24.0) {
  FrameClip clip;
  clip.source_fps = fps;
  clip.duration_s = static_cast<double>(frames) / fps;
  for (std::size_t t = 0; t < frames; ++t) {
    Frame f(h, w);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const double u = static_cast<double>(x) / w, v = static_cast<double>(y) / h;
        const double shade = 120 + 80 * std::sin(3.1 * u + 0.05 * t) * std::cos(2.3 * v);
        const double texture = 18 * std::sin(0.9 * x + 0.4 * y + 0.3 * t);
        const bool disk = (u - 0.6) * (u - 0.6) + (v - 0.4) * (v - 0.4) < 0.04;
        const double base = disk ? 210.0 : shade;
        f.at(0, y, x) = static_cast<std::uint8_t>(std::clamp(base + texture, 0.0, 255.0));
        f.at(1, y, x) = static_cast<std::uint8_t>(std::clamp(0.8 * base + 30 * v, 0.0, 255.0));
        f.at(2, y, x) = static_cast<std::uint8_t>(std::clamp(255 - base + 0.5 * texture, 0.0, 255.0));
      }
    clip.frames.push_back(std::move(f));
  }
  return clip;
}

inline FrameClip GrayClip(std::size_t frames, std::size_t h, std::size_t w, std::uint8_t level) {
  FrameClip clip;
  clip.duration_s = static_cast<double>(frames) / clip.source_fps;
  for (std::size_t t = 0; t < frames; ++t) {
    Frame f(h, w);
    std::fill(f.data.begin(), f.data.end(), level);
    clip.frames.push_back(std::move(f));
  }
  return clip;
}

inline double MeanPsnr(const FrameClip& a, const FrameClip& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.frames.size(); ++i) s += Psnr(a.frames[i], b.frames[i]);
  return s / static_cast<double>(a.frames.size());
}

}  // namespace cotrl::oracle
