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

#include "cotrl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "json.hpp"

namespace cotrl {
namespace {

void RequireNonEmpty(std::span<const EvalRecord> records) {
  if (records.empty()) throw Error("empty_input", "no evaluation records");
}

double ClassF1(std::span<const EvalRecord> records, Verdict cls) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& r : records) {
    const bool truth = r.truth == cls;
    const bool pred = r.predicted == cls;
    if (truth && pred) ++tp;
    if (!truth && pred) ++fp;
    if (truth && !pred) ++fn;
  }
  const std::size_t denom = 2 * tp + fp + fn;
  if (tp == 0) return 0.0;
  return static_cast<double>(2 * tp) / static_cast<double>(denom);
}

std::string Fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string Percent(double v) { return Fixed(100.0 * v, 1); }

// Hold the most recent kept value over positions that were not kept.
Features HoldPositions(const Features& f, const std::vector<std::size_t>& kept) {
  Features out = f;
  std::vector<bool> mask(f.size(), false);
  for (std::size_t k : kept) mask[std::min(k, f.size() - 1)] = true;
  double held = f[0];
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (mask[i]) held = f[i];
    out[i] = held;
  }
  return out;
}

}  // namespace

double Accuracy(std::span<const EvalRecord> records) {
  RequireNonEmpty(records);
  std::size_t hit = 0;
  for (const auto& r : records)
    if (r.predicted != Verdict::kInvalid && r.predicted == r.truth) ++hit;
  return static_cast<double>(hit) / static_cast<double>(records.size());
}

double WeightedF1(std::span<const EvalRecord> records) {
  RequireNonEmpty(records);
  std::size_t real = 0, fake = 0;
  for (const auto& r : records) (r.truth == Verdict::kFake ? fake : real)++;
  const double n = static_cast<double>(records.size());
  return (static_cast<double>(real) * ClassF1(records, Verdict::kReal) +
          static_cast<double>(fake) * ClassF1(records, Verdict::kFake)) /
         n;
}

std::map<std::string, double> SubsetAccuracy(std::span<const EvalRecord> records) {
  std::map<std::string, std::vector<EvalRecord>> groups;
  for (const auto& r : records) groups[r.subset].push_back(r);
  std::map<std::string, double> out;
  for (const auto& [tag, group] : groups) {
    const bool fake_only = std::all_of(group.begin(), group.end(),
                                       [](const EvalRecord& r) { return r.truth == Verdict::kFake; });
    if (fake_only) {
      std::size_t predicted_fake = 0;
      for (const auto& r : group)
        if (r.predicted == Verdict::kFake) ++predicted_fake;
      out[tag] = static_cast<double>(predicted_fake) / static_cast<double>(group.size());
    } else {
      out[tag] = Accuracy(group);
    }
  }
  return out;
}

MetricsReport Summarize(std::span<const EvalRecord> records, const std::string& condition) {
  MetricsReport rep;
  rep.condition = condition;
  rep.acc = Accuracy(records);
  rep.weighted_f1 = WeightedF1(records);
  rep.per_subset_acc = SubsetAccuracy(records);
  std::map<std::string, bool> fake_only;
  for (const auto& r : records) {
    auto [it, fresh] = fake_only.emplace(r.subset, true);
    it->second = it->second && r.truth == Verdict::kFake;
  }
  for (const auto& [tag, only] : fake_only)
    if (only) rep.fake_only_subsets.push_back(tag);
  rep.count = records.size();
  return rep;
}

// ---------------------------------------------------------------------------

std::string Condition::Id() const {
  std::ostringstream os;
  switch (kind) {
    case ConditionKind::kBaseline: return "baseline";
    case ConditionKind::kFrameDrop: os << "frame_drop:" << value; break;
    case ConditionKind::kFps: os << "fps:" << value; break;
    case ConditionKind::kJpeg: os << "jpeg:" << value; break;
    case ConditionKind::kGaussian: os << "gaussian:" << value; break;
  }
  return os.str();
}

std::string Condition::Label() const {
  switch (kind) {
    case ConditionKind::kBaseline: return "Baseline";
    case ConditionKind::kFrameDrop:
      return Fixed(100.0 * value, 0) + "% Frame";
    case ConditionKind::kFps: return Fixed(value, 1) + " FPS";
    case ConditionKind::kJpeg: return "JPEG " + Fixed(value, 0);
    case ConditionKind::kGaussian: return "Gaussian " + Fixed(value, 0);
  }
  return "";
}

Condition ParseCondition(const std::string& id) {
  if (id == "baseline") return {};
  const auto colon = id.find(':');
  if (colon == std::string::npos) throw Error("bad_condition", "malformed condition '" + id + "'");
  const std::string name = id.substr(0, colon);
  double value = 0.0;
  try {
    std::size_t used = 0;
    value = std::stod(id.substr(colon + 1), &used);
    if (used != id.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw Error("bad_condition", "malformed condition value in '" + id + "'");
  }
  Condition c;
  c.value = value;
  if (name == "frame_drop") {
    c.kind = ConditionKind::kFrameDrop;
    if (!(value > 0.0 && value <= 1.0)) throw Error("bad_condition", "frame_drop fraction must be in (0, 1]");
  } else if (name == "fps") {
    c.kind = ConditionKind::kFps;
    if (!(value > 0.0)) throw Error("bad_condition", "fps must be positive");
  } else if (name == "jpeg") {
    c.kind = ConditionKind::kJpeg;
    if (!(value >= 1.0 && value <= 100.0)) throw Error("bad_condition", "jpeg quality must be in [1, 100]");
  } else if (name == "gaussian") {
    c.kind = ConditionKind::kGaussian;
    if (!(value >= 0.0)) throw Error("bad_condition", "gaussian sigma must be non-negative");
  } else {
    throw Error("bad_condition", "unknown condition '" + name + "'");
  }
  return c;
}

std::vector<Condition> DefaultConditions() {
  return {ParseCondition("baseline"), ParseCondition("frame_drop:0.5"), ParseCondition("fps:2"),
          ParseCondition("jpeg:90"),  ParseCondition("jpeg:80"),        ParseCondition("gaussian:10")};
}

Features PerturbFeatures(const Features& f, const Condition& c, Rng& rng) {
  constexpr double kNominalFps = 4.0;
  const std::size_t n = f.size();
  Features out = f;
  switch (c.kind) {
    case ConditionKind::kBaseline:
      return f;
    case ConditionKind::kFrameDrop: {
      const auto keep = static_cast<std::size_t>(std::ceil(c.value * static_cast<double>(n) - 1e-9));
      out = HoldPositions(f, UniformSelect(n, std::max<std::size_t>(1, keep)));
      break;
    }
    case ConditionKind::kFps: {
      std::vector<std::size_t> kept;
      for (std::size_t k = 0;; ++k) {
        const auto pos = static_cast<std::size_t>(std::llround(static_cast<double>(k) * kNominalFps / c.value));
        if (pos >= n) break;
        kept.push_back(pos);
      }
      out = HoldPositions(f, kept);
      break;
    }
    case ConditionKind::kJpeg: {
      const double levels = std::max(2.0, std::round(16.0 * c.value / 100.0));
      for (auto& x : out) {
        const double j = std::clamp(std::floor((x + 1.0) * levels / 2.0), 0.0, levels - 1.0);
        x = -1.0 + (2.0 * j + 1.0) / levels;
      }
      break;
    }
    case ConditionKind::kGaussian: {
      std::normal_distribution<double> noise(0.0, 2.0 * c.value / 255.0);
      for (auto& x : out) x = std::clamp(x + noise(rng), -1.0, 1.0);
      break;
    }
  }
  return SnapToLevels(out);
}

FrameClip ApplyCondition(const FrameClip& raw, const Condition& c, const SamplingSpec& spec,
                         std::uint64_t seed) {
  switch (c.kind) {
    case ConditionKind::kBaseline: return UniformSample(raw, spec);
    case ConditionKind::kFrameDrop: return PerturbFrameDrop(UniformSample(raw, spec), c.value);
    case ConditionKind::kFps: return PerturbFps(raw, c.value, spec);
    case ConditionKind::kJpeg:
      return PerturbJpeg(UniformSample(raw, spec), static_cast<int>(std::lround(c.value)));
    case ConditionKind::kGaussian: return PerturbGaussian(UniformSample(raw, spec), c.value, seed);
  }
  return raw;
}

std::vector<EvalRecord> EvaluateFeatures(const FeatureDetector& detector,
                                         std::span<const SyntheticSample> samples,
                                         const Condition& condition, std::uint64_t seed) {
  std::vector<EvalRecord> records;
  records.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    // Both streams depend only on the sample index, so every condition
    // decodes with the same detector randomness as the baseline.
    Rng rng(DeriveSeed(seed, 0xFEA7, i));
    const Features f = PerturbFeatures(s.features, condition, rng);
    EvalRecord r{s.id, s.label, Verdict::kInvalid, s.source};
    try {
      r.predicted = detector(f, DeriveSeed(seed, 0xDE7E, i));
    } catch (const std::exception&) {
      r.predicted = Verdict::kInvalid;
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<MetricsReport> RobustnessSweep(const FeatureDetector& detector,
                                           std::span<const SyntheticSample> samples,
                                           std::span<const Condition> conditions,
                                           std::uint64_t seed) {
  std::vector<MetricsReport> out;
  for (const auto& c : conditions) {
    const auto records = EvaluateFeatures(detector, samples, c, seed);
    out.push_back(Summarize(records, c.Label()));
  }
  return out;
}

std::vector<MetricsReport> RobustnessSweepClips(const ClipDetector& detector,
                                                std::span<const LabeledClip> clips,
                                                std::span<const Condition> conditions,
                                                const SamplingSpec& spec, std::uint64_t seed) {
  std::vector<MetricsReport> out;
  for (const auto& c : conditions) {
    std::vector<EvalRecord> records;
    for (std::size_t i = 0; i < clips.size(); ++i) {
      const auto& lc = clips[i];
      EvalRecord r{lc.id, lc.label, Verdict::kInvalid, lc.subset};
      try {
        r.predicted = detector(ApplyCondition(lc.clip, c, spec, DeriveSeed(seed, 0xC11B, i)));
      } catch (const std::exception&) {
        r.predicted = Verdict::kInvalid;
      }
      records.push_back(std::move(r));
    }
    out.push_back(Summarize(records, c.Label()));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

nlohmann::json ReportToJson(const MetricsReport& r) {
  nlohmann::json subsets = nlohmann::json::object();
  for (const auto& [k, v] : r.per_subset_acc) subsets[k] = v;
  return {{"condition", r.condition},
          {"acc", r.acc},
          {"weighted_f1", r.weighted_f1},
          {"per_subset_acc", subsets},
          {"fake_only_subsets", r.fake_only_subsets},
          {"count", r.count}};
}

MetricsReport ReportFromJson(const nlohmann::json& j) {
  MetricsReport r;
  r.condition = j.at("condition").get<std::string>();
  r.acc = j.at("acc").get<double>();
  r.weighted_f1 = j.at("weighted_f1").get<double>();
  r.count = j.at("count").get<std::size_t>();
  for (const auto& [k, v] : j.at("per_subset_acc").items()) r.per_subset_acc[k] = v.get<double>();
  if (j.contains("fake_only_subsets"))
    r.fake_only_subsets = j.at("fake_only_subsets").get<std::vector<std::string>>();
  return r;
}

}  // namespace

std::string ReportsJson(std::span<const MetricsReport> reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) arr.push_back(ReportToJson(r));
  return arr.dump(2) + "\n";
}

std::vector<MetricsReport> ParseReportsJson(const std::string& text) {
  std::vector<MetricsReport> out;
  try {
    const auto j = nlohmann::json::parse(text);
    const auto& arr = j.is_object() && j.contains("reports") ? j.at("reports") : j;
    if (!arr.is_array()) throw Error("bad_report", "expected a JSON array of reports");
    for (const auto& e : arr) out.push_back(ReportFromJson(e));
  } catch (const nlohmann::json::exception& e) {
    throw Error("bad_report", e.what());
  }
  return out;
}

std::string ReportsCsv(std::span<const MetricsReport> reports) {
  std::set<std::string> tags;
  for (const auto& r : reports)
    for (const auto& [k, v] : r.per_subset_acc) tags.insert(k);
  std::ostringstream os;
  os << "condition,count,acc,weighted_f1";
  for (const auto& t : tags) os << ",acc:" << t;
  os << "\n";
  for (const auto& r : reports) {
    os << r.condition << "," << r.count << "," << Fixed(r.acc, 6) << "," << Fixed(r.weighted_f1, 6);
    for (const auto& t : tags) {
      os << ",";
      auto it = r.per_subset_acc.find(t);
      if (it != r.per_subset_acc.end()) os << Fixed(it->second, 6);
    }
    os << "\n";
  }
  return os.str();
}

std::string BenchmarkTableMarkdown(const MetricsReport& report, const std::string& method) {
  const auto& cols = report.fake_only_subsets;
  std::ostringstream os;
  os << "| Method |";
  for (const auto& c : cols) os << " " << c << " |";
  os << " Avg-ACC | Avg-F1 |\n|---|";
  for (std::size_t i = 0; i < cols.size(); ++i) os << "---|";
  os << "---|---|\n| " << method << " |";
  for (const auto& c : cols) os << " " << Percent(report.per_subset_acc.at(c)) << " |";
  os << " " << Percent(report.acc) << " | " << Percent(report.weighted_f1) << " |\n";
  return os.str();
}

std::string AblationTableMarkdown(std::span<const AblationRow> rows) {
  std::ostringstream os;
  os << "| SFT | RL | ACC | F1 |\n|---|---|---|---|\n";
  for (const auto& r : rows) {
    os << "| " << (r.sft ? "x" : " ") << " | " << (r.rl ? "x" : " ") << " | "
       << Percent(r.metrics.acc) << " | " << Percent(r.metrics.weighted_f1) << " |\n";
  }
  return os.str();
}

std::string AblationJson(std::span<const AblationRow> rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    auto j = ReportToJson(r.metrics);
    j["strategy"] = r.strategy;
    j["sft"] = r.sft;
    j["rl"] = r.rl;
    arr.push_back(j);
  }
  return arr.dump(2) + "\n";
}

std::vector<AblationRow> ParseAblationJson(const std::string& text) {
  std::vector<AblationRow> out;
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_array()) throw Error("bad_report", "expected a JSON array of ablation rows");
    for (const auto& e : j) {
      AblationRow r;
      r.strategy = e.at("strategy").get<std::string>();
      r.sft = e.at("sft").get<bool>();
      r.rl = e.at("rl").get<bool>();
      r.metrics = ReportFromJson(e);
      out.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error("bad_report", e.what());
  }
  return out;
}

std::string RobustnessTableMarkdown(
    const std::vector<std::pair<std::string, std::vector<MetricsReport>>>& by_split) {
  std::ostringstream os;
  os << "| Condition |";
  for (const auto& [split, reps] : by_split) os << " " << split << " ACC | " << split << " F1 |";
  os << "\n|---|";
  for (std::size_t i = 0; i < by_split.size(); ++i) os << "---|---|";
  os << "\n";
  const std::size_t rows = by_split.empty() ? 0 : by_split.front().second.size();
  for (std::size_t i = 0; i < rows; ++i) {
    os << "| " << by_split.front().second[i].condition << " |";
    for (const auto& [split, reps] : by_split) {
      if (i < reps.size())
        os << " " << Percent(reps[i].acc) << " | " << Percent(reps[i].weighted_f1) << " |";
      else
        os << " | |";
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace cotrl
