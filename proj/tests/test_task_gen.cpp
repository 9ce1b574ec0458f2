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


#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include "doctest.h"

#include "cotrl/response_protocol.hpp"
#include "cotrl/task_gen.hpp"
#include "oracles.hpp"

using namespace cotrl;

namespace {

class FailingClient : public LlmClient {
 public:
  std::string id() const override { return "flaky-7"; }
  std::string Complete(const CompletionRequest&) override {
    ++calls;
    throw std::runtime_error("upstream timeout");
  }
  int calls = 0;
};

class CountingClient : public LlmClient {
 public:
  explicit CountingClient(std::string id) : id_(std::move(id)) {}
  std::string id() const override { return id_; }
  std::string Complete(const CompletionRequest&) override {
    ++calls;
    return "a calm lake at dawn";
  }
  int calls = 0;

 private:
  std::string id_;
};

std::vector<Source> Sources(const ManifestSpec& spec) {
  std::vector<Source> out;
  auto add = [&](const std::string& tag, Verdict label, std::size_t n) {
    Source s{tag, label, {}};
    for (std::size_t i = 0; i < n; ++i) s.payloads.push_back(tag + "-" + std::to_string(i));
    out.push_back(s);
  };
  add(spec.train_real_tag, Verdict::kReal, spec.train_real + spec.test_real);
  for (const auto& t : spec.fake_tags) add(t.first, Verdict::kFake, spec.train_fake + spec.test_fake);
  add(spec.closed_real_tag, Verdict::kReal, spec.closed_real);
  for (const auto& t : spec.closed_fake_tags) add(t.first, Verdict::kFake, spec.closed_fake);
  return out;
}

}  // namespace

TEST_CASE("quantization") {
  for (std::size_t k = 0; k < 16; ++k) {
    CHECK(QuantizeFeature(LevelCenter(k)) == k);
    CHECK(LevelCenter(k) == doctest::Approx(-1.0 + (2.0 * k + 1) / 16.0));
  }
  CHECK(QuantizeFeature(-1.0) == 0);
  CHECK(QuantizeFeature(1.0) == 15);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double x = UniformRange(rng, -1.0, 1.0);
    CHECK(std::abs(LevelCenter(QuantizeFeature(x)) - x) <= 1.0 / 16.0 + 1e-12);
  }
  Features f{};
  const auto prompt = PromptTokens(f);
  CHECK(prompt.size() == 1 + kFeatureCount);
  CHECK(prompt[0] == toy_vocab::kVideo);
}

TEST_CASE("label rule and balance") {
  const Features w = HiddenWeights(3);
  CHECK(LabelRule(Features{}, w) == Verdict::kReal);
  const TaskSet t = BuildTaskSet(200, 100, 9);
  REQUIRE(t.samples.size() == 200);
  REQUIRE(t.heldout.size() == 100);
  std::size_t fake = 0;
  std::set<std::string> ids;
  for (const auto& s : t.samples) {
    fake += s.label == Verdict::kFake;
    CHECK(s.label == LabelRule(s.features, t.hidden_weights));
    CHECK(s.features == SnapToLevels(s.features));
    ids.insert(s.id);
  }
  CHECK(fake == 100);
  for (const auto& s : t.heldout) {
    CHECK(s.label == LabelRule(s.features, t.hidden_weights));
    CHECK(ids.count(s.id) == 0);
  }
  CHECK_THROWS_AS(BuildTaskSet(201, 0, 1), Error);
  const TaskSet again = BuildTaskSet(200, 100, 9);
  CHECK(again.samples[17].features == t.samples[17].features);
}

TEST_CASE("task is linearly learnable") {
  const TaskSet t = BuildTaskSet(1000, 1000, 21);
  // Logistic regression by full-batch gradient ascent.
  std::array<double, kFeatureCount + 1> w{};
  for (int it = 0; it < 3000; ++it) {
    std::array<double, kFeatureCount + 1> g{};
    for (const auto& s : t.samples) {
      double z = w[kFeatureCount];
      for (std::size_t j = 0; j < kFeatureCount; ++j) z += w[j] * s.features[j];
      const double y = s.label == Verdict::kFake ? 1.0 : 0.0;
      const double e = y - 1.0 / (1.0 + std::exp(-z));
      for (std::size_t j = 0; j < kFeatureCount; ++j) g[j] += e * s.features[j];
      g[kFeatureCount] += e;
    }
    for (std::size_t j = 0; j <= kFeatureCount; ++j) w[j] += 0.05 * g[j];
  }
  std::size_t right = 0;
  for (const auto& s : t.heldout) {
    double z = w[kFeatureCount];
    for (std::size_t j = 0; j < kFeatureCount; ++j) z += w[j] * s.features[j];
    right += (z > 0) == (s.label == Verdict::kFake);
  }
  CHECK(static_cast<double>(right) / t.heldout.size() >= 0.99);
}

TEST_CASE("template rationale shape") {
  const RationaleStyle style;
  Rng rng(4);
  const Vocabulary& v = Vocabulary::Default();
  for (int i = 0; i < 500; ++i) {
    const Verdict belief = i % 2 ? Verdict::kFake : Verdict::kReal;
    auto t = TemplateRationale(belief, style, rng);
    REQUIRE(t.back() == Vocabulary::kEos);
    const auto p = Parse(v.Decode(t));
    REQUIRE(p.format_ok);
    CHECK(p.verdict == belief);
    // Frame markers in the think block are consecutive.
    std::vector<TokenId> frames;
    std::size_t think = 0;
    for (std::size_t k = 1; t[k] != toy_vocab::kThinkClose; ++k) {
      ++think;
      if (t[k] >= toy_vocab::kFrameBase && t[k] < toy_vocab::kFrameBase + 16) frames.push_back(t[k]);
    }
    CHECK(think >= style.min_think_tokens);
    CHECK(think <= style.max_think_tokens);
    REQUIRE(frames.size() >= style.min_frames);
    for (std::size_t k = 1; k < frames.size(); ++k) CHECK(frames[k] == frames[k - 1] + 1);
    CHECK(t[1] == frames[0]);
    CHECK(t[2] == (belief == Verdict::kFake ? toy_vocab::kFakeWordBase : toy_vocab::kRealWordBase));
  }
}

TEST_CASE("response sources") {
  const TaskSet t = BuildTaskSet(400, 0, 5);
  const auto src = TemplateResponseSource(RationaleStyle{}, 0.2, 0.1);
  Rng rng(2);
  std::size_t wrong = 0, broken = 0;
  for (const auto& s : t.samples) {
    const auto p = Parse(Vocabulary::Default().Decode(src(s, rng)));
    if (!p.format_ok) ++broken;
    else if (p.verdict != s.label) ++wrong;
  }
  CHECK(broken > 10);
  CHECK(broken < 80);
  CHECK(wrong > 30);
  CHECK(wrong < 130);

  const auto coin = UninformedResponseSource(RationaleStyle{});
  std::size_t agree = 0;
  for (const auto& s : t.samples) {
    const auto p = Parse(Vocabulary::Default().Decode(coin(s, rng)));
    REQUIRE(p.format_ok);
    agree += p.verdict == s.label;
  }
  CHECK(agree > 150);
  CHECK(agree < 250);
}

TEST_CASE("seed sampling") {
  SeedPool pool;
  pool.groups = {{"animal", {{"cats", 0.5, {"tabby", "siamese"}}, {"dogs", 0.5, {"terrier"}}}}};
  const auto seeds = SampleSeeds(pool, 10000, 3);
  std::map<std::string, int> n;
  for (const auto& s : seeds) n[s.categories[0]]++;
  CHECK(n["cats"] / 1e4 >= 0.48);
  CHECK(n["cats"] / 1e4 <= 0.52);
  CHECK(SampleSeeds(pool, 1, 3).size() == 1);
  CHECK(SampleSeeds(pool, 50, 8)[7].keywords == SampleSeeds(pool, 50, 8)[7].keywords);
  CHECK_THROWS_AS(SampleSeeds(SeedPool{}, 1, 3), Error);

  const SeedPool def = SeedPool::Default();
  CHECK_NOTHROW(def.Validate());
  const auto many = SampleSeeds(def, 20000, 4);
  for (std::size_t g = 0; g < def.groups.size(); ++g) {
    std::map<std::string, int> counts;
    for (const auto& s : many) counts[s.categories[g]]++;
    for (const auto& c : def.groups[g].categories) CHECK(std::abs(counts[c.name] / 2e4 - c.weight) <= 0.02);
  }
  SeedPool bad = pool;
  bad.groups[0].categories[0].weight = 0.7;
  CHECK_THROWS_AS(bad.Validate(), Error);
}

TEST_CASE("description generation") {
  const auto seeds = SampleSeeds(SeedPool::Default(), 3, 1);
  std::vector<std::shared_ptr<LlmClient>> one{std::make_shared<TemplateClient>(5)};
  std::vector<std::shared_ptr<LlmClient>> again{std::make_shared<TemplateClient>(5)};
  Rng r1(1), r2(1);
  const auto a = GenerateDescription(seeds[0], one, 1.2, r1);
  const auto b = GenerateDescription(seeds[0], again, 1.2, r2);
  CHECK(a.text == b.text);
  CHECK(a.client_id == "template");
  CHECK(!a.text.empty());

  auto c1 = std::make_shared<CountingClient>("a");
  auto c2 = std::make_shared<CountingClient>("b");
  auto c3 = std::make_shared<CountingClient>("c");
  std::vector<std::shared_ptr<LlmClient>> three{c1, c2, c3};
  Rng rng(7);
  for (int i = 0; i < 300; ++i) GenerateDescription(seeds[1], three, 1.0, rng);
  CHECK(c1->calls >= 50);
  CHECK(c2->calls >= 50);
  CHECK(c3->calls >= 50);

  auto flaky = std::make_shared<FailingClient>();
  std::vector<std::shared_ptr<LlmClient>> bad{flaky};
  try {
    GenerateDescription(seeds[2], bad, 1.0, rng, 2);
    FAIL("expected client_failed");
  } catch (const Error& e) {
    CHECK(e.code() == "client_failed");
    CHECK(std::string(e.what()).find("flaky-7") != std::string::npos);
  }
  CHECK(flaky->calls == 3);
  std::vector<std::shared_ptr<LlmClient>> none;
  CHECK_THROWS_AS(GenerateDescription(seeds[2], none, 1.0, rng), Error);
  CHECK(DescriptionSystemPrompt().find("physical") != std::string::npos);
}

TEST_CASE("post-filter examples") {
  const FilterConfig cfg;
  CHECK(PostFilter("a small dog", cfg) == FilterReason::kLengthTooShort);
  std::string tagged = "<script>";
  for (int i = 0; i < 25; ++i) tagged += " word" + std::to_string(i);
  CHECK(PostFilter(tagged, cfg) == FilterReason::kSpecialCharacters);
  std::string dogs;
  for (int i = 0; i < 40; ++i) dogs += "dog ";
  CHECK(HeuristicReadability(dogs) < 0.6);
  CHECK(PostFilter(dogs, cfg) == FilterReason::kReadability);
  CHECK(PostFilter(dogs, cfg, [](std::string_view) { return 0.9; }) == FilterReason::kAccepted);
  CHECK(WordCount("  two\twords\n") == 2);
}

TEST_CASE("generated descriptions mostly pass the filter") {
  auto client = std::make_shared<TemplateClient>(11);
  std::vector<std::shared_ptr<LlmClient>> clients{client};
  Rng rng(3);
  std::size_t accepted = 0;
  for (const auto& s : SampleSeeds(SeedPool::Default(), 100, 2)) {
    const auto text = GenerateDescription(s, clients, 1.0, rng).text;
    const auto r = PostFilter(text, FilterConfig{});
    if (r == FilterReason::kAccepted) {
      ++accepted;
      CHECK(PostFilter(text, FilterConfig{}) == FilterReason::kAccepted);
    }
  }
  CHECK(accepted >= 80);
}

TEST_CASE("filter fixture") {
  const auto r = oracle::RunFilterFixture(std::string(COTRL_TEST_DATA) + "/filter_cases.json");
  CHECK(r.cases == 60);
  for (const auto& [rule, n] : r.per_rule) CHECK(n == 20);
  for (const auto& d : r.deviations) MESSAGE(d);
  CHECK(r.deviations.empty());
}

TEST_CASE("manifest: default shape and disjointness") {
  const ManifestSpec spec;
  const auto m = BuildManifest(Sources(spec), spec, 1);
  CHECK(oracle::ManifestViolation(m).empty());
  CHECK(m.split_counts.at("train") == 2000);
  CHECK(m.split_counts.at("test") == 20);
  CHECK(m.split_counts.at("closed_benchmark") == 20);
  std::map<std::string, double> fake_train;
  for (const auto& r : m.records)
    if (r.split == Split::kTrain && r.label == Verdict::kFake) fake_train[r.source] += 1.0 / 1000;
  CHECK(fake_train["gen-open-a"] == doctest::Approx(0.4));
  CHECK(fake_train["gen-open-b"] == doctest::Approx(0.1));
  CHECK(fake_train["gen-api-c"] == doctest::Approx(0.3));
  CHECK(fake_train["gen-api-d"] == doctest::Approx(0.2));
  CHECK(Apportion(10, spec.fake_tags) == std::vector<std::size_t>{4, 1, 3, 2});
  CHECK(Apportion(7, {{"a", 1.0}, {"b", 1.0}}) == std::vector<std::size_t>{4, 3});
}

TEST_CASE("manifest errors") {
  ManifestSpec spec;
  CHECK_THROWS_AS(BuildManifest({}, spec, 1), Error);
  auto sources = Sources(spec);
  sources[0].payloads.clear();
  CHECK_THROWS_AS(BuildManifest(sources, spec, 1), Error);
  ManifestSpec leak = spec;
  leak.closed_fake_tags.push_back({"gen-api-c", 0.1});
  CHECK_THROWS_AS(BuildManifest(Sources(spec), leak, 1), Error);
  ManifestSpec greedy = spec;
  greedy.train_real = 5000;
  CHECK_THROWS_AS(BuildManifest(Sources(spec), greedy, 1), Error);
}

TEST_CASE("synthetic corpus and files") {
  ManifestSpec spec;
  spec.train_real = spec.train_fake = 100;
  const auto c = BuildSyntheticCorpus(spec, 40, 5);
  CHECK(oracle::ManifestViolation(c.manifest).empty());
  CHECK(c.samples.size() == c.manifest.records.size());
  CHECK(c.heldout.size() == 40);
  for (const auto& s : c.samples) CHECK(s.label == LabelRule(s.features, c.hidden_weights));

  const auto dir = std::filesystem::temp_directory_path() / "cotrl_task_test";
  WriteManifest(c.manifest, dir / "m.jsonl");
  const auto m = ReadManifest(dir / "m.jsonl");
  REQUIRE(m.records.size() == c.manifest.records.size());
  CHECK(m.split_counts == c.manifest.split_counts);
  CHECK(m.generator_tags == c.manifest.generator_tags);
  CHECK(m.seed == c.manifest.seed);
  CHECK(m.records[5].payload == c.manifest.records[5].payload);
  WriteSamples(c.samples, dir / "s.jsonl");
  const auto s = ReadSamples(dir / "s.jsonl");
  REQUIRE(s.size() == c.samples.size());
  CHECK(s[3].features == c.samples[3].features);
  CHECK(s[3].prompt_tokens == c.samples[3].prompt_tokens);
  CHECK(s[3].source == c.samples[3].source);
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(ReadManifest(dir / "nope.jsonl"), Error);
}
