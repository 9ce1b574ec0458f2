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

#include "cotrl/task_gen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

namespace cotrl {

using nlohmann::json;
namespace tv = toy_vocab;

// ---------------------------------------------------------------------------
// Synthetic task

std::size_t QuantizeFeature(double x) {
  const double scaled = std::floor((x + 1.0) * 0.5 * tv::kLevels);
  return static_cast<std::size_t>(std::clamp(scaled, 0.0, double(tv::kLevels - 1)));
}

double LevelCenter(std::size_t level) {
  return -1.0 + (2.0 * static_cast<double>(level) + 1.0) / double(tv::kLevels);
}

Features SnapToLevels(const Features& f) {
  Features out{};
  for (std::size_t i = 0; i < kFeatureCount; ++i) out[i] = LevelCenter(QuantizeFeature(f[i]));
  return out;
}

std::vector<TokenId> PromptTokens(const Features& f) {
  std::vector<TokenId> out = {tv::kVideo};
  for (double x : f) out.push_back(tv::kLevelBase + static_cast<TokenId>(QuantizeFeature(x)));
  return out;
}

Verdict LabelRule(const Features& f, const Features& w) {
  double dot = 0.0;
  for (std::size_t i = 0; i < kFeatureCount; ++i) dot += w[i] * f[i];
  return dot > 0.0 ? Verdict::kFake : Verdict::kReal;
}

Features HiddenWeights(std::uint64_t seed) {
  Rng rng(DeriveSeed(seed, 0x77));
  Features w{};
  for (double& x : w) x = UniformRange(rng, -1.0, 1.0);
  return w;
}

namespace {

std::vector<SyntheticSample> DrawWithCounts(std::size_t n_real, std::size_t n_fake,
                                            const Features& w, std::uint64_t seed,
                                            const std::string& id_prefix) {
  Rng rng(seed);
  std::vector<SyntheticSample> out;
  std::size_t have_real = 0, have_fake = 0;
  while (have_real < n_real || have_fake < n_fake) {
    Features f{};
    for (double& x : f) x = LevelCenter(UniformIndex(rng, tv::kLevels));
    const Verdict label = LabelRule(f, w);
    if (label == Verdict::kReal ? have_real >= n_real : have_fake >= n_fake) continue;
    (label == Verdict::kReal ? have_real : have_fake)++;
    SyntheticSample s;
    s.id = id_prefix + std::to_string(out.size());
    s.features = f;
    s.label = label;
    s.prompt_tokens = PromptTokens(f);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

std::vector<SyntheticSample> DrawBalanced(std::size_t n, const Features& w,
                                          std::uint64_t seed,
                                          const std::string& id_prefix) {
  if (n % 2 != 0) throw Error("bad_task", "balanced draw needs an even count");
  return DrawWithCounts(n / 2, n / 2, w, seed, id_prefix);
}

TaskSet BuildTaskSet(std::size_t n, std::size_t n_heldout, std::uint64_t seed) {
  TaskSet ts;
  ts.hidden_weights = HiddenWeights(DeriveSeed(seed, 1));
  ts.samples = DrawBalanced(n, ts.hidden_weights, DeriveSeed(seed, 2), "s");
  ts.heldout = DrawBalanced(n_heldout, ts.hidden_weights, DeriveSeed(seed, 3), "h");
  return ts;
}

// ---------------------------------------------------------------------------
// Template rationales

namespace {

TokenId EvidenceWord(Verdict belief, Rng& rng) {
  const TokenId base = belief == Verdict::kFake ? tv::kFakeWordBase : tv::kRealWordBase;
  return base + static_cast<TokenId>(UniformIndex(rng, tv::kEvidenceWords));
}

}  // namespace

std::vector<TokenId> TemplateRationale(Verdict belief, const RationaleStyle& style,
                                       Rng& rng) {
  if (belief == Verdict::kInvalid) throw Error("bad_label", "rationale needs a verdict");
  if (style.min_frames < 1 || style.max_frames > tv::kFrames ||
      style.min_frames > style.max_frames || style.min_clause_words < 1 ||
      style.min_clause_words > style.max_clause_words ||
      style.min_think_tokens > style.max_think_tokens ||
      style.max_frames * (1 + style.max_clause_words) < style.min_think_tokens ||
      style.min_frames * (1 + style.min_clause_words) > style.max_think_tokens) {
    throw Error("bad_config", "inconsistent rationale style");
  }
  std::vector<std::size_t> frames;
  std::vector<std::size_t> words;
  for (;;) {
    const std::size_t n =
        style.min_frames + UniformIndex(rng, style.max_frames - style.min_frames + 1);
    // a contiguous run of markers at a random offset
    const std::size_t start = UniformIndex(rng, tv::kFrames - n + 1);
    frames.resize(n);
    std::iota(frames.begin(), frames.end(), start);
    words.clear();
    std::size_t think = 0;
    for (std::size_t i = 0; i < n; ++i) {
      words.push_back(style.min_clause_words +
                      UniformIndex(rng, style.max_clause_words - style.min_clause_words + 1));
      think += 1 + words.back();
    }
    if (think >= style.min_think_tokens && think <= style.max_think_tokens) break;
  }
  std::vector<TokenId> out = {tv::kThinkOpen};
  for (std::size_t i = 0; i < frames.size(); ++i) {
    out.push_back(tv::kFrameBase + static_cast<TokenId>(frames[i]));
    // The opening clause leads with a fixed word per verdict.
    out.push_back(i == 0 ? (belief == Verdict::kFake ? tv::kFakeWordBase : tv::kRealWordBase)
                         : EvidenceWord(belief, rng));
    for (std::size_t k = 1; k < words[i]; ++k) {
      if (UniformIndex(rng, 2) == 0) {
        out.push_back(tv::kNounBase + static_cast<TokenId>(UniformIndex(rng, tv::kNouns)));
      } else {
        out.push_back(EvidenceWord(belief, rng));
      }
    }
  }
  out.insert(out.end(), {tv::kThinkClose, tv::kAnswerOpen,
                         belief == Verdict::kFake ? tv::kFake : tv::kReal,
                         tv::kAnswerClose, Vocabulary::kEos});
  return out;
}

ResponseSource TemplateResponseSource(const RationaleStyle& style, double wrong_rate,
                                      double malformed_rate) {
  return [style, wrong_rate, malformed_rate](const SyntheticSample& s, Rng& rng) {
    Verdict belief = s.label;
    if (Uniform01(rng) < wrong_rate) {
      belief = belief == Verdict::kFake ? Verdict::kReal : Verdict::kFake;
    }
    std::vector<TokenId> out = TemplateRationale(belief, style, rng);
    if (Uniform01(rng) < malformed_rate) {
      switch (UniformIndex(rng, 3)) {
        case 0:  // missing </answer>
          out.erase(out.end() - 2);
          break;
        case 1:  // missing <think>
          out.erase(out.begin());
          break;
        default:  // answer block repeated
          out.insert(out.end() - 1, {tv::kAnswerOpen, out[out.size() - 3], tv::kAnswerClose});
          break;
      }
    }
    return out;
  };
}

ResponseSource UninformedResponseSource(const RationaleStyle& style) {
  return [style](const SyntheticSample&, Rng& rng) {
    const Verdict belief = UniformIndex(rng, 2) == 0 ? Verdict::kReal : Verdict::kFake;
    return TemplateRationale(belief, style, rng);
  };
}

// ---------------------------------------------------------------------------
// Seeds

void SeedPool::Validate() const {
  if (groups.empty()) throw Error("empty_pool", "seed pool has no attribute groups");
  for (const auto& g : groups) {
    if (g.categories.empty()) throw Error("empty_pool", "attribute group " + g.name + " is empty");
    double sum = 0.0;
    for (const auto& c : g.categories) {
      if (c.keywords.empty()) {
        throw Error("empty_pool", "category " + g.name + "/" + c.name + " has no keywords");
      }
      if (c.weight < 0.0) throw Error("bad_config", "negative weight in " + g.name);
      sum += c.weight;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw Error("bad_config", "weights of group " + g.name + " do not sum to 1");
    }
  }
}

SeedPool SeedPool::Default() {
  SeedPool p;
  p.groups = {
      {"subject",
       {{"human", 0.4, {"person", "couple", "family", "athlete", "worker", "street performer"}},
        {"animal", 0.2, {"dog", "cat", "horse", "parrot", "deer", "goldfish"}},
        {"scenery", 0.2, {"mountain lake", "desert road", "forest trail", "coastline", "city skyline"}},
        {"object", 0.2, {"bicycle", "teapot", "vintage car", "umbrella", "paper lantern"}}}},
      {"gender",
       {{"female", 0.5, {"woman", "girl"}}, {"male", 0.5, {"man", "boy"}}}},
      {"age",
       {{"child", 0.25, {"young"}},
        {"young adult", 0.25, {"twenty-something"}},
        {"middle-aged", 0.25, {"middle-aged"}},
        {"elderly", 0.25, {"elderly"}}}},
      {"ethnicity",
       {{"african", 0.2, {"African"}},
        {"east asian", 0.2, {"East Asian"}},
        {"european", 0.2, {"European"}},
        {"latin american", 0.2, {"Latin American"}},
        {"south asian", 0.2, {"South Asian"}}}},
      {"setting",
       {{"indoor", 0.25, {"kitchen", "library", "workshop"}},
        {"outdoor", 0.25, {"park", "beach", "meadow"}},
        {"urban", 0.25, {"busy street", "subway platform", "rooftop"}},
        {"rural", 0.25, {"farmyard", "village square", "orchard"}}}},
  };
  return p;
}

std::vector<SeedTuple> SampleSeeds(const SeedPool& pool, std::size_t n, std::uint64_t seed) {
  pool.Validate();
  if (n < 1) throw Error("bad_config", "seed count must be at least 1");
  Rng rng(DeriveSeed(seed, 0x5EED));
  std::vector<SeedTuple> out(n);
  for (auto& tuple : out) {
    for (const auto& g : pool.groups) {
      const double u = Uniform01(rng);
      double acc = 0.0;
      const SeedCategory* pick = &g.categories.back();
      for (const auto& c : g.categories) {
        acc += c.weight;
        if (u < acc) {
          pick = &c;
          break;
        }
      }
      tuple.categories.push_back(pick->name);
      tuple.keywords.push_back(pick->keywords[UniformIndex(rng, pick->keywords.size())]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Description generation

std::string DescriptionSystemPrompt() {
  return "You write one paragraph describing a short real-world video clip. "
         "Respect physical constraints: objects keep their shape, motion obeys "
         "gravity and inertia, light sources and shadows agree, people have "
         "plausible anatomy. Respect aesthetic constraints: natural framing, "
         "realistic colors, steady camera work, no text overlays. Use plain "
         "sentences without lists, markup or special symbols.";
}

std::string DescriptionUserPrompt(const SeedTuple& seeds) {
  std::string out = "Keywords:";
  for (std::size_t i = 0; i < seeds.keywords.size(); ++i) {
    out += (i == 0 ? " " : "; ") + seeds.keywords[i];
  }
  return out;
}

namespace {

const std::string& Pick(const std::vector<std::string>& options, Rng& rng) {
  return options[UniformIndex(rng, options.size())];
}

std::vector<std::string> SplitKeywords(const std::string& user) {
  std::vector<std::string> out;
  const auto colon = user.find(':');
  std::string rest = colon == std::string::npos ? user : user.substr(colon + 1);
  std::stringstream ss(rest);
  std::string item;
  while (std::getline(ss, item, ';')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

TemplateClient::TemplateClient(std::uint64_t seed, std::string id)
    : id_(std::move(id)), rng_(DeriveSeed(seed, 0xC11E)) {}

std::string TemplateClient::Complete(const CompletionRequest& request) {
  static const std::vector<std::string> kActions = {
      "walks slowly", "turns toward the camera", "pauses for a moment",
      "moves across the frame", "rests quietly", "sways gently in the wind"};
  static const std::vector<std::string> kCamera = {
      "The camera holds a steady medium shot", "The camera pans slowly from left to right",
      "The camera tracks the motion at eye level", "The camera stays fixed on a tripod"};
  static const std::vector<std::string> kLight = {
      "Soft afternoon light falls from the left and casts long shadows",
      "Overcast daylight gives even illumination with muted colors",
      "Warm evening light creates gentle highlights on every surface",
      "Cool morning light fills the scene with a faint haze"};
  static const std::vector<std::string> kDetail = {
      "Small details such as dust and reflections stay consistent between frames",
      "The background remains in soft focus while the subject stays sharp",
      "Natural sounds of the surroundings suggest a calm atmosphere",
      "Every movement follows a smooth and believable rhythm"};

  const std::vector<std::string> kw = SplitKeywords(request.user);
  const std::string subject = kw.empty() ? "scene" : kw[0];
  std::string who = subject;
  if (kw.size() >= 4) who = kw[2] + " " + kw[3] + " " + kw[1] + " as a " + subject;
  const std::string place = kw.size() >= 5 ? kw[4] : "quiet place";

  std::string out = "A " + who + " " + Pick(kActions, rng_) + " in a " + place +
                    " during an ordinary day. " + Pick(kCamera, rng_) + ". " +
                    Pick(kLight, rng_) + ". " + Pick(kDetail, rng_) + ".";
  // Hotter sampling adds more optional detail.
  const std::size_t extra = request.temperature > 1.0 ? 2 : 1;
  for (std::size_t i = 0; i < extra; ++i) {
    if (UniformIndex(rng_, 2) == 0) out += " " + Pick(kDetail, rng_) + ".";
  }
  return out;
}

GenerateResult GenerateDescription(const SeedTuple& seeds,
                                   std::vector<std::shared_ptr<LlmClient>>& clients,
                                   double temperature, Rng& rng,
                                   std::size_t max_retries) {
  if (clients.empty()) throw Error("bad_config", "client pool is empty");
  LlmClient& client = *clients[UniformIndex(rng, clients.size())];
  const CompletionRequest req{DescriptionSystemPrompt(), DescriptionUserPrompt(seeds),
                              temperature};
  std::string last_error;
  for (std::size_t attempt = 0; attempt <= max_retries; ++attempt) {
    try {
      return {client.Complete(req), client.id()};
    } catch (const std::exception& e) {
      last_error = e.what();
    }
  }
  throw Error("client_failed", "client " + client.id() + " failed after " +
                                   std::to_string(max_retries + 1) +
                                   " attempts: " + last_error);
}

// ---------------------------------------------------------------------------
// Post-filtering

void FilterConfig::Validate() const {
  if (min_words >= max_words) throw Error("bad_config", "filter requires min_words < max_words");
  if (readability_threshold < 0.0 || readability_threshold > 1.0) {
    throw Error("bad_config", "readability threshold must lie in [0, 1]");
  }
}

const char* FilterReasonName(FilterReason r) {
  switch (r) {
    case FilterReason::kAccepted:
      return "Accepted";
    case FilterReason::kLengthTooShort:
      return "LengthTooShort";
    case FilterReason::kLengthTooLong:
      return "LengthTooLong";
    case FilterReason::kSpecialCharacters:
      return "SpecialCharacters";
    case FilterReason::kReadability:
      return "Readability";
  }
  return "Unknown";
}

std::size_t WordCount(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

namespace {

std::vector<std::string> NormalizedWords(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isspace(uc)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else if (std::isalnum(uc)) {
      cur.push_back(static_cast<char>(std::tolower(uc)));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

double SentenceTerm(std::size_t words) {
  if (words < 4) return static_cast<double>(words) / 4.0;
  if (words > 40) return 40.0 / static_cast<double>(words);
  return 1.0;
}

}  // namespace

double HeuristicReadability(std::string_view text) {
  const std::vector<std::string> words = NormalizedWords(text);
  if (words.empty()) return 0.0;

  double repetition = 1.0;
  if (words.size() >= 3) {
    std::set<std::string> distinct;
    for (std::size_t i = 0; i + 2 < words.size(); ++i) {
      distinct.insert(words[i] + ' ' + words[i + 1] + ' ' + words[i + 2]);
    }
    repetition = static_cast<double>(distinct.size()) / double(words.size() - 2);
  }

  std::size_t letters = 0, visible = 0;
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isspace(uc)) continue;
    ++visible;
    if (std::isalpha(uc)) ++letters;
  }
  const double letter_share = visible == 0 ? 0.0 : double(letters) / double(visible);

  std::vector<std::size_t> sentence_words;
  std::size_t cur = 0;
  bool in_word = false;
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    const bool space = std::isspace(uc) != 0;
    if (!space && !in_word) ++cur;
    in_word = !space;
    if (c == '.' || c == '!' || c == '?') {
      if (cur > 0) sentence_words.push_back(cur);
      cur = 0;
      in_word = false;
    }
  }
  if (cur > 0) sentence_words.push_back(cur);
  double sentence = 0.0;
  for (std::size_t n : sentence_words) sentence += SentenceTerm(n);
  sentence /= static_cast<double>(sentence_words.size());

  return std::clamp(repetition * letter_share * sentence, 0.0, 1.0);
}

FilterReason PostFilter(std::string_view candidate, const FilterConfig& cfg,
                        const ReadabilityJudge& judge) {
  const std::size_t words = WordCount(candidate);
  if (words < cfg.min_words) return FilterReason::kLengthTooShort;
  if (words > cfg.max_words) return FilterReason::kLengthTooLong;
  for (char c : candidate) {
    const auto uc = static_cast<unsigned char>(c);
    const bool ok = (uc < 0x80 && std::isalpha(uc)) || c == ' ' || c == '\n' ||
                    c == '\t' || (cfg.allow_digits && std::isdigit(uc)) ||
                    cfg.allowed_punctuation.find(c) != std::string::npos;
    if (!ok) return FilterReason::kSpecialCharacters;
  }
  const double score = judge(candidate);
  if (!(score >= cfg.readability_threshold)) return FilterReason::kReadability;
  return FilterReason::kAccepted;
}

// ---------------------------------------------------------------------------
// Manifests

const char* SplitName(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kTest:
      return "test";
    case Split::kClosedBenchmark:
      return "closed_benchmark";
  }
  return "train";
}

Split SplitFromName(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "test") return Split::kTest;
  if (name == "closed_benchmark") return Split::kClosedBenchmark;
  throw Error("bad_manifest", "unknown split: " + name);
}

std::vector<std::size_t> Apportion(std::size_t count,
                                   const std::vector<std::pair<std::string, double>>& tags) {
  double total = 0.0;
  for (const auto& t : tags) total += t.second;
  if (tags.empty() || total <= 0.0) throw Error("bad_manifest", "no weighted tags to apportion");
  std::vector<std::size_t> out(tags.size());
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t used = 0;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const double exact = double(count) * tags[i].second / total;
    out[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    used += out[i];
    rem.emplace_back(exact - double(out[i]), i);
  }
  std::stable_sort(rem.begin(), rem.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; used < count; ++k, ++used) out[rem[k % rem.size()].second]++;
  return out;
}

DatasetManifest BuildManifest(const std::vector<Source>& sources, const ManifestSpec& spec,
                              std::uint64_t seed) {
  if (sources.empty()) throw Error("bad_manifest", "no sources given");
  std::map<std::string, const Source*> by_tag;
  for (const auto& s : sources) {
    if (s.payloads.empty()) throw Error("bad_manifest", "source " + s.tag + " is empty");
    if (!by_tag.emplace(s.tag, &s).second) {
      throw Error("bad_manifest", "duplicate source tag " + s.tag);
    }
  }
  std::set<std::string> train_tags = {spec.train_real_tag};
  for (const auto& t : spec.fake_tags) train_tags.insert(t.first);
  std::vector<std::string> closed_tags = {spec.closed_real_tag};
  for (const auto& t : spec.closed_fake_tags) closed_tags.push_back(t.first);
  for (const auto& t : closed_tags) {
    if (train_tags.count(t)) {
      throw Error("bad_manifest", "closed benchmark source tag " + t + " also used in train");
    }
  }

  DatasetManifest m;
  m.seed = seed;
  std::map<std::string, std::size_t> cursor;
  std::set<std::string> ids;
  auto take = [&](const std::string& tag, Verdict label, Split split, std::size_t n) {
    if (n == 0) return;
    auto it = by_tag.find(tag);
    if (it == by_tag.end()) throw Error("bad_manifest", "missing source " + tag);
    const Source& src = *it->second;
    if (src.label != label) throw Error("bad_manifest", "source " + tag + " has the wrong label");
    std::size_t& c = cursor[tag];
    if (c + n > src.payloads.size()) {
      throw Error("bad_manifest", "source " + tag + " has too few samples");
    }
    for (std::size_t i = 0; i < n; ++i, ++c) {
      const std::string& payload = src.payloads[c];
      if (!ids.insert(payload).second) throw Error("bad_manifest", "duplicate id " + payload);
      m.records.push_back({payload, split, tag, label, payload});
      m.split_counts[SplitName(split)]++;
    }
  };

  const auto train_fake = Apportion(spec.train_fake, spec.fake_tags);
  const auto test_fake = Apportion(spec.test_fake, spec.fake_tags);
  const auto closed_fake = Apportion(spec.closed_fake, spec.closed_fake_tags);
  take(spec.train_real_tag, Verdict::kReal, Split::kTrain, spec.train_real);
  for (std::size_t i = 0; i < spec.fake_tags.size(); ++i) {
    take(spec.fake_tags[i].first, Verdict::kFake, Split::kTrain, train_fake[i]);
  }
  take(spec.train_real_tag, Verdict::kReal, Split::kTest, spec.test_real);
  for (std::size_t i = 0; i < spec.fake_tags.size(); ++i) {
    take(spec.fake_tags[i].first, Verdict::kFake, Split::kTest, test_fake[i]);
  }
  take(spec.closed_real_tag, Verdict::kReal, Split::kClosedBenchmark, spec.closed_real);
  for (std::size_t i = 0; i < spec.closed_fake_tags.size(); ++i) {
    take(spec.closed_fake_tags[i].first, Verdict::kFake, Split::kClosedBenchmark,
         closed_fake[i]);
  }
  for (const auto& t : spec.fake_tags) m.generator_tags.push_back(t.first);
  for (const auto& t : spec.closed_fake_tags) m.generator_tags.push_back(t.first);
  for (const char* s : {"train", "test", "closed_benchmark"}) m.split_counts.try_emplace(s, 0);
  return m;
}

SyntheticCorpus BuildSyntheticCorpus(const ManifestSpec& spec, std::size_t n_heldout,
                                     std::uint64_t seed) {
  SyntheticCorpus c;
  c.hidden_weights = HiddenWeights(DeriveSeed(seed, 1));

  std::vector<std::pair<std::string, std::size_t>> real_needs = {
      {spec.train_real_tag, spec.train_real + spec.test_real},
      {spec.closed_real_tag, spec.closed_real}};
  std::vector<std::pair<std::string, std::size_t>> fake_needs;
  const auto train_fake = Apportion(spec.train_fake, spec.fake_tags);
  const auto test_fake = Apportion(spec.test_fake, spec.fake_tags);
  for (std::size_t i = 0; i < spec.fake_tags.size(); ++i) {
    fake_needs.emplace_back(spec.fake_tags[i].first, train_fake[i] + test_fake[i]);
  }
  const auto closed_fake = Apportion(spec.closed_fake, spec.closed_fake_tags);
  for (std::size_t i = 0; i < spec.closed_fake_tags.size(); ++i) {
    fake_needs.emplace_back(spec.closed_fake_tags[i].first, closed_fake[i]);
  }
  std::size_t n_real = 0, n_fake = 0;
  for (const auto& r : real_needs) n_real += r.second;
  for (const auto& f : fake_needs) n_fake += f.second;

  auto pool = DrawWithCounts(n_real, n_fake, c.hidden_weights, DeriveSeed(seed, 2), "x");
  std::vector<SyntheticSample*> reals, fakes;
  for (auto& s : pool) (s.label == Verdict::kReal ? reals : fakes).push_back(&s);

  std::vector<Source> sources;
  auto assign = [&](const auto& needs, std::vector<SyntheticSample*>& stock, Verdict label) {
    std::size_t k = 0;
    for (const auto& [tag, count] : needs) {
      Source src{tag, label, {}};
      for (std::size_t i = 0; i < count; ++i, ++k) {
        SyntheticSample& s = *stock[k];
        s.source = tag;
        s.id = tag + "-" + std::to_string(i);
        src.payloads.push_back(s.id);
      }
      if (count > 0) sources.push_back(std::move(src));
    }
  };
  assign(real_needs, reals, Verdict::kReal);
  assign(fake_needs, fakes, Verdict::kFake);
  c.manifest = BuildManifest(sources, spec, seed);
  c.samples = std::move(pool);
  c.heldout = DrawBalanced(n_heldout, c.hidden_weights, DeriveSeed(seed, 3), "heldout-");
  for (auto& s : c.heldout) s.source = "heldout";
  return c;
}

namespace {

std::ofstream OpenOut(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("io_error", "cannot write " + path.string());
  return out;
}

std::ifstream OpenIn(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing_input", "cannot open " + path.string());
  return in;
}

}  // namespace

void WriteManifest(const DatasetManifest& m, const std::filesystem::path& path) {
  std::ofstream out = OpenOut(path);
  json header = {{"kind", "header"},
                 {"split_counts", m.split_counts},
                 {"generator_tags", m.generator_tags},
                 {"seed", m.seed}};
  out << header.dump() << "\n";
  for (const auto& r : m.records) {
    json j = {{"id", r.id},
              {"split", SplitName(r.split)},
              {"source", r.source},
              {"label", VerdictName(r.label)},
              {"payload", r.payload}};
    out << j.dump() << "\n";
  }
}

DatasetManifest ReadManifest(const std::filesystem::path& path) {
  std::ifstream in = OpenIn(path);
  DatasetManifest m;
  std::string line;
  bool header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (j.value("kind", "") == "header") {
        m.split_counts = j.at("split_counts").get<std::map<std::string, std::size_t>>();
        m.generator_tags = j.at("generator_tags").get<std::vector<std::string>>();
        m.seed = j.at("seed").get<std::uint64_t>();
        header = true;
        continue;
      }
      m.records.push_back({j.at("id").get<std::string>(),
                           SplitFromName(j.at("split").get<std::string>()),
                           j.at("source").get<std::string>(),
                           VerdictFromName(j.at("label").get<std::string>()),
                           j.at("payload").get<std::string>()});
    } catch (const json::exception& e) {
      throw Error("bad_manifest", path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!header) throw Error("bad_manifest", "manifest has no header record: " + path.string());
  return m;
}

void WriteSamples(const std::vector<SyntheticSample>& samples,
                  const std::filesystem::path& path) {
  std::ofstream out = OpenOut(path);
  for (const auto& s : samples) {
    json j = {{"id", s.id},
              {"source", s.source},
              {"label", VerdictName(s.label)},
              {"features", s.features}};
    out << j.dump() << "\n";
  }
}

std::vector<SyntheticSample> ReadSamples(const std::filesystem::path& path) {
  std::ifstream in = OpenIn(path);
  std::vector<SyntheticSample> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      SyntheticSample s;
      s.id = j.at("id").get<std::string>();
      s.source = j.value("source", "");
      s.label = VerdictFromName(j.at("label").get<std::string>());
      s.features = j.at("features").get<Features>();
      s.prompt_tokens = PromptTokens(s.features);
      out.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw Error("bad_samples", path.string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace cotrl
