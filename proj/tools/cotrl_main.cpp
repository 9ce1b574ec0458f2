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


// cotrl: datagen | coldstart | train | eval | perturb | report.
//
// Configuration is layered: built-in defaults, then the JSON file named by
// --config (or $COTRL_CONFIG), then --group.key flags. Logs go to stderr as
// JSON Lines; artifact paths are printed on stdout.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cotrl/config.hpp"
#include "cotrl/pipeline.hpp"
#include "cotrl/video.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cotrl {
namespace {

void Log(const std::string& event, json fields = json::object()) {
  fields["event"] = event;
  std::cerr << fields.dump() << "\n";
}

void Artifact(const fs::path& path) { std::cout << path.string() << "\n"; }

void EnsureParent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void WriteText(const fs::path& path, const std::string& text) {
  EnsureParent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io_error", "cannot write " + path.string());
  out << text;
  if (!out) throw Error("io_error", "write failed: " + path.string());
}

std::string ReadText(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("missing_input", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json EpochLog(const SftEpochReport& r) {
  return {{"epoch", r.epoch}, {"mean_loss", r.mean_loss}};
}

void CmdDatagen(const RunConfig& cfg) {
  const SyntheticCorpus corpus = GenerateCorpus(cfg);
  for (const auto* p : {&cfg.paths.manifest, &cfg.paths.samples, &cfg.paths.heldout})
    EnsureParent(*p);
  WriteCorpus(corpus, cfg.paths);
  Log("datagen", {{"records", corpus.manifest.records.size()},
                  {"heldout", corpus.heldout.size()},
                  {"splits", corpus.manifest.split_counts}});
  Artifact(cfg.paths.manifest);
  Artifact(cfg.paths.samples);
  Artifact(cfg.paths.heldout);
}

void CmdColdstart(const RunConfig& cfg) {
  const auto train = SplitSamples(ReadCorpus(cfg.paths), "train");
  std::vector<SftEpochReport> base_log;
  const PolicyParams base = PretrainBase(cfg, train, &base_log);
  for (const auto& r : base_log) Log("base_epoch", EpochLog(r));
  SaveCheckpoint(base, cfg.paths.base_checkpoint);
  Artifact(cfg.paths.base_checkpoint);

  const ColdStartOutput out = ColdStart(cfg, base, train);
  for (const auto& r : out.log) Log("sft_epoch", EpochLog(r));
  EnsureParent(cfg.paths.sft_samples);
  WriteSftSamples(out.samples, cfg.paths.sft_samples);
  SaveCheckpoint(out.params, cfg.paths.sft_checkpoint);
  Log("coldstart", {{"samples", out.samples.size()}, {"parameters", ParameterCount(out.params)}});
  Artifact(cfg.paths.sft_samples);
  Artifact(cfg.paths.sft_checkpoint);
}

void CmdTrain(const RunConfig& cfg) {
  const std::string init = cfg.paths.train_init.empty() ? cfg.paths.sft_checkpoint
                                                        : cfg.paths.train_init;
  const PolicyParams start = LoadCheckpoint(init);
  const auto train = SplitSamples(ReadCorpus(cfg.paths), "train");
  EnsureParent(cfg.paths.step_log);
  std::ofstream steps(cfg.paths.step_log, std::ios::binary);
  if (!steps) throw Error("io_error", "cannot write " + cfg.paths.step_log);
  const TrainResult result = RlTrain(cfg, start, train, [&](const StepReport& r) {
    const std::string line = StepReportJson(r);
    steps << line << "\n";
    if (r.step % 50 == 0 || r.step + 1 == cfg.dapo.max_steps)
      Log("step", json::parse(line));
  });
  steps.close();
  SaveCheckpoint(result.params, cfg.paths.rl_checkpoint);
  Log("train", {{"init", init}, {"steps", result.log.size()}});
  Artifact(cfg.paths.step_log);
  Artifact(cfg.paths.rl_checkpoint);
}

void CmdEval(const RunConfig& cfg) {
  const SyntheticCorpus corpus = ReadCorpus(cfg.paths);
  const auto samples = SplitSamples(corpus, cfg.eval.split);
  const auto conditions = ParseConditionList(cfg.eval.conditions);
  const std::string ckpt = cfg.eval.checkpoint.empty() ? cfg.paths.rl_checkpoint
                                                       : cfg.eval.checkpoint;
  const PolicyParams params = LoadCheckpoint(ckpt);
  const auto reports = EvaluatePolicy(cfg, params, samples, conditions);
  for (const auto& r : reports)
    Log("eval", {{"condition", r.condition}, {"acc", r.acc}, {"weighted_f1", r.weighted_f1},
                 {"count", r.count}});
  const fs::path out = fs::path(cfg.paths.reports) / (cfg.eval.split + ".json");
  WriteText(out, ReportsJson(reports));
  Artifact(out);

  if (cfg.eval.ablation) {
    const auto rows = RunAblation(cfg, SplitSamples(corpus, "train"), samples);
    for (const auto& r : rows)
      Log("ablation", {{"strategy", r.strategy}, {"acc", r.metrics.acc},
                       {"weighted_f1", r.metrics.weighted_f1}});
    const fs::path ab = fs::path(cfg.paths.reports) / "ablation.json";
    WriteText(ab, AblationJson(rows));
    Artifact(ab);
  }
}

FrameClip LoadFrames(const RunConfig& cfg) {
  if (cfg.paths.frames_in.empty())
    throw Error("missing_input", "paths.frames_in is not set");
  const fs::path in = cfg.paths.frames_in;
  if (in.extension() == ".cfrm") return ReadPackedFrames(in, cfg.eval.frames_fps);
  return ReadPngFrames(in, cfg.eval.frames_fps);
}

void CmdPerturb(const RunConfig& cfg) {
  const FrameClip raw = LoadFrames(cfg);
  const auto conditions = ParseConditionList(cfg.eval.conditions);
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    const FrameClip out =
        ApplyCondition(raw, conditions[i], SamplingSpec{}, DeriveSeed(cfg.seed, 0x9E57, i));
    std::string name = conditions[i].Id();
    std::replace(name.begin(), name.end(), ':', '_');
    const fs::path dir = fs::path(cfg.paths.frames_out) / name;
    WritePngFrames(out, dir);
    Log("perturb", {{"condition", conditions[i].Id()}, {"frames", out.frames.size()}});
    Artifact(dir);
  }
}

void CmdReport(const RunConfig& cfg) {
  const fs::path dir = cfg.paths.reports;
  if (!fs::is_directory(dir)) throw Error("missing_input", "report directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());

  std::vector<std::pair<std::string, std::vector<MetricsReport>>> by_split;
  std::vector<AblationRow> ablation;
  for (const auto& f : files) {
    if (f.stem() == "ablation") {
      ablation = ParseAblationJson(ReadText(f));
    } else {
      by_split.emplace_back(f.stem().string(), ParseReportsJson(ReadText(f)));
    }
  }
  if (by_split.empty() && ablation.empty())
    throw Error("missing_input", "no JSON reports in " + dir.string());

  std::ostringstream md;
  if (!by_split.empty()) {
    md << "## Robustness\n\n" << RobustnessTableMarkdown(by_split) << "\n";
    for (const auto& [split, reps] : by_split) {
      md << "## " << split << "\n\n" << BenchmarkTableMarkdown(reps.front(), "policy") << "\n";
      const fs::path csv = dir / (split + ".csv");
      WriteText(csv, ReportsCsv(reps));
      Artifact(csv);
    }
  }
  if (!ablation.empty()) md << "## Strategy grid\n\n" << AblationTableMarkdown(ablation) << "\n";
  const fs::path out = dir / "report.md";
  WriteText(out, md.str());
  Log("report", {{"inputs", files.size()}});
  Artifact(out);
}

std::string DefaultText(const json& v) { return v.is_string() ? "\"" + v.get<std::string>() + "\"" : v.dump(); }

int Main(int argc, char** argv) {
  CLI::App app{"Explainable-detection RL toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  app.add_option("--config", config_path, "run configuration (JSON)")->envname("COTRL_CONFIG");

  const RunConfig defaults = DefaultRunConfig();
  std::map<std::string, std::string> overrides;
  for (const auto& k : ConfigKeys()) {
    app.add_option("--" + k.key, overrides[k.key],
                   k.doc + " [default: " + DefaultText(k.get(defaults)) + "]")
        ->group("Config keys");
  }

  std::string command;
  for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
           {"datagen", "build the manifest and synthetic task set"},
           {"coldstart", "pretrain the base policy and run cold-start SFT"},
           {"train", "RL with DAPO from the cold-start checkpoint"},
           {"eval", "evaluate a checkpoint under perturbation conditions"},
           {"perturb", "write perturbed frame sets for an input clip"},
           {"report", "render markdown and CSV from JSON reports"}}) {
    app.add_subcommand(name, help)->callback([&command, n = name] { command = n; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", "usage"}, {"message", e.what()}}.dump() << "\n";
    return 2;
  }

  try {
    RunConfig cfg = config_path.empty() ? defaults : LoadRunConfig(config_path);
    for (const auto& k : ConfigKeys()) {
      if (app.count("--" + k.key) > 0) SetConfigValueFromText(cfg, k.key, overrides[k.key]);
    }
    cfg.Validate();
    Log("start", {{"command", command}, {"seed", cfg.seed}});
    if (command == "datagen") CmdDatagen(cfg);
    else if (command == "coldstart") CmdColdstart(cfg);
    else if (command == "train") CmdTrain(cfg);
    else if (command == "eval") CmdEval(cfg);
    else if (command == "perturb") CmdPerturb(cfg);
    else if (command == "report") CmdReport(cfg);
    return 0;
  } catch (const Error& e) {
    std::cerr << json{{"error", e.code()}, {"message", e.what()}}.dump() << "\n";
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "stage_failed"}, {"message", e.what()}}.dump() << "\n";
  }
  return 1;
}

}  // namespace
}  // namespace cotrl

int main(int argc, char** argv) { return cotrl::Main(argc, argv); }
