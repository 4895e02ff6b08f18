/*
 * Copyright 2026 The Debias Pipeline Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// debias: stage-by-stage driver for the bias amplification and debiasing
// pipeline. Every subcommand operates on one run directory.

#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "debias/caption/corpus.hpp"
#include "debias/common/error.hpp"
#include "debias/common/io.hpp"
#include "debias/filter/text_filter.hpp"
#include "debias/pipeline/runner.hpp"

namespace fs = std::filesystem;
using namespace debias;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kInvalid = 2, kMissingUpstream = 3, kBackend = 4 };

struct CommonFlags {
  std::string config;
  std::string run_dir;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  std::optional<int> trials;
  bool resume = false;
};

void AddCommon(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Experiment config (JSON); defaults to <run-dir>/config.json");
  cmd->add_option("--run-dir", f.run_dir, "Run directory")->required();
  cmd->add_option("--seed", f.seed, "Global seed (trial i uses seed + i)");
  cmd->add_flag("--deterministic", f.deterministic, "Fixed reduction order for bit-exact reruns");
  cmd->add_option("--trials", f.trials, "Independent trials")->check(CLI::PositiveNumber);
  cmd->add_flag("--resume", f.resume, "Reuse completed stages of an earlier run");
}

ExperimentConfig ResolveConfig(const CommonFlags& f) {
  ExperimentConfig c;
  if (!f.config.empty()) {
    c = load_config(f.config);
  } else if (fs::exists(fs::path(f.run_dir) / "config.json")) {
    c = load_config(fs::path(f.run_dir) / "config.json");
  }
  if (f.seed) c.seed = *f.seed;
  if (f.deterministic) c.deterministic = true;
  if (f.trials) c.eval.trials = *f.trials;
  return c;
}

void PrintOutcomes(const std::vector<StageOutcome>& outcomes) {
  for (const auto& o : outcomes) {
    std::cout << RunRecord::key(o.stage, o.trial) << "\t"
              << (o.status == StageStatus::kCached ? "cached" : "completed") << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bias amplification and generative debiasing pipeline"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string filter_report;
  struct Entry {
    CLI::App* cmd;
    std::optional<Stage> stage;
  };
  std::vector<Entry> entries;
  auto add_stage = [&](Stage s, const std::string& help) {
    CLI::App* cmd = app.add_subcommand(std::string(to_string(s)), help);
    AddCommon(cmd, flags);
    entries.push_back({cmd, s});
    return cmd;
  };
  add_stage(Stage::kSynth, "Render the synthetic dataset (or validate the configured manifest)");
  add_stage(Stage::kTrainVanilla, "Train the vanilla baseline (CE on the original data)");
  add_stage(Stage::kTrainBiased, "Train the intentionally biased classifier (GCE)");
  add_stage(Stage::kExtract, "Rank train samples by loss and keep the top K");
  add_stage(Stage::kCaption, "Caption the extracted samples");
  CLI::App* filter = add_stage(Stage::kFilter, "Apply the top-F frequent-word caption filter");
  filter->add_option("--report", filter_report, "Also write the word frequency table to this path");
  add_stage(Stage::kGenerate, "Generate images from the filtered captions");
  add_stage(Stage::kAssemble, "Merge generated samples into the debiased dataset");
  add_stage(Stage::kTrainDebiased, "Train the debiased classifier (CE)");
  add_stage(Stage::kEvaluate, "Evaluate all models and export embeddings");
  add_stage(Stage::kReport, "Aggregate trials, comparison table, figures and carbon report");
  CLI::App* run_all = app.add_subcommand("run-all", "Run every stage in order");
  AddCommon(run_all, flags);
  entries.push_back({run_all, std::nullopt});

  CLI11_PARSE(app, argc, argv);

  try {
    const ExperimentConfig config = ResolveConfig(flags);
    Pipeline pipeline(config, flags.run_dir, BackendRegistry::with_defaults(), &std::cerr);
    for (const auto& e : entries) {
      if (!e.cmd->parsed()) continue;
      if (!e.stage) {
        PrintOutcomes(pipeline.run_all(flags.resume));
        std::cout << "metrics: " << (fs::path(flags.run_dir) / "metrics.tsv").string() << "\n";
        break;
      }
      PrintOutcomes(pipeline.run_stage(*e.stage));
      if (*e.stage == Stage::kFilter && !filter_report.empty()) {
        const TextCorpus corpus = read_corpus(pipeline.trial_dir(0) / "corpus.jsonl");
        std::set<std::string> stop = default_stop_words();
        if (config.filter.stop_words) stop = {config.filter.stop_words->begin(), config.filter.stop_words->end()};
        write_text_file(filter_report, format_frequency_report(count_words(corpus, stop)));
      }
    }
  } catch (const MissingUpstreamError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kMissingUpstream;
  } catch (const AdapterError& e) {
    std::cerr << "backend error: " << e.what() << "\nrerun with --resume once the backend recovers\n";
    return kBackend;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}
