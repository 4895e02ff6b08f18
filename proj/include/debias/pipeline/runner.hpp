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

#ifndef DEBIAS_PIPELINE_RUNNER_HPP_
#define DEBIAS_PIPELINE_RUNNER_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "debias/common/io.hpp"
#include "debias/pipeline/config.hpp"
#include "debias/pipeline/registry.hpp"

namespace debias {

// Fixed linear order. Synth and report run once per run directory; every
// other stage runs once per trial under trial-<i>/.
enum class Stage {
  kSynth,
  kTrainVanilla,
  kTrainBiased,
  kExtract,
  kCaption,
  kFilter,
  kGenerate,
  kAssemble,
  kTrainDebiased,
  kEvaluate,
  kReport,
};

std::string_view to_string(Stage stage);
// Throws ValidationError for unknown names.
Stage parse_stage(std::string_view text);
const std::vector<Stage>& stage_order();
std::vector<Stage> upstream_of(Stage stage);
bool is_per_trial(Stage stage);

struct StageRecord {
  std::string stage;
  int trial = -1;  // -1 for run-level stages
  std::string status;  // "completed" or "failed"
  std::string input_hash;
  std::string output_hash;
  std::vector<std::string> outputs;  // relative to the run directory
  double wall_time_s = 0.0;
  std::int64_t energy_micro_wh = 0;
  std::string error;
  Json notes = Json::object();
};

// run.json: the resolved config snapshot plus one record per (stage, trial).
struct RunRecord {
  std::string run_id;
  Json config;
  std::map<std::string, StageRecord> stages;

  static std::string key(Stage stage, int trial);
  const StageRecord* find(Stage stage, int trial) const;
};

Json to_json(const RunRecord& record);
RunRecord run_record_from_json(const Json& j);

enum class StageStatus { kCompleted, kCached };

struct StageOutcome {
  Stage stage;
  int trial = -1;
  StageStatus status = StageStatus::kCompleted;
};

// Executes stages against one run directory (single writer). A stage whose
// input hash matches a completed record with all outputs present is skipped
// as cached. Input hashes cover the relevant config section, the trial seed
// and the output hashes of upstream stages, never timestamps.
class Pipeline {
 public:
  // Validates the config before anything touches the disk.
  Pipeline(ExperimentConfig config, std::filesystem::path run_dir,
           BackendRegistry registry = BackendRegistry::with_defaults(), std::ostream* log = nullptr);

  // Runs `stage` for every trial (once for run-level stages). Throws
  // MissingUpstreamError when a dependency has not completed.
  std::vector<StageOutcome> run_stage(Stage stage);
  StageOutcome run_stage(Stage stage, int trial);

  // Every stage in order. Without `resume`, prior stage records are
  // discarded and everything is recomputed.
  std::vector<StageOutcome> run_all(bool resume = true);

  const RunRecord& record() const { return record_; }
  const ExperimentConfig& config() const { return config_; }
  const std::filesystem::path& run_dir() const { return run_dir_; }
  std::filesystem::path trial_dir(int trial) const;
  std::uint64_t trial_seed(int trial) const { return config_.seed + static_cast<std::uint64_t>(trial); }

 private:
  struct Result {
    std::vector<std::filesystem::path> outputs;
    std::string output_hash;
    Json notes = Json::object();
  };

  const StageRecord* completed(Stage stage, int trial) const;
  Json stage_inputs(Stage stage, int trial) const;
  Result execute(Stage stage, int trial);
  void save() const;
  void say(const std::string& line) const;

  Result do_synth();
  Result do_train(Stage stage, int trial);
  Result do_extract(int trial);
  Result do_caption(int trial);
  Result do_filter(int trial);
  Result do_generate(int trial);
  Result do_assemble(int trial);
  Result do_evaluate(int trial);
  Result do_report();

  DatasetManifest source_manifest() const;
  std::filesystem::path source_manifest_path() const;

  ExperimentConfig config_;
  std::filesystem::path run_dir_;
  BackendRegistry registry_;
  std::ostream* log_;
  RunRecord record_;
};

// Rows of a metrics file: (trial, model, split, metric, value). Trial
// metrics files have no trial column; their rows read trial "".
struct MetricsTable {
  std::vector<std::array<std::string, 5>> rows;

  std::optional<std::string> get(std::string_view trial, std::string_view model,
                                 std::string_view split, std::string_view metric) const;
  // Empty when absent or not numeric.
  std::optional<double> number(std::string_view trial, std::string_view model,
                               std::string_view split, std::string_view metric) const;
};

MetricsTable read_metrics(const std::filesystem::path& path);

}  // namespace debias

#endif  // DEBIAS_PIPELINE_RUNNER_HPP_
