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

#include "debias/pipeline/runner.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <exception>
#include <set>
#include <sstream>

#include "debias/caption/corpus.hpp"
#include "debias/common/error.hpp"
#include "debias/common/hash.hpp"
#include "debias/dataset/composition.hpp"
#include "debias/eval/compare.hpp"
#include "debias/eval/energy.hpp"
#include "debias/eval/evaluate.hpp"
#include "debias/filter/text_filter.hpp"
#include "debias/generate/amplify.hpp"

namespace debias {

namespace fs = std::filesystem;

namespace {

constexpr const char* kRunFile = "run.json";
constexpr const char* kModels[] = {"vanilla", "biased", "debiased"};

struct StageInfo {
  Stage stage;
  std::string_view name;
};

constexpr StageInfo kStages[] = {
    {Stage::kSynth, "synth"},
    {Stage::kTrainVanilla, "train-vanilla"},
    {Stage::kTrainBiased, "train-biased"},
    {Stage::kExtract, "extract"},
    {Stage::kCaption, "caption"},
    {Stage::kFilter, "filter"},
    {Stage::kGenerate, "generate"},
    {Stage::kAssemble, "assemble"},
    {Stage::kTrainDebiased, "train-debiased"},
    {Stage::kEvaluate, "evaluate"},
    {Stage::kReport, "report"},
};

std::string TrialName(int trial) { return "trial-" + std::to_string(trial); }

std::string Rel(const fs::path& p, const fs::path& root) {
  return p.lexically_normal().lexically_relative(root.lexically_normal()).generic_string();
}

std::string Join(const std::vector<std::array<std::string, 4>>& rows) {
  std::string out = "model\tsplit\tmetric\tvalue\n";
  for (const auto& r : rows) out += r[0] + "\t" + r[1] + "\t" + r[2] + "\t" + r[3] + "\n";
  return out;
}

std::optional<double> Number(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

std::string_view to_string(Stage stage) {
  for (const auto& s : kStages) {
    if (s.stage == stage) return s.name;
  }
  return "unknown";
}

Stage parse_stage(std::string_view text) {
  for (const auto& s : kStages) {
    if (s.name == text) return s.stage;
  }
  throw ValidationError("unknown stage '" + std::string(text) + "'");
}

const std::vector<Stage>& stage_order() {
  static const std::vector<Stage> kOrder = [] {
    std::vector<Stage> v;
    for (const auto& s : kStages) v.push_back(s.stage);
    return v;
  }();
  return kOrder;
}

std::vector<Stage> upstream_of(Stage stage) {
  switch (stage) {
    case Stage::kSynth: return {};
    case Stage::kTrainVanilla: return {Stage::kSynth};
    case Stage::kTrainBiased: return {Stage::kSynth};
    case Stage::kExtract: return {Stage::kTrainBiased};
    case Stage::kCaption: return {Stage::kExtract};
    case Stage::kFilter: return {Stage::kCaption};
    case Stage::kGenerate: return {Stage::kFilter};
    case Stage::kAssemble: return {Stage::kGenerate};
    case Stage::kTrainDebiased: return {Stage::kAssemble};
    case Stage::kEvaluate: return {Stage::kTrainDebiased, Stage::kTrainVanilla};
    case Stage::kReport: return {Stage::kEvaluate};
  }
  return {};
}

bool is_per_trial(Stage stage) { return stage != Stage::kSynth && stage != Stage::kReport; }

std::string RunRecord::key(Stage stage, int trial) {
  return trial < 0 ? std::string(to_string(stage)) : TrialName(trial) + "/" + std::string(to_string(stage));
}

const StageRecord* RunRecord::find(Stage stage, int trial) const {
  const auto it = stages.find(key(stage, trial));
  return it == stages.end() ? nullptr : &it->second;
}

Json to_json(const RunRecord& r) {
  Json stages = Json::object();
  for (const auto& [k, s] : r.stages) {
    stages[k] = {{"stage", s.stage},
                 {"trial", s.trial},
                 {"status", s.status},
                 {"input_hash", s.input_hash},
                 {"output_hash", s.output_hash},
                 {"outputs", s.outputs},
                 {"wall_time_s", s.wall_time_s},
                 {"energy_micro_wh", s.energy_micro_wh},
                 {"error", s.error},
                 {"notes", s.notes}};
  }
  return Json{{"run_id", r.run_id}, {"config", r.config}, {"stages", stages}};
}

RunRecord run_record_from_json(const Json& j) {
  RunRecord r;
  r.run_id = j.value("run_id", "");
  r.config = j.value("config", Json::object());
  for (const auto& [k, v] : j.at("stages").items()) {
    StageRecord s;
    s.stage = v.at("stage").get<std::string>();
    s.trial = v.at("trial").get<int>();
    s.status = v.at("status").get<std::string>();
    s.input_hash = v.at("input_hash").get<std::string>();
    s.output_hash = v.at("output_hash").get<std::string>();
    s.outputs = v.at("outputs").get<std::vector<std::string>>();
    s.wall_time_s = v.at("wall_time_s").get<double>();
    s.energy_micro_wh = v.at("energy_micro_wh").get<std::int64_t>();
    s.error = v.value("error", "");
    s.notes = v.value("notes", Json::object());
    r.stages.emplace(k, std::move(s));
  }
  return r;
}

Pipeline::Pipeline(ExperimentConfig config, fs::path run_dir, BackendRegistry registry, std::ostream* log)
    : config_(std::move(config)), run_dir_(std::move(run_dir)), registry_(std::move(registry)), log_(log) {
  config_.validate(registry_);
  if (fs::exists(run_dir_ / kRunFile)) {
    try {
      record_ = run_record_from_json(Json::parse(read_text_file(run_dir_ / kRunFile)));
    } catch (const Json::exception& e) {
      throw ValidationError((run_dir_ / kRunFile).string() + ": " + e.what());
    }
  }
  record_.config = to_json(config_);
  record_.run_id = sha256_hex(record_.config.dump()).substr(0, 16);
}

fs::path Pipeline::trial_dir(int trial) const { return run_dir_ / TrialName(trial); }

void Pipeline::save() const {
  fs::create_directories(run_dir_);
  write_text_file(run_dir_ / kRunFile, to_json(record_).dump(2) + "\n");
  write_text_file(run_dir_ / "config.json", record_.config.dump(2) + "\n");
}

void Pipeline::say(const std::string& line) const {
  if (log_ != nullptr) *log_ << line << std::endl;
}

const StageRecord* Pipeline::completed(Stage stage, int trial) const {
  const StageRecord* r = record_.find(stage, trial);
  if (r == nullptr || r->status != "completed") return nullptr;
  for (const auto& out : r->outputs) {
    if (!fs::exists(run_dir_ / out)) return nullptr;
  }
  return r;
}

Json Pipeline::stage_inputs(Stage stage, int trial) const {
  const Json& c = record_.config;
  Json in{{"stage", to_string(stage)}, {"deterministic", config_.deterministic}};
  if (trial >= 0) in["seed"] = trial_seed(trial);
  switch (stage) {
    case Stage::kSynth:
      in["dataset"] = c["dataset"];
      if (!config_.dataset.manifest.empty()) in["manifest_sha256"] = sha256_file(config_.dataset.manifest);
      break;
    case Stage::kTrainVanilla:
    case Stage::kTrainDebiased: in["config"] = c["debiased_training"]; break;
    case Stage::kTrainBiased: in["config"] = c["biased_training"]; break;
    case Stage::kExtract:
      in["config"] = c["extraction"];
      in["q"] = config_.biased_training.q;
      break;
    case Stage::kCaption: in["config"] = c["caption"]; break;
    case Stage::kFilter: in["config"] = c["filter"]; break;
    case Stage::kGenerate: in["config"] = c["generation"]; break;
    case Stage::kAssemble: in["oversample_topk"] = config_.generation.oversample_topk; break;
    case Stage::kEvaluate: in["config"] = c["eval"]; break;
    case Stage::kReport: in["config"] = c["energy"]; break;
  }
  Json ups = Json::object();
  auto add = [&](Stage u, int t) {
    if (const StageRecord* r = record_.find(u, t)) ups[RunRecord::key(u, t)] = r->output_hash;
  };
  switch (stage) {
    case Stage::kReport:
      for (int t = 0; t < config_.eval.trials; ++t) add(Stage::kEvaluate, t);
      break;
    case Stage::kEvaluate:
      for (Stage u : {Stage::kSynth, Stage::kTrainVanilla, Stage::kTrainBiased, Stage::kExtract,
                      Stage::kFilter, Stage::kGenerate, Stage::kAssemble, Stage::kTrainDebiased}) {
        add(u, is_per_trial(u) ? trial : -1);
      }
      break;
    case Stage::kExtract: add(Stage::kSynth, -1); [[fallthrough]];
    default:
      for (Stage u : upstream_of(stage)) add(u, is_per_trial(u) ? trial : -1);
      if (stage == Stage::kCaption || stage == Stage::kGenerate || stage == Stage::kAssemble) {
        add(Stage::kSynth, -1);
      }
      if (stage == Stage::kAssemble) {
        add(Stage::kCaption, trial);
        add(Stage::kExtract, trial);
      }
  }
  in["upstream"] = ups;
  return in;
}

std::vector<StageOutcome> Pipeline::run_stage(Stage stage) {
  if (!is_per_trial(stage)) return {run_stage(stage, -1)};
  std::vector<StageOutcome> out;
  for (int t = 0; t < config_.eval.trials; ++t) out.push_back(run_stage(stage, t));
  return out;
}

StageOutcome Pipeline::run_stage(Stage stage, int trial) {
  if (is_per_trial(stage) && (trial < 0 || trial >= config_.eval.trials)) {
    throw ValidationError("stage '" + std::string(to_string(stage)) + "' needs a trial in [0, " +
                          std::to_string(config_.eval.trials) + ")");
  }
  if (!is_per_trial(stage)) trial = -1;
  for (Stage u : upstream_of(stage)) {
    if (stage == Stage::kReport) {
      for (int t = 0; t < config_.eval.trials; ++t) {
        if (completed(u, t) == nullptr) throw MissingUpstreamError(std::string(to_string(stage)), std::string(to_string(u)));
      }
    } else if (completed(u, is_per_trial(u) ? trial : -1) == nullptr) {
      throw MissingUpstreamError(std::string(to_string(stage)), std::string(to_string(u)));
    }
  }

  const std::string input_hash = sha256_hex(stage_inputs(stage, trial).dump());
  const std::string key = RunRecord::key(stage, trial);
  if (stage != Stage::kReport) {
    if (const StageRecord* prior = completed(stage, trial); prior && prior->input_hash == input_hash) {
      say("[" + key + "] cached");
      return {stage, trial, StageStatus::kCached};
    }
  }

  say("[" + key + "] running");
  const auto start = std::chrono::steady_clock::now();
  StageRecord rec;
  std::exception_ptr error;
  rec.stage = std::string(to_string(stage));
  rec.trial = trial;
  rec.input_hash = input_hash;
  try {
    Result res = execute(stage, trial);
    for (const auto& p : res.outputs) rec.outputs.push_back(Rel(p, run_dir_));
    rec.output_hash = std::move(res.output_hash);
    rec.notes = std::move(res.notes);
    rec.status = "completed";
  } catch (const std::exception& e) {
    rec.status = "failed";
    rec.error = e.what();
    error = std::current_exception();
  }
  rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  rec.energy_micro_wh = Energy::from_power(config_.energy.device_watts, rec.wall_time_s).micro_wh();
  record_.stages[key] = rec;
  save();
  if (error) {
    say("[" + key + "] failed: " + rec.error + " (fix the cause and rerun with --resume)");
    std::rethrow_exception(error);
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2fs", rec.wall_time_s);
  say("[" + key + "] completed in " + buf);
  return {stage, trial, StageStatus::kCompleted};
}

std::vector<StageOutcome> Pipeline::run_all(bool resume) {
  if (!resume) record_.stages.clear();
  save();
  std::vector<StageOutcome> out;
  out.push_back(run_stage(Stage::kSynth, -1));
  for (int t = 0; t < config_.eval.trials; ++t) {
    for (Stage s : stage_order()) {
      if (is_per_trial(s)) out.push_back(run_stage(s, t));
    }
  }
  out.push_back(run_stage(Stage::kReport, -1));
  return out;
}

Pipeline::Result Pipeline::execute(Stage stage, int trial) {
  switch (stage) {
    case Stage::kSynth: return do_synth();
    case Stage::kTrainVanilla:
    case Stage::kTrainBiased:
    case Stage::kTrainDebiased: return do_train(stage, trial);
    case Stage::kExtract: return do_extract(trial);
    case Stage::kCaption: return do_caption(trial);
    case Stage::kFilter: return do_filter(trial);
    case Stage::kGenerate: return do_generate(trial);
    case Stage::kAssemble: return do_assemble(trial);
    case Stage::kEvaluate: return do_evaluate(trial);
    case Stage::kReport: return do_report();
  }
  throw ValidationError("unknown stage");
}

fs::path Pipeline::source_manifest_path() const {
  return config_.dataset.synth ? run_dir_ / "synth" / "manifest.jsonl" : config_.dataset.manifest;
}

DatasetManifest Pipeline::source_manifest() const { return load_manifest(source_manifest_path()); }

Pipeline::Result Pipeline::do_synth() {
  Result res;
  DatasetManifest m;
  const fs::path dir = run_dir_ / "synth";
  if (config_.dataset.synth) {
    m = synth_generate(*config_.dataset.synth, dir, config_.workers);
    res.outputs.push_back(dir / "manifest.jsonl");
  } else {
    m = load_manifest(config_.dataset.manifest);
  }
  const CompositionReport comp = validate_composition(m);
  write_text_file(dir / "composition.tsv", format_composition(comp, m.class_names));
  res.outputs.push_back(dir / "composition.tsv");
  res.output_hash = manifest_hash(m);
  res.notes = {{"samples", m.samples.size()}, {"ratio_matches_declared", comp.ratio_matches_declared}};
  if (!comp.ratio_matches_declared) say("warning: realized conflict ratio differs from the declared one");
  return res;
}

Pipeline::Result Pipeline::do_train(Stage stage, int trial) {
  const fs::path dir = trial_dir(trial);
  fs::create_directories(dir);
  DatasetManifest manifest;
  ClassifierConfig cfg;
  ModelRole role;
  if (stage == Stage::kTrainDebiased) {
    manifest = load_manifest(dir / "debiased" / "manifest.jsonl");
    cfg = config_.debiased_training;
    role = ModelRole::kDebiased;
  } else {
    manifest = source_manifest();
    cfg = stage == Stage::kTrainBiased ? config_.biased_training : config_.debiased_training;
    role = stage == Stage::kTrainBiased ? ModelRole::kBiased : ModelRole::kVanilla;
  }
  cfg.seed = trial_seed(trial);
  const std::string name(to_string(role));
  TrainingOptions opts;
  opts.deterministic = config_.deterministic;
  opts.workers = config_.workers;
  opts.log_path = dir / (name + ".log.jsonl");
  TrainedModel model = train(manifest, cfg, role, opts);
  const fs::path ckpt = dir / (name + ".ckpt");
  save_checkpoint(model, ckpt);

  Result res;
  res.outputs = {ckpt, opts.log_path};
  res.output_hash = model.model_hash();
  if (!model.history().empty()) {
    res.notes = {{"final_loss", model.history().back().mean_loss},
                 {"final_train_accuracy", model.history().back().train_accuracy}};
  }
  return res;
}

Pipeline::Result Pipeline::do_extract(int trial) {
  const fs::path dir = trial_dir(trial);
  const DatasetManifest manifest = source_manifest();
  const TrainedModel model = load_checkpoint(dir / "biased.ckpt");
  const ScoredLosses scored = per_sample_losses(model, manifest, config_.extraction.ranking_loss,
                                                config_.biased_training.q, config_.workers);
  const LossRanking ranking = rank(scored.entries);
  ExtractOptions opts;
  opts.per_class_balance = config_.extraction.per_class_balance;
  opts.manifest = &manifest;
  ConflictCandidateSet cands = extract_topk(ranking, config_.extraction.k, opts);
  cands.source_model = model.model_hash();
  write_ranking(ranking, cands.source_model, dir / "losses.jsonl");
  write_candidates(cands, dir / "candidates.jsonl");

  Result res;
  res.outputs = {dir / "losses.jsonl", dir / "candidates.jsonl"};
  res.output_hash = candidates_hash(cands);
  Json failures = Json::array();
  for (const auto& f : scored.failures) failures.push_back({{"id", f.id}, {"reason", f.reason}});
  res.notes = {{"candidates", cands.sample_ids.size()}, {"load_failures", failures}};
  return res;
}

Pipeline::Result Pipeline::do_caption(int trial) {
  const fs::path dir = trial_dir(trial);
  const DatasetManifest manifest = source_manifest();
  const ConflictCandidateSet cands = read_candidates(dir / "candidates.jsonl");
  const auto captioner = registry_.make_captioner(config_.caption);
  BuildCorpusOptions opts;
  opts.captions_per_sample = config_.caption.m;
  opts.seed = trial_seed(trial);
  opts.parallelism = config_.caption.parallelism;
  const TextCorpus corpus = build_corpus(cands, manifest, *captioner, opts);
  write_corpus(corpus, dir / "corpus.jsonl");

  Result res;
  res.outputs = {dir / "corpus.jsonl"};
  res.output_hash = corpus_hash(corpus);
  res.notes = {{"captions", corpus.records.size()}, {"failures", corpus.failures.size()}};
  if (const auto* http = dynamic_cast<const HttpCaptioner*>(captioner.get())) res.notes["retries"] = http->retries();
  return res;
}

Pipeline::Result Pipeline::do_filter(int trial) {
  const fs::path dir = trial_dir(trial);
  const TextCorpus corpus = read_corpus(dir / "corpus.jsonl");
  const DatasetManifest manifest = source_manifest();
  FilteredCorpus filtered;
  Result res;
  if (config_.filter.enabled) {
    FilterSpec spec;
    if (config_.filter.stop_words) {
      spec.stop_words.clear();
      for (const auto& w : *config_.filter.stop_words) {
        std::string lw = w;
        std::transform(lw.begin(), lw.end(), lw.begin(), [](unsigned char c) { return std::tolower(c); });
        spec.stop_words.insert(lw);
      }
    }
    spec.f = config_.filter.f;
    spec.num_classes = manifest.num_classes();
    spec.class_vocab = class_vocab_from_names(manifest.class_names);
    filtered = filter_corpus(corpus, spec);
    write_text_file(dir / "frequency.tsv", format_frequency_report(count_words(corpus, spec.stop_words)));
    res.outputs.push_back(dir / "frequency.tsv");

    std::set<std::string> class_words;
    for (const auto& [_, words] : spec.class_vocab) class_words.insert(words.begin(), words.end());
    std::size_t hits = 0;
    for (const auto& w : filtered.top_f_words) hits += class_words.contains(w) ? 1 : 0;
    res.notes["class_words_in_top_f"] = hits;
  } else {
    filtered = passthrough(corpus);
  }
  write_filtered(filtered, dir / "filtered.jsonl");
  res.outputs.push_back(dir / "filtered.jsonl");
  res.output_hash = filtered_hash(filtered);
  res.notes["kept"] = filtered.kept.size();
  res.notes["dropped"] = filtered.dropped.size();
  return res;
}

Pipeline::Result Pipeline::do_generate(int trial) {
  const fs::path dir = trial_dir(trial);
  const DatasetManifest manifest = source_manifest();
  const FilteredCorpus filtered = read_filtered(dir / "filtered.jsonl");
  const auto generator = registry_.make_generator(config_.generation);
  AmplifyOptions opts;
  opts.target = GenerationTarget{config_.generation.target}.resolve(manifest);
  opts.size = config_.generation.size;
  opts.seed = trial_seed(trial);
  opts.parallelism = config_.generation.parallelism;
  const fs::path out = dir / "generated";
  if (fs::exists(out / "images")) fs::remove_all(out / "images");
  const GeneratedSet set = amplify(filtered, *generator, class_vocab_from_names(manifest.class_names), opts, out);
  write_generated(set, out / "generated.jsonl");

  Result res;
  res.outputs = {out / "generated.jsonl"};
  res.output_hash = generated_hash(set);
  res.notes = {{"generated", set.samples.size()},
               {"skipped_unlabeled", set.skipped_unlabeled},
               {"rejected_prompts", set.rejected.size()}};
  if (const auto* http = dynamic_cast<const HttpGenerator*>(generator.get())) res.notes["retries"] = http->retries();
  return res;
}

Pipeline::Result Pipeline::do_assemble(int trial) {
  const fs::path dir = trial_dir(trial);
  const DatasetManifest original = source_manifest();
  const GeneratedSet set = read_generated(dir / "generated" / "generated.jsonl");
  const TextCorpus corpus = read_corpus(dir / "corpus.jsonl");
  std::optional<ConflictCandidateSet> cands;
  AssembleOptions opts;
  if (config_.generation.oversample_topk) {
    cands = read_candidates(dir / "candidates.jsonl");
    opts.oversample_topk = &*cands;
  }
  const fs::path out = dir / "debiased";
  const DebiasedDataset deb = assemble_debiased(original, set, corpus_hash(corpus), out, opts);
  write_manifest(deb.manifest, out / "manifest.jsonl");
  write_text_file(out / "composition.tsv",
                  format_composition(validate_composition(deb.manifest), deb.manifest.class_names));
  write_text_file(out / "provenance.json",
                  Json{{"original_manifest", deb.provenance.original_manifest_hash},
                       {"corpus", deb.provenance.corpus_hash},
                       {"generator", deb.provenance.generator_id}}
                          .dump(2) + "\n");

  Result res;
  res.outputs = {out / "manifest.jsonl", out / "composition.tsv", out / "provenance.json"};
  res.output_hash = manifest_hash(deb.manifest);
  res.notes = {{"samples", deb.manifest.samples.size()}};
  return res;
}

Pipeline::Result Pipeline::do_evaluate(int trial) {
  const fs::path dir = trial_dir(trial);
  const DatasetManifest manifest = source_manifest();
  std::vector<std::array<std::string, 4>> rows;
  Result res;

  for (const char* name : kModels) {
    const TrainedModel model = load_checkpoint(dir / (std::string(name) + ".ckpt"));
    for (Split split : {Split::kTest, Split::kTrain}) {
      const EvalMetrics m = evaluate(model, manifest, split, config_.workers);
      for (const auto& [k, v] : metric_pairs(m)) rows.push_back({name, std::string(to_string(split)), k, v});
    }
    if (config_.eval.export_embeddings) {
      const fs::path path = dir / ("embeddings-" + std::string(name) + ".jsonl");
      const EmbeddingFile emb = export_embeddings(model, manifest, "penultimate", Split::kTest, config_.workers);
      write_embeddings(emb, path);
      res.outputs.push_back(path);
      rows.push_back({name, "test", "centroid_distance", format_fraction(mean_centroid_distance(emb))});
      rows.push_back({name, "test", "centroid_distance_conflict",
                      format_fraction(mean_centroid_distance(emb, Group::kConflict))});
    }
  }

  const ConflictCandidateSet cands = read_candidates(dir / "candidates.jsonl");
  rows.push_back({"extract", "train", "k", std::to_string(cands.k)});
  rows.push_back({"extract", "train", "candidates", std::to_string(cands.sample_ids.size())});
  rows.push_back({"extract", "train", "purity", format_fraction(extraction_purity(cands, manifest))});
  const FilteredCorpus filtered = read_filtered(dir / "filtered.jsonl");
  rows.push_back({"filter", "-", "kept", std::to_string(filtered.kept.size())});
  rows.push_back({"filter", "-", "dropped", std::to_string(filtered.dropped.size())});
  const GeneratedSet gen = read_generated(dir / "generated" / "generated.jsonl");
  rows.push_back({"generate", "-", "generated", std::to_string(gen.samples.size())});
  rows.push_back({"generate", "-", "skipped_unlabeled", std::to_string(gen.skipped_unlabeled)});
  rows.push_back({"generate", "-", "rejected_prompts", std::to_string(gen.rejected.size())});
  for (const auto& [label, n] : gen.per_label) {
    rows.push_back({"generate", "-", "label" + std::to_string(label), std::to_string(n)});
  }

  const std::string text = Join(rows);
  write_text_file(dir / "metrics.tsv", text);
  res.outputs.insert(res.outputs.begin(), dir / "metrics.tsv");
  res.output_hash = sha256_hex(text);
  return res;
}

Pipeline::Result Pipeline::do_report() {
  const int trials = config_.eval.trials;
  std::vector<MetricsTable> tables;
  for (int t = 0; t < trials; ++t) tables.push_back(read_metrics(trial_dir(t) / "metrics.tsv"));

  std::string text = "trial\tmodel\tsplit\tmetric\tvalue\n";
  for (int t = 0; t < trials; ++t) {
    for (const auto& r : tables[static_cast<size_t>(t)].rows) {
      text += std::to_string(t) + "\t" + r[1] + "\t" + r[2] + "\t" + r[3] + "\t" + r[4] + "\n";
    }
  }
  MetricsTable means;
  for (const auto& r : tables.front().rows) {
    double sum = 0.0;
    bool ok = true;
    for (const auto& tab : tables) {
      const auto v = tab.number("", r[1], r[2], r[3]);
      if (!v) {
        ok = false;
        break;
      }
      sum += *v;
    }
    const std::string value = ok ? format_fraction(sum / trials) : std::string(kAbsent);
    means.rows.push_back({"mean", r[1], r[2], r[3], value});
    text += "mean\t" + r[1] + "\t" + r[2] + "\t" + r[3] + "\t" + value + "\n";
  }
  write_text_file(run_dir_ / "metrics.tsv", text);

  std::vector<RunRow> runs;
  std::vector<std::pair<std::string, double>> acc_bars;
  for (const char* name : kModels) {
    RunRow row{name, {}};
    for (const char* metric : {"overall_acc", "aligned_acc", "conflict_acc"}) {
      const auto v = means.get("mean", name, "test", metric);
      if (v) row.values.emplace_back(metric, *v);
      if (const auto n = means.number("mean", name, "test", metric)) {
        acc_bars.emplace_back(std::string(name) + " " + metric, *n);
      }
    }
    runs.push_back(std::move(row));
  }
  write_text_file(run_dir_ / "comparison.csv", to_csv(compare_runs(runs)));
  write_text_file(run_dir_ / "accuracy.svg", bar_chart_svg("Test accuracy (mean over trials)", acc_bars, ""));

  EnergyLedger ledger;
  ledger.intensity = CarbonIntensity::from_grams_per_kwh(config_.energy.carbon_intensity);
  std::vector<std::pair<std::string, double>> energy_bars;
  std::vector<std::pair<std::string, double>> time_bars;
  for (Stage s : stage_order()) {
    if (s == Stage::kReport) continue;
    Energy e;
    double seconds = 0.0;
    bool any = false;
    for (const auto& [key, rec] : record_.stages) {
      if (rec.stage != to_string(s) || rec.status != "completed") continue;
      e += Energy::from_micro_wh(rec.energy_micro_wh);
      seconds += rec.wall_time_s;
      any = true;
    }
    if (!any) continue;
    ledger.add(std::string(to_string(s)), e, seconds / 3600.0);
    energy_bars.emplace_back(std::string(to_string(s)), e.kwh() * 1000.0);
    time_bars.emplace_back(std::string(to_string(s)), seconds);
  }
  const CarbonReport carbon = carbon_report(ledger);
  write_text_file(run_dir_ / "carbon.tsv", format_carbon_report(carbon));
  write_text_file(run_dir_ / "energy.json", to_json(ledger).dump(2) + "\n");
  write_text_file(run_dir_ / "energy.svg", bar_chart_svg("Estimated energy per stage", energy_bars, "Wh"));
  write_text_file(run_dir_ / "time.svg", bar_chart_svg("Wall time per stage", time_bars, "s"));

  Result res;
  for (const char* f : {"metrics.tsv", "comparison.csv", "accuracy.svg", "carbon.tsv", "energy.json",
                        "energy.svg", "time.svg"}) {
    res.outputs.push_back(run_dir_ / f);
  }
  res.output_hash = sha256_hex(text);
  res.notes = {{"total_gco2eq", carbon.total.grams_string()}};
  return res;
}

std::optional<std::string> MetricsTable::get(std::string_view trial, std::string_view model,
                                             std::string_view split, std::string_view metric) const {
  for (const auto& r : rows) {
    if (r[0] == trial && r[1] == model && r[2] == split && r[3] == metric) return r[4];
  }
  return std::nullopt;
}

std::optional<double> MetricsTable::number(std::string_view trial, std::string_view model,
                                           std::string_view split, std::string_view metric) const {
  const auto v = get(trial, model, split, metric);
  return v ? Number(*v) : std::nullopt;
}

MetricsTable read_metrics(const fs::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  MetricsTable t;
  bool header = true;
  std::size_t columns = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (std::size_t pos; (pos = line.find('\t', start)) != std::string::npos; start = pos + 1) {
      cells.push_back(line.substr(start, pos - start));
    }
    cells.push_back(line.substr(start));
    if (header) {
      columns = cells.size();
      header = false;
      if (columns != 4 && columns != 5) throw ValidationError(path.string() + ": unexpected metrics header");
      continue;
    }
    if (cells.size() != columns) throw ValidationError(path.string() + ": malformed row '" + line + "'");
    if (columns == 4) cells.insert(cells.begin(), "");
    t.rows.push_back({cells[0], cells[1], cells[2], cells[3], cells[4]});
  }
  return t;
}

}  // namespace debias
