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

#include "debias/pipeline/config.hpp"

#include "debias/common/error.hpp"
#include "debias/pipeline/registry.hpp"

namespace debias {

namespace fs = std::filesystem;

namespace {

void Require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError("config: " + message);
}

}  // namespace

void ExperimentConfig::validate(const BackendRegistry& registry) const {
  Require(dataset.synth.has_value() != !dataset.manifest.empty(),
          "dataset needs exactly one of 'synth' and 'manifest'");
  if (dataset.synth) dataset.synth->validate();
  biased_training.validate();
  debiased_training.validate();
  Require(biased_training.loss_mode == LossMode::kGCE, "biased_training.loss_mode must be 'gce'");
  Require(debiased_training.loss_mode == LossMode::kCE, "debiased_training.loss_mode must be 'ce'");
  Require(extraction.k >= 1, "extraction.k must be >= 1");
  Require(caption.m >= 1, "caption.m must be >= 1");
  Require(caption.parallelism >= 1, "caption.parallelism must be >= 1");
  Require(registry.has_captioner(caption.backend), "unregistered captioner '" + caption.backend + "'");
  Require(!filter.f || *filter.f >= 1, "filter.f must be >= 1 or \"auto\"");
  Require(registry.has_generator(generation.backend),
          "unregistered generator '" + generation.backend + "'");
  Require(generation.size >= 8, "generation.size must be >= 8");
  Require(generation.parallelism >= 1, "generation.parallelism must be >= 1");
  Require(eval.trials >= 1, "eval.trials must be >= 1");
  Require(energy.device_watts >= 0, "energy.device_watts must be >= 0");
  Require(energy.carbon_intensity >= 0, "energy.carbon_intensity must be >= 0");
  Require(workers >= 1, "workers must be >= 1");
}

Json to_json(const ExperimentConfig& c) {
  Json dataset = Json::object();
  if (c.dataset.synth) dataset["synth"] = *c.dataset.synth;
  if (!c.dataset.manifest.empty()) dataset["manifest"] = c.dataset.manifest.generic_string();
  Json filter{{"enabled", c.filter.enabled}, {"f", c.filter.f ? Json(*c.filter.f) : Json("auto")}};
  if (c.filter.stop_words) filter["stop_words"] = *c.filter.stop_words;
  return Json{
      {"dataset", dataset},
      {"biased_training", c.biased_training},
      {"debiased_training", c.debiased_training},
      {"extraction",
       {{"k", c.extraction.k},
        {"ranking_loss", to_string(c.extraction.ranking_loss)},
        {"per_class_balance", c.extraction.per_class_balance}}},
      {"caption",
       {{"backend", c.caption.backend},
        {"m", c.caption.m},
        {"parallelism", c.caption.parallelism},
        {"instruction", c.caption.instruction},
        {"endpoint", c.caption.endpoint}}},
      {"filter", filter},
      {"generation",
       {{"backend", c.generation.backend},
        {"target", c.generation.target ? Json(*c.generation.target) : Json("balance")},
        {"size", c.generation.size},
        {"parallelism", c.generation.parallelism},
        {"oversample_topk", c.generation.oversample_topk},
        {"endpoint", c.generation.endpoint}}},
      {"eval", {{"trials", c.eval.trials}, {"export_embeddings", c.eval.export_embeddings}}},
      {"energy", {{"device_watts", c.energy.device_watts}, {"carbon_intensity", c.energy.carbon_intensity}}},
      {"seed", c.seed},
      {"deterministic", c.deterministic},
      {"workers", c.workers},
  };
}

ExperimentConfig config_from_json(const Json& j, const fs::path& base_dir) {
  ExperimentConfig c;
  try {
    if (j.contains("dataset")) {
      const Json& d = j["dataset"];
      if (d.contains("manifest")) {
        c.dataset.synth.reset();
        fs::path p = d["manifest"].get<std::string>();
        c.dataset.manifest = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
      }
      if (d.contains("synth")) c.dataset.synth = d["synth"].get<SynthShapesSpec>();
    }
    if (j.contains("biased_training")) {
      Json b = j["biased_training"];
      if (!b.contains("loss_mode")) b["loss_mode"] = "gce";
      c.biased_training = b.get<ClassifierConfig>();
    }
    if (j.contains("debiased_training")) c.debiased_training = j["debiased_training"].get<ClassifierConfig>();
    if (j.contains("extraction")) {
      const Json& e = j["extraction"];
      c.extraction.k = e.value("k", c.extraction.k);
      c.extraction.ranking_loss = parse_loss_mode(e.value("ranking_loss", std::string("ce")));
      c.extraction.per_class_balance = e.value("per_class_balance", false);
    }
    if (j.contains("caption")) {
      const Json& s = j["caption"];
      c.caption.backend = s.value("backend", c.caption.backend);
      c.caption.m = s.value("m", c.caption.m);
      c.caption.parallelism = s.value("parallelism", c.caption.parallelism);
      c.caption.instruction = s.value("instruction", c.caption.instruction);
      if (s.contains("endpoint")) c.caption.endpoint = s["endpoint"].get<EndpointConfig>();
    }
    if (j.contains("filter")) {
      const Json& s = j["filter"];
      c.filter.enabled = s.value("enabled", true);
      if (s.contains("f") && !(s["f"].is_string() && s["f"] == "auto")) c.filter.f = s["f"].get<int>();
      if (s.contains("stop_words")) c.filter.stop_words = s["stop_words"].get<std::vector<std::string>>();
    }
    if (j.contains("generation")) {
      const Json& s = j["generation"];
      c.generation.backend = s.value("backend", c.generation.backend);
      if (s.contains("target") && !(s["target"].is_string() && s["target"] == "balance")) {
        c.generation.target = s["target"].get<std::size_t>();
      }
      c.generation.size = s.value("size", c.generation.size);
      c.generation.parallelism = s.value("parallelism", c.generation.parallelism);
      c.generation.oversample_topk = s.value("oversample_topk", false);
      if (s.contains("endpoint")) c.generation.endpoint = s["endpoint"].get<EndpointConfig>();
    }
    if (j.contains("eval")) {
      c.eval.trials = j["eval"].value("trials", c.eval.trials);
      c.eval.export_embeddings = j["eval"].value("export_embeddings", c.eval.export_embeddings);
    }
    if (j.contains("energy")) {
      c.energy.device_watts = j["energy"].value("device_watts", c.energy.device_watts);
      c.energy.carbon_intensity = j["energy"].value("carbon_intensity", c.energy.carbon_intensity);
    }
    c.seed = j.value("seed", c.seed);
    c.deterministic = j.value("deterministic", c.deterministic);
    c.workers = j.value("workers", c.workers);
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  const std::string text = read_text_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

}  // namespace debias
