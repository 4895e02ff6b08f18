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

#ifndef DEBIAS_PIPELINE_CONFIG_HPP_
#define DEBIAS_PIPELINE_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "debias/common/http_adapter.hpp"
#include "debias/common/io.hpp"
#include "debias/dataset/synth.hpp"
#include "debias/extract/extractor.hpp"
#include "debias/train/trainer.hpp"

namespace debias {

class BackendRegistry;

// Exactly one of `synth` and `manifest` is set.
struct DatasetSection {
  std::optional<SynthShapesSpec> synth = SynthShapesSpec{};
  std::filesystem::path manifest;
};

struct ExtractionSection {
  std::size_t k = kDefaultTopK;
  LossMode ranking_loss = LossMode::kCE;
  bool per_class_balance = false;
};

struct CaptionSection {
  std::string backend = "oracle";
  int m = 3;
  std::size_t parallelism = 4;
  std::string instruction = "Describe this image in one sentence.";
  EndpointConfig endpoint;
};

struct FilterSection {
  bool enabled = true;
  std::optional<int> f;  // empty means auto
  std::optional<std::vector<std::string>> stop_words;
};

struct GenerationSection {
  std::string backend = "oracle";
  std::optional<std::size_t> target;  // empty means balance
  int size = 32;
  std::size_t parallelism = 4;
  bool oversample_topk = false;
  EndpointConfig endpoint;
};

struct EvalSection {
  int trials = 1;
  bool export_embeddings = true;
};

struct EnergySection {
  double device_watts = 15.0;
  double carbon_intensity = 475.0;  // gCO2eq/kWh
};

struct ExperimentConfig {
  DatasetSection dataset;
  ClassifierConfig biased_training = [] {
    ClassifierConfig c;
    c.loss_mode = LossMode::kGCE;
    return c;
  }();
  ClassifierConfig debiased_training;
  ExtractionSection extraction;
  CaptionSection caption;
  FilterSection filter;
  GenerationSection generation;
  EvalSection eval;
  EnergySection energy;
  std::uint64_t seed = 0;
  bool deterministic = false;
  std::size_t workers = 1;

  // Throws ValidationError for invalid sections or backends missing from
  // `registry`.
  void validate(const BackendRegistry& registry) const;
};

Json to_json(const ExperimentConfig& config);
// Missing keys keep their defaults. Relative manifest paths resolve against
// `base_dir`.
ExperimentConfig config_from_json(const Json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace debias

#endif  // DEBIAS_PIPELINE_CONFIG_HPP_
