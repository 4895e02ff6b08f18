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

#ifndef DEBIAS_DATASET_SYNTH_HPP_
#define DEBIAS_DATASET_SYNTH_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "debias/dataset/manifest.hpp"

namespace debias {

// Desk-scale biased dataset: the class is the shape, the bias attribute is the
// fill color. Class i is dominantly rendered in color_vocab[i].
struct SynthShapesSpec {
  int num_classes = 4;
  std::vector<std::string> shape_vocab = {"circle", "square", "triangle", "cross"};
  std::vector<std::string> color_vocab = {"red", "green", "blue", "yellow"};
  double conflict_ratio = 0.01;
  std::size_t train_count = 2000;
  std::size_t test_count = 400;
  int image_size = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const SynthShapesSpec& spec);
void from_json(const nlohmann::json& j, SynthShapesSpec& spec);

// round-half-up(rho * train_count), at least 1 when rho > 0.
std::size_t synth_conflict_count(double rho, std::size_t train_count);

// Renders images under out_dir/images and writes out_dir/manifest.jsonl.
// Deterministic in spec.seed; each sample's pixels depend only on
// hash(seed, id), so output does not depend on render order.
DatasetManifest synth_generate(const SynthShapesSpec& spec, const std::filesystem::path& out_dir,
                               std::size_t workers = 1);

}  // namespace debias

#endif  // DEBIAS_DATASET_SYNTH_HPP_
