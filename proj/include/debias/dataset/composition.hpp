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

#ifndef DEBIAS_DATASET_COMPOSITION_HPP_
#define DEBIAS_DATASET_COMPOSITION_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "debias/dataset/manifest.hpp"

namespace debias {

struct GroupCounts {
  std::size_t aligned = 0;
  std::size_t conflict = 0;
  std::size_t unknown = 0;

  std::size_t total() const { return aligned + conflict + unknown; }
  void add(Group g);
};

struct CompositionReport {
  std::vector<GroupCounts> train_per_class;
  std::vector<GroupCounts> test_per_class;
  GroupCounts train;
  GroupCounts test;
  // conflict / (conflict + aligned) over the train split; empty when the train
  // split has no known-group samples.
  std::optional<double> realized_conflict_ratio;
  double declared_conflict_ratio = 0.0;
  // |conflict - declared * (conflict + aligned)| <= 1, i.e. the declared
  // ratio is reproduced up to one sample of rounding.
  bool ratio_matches_declared = false;

  std::size_t total() const { return train.total() + test.total(); }
};

// Never fails; unknown-group samples are counted separately.
CompositionReport validate_composition(const DatasetManifest& manifest);

std::string format_composition(const CompositionReport& report,
                               const std::vector<std::string>& class_names);

}  // namespace debias

#endif  // DEBIAS_DATASET_COMPOSITION_HPP_
