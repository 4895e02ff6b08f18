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

#ifndef DEBIAS_EVAL_EVALUATE_HPP_
#define DEBIAS_EVAL_EVALUATE_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "debias/common/io.hpp"
#include "debias/dataset/manifest.hpp"
#include "debias/train/trainer.hpp"

namespace debias {

struct Tally {
  std::size_t correct = 0;
  std::size_t total = 0;

  // Empty when total is 0.
  std::optional<double> accuracy() const;
  friend bool operator==(const Tally&, const Tally&) = default;
};

// Accuracies are ratios of integer counts, so accumulation order never
// changes the result.
struct EvalMetrics {
  Tally overall;
  Tally aligned;
  Tally conflict;
  std::vector<Tally> per_class;

  std::size_t n_test() const { return overall.total; }
  double overall_acc() const { return overall.accuracy().value_or(0.0); }
  std::optional<double> aligned_acc() const { return aligned.accuracy(); }
  std::optional<double> conflict_acc() const { return conflict.accuracy(); }

  friend bool operator==(const EvalMetrics&, const EvalMetrics&) = default;
};

// Index of the largest probability; ties go to the lowest index.
int predict(const ImageClassifier& model, const Image& image);

// Throws ValidationError when the split is empty and DecodeError when an image
// cannot be read.
EvalMetrics evaluate(const ImageClassifier& model, const DatasetManifest& manifest,
                     Split split = Split::kTest, std::size_t workers = 1);

// Fixed six-decimal rendering used by every metrics file; "NA" when absent.
std::string format_fraction(std::optional<double> value);

// Flat (key, value) pairs: n, correct, overall_acc, aligned_acc, conflict_acc,
// class<i>_acc.
std::vector<std::pair<std::string, std::string>> metric_pairs(const EvalMetrics& metrics);

struct EmbeddingRecord {
  std::string id;
  int label = 0;
  Group group = Group::kUnknown;
  std::vector<double> vector;
};

struct EmbeddingFile {
  std::size_t width = 0;
  std::string layer;
  std::string model_hash;
  std::vector<EmbeddingRecord> records;
};

// One record per sample of `split` (all samples when empty), in manifest
// order. Throws ValidationError for an unknown layer.
EmbeddingFile export_embeddings(const ImageClassifier& model, const DatasetManifest& manifest,
                                std::string_view layer = "penultimate",
                                std::optional<Split> split = Split::kTest, std::size_t workers = 1);
void write_embeddings(const EmbeddingFile& file, const std::filesystem::path& path);
EmbeddingFile read_embeddings(const std::filesystem::path& path);

// Mean Euclidean distance between the per-class centroids of the records in
// `group` (all records when empty). Empty when fewer than two classes appear.
std::optional<double> mean_centroid_distance(const EmbeddingFile& file,
                                             std::optional<Group> group = std::nullopt);

}  // namespace debias

#endif  // DEBIAS_EVAL_EVALUATE_HPP_
