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

#include "debias/eval/evaluate.hpp"

#include <cmath>
#include <cstdio>
#include <map>

#include "debias/common/error.hpp"
#include "debias/common/parallel.hpp"

namespace debias {

namespace fs = std::filesystem;

std::optional<double> Tally::accuracy() const {
  if (total == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(total);
}

int predict(const ImageClassifier& model, const Image& image) {
  const auto probs = model.probabilities(image_to_tensor(image, model.input_size()));
  int best = 0;
  for (int i = 1; i < static_cast<int>(probs.size()); ++i) {
    if (probs[static_cast<size_t>(i)] > probs[static_cast<size_t>(best)]) best = i;
  }
  return best;
}

EvalMetrics evaluate(const ImageClassifier& model, const DatasetManifest& manifest, Split split,
                     std::size_t workers) {
  std::vector<const AttributedSample*> samples;
  for (const auto& s : manifest.samples) {
    if (s.split == split) samples.push_back(&s);
  }
  if (samples.empty()) {
    throw ValidationError("evaluate: manifest '" + manifest.name + "' has no " +
                          std::string(to_string(split)) + " split");
  }
  std::vector<char> correct(samples.size(), 0);
  parallel_for(samples.size(), workers, [&](std::size_t i) {
    const Image img = read_png(manifest.image_path(*samples[i]));
    correct[i] = predict(model, img) == samples[i]->label ? 1 : 0;
  });

  EvalMetrics m;
  m.per_class.resize(manifest.num_classes());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const AttributedSample& s = *samples[i];
    const std::size_t c = correct[i] ? 1 : 0;
    m.overall.correct += c;
    ++m.overall.total;
    if (static_cast<std::size_t>(s.label) < m.per_class.size()) {
      m.per_class[static_cast<std::size_t>(s.label)].correct += c;
      ++m.per_class[static_cast<std::size_t>(s.label)].total;
    }
    if (s.group == Group::kAligned) {
      m.aligned.correct += c;
      ++m.aligned.total;
    } else if (s.group == Group::kConflict) {
      m.conflict.correct += c;
      ++m.conflict.total;
    }
  }
  return m;
}

std::string format_fraction(std::optional<double> value) {
  if (!value) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", *value);
  return buf;
}

std::vector<std::pair<std::string, std::string>> metric_pairs(const EvalMetrics& m) {
  std::vector<std::pair<std::string, std::string>> out = {
      {"n", std::to_string(m.overall.total)},
      {"correct", std::to_string(m.overall.correct)},
      {"overall_acc", format_fraction(m.overall.accuracy())},
      {"aligned_acc", format_fraction(m.aligned_acc())},
      {"conflict_acc", format_fraction(m.conflict_acc())},
  };
  for (std::size_t i = 0; i < m.per_class.size(); ++i) {
    out.emplace_back("class" + std::to_string(i) + "_acc", format_fraction(m.per_class[i].accuracy()));
  }
  return out;
}

EmbeddingFile export_embeddings(const ImageClassifier& model, const DatasetManifest& manifest,
                                std::string_view layer, std::optional<Split> split,
                                std::size_t workers) {
  std::vector<const AttributedSample*> samples;
  for (const auto& s : manifest.samples) {
    if (!split || s.split == *split) samples.push_back(&s);
  }
  EmbeddingFile file;
  file.layer = std::string(layer);
  file.model_hash = model.model_hash();
  file.records.resize(samples.size());
  parallel_for(samples.size(), workers, [&](std::size_t i) {
    const AttributedSample& s = *samples[i];
    const Image img = read_png(manifest.image_path(s));
    file.records[i] = {s.id, s.label, s.group,
                       model.embedding(image_to_tensor(img, model.input_size()), layer)};
  });
  if (!file.records.empty()) file.width = file.records.front().vector.size();
  for (const auto& r : file.records) {
    if (r.vector.size() != file.width) throw ValidationError("embedding width varies across samples");
  }
  return file;
}

void write_embeddings(const EmbeddingFile& file, const fs::path& path) {
  Json header{{"kind", "embeddings"},
              {"width", file.width},
              {"layer", file.layer},
              {"model_hash", file.model_hash},
              {"count", file.records.size()}};
  std::vector<Json> records;
  records.reserve(file.records.size());
  for (const auto& r : file.records) {
    records.push_back({{"id", r.id}, {"label", r.label}, {"group", to_string(r.group)}, {"vector", r.vector}});
  }
  write_text_file(path, to_json_lines(header, records));
}

EmbeddingFile read_embeddings(const fs::path& path) {
  const JsonLines lines = read_json_lines(path);
  expect_kind(lines.header, "embeddings", path);
  EmbeddingFile f;
  f.width = lines.header.at("width").get<std::size_t>();
  f.layer = lines.header.at("layer").get<std::string>();
  f.model_hash = lines.header.at("model_hash").get<std::string>();
  for (const auto& j : lines.records) {
    EmbeddingRecord r;
    r.id = j.at("id").get<std::string>();
    r.label = j.at("label").get<int>();
    r.group = parse_group(j.at("group").get<std::string>());
    r.vector = j.at("vector").get<std::vector<double>>();
    if (r.vector.size() != f.width) {
      throw ValidationError(path.string() + ": record '" + r.id + "' has width " +
                            std::to_string(r.vector.size()) + ", header says " + std::to_string(f.width));
    }
    f.records.push_back(std::move(r));
  }
  return f;
}

std::optional<double> mean_centroid_distance(const EmbeddingFile& file, std::optional<Group> group) {
  std::map<int, std::pair<std::vector<double>, std::size_t>> sums;
  for (const auto& r : file.records) {
    if (group && r.group != *group) continue;
    auto& [sum, n] = sums[r.label];
    if (sum.empty()) sum.assign(file.width, 0.0);
    for (std::size_t d = 0; d < file.width; ++d) sum[d] += r.vector[d];
    ++n;
  }
  if (sums.size() < 2) return std::nullopt;
  std::vector<std::vector<double>> centroids;
  for (auto& [label, entry] : sums) {
    for (auto& v : entry.first) v /= static_cast<double>(entry.second);
    centroids.push_back(std::move(entry.first));
  }
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < centroids.size(); ++a) {
    for (std::size_t b = a + 1; b < centroids.size(); ++b) {
      double d2 = 0.0;
      for (std::size_t d = 0; d < file.width; ++d) {
        const double diff = centroids[a][d] - centroids[b][d];
        d2 += diff * diff;
      }
      total += std::sqrt(d2);
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

}  // namespace debias
