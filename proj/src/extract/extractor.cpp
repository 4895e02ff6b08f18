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

#include "debias/extract/extractor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "debias/common/error.hpp"
#include "debias/common/hash.hpp"
#include "debias/common/io.hpp"

namespace debias {

namespace fs = std::filesystem;

namespace {

bool RanksBefore(const LossEntry& a, const LossEntry& b) {
  if (a.loss != b.loss) return a.loss > b.loss;
  return a.id < b.id;
}

std::string SerializeCandidates(const ConflictCandidateSet& c) {
  Json header{{"kind", "conflict-candidates"}, {"k", c.k}, {"source_model", c.source_model}};
  std::vector<Json> records;
  records.reserve(c.sample_ids.size());
  for (size_t i = 0; i < c.sample_ids.size(); ++i) {
    records.push_back({{"id", c.sample_ids[i]}, {"loss", c.losses[i]}});
  }
  return to_json_lines(header, records);
}

}  // namespace

LossRanking rank(std::span<const LossEntry> losses) {
  std::unordered_set<std::string> seen;
  seen.reserve(losses.size());
  for (const auto& e : losses) {
    if (!std::isfinite(e.loss)) {
      throw ValidationError("non-finite loss for sample '" + e.id + "'");
    }
    if (!seen.insert(e.id).second) throw ValidationError("duplicate id '" + e.id + "' in losses");
  }
  LossRanking r{{losses.begin(), losses.end()}};
  std::sort(r.entries.begin(), r.entries.end(), RanksBefore);
  return r;
}

LossRanking rank(std::span<const std::pair<std::string, double>> losses) {
  std::vector<LossEntry> entries;
  entries.reserve(losses.size());
  for (const auto& [id, loss] : losses) entries.push_back({id, loss});
  return rank(entries);
}

ConflictCandidateSet extract_topk(const LossRanking& ranking, std::size_t k,
                                  const ExtractOptions& options) {
  if (k < 1) throw std::invalid_argument("extract_topk: K must be >= 1");
  ConflictCandidateSet out;
  out.k = k;
  if (!options.per_class_balance) {
    const size_t n = std::min(k, ranking.entries.size());
    for (size_t i = 0; i < n; ++i) {
      out.sample_ids.push_back(ranking.entries[i].id);
      out.losses.push_back(ranking.entries[i].loss);
    }
    return out;
  }

  if (options.manifest == nullptr) {
    throw std::invalid_argument("extract_topk: per-class balancing needs the manifest");
  }
  const auto& m = *options.manifest;
  const size_t classes = std::max<size_t>(1, m.num_classes());
  const size_t quota = (k + classes - 1) / classes;
  std::vector<size_t> taken(classes, 0);
  for (const auto& e : ranking.entries) {
    if (out.sample_ids.size() == k) break;
    const AttributedSample* s = m.find(e.id);
    if (s == nullptr) throw ValidationError("ranked id '" + e.id + "' is not in the manifest");
    auto& t = taken[static_cast<size_t>(s->label)];
    if (t == quota) continue;
    ++t;
    out.sample_ids.push_back(e.id);
    out.losses.push_back(e.loss);
  }
  return out;
}

std::optional<double> extraction_purity(const ConflictCandidateSet& candidates,
                                        const DatasetManifest& manifest) {
  if (candidates.sample_ids.empty()) return 0.0;
  size_t conflict = 0;
  for (const auto& id : candidates.sample_ids) {
    const AttributedSample* s = manifest.find(id);
    if (s == nullptr || s->group == Group::kUnknown) return std::nullopt;
    if (s->group == Group::kConflict) ++conflict;
  }
  return static_cast<double>(conflict) / static_cast<double>(candidates.sample_ids.size());
}

void write_candidates(const ConflictCandidateSet& c, const fs::path& path) {
  write_text_file(path, SerializeCandidates(c));
}

ConflictCandidateSet read_candidates(const fs::path& path) {
  const JsonLines lines = read_json_lines(path);
  expect_kind(lines.header, "conflict-candidates", path);
  ConflictCandidateSet c;
  c.k = lines.header.at("k").get<size_t>();
  c.source_model = lines.header.at("source_model").get<std::string>();
  for (const auto& r : lines.records) {
    c.sample_ids.push_back(r.at("id").get<std::string>());
    c.losses.push_back(r.at("loss").get<double>());
  }
  return c;
}

std::string candidates_hash(const ConflictCandidateSet& c) {
  return sha256_hex(SerializeCandidates(c));
}

void write_ranking(const LossRanking& ranking, const std::string& source_model,
                   const fs::path& path) {
  Json header{{"kind", "loss-ranking"}, {"source_model", source_model}};
  std::vector<Json> records;
  records.reserve(ranking.entries.size());
  for (const auto& e : ranking.entries) records.push_back({{"id", e.id}, {"loss", e.loss}});
  write_text_file(path, to_json_lines(header, records));
}

LossRanking read_ranking(const fs::path& path) {
  const JsonLines lines = read_json_lines(path);
  expect_kind(lines.header, "loss-ranking", path);
  LossRanking r;
  for (const auto& rec : lines.records) {
    r.entries.push_back({rec.at("id").get<std::string>(), rec.at("loss").get<double>()});
  }
  return r;
}

}  // namespace debias
