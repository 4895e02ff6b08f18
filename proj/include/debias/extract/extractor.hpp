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

#ifndef DEBIAS_EXTRACT_EXTRACTOR_HPP_
#define DEBIAS_EXTRACT_EXTRACTOR_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "debias/dataset/manifest.hpp"

namespace debias {

struct LossEntry {
  std::string id;
  double loss = 0.0;

  friend bool operator==(const LossEntry&, const LossEntry&) = default;
};

// Loss descending, ties broken by id ascending. A total order, so the ranking
// of a set of entries does not depend on their input order.
struct LossRanking {
  std::vector<LossEntry> entries;
};

struct ConflictCandidateSet {
  std::vector<std::string> sample_ids;  // ranking order
  std::vector<double> losses;           // parallel to sample_ids
  std::size_t k = 0;                    // requested K
  std::string source_model;             // checkpoint content hash
};

inline constexpr std::size_t kDefaultTopK = 100;

// Throws ValidationError naming the sample for NaN or infinite losses and for
// duplicate ids.
LossRanking rank(std::span<const LossEntry> losses);
LossRanking rank(std::span<const std::pair<std::string, double>> losses);

struct ExtractOptions {
  // Take ceil(K / classes) per class instead of one global top-K. Off by
  // default; requires `manifest`.
  bool per_class_balance = false;
  const DatasetManifest* manifest = nullptr;
};

// First min(K, n) entries of the ranking. Throws std::invalid_argument for K < 1.
ConflictCandidateSet extract_topk(const LossRanking& ranking, std::size_t k = kDefaultTopK,
                                  const ExtractOptions& options = {});

// Fraction of candidates whose stored group is conflict. Empty (not
// computable) when any candidate is missing from the manifest or has an
// unknown group. An empty candidate set has purity 0.
std::optional<double> extraction_purity(const ConflictCandidateSet& candidates,
                                        const DatasetManifest& manifest);

// Candidate file: header {kind, k, source_model}, then one {id, loss} per line.
void write_candidates(const ConflictCandidateSet& candidates, const std::filesystem::path& path);
ConflictCandidateSet read_candidates(const std::filesystem::path& path);
std::string candidates_hash(const ConflictCandidateSet& candidates);

void write_ranking(const LossRanking& ranking, const std::string& source_model,
                   const std::filesystem::path& path);
LossRanking read_ranking(const std::filesystem::path& path);

}  // namespace debias

#endif  // DEBIAS_EXTRACT_EXTRACTOR_HPP_
