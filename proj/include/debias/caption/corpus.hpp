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

#ifndef DEBIAS_CAPTION_CORPUS_HPP_
#define DEBIAS_CAPTION_CORPUS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "debias/caption/captioner.hpp"
#include "debias/dataset/manifest.hpp"
#include "debias/extract/extractor.hpp"

namespace debias {

struct CaptionRecord {
  std::string sample_id;
  int caption_index = 1;  // 1-based
  std::string text;

  // "sample_id#index", the key generated samples use to cite their source.
  std::string key() const { return sample_id + "#" + std::to_string(caption_index); }

  friend bool operator==(const CaptionRecord&, const CaptionRecord&) = default;
  friend auto operator<=>(const CaptionRecord& a, const CaptionRecord& b) {
    if (auto c = a.sample_id <=> b.sample_id; c != 0) return c;
    return a.caption_index <=> b.caption_index;
  }
};

struct CaptionFailure {
  std::string sample_id;
  std::string reason;

  friend bool operator==(const CaptionFailure&, const CaptionFailure&) = default;
};

struct TextCorpus {
  std::vector<CaptionRecord> records;  // sorted by (sample_id, caption_index)
  std::string captioner_id;
  std::uint64_t seed = 0;
  int captions_per_sample = 3;
  std::string candidate_set_hash;
  std::vector<CaptionFailure> failures;  // sorted by sample_id
};

struct BuildCorpusOptions {
  int captions_per_sample = 3;
  std::uint64_t seed = 0;
  std::size_t parallelism = 4;
};

// Single line, whitespace runs collapsed to one space, trimmed. Case is kept.
std::string normalize_caption(std::string_view text);

// Captions every candidate with per-sample seed hash(seed, sample_id), so the
// result does not depend on call order. Per-sample failures are recorded and
// the run continues; a kUnavailable AdapterError aborts the whole build.
// Throws ValidationError when a candidate id is not in the manifest.
TextCorpus build_corpus(const ConflictCandidateSet& candidates, const DatasetManifest& manifest,
                        const Captioner& captioner, const BuildCorpusOptions& options = {});

// Header {kind, captioner, seed, m, candidate_set, failures}, then one
// {sample_id, caption_index, text} record per line.
std::string serialize_corpus(const TextCorpus& corpus);
void write_corpus(const TextCorpus& corpus, const std::filesystem::path& path);
TextCorpus read_corpus(const std::filesystem::path& path);
std::string corpus_hash(const TextCorpus& corpus);

}  // namespace debias

#endif  // DEBIAS_CAPTION_CORPUS_HPP_
