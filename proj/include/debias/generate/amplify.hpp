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

#ifndef DEBIAS_GENERATE_AMPLIFY_HPP_
#define DEBIAS_GENERATE_AMPLIFY_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "debias/dataset/manifest.hpp"
#include "debias/extract/extractor.hpp"
#include "debias/filter/text_filter.hpp"
#include "debias/generate/generator.hpp"

namespace debias {

// Class index -> lowercase words that identify the class.
using ClassVocab = std::map<int, std::set<std::string>>;

// Every token of every class name.
ClassVocab class_vocab_from_names(const std::vector<std::string>& class_names);

// The unique class whose vocabulary meets the prompt's tokens; empty when no
// class or more than one class matches.
std::optional<int> assign_label(std::string_view prompt, const ClassVocab& vocab);

struct GeneratedSample {
  std::string id;         // "gen-00000"
  std::string image_ref;  // relative to the generated-set directory
  int label = 0;
  std::string source_sample_id;
  int source_caption_index = 1;
  std::string prompt;
  std::uint64_t seed = 0;

  std::string source_key() const { return source_sample_id + "#" + std::to_string(source_caption_index); }

  friend bool operator==(const GeneratedSample&, const GeneratedSample&) = default;
};

// Explicit count, or empty for "balance": the number of bias-aligned train
// samples of the source manifest.
struct GenerationTarget {
  std::optional<std::size_t> count;

  std::size_t resolve(const DatasetManifest& source) const;
};

struct AmplifyOptions {
  std::size_t target = 0;
  int size = 32;
  std::uint64_t seed = 0;
  std::size_t parallelism = 4;
};

struct RejectedPrompt {
  std::string caption_key;
  std::string reason;

  friend bool operator==(const RejectedPrompt&, const RejectedPrompt&) = default;
};

struct GeneratedSet {
  std::vector<GeneratedSample> samples;
  std::string generator_id;
  std::uint64_t seed = 0;
  int size = 0;
  std::size_t target = 0;
  std::string source_filtered_hash;
  std::size_t skipped_unlabeled = 0;     // kept captions with no unique label
  std::vector<RejectedPrompt> rejected;  // captions the generator refused
  std::map<int, std::size_t> per_label;
  std::map<std::string, std::size_t> per_caption_usage;  // caption key -> images
  // Directory image_refs resolve against. Not serialized.
  std::filesystem::path base_dir;
};

// Cycles over the labelable kept captions, always picking the least-used
// caption next (ties in corpus order), until exactly `target` images exist.
// Image j of caption c uses seed hash(seed, "c:j"). A caption whose prompt is
// rejected leaves the rotation. Images are written to out_dir/images.
// Throws ValidationError when no caption is labelable or every labelable
// caption is rejected; rethrows AdapterError once the retry budget is spent.
GeneratedSet amplify(const FilteredCorpus& corpus, const Generator& generator,
                     const ClassVocab& vocab, const AmplifyOptions& options,
                     const std::filesystem::path& out_dir);

// Header {kind, generator, seed, size, target, source_filtered, ...}, then one
// {id, image, label, source, prompt, seed} per line.
void write_generated(const GeneratedSet& set, const std::filesystem::path& path);
GeneratedSet read_generated(const std::filesystem::path& path);
std::string generated_hash(const GeneratedSet& set);

struct Provenance {
  std::string original_manifest_hash;
  std::string corpus_hash;
  std::string generator_id;
};

struct DebiasedDataset {
  DatasetManifest manifest;
  Provenance provenance;
};

struct AssembleOptions {
  // Also append a duplicate of each extracted candidate ("topk-" prefix).
  const ConflictCandidateSet* oversample_topk = nullptr;
};

// Union of the original samples and the generated ones (train split, unknown
// group), with image refs rebased onto out_dir. Original samples are otherwise
// unchanged. Throws ValidationError on id collisions or out-of-range labels.
DebiasedDataset assemble_debiased(const DatasetManifest& original, const GeneratedSet& generated,
                                  const std::string& corpus_hash,
                                  const std::filesystem::path& out_dir,
                                  const AssembleOptions& options = {});

}  // namespace debias

#endif  // DEBIAS_GENERATE_AMPLIFY_HPP_
