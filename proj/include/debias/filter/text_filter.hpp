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

#ifndef DEBIAS_FILTER_TEXT_FILTER_HPP_
#define DEBIAS_FILTER_TEXT_FILTER_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "debias/caption/corpus.hpp"

namespace debias {

// Lowercases and splits on runs of non-alphanumeric characters. No stemming.
std::vector<std::string> tokenize(std::string_view text);

// Bundled English stop-word list (lowercase).
const std::set<std::string>& default_stop_words();

struct FilterSpec {
  std::set<std::string> stop_words = default_stop_words();
  std::optional<int> f;  // empty means auto: 2 x num_classes
  std::size_t num_classes = 0;
  // Class index -> lowercase class words. Diagnostics only.
  std::map<int, std::set<std::string>> class_vocab;

  // Throws ValidationError when the resolved budget is below 1.
  int resolved_f() const;
};

// (word, count), count descending then word ascending.
struct FrequencyTable {
  std::vector<std::pair<std::string, long>> entries;

  std::vector<std::string> words() const;
  FrequencyTable truncated(std::size_t f) const;
};

// Token-level counts over every caption, stop words removed before counting.
// Throws ValidationError when nothing is left to count.
FrequencyTable count_words(const TextCorpus& corpus, const std::set<std::string>& stop_words);

// count_words truncated to the resolved F.
FrequencyTable top_frequent(const TextCorpus& corpus, const FilterSpec& spec);

inline constexpr std::string_view kNoTopFWord = "no-top-F-word";

struct DroppedCaption {
  CaptionRecord record;
  std::string reason;

  friend bool operator==(const DroppedCaption&, const DroppedCaption&) = default;
};

struct FilteredCorpus {
  std::vector<CaptionRecord> kept;
  std::vector<DroppedCaption> dropped;
  std::vector<std::string> top_f_words;
  int f = 0;
  std::string source_corpus_hash;
};

// Keeps a caption iff one of its tokens is among `words`. Record order is
// preserved in both lists.
FilteredCorpus filter_with_words(const TextCorpus& corpus, const std::vector<std::string>& words);

FilteredCorpus filter_corpus(const TextCorpus& corpus, const FilterSpec& spec);

// Passes every record through; used when filtering is disabled.
FilteredCorpus passthrough(const TextCorpus& corpus);

// Header {kind, f, top_f_words, source_corpus, drop_reasons}, then the input
// records in order, dropped ones carrying a "dropped" reason field.
std::string serialize_filtered(const FilteredCorpus& filtered);
void write_filtered(const FilteredCorpus& filtered, const std::filesystem::path& path);
FilteredCorpus read_filtered(const std::filesystem::path& path);
std::string filtered_hash(const FilteredCorpus& filtered);

// Two-column "word<TAB>count" text.
std::string format_frequency_report(const FrequencyTable& table);

}  // namespace debias

#endif  // DEBIAS_FILTER_TEXT_FILTER_HPP_
