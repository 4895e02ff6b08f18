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

#include "debias/filter/text_filter.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>
#include <unordered_set>

#include "debias/common/error.hpp"
#include "debias/common/hash.hpp"
#include "debias/common/io.hpp"

namespace debias {

namespace fs = std::filesystem;

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

const std::set<std::string>& default_stop_words() {
  static const std::set<std::string> kWords = {
      "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "your", "yours",
      "yourself", "yourselves", "he", "him", "his", "himself", "she", "her", "hers", "herself",
      "it", "its", "itself", "they", "them", "their", "theirs", "themselves", "what", "which",
      "who", "whom", "this", "that", "these", "those", "am", "is", "are", "was", "were", "be",
      "been", "being", "have", "has", "had", "having", "do", "does", "did", "doing", "a", "an",
      "the", "and", "but", "if", "or", "because", "as", "until", "while", "of", "at", "by",
      "for", "with", "about", "against", "between", "into", "through", "during", "before",
      "after", "above", "below", "to", "from", "up", "down", "in", "out", "on", "off", "over",
      "under", "again", "further", "then", "once", "here", "there", "when", "where", "why",
      "how", "all", "any", "both", "each", "few", "more", "most", "other", "some", "such", "no",
      "nor", "not", "only", "own", "same", "so", "than", "too", "very", "s", "t", "can", "will",
      "just", "don", "should", "now", "d", "ll", "m", "o", "re", "ve", "y", "ain", "aren",
      "couldn", "didn", "doesn", "hadn", "hasn", "haven", "isn", "ma", "mightn", "mustn",
      "needn", "shan", "shouldn", "wasn", "weren", "won", "wouldn", "also", "could", "would",
      "may", "might", "must", "shall", "one", "onto", "upon", "within", "without", "along",
      "among", "around", "behind", "beside", "near", "next", "toward", "towards"};
  return kWords;
}

int FilterSpec::resolved_f() const {
  const long v = f ? *f : 2 * static_cast<long>(num_classes);
  if (v < 1) throw ValidationError("filter: F must be >= 1 (got " + std::to_string(v) + ")");
  return static_cast<int>(v);
}

std::vector<std::string> FrequencyTable::words() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& [w, c] : entries) out.push_back(w);
  return out;
}

FrequencyTable FrequencyTable::truncated(std::size_t f) const {
  FrequencyTable t;
  t.entries.assign(entries.begin(), entries.begin() + static_cast<long>(std::min(f, entries.size())));
  return t;
}

FrequencyTable count_words(const TextCorpus& corpus, const std::set<std::string>& stop_words) {
  std::unordered_map<std::string, long> counts;
  for (const auto& r : corpus.records) {
    for (auto& tok : tokenize(r.text)) {
      if (!stop_words.contains(tok)) ++counts[std::move(tok)];
    }
  }
  if (counts.empty()) throw ValidationError("filter: empty vocabulary after stop-word removal");
  FrequencyTable t;
  t.entries.assign(counts.begin(), counts.end());
  std::sort(t.entries.begin(), t.entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return t;
}

FrequencyTable top_frequent(const TextCorpus& corpus, const FilterSpec& spec) {
  const int f = spec.resolved_f();
  return count_words(corpus, spec.stop_words).truncated(static_cast<std::size_t>(f));
}

FilteredCorpus filter_with_words(const TextCorpus& corpus, const std::vector<std::string>& words) {
  const std::unordered_set<std::string> top(words.begin(), words.end());
  FilteredCorpus out;
  out.top_f_words = words;
  out.f = static_cast<int>(words.size());
  out.source_corpus_hash = corpus_hash(corpus);
  for (const auto& r : corpus.records) {
    const auto toks = tokenize(r.text);
    const bool hit = std::any_of(toks.begin(), toks.end(), [&](const auto& t) { return top.contains(t); });
    if (hit) {
      out.kept.push_back(r);
    } else {
      out.dropped.push_back({r, std::string(kNoTopFWord)});
    }
  }
  return out;
}

FilteredCorpus filter_corpus(const TextCorpus& corpus, const FilterSpec& spec) {
  FilteredCorpus out = filter_with_words(corpus, top_frequent(corpus, spec).words());
  out.f = spec.resolved_f();
  return out;
}

FilteredCorpus passthrough(const TextCorpus& corpus) {
  FilteredCorpus out;
  out.kept = corpus.records;
  out.source_corpus_hash = corpus_hash(corpus);
  return out;
}

std::string serialize_filtered(const FilteredCorpus& fc) {
  std::map<std::string, long> reasons;
  for (const auto& d : fc.dropped) ++reasons[d.reason];
  Json header{{"kind", "filtered-corpus"},
              {"f", fc.f},
              {"top_f_words", fc.top_f_words},
              {"source_corpus", fc.source_corpus_hash},
              {"drop_reasons", reasons}};

  std::vector<std::pair<const CaptionRecord*, const std::string*>> all;
  for (const auto& r : fc.kept) all.emplace_back(&r, nullptr);
  for (const auto& d : fc.dropped) all.emplace_back(&d.record, &d.reason);
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return *a.first < *b.first; });

  std::vector<Json> records;
  records.reserve(all.size());
  for (const auto& [r, reason] : all) {
    Json j{{"sample_id", r->sample_id}, {"caption_index", r->caption_index}, {"text", r->text}};
    if (reason != nullptr) j["dropped"] = *reason;
    records.push_back(std::move(j));
  }
  return to_json_lines(header, records);
}

void write_filtered(const FilteredCorpus& filtered, const fs::path& path) {
  write_text_file(path, serialize_filtered(filtered));
}

FilteredCorpus read_filtered(const fs::path& path) {
  const JsonLines lines = read_json_lines(path);
  expect_kind(lines.header, "filtered-corpus", path);
  FilteredCorpus fc;
  fc.f = lines.header.at("f").get<int>();
  fc.top_f_words = lines.header.at("top_f_words").get<std::vector<std::string>>();
  fc.source_corpus_hash = lines.header.at("source_corpus").get<std::string>();
  for (const auto& j : lines.records) {
    CaptionRecord r{j.at("sample_id").get<std::string>(), j.at("caption_index").get<int>(),
                    j.at("text").get<std::string>()};
    if (j.contains("dropped")) {
      fc.dropped.push_back({std::move(r), j.at("dropped").get<std::string>()});
    } else {
      fc.kept.push_back(std::move(r));
    }
  }
  return fc;
}

std::string filtered_hash(const FilteredCorpus& filtered) {
  return sha256_hex(serialize_filtered(filtered));
}

std::string format_frequency_report(const FrequencyTable& table) {
  std::string out;
  for (const auto& [w, c] : table.entries) out += w + "\t" + std::to_string(c) + "\n";
  return out;
}

}  // namespace debias
