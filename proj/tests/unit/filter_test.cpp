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


#include <string>
#include <vector>

#include "debias/caption/corpus.hpp"
#include "debias/common/error.hpp"
#include "debias/filter/text_filter.hpp"
#include "doctest.h"
#include "support/temp_dir.hpp"

using namespace debias;
using debias::testing::TempDir;

namespace {

TextCorpus Corpus(const std::vector<std::string>& texts) {
  TextCorpus c;
  for (std::size_t i = 0; i < texts.size(); ++i) c.records.push_back({"s" + std::to_string(i), 1, texts[i]});
  c.captioner_id = "oracle";
  return c;
}

}  // namespace

TEST_CASE("tokenizer lowercases and splits on non-alphanumerics") {
  CHECK(tokenize("A Red-circle, on 2 planes!") ==
        std::vector<std::string>{"a", "red", "circle", "on", "2", "planes"});
  CHECK(tokenize("  ...  ").empty());
}

TEST_CASE("default stop words cover articles and prepositions") {
  const auto& stop = default_stop_words();
  for (const char* w : {"a", "the", "on", "of", "and", "with"}) CHECK(stop.count(w) == 1);
  CHECK(stop.count("circle") == 0);
}

TEST_CASE("auto budget is twice the class count") {
  FilterSpec spec;
  spec.num_classes = 10;
  CHECK(spec.resolved_f() == 20);
  spec.f = 3;
  CHECK(spec.resolved_f() == 3);
  spec.f = 0;
  CHECK_THROWS_AS(spec.resolved_f(), ValidationError);
}

TEST_CASE("frequency table orders by count then word") {
  const TextCorpus c = Corpus({"the dog and the cat", "a dog", "a bird and a cat", "dog"});
  const FrequencyTable t = count_words(c, default_stop_words());
  REQUIRE(t.entries.size() == 3);
  CHECK(t.entries[0] == std::pair<std::string, long>{"dog", 3});
  CHECK(t.entries[1] == std::pair<std::string, long>{"cat", 2});
  CHECK(t.entries[2] == std::pair<std::string, long>{"bird", 1});
  CHECK(t.truncated(2).words() == std::vector<std::string>{"dog", "cat"});
  CHECK(format_frequency_report(t.truncated(1)) == "dog\t3\n");
}

TEST_CASE("a corpus of stop words only has no vocabulary") {
  CHECK_THROWS_AS(count_words(Corpus({"the a an", "of"}), default_stop_words()), ValidationError);
}

TEST_CASE("captions without a top-F word are dropped with a reason") {
  const TextCorpus c = Corpus({"young man smiling", "old woman", "young woman", "old man",
                               "person in pink sweater"});
  FilterSpec spec;
  spec.num_classes = 2;
  const FilteredCorpus f = filter_corpus(c, spec);
  CHECK(f.f == 4);
  CHECK(f.top_f_words == std::vector<std::string>{"man", "old", "woman", "young"});
  CHECK(f.kept.size() == 4);
  REQUIRE(f.dropped.size() == 1);
  CHECK(f.dropped[0].record.text == "person in pink sweater");
  CHECK(f.dropped[0].reason == kNoTopFWord);
  CHECK(f.source_corpus_hash == corpus_hash(c));
}

TEST_CASE("passthrough keeps everything") {
  const TextCorpus c = Corpus({"x", "the"});
  const FilteredCorpus f = passthrough(c);
  CHECK(f.kept == c.records);
  CHECK(f.dropped.empty());
}

TEST_CASE("filtered corpus round-trips through its file") {
  TempDir dir;
  const TextCorpus c = Corpus({"red circle", "blue square", "red square", "green thing"});
  const FilteredCorpus f = filter_with_words(c, {"red", "square"});
  CHECK(f.kept.size() == 3);
  write_filtered(f, dir / "filtered.jsonl");
  const FilteredCorpus back = read_filtered(dir / "filtered.jsonl");
  CHECK(back.kept == f.kept);
  CHECK(back.dropped == f.dropped);
  CHECK(back.top_f_words == f.top_f_words);
  CHECK(filtered_hash(back) == filtered_hash(f));
}

TEST_CASE("worked tokenizer and counting examples") {
  CHECK(tokenize("A red Circle!") == std::vector<std::string>{"a", "red", "circle"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("pole-vault") == std::vector<std::string>{"pole", "vault"});
  const FrequencyTable t = count_words(Corpus({"a red circle", "a red square"}), {"a"});
  CHECK(t.entries == std::vector<std::pair<std::string, long>>{{"red", 2}, {"circle", 1}, {"square", 1}});
}

TEST_CASE("saturated corpus drops nothing") {
  FilterSpec spec;
  spec.f = 1;
  const FilteredCorpus f = filter_corpus(Corpus({"red circle", "red square", "big red cross"}), spec);
  CHECK(f.top_f_words == std::vector<std::string>{"red"});
  CHECK(f.dropped.empty());
}
