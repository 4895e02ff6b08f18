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


#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "debias/common/error.hpp"
#include "debias/dataset/synth.hpp"
#include "debias/extract/extractor.hpp"
#include "doctest.h"
#include "support/temp_dir.hpp"

using namespace debias;
using debias::testing::TempDir;

TEST_CASE("ranking sorts by loss descending with ids breaking ties") {
  const std::vector<LossEntry> losses = {{"c", 1.0}, {"a", 2.0}, {"b", 1.0}, {"d", 3.0}};
  const LossRanking r = rank(losses);
  std::vector<std::string> ids;
  for (const auto& e : r.entries) ids.push_back(e.id);
  CHECK(ids == std::vector<std::string>{"d", "a", "b", "c"});
}

TEST_CASE("top-k truncates and tolerates k beyond n") {
  const std::vector<LossEntry> losses = {{"x", 0.5}, {"y", 0.9}, {"z", 0.1}};
  const LossRanking r = rank(losses);
  const auto two = extract_topk(r, 2);
  CHECK(two.sample_ids == std::vector<std::string>{"y", "x"});
  CHECK(two.losses == std::vector<double>{0.9, 0.5});
  const auto all = extract_topk(r, 10);
  CHECK(all.sample_ids.size() == 3);
  CHECK(all.k == 10);
  CHECK_THROWS_AS(extract_topk(r, 0), std::invalid_argument);
}

TEST_CASE("ranking rejects non-finite losses and duplicate ids") {
  const std::vector<LossEntry> nan = {{"ok", 1.0}, {"bad", std::nan("")}};
  CHECK_THROWS_WITH_AS(rank(nan), doctest::Contains("bad"), ValidationError);
  const std::vector<LossEntry> inf = {{"big", std::numeric_limits<double>::infinity()}};
  CHECK_THROWS_AS(rank(inf), ValidationError);
  const std::vector<LossEntry> dup = {{"a", 1.0}, {"a", 2.0}};
  CHECK_THROWS_AS(rank(dup), ValidationError);
}

TEST_CASE("per-class balancing and purity") {
  TempDir dir;
  SynthShapesSpec spec;
  spec.train_count = 80;
  spec.test_count = 8;
  spec.conflict_ratio = 0.1;
  const DatasetManifest m = synth_generate(spec, dir.path());

  std::vector<LossEntry> losses;
  for (const auto& s : m.samples) {
    if (s.split != Split::kTrain) continue;
    // Conflict samples get the largest losses; class 0 outranks the rest.
    const double base = s.group == Group::kConflict ? 10.0 : 1.0;
    losses.push_back({s.id, base + (s.label == 0 ? 0.5 : 0.0)});
  }
  const LossRanking r = rank(losses);
  const auto top = extract_topk(r, 8);
  REQUIRE(extraction_purity(top, m).has_value());
  CHECK(*extraction_purity(top, m) == doctest::Approx(1.0));

  ExtractOptions opts;
  opts.per_class_balance = true;
  opts.manifest = &m;
  const auto balanced = extract_topk(r, 8, opts);
  std::vector<int> per_class(4, 0);
  for (const auto& id : balanced.sample_ids) per_class[m.find(id)->label]++;
  CHECK(per_class == std::vector<int>{2, 2, 2, 2});

  CHECK(extraction_purity(ConflictCandidateSet{}, m) == 0.0);
  ConflictCandidateSet stranger;
  stranger.sample_ids = {"not-in-manifest"};
  stranger.losses = {1.0};
  CHECK_FALSE(extraction_purity(stranger, m).has_value());
}

TEST_CASE("candidate and ranking files round-trip") {
  TempDir dir;
  const std::vector<LossEntry> losses = {{"a", 0.25}, {"b", 1.0 / 3.0}, {"c", 7.5}};
  const LossRanking r = rank(losses);
  write_ranking(r, "abc123", dir / "losses.jsonl");
  CHECK(read_ranking(dir / "losses.jsonl").entries == r.entries);

  ConflictCandidateSet c = extract_topk(r, 2);
  c.source_model = "abc123";
  write_candidates(c, dir / "candidates.jsonl");
  const ConflictCandidateSet back = read_candidates(dir / "candidates.jsonl");
  CHECK(back.sample_ids == c.sample_ids);
  CHECK(back.losses == c.losses);
  CHECK(back.k == 2);
  CHECK(back.source_model == "abc123");
  CHECK(candidates_hash(back) == candidates_hash(c));
}

TEST_CASE("worked ranking examples") {
  const std::vector<LossEntry> four = {{"a", 0.1}, {"b", 5.0}, {"c", 0.3}, {"d", 2.2}};
  const LossRanking r = rank(four);
  std::vector<std::string> ids;
  for (const auto& e : r.entries) ids.push_back(e.id);
  CHECK(ids == std::vector<std::string>{"b", "d", "c", "a"});
  CHECK(extract_topk(r, 2).sample_ids == std::vector<std::string>{"b", "d"});

  std::vector<LossEntry> many;
  for (int i = 0; i < 50000; ++i) many.push_back({"s" + std::to_string(i), static_cast<double>((i * 7919) % 1000)});
  CHECK(extract_topk(rank(many)).sample_ids.size() == 100);
}

TEST_CASE("purity extremes") {
  TempDir dir;
  SynthShapesSpec spec;
  spec.train_count = 40;
  spec.test_count = 4;
  spec.conflict_ratio = 0.25;
  const DatasetManifest m = synth_generate(spec, dir.path());
  ConflictCandidateSet conflict, aligned;
  for (const auto& s : m.samples) {
    if (s.split != Split::kTrain) continue;
    auto& set = s.group == Group::kConflict ? conflict : aligned;
    set.sample_ids.push_back(s.id);
    set.losses.push_back(1.0);
  }
  CHECK(extraction_purity(conflict, m) == 1.0);
  CHECK(extraction_purity(aligned, m) == 0.0);
}
