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

#include "debias/common/error.hpp"
#include "debias/common/io.hpp"
#include "debias/dataset/composition.hpp"
#include "debias/dataset/manifest.hpp"
#include "debias/dataset/shapes.hpp"
#include "debias/dataset/synth.hpp"
#include "doctest.h"
#include "support/temp_dir.hpp"

using namespace debias;
using debias::testing::TempDir;

namespace {

SynthShapesSpec SmallSpec() {
  SynthShapesSpec s;
  s.train_count = 200;
  s.test_count = 40;
  s.conflict_ratio = 0.05;
  s.seed = 3;
  return s;
}

}  // namespace

TEST_CASE("synth conflict count rounds to the nearest sample") {
  CHECK(synth_conflict_count(0.01, 2000) == 20);
  CHECK(synth_conflict_count(0.0, 500) == 0);
  CHECK(synth_conflict_count(1.0, 37) == 37);
}

TEST_CASE("synth dataset matches its declared composition and reloads") {
  TempDir dir;
  const DatasetManifest m = synth_generate(SmallSpec(), dir.path());
  const CompositionReport report = validate_composition(m);
  CHECK(report.train.total() == 200);
  CHECK(report.test.total() == 40);
  CHECK(report.train.conflict == synth_conflict_count(0.05, 200));
  CHECK(report.train.unknown == 0);
  CHECK(report.ratio_matches_declared);
  REQUIRE(report.realized_conflict_ratio.has_value());
  CHECK(*report.realized_conflict_ratio == doctest::Approx(0.05));

  write_manifest(m, dir / "manifest.jsonl");
  const DatasetManifest back = load_manifest(dir / "manifest.jsonl");
  CHECK(back.samples == m.samples);
  CHECK(manifest_hash(back) == manifest_hash(m));
}

TEST_CASE("synth output is a pure function of the spec") {
  TempDir a, b;
  const DatasetManifest ma = synth_generate(SmallSpec(), a.path(), 1);
  const DatasetManifest mb = synth_generate(SmallSpec(), b.path(), 3);
  CHECK(manifest_hash(ma) == manifest_hash(mb));
  CHECK(read_text_file(ma.image_path(ma.samples[7])) == read_text_file(mb.image_path(mb.samples[7])));
}

TEST_CASE("rendered scenes parse back to their attributes") {
  for (const auto& shape : known_shapes()) {
    for (const auto& color : known_colors()) {
      const SceneAttributes scene{shape, color};
      const auto parsed = parse_scene(render_scene(scene, 32, 11));
      REQUIRE(parsed.has_value());
      CHECK(*parsed == scene);
    }
  }
}

TEST_CASE("manifest validation names the offending record") {
  TempDir dir;
  DatasetManifest m = synth_generate(SmallSpec(), dir.path());

  SUBCASE("duplicate id") {
    m.samples[1].id = m.samples[0].id;
    CHECK_THROWS_WITH_AS(validate_manifest(m, false), doctest::Contains("duplicate id"), ValidationError);
  }
  SUBCASE("label out of range") {
    m.samples[2].label = 9;
    CHECK_THROWS_WITH_AS(validate_manifest(m, false), doctest::Contains(m.samples[2].id.c_str()),
                         ValidationError);
  }
  SUBCASE("group tag disagrees with the bias attribute") {
    auto& s = m.samples[3];
    s.group = s.group == Group::kAligned ? Group::kConflict : Group::kAligned;
    CHECK_THROWS_AS(validate_manifest(m, false), ValidationError);
  }
  SUBCASE("missing image") {
    m.samples[4].image_ref = "images/nope.png";
    CHECK_NOTHROW(validate_manifest(m, false));
    CHECK_THROWS_WITH_AS(validate_manifest(m, true), doctest::Contains("nope.png"), ValidationError);
  }
}

TEST_CASE("missing manifest file is a validation error") {
  CHECK_THROWS_AS(load_manifest("/nonexistent/manifest.jsonl"), ValidationError);
}

TEST_CASE("composition tolerates unknown groups and flags ratio mismatch") {
  TempDir dir;
  DatasetManifest m = synth_generate(SmallSpec(), dir.path());
  m.declared_conflict_ratio = 0.5;
  AttributedSample extra = m.samples[0];
  extra.id = "extra";
  extra.bias_attr.reset();
  extra.group = Group::kUnknown;
  m.samples.push_back(extra);
  const CompositionReport report = validate_composition(m);
  CHECK(report.train.unknown == 1);
  CHECK_FALSE(report.ratio_matches_declared);
  CHECK(format_composition(report, m.class_names).find("unknown") != std::string::npos);
}

TEST_CASE("group and split names round-trip") {
  for (Group g : {Group::kAligned, Group::kConflict, Group::kUnknown}) CHECK(parse_group(to_string(g)) == g);
  for (Split s : {Split::kTrain, Split::kTest}) CHECK(parse_split(to_string(s)) == s);
  CHECK_THROWS_AS(parse_group("both"), ValidationError);
}

namespace {

DatasetManifest Counted(std::size_t aligned, std::size_t conflict, double declared) {
  DatasetManifest m;
  m.class_names = {"young", "old"};
  m.bias_attr_names = {"female", "male"};
  m.dominant_attr_map = {{0, "female"}, {1, "male"}};
  m.declared_conflict_ratio = declared;
  for (std::size_t i = 0; i < aligned + conflict; ++i) {
    AttributedSample s;
    s.id = "s" + std::to_string(i);
    s.label = static_cast<int>(i % 2);
    const bool is_conflict = i >= aligned;
    s.bias_attr = (s.label == 0) != is_conflict ? "female" : "male";
    s.group = is_conflict ? Group::kConflict : Group::kAligned;
    m.samples.push_back(s);
  }
  return m;
}

}  // namespace

TEST_CASE("realized conflict ratios") {
  const CompositionReport ffhq = validate_composition(Counted(19104, 96, 0.005));
  CHECK(ffhq.realized_conflict_ratio == doctest::Approx(0.005));
  CHECK(ffhq.ratio_matches_declared);
  CHECK(validate_composition(Counted(50, 0, 0.0)).realized_conflict_ratio == 0.0);
  CHECK(validate_composition(Counted(1980, 20, 0.01)).realized_conflict_ratio == doctest::Approx(0.01));
  CHECK_NOTHROW(validate_manifest(Counted(10, 2, 0.2), false));
}

TEST_CASE("desk-scale synth composition") {
  TempDir dir;
  SynthShapesSpec spec;
  spec.train_count = 2000;
  spec.test_count = 40;
  spec.image_size = 16;
  const CompositionReport r = validate_composition(synth_generate(spec, dir.path()));
  CHECK(r.train.aligned == 1980);
  CHECK(r.train.conflict == 20);

  TempDir none;
  spec.train_count = 100;
  spec.conflict_ratio = 0.0;
  const CompositionReport zero = validate_composition(synth_generate(spec, none.path()));
  CHECK(zero.train.aligned == 100);
  CHECK(zero.train.conflict == 0);
  CHECK(zero.test.conflict > 0);
}

TEST_CASE("synth spec validation") {
  SynthShapesSpec spec;
  spec.conflict_ratio = 0.6;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec = {};
  spec.shape_vocab.pop_back();
  CHECK_THROWS_AS(spec.validate(), ValidationError);
}
