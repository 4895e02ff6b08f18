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


#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "debias/common/error.hpp"
#include "debias/common/io.hpp"
#include "debias/dataset/shapes.hpp"
#include "debias/dataset/synth.hpp"
#include "debias/eval/compare.hpp"
#include "debias/eval/energy.hpp"
#include "debias/eval/evaluate.hpp"
#include "debias/train/trainer.hpp"
#include "doctest.h"
#include "support/temp_dir.hpp"

using namespace debias;
using debias::testing::TempDir;

namespace {

// Always ties classes 0 and 1.
class ConstantModel final : public ImageClassifier {
 public:
  int input_size() const override { return 8; }
  std::size_t num_classes() const override { return 4; }
  std::vector<double> probabilities(std::span<const double>) const override { return {0.4, 0.4, 0.1, 0.1}; }
};

DatasetManifest Data(const TempDir& dir) {
  SynthShapesSpec spec;
  spec.train_count = 60;
  spec.test_count = 40;
  spec.conflict_ratio = 0.2;
  return synth_generate(spec, dir.path());
}

}  // namespace

TEST_CASE("evaluation tallies by group and class") {
  TempDir dir;
  const DatasetManifest m = Data(dir);
  ConstantModel model;
  const EvalMetrics e = evaluate(model, m);

  Tally overall, aligned, conflict;
  for (const auto& s : m.samples) {
    if (s.split != Split::kTest) continue;
    const bool hit = s.label == 0;
    overall.total++;
    overall.correct += hit;
    Tally& g = s.group == Group::kConflict ? conflict : aligned;
    g.total++;
    g.correct += hit;
  }
  CHECK(e.overall == overall);
  CHECK(e.aligned == aligned);
  CHECK(e.conflict == conflict);
  REQUIRE(e.per_class.size() == 4);
  CHECK(e.per_class[0].accuracy() == 1.0);
  CHECK(e.per_class[1].accuracy() == 0.0);
  CHECK(evaluate(model, m, Split::kTest, 3) == e);

  const auto pairs = metric_pairs(e);
  CHECK(pairs[0] == std::pair<std::string, std::string>{"n", std::to_string(overall.total)});
  CHECK(pairs.back().first == "class3_acc");
}

TEST_CASE("empty split is a validation error") {
  TempDir dir;
  DatasetManifest m = Data(dir);
  std::erase_if(m.samples, [](const AttributedSample& s) { return s.split == Split::kTest; });
  ConstantModel model;
  CHECK_THROWS_AS(evaluate(model, m), ValidationError);
}

TEST_CASE("fractions render with six decimals") {
  CHECK(format_fraction(0.5) == "0.500000");
  CHECK(format_fraction(1.0 / 3.0) == "0.333333");
  CHECK(format_fraction(std::nullopt) == "NA");
  CHECK_FALSE(Tally{}.accuracy().has_value());
}

TEST_CASE("embeddings export, round-trip and centroid distance") {
  TempDir dir;
  const DatasetManifest m = Data(dir);
  ConstantModel model;
  const EmbeddingFile f = export_embeddings(model, m, "logits");
  CHECK(f.records.size() == 40);
  CHECK(f.width == 4);
  CHECK_THROWS_AS(export_embeddings(model, m, "conv9"), ValidationError);
  write_embeddings(f, dir / "emb.jsonl");
  const EmbeddingFile back = read_embeddings(dir / "emb.jsonl");
  CHECK(back.records.size() == f.records.size());
  CHECK(back.records[3].vector == f.records[3].vector);
  CHECK(mean_centroid_distance(back) == doctest::Approx(0.0));

  EmbeddingFile g;
  g.width = 2;
  g.records = {{"a", 0, Group::kAligned, {0, 0}},
               {"b", 0, Group::kAligned, {2, 0}},
               {"c", 1, Group::kAligned, {1, 3}},
               {"d", 1, Group::kConflict, {9, 9}}};
  CHECK(mean_centroid_distance(g, Group::kAligned) == doctest::Approx(3.0));
  CHECK_FALSE(mean_centroid_distance(g, Group::kConflict).has_value());
}

TEST_CASE("energy conversions") {
  CHECK(Energy::from_kwh(1.0).micro_wh() == 1'000'000'000);
  CHECK(Energy::from_power(15.0, 3600.0).micro_wh() == 15'000'000);
  CHECK_THROWS_AS(Energy::from_micro_wh(-1), DomainError);
  CHECK(CarbonIntensity::from_grams_per_kwh(475).mg_per_kwh == 475000);
}

TEST_CASE("carbon is exact and additive") {
  CHECK(Carbon::of(Energy::from_kwh(1.0), {}).grams_string() == "475");
  CHECK(Carbon::of(Energy::from_kwh(2.5), {}).grams_string() == "1187.5");
  CHECK(Carbon::of(Energy::from_micro_wh(1), {}).grams_string() == "0.000000475");
  CHECK(Carbon::of(Energy{}, {}).grams_string() == "0");

  EnergyLedger ledger;
  ledger.add("train", Energy::from_kwh(0.25), 0.5);
  ledger.add("caption", Energy::from_kwh(0.75), 0.1);
  const CarbonReport r = carbon_report(ledger);
  CHECK(r.total.grams_string() == "475");
  CHECK(r.total == r.stages[0].carbon + r.stages[1].carbon);
  const std::string tsv = format_carbon_report(r);
  CHECK(tsv.find("caption") != std::string::npos);
  CHECK(tsv.find("total") != std::string::npos);

  const EnergyLedger back = ledger_from_json(to_json(ledger));
  CHECK(back.total() == ledger.total());
  CHECK(back.intensity == ledger.intensity);
}

TEST_CASE("comparison table copies cells and adds deltas") {
  const std::vector<RunRow> runs = {
      {"vanilla", {{"overall_acc", "0.500000"}, {"conflict_acc", "0.100000"}}},
      {"debiased", {{"overall_acc", "0.750000"}, {"conflict_acc", "0.600000"}, {"extra", "x"}}},
  };
  const ComparisonTable t = compare_runs(runs);
  CHECK(t.columns ==
        std::vector<std::string>{"run", "overall_acc", "conflict_acc", "extra", "delta_overall_acc",
                                 "delta_conflict_acc"});
  CHECK(t.rows[0][3] == kAbsent);
  CHECK(t.rows[1][4] == "+0.250000");
  CHECK(t.rows[1][5] == "+0.500000");
  CHECK(to_csv(t).rfind("run,overall_acc", 0) == 0);
  CHECK(compare_runs({runs[0]}).columns.size() == 3);
  CHECK_THROWS_AS(compare_runs({}), ValidationError);
  CHECK(bar_chart_svg("acc", {{"a", 0.5}, {"b", 1.0}}, "").find("<svg") != std::string::npos);
}

namespace {

// Reads the class straight off the pixels.
class PixelOracle final : public ImageClassifier {
 public:
  int input_size() const override { return 32; }
  std::size_t num_classes() const override { return 4; }
  std::vector<double> probabilities(std::span<const double> input) const override {
    Image img(32, 32);
    for (int c = 0; c < 3; ++c) {
      for (int i = 0; i < 32 * 32; ++i) {
        img.pixels[static_cast<std::size_t>(i) * 3 + c] =
            static_cast<std::uint8_t>(std::lround((input[static_cast<std::size_t>(c * 1024 + i)] + 0.5) * 255.0));
      }
    }
    const auto scene = parse_scene(img);
    std::vector<double> p(4, 0.0);
    const auto& shapes = known_shapes();
    const auto it = scene ? std::find(shapes.begin(), shapes.end(), scene->shape) : shapes.end();
    p[it == shapes.end() ? 0 : static_cast<std::size_t>(it - shapes.begin()) % 4] = 1.0;
    return p;
  }
  std::vector<double> embedding(std::span<const double> input, std::string_view) const override {
    std::vector<double> v(512);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = input[i];
    return v;
  }
};

}  // namespace

TEST_CASE("constant and perfect models") {
  TempDir dir;
  SynthShapesSpec spec;
  spec.train_count = 40;
  spec.test_count = 80;
  const DatasetManifest m = synth_generate(spec, dir.path());
  ConstantModel constant;
  CHECK(evaluate(constant, m).overall_acc() == doctest::Approx(0.25));
  PixelOracle oracle;
  const EvalMetrics e = evaluate(oracle, m);
  CHECK(e.overall_acc() == 1.0);
  CHECK(e.aligned_acc() == 1.0);
  CHECK(e.conflict_acc() == 1.0);
}

TEST_CASE("equal group sizes make overall the mean of the groups") {
  TempDir dir;
  SynthShapesSpec spec;
  spec.train_count = 40;
  spec.test_count = 80;
  const DatasetManifest m = synth_generate(spec, dir.path());
  ConstantModel model;
  const EvalMetrics e = evaluate(model, m);
  REQUIRE(e.aligned.total == e.conflict.total);
  CHECK(e.overall_acc() == doctest::Approx((*e.aligned_acc() + *e.conflict_acc()) / 2));
}

TEST_CASE("embedding export width and determinism") {
  TempDir dir;
  SynthShapesSpec spec;
  spec.train_count = 8;
  spec.test_count = 10;
  const DatasetManifest m = synth_generate(spec, dir.path());
  PixelOracle model;
  const EmbeddingFile f = export_embeddings(model, m, "penultimate");
  CHECK(f.records.size() == 10);
  CHECK(f.width == 512);
  write_embeddings(f, dir / "a.jsonl");
  write_embeddings(export_embeddings(model, m, "penultimate", Split::kTest, 3), dir / "b.jsonl");
  CHECK(read_text_file(dir / "a.jsonl") == read_text_file(dir / "b.jsonl"));
  CHECK(read_text_file(dir / "a.jsonl").find("\"width\":512") != std::string::npos);
}

TEST_CASE("zero energy has zero carbon") {
  CHECK(Carbon::of(Energy::from_kwh(0.0), {}).grams_string() == "0");
}
