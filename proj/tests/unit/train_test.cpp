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
#include <stdexcept>
#include <vector>

#include "debias/common/error.hpp"
#include "debias/dataset/synth.hpp"
#include "debias/train/grad_check.hpp"
#include "debias/train/loss.hpp"
#include "debias/train/model.hpp"
#include "debias/train/trainer.hpp"
#include "doctest.h"
#include "support/temp_dir.hpp"

using namespace debias;
using debias::testing::TempDir;

namespace {

double Gce(double p, double q) {
  const std::vector<double> probs{p, 1.0 - p};
  return gce_loss(probs, 0, q);
}

double Rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

}  // namespace

TEST_CASE("gce matches high-precision reference values") {
  // Reference values from 40-digit decimal arithmetic on the same doubles.
  CHECK(Rel(Gce(0.5, 0.7), 0.54918256189648836821) <= 1e-12);
  CHECK(Rel(Gce(0.2, 0.5), 1.1055728090000840966) <= 1e-12);
  CHECK(Rel(Gce(0.9, 0.3), 0.10371279600912208983) <= 1e-12);
  CHECK(Rel(Gce(0.05, 0.7), 1.2531102819834585597) <= 1e-12);
}

TEST_CASE("gce limits") {
  CHECK(Gce(0.37, 1.0) == 1.0 - 0.37);
  CHECK(std::abs(Gce(0.3, 1e-8) - 1.2039728043259359926) <= 1e-6);
  CHECK(Gce(1.0, 0.7) == 0.0);
  const std::vector<double> probs{0.3, 0.7};
  CHECK(ce_loss(probs, 0) == doctest::Approx(1.2039728043259359926));
}

TEST_CASE("gce rejects invalid arguments") {
  const std::vector<double> probs{0.0, 1.0};
  CHECK_THROWS_AS(gce_loss(probs, 0, 0.7), DomainError);
  CHECK_THROWS_AS(gce_loss(probs, 1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(gce_loss(probs, 1, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(gce_loss(probs, 2, 0.7), std::invalid_argument);
}

TEST_CASE("softmax is stable for large logits") {
  const std::vector<double> logits{1000.0, 1000.0, -1000.0};
  const auto p = softmax(logits);
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(0.5));
  CHECK(p[2] == 0.0);
}

TEST_CASE("logit gradient of gce is p_y^q times the ce gradient") {
  const std::vector<double> logits{0.3, -1.2, 2.0};
  const LogitLoss ce = loss_from_logits(logits, 1, LossMode::kCE, 0.7);
  const LogitLoss gce = loss_from_logits(logits, 1, LossMode::kGCE, 0.7);
  const double scale = std::pow(ce.probs[1], 0.7);
  for (std::size_t i = 0; i < logits.size(); ++i) CHECK(gce.grad[i] == doctest::Approx(scale * ce.grad[i]));
}

TEST_CASE("finite-difference check agrees with the gradient identity") {
  LogisticModel logistic(5, 3, 1);
  TanhMlp mlp(5, 4, 3, 2);
  std::vector<LabeledVector> batch = {{{0.1, -0.4, 0.9, 0.0, 1.2}, 0}, {{-1.0, 0.5, 0.2, 0.3, -0.7}, 2}};
  CHECK(gce_grad_check(logistic, batch, 0.7).max_relative_deviation <= 1e-5);
  const GradCheckResult r = gce_grad_check(mlp, batch, 0.4);
  CHECK(r.max_relative_deviation <= 1e-5);
  CHECK(r.components_checked == 2 * mlp.parameters().size());
}

TEST_CASE("classifier config validation") {
  ClassifierConfig c;
  CHECK_NOTHROW(c.validate());
  c.q = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c.q = 0.7;
  c.epochs = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c.epochs = 40;
  c.lr_decay = {0.1, 20};
  CHECK(c.learning_rate(0) == doctest::Approx(c.base_lr));
  CHECK(c.learning_rate(20) == doctest::Approx(c.base_lr * 0.1));
  CHECK(c.learning_rate(39) == doctest::Approx(c.base_lr * 0.1));
}

TEST_CASE("training is reproducible and checkpoints round-trip") {
  TempDir dir;
  SynthShapesSpec spec;
  spec.train_count = 120;
  spec.test_count = 20;
  spec.conflict_ratio = 0.1;
  const DatasetManifest m = synth_generate(spec, dir / "data");
  ClassifierConfig c;
  c.epochs = 2;
  c.batch_size = 32;
  c.loss_mode = LossMode::kGCE;
  c.seed = 4;
  TrainingOptions opts;
  opts.deterministic = true;
  const TrainedModel a = train(m, c, ModelRole::kBiased, opts);
  opts.workers = 2;
  const TrainedModel b = train(m, c, ModelRole::kBiased, opts);
  CHECK(a.model_hash() == b.model_hash());
  CHECK(a.history().size() == 2);

  save_checkpoint(a, dir / "model.ckpt");
  const TrainedModel back = load_checkpoint(dir / "model.ckpt");
  CHECK(back.model_hash() == a.model_hash());
  CHECK(back.role() == ModelRole::kBiased);

  const ScoredLosses losses = per_sample_losses(a, m, LossMode::kCE);
  CHECK(losses.entries.size() == 120);
  CHECK(losses.failures.empty());
}

TEST_CASE("gce worked examples") {
  CHECK(Gce(0.3, 1.0) == 0.7);
  const std::vector<double> uniform(4, 0.25);
  // 40-digit reference for (1 - 0.25^0.7) / 0.7.
  CHECK(Rel(gce_loss(uniform, 2, 0.7), 0.88724408338914353) <= 1e-12);
  CHECK(ce_loss(uniform, 2) == doctest::Approx(std::log(4.0)));
}

TEST_CASE("at q = 1 the gce gradient is p_y times the ce gradient") {
  TanhMlp mlp(3, 4, 2, 8);
  const LabeledVector x{{0.2, -0.1, 0.7}, 1};
  const auto gce = parameter_gradient(mlp, x, true, 1.0);
  const auto ce = parameter_gradient(mlp, x, false, 1.0);
  const double p = softmax(mlp.logits(x.input))[1];
  for (std::size_t i = 0; i < gce.size(); ++i) CHECK(gce[i] == doctest::Approx(p * ce[i]).epsilon(1e-14));
}

namespace {

struct GroupAccuracy {
  double aligned = 0.0;
  double conflict = 0.0;
};

GroupAccuracy TrainAccuracy(const TrainedModel& model, const DatasetManifest& m) {
  const ScoredLosses scored = per_sample_losses(model, m, LossMode::kCE);
  std::size_t hit[2] = {0, 0}, total[2] = {0, 0};
  for (const auto& [id, loss] : scored.entries) {
    const int g = m.find(id)->group == Group::kConflict ? 1 : 0;
    ++total[g];
    // Correct exactly when the true class holds the majority of the mass.
    if (loss < std::log(2.0)) ++hit[g];
  }
  return {static_cast<double>(hit[0]) / static_cast<double>(total[0]),
          static_cast<double>(hit[1]) / static_cast<double>(total[1])};
}

}  // namespace

TEST_CASE("gce training favors aligned samples; ce on unbiased data does not") {
  TempDir dir;
  SynthShapesSpec spec;
  spec.train_count = 400;
  spec.test_count = 8;
  spec.conflict_ratio = 0.05;
  spec.image_size = 16;
  const DatasetManifest biased = synth_generate(spec, dir / "biased");
  ClassifierConfig c;
  c.epochs = 5;
  c.input_size = 16;
  c.loss_mode = LossMode::kGCE;
  TrainingOptions opts;
  opts.deterministic = true;
  const GroupAccuracy gb = TrainAccuracy(train(biased, c, ModelRole::kBiased, opts), biased);
  CHECK(gb.aligned > gb.conflict);

  spec.conflict_ratio = 0.5;
  const DatasetManifest fair = synth_generate(spec, dir / "fair");
  c.loss_mode = LossMode::kCE;
  c.epochs = 8;
  const GroupAccuracy gf = TrainAccuracy(train(fair, c, ModelRole::kVanilla, opts), fair);
  CHECK(std::abs(gf.aligned - gf.conflict) <= 0.05);
}
