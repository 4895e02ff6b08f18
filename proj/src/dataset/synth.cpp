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

#include "debias/dataset/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "debias/common/error.hpp"
#include "debias/common/hash.hpp"
#include "debias/common/parallel.hpp"
#include "debias/common/rng.hpp"
#include "debias/dataset/shapes.hpp"

namespace debias {

namespace fs = std::filesystem;

namespace {

std::string SampleId(const char* prefix, size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s-%05zu", prefix, i);
  return buf;
}

}  // namespace

void SynthShapesSpec::validate() const {
  if (num_classes < 2) throw ValidationError("synth: num_classes must be >= 2");
  if (shape_vocab.size() != static_cast<size_t>(num_classes)) {
    throw ValidationError("synth: shape_vocab must name exactly num_classes shapes");
  }
  if (color_vocab.size() < static_cast<size_t>(num_classes)) {
    throw ValidationError("synth: color_vocab smaller than num_classes");
  }
  if (!(conflict_ratio >= 0.0) || conflict_ratio > 0.5) {
    throw ValidationError("synth: conflict_ratio must lie in [0, 0.5]");
  }
  if (train_count == 0) throw ValidationError("synth: train_count must be positive");
  if (image_size < 8) throw ValidationError("synth: image_size must be at least 8");
  std::set<std::string> seen;
  for (const auto& s : shape_vocab) {
    if (!is_known_shape(s)) throw ValidationError("synth: unknown shape '" + s + "'");
    if (!seen.insert(s).second) throw ValidationError("synth: duplicate shape '" + s + "'");
  }
  seen.clear();
  for (const auto& c : color_vocab) {
    if (!is_known_color(c)) throw ValidationError("synth: unknown color '" + c + "'");
    if (!seen.insert(c).second) throw ValidationError("synth: duplicate color '" + c + "'");
  }
}

void to_json(nlohmann::json& j, const SynthShapesSpec& s) {
  j = nlohmann::json{{"num_classes", s.num_classes},   {"shape_vocab", s.shape_vocab},
                     {"color_vocab", s.color_vocab},   {"conflict_ratio", s.conflict_ratio},
                     {"train_count", s.train_count},   {"test_count", s.test_count},
                     {"image_size", s.image_size},     {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, SynthShapesSpec& s) {
  SynthShapesSpec d;
  s.num_classes = j.value("num_classes", d.num_classes);
  s.shape_vocab = j.value("shape_vocab", d.shape_vocab);
  s.color_vocab = j.value("color_vocab", d.color_vocab);
  s.conflict_ratio = j.value("conflict_ratio", d.conflict_ratio);
  s.train_count = j.value("train_count", d.train_count);
  s.test_count = j.value("test_count", d.test_count);
  s.image_size = j.value("image_size", d.image_size);
  s.seed = j.value("seed", d.seed);
}

std::size_t synth_conflict_count(double rho, std::size_t train_count) {
  if (rho <= 0.0) return 0;
  // The epsilon keeps decimal halves (e.g. 5.5 stored as 5.4999...) rounding up.
  const auto n = static_cast<std::size_t>(std::floor(rho * static_cast<double>(train_count) + 0.5 + 1e-9));
  return std::max<std::size_t>(1, std::min(n, train_count));
}

DatasetManifest synth_generate(const SynthShapesSpec& spec, const fs::path& out_dir,
                               std::size_t workers) {
  spec.validate();
  const size_t n_classes = static_cast<size_t>(spec.num_classes);

  DatasetManifest m;
  char name[96];
  std::snprintf(name, sizeof(name), "synth-shapes-n%d-rho%g-seed%llu", spec.num_classes,
                spec.conflict_ratio, static_cast<unsigned long long>(spec.seed));
  m.name = name;
  m.class_names = spec.shape_vocab;
  m.bias_attr_names = spec.color_vocab;
  for (size_t c = 0; c < n_classes; ++c) m.dominant_attr_map[static_cast<int>(c)] = spec.color_vocab[c];
  m.declared_conflict_ratio = spec.conflict_ratio;
  m.base_dir = fs::absolute(out_dir);

  auto conflict_color = [&](const std::string& id, int label) {
    Rng rng(derive_seed(spec.seed, id + ":color"));
    size_t pick = static_cast<size_t>(rng.below(spec.color_vocab.size() - 1));
    if (pick >= static_cast<size_t>(label)) ++pick;  // skip the dominant color
    return spec.color_vocab[pick];
  };

  // Train split: balanced labels, exactly synth_conflict_count conflicts.
  const size_t n_conflict = synth_conflict_count(spec.conflict_ratio, spec.train_count);
  std::vector<size_t> order(spec.train_count);
  std::iota(order.begin(), order.end(), size_t{0});
  Rng selector(derive_seed(spec.seed, "conflict-selection"));
  selector.shuffle(std::span<size_t>(order));
  std::vector<bool> is_conflict(spec.train_count, false);
  for (size_t i = 0; i < n_conflict; ++i) is_conflict[order[i]] = true;

  for (size_t i = 0; i < spec.train_count; ++i) {
    AttributedSample s;
    s.id = SampleId("train", i);
    s.image_ref = "images/" + s.id + ".png";
    s.label = static_cast<int>(i % n_classes);
    s.split = Split::kTrain;
    if (is_conflict[i]) {
      s.bias_attr = conflict_color(s.id, s.label);
      s.group = Group::kConflict;
    } else {
      s.bias_attr = spec.color_vocab[static_cast<size_t>(s.label)];
      s.group = Group::kAligned;
    }
    m.samples.push_back(std::move(s));
  }

  // Test split: per class, half aligned (rounded down) and the rest conflict.
  size_t test_index = 0;
  for (size_t c = 0; c < n_classes; ++c) {
    const size_t n_c = spec.test_count / n_classes + (c < spec.test_count % n_classes ? 1 : 0);
    for (size_t k = 0; k < n_c; ++k) {
      AttributedSample s;
      s.id = SampleId("test", test_index++);
      s.image_ref = "images/" + s.id + ".png";
      s.label = static_cast<int>(c);
      s.split = Split::kTest;
      if (k < n_c / 2) {
        s.bias_attr = spec.color_vocab[c];
        s.group = Group::kAligned;
      } else {
        s.bias_attr = conflict_color(s.id, s.label);
        s.group = Group::kConflict;
      }
      m.samples.push_back(std::move(s));
    }
  }

  fs::create_directories(out_dir / "images");
  parallel_for(m.samples.size(), workers, [&](size_t i) {
    const auto& s = m.samples[i];
    const SceneAttributes scene{m.class_names[static_cast<size_t>(s.label)], *s.bias_attr};
    write_png(render_scene(scene, spec.image_size, derive_seed(spec.seed, s.id)),
              out_dir / s.image_ref);
  });

  m.reindex();
  write_manifest(m, out_dir / "manifest.jsonl");
  return m;
}

}  // namespace debias
